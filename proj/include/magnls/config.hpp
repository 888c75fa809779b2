#pragma once

// INI experiment configuration: [section] headers, key = value lines,
// '#' or ';' comments. Every key is validated and unknown keys are rejected.

#include "magnls/errors.hpp"
#include "magnls/nonlinearity.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace magnls {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct GridConfig {
    int dim = 1;
    std::vector<std::size_t> sizes{512};
    std::vector<double> lengths{40.0};
};

struct PotentialConfig {
    std::string kind = "sech2_well";  ///< none | gaussian_well | sech2_well | file
    double depth = 2.0;               ///< V = -depth * profile
    double width = 1.0;
    std::string v_file;
    std::string magnetic = "none";  ///< none | gauge | loop | file
    double magnetic_amplitude = 0.5;
    double magnetic_width = 1.0;
    double loop_radius = 1.0;
    std::vector<std::string> a_files;
    double c_pos = 1.0;
    std::optional<double> K;  ///< "auto" selects the positivity rule
};

struct SolverConfig {
    double tol_rel = 1e-8;
    int max_iter = 10000;
    std::vector<double> resolvent_eps{1e-2, 1e-3};
    int lambda_count = 16;
    double lambda_max = 6.0;
    int trials = 64;
    std::vector<std::pair<std::int64_t, std::int64_t>> p_list{{2, 1}, {18, 5}};
    int sources = 16;
    double strichartz_t = 2.0;
};

struct EvolutionConfig {
    double dt = 1e-3;
    double t_final = 1.0;
    int snapshot_stride = 10;
    double conserve_tol = 1e-6;
    std::string initial = "bound_state";  ///< bound_state | gaussian
    double initial_amplitude = 0.05;
    double initial_width = 2.0;
    bool write_snapshots = false;
};

struct ModulationConfig {
    double z_re = 0.05;
    double z_im = 0.0;
    std::vector<double> z_list{0.01, 0.02, 0.04, 0.08};
    std::vector<double> amplitudes{1e-3, 2e-3, 4e-3};
    double reference_amplitude = 2e-3;
    double perturbation_width = 4.0;
    double sigma = 4.1;
};

struct OutputConfig {
    std::string directory = "out";
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    GridConfig grid;
    PotentialConfig potential;
    SolverConfig solver;
    Nonlinearity nonlinearity = Nonlinearity::defocusing;
    EvolutionConfig evolution;
    ModulationConfig modulation;
    OutputConfig output;

    /// Every key with its resolved value, defaults included, in
    /// section.key order.
    std::vector<std::pair<std::string, std::string>> echo;
};

/// Raw section -> key -> value table with the source line of each entry.
class IniTable {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    /// Throws ConfigError("line N: ...") on malformed input.
    static IniTable parse(const std::string& text);
    static IniTable load(const std::string& path);

    /// "section.key=value"; throws ConfigError on malformed input.
    void set_override(const std::string& assignment);
    void set(const std::string& section, const std::string& key, const std::string& value);

    const std::map<std::string, std::map<std::string, Entry>>& sections() const noexcept {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

/// Validates the table. Errors name the offending section.key.
ExperimentConfig build_config(const IniTable& table);
ExperimentConfig parse_config(const std::string& path);

}  // namespace magnls
