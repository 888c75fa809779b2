#pragma once

// Experiment orchestration behind the magnls command line: builds the
// Hamiltonian from a config, runs one subcommand, writes CSV tables,
// snapshots and a manifest into the output directory.

#include "magnls/config.hpp"
#include "magnls/hamiltonian.hpp"

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace magnls {

/// Exit statuses of run().
enum ExitCode : int { exit_pass = 0, exit_gate_failure = 1, exit_error = 2 };

const std::vector<std::string>& subcommands();

/// %.17g, the CSV float format.
std::string format_double(double v);

/// Small CSV writer: '\n' line endings, '.' decimals, 17 significant digits.
class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header);
    void add(std::vector<Cell> row);
    std::string str() const;
    void write(const std::string& path) const;
    std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// H for the [grid] and [potential] sections.
HamiltonianSpec build_hamiltonian(const ExperimentConfig& cfg);

/// Runs a subcommand; progress lines go to `log`. Never throws for
/// numerical failures: they are recorded in the manifest and mapped to
/// exit_error. Unknown subcommands throw ConfigError.
int run(const std::string& subcommand, const ExperimentConfig& cfg, std::ostream& log);

}  // namespace magnls
