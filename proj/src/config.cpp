#include "magnls/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace magnls {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct BadValue {
    std::string why;
};

double to_double(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) throw BadValue{"expected a number"};
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw BadValue{"expected a finite number, got '" + t + "'"};
    return v;
}

long long to_int(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw BadValue{"expected an integer, got '" + t + "'"};
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    if (t.empty() || t[0] == '-') throw BadValue{"expected a non-negative integer"};
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw BadValue{"expected a non-negative integer, got '" + t + "'"};
    return v;
}

bool to_bool(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw BadValue{"expected true or false, got '" + t + "'"};
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw BadValue{"empty list element"};
        out.push_back(item);
    }
    if (out.empty()) throw BadValue{"expected a non-empty list"};
    return out;
}

std::vector<double> to_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(to_double(item));
    return out;
}

std::pair<std::int64_t, std::int64_t> to_rational(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return {to_int(s), 1};
    const auto num = to_int(s.substr(0, slash));
    const auto den = to_int(s.substr(slash + 1));
    if (den <= 0) throw BadValue{"denominator must be positive"};
    return {num, den};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"grid",
         {
             {"dim", [](ExperimentConfig& c, const std::string& v) { c.grid.dim = int(to_int(v)); }},
             {"sizes",
              [](ExperimentConfig& c, const std::string& v) {
                  c.grid.sizes.clear();
                  for (const auto& item : split_list(v)) {
                      const auto n = to_int(item);
                      if (n <= 0) throw BadValue{"sizes must be positive"};
                      c.grid.sizes.push_back(std::size_t(n));
                  }
              }},
             {"lengths",
              [](ExperimentConfig& c, const std::string& v) { c.grid.lengths = to_doubles(v); }},
         }},
        {"potential",
         {
             {"kind",
              [](ExperimentConfig& c, const std::string& v) { c.potential.kind = lower(trim(v)); }},
             {"depth", [](ExperimentConfig& c, const std::string& v) { c.potential.depth = to_double(v); }},
             {"width", [](ExperimentConfig& c, const std::string& v) { c.potential.width = to_double(v); }},
             {"v_file", [](ExperimentConfig& c, const std::string& v) { c.potential.v_file = trim(v); }},
             {"magnetic",
              [](ExperimentConfig& c, const std::string& v) { c.potential.magnetic = lower(trim(v)); }},
             {"magnetic_amplitude",
              [](ExperimentConfig& c, const std::string& v) {
                  c.potential.magnetic_amplitude = to_double(v);
              }},
             {"magnetic_width",
              [](ExperimentConfig& c, const std::string& v) {
                  c.potential.magnetic_width = to_double(v);
              }},
             {"loop_radius",
              [](ExperimentConfig& c, const std::string& v) { c.potential.loop_radius = to_double(v); }},
             {"a_files",
              [](ExperimentConfig& c, const std::string& v) { c.potential.a_files = split_list(v); }},
             {"c_pos", [](ExperimentConfig& c, const std::string& v) { c.potential.c_pos = to_double(v); }},
             {"K",
              [](ExperimentConfig& c, const std::string& v) {
                  if (lower(trim(v)) == "auto")
                      c.potential.K.reset();
                  else
                      c.potential.K = to_double(v);
              }},
         }},
        {"solver",
         {
             {"tol_rel", [](ExperimentConfig& c, const std::string& v) { c.solver.tol_rel = to_double(v); }},
             {"max_iter",
              [](ExperimentConfig& c, const std::string& v) { c.solver.max_iter = int(to_int(v)); }},
             {"resolvent_eps",
              [](ExperimentConfig& c, const std::string& v) { c.solver.resolvent_eps = to_doubles(v); }},
             {"lambda_count",
              [](ExperimentConfig& c, const std::string& v) { c.solver.lambda_count = int(to_int(v)); }},
             {"lambda_max",
              [](ExperimentConfig& c, const std::string& v) { c.solver.lambda_max = to_double(v); }},
             {"trials", [](ExperimentConfig& c, const std::string& v) { c.solver.trials = int(to_int(v)); }},
             {"p_list",
              [](ExperimentConfig& c, const std::string& v) {
                  c.solver.p_list.clear();
                  for (const auto& item : split_list(v)) c.solver.p_list.push_back(to_rational(item));
              }},
             {"sources", [](ExperimentConfig& c, const std::string& v) { c.solver.sources = int(to_int(v)); }},
             {"strichartz_t",
              [](ExperimentConfig& c, const std::string& v) { c.solver.strichartz_t = to_double(v); }},
         }},
        {"nonlinearity",
         {
             {"sign",
              [](ExperimentConfig& c, const std::string& v) {
                  const auto t = lower(trim(v));
                  if (t == "defocusing" || t == "+1" || t == "1")
                      c.nonlinearity = Nonlinearity::defocusing;
                  else if (t == "focusing" || t == "-1")
                      c.nonlinearity = Nonlinearity::focusing;
                  else
                      throw BadValue{"expected focusing or defocusing, got '" + t + "'"};
              }},
         }},
        {"evolution",
         {
             {"dt", [](ExperimentConfig& c, const std::string& v) { c.evolution.dt = to_double(v); }},
             {"t_final", [](ExperimentConfig& c, const std::string& v) { c.evolution.t_final = to_double(v); }},
             {"snapshot_stride",
              [](ExperimentConfig& c, const std::string& v) {
                  c.evolution.snapshot_stride = int(to_int(v));
              }},
             {"conserve_tol",
              [](ExperimentConfig& c, const std::string& v) { c.evolution.conserve_tol = to_double(v); }},
             {"initial",
              [](ExperimentConfig& c, const std::string& v) { c.evolution.initial = lower(trim(v)); }},
             {"initial_amplitude",
              [](ExperimentConfig& c, const std::string& v) {
                  c.evolution.initial_amplitude = to_double(v);
              }},
             {"initial_width",
              [](ExperimentConfig& c, const std::string& v) { c.evolution.initial_width = to_double(v); }},
             {"write_snapshots",
              [](ExperimentConfig& c, const std::string& v) { c.evolution.write_snapshots = to_bool(v); }},
         }},
        {"modulation",
         {
             {"z_re", [](ExperimentConfig& c, const std::string& v) { c.modulation.z_re = to_double(v); }},
             {"z_im", [](ExperimentConfig& c, const std::string& v) { c.modulation.z_im = to_double(v); }},
             {"z_list", [](ExperimentConfig& c, const std::string& v) { c.modulation.z_list = to_doubles(v); }},
             {"amplitudes",
              [](ExperimentConfig& c, const std::string& v) { c.modulation.amplitudes = to_doubles(v); }},
             {"reference_amplitude",
              [](ExperimentConfig& c, const std::string& v) {
                  c.modulation.reference_amplitude = to_double(v);
              }},
             {"perturbation_width",
              [](ExperimentConfig& c, const std::string& v) {
                  c.modulation.perturbation_width = to_double(v);
              }},
             {"sigma", [](ExperimentConfig& c, const std::string& v) { c.modulation.sigma = to_double(v); }},
         }},
        {"output",
         {
             {"directory",
              [](ExperimentConfig& c, const std::string& v) { c.output.directory = trim(v); }},
             {"seed", [](ExperimentConfig& c, const std::string& v) { c.output.seed = to_u64(v); }},
         }},
    };
    return s;
}

[[noreturn]] void fail(const std::string& key, const std::string& why) {
    throw ConfigError(key + " " + why);
}

void validate(ExperimentConfig& c) {
    auto& g = c.grid;
    if (g.dim < 1 || g.dim > 3) fail("grid.dim", "must be 1, 2 or 3");
    if (g.sizes.size() == 1) g.sizes.assign(g.dim, g.sizes[0]);
    if (g.lengths.size() == 1) g.lengths.assign(g.dim, g.lengths[0]);
    if (int(g.sizes.size()) != g.dim) fail("grid.sizes", "must list one size or one per axis");
    if (int(g.lengths.size()) != g.dim) fail("grid.lengths", "must list one length or one per axis");
    for (auto n : g.sizes)
        if (n < 8 || (n & (n - 1)) != 0) fail("grid.sizes", "must be powers of two >= 8");
    for (double L : g.lengths)
        if (!(L > 0.0)) fail("grid.lengths", "must be positive");

    auto& p = c.potential;
    if (p.kind != "none" && p.kind != "gaussian_well" && p.kind != "sech2_well" && p.kind != "file")
        fail("potential.kind", "must be one of none, gaussian_well, sech2_well, file");
    if (p.kind == "file" && p.v_file.empty()) fail("potential.v_file", "is required when kind = file");
    if (!(p.width > 0.0)) fail("potential.width", "must be positive");
    if (p.magnetic != "none" && p.magnetic != "gauge" && p.magnetic != "loop" && p.magnetic != "file")
        fail("potential.magnetic", "must be one of none, gauge, loop, file");
    if (p.magnetic == "loop" && g.dim < 2) fail("potential.magnetic", "loop needs grid.dim >= 2");
    if (p.magnetic == "file" && int(p.a_files.size()) != g.dim)
        fail("potential.a_files", "must list one snapshot per axis");
    if (!(p.magnetic_width > 0.0)) fail("potential.magnetic_width", "must be positive");
    if (!(p.loop_radius > 0.0)) fail("potential.loop_radius", "must be positive");
    if (!(p.c_pos > 0.0)) fail("potential.c_pos", "must be positive");

    auto& s = c.solver;
    if (!(s.tol_rel > 0.0 && s.tol_rel < 1.0)) fail("solver.tol_rel", "must lie in (0, 1)");
    if (s.max_iter < 1) fail("solver.max_iter", "must be >= 1");
    for (double e : s.resolvent_eps)
        if (!(e >= 1e-8)) fail("solver.resolvent_eps", "entries must be >= 1e-8");
    if (s.lambda_count < 2) fail("solver.lambda_count", "must be >= 2");
    if (!(s.lambda_max > 0.0)) fail("solver.lambda_max", "must be positive");
    if (s.trials < 1) fail("solver.trials", "must be >= 1");
    for (auto [n, d] : s.p_list)
        if (n < d) fail("solver.p_list", "entries must be >= 1");
    if (s.sources < 1) fail("solver.sources", "must be >= 1");
    if (!(s.strichartz_t > 0.0)) fail("solver.strichartz_t", "must be positive");

    auto& e = c.evolution;
    if (!(e.dt > 0.0)) fail("evolution.dt", "must be positive");
    if (e.dt > 0.1) fail("evolution.dt", "must not exceed 0.1");
    if (!(e.t_final >= e.dt)) fail("evolution.t_final", "must be at least evolution.dt");
    if (e.snapshot_stride < 1) fail("evolution.snapshot_stride", "must be >= 1");
    if (!(e.conserve_tol > 0.0)) fail("evolution.conserve_tol", "must be positive");
    if (e.initial != "bound_state" && e.initial != "gaussian")
        fail("evolution.initial", "must be bound_state or gaussian");
    if (!(e.initial_width > 0.0)) fail("evolution.initial_width", "must be positive");

    auto& m = c.modulation;
    if (!(m.sigma > 4.0)) fail("modulation.sigma", "must exceed 4");
    for (double a : m.amplitudes)
        if (!(a > 0.0)) fail("modulation.amplitudes", "entries must be positive");
    if (!(m.perturbation_width > 0.0)) fail("modulation.perturbation_width", "must be positive");
    if (std::find(m.amplitudes.begin(), m.amplitudes.end(), m.reference_amplitude) ==
        m.amplitudes.end())
        fail("modulation.reference_amplitude", "must be one of modulation.amplitudes");

    if (c.output.directory.empty()) fail("output.directory", "must not be empty");
}

std::vector<std::pair<std::string, std::string>> echo(const ExperimentConfig& c) {
    auto d = [](double v) { return fmt(v); };
    auto u = [](std::size_t v) { return std::to_string(v); };
    auto str = [](const std::string& v) { return v; };
    auto rat = [](const std::pair<std::int64_t, std::int64_t>& r) {
        return r.second == 1 ? std::to_string(r.first)
                             : std::to_string(r.first) + "/" + std::to_string(r.second);
    };
    const auto& p = c.potential;
    return {
        {"grid.dim", std::to_string(c.grid.dim)},
        {"grid.sizes", join(c.grid.sizes, u)},
        {"grid.lengths", join(c.grid.lengths, d)},
        {"potential.kind", p.kind},
        {"potential.depth", fmt(p.depth)},
        {"potential.width", fmt(p.width)},
        {"potential.v_file", p.v_file},
        {"potential.magnetic", p.magnetic},
        {"potential.magnetic_amplitude", fmt(p.magnetic_amplitude)},
        {"potential.magnetic_width", fmt(p.magnetic_width)},
        {"potential.loop_radius", fmt(p.loop_radius)},
        {"potential.a_files", p.a_files.empty() ? "" : join(p.a_files, str)},
        {"potential.c_pos", fmt(p.c_pos)},
        {"potential.K", p.K ? fmt(*p.K) : "auto"},
        {"solver.tol_rel", fmt(c.solver.tol_rel)},
        {"solver.max_iter", std::to_string(c.solver.max_iter)},
        {"solver.resolvent_eps", join(c.solver.resolvent_eps, d)},
        {"solver.lambda_count", std::to_string(c.solver.lambda_count)},
        {"solver.lambda_max", fmt(c.solver.lambda_max)},
        {"solver.trials", std::to_string(c.solver.trials)},
        {"solver.p_list", join(c.solver.p_list, rat)},
        {"solver.sources", std::to_string(c.solver.sources)},
        {"solver.strichartz_t", fmt(c.solver.strichartz_t)},
        {"nonlinearity.sign", to_string(c.nonlinearity)},
        {"evolution.dt", fmt(c.evolution.dt)},
        {"evolution.t_final", fmt(c.evolution.t_final)},
        {"evolution.snapshot_stride", std::to_string(c.evolution.snapshot_stride)},
        {"evolution.conserve_tol", fmt(c.evolution.conserve_tol)},
        {"evolution.initial", c.evolution.initial},
        {"evolution.initial_amplitude", fmt(c.evolution.initial_amplitude)},
        {"evolution.initial_width", fmt(c.evolution.initial_width)},
        {"evolution.write_snapshots", c.evolution.write_snapshots ? "true" : "false"},
        {"modulation.z_re", fmt(c.modulation.z_re)},
        {"modulation.z_im", fmt(c.modulation.z_im)},
        {"modulation.z_list", join(c.modulation.z_list, d)},
        {"modulation.amplitudes", join(c.modulation.amplitudes, d)},
        {"modulation.reference_amplitude", fmt(c.modulation.reference_amplitude)},
        {"modulation.perturbation_width", fmt(c.modulation.perturbation_width)},
        {"modulation.sigma", fmt(c.modulation.sigma)},
        {"output.directory", c.output.directory},
        {"output.seed", std::to_string(c.output.seed)},
    };
}

}  // namespace

IniTable IniTable::parse(const std::string& text) {
    IniTable t;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(line) + ": unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line) + ": empty section name");
            t.sections_[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
        if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
        if (section.empty())
            throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                              "' appears before any [section]");
        auto& sec = t.sections_[section];
        if (sec.count(key))
            throw ConfigError("line " + std::to_string(line) + ": duplicate key " + section + "." + key);
        sec[key] = {value, line};
    }
    return t;
}

IniTable IniTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void IniTable::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = {value, 0};
}

void IniTable::set_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    const std::string section = trim(assignment.substr(0, dot));
    const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
    if (section.empty() || key.empty())
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    set(section, key, trim(assignment.substr(eq + 1)));
}

ExperimentConfig build_config(const IniTable& table) {
    ExperimentConfig c;
    const auto& sch = schema();
    for (const auto& [section, keys] : table.sections()) {
        const auto sit = sch.find(section);
        if (sit == sch.end()) {
            const std::string first = keys.empty() ? "" : "." + keys.begin()->first;
            throw ConfigError("unknown section [" + section + "]" +
                              (keys.empty() ? "" : " (key " + section + first + ")"));
        }
        for (const auto& [key, entry] : keys) {
            const auto kit = sit->second.find(key);
            const std::string where =
                entry.line > 0 ? " (line " + std::to_string(entry.line) + ")" : " (override)";
            if (kit == sit->second.end())
                throw ConfigError("unknown key " + section + "." + key + where);
            try {
                kit->second(c, entry.value);
            } catch (const BadValue& e) {
                throw ConfigError(section + "." + key + ": " + e.why + where);
            }
        }
    }
    validate(c);
    c.echo = echo(c);
    return c;
}

ExperimentConfig parse_config(const std::string& path) { return build_config(IniTable::load(path)); }

}  // namespace magnls
