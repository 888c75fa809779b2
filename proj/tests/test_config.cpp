#include "doctest.h"

#include "magnls/config.hpp"

#include <string>

using namespace magnls;

namespace {

ExperimentConfig from(const std::string& text) { return build_config(IniTable::parse(text)); }

std::string error_of(const std::string& text) {
    try {
        from(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = "[grid]\ndim = 1\nsizes = 256\nlengths = 30\n[potential]\nkind = gaussian_well\n";

}  // namespace

TEST_CASE("minimal file gets defaults") {
    const auto c = from(kMinimal);
    CHECK(c.grid.sizes == std::vector<std::size_t>{256});
    CHECK(c.potential.kind == "gaussian_well");
    CHECK(c.nonlinearity == Nonlinearity::defocusing);
    CHECK(c.modulation.sigma == doctest::Approx(4.1));
    CHECK(c.evolution.dt == doctest::Approx(1e-3));
    CHECK(c.output.seed == 0);
    CHECK_FALSE(c.potential.K.has_value());
    bool has_sigma = false;
    for (const auto& [k, v] : c.echo)
        if (k == "modulation.sigma") has_sigma = v == "4.0999999999999996" || v == "4.1";
    CHECK(has_sigma);
}

TEST_CASE("validation errors name section.key") {
    const std::string base = kMinimal;
    CHECK(error_of(base + "[modulation]\nsigma = 3\n").find("modulation.sigma must exceed 4") !=
          std::string::npos);
    CHECK(error_of(base + "[evolution]\ndt = 0.5\n").find("evolution.dt") != std::string::npos);
    CHECK(error_of(base + "[grid]\n").find("duplicate") == std::string::npos);
    CHECK(error_of("[grid]\nsizes = 100\n").find("grid.sizes") != std::string::npos);
    CHECK(error_of(base + "[nonlinearity]\nsign = sideways\n").find("nonlinearity.sign") !=
          std::string::npos);
    CHECK(error_of(base + "[modulation]\nreference_amplitude = 0.5\n")
              .find("modulation.reference_amplitude") != std::string::npos);
}

TEST_CASE("unknown keys and sections are rejected by name") {
    CHECK(error_of("[potental]\nkind = none\n").find("potental.kind") != std::string::npos);
    const auto msg = error_of(std::string(kMinimal) + "[solver]\ntol = 1e-3\n");
    CHECK(msg.find("solver.tol") != std::string::npos);
    CHECK(msg.find("line 8") != std::string::npos);
}

TEST_CASE("syntax errors carry line numbers") {
    CHECK(error_of("[grid\n").find("line 1") != std::string::npos);
    CHECK(error_of("[grid]\ndim\n").find("line 2") != std::string::npos);
    CHECK(error_of("dim = 1\n").find("before any [section]") != std::string::npos);
    CHECK(error_of("[grid]\ndim = 1\ndim = 2\n").find("duplicate key grid.dim") != std::string::npos);
}

TEST_CASE("lists, rationals, comments and overrides") {
    auto t = IniTable::parse(std::string(kMinimal) +
                             "[solver]\np_list = 2, 18/5  # exponents\nresolvent_eps = 1e-2, 1e-3\n"
                             "; a comment\n[potential]\n");
    t.set_override("potential.K=0");
    t.set_override("nonlinearity.sign = focusing");
    const auto c = build_config(t);
    REQUIRE(c.solver.p_list.size() == 2);
    CHECK(c.solver.p_list[1].first == 18);
    CHECK(c.solver.p_list[1].second == 5);
    CHECK(c.solver.resolvent_eps.size() == 2);
    CHECK(c.potential.K.value() == 0.0);
    CHECK(c.nonlinearity == Nonlinearity::focusing);
    CHECK_THROWS_AS(t.set_override("no_dot=1"), ConfigError);
    t.set_override("potential.kidn=1");
    CHECK_THROWS_WITH_AS(build_config(t), doctest::Contains("potential.kidn"), ConfigError);
}

TEST_CASE("single size broadcasts over axes") {
    const auto c = from("[grid]\ndim = 3\nsizes = 16\nlengths = 10, 12, 14\n");
    CHECK(c.grid.sizes == std::vector<std::size_t>{16, 16, 16});
    CHECK(c.grid.lengths[2] == 14.0);
}
