#pragma once

#include "magnls/grid.hpp"

#include <string>

namespace magnls {

/// g(psi) = sign |psi|^2 psi with sign = +1 (defocusing) or -1 (focusing).
enum class Nonlinearity { focusing, defocusing };

constexpr double sign_of(Nonlinearity n) noexcept {
    return n == Nonlinearity::defocusing ? 1.0 : -1.0;
}

inline std::string to_string(Nonlinearity n) {
    return n == Nonlinearity::defocusing ? "defocusing" : "focusing";
}

inline ComplexField cubic(const ComplexField& psi, Nonlinearity n) {
    const double s = sign_of(n);
    ComplexField out = psi;
    for (auto& v : out.values()) v *= s * std::norm(v);
    return out;
}

}  // namespace magnls
