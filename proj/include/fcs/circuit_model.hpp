// Copyright 2026 The fcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "fcs/error.hpp"
#include "fcs/sector_state.hpp"

namespace fcs {

/// An open chain of `n_qubits` sites driven for `cycles` Floquet cycles. The
/// half-chain cut sits between sites n/2 - 1 and n/2.
struct ChainConfig {
    unsigned n_qubits = 2;
    unsigned cycles = 0;
    FSimParams params{};
    LayerOrder layer_order = LayerOrder::EvenFirst;

    void validate() const {
        if (n_qubits % 2 != 0) {
            throw InvalidArgument("n_qubits must be even (got " + std::to_string(n_qubits) + ")");
        }
        if (n_qubits > Bitstring::max_sites) {
            throw InvalidArgument("n_qubits exceeds 64");
        }
    }
    /// Center observables are exact (length independent) when n >= 2t.
    bool resolves_lightcone() const {
        return n_qubits >= 2 * cycles;
    }
};

inline double anisotropy(const FSimParams &params) {
    return params.anisotropy();
}

enum class Regime { Ballistic, Superdiffusive, Diffusive };

inline constexpr double isotropic_tolerance = 1e-9;

/// Labels only; nothing downstream branches on the label.
inline Regime classify_regime(double delta, double tol = isotropic_tolerance) {
    if (std::abs(delta - 1) <= tol) {
        return Regime::Superdiffusive;
    }
    return delta < 1 ? Regime::Ballistic : Regime::Diffusive;
}

inline const char *regime_name(Regime r) {
    switch (r) {
        case Regime::Ballistic:
            return "ballistic";
        case Regime::Superdiffusive:
            return "superdiffusive";
        case Regime::Diffusive:
            return "diffusive";
    }
    return "?";
}

/// (eta, lambda) parameterization of the same Floquet circuit. For Delta < 1
/// eta is real and lambda imaginary; for Delta > 1 eta is imaginary and lambda
/// real. At Delta = 1 both vanish and only their ratio -i|tan theta| survives.
struct EtaLambda {
    std::complex<double> eta;
    std::complex<double> lambda;
    /// phi recovered from the phase relation tan(phi/2) = i tan(lambda) / tan(eta).
    double phi = 0;

    double recovered_anisotropy(double theta) const {
        return std::sin(phi / 2) / std::sin(theta);
    }
};

namespace detail {

/// Root of an increasing function on [lo, hi] by bisection.
template <typename F>
double bisect(F &&f, double lo, double hi) {
    for (int it = 0; it < 200 && hi - lo > 0; it++) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Solves the magnitude relation tan^2 theta = -sin^2 lambda / sin^2 eta for
/// lambda by bisection, then fixes the sign of lambda so that sin(phi/2) has
/// the sign of sin(theta).
inline EtaLambda eta_lambda_from(double delta, double theta) {
    using namespace std::complex_literals;
    if (!(delta > 0) || !std::isfinite(delta)) {
        throw InvalidArgument("eta/lambda mapping needs Delta > 0");
    }
    const double s = std::sin(theta);
    if (s == 0) {
        throw UndefinedAnisotropy("sin(theta) = 0");
    }
    const double t2 = std::tan(theta) * std::tan(theta);
    EtaLambda out;
    if (delta == 1) {
        // Isotropic limit: i tan(lambda)/tan(eta) -> i * (lambda/eta) = |tan theta|.
        out.phi = 2 * std::atan(std::sqrt(t2)) * (s > 0 ? 1 : -1);
        return out;
    }
    std::complex<double> ratio;
    if (delta > 1) {
        // eta = i a, sin^2 eta = -sinh^2 a; lambda real in [0, pi/2].
        double a = std::acosh(delta);
        double target = t2 * std::sinh(a) * std::sinh(a);
        if (target > 1) {
            throw BranchError("no real lambda for Delta=" + std::to_string(delta) +
                              ": tan^2(theta) sinh^2(eta) exceeds 1");
        }
        double lam = detail::bisect([&](double x) { return std::sin(x) * std::sin(x) - target; }, 0.0,
                                    std::numbers::pi / 2);
        out.eta = 1i * a;
        out.lambda = lam;
    } else {
        // eta real, lambda = i b, -sin^2 lambda = sinh^2 b.
        double eta = std::acos(delta);
        double target = t2 * std::sin(eta) * std::sin(eta);
        double hi = 1;
        while (std::sinh(hi) * std::sinh(hi) < target) {
            hi *= 2;
        }
        double b = detail::bisect([&](double x) { return std::sinh(x) * std::sinh(x) - target; }, 0.0, hi);
        out.eta = eta;
        out.lambda = 1i * b;
    }
    ratio = 1i * std::tan(out.lambda) / std::tan(out.eta);
    if (std::abs(ratio.imag()) > 1e-9 * std::max(1.0, std::abs(ratio.real()))) {
        throw BranchError("phase relation has no real phi on this branch");
    }
    if ((ratio.real() > 0) != (s > 0)) {
        out.lambda = -out.lambda;
        ratio = -ratio;
    }
    out.phi = 2 * std::atan(ratio.real());
    return out;
}

}  // namespace fcs
