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

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcs/error.hpp"
#include "fcs/stats.hpp"

namespace fcs {

/// Asymptotic skewness and excess kurtosis of a candidate limit law. The
/// kurtosis is either a point or, for CLL, an interval.
struct KpzReference {
    std::string_view name;
    std::string_view description;
    double skewness;
    double kurtosis_lo;
    double kurtosis_hi;

    bool kurtosis_is_interval() const {
        return kurtosis_lo != kurtosis_hi;
    }
    double kurtosis() const {
        return (kurtosis_lo + kurtosis_hi) / 2;
    }
};

inline constexpr std::array<KpzReference, 5> kpz_references{{
    {"GOE_TW", "Tracy-Widom GOE (flat KPZ initial condition)", 0.294, 0.165, 0.165},
    {"BaikRains", "Baik-Rains (stationary KPZ initial condition)", 0.359, 0.289, 0.289},
    {"GUE_TW", "Tracy-Widom GUE (wedge KPZ initial condition)", 0.224, 0.093, 0.093},
    {"NLFH", "nonlinear fluctuating hydrodynamics", 0.0, 0.14, 0.14},
    {"CLL", "classical Landau-Lifshitz", 0.0, -0.03, 0.03},
}};

/// Mean of M after one cycle: 2 sin^2(theta) tanh(mu).
inline double cycle1_mean(double theta, double mu) {
    const double s = std::sin(theta);
    return 2 * s * s * std::tanh(mu);
}

/// Variance after one cycle: 2 sin^2(theta) (1 + cos(2 theta) tanh^2(mu)).
inline double cycle1_variance(double theta, double mu) {
    const double s = std::sin(theta);
    const double tau = std::tanh(mu);
    return 2 * s * s * (1 + std::cos(2 * theta) * tau * tau);
}

/// Closed-form skewness after one cycle, written with u = e^{-2 mu} so that
/// it stays finite for any mu >= 0:
///   S = 2 sqrt2 tanh(mu) [(2 s^4 tanh^2 + 1) - 3 s^2 (1 + u^2)/(1 + u)^2]
///       / (s (1 + cos(2 theta) tanh^2)^{3/2}).
inline double cycle1_skewness(double theta, double mu) {
    const double s = std::sin(theta);
    if (s == 0) {
        throw UndefinedMoments("skewness undefined for a frozen chain (sin theta = 0)");
    }
    const double tau = std::tanh(mu);
    const double u = std::isinf(mu) ? 0.0 : std::exp(-2 * mu);
    const double ratio = (1 + u * u) / ((1 + u) * (1 + u));
    const double num = (2 * s * s * s * s * tau * tau + 1) - 3 * s * s * ratio;
    const double den = s * std::pow(std::cos(2 * theta) * tau * tau + 1, 1.5);
    return 2 * std::sqrt(2.0) * num * tau / den;
}

/// Leading small-mu coefficient of the cycle-1 skewness: S = c mu + O(mu^3),
/// c = sqrt2 (2 csc(theta) - 3 sin(theta)).
inline double cycle1_skewness_slope(double theta) {
    const double s = std::sin(theta);
    if (s == 0) {
        throw UndefinedMoments("skewness undefined for a frozen chain (sin theta = 0)");
    }
    return std::sqrt(2.0) * (2 / s - 3 * s);
}

/// The two-site distribution after one cycle: M = +-2 with probabilities
/// sin^2(theta) (1 +- tanh mu)^2 / 4, M = 0 otherwise.
inline TransferDistribution cycle1_distribution(double theta, double mu) {
    const double s2 = std::sin(theta) * std::sin(theta);
    const double tau = std::tanh(mu);
    TransferDistribution d(1);
    d.at(2) = s2 * (1 + tau) * (1 + tau) / 4;
    d.at(-2) = s2 * (1 - tau) * (1 - tau) / 4;
    d.at(0) = 1 - d(2) - d(-2);
    return d;
}

/// Mean, variance and skewness from the closed forms; kurtosis from the
/// two-site distribution (valid at every mu).
inline Moments cycle1_moments(double theta, double mu) {
    Moments m;
    m.mean = cycle1_mean(theta, mu);
    m.variance = cycle1_variance(theta, mu);
    m.skewness = cycle1_skewness(theta, mu);
    m.kurtosis = skew_kurt(central_moments(cycle1_distribution(theta, mu))).kurtosis;
    return m;
}

/// mu -> 0 kurtosis after one cycle: 2 csc^2(theta) - 3.
inline double cycle1_kurtosis_mu0(double theta) {
    const double s = std::sin(theta);
    if (s == 0) {
        throw UndefinedMoments("kurtosis undefined for a frozen chain (sin theta = 0)");
    }
    return 2 / (s * s) - 3;
}

struct Cycle2SmallMu {
    double mean = 0;      // error O(mu^3)
    double variance = 0;  // error O(mu^2)
};

inline Cycle2SmallMu cycle2_small_mu(double theta, double phi, double mu) {
    const double s = std::sin(theta), c = std::cos(theta);
    const double s3 = std::sin(3 * theta);
    Cycle2SmallMu r;
    r.mean = 2 * mu * s * s * (c * c * c * c * (3 + std::cos(phi)) + 2 * s * s);
    r.variance = s * s * s * s * (1 - std::cos(phi)) + (3 + std::cos(phi)) * (7 * s * s + s3 * s3) / 8;
    return r;
}

/// A measured value with its uncertainty.
struct Measured {
    double value = 0;
    double sigma = 0;
};

struct ReferenceComparison {
    std::string_view name;
    /// (measured - reference) / sigma; absent when no skewness was supplied.
    std::optional<double> z_skewness;
    /// For the interval row: distance to the interval / sigma, signed.
    double z_kurtosis = 0;
    std::optional<bool> skewness_consistent;
    bool kurtosis_consistent = false;
};

/// Compares aggregated moments with every reference row. A value is
/// consistent when |z| <= n_sigma.
inline std::vector<ReferenceComparison> compare_to_references(std::optional<Measured> skewness, Measured kurtosis,
                                                              double n_sigma = 1) {
    auto check = [](const Measured &m, const char *what) {
        if (!std::isfinite(m.value) || !(m.sigma > 0) || !std::isfinite(m.sigma)) {
            throw InvalidArgument(std::string("comparison needs a finite value and positive sigma for ") + what);
        }
    };
    check(kurtosis, "kurtosis");
    if (skewness) {
        check(*skewness, "skewness");
    }
    // Absorbs rounding when a value sits exactly n_sigma away.
    constexpr double slack = 1e-9;
    std::vector<ReferenceComparison> out;
    for (const auto &ref : kpz_references) {
        ReferenceComparison c;
        c.name = ref.name;
        if (skewness) {
            c.z_skewness = (skewness->value - ref.skewness) / skewness->sigma;
            c.skewness_consistent = std::abs(*c.z_skewness) <= n_sigma + slack;
        }
        double gap = 0;
        if (kurtosis.value < ref.kurtosis_lo) {
            gap = kurtosis.value - ref.kurtosis_lo;
        } else if (kurtosis.value > ref.kurtosis_hi) {
            gap = kurtosis.value - ref.kurtosis_hi;
        }
        c.z_kurtosis = gap / kurtosis.sigma;
        c.kurtosis_consistent = std::abs(c.z_kurtosis) <= n_sigma + slack;
        out.push_back(c);
    }
    return out;
}

}  // namespace fcs
