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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fcs/ensemble.hpp"
#include "fcs/reference.hpp"
#include "oracles/generators.hpp"

namespace fcs {
namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

TEST(Cycle1, TableValueAndSymmetry) {
    EXPECT_NEAR(cycle1_kurtosis_mu0(0.4 * pi), -0.7888543819998315, 1e-15);
    EXPECT_NEAR(cycle1_moments(0.4 * pi, 0).kurtosis, -0.7888543819998315, 1e-14);
    EXPECT_EQ(cycle1_mean(0.3, 0), 0.0);
    EXPECT_EQ(cycle1_skewness(0.3, 0), 0.0);
    EXPECT_THROW(cycle1_skewness(0, 0.3), UndefinedMoments);
    EXPECT_THROW(cycle1_kurtosis_mu0(0), UndefinedMoments);
}

TEST(Cycle1, MatchesExactTwoSiteDistributionProperty) {
    gen::Gen g(51);
    for (int trial = 0; trial < 100; trial++) {
        const double theta = g.real(0.05, pi - 0.05);
        const double phi = g.real(-pi, pi);
        const double mu = g.coin() ? g.real(0, 3) : (g.coin() ? 0.0 : inf);
        auto exact = summarize(exact_distribution(ImbalanceEnsemble(mu, 2), ChainConfig{2, 1, FSimParams(theta, phi)}));
        auto closed = cycle1_moments(theta, mu);
        EXPECT_NEAR(closed.mean, exact.mean, 1e-12);
        EXPECT_NEAR(closed.variance, exact.variance, 1e-12);
        EXPECT_NEAR(closed.skewness, exact.skewness, 1e-10 * (1 + std::abs(exact.skewness)));
        EXPECT_NEAR(closed.kurtosis, exact.kurtosis, 1e-10 * (1 + std::abs(exact.kurtosis)));
        auto d = cycle1_distribution(theta, mu);
        EXPECT_NEAR(d.total(), 1, 1e-15);
    }
}

TEST(Cycle1, SkewnessSlopeCrossover) {
    const double cross = std::asin(std::sqrt(2.0 / 3));
    EXPECT_NEAR(cycle1_skewness_slope(cross), 0, 1e-14);
    EXPECT_GT(cycle1_skewness_slope(cross - 0.05), 0);
    EXPECT_LT(cycle1_skewness_slope(cross + 0.05), 0);
    for (double theta : {0.3, 0.9, 1.4}) {
        const double mu = 1e-4;
        EXPECT_NEAR(cycle1_skewness(theta, mu) / mu, cycle1_skewness_slope(theta), 1e-6);
    }
}

TEST(Cycle2, Examples) {
    auto zero_mu = cycle2_small_mu(0.4 * pi, 0.8 * pi, 0);
    EXPECT_EQ(zero_mu.mean, 0.0);
    auto frozen = cycle2_small_mu(0, 0.7, 0.3);
    EXPECT_EQ(frozen.mean, 0.0);
    EXPECT_EQ(frozen.variance, 0.0);
}

TEST(Cycle2, MeanAgreesToThirdOrder) {
    const double theta = 0.4 * pi, phi = 0.8 * pi;
    auto table = ExactTransferTable::compute(ChainConfig{4, 2, FSimParams(theta, phi)});
    double previous = 0;
    for (double mu : {0.02, 0.01, 0.005}) {
        const double residual = std::abs(summarize(table.distribution(mu, 2)).mean - cycle2_small_mu(theta, phi, mu).mean);
        EXPECT_LE(residual, 2 * mu * mu * mu);
        if (previous > 0) {
            // Halving mu divides an O(mu^3) residual by about 8.
            EXPECT_NEAR(previous / residual, 8, 0.1);
        }
        previous = residual;
    }
}

TEST(Cycle2, VarianceAtZeroMuProperty) {
    gen::Gen g(52);
    for (int trial = 0; trial < 30; trial++) {
        const double theta = g.real(-pi, pi), phi = g.real(-pi, pi);
        auto exact = summarize(exact_distribution(ImbalanceEnsemble(0, 4), ChainConfig{4, 2, FSimParams(theta, phi)}));
        EXPECT_NEAR(exact.variance, cycle2_small_mu(theta, phi, 0).variance, 1e-12);
    }
}

TEST(References, TableConstants) {
    ASSERT_EQ(kpz_references.size(), 5u);
    EXPECT_EQ(kpz_references[0].name, "GOE_TW");
    EXPECT_EQ(kpz_references[0].skewness, 0.294);
    EXPECT_EQ(kpz_references[0].kurtosis(), 0.165);
    EXPECT_EQ(kpz_references[1].name, "BaikRains");
    EXPECT_EQ(kpz_references[1].skewness, 0.359);
    EXPECT_EQ(kpz_references[1].kurtosis(), 0.289);
    EXPECT_EQ(kpz_references[2].name, "GUE_TW");
    EXPECT_EQ(kpz_references[2].skewness, 0.224);
    EXPECT_EQ(kpz_references[2].kurtosis(), 0.093);
    EXPECT_EQ(kpz_references[3].name, "NLFH");
    EXPECT_EQ(kpz_references[3].skewness, 0.0);
    EXPECT_EQ(kpz_references[3].kurtosis(), 0.14);
    EXPECT_EQ(kpz_references[4].name, "CLL");
    EXPECT_EQ(kpz_references[4].kurtosis_lo, -0.03);
    EXPECT_EQ(kpz_references[4].kurtosis_hi, 0.03);
}

TEST(References, MeasuredKurtosisComparison) {
    auto rows = compare_to_references(std::nullopt, Measured{-0.05, 0.02});
    ASSERT_EQ(rows.size(), 5u);
    for (const auto &r : rows) {
        EXPECT_FALSE(r.z_skewness.has_value());
        if (r.name == "GUE_TW") {
            EXPECT_LT(r.z_kurtosis, -5);
            EXPECT_FALSE(r.kurtosis_consistent);
        }
        if (r.name == "CLL") {
            EXPECT_NEAR(r.z_kurtosis, -1, 1e-12);
            EXPECT_TRUE(r.kurtosis_consistent);
        }
    }
    rows = compare_to_references(Measured{0.0, 0.01}, Measured{0.0, 0.02});
    for (const auto &r : rows) {
        if (r.name == "BaikRains") {
            EXPECT_NEAR(*r.z_skewness, -35.9, 1e-9);
            EXPECT_FALSE(*r.skewness_consistent);
        }
        if (r.name == "CLL") {
            EXPECT_EQ(r.z_kurtosis, 0.0);
            EXPECT_TRUE(*r.skewness_consistent);
        }
    }
}

TEST(References, MissingSigmaRejected) {
    EXPECT_THROW(compare_to_references(std::nullopt, Measured{0.1, 0}), InvalidArgument);
    EXPECT_THROW(compare_to_references(Measured{0.1, -1}, Measured{0.1, 0.1}), InvalidArgument);
    EXPECT_THROW(compare_to_references(std::nullopt, Measured{std::nan(""), 0.1}), InvalidArgument);
}

}  // namespace
}  // namespace fcs
