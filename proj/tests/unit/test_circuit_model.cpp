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
#include <numbers>

#include "fcs/circuit_model.hpp"
#include "oracles/generators.hpp"

namespace fcs {
namespace {

constexpr double pi = std::numbers::pi;

TEST(Anisotropy, Examples) {
    EXPECT_EQ(anisotropy(FSimParams::from_pi(0.4, 0.8)), 1.0);
    EXPECT_NEAR(anisotropy(FSimParams::from_pi(0.4, 0.1)), 0.1645, 5e-4);
    EXPECT_NEAR(anisotropy(FSimParams::from_pi(0.17, 0.6)), 1.589, 2e-3);
    EXPECT_THROW(anisotropy(FSimParams(0, 1)), UndefinedAnisotropy);
    EXPECT_THROW(anisotropy(FSimParams(pi, 1)), UndefinedAnisotropy);
}

TEST(Anisotropy, InvariantUnderSupplementaryThetaProperty) {
    gen::Gen g(1);
    for (int i = 0; i < 2000; i++) {
        const double theta = g.real(1e-3, pi - 1e-3);
        const double phi = g.real(-pi, pi);
        EXPECT_EQ(anisotropy(FSimParams(theta, phi)), anisotropy(FSimParams(pi - theta, phi))) << theta;
    }
}

TEST(Regime, Classification) {
    EXPECT_EQ(classify_regime(0.16), Regime::Ballistic);
    EXPECT_EQ(classify_regime(1.0), Regime::Superdiffusive);
    EXPECT_EQ(classify_regime(1.0 + 5e-10), Regime::Superdiffusive);
    EXPECT_EQ(classify_regime(1.0 - 2e-9), Regime::Ballistic);
    EXPECT_EQ(classify_regime(1.59), Regime::Diffusive);
    EXPECT_STREQ(regime_name(Regime::Diffusive), "diffusive");
}

TEST(ChainConfig, Validation) {
    ChainConfig c{5, 1, {}, LayerOrder::EvenFirst};
    EXPECT_THROW(c.validate(), InvalidArgument);
    ChainConfig ok{8, 4, {}, LayerOrder::EvenFirst};
    EXPECT_NO_THROW(ok.validate());
    EXPECT_TRUE(ok.resolves_lightcone());
    ok.cycles = 5;
    EXPECT_FALSE(ok.resolves_lightcone());
}

/// Residuals of the two defining relations.
void expect_relations(const EtaLambda &el, double theta, double delta) {
    using namespace std::complex_literals;
    const double t2 = std::tan(theta) * std::tan(theta);
    auto se = std::sin(el.eta), sl = std::sin(el.lambda);
    auto magnitude = -(sl * sl) / (se * se);
    EXPECT_NEAR(std::abs(magnitude - t2), 0, 1e-9 * std::max(1.0, t2));
    EXPECT_NEAR(std::abs(std::cos(el.eta) - delta), 0, 1e-12);
    auto phase = 1i * std::tan(el.lambda) / std::tan(el.eta);
    EXPECT_NEAR(std::abs(phase - std::tan(el.phi / 2)), 0, 1e-9 * std::max(1.0, std::abs(phase)));
    EXPECT_NEAR(el.recovered_anisotropy(theta), delta, 1e-10);
}

TEST(EtaLambda, GaplessBranch) {
    gen::Gen g(2);
    for (int i = 0; i < 200; i++) {
        const double theta = g.real(0.05, pi - 0.05) * (g.coin() ? 1 : -1);
        const double delta = g.real(0.01, 0.99);
        auto el = eta_lambda_from(delta, theta);
        EXPECT_EQ(el.eta.imag(), 0.0);
        EXPECT_EQ(el.lambda.real(), 0.0);
        expect_relations(el, theta, delta);
    }
}

TEST(EtaLambda, GappedBranch) {
    gen::Gen g(3);
    int solved = 0;
    for (int i = 0; i < 400; i++) {
        const double theta = g.real(0.05, pi - 0.05) * (g.coin() ? 1 : -1);
        const double delta = g.real(1.01, 3.0);
        try {
            auto el = eta_lambda_from(delta, theta);
            EXPECT_EQ(el.eta.real(), 0.0);
            EXPECT_EQ(el.lambda.imag(), 0.0);
            expect_relations(el, theta, delta);
            solved++;
        } catch (const BranchError &) {
            // Only when the circuit cannot realize this Delta at this theta.
            EXPECT_GT(std::abs(delta * std::sin(theta)), 1.0 - 1e-12);
        }
    }
    EXPECT_GT(solved, 100);
}

TEST(EtaLambda, IsotropicLimitAndErrors) {
    auto el = eta_lambda_from(1.0, 0.4 * pi);
    EXPECT_EQ(el.eta, std::complex<double>(0));
    EXPECT_EQ(el.lambda, std::complex<double>(0));
    EXPECT_NEAR(el.phi, 0.8 * pi, 1e-12);
    EXPECT_NEAR(el.recovered_anisotropy(0.4 * pi), 1.0, 1e-12);
    // Delta = 1.59 at theta = 0.17 pi, the ratio of a realizable circuit.
    auto gapped = eta_lambda_from(anisotropy(FSimParams::from_pi(0.17, 0.6)), 0.17 * pi);
    EXPECT_NEAR(gapped.phi, 0.6 * pi, 1e-9);
    EXPECT_THROW(eta_lambda_from(-0.5, 1.0), InvalidArgument);
    EXPECT_THROW(eta_lambda_from(0.5, 0.0), UndefinedAnisotropy);
    EXPECT_THROW(eta_lambda_from(3.0, 0.45 * pi), BranchError);
}

}  // namespace
}  // namespace fcs
