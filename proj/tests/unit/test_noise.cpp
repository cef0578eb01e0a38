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

#include "fcs/noise.hpp"
#include "fcs/sampler.hpp"
#include "fcs/stats.hpp"
#include "oracles/causal_bfs.hpp"
#include "oracles/generators.hpp"

namespace fcs {
namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

std::uint64_t site_bits(Bitstring b) {
    std::uint64_t x = 0;
    for (unsigned i = 0; i < b.n; i++) {
        x |= std::uint64_t{b.site(i)} << i;
    }
    return x;
}

TEST(NoiseConfig, Validation) {
    NoiseConfig ok;
    EXPECT_NO_THROW(ok.validate(4));
    EXPECT_TRUE(ok.noiseless());
    NoiseConfig bad;
    bad.e0 = 1.5;
    EXPECT_THROW(bad.validate(4), InvalidArgument);
    NoiseConfig t1;
    t1.t1_cycles = 0;
    EXPECT_THROW(t1.validate(4), InvalidArgument);
    NoiseConfig sd;
    sd.angle_jitter_sd = -1;
    EXPECT_THROW(sd.validate(4), InvalidArgument);
    NoiseConfig vec;
    vec.e0_per_qubit = {0.1, 0.1};
    EXPECT_THROW(vec.validate(4), InvalidArgument);
}

TEST(Damping, InfiniteT1IsIdentity) {
    EXPECT_EQ(decay_probability(5, inf), 0.0);
    StreamRng rng(1);
    auto b = Bitstring::parse("110101");
    EXPECT_EQ(damp_bits(b, 100, inf, rng), b);
    SectorState state(Bitstring::parse("1100"));
    apply_cycle(state, FSimParams::from_pi(0.3, 0.2));
    auto before = std::vector<Complex>(state.amplitudes().begin(), state.amplitudes().end());
    damp_qubits(state, 0, rng);
    for (std::size_t i = 0; i < before.size(); i++) {
        EXPECT_EQ(state.amplitudes()[i], before[i]);
    }
    ChainConfig chain{8, 3, FSimParams::from_pi(0.4, 0.8)};
    SampleConfig cfg;
    cfg.n_initial_states = 10;
    cfg.shots_per_state = 20;
    auto r = run_sampler(ImbalanceEnsemble(0.4, 8), chain, cfg, NoiseConfig{});
    for (unsigned t = 0; t <= 3; t++) {
        EXPECT_EQ(r.yield(t), 1.0);
    }
}

TEST(Damping, FrozenChainSurvivalProduct) {
    // theta = 0: excitations never move, so survival is a product of decays.
    NoiseConfig noise;
    noise.t1_cycles = 10;
    const unsigned t = 2;
    ChainConfig chain{8, t, FSimParams(0, 0.7)};
    const auto initial = Bitstring::parse("11110000");
    const int trials = 40000;
    int survived = 0;
    for (int i = 0; i < trials; i++) {
        StreamRng rng(11, i);
        survived += noisy_shot(initial, chain, noise, rng).popcount() == 4;
    }
    const double p = std::exp(-4.0 * t / noise.t1_cycles);
    EXPECT_NEAR(survived / double(trials), p, 5 * std::sqrt(p * (1 - p) / trials));
}

TEST(Damping, YieldDecayRecoversT1) {
    NoiseConfig noise;
    noise.t1_cycles = 20;
    const unsigned n = 8;
    const auto initial = Bitstring::parse("11110000");
    std::vector<SeriesPoint> series;
    const int per_cycle = 25000;  // 10^5 trajectories over four cycles
    for (unsigned t = 1; t <= 4; t++) {
        ChainConfig chain{n, t, FSimParams::from_pi(0.4, 0.8)};
        int kept = 0;
        for (int i = 0; i < per_cycle; i++) {
            StreamRng rng(12, t, i);
            kept += postselect(initial, noisy_shot(initial, chain, noise, rng), t, PostselectMode::NumberOnly);
        }
        const double y = kept / double(per_cycle);
        series.push_back({double(t), std::log(y), std::sqrt((1 - y) / (y * per_cycle))});
    }
    // Weighted least squares for log(yield) = a - 4 t / T1.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto &p : series) {
        const double w = 1 / (p.sigma * p.sigma);
        sw += w;
        sx += w * p.t;
        sy += w * p.value;
        sxx += w * p.t * p.t;
        sxy += w * p.t * p.value;
    }
    const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    const double fitted = -4 / slope;
    EXPECT_NEAR(fitted, noise.t1_cycles, 0.1 * noise.t1_cycles);
}

TEST(Readout, Examples) {
    StreamRng rng(2);
    NoiseConfig none;
    auto b = Bitstring::parse("1011");
    EXPECT_EQ(readout_flip(b, none, rng), b);
    NoiseConfig all;
    all.e1 = 1;
    EXPECT_EQ(readout_flip(Bitstring::parse("1111"), all, rng), Bitstring::parse("0000"));
    NoiseConfig one;
    one.e0_per_qubit = {0, 0, 1, 0};
    EXPECT_EQ(readout_flip(Bitstring::parse("0000"), one, rng), Bitstring::parse("0010"));
}

TEST(Readout, BinomialFlipCount) {
    NoiseConfig noise;
    noise.e0 = 0.01;
    const Bitstring zeros{0, 46};
    const int trials = 100000;
    double flips = 0;
    StreamRng rng(3);
    for (int i = 0; i < trials; i++) {
        flips += readout_flip(zeros, noise, rng).popcount();
    }
    const double sigma = std::sqrt(46 * 0.01 * 0.99 / trials);
    EXPECT_NEAR(flips / trials, 0.46, 5 * sigma);
}

TEST(Causal, Examples) {
    auto a = Bitstring::parse("11011000"), b = Bitstring::parse("01011001");
    EXPECT_EQ(causal_min_half_layers(a, b), 3u);
    EXPECT_EQ(causal_min_half_layers(a, a), 0u);
    EXPECT_FALSE(causal_min_half_layers(a, Bitstring::parse("11111000")).has_value());
}

TEST(Causal, GreedyEqualsBreadthFirstSearch) {
    const unsigned n = 6;
    for (auto order : {LayerOrder::EvenFirst, LayerOrder::OddFirst}) {
        const unsigned first = order == LayerOrder::EvenFirst ? 0 : 1;
        for (std::uint64_t x = 0; x < 64; x++) {
            for (std::uint64_t y = 0; y < 64; y++) {
                Bitstring a{x, n}, b{y, n};
                if (a.popcount() != b.popcount() || a.popcount() > 3) {
                    continue;
                }
                auto greedy = causal_min_half_layers(a, b, order);
                auto bfs = oracle::bfs_min_half_layers(site_bits(a), site_bits(b), n, first);
                EXPECT_EQ(greedy, bfs) << a.str() << " -> " << b.str();
            }
        }
    }
}

TEST(Postselect, Examples) {
    auto a = Bitstring::parse("11011000"), b = Bitstring::parse("01011001");
    EXPECT_FALSE(postselect(a, b, 1, PostselectMode::Causal));
    EXPECT_TRUE(postselect(a, b, 1, PostselectMode::NumberOnly));
    EXPECT_TRUE(postselect(a, b, 2, PostselectMode::Causal));
    auto c = Bitstring::parse("01011000");
    EXPECT_FALSE(postselect(a, c, 5, PostselectMode::Causal));
    EXPECT_FALSE(postselect(a, c, 5, PostselectMode::NumberOnly));
}

TEST(Postselect, CausalNeverLooserProperty) {
    gen::Gen g(31);
    for (int i = 0; i < 3000; i++) {
        const unsigned n = g.even(2, 12);
        auto a = g.word(n);
        auto b = g.coin() ? g.word(n) : g.word_with(n, a.popcount());
        const unsigned t = g.integer(0, 6);
        if (postselect(a, b, t, PostselectMode::Causal)) {
            EXPECT_TRUE(postselect(a, b, t, PostselectMode::NumberOnly));
        }
    }
}

TEST(Disorder, ZeroSpreadIsNominal) {
    ChainConfig chain{6, 3, FSimParams::from_pi(0.3, 0.7)};
    StreamRng rng(4);
    auto r = disorder_and_dephasing(chain, NoiseConfig{}, rng);
    ASSERT_EQ(r.gates.size(), 6u);
    ASSERT_EQ(r.z_angles.size(), 5u);
    for (const auto &layer : r.gates) {
        for (const auto &g : layer) {
            EXPECT_EQ(g.theta(), chain.params.theta());
            EXPECT_EQ(g.phi(), chain.params.phi());
        }
    }
    for (const auto &gap : r.z_angles) {
        for (double a : gap) {
            EXPECT_EQ(a, 0.0);
        }
    }
}

TEST(Disorder, ZNoiseLeavesFirstCycleWallUnchanged) {
    const auto p = FSimParams::from_pi(0.35, 0.6);
    ChainConfig chain{2, 1, p};
    NoiseConfig noise;
    noise.dephasing_sd = 0.5;
    auto exact = pure_domain_wall_distribution(chain);
    for (int trial = 0; trial < 20; trial++) {
        StreamRng rng(5, trial);
        auto circuit = disorder_and_dephasing(chain, noise, rng);
        SectorState state(Bitstring::parse("10"));
        for (unsigned l = 0; l < 2; l++) {
            if (l > 0) {
                apply_z_phases(state, circuit.z_angles[l - 1]);
            }
            for (unsigned b = layer_parity(chain.layer_order, l); b + 1 < 2; b += 2) {
                apply_fsim(state, b, circuit.gates[l][b]);
            }
        }
        const double p_moved = std::norm(state.amplitudes()[state.basis().rank(Bitstring::parse("01"))]);
        EXPECT_NEAR(p_moved, exact(2), 1e-14);
    }
}

TEST(Disorder, ThetaJitterShiftsMeanByQuadrature) {
    const double theta = 0.3 * pi, sd = 0.01 * pi;
    // Oracle: <2 sin^2 theta'> over theta' ~ N(theta, sd^2) by Simpson's rule.
    const int steps = 2000;
    const double lo = theta - 10 * sd, h = 20 * sd / steps;
    double integral = 0;
    for (int i = 0; i <= steps; i++) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == steps) ? 1 : (i % 2 ? 4 : 2);
        const double z = (x - theta) / sd;
        integral += w * 2 * std::sin(x) * std::sin(x) * std::exp(-z * z / 2) / (sd * std::sqrt(2 * pi));
    }
    integral *= h / 3;
    EXPECT_NEAR(integral, 1 - std::exp(-2 * sd * sd) * std::cos(2 * theta), 1e-10);

    NoiseConfig noise;
    noise.angle_jitter_sd = sd;
    ChainConfig chain{2, 1, FSimParams(theta, 0.4)};
    const int trials = 200000;
    double sum = 0;
    for (int i = 0; i < trials; i++) {
        StreamRng rng(6, i);
        sum += transferred_magnetization(Bitstring::parse("10"), noisy_shot(Bitstring::parse("10"), chain, noise, rng));
    }
    const double mean = sum / trials;
    const double sigma = std::sqrt(integral * (2 - integral) / trials);
    EXPECT_NEAR(mean, integral, 5 * sigma);
}

TEST(Leakage, DampingWithReadoutPassesNumberFilter) {
    // A decay followed by a 0 -> 1 readout flip restores the count.
    NoiseConfig noise;
    noise.t1_cycles = 4;
    noise.e0 = 0.05;
    ChainConfig chain{4, 2, FSimParams::from_pi(0.4, 0.8)};
    const auto initial = Bitstring::parse("1100");
    const auto exact = pure_domain_wall_distribution(chain);
    std::vector<double> counts(5, 0);
    int kept = 0;
    const int trials = 60000;
    for (int i = 0; i < trials; i++) {
        StreamRng rng(7, i);
        auto m = noisy_shot(initial, chain, noise, rng);
        if (postselect(initial, m, 2, PostselectMode::NumberOnly)) {
            counts[static_cast<std::size_t>(transferred_magnetization(initial, m) / 2 + 2)] += 1;
            kept++;
        }
    }
    double chi2 = 0;
    for (int j = 0; j < 5; j++) {
        const double expected = kept * exact.masses()[j];
        if (expected > 0) {
            const double d = counts[j] - expected;
            chi2 += d * d / expected;
        }
    }
    // Three degrees of freedom; 11.34 is the 1% critical value.
    EXPECT_GT(chi2, 11.34);
}

TEST(Measure, FollowsBornRule) {
    SectorState state(Bitstring::parse("1100"));
    apply_cycle(state, FSimParams::from_pi(0.3, 0.5));
    std::vector<double> freq(state.dimension(), 0);
    const int trials = 60000;
    StreamRng rng(8);
    for (int i = 0; i < trials; i++) {
        freq[state.basis().rank(measure(state, rng))] += 1;
    }
    for (std::size_t i = 0; i < freq.size(); i++) {
        const double p = std::norm(state.amplitudes()[i]);
        EXPECT_NEAR(freq[i] / trials, p, 5 * std::sqrt(p * (1 - p) / trials) + 1e-12);
    }
}

}  // namespace
}  // namespace fcs
