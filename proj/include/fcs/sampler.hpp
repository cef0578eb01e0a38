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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fcs/bitstring.hpp"
#include "fcs/circuit_model.hpp"
#include "fcs/ensemble.hpp"
#include "fcs/error.hpp"
#include "fcs/noise.hpp"
#include "fcs/parallel.hpp"
#include "fcs/rng.hpp"
#include "fcs/sector_state.hpp"

namespace fcs {

struct SampleConfig {
    unsigned n_initial_states = 100;
    unsigned shots_per_state = 600;
    std::uint64_t seed = 1;
    /// Evolve the complement of initial words with more ones than half the chain.
    bool relabel_enabled = false;
    PostselectMode postselect = PostselectMode::NumberOnly;
    unsigned threads = 1;

    void validate() const {
        if (n_initial_states < 1 || shots_per_state < 1) {
            throw InvalidArgument("n_initial_states and shots_per_state must be at least 1");
        }
    }
};

/// Random-stream keys. Stream (state, 0, 0) draws the initial word; stream
/// (state, t, shot) drives shot `shot` of the t-cycle circuit.
inline StreamRng initial_stream(std::uint64_t seed, std::uint64_t state) {
    return StreamRng(seed, state, 0, 0);
}
inline StreamRng shot_stream(std::uint64_t seed, std::uint64_t state, unsigned cycle, std::uint64_t shot) {
    return StreamRng(seed, state, cycle, shot);
}

/// Left sites are 1 with probability p, right sites 0 with probability p.
inline Bitstring sample_initial(const ImbalanceEnsemble &ens, StreamRng &rng) {
    const unsigned n = ens.n_qubits;
    const unsigned h = n / 2;
    const double p = ens.p();
    Bitstring b{0, n};
    for (unsigned i = 0; i < n; i++) {
        const bool lucky = p >= 1 || rng.bernoulli(p);
        b.set_site(i, i < h ? lucky : !lucky);
    }
    return b;
}

/// Complement of words with more than n/2 ones, together with the flag.
inline std::pair<Bitstring, bool> relabel_if_overfull(Bitstring b) {
    if (b.popcount() > b.n / 2) {
        return {b.complement(), true};
    }
    return {b, false};
}

/// Counts of one initial state: counts[t][i] is the number of kept shots of
/// the t-cycle circuit with M equal to TransferDistribution(t).magnetization(i).
struct StateSamples {
    Bitstring initial;
    std::vector<std::vector<std::uint64_t>> counts;
    std::vector<std::uint64_t> kept;
    std::vector<std::uint64_t> discarded;
};

struct SampleResult {
    unsigned max_cycles = 0;
    std::vector<StateSamples> states;

    /// Number of initial states with no kept shot at cycle t; they are left out
    /// of every estimate at that cycle.
    std::size_t dropped_states(unsigned t) const {
        std::size_t d = 0;
        for (const auto &s : states) {
            d += s.kept[t] == 0;
        }
        return d;
    }
    /// Fraction of shots kept by post-selection at cycle t.
    double yield(unsigned t) const {
        std::uint64_t kept = 0, all = 0;
        for (const auto &s : states) {
            kept += s.kept[t];
            all += s.kept[t] + s.discarded[t];
        }
        return all == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(all);
    }
    /// Per-state histograms at cycle t, states without kept shots removed.
    std::vector<std::vector<std::uint64_t>> histograms(unsigned t) const {
        std::vector<std::vector<std::uint64_t>> out;
        for (const auto &s : states) {
            if (s.kept[t] > 0) {
                out.push_back(s.counts[t]);
            }
        }
        return out;
    }
};

namespace detail {

/// Sum that does not depend on the order of the terms.
inline double order_free_sum(std::vector<double> &terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0;
    for (double v : terms) {
        s += v;
    }
    return s;
}

}  // namespace detail

/// Distribution implied by the double average over initial states and kept
/// shots: P(M) = (1/N_states) sum_i N_i(M) / N_i.
inline TransferDistribution estimated_distribution(const std::vector<std::vector<std::uint64_t>> &hists,
                                                   unsigned t) {
    if (hists.empty()) {
        throw InsufficientData("no initial state kept any shot at cycle " + std::to_string(t));
    }
    TransferDistribution d(t);
    auto mass = d.masses();
    std::vector<std::vector<double>> terms(mass.size());
    for (const auto &h : hists) {
        if (h.size() != mass.size()) {
            throw InvalidArgument("histogram length does not match cycle " + std::to_string(t));
        }
        std::uint64_t total = 0;
        for (auto c : h) {
            total += c;
        }
        if (total == 0) {
            throw InsufficientData("initial state without kept shots");
        }
        for (std::size_t i = 0; i < h.size(); i++) {
            terms[i].push_back(static_cast<double>(h[i]) / static_cast<double>(total));
        }
    }
    for (std::size_t i = 0; i < mass.size(); i++) {
        mass[i] = detail::order_free_sum(terms[i]) / static_cast<double>(hists.size());
    }
    return d;
}

/// <M^k> from the double average: outer uniform mean over initial states,
/// inner count-weighted mean over the kept shots of each state.
inline double estimate_powers(const std::vector<std::vector<std::uint64_t>> &hists, unsigned t, unsigned k) {
    if (hists.empty()) {
        throw InsufficientData("no initial state kept any shot at cycle " + std::to_string(t));
    }
    std::vector<double> terms;
    terms.reserve(hists.size());
    for (const auto &h : hists) {
        double inner = 0;
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < h.size(); i++) {
            if (h[i] == 0) {
                continue;
            }
            const double m = 2.0 * (static_cast<double>(i) - static_cast<double>(t));
            inner += static_cast<double>(h[i]) * std::pow(m, static_cast<double>(k));
            total += h[i];
        }
        if (total == 0) {
            throw InsufficientData("initial state without kept shots");
        }
        terms.push_back(inner / static_cast<double>(total));
    }
    return detail::order_free_sum(terms) / static_cast<double>(hists.size());
}

namespace detail {

inline void record(StateSamples &s, unsigned t, Bitstring initial, Bitstring measured, PostselectMode mode,
                   LayerOrder order) {
    if (!postselect(initial, measured, t, mode, order)) {
        s.discarded[t]++;
        return;
    }
    const int m = transferred_magnetization(initial, measured);
    s.counts[t][static_cast<std::size_t>(m / 2 + static_cast<int>(t))]++;
    s.kept[t]++;
}

/// Noiseless: one evolution on the 2 t_max central sites serves every cycle;
/// shots are drawn from the state after each cycle.
inline void sample_noiseless(StateSamples &s, std::uint64_t index, const ChainConfig &chain,
                             const SampleConfig &cfg) {
    const unsigned n = chain.n_qubits;
    const unsigned tmax = chain.cycles;
    if (tmax == 0) {
        s.counts[0][0] = cfg.shots_per_state;
        s.kept[0] = cfg.shots_per_state;
        return;
    }
    const unsigned offset = n / 2 - tmax;
    ChainConfig window{2 * tmax, tmax, chain.params, chain.layer_order};
    if (offset % 2 == 1) {
        window.layer_order = flipped(chain.layer_order);
    }
    auto [prepared, relabeled] = cfg.relabel_enabled ? relabel_if_overfull(s.initial) : std::pair{s.initial, false};
    SectorState state(prepared.window(offset, 2 * tmax));
    std::vector<double> cdf(state.dimension());
    // t = 0 keeps every shot at M = 0.
    s.counts[0][0] = cfg.shots_per_state;
    s.kept[0] = cfg.shots_per_state;
    for (unsigned t = 1; t <= tmax; t++) {
        apply_cycle(state, window.params, window.layer_order);
        auto amps = state.amplitudes();
        double acc = 0;
        for (std::size_t i = 0; i < amps.size(); i++) {
            acc += std::norm(amps[i]);
            cdf[i] = acc;
        }
        for (std::uint64_t shot = 0; shot < cfg.shots_per_state; shot++) {
            StreamRng rng = shot_stream(cfg.seed, index, t, shot);
            const double u = rng.uniform() * acc;
            std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            i = std::min(i, cdf.size() - 1);
            Bitstring measured = prepared;
            measured.set_window(offset, state.word(i));
            if (relabeled) {
                measured = measured.complement();
            }
            record(s, t, s.initial, measured, cfg.postselect, chain.layer_order);
        }
    }
}

/// Noisy: every cycle count is a separate circuit and every shot a separate
/// trajectory.
inline void sample_noisy(StateSamples &s, std::uint64_t index, const ChainConfig &chain, const SampleConfig &cfg,
                         const NoiseConfig &noise) {
    auto [prepared, relabeled] = cfg.relabel_enabled ? relabel_if_overfull(s.initial) : std::pair{s.initial, false};
    for (unsigned t = 0; t <= chain.cycles; t++) {
        ChainConfig circuit = chain;
        circuit.cycles = t;
        for (std::uint64_t shot = 0; shot < cfg.shots_per_state; shot++) {
            StreamRng rng = shot_stream(cfg.seed, index, t, shot);
            Bitstring measured = noisy_shot(prepared, circuit, noise, rng);
            if (relabeled) {
                measured = measured.complement();
            }
            record(s, t, s.initial, measured, cfg.postselect, chain.layer_order);
        }
    }
}

}  // namespace detail

/// Monte Carlo version of the experiment for cycles 0 .. chain.cycles.
/// Output is a pure function of (ensemble, chain, config minus threads, noise).
inline SampleResult run_sampler(const ImbalanceEnsemble &ens, const ChainConfig &chain, const SampleConfig &cfg,
                                const NoiseConfig &noise = {}) {
    chain.validate();
    cfg.validate();
    noise.validate(chain.n_qubits);
    if (ens.n_qubits != chain.n_qubits) {
        throw InvalidArgument("ensemble and chain sizes differ");
    }
    if (!chain.resolves_lightcone()) {
        throw UnderResolved(std::to_string(chain.n_qubits) + " qubits cannot resolve " +
                            std::to_string(chain.cycles) + " cycles");
    }
    SampleResult result;
    result.max_cycles = chain.cycles;
    result.states.resize(cfg.n_initial_states);
    const bool noisy = !noise.noiseless();
    parallel_for(cfg.n_initial_states, cfg.threads, [&](std::size_t i) {
        StateSamples &s = result.states[i];
        StreamRng rng = initial_stream(cfg.seed, i);
        s.initial = sample_initial(ens, rng);
        s.counts.resize(chain.cycles + 1);
        for (unsigned t = 0; t <= chain.cycles; t++) {
            s.counts[t].assign(2 * t + 1, 0);
        }
        s.kept.assign(chain.cycles + 1, 0);
        s.discarded.assign(chain.cycles + 1, 0);
        if (noisy) {
            detail::sample_noisy(s, i, chain, cfg, noise);
        } else {
            detail::sample_noiseless(s, i, chain, cfg);
        }
    });
    return result;
}

}  // namespace fcs
