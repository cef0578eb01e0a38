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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fcs/bitstring.hpp"
#include "fcs/circuit_model.hpp"
#include "fcs/error.hpp"
#include "fcs/rng.hpp"
#include "fcs/sector_state.hpp"

namespace fcs {

/// Error channels of a noisy run. Rates are per qubit; the per-qubit vectors,
/// when non-empty, override the scalar readout rates.
struct NoiseConfig {
    /// Relaxation time in units of cycles; infinity disables damping.
    double t1_cycles = std::numeric_limits<double>::infinity();
    double e0 = 0;  // P(read 1 | prepared 0)
    double e1 = 0;  // P(read 0 | prepared 1)
    std::vector<double> e0_per_qubit;
    std::vector<double> e1_per_qubit;
    /// Standard deviation of per-gate, per-shot Gaussian offsets of theta and phi.
    double angle_jitter_sd = 0;
    /// Standard deviation of random Z angles inserted between layers.
    double dephasing_sd = 0;

    void validate(unsigned n_qubits) const {
        auto prob = [](double p, const char *key) {
            if (!(p >= 0 && p <= 1)) {
                throw InvalidArgument(std::string(key) + " must lie in [0, 1]");
            }
        };
        if (!(t1_cycles > 0)) {
            throw InvalidArgument("t1_cycles must be positive");
        }
        prob(e0, "e0");
        prob(e1, "e1");
        for (const auto *v : {&e0_per_qubit, &e1_per_qubit}) {
            if (!v->empty() && v->size() != n_qubits) {
                throw InvalidArgument("per-qubit readout rates need one entry per qubit");
            }
            for (double p : *v) {
                prob(p, v == &e0_per_qubit ? "e0_per_qubit" : "e1_per_qubit");
            }
        }
        if (!(angle_jitter_sd >= 0) || !(dephasing_sd >= 0)) {
            throw InvalidArgument("noise standard deviations must be non-negative");
        }
    }

    bool damping() const {
        return !std::isinf(t1_cycles);
    }
    bool readout_errors() const {
        auto any = [](const std::vector<double> &v) {
            for (double p : v) {
                if (p > 0) {
                    return true;
                }
            }
            return false;
        };
        return e0 > 0 || e1 > 0 || any(e0_per_qubit) || any(e1_per_qubit);
    }
    bool noiseless() const {
        return !damping() && !readout_errors() && angle_jitter_sd == 0 && dephasing_sd == 0;
    }
    double e0_of(unsigned q) const {
        return e0_per_qubit.empty() ? e0 : e0_per_qubit[q];
    }
    double e1_of(unsigned q) const {
        return e1_per_qubit.empty() ? e1 : e1_per_qubit[q];
    }
};

/// Decay probability of an excited qubit over `duration_cycles`.
inline double decay_probability(double duration_cycles, double t1_cycles) {
    return std::isinf(t1_cycles) ? 0.0 : -std::expm1(-duration_cycles / t1_cycles);
}

/// Classical decay of gate-free qubits: every 1 becomes 0 with probability
/// 1 - exp(-duration / T1).
inline Bitstring damp_bits(Bitstring b, double duration_cycles, double t1_cycles, StreamRng &rng) {
    const double p = decay_probability(duration_cycles, t1_cycles);
    if (p == 0) {
        return b;
    }
    for (unsigned i = 0; i < b.n; i++) {
        if (b.site(i) && rng.bernoulli(p)) {
            b.set_site(i, false);
        }
    }
    return b;
}

/// Amplitude damping with jump probability gamma on every qubit, unravelled
/// as a quantum trajectory. Qubits are treated one after another: qubit q
/// jumps with probability gamma <n_q>, otherwise the no-jump operator
/// diag(1, sqrt(1 - gamma)) acts. The state is renormalized either way.
inline void damp_qubits(SectorState &state, double gamma, StreamRng &rng) {
    if (gamma <= 0) {
        return;
    }
    const double keep = std::sqrt(1 - gamma);
    for (unsigned q = 0; q < state.n_sites() && state.n_excitations() > 0; q++) {
        const double occ = state.occupation(q);
        if (occ == 0) {
            continue;
        }
        if (rng.uniform() < gamma * occ) {
            state = lower(state, q);
        } else {
            scale_occupied(state, q, keep);
        }
        state.normalize();
    }
}

/// Readout: each 0 reads as 1 with probability e0, each 1 as 0 with e1.
inline Bitstring readout_flip(Bitstring b, const NoiseConfig &noise, StreamRng &rng) {
    if (!noise.readout_errors()) {
        return b;
    }
    for (unsigned i = 0; i < b.n; i++) {
        const double p = b.site(i) ? noise.e1_of(i) : noise.e0_of(i);
        if (p > 0 && rng.bernoulli(p)) {
            b.flip_site(i);
        }
    }
    return b;
}

/// Fewest brickwork half-layers connecting `initial` to `final_word`, or
/// nullopt when the excitation numbers differ.
///
/// Excitations never cross, so the j-th one from the left must end on the
/// j-th occupied site of `final_word`. Layers are simulated greedily: an
/// excitation hops across an active bond when that brings it closer to its
/// target and the other end of the bond is empty; otherwise it stays.
inline std::optional<unsigned> causal_min_half_layers(Bitstring initial, Bitstring final_word,
                                                      LayerOrder order = LayerOrder::EvenFirst) {
    if (initial.n != final_word.n) {
        throw InvalidArgument("bitstrings must have equal length");
    }
    if (initial.popcount() != final_word.popcount()) {
        return std::nullopt;
    }
    const unsigned n = initial.n;
    std::vector<unsigned> pos, target;
    for (unsigned i = 0; i < n; i++) {
        if (initial.site(i)) {
            pos.push_back(i);
        }
        if (final_word.site(i)) {
            target.push_back(i);
        }
    }
    std::vector<bool> occupied(n);
    for (unsigned p : pos) {
        occupied[p] = true;
    }
    auto done = [&] { return pos == target; };
    unsigned layers = 0;
    // Every layer moves at least one unfinished excitation, so this bound is
    // never reached; it only guards the loop.
    const unsigned limit = 4 * n * (n + 1) + 4;
    while (!done()) {
        if (layers == limit) {
            throw InvalidArgument("causal filter failed to converge");
        }
        const unsigned parity = layer_parity(order, layers);
        std::vector<bool> next = occupied;
        for (std::size_t j = 0; j < pos.size(); j++) {
            const unsigned x = pos[j];
            if (target[j] > x && x % 2 == parity && x + 1 < n && !occupied[x + 1]) {
                next[x] = false;
                next[x + 1] = true;
                pos[j] = x + 1;
            } else if (target[j] < x && (x - 1) % 2 == parity && !occupied[x - 1]) {
                next[x] = false;
                next[x - 1] = true;
                pos[j] = x - 1;
            }
        }
        occupied = std::move(next);
        layers++;
    }
    return layers;
}

enum class PostselectMode { NumberOnly, Causal };

inline const char *postselect_name(PostselectMode m) {
    return m == PostselectMode::NumberOnly ? "number" : "causal";
}

/// Keeps a measured word when it conserves the excitation number and, in
/// causal mode, when it is reachable from `initial` within 2t half-layers.
inline bool postselect(Bitstring initial, Bitstring measured, unsigned cycles, PostselectMode mode,
                       LayerOrder order = LayerOrder::EvenFirst) {
    if (initial.popcount() != measured.popcount()) {
        return false;
    }
    if (mode == PostselectMode::NumberOnly) {
        return true;
    }
    auto need = causal_min_half_layers(initial, measured, order);
    return need && *need <= 2 * cycles;
}

/// One random circuit: per-gate angles and the Z angles in the gaps between
/// consecutive half-layers.
struct CircuitRealization {
    /// gates[layer][bond]; bonds of the inactive parity keep nominal values.
    std::vector<std::vector<FSimParams>> gates;
    /// z_angles[gap][site] for the 2t - 1 gaps between half-layers.
    std::vector<std::vector<double>> z_angles;
};

inline CircuitRealization disorder_and_dephasing(const ChainConfig &chain, const NoiseConfig &noise,
                                                 StreamRng &rng) {
    const unsigned n = chain.n_qubits;
    const unsigned half_layers = 2 * chain.cycles;
    CircuitRealization r;
    r.gates.assign(half_layers, std::vector<FSimParams>(n > 0 ? n - 1 : 0, chain.params));
    for (unsigned l = 0; l < half_layers; l++) {
        const unsigned parity = layer_parity(chain.layer_order, l);
        for (unsigned b = parity; b + 1 < n; b += 2) {
            if (noise.angle_jitter_sd > 0) {
                double theta = chain.params.theta() + noise.angle_jitter_sd * rng.normal();
                double phi = chain.params.phi() + noise.angle_jitter_sd * rng.normal();
                r.gates[l][b] = FSimParams(theta, phi, chain.params.convention());
            }
        }
    }
    r.z_angles.assign(half_layers > 0 ? half_layers - 1 : 0, std::vector<double>(n, 0.0));
    if (noise.dephasing_sd > 0) {
        for (auto &gap : r.z_angles) {
            for (auto &a : gap) {
                a = noise.dephasing_sd * rng.normal();
            }
        }
    }
    return r;
}

/// Samples a basis word from |amplitude|^2 by inverse CDF.
inline Bitstring measure(const SectorState &state, StreamRng &rng) {
    auto amps = state.amplitudes();
    double total = 0;
    for (const auto &a : amps) {
        total += std::norm(a);
    }
    const double u = rng.uniform() * total;
    double acc = 0;
    for (std::size_t i = 0; i < amps.size(); i++) {
        acc += std::norm(amps[i]);
        if (u < acc) {
            return state.word(i);
        }
    }
    // Rounding left u at the very top: return the last populated word.
    for (std::size_t i = amps.size(); i-- > 0;) {
        if (std::norm(amps[i]) > 0) {
            return state.word(i);
        }
    }
    return state.word(amps.size() - 1);
}

/// One noisy shot of a t-cycle circuit on the full chain.
///
/// The 2t central qubits evolve as a trajectory (gates with disorder, Z
/// dephasing between half-layers, damping after every half-layer). Outer
/// qubits carry no gates that matter for transport and only decay. Returns the
/// read-out word of the whole chain.
inline Bitstring noisy_shot(Bitstring initial, const ChainConfig &chain, const NoiseConfig &noise, StreamRng &rng) {
    const unsigned n = chain.n_qubits;
    const unsigned t = chain.cycles;
    if (initial.n != n) {
        throw InvalidArgument("initial word length does not match the chain");
    }
    if (2 * t > n) {
        throw UnderResolved("chain too short for the requested cycles");
    }
    const unsigned offset = n / 2 - t;
    ChainConfig window{2 * t, t, chain.params, chain.layer_order};
    if (offset % 2 == 1) {
        window.layer_order = flipped(chain.layer_order);
    }
    Bitstring out = initial;
    if (offset > 0) {
        Bitstring left = damp_bits(initial.window(0, offset), t, noise.t1_cycles, rng);
        Bitstring right = damp_bits(initial.window(n - offset, offset), t, noise.t1_cycles, rng);
        out.set_window(0, left);
        out.set_window(n - offset, right);
    }
    if (t > 0) {
        CircuitRealization circuit = disorder_and_dephasing(window, noise, rng);
        const double gamma = decay_probability(0.5, noise.t1_cycles);
        SectorState state(initial.window(offset, 2 * t));
        for (unsigned l = 0; l < 2 * t; l++) {
            if (l > 0 && noise.dephasing_sd > 0) {
                apply_z_phases(state, circuit.z_angles[l - 1]);
            }
            const unsigned parity = layer_parity(window.layer_order, l);
            for (unsigned b = parity; b + 1 < 2 * t; b += 2) {
                apply_fsim(state, b, circuit.gates[l][b]);
            }
            damp_qubits(state, gamma, rng);
        }
        out.set_window(offset, measure(state, rng));
    }
    return readout_flip(out, noise, rng);
}

}  // namespace fcs
