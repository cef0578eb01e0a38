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
#include <span>
#include <string>
#include <vector>

#include "fcs/bitstring.hpp"
#include "fcs/circuit_model.hpp"
#include "fcs/error.hpp"
#include "fcs/parallel.hpp"
#include "fcs/sector_state.hpp"

namespace fcs {

/// Product distribution over initial words: every left-half site is 1 with
/// probability p, every right-half site is 0 with probability p, where
/// p = e^mu / (e^mu + e^-mu). mu = +infinity is the pure domain wall.
struct ImbalanceEnsemble {
    double mu = 0;
    unsigned n_qubits = 0;

    ImbalanceEnsemble(double mu_, unsigned n_qubits_) : mu(mu_), n_qubits(n_qubits_) {
        if (std::isnan(mu) || mu < 0) {
            throw InvalidArgument("mu must lie in [0, inf]");
        }
        if (n_qubits % 2 != 0) {
            throw InvalidArgument("ensemble needs an even number of qubits");
        }
    }

    double p() const {
        return std::isinf(mu) ? 1.0 : 1.0 / (1.0 + std::exp(-2 * mu));
    }

    /// Probability of an initial word with `left_ones` ones among the `half`
    /// left sites and `right_ones` ones among the `half` right sites.
    double class_weight(unsigned half, unsigned left_ones, unsigned right_ones) const {
        double pp = p();
        double q = 1 - pp;
        return std::pow(pp, left_ones) * std::pow(q, half - left_ones) * std::pow(q, right_ones) *
               std::pow(pp, half - right_ones);
    }

    double probability(Bitstring b) const {
        if (b.n != n_qubits) {
            throw InvalidArgument("word length does not match ensemble");
        }
        return class_weight(n_qubits / 2, b.left_half_ones(), b.right_half_ones());
    }
};

/// Probability mass over transferred magnetization M in {-2t, -2t+2, ..., 2t}.
class TransferDistribution {
   public:
    TransferDistribution() : TransferDistribution(0) {
    }
    explicit TransferDistribution(unsigned cycles) : cycles_(cycles), mass_(2 * cycles + 1, 0.0) {
    }
    static TransferDistribution delta(unsigned cycles, int m = 0) {
        TransferDistribution d(cycles);
        d.at(m) = 1;
        return d;
    }

    unsigned cycles() const {
        return cycles_;
    }
    int max_magnetization() const {
        return 2 * static_cast<int>(cycles_);
    }
    std::size_t size() const {
        return mass_.size();
    }
    /// M represented by slot i of masses().
    int magnetization(std::size_t i) const {
        return 2 * (static_cast<int>(i) - static_cast<int>(cycles_));
    }
    std::span<const double> masses() const {
        return mass_;
    }
    std::span<double> masses() {
        return mass_;
    }

    /// P(M); zero for odd M or |M| > 2t.
    double operator()(int m) const {
        if (m % 2 != 0 || std::abs(m) > max_magnetization()) {
            return 0;
        }
        return mass_[static_cast<std::size_t>(m / 2 + static_cast<int>(cycles_))];
    }
    double &at(int m) {
        if (m % 2 != 0 || std::abs(m) > max_magnetization()) {
            throw OutOfRange("M=" + std::to_string(m) + " outside the support of a t=" + std::to_string(cycles_) +
                             " distribution");
        }
        return mass_[static_cast<std::size_t>(m / 2 + static_cast<int>(cycles_))];
    }

    double total() const {
        double s = 0;
        for (double v : mass_) {
            s += v;
        }
        return s;
    }

    friend bool operator==(const TransferDistribution &, const TransferDistribution &) = default;

   private:
    unsigned cycles_;
    std::vector<double> mass_;
};

/// M = 2 (N_R(final) - N_R(initial)), N_R counting ones on the right half.
inline int transferred_magnetization(Bitstring initial, Bitstring final_word) {
    if (initial.n != final_word.n || initial.n % 2 != 0) {
        throw InvalidArgument("bitstrings must have equal even length");
    }
    if (initial.popcount() != final_word.popcount()) {
        throw ConservationViolation(initial.str() + " -> " + final_word.str() + " changes the excitation number");
    }
    return 2 * (static_cast<int>(final_word.right_half_ones()) - static_cast<int>(initial.right_half_ones()));
}

/// Restricts a chain to the 2t central sites that can influence transport
/// across the cut. Bond parities stay absolute: when the window starts at an
/// odd site the layer order flips, so the window circuit is exactly the
/// central sub-circuit of the full chain.
inline ChainConfig lightcone_reduce(const ChainConfig &config) {
    if (!config.resolves_lightcone()) {
        throw UnderResolved(std::to_string(config.n_qubits) + " qubits cannot resolve " +
                            std::to_string(config.cycles) + " cycles (need at least " +
                            std::to_string(2 * config.cycles) + ")");
    }
    config.validate();
    ChainConfig out = config;
    out.n_qubits = 2 * config.cycles;
    unsigned offset = config.n_qubits / 2 - config.cycles;
    if (offset % 2 == 1) {
        out.layer_order = flipped(config.layer_order);
    }
    return out;
}

struct ExactOptions {
    unsigned threads = 1;
    /// Largest chain enumerated exhaustively; beyond it use the sampler.
    unsigned site_cap = 20;
    /// Evolve the complement of over-full initial words and complement the
    /// outcome back (the experiment's T1-avoidance relabeling).
    bool relabel = false;
    /// Evolve only one word of each mirror pair and fill in the partner by
    /// reflection (the circuit is mirror symmetric for even n). Halves the work.
    bool use_mirror = true;
};

/// Exhaustive enumeration of every initial word on an n-site chain.
///
/// The ensemble weight of an initial word depends only on (a, c), its number
/// of ones on the left and right half, so the enumeration stores
///   Q[t][a][c][r] = sum over words of class (a, c) of Prob(N_R(final) = r)
/// and P_mu(M) for any mu follows by reweighting the classes. One pass at
/// n = 2 t_max gives every cycle t <= t_max.
class ExactTransferTable {
   public:
    static ExactTransferTable compute(const ChainConfig &config, const ExactOptions &options = {}) {
        config.validate();
        if (config.n_qubits > options.site_cap) {
            throw CapExceeded(std::to_string(config.n_qubits) + " sites exceed the exact enumeration cap of " +
                              std::to_string(options.site_cap) + "; use sampled mode");
        }
        ExactTransferTable table(config.n_qubits, config.cycles);
        const unsigned n = config.n_qubits;
        const unsigned h = n / 2;
        if (n == 0) {
            for (unsigned t = 0; t <= config.cycles; t++) {
                table.slot(t, 0, 0, 0) = 1;
            }
            return table;
        }

        struct Task {
            unsigned k;
            std::size_t begin, end;
        };
        const std::size_t chunk = std::max<std::size_t>(64, (std::size_t{1} << n) / 2048);
        std::vector<Task> tasks;
        for (unsigned k = 0; k <= n; k++) {
            std::size_t dim = binomial(n, k);
            for (std::size_t b = 0; b < dim; b += chunk) {
                tasks.push_back({k, b, std::min(dim, b + chunk)});
            }
        }
        // Per task: local[a][t][r], a ranging over all left counts.
        const std::size_t block = static_cast<std::size_t>(config.cycles + 1) * (h + 1);
        std::vector<std::vector<double>> partial(tasks.size());

        parallel_for(tasks.size(), options.threads, [&](std::size_t ti) {
            const Task &task = tasks[ti];
            auto basis = SectorBasis::shared(n, task.k);
            std::vector<double> local((h + 1) * block, 0.0);
            std::vector<double> by_r(h + 1);
            for (std::size_t idx = task.begin; idx < task.end; idx++) {
                Bitstring initial = basis->unrank(idx);
                const Bitstring mirror = initial.reversed();
                if (options.use_mirror && mirror.word < initial.word) {
                    continue;
                }
                const bool has_partner = options.use_mirror && mirror.word != initial.word;
                const unsigned a = initial.left_half_ones();
                const bool relabeled = options.relabel && initial.popcount() > h;
                SectorState state(relabeled ? initial.complement() : initial);
                auto words = state.basis().words();
                double *out = &local[a * block];
                // The mirror word has left count k - a and ends with k - r ones on the right.
                double *mirror_out = &local[(task.k - a) * block];
                for (unsigned t = 0; t <= config.cycles; t++) {
                    if (t > 0) {
                        apply_cycle(state, config.params, config.layer_order);
                    }
                    std::fill(by_r.begin(), by_r.end(), 0.0);
                    auto amps = state.amplitudes();
                    for (std::size_t i = 0; i < amps.size(); i++) {
                        by_r[static_cast<std::size_t>(std::popcount(words[i] & Bitstring::mask(h)))] +=
                            std::norm(amps[i]);
                    }
                    for (unsigned r = 0; r <= h; r++) {
                        const unsigned rr = relabeled ? h - r : r;
                        out[t * (h + 1) + rr] += by_r[r];
                        if (has_partner && by_r[r] != 0) {
                            mirror_out[t * (h + 1) + (task.k - rr)] += by_r[r];
                        }
                    }
                }
            }
            partial[ti] = std::move(local);
        });

        for (std::size_t ti = 0; ti < tasks.size(); ti++) {
            const unsigned k = tasks[ti].k;
            for (unsigned a = 0; a <= h; a++) {
                if (a > k || k - a > h) {
                    continue;
                }
                const unsigned c = k - a;
                for (unsigned t = 0; t <= config.cycles; t++) {
                    for (unsigned r = 0; r <= h; r++) {
                        table.slot(t, a, c, r) += partial[ti][a * block + t * (h + 1) + r];
                    }
                }
            }
        }
        return table;
    }

    unsigned n_qubits() const {
        return n_;
    }
    unsigned max_cycles() const {
        return t_max_;
    }

    TransferDistribution distribution(double mu, unsigned t) const {
        if (t > t_max_) {
            throw OutOfRange("cycle " + std::to_string(t) + " beyond the enumerated " + std::to_string(t_max_));
        }
        if (n_ < 2 * t) {
            throw UnderResolved("table on " + std::to_string(n_) + " sites cannot resolve cycle " +
                                std::to_string(t));
        }
        ImbalanceEnsemble ens(mu, n_);
        const unsigned h = n_ / 2;
        TransferDistribution d(t);
        for (unsigned a = 0; a <= h; a++) {
            for (unsigned c = 0; c <= h; c++) {
                double w = ens.class_weight(h, a, c);
                if (w == 0) {
                    continue;
                }
                for (unsigned r = 0; r <= h; r++) {
                    double q = slot(t, a, c, r);
                    if (q == 0) {
                        continue;
                    }
                    int m = 2 * (static_cast<int>(r) - static_cast<int>(c));
                    d.at(m) += w * q;
                }
            }
        }
        return d;
    }

   private:
    ExactTransferTable(unsigned n, unsigned t_max)
        : n_(n), t_max_(t_max), data_(static_cast<std::size_t>(t_max + 1) * (n / 2 + 1) * (n / 2 + 1) * (n / 2 + 1)) {
    }
    double &slot(unsigned t, unsigned a, unsigned c, unsigned r) {
        const std::size_t w = n_ / 2 + 1;
        return data_[((static_cast<std::size_t>(t) * w + a) * w + c) * w + r];
    }
    double slot(unsigned t, unsigned a, unsigned c, unsigned r) const {
        return const_cast<ExactTransferTable *>(this)->slot(t, a, c, r);
    }

    unsigned n_;
    unsigned t_max_;
    std::vector<double> data_;
};

/// Exact P(M) at cycle config.cycles for the ensemble, enumerating the chain as
/// given (call lightcone_reduce first for long chains).
inline TransferDistribution exact_distribution(const ImbalanceEnsemble &ens, const ChainConfig &config,
                                               const ExactOptions &options = {}) {
    return ExactTransferTable::compute(config, options).distribution(ens.mu, config.cycles);
}

/// P(M) for t = 0 .. config.cycles from the single initial word 1...10...0.
inline std::vector<TransferDistribution> pure_domain_wall_distributions(const ChainConfig &config) {
    config.validate();
    if (!config.resolves_lightcone()) {
        throw UnderResolved("chain too short for the requested cycles");
    }
    const unsigned n = config.n_qubits;
    const unsigned h = n / 2;
    std::vector<TransferDistribution> out;
    out.reserve(config.cycles + 1);
    out.push_back(TransferDistribution::delta(0));
    if (n == 0) {
        for (unsigned t = 1; t <= config.cycles; t++) {
            out.push_back(TransferDistribution::delta(t));
        }
        return out;
    }
    Bitstring wall{Bitstring::mask(h) << h, n};
    SectorState state(wall);
    auto words = state.basis().words();
    for (unsigned t = 1; t <= config.cycles; t++) {
        apply_cycle(state, config.params, config.layer_order);
        TransferDistribution d(t);
        auto amps = state.amplitudes();
        for (std::size_t i = 0; i < amps.size(); i++) {
            int r = std::popcount(words[i] & Bitstring::mask(h));
            // Words beyond the light cone carry exactly zero amplitude.
            if (r <= static_cast<int>(t)) {
                d.at(2 * r) += std::norm(amps[i]);
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

inline TransferDistribution pure_domain_wall_distribution(const ChainConfig &config) {
    return pure_domain_wall_distributions(config).back();
}

}  // namespace fcs
