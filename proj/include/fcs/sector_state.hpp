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
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fcs/bitstring.hpp"
#include "fcs/error.hpp"

namespace fcs {

using Complex = std::complex<double>;

/// Where the conditional phase of the fSim gate lives.
///   TailPhase:  diag(1, [[c, is], [is, c]], e^{-i phi})
///   SplitPhase: diag(e^{-i phi/2}, [[c, is], [is, c]], e^{-i phi/2})
enum class Convention { TailPhase, SplitPhase };

/// Which bond parity acts first within a cycle. Bond b couples sites (b, b+1),
/// 0-indexed from the left end; EvenFirst applies b = 0, 2, 4, ... first.
enum class LayerOrder { EvenFirst, OddFirst };

constexpr LayerOrder flipped(LayerOrder order) {
    return order == LayerOrder::EvenFirst ? LayerOrder::OddFirst : LayerOrder::EvenFirst;
}
/// Parity of the bonds active in half-layer `layer` (0-based, counted from the
/// start of the circuit).
constexpr unsigned layer_parity(LayerOrder order, unsigned layer) {
    return (layer + (order == LayerOrder::EvenFirst ? 0u : 1u)) & 1u;
}

/// Reduces an angle to (-pi, pi].
inline double reduce_angle(double angle) {
    constexpr double two_pi = 2 * std::numbers::pi;
    double r = std::remainder(angle, two_pi);
    if (r <= -std::numbers::pi) {
        r += two_pi;
    }
    return r;
}

class FSimParams {
   public:
    FSimParams() = default;
    FSimParams(double theta, double phi, Convention convention = Convention::TailPhase)
        : convention_(convention) {
        if (!std::isfinite(theta) || !std::isfinite(phi)) {
            throw InvalidArgument("fSim angles must be finite");
        }
        theta_ = reduce_angle(theta);
        phi_ = reduce_angle(phi);
    }
    /// Angles given in units of pi, e.g. from_pi(0.4, 0.8).
    static FSimParams from_pi(double theta_over_pi, double phi_over_pi, Convention c = Convention::TailPhase) {
        return {theta_over_pi * std::numbers::pi, phi_over_pi * std::numbers::pi, c};
    }

    double theta() const {
        return theta_;
    }
    double phi() const {
        return phi_;
    }
    Convention convention() const {
        return convention_;
    }

    /// sin(phi/2) / sin(theta). Both sines are taken on the fold a -> pi - a
    /// into [pi/2, pi], so theta and pi - theta give the same double.
    double anisotropy() const {
        double s = folded_sin(theta_);
        if (s == 0) {
            throw UndefinedAnisotropy("sin(theta) = 0, anisotropy is undefined");
        }
        return folded_sin(phi_ / 2) / s;
    }

    FSimParams with_convention(Convention c) const {
        FSimParams p = *this;
        p.convention_ = c;
        return p;
    }

   private:
    static double folded_sin(double a) {
        const double mag = std::abs(a);
        if (mag == 0 || mag == std::numbers::pi) {
            return 0;
        }
        const double f = mag >= std::numbers::pi / 2 ? mag : std::numbers::pi - mag;
        return std::copysign(std::sin(f), a);
    }

    double theta_ = 0;
    double phi_ = 0;
    Convention convention_ = Convention::TailPhase;
};

namespace detail {

struct BinomialTable {
    std::array<std::array<std::uint64_t, 65>, 65> c{};
    constexpr BinomialTable() {
        for (unsigned n = 0; n <= 64; n++) {
            c[n][0] = 1;
            for (unsigned k = 1; k <= n; k++) {
                c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0);
            }
        }
    }
};

inline constexpr BinomialTable binomials{};

}  // namespace detail

constexpr std::uint64_t binomial(unsigned n, unsigned k) {
    return k > n ? 0 : detail::binomials.c[n][k];
}

/// Fixed Hamming-weight sector of an n-site chain, ordered lexicographically.
///
/// The rank of a word is its combinadic value sum_j C(p_j, j), with p_1 < p_2 <
/// ... the bit positions of its ones (position 0 is the rightmost site). This
/// order coincides with integer order of the words, so unrank is increasing.
class SectorBasis {
   public:
    SectorBasis(unsigned n_sites, unsigned n_excitations) : n_(n_sites), k_(n_excitations) {
        if (n_sites > Bitstring::max_sites || n_excitations > n_sites) {
            throw InvalidArgument("invalid sector (n=" + std::to_string(n_sites) + ", k=" +
                                  std::to_string(n_excitations) + ")");
        }
        dim_ = binomial(n_, k_);
        if (dim_ > (std::uint64_t{1} << 31)) {
            throw CapExceeded("sector dimension " + std::to_string(dim_) + " is too large to store");
        }
        tables_ = std::make_unique<TableCache>(n_ >= 2 ? n_ - 1 : 0);
        words_.reserve(dim_);
        if (k_ == 0) {
            words_.push_back(0);
            return;
        }
        // Gosper's hack walks the words in increasing order.
        std::uint64_t w = Bitstring::mask(k_);
        for (std::uint64_t i = 0; i < dim_; i++) {
            words_.push_back(w);
            if (i + 1 == dim_) {
                break;
            }
            std::uint64_t c = w & (~w + 1);
            std::uint64_t r = w + c;
            w = (((r ^ w) >> 2) / c) | r;
        }
    }

    /// Shared, cached basis for (n, k). Safe to call from several threads.
    static std::shared_ptr<const SectorBasis> shared(unsigned n_sites, unsigned n_excitations) {
        static std::mutex mutex;
        static std::map<std::pair<unsigned, unsigned>, std::shared_ptr<const SectorBasis>> cache;
        std::lock_guard lock(mutex);
        auto &slot = cache[{n_sites, n_excitations}];
        if (!slot) {
            slot = std::make_shared<const SectorBasis>(n_sites, n_excitations);
        }
        return slot;
    }

    unsigned n_sites() const {
        return n_;
    }
    unsigned n_excitations() const {
        return k_;
    }
    std::size_t dimension() const {
        return static_cast<std::size_t>(dim_);
    }
    std::span<const std::uint64_t> words() const {
        return words_;
    }

    std::size_t rank(Bitstring b) const {
        if (b.n != n_) {
            throw SectorMismatch("word has " + std::to_string(b.n) + " sites, sector has " + std::to_string(n_));
        }
        if (b.popcount() != k_) {
            throw SectorMismatch("word " + b.str() + " has popcount " + std::to_string(b.popcount()) +
                                 ", sector has " + std::to_string(k_));
        }
        return rank_word(b.word);
    }

    /// Rank of a raw word already known to lie in the sector.
    std::size_t rank_word(std::uint64_t w) const {
        std::uint64_t r = 0;
        unsigned j = 0;
        while (w) {
            unsigned p = static_cast<unsigned>(std::countr_zero(w));
            r += binomial(p, ++j);
            w &= w - 1;
        }
        return static_cast<std::size_t>(r);
    }

    /// Index lists for one bond, grouped by the occupation of its two sites.
    struct BondTable {
        std::vector<std::uint32_t> hop_from;  // words |..01..>
        std::vector<std::uint32_t> hop_to;    // matching |..10..>
        std::vector<std::uint32_t> both;      // |..11..>
        std::vector<std::uint32_t> neither;   // |..00..>
    };

    /// Largest sector for which bond tables are cached; bigger sectors use the
    /// table-free sweep kernel.
    static constexpr std::size_t bond_table_limit = std::size_t{1} << 21;

    bool has_bond_tables() const {
        return dim_ <= bond_table_limit && n_ >= 2;
    }

    /// Lazily built, thread-safe. Requires has_bond_tables().
    const BondTable &bond_table(unsigned bond) const {
        std::call_once(tables_->once[bond], [&] { tables_->tables[bond] = build_bond_table(bond); });
        return tables_->tables[bond];
    }

    Bitstring unrank(std::size_t index) const {
        if (index >= dim_) {
            throw OutOfRange("index " + std::to_string(index) + " outside sector of dimension " +
                             std::to_string(dim_));
        }
        return {words_[index], n_};
    }

   private:
    BondTable build_bond_table(unsigned bond) const {
        BondTable t;
        const unsigned lo = n_ - 2 - bond;
        const std::uint64_t below = Bitstring::mask(lo + 1);
        for (std::size_t i = 0; i < words_.size(); i++) {
            const std::uint64_t w = words_[i];
            switch ((w >> lo) & 3u) {
                case 1u: {
                    unsigned j = static_cast<unsigned>(std::popcount(w & below));
                    t.hop_from.push_back(static_cast<std::uint32_t>(i));
                    t.hop_to.push_back(static_cast<std::uint32_t>(i + binomial(lo, j - 1)));
                    break;
                }
                case 3u:
                    t.both.push_back(static_cast<std::uint32_t>(i));
                    break;
                case 0u:
                    t.neither.push_back(static_cast<std::uint32_t>(i));
                    break;
                default:
                    break;
            }
        }
        return t;
    }

    struct TableCache {
        explicit TableCache(unsigned bonds) : once(bonds), tables(bonds) {
        }
        std::vector<std::once_flag> once;
        std::vector<BondTable> tables;
    };

    unsigned n_;
    unsigned k_;
    std::uint64_t dim_;
    std::vector<std::uint64_t> words_;
    std::unique_ptr<TableCache> tables_;
};

/// Pure state confined to one fixed-excitation-number sector.
class SectorState {
   public:
    /// Computational basis state |b>.
    explicit SectorState(Bitstring b)
        : basis_(SectorBasis::shared(b.n, b.popcount())), amps_(basis_->dimension()) {
        amps_[basis_->rank(b)] = 1.0;
    }
    SectorState(std::shared_ptr<const SectorBasis> basis, std::vector<Complex> amplitudes)
        : basis_(std::move(basis)), amps_(std::move(amplitudes)) {
        if (amps_.size() != basis_->dimension()) {
            throw InvalidArgument("amplitude vector length does not match sector dimension");
        }
    }

    const SectorBasis &basis() const {
        return *basis_;
    }
    const std::shared_ptr<const SectorBasis> &basis_ptr() const {
        return basis_;
    }
    unsigned n_sites() const {
        return basis_->n_sites();
    }
    unsigned n_excitations() const {
        return basis_->n_excitations();
    }
    std::size_t dimension() const {
        return amps_.size();
    }
    std::span<const Complex> amplitudes() const {
        return amps_;
    }
    std::span<Complex> amplitudes() {
        return amps_;
    }
    Bitstring word(std::size_t index) const {
        return {basis_->words()[index], basis_->n_sites()};
    }

    double norm2() const {
        double s = 0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }
    void normalize() {
        double s = std::sqrt(norm2());
        if (s == 0) {
            throw InvalidArgument("cannot normalize a zero state");
        }
        for (auto &a : amps_) {
            a /= s;
        }
    }

    /// <n_site>.
    double occupation(unsigned site) const {
        const std::uint64_t bit = std::uint64_t{1} << (n_sites() - 1 - site);
        auto words = basis_->words();
        double s = 0;
        for (std::size_t i = 0; i < amps_.size(); i++) {
            if (words[i] & bit) {
                s += std::norm(amps_[i]);
            }
        }
        return s;
    }

   private:
    std::shared_ptr<const SectorBasis> basis_;
    std::vector<Complex> amps_;
};

namespace detail {

inline void check_bond(const SectorState &state, unsigned bond) {
    const unsigned n = state.n_sites();
    if (n < 2 || bond >= n - 1) {
        throw OutOfRange("bond " + std::to_string(bond) + " out of range for " + std::to_string(n) + " sites");
    }
}

}  // namespace detail

/// Table-free fSim kernel: one pass over the sector, partners found by
/// combinadic arithmetic. Used directly for sectors too large to tabulate.
inline void apply_fsim_sweep(SectorState &state, unsigned bond, const FSimParams &params) {
    detail::check_bond(state, bond);
    const unsigned n = state.n_sites();
    // Site `bond` sits on bit `hi`, site `bond + 1` on bit `lo`.
    const unsigned lo = n - 2 - bond;
    const std::uint64_t below = Bitstring::mask(lo + 1);
    const double c = std::cos(params.theta());
    const Complex is{0, std::sin(params.theta())};
    const bool split = params.convention() == Convention::SplitPhase;
    const Complex phase11 = std::polar(1.0, split ? -params.phi() / 2 : -params.phi());
    const Complex phase00 = split ? std::polar(1.0, -params.phi() / 2) : Complex{1};

    auto words = state.basis().words();
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); i++) {
        const std::uint64_t w = words[i];
        switch ((w >> lo) & 3u) {
            case 1u: {
                // |..01..>: moving the one from bit lo to lo+1 raises the rank by
                // C(lo, j-1), j being the index of that one counted from the right.
                unsigned j = static_cast<unsigned>(std::popcount(w & below));
                std::size_t partner = i + static_cast<std::size_t>(binomial(lo, j - 1));
                Complex a01 = amps[i];
                Complex a10 = amps[partner];
                amps[i] = c * a01 + is * a10;
                amps[partner] = is * a01 + c * a10;
                break;
            }
            case 3u:
                amps[i] *= phase11;
                break;
            case 0u:
                if (split) {
                    amps[i] *= phase00;
                }
                break;
            default:
                break;
        }
    }
}

/// Applies fSim(theta, phi) on sites (bond, bond + 1) in place.
inline void apply_fsim(SectorState &state, unsigned bond, const FSimParams &params) {
    const SectorBasis &basis = state.basis();
    if (!basis.has_bond_tables()) {
        apply_fsim_sweep(state, bond, params);
        return;
    }
    detail::check_bond(state, bond);
    const auto &table = basis.bond_table(bond);
    const double c = std::cos(params.theta());
    const double s = std::sin(params.theta());
    const bool split = params.convention() == Convention::SplitPhase;
    const Complex phase11 = std::polar(1.0, split ? -params.phi() / 2 : -params.phi());
    Complex *amps = state.amplitudes().data();
    const std::size_t pairs = table.hop_from.size();
    for (std::size_t p = 0; p < pairs; p++) {
        Complex &x = amps[table.hop_from[p]];
        Complex &y = amps[table.hop_to[p]];
        const Complex a01 = x;
        const Complex a10 = y;
        // c*a + i*s*b without complex multiplies.
        x = {c * a01.real() - s * a10.imag(), c * a01.imag() + s * a10.real()};
        y = {c * a10.real() - s * a01.imag(), c * a10.imag() + s * a01.real()};
    }
    if (params.phi() != 0 || split) {
        for (std::uint32_t i : table.both) {
            amps[i] *= phase11;
        }
        if (split) {
            for (std::uint32_t i : table.neither) {
                amps[i] *= phase11;
            }
        }
    }
}

/// One half-layer: fSim on every bond of the given parity.
inline void apply_layer(SectorState &state, unsigned parity, const FSimParams &params) {
    for (unsigned b = parity; b + 1 < state.n_sites(); b += 2) {
        apply_fsim(state, b, params);
    }
}

/// One Floquet cycle: both bond parities, in the given order.
inline void apply_cycle(SectorState &state, const FSimParams &params, LayerOrder order = LayerOrder::EvenFirst) {
    apply_layer(state, layer_parity(order, 0), params);
    apply_layer(state, layer_parity(order, 1), params);
}

/// Multiplies each basis component by exp(-i sum_s angle_s n_s).
inline void apply_z_phases(SectorState &state, std::span<const double> angles) {
    const unsigned n = state.n_sites();
    if (angles.size() != n) {
        throw InvalidArgument("need one Z angle per site");
    }
    auto words = state.basis().words();
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); i++) {
        double total = 0;
        for (unsigned s = 0; s < n; s++) {
            if ((words[i] >> (n - 1 - s)) & 1u) {
                total += angles[s];
            }
        }
        if (total != 0) {
            amps[i] *= std::polar(1.0, -total);
        }
    }
}

/// Scales every component with site occupied by `factor` (stays in the sector).
inline void scale_occupied(SectorState &state, unsigned site, double factor) {
    const std::uint64_t bit = std::uint64_t{1} << (state.n_sites() - 1 - site);
    auto words = state.basis().words();
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); i++) {
        if (words[i] & bit) {
            amps[i] *= factor;
        }
    }
}

/// sigma^- on `site`: maps the sector k state to an unnormalized sector k-1 state.
inline SectorState lower(const SectorState &state, unsigned site) {
    if (state.n_excitations() == 0) {
        throw SectorMismatch("cannot lower the empty sector");
    }
    auto target = SectorBasis::shared(state.n_sites(), state.n_excitations() - 1);
    std::vector<Complex> out(target->dimension());
    const std::uint64_t bit = std::uint64_t{1} << (state.n_sites() - 1 - site);
    auto words = state.basis().words();
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); i++) {
        if (words[i] & bit) {
            out[target->rank_word(words[i] & ~bit)] = amps[i];
        }
    }
    return SectorState(std::move(target), std::move(out));
}

}  // namespace fcs
