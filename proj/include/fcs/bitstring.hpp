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

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "fcs/error.hpp"

namespace fcs {

/// Computational-basis word on an open chain of up to 64 sites.
///
/// Site 0 is the left end of the chain and is stored in the most significant
/// of the `n` used bits, so the integer order of `word` is the lexicographic
/// order of the printed string ("0011" < "0101" < ... < "1100").
struct Bitstring {
    std::uint64_t word = 0;
    unsigned n = 0;

    static constexpr unsigned max_sites = 64;

    static constexpr std::uint64_t mask(unsigned width) {
        return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
    }

    constexpr unsigned bit_of_site(unsigned site) const {
        return n - 1 - site;
    }
    constexpr bool site(unsigned i) const {
        return (word >> bit_of_site(i)) & 1u;
    }
    constexpr void set_site(unsigned i, bool value) {
        auto b = std::uint64_t{1} << bit_of_site(i);
        word = value ? (word | b) : (word & ~b);
    }
    constexpr void flip_site(unsigned i) {
        word ^= std::uint64_t{1} << bit_of_site(i);
    }

    constexpr unsigned popcount() const {
        return static_cast<unsigned>(std::popcount(word));
    }
    /// Number of ones on sites n/2 ... n-1.
    constexpr unsigned right_half_ones() const {
        return static_cast<unsigned>(std::popcount(word & mask(n / 2)));
    }
    constexpr unsigned left_half_ones() const {
        return popcount() - right_half_ones();
    }
    constexpr Bitstring complement() const {
        return {~word & mask(n), n};
    }
    /// Mirror image: site i moves to site n - 1 - i.
    constexpr Bitstring reversed() const {
        std::uint64_t r = 0;
        for (unsigned i = 0; i < n; i++) {
            r = (r << 1) | ((word >> i) & 1u);
        }
        return {r, n};
    }

    /// Sites [offset, offset + width) as a word of length `width`.
    constexpr Bitstring window(unsigned offset, unsigned width) const {
        return {(word >> (n - offset - width)) & mask(width), width};
    }
    /// Overwrites sites [offset, offset + sub.n) with `sub`.
    constexpr void set_window(unsigned offset, Bitstring sub) {
        unsigned shift = n - offset - sub.n;
        word = (word & ~(mask(sub.n) << shift)) | (sub.word << shift);
    }

    static Bitstring parse(std::string_view text) {
        if (text.size() > max_sites) {
            throw InvalidArgument("bitstring longer than 64 sites");
        }
        Bitstring b{0, static_cast<unsigned>(text.size())};
        for (char c : text) {
            if (c != '0' && c != '1') {
                throw InvalidArgument("bitstring '" + std::string(text) + "' contains a non-binary character");
            }
            b.word = (b.word << 1) | static_cast<std::uint64_t>(c == '1');
        }
        return b;
    }

    std::string str() const {
        std::string out(n, '0');
        for (unsigned i = 0; i < n; i++) {
            if (site(i)) {
                out[i] = '1';
            }
        }
        return out;
    }

    friend constexpr bool operator==(const Bitstring &, const Bitstring &) = default;
};

}  // namespace fcs
