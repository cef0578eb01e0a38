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

// Dense 2^n reference simulator. Site i is bit i of the index (the opposite
// of the library's layout), gates are explicit 4x4 matrices, and the
// ensemble average runs over every initial index.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

namespace fcs::oracle {

using cd = std::complex<double>;
using Gate = std::array<std::array<cd, 4>, 4>;

/// Basis order |a b> -> 2a + b for sites (left, right).
inline Gate fsim_matrix(double theta, double phi, bool split) {
    Gate g{};
    const cd c = std::cos(theta), is = cd(0, std::sin(theta));
    g[0][0] = split ? std::exp(cd(0, -phi / 2)) : cd(1);
    g[1][1] = c;
    g[1][2] = is;
    g[2][1] = is;
    g[2][2] = c;
    g[3][3] = split ? std::exp(cd(0, -phi / 2)) : std::exp(cd(0, -phi));
    return g;
}

inline void apply_gate(std::vector<cd> &psi, unsigned n, unsigned left, const Gate &g) {
    const std::size_t bl = std::size_t{1} << left, br = std::size_t{1} << (left + 1);
    for (std::size_t x = 0; x < (std::size_t{1} << n); x++) {
        if ((x & bl) || (x & br)) {
            continue;
        }
        std::array<std::size_t, 4> idx{x, x | br, x | bl, x | bl | br};  // |00>,|01>,|10>,|11>
        std::array<cd, 4> in{psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]};
        for (int r = 0; r < 4; r++) {
            cd acc = 0;
            for (int c = 0; c < 4; c++) {
                acc += g[r][c] * in[c];
            }
            psi[idx[r]] = acc;
        }
    }
}

/// Applies t cycles; first_parity is the parity of the bonds acting first.
inline void evolve(std::vector<cd> &psi, unsigned n, unsigned cycles, const Gate &g, unsigned first_parity) {
    for (unsigned t = 0; t < cycles; t++) {
        for (unsigned layer = 0; layer < 2; layer++) {
            const unsigned parity = layer == 0 ? first_parity : 1 - first_parity;
            for (unsigned b = parity; b + 1 < n; b += 2) {
                apply_gate(psi, n, b, g);
            }
        }
    }
}

inline int ones_right(std::size_t x, unsigned n) {
    int c = 0;
    for (unsigned i = n / 2; i < n; i++) {
        c += (x >> i) & 1u;
    }
    return c;
}

/// Ensemble probability of index x (site i = bit i).
inline double weight(std::size_t x, unsigned n, double mu) {
    const double p = std::isinf(mu) ? 1.0 : std::exp(mu) / (std::exp(mu) + std::exp(-mu));
    double w = 1;
    for (unsigned i = 0; i < n; i++) {
        const bool one = (x >> i) & 1u;
        const bool favoured = i < n / 2 ? one : !one;
        w *= favoured ? p : 1 - p;
    }
    return w;
}

/// P(M) over the whole ensemble; map from M to probability.
inline std::map<int, double> distribution(unsigned n, unsigned cycles, double theta, double phi, double mu,
                                          bool split = false, unsigned first_parity = 0) {
    const Gate g = fsim_matrix(theta, phi, split);
    std::map<int, double> out;
    const std::size_t dim = std::size_t{1} << n;
    for (std::size_t x = 0; x < dim; x++) {
        const double w = weight(x, n, mu);
        if (w == 0) {
            continue;
        }
        std::vector<cd> psi(dim, 0.0);
        psi[x] = 1;
        evolve(psi, n, cycles, g, first_parity);
        for (std::size_t y = 0; y < dim; y++) {
            const double p = std::norm(psi[y]);
            if (p > 0) {
                out[2 * (ones_right(y, n) - ones_right(x, n))] += w * p;
            }
        }
    }
    return out;
}

}  // namespace fcs::oracle
