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

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcs/ensemble.hpp"
#include "fcs/error.hpp"

namespace fcs {

/// <M^k> for k = 0..4.
using RawPowers = std::array<double, 5>;

/// Raw powers of a distribution. Each +M, -M pair is summed as
/// M^k (P(M) + (-1)^k P(-M)), so odd powers of a symmetric distribution vanish
/// exactly.
inline RawPowers raw_powers(const TransferDistribution &d) {
    RawPowers r{};
    const int t = static_cast<int>(d.cycles());
    r[0] = d(0);
    for (int j = 1; j <= t; j++) {
        const double m = 2.0 * j;
        const double plus = d(2 * j);
        const double minus = d(-2 * j);
        double mk = 1;
        for (int k = 0; k <= 4; k++) {
            r[k] += mk * (k % 2 == 0 ? plus + minus : plus - minus);
            mk *= m;
        }
    }
    return r;
}

struct CentralMoments {
    double mean = 0;
    double alpha2 = 0;
    double alpha3 = 0;
    double alpha4 = 0;
};

/// alpha_k = sum_i C(k, i) <M^(k-i)> (-<M>)^i, from powers normalized by <M^0>.
inline CentralMoments central_moments(const RawPowers &raw) {
    if (!(raw[0] > 0)) {
        throw InsufficientData("empty distribution");
    }
    const double m1 = raw[1] / raw[0], m2 = raw[2] / raw[0], m3 = raw[3] / raw[0], m4 = raw[4] / raw[0];
    CentralMoments c;
    c.mean = m1;
    c.alpha2 = m2 - m1 * m1;
    c.alpha3 = m3 - 3 * m2 * m1 + 2 * m1 * m1 * m1;
    c.alpha4 = m4 - 4 * m3 * m1 + 6 * m2 * m1 * m1 - 3 * m1 * m1 * m1 * m1;
    return c;
}

inline CentralMoments central_moments(const TransferDistribution &d) {
    return central_moments(raw_powers(d));
}

struct SkewKurt {
    double skewness = 0;
    double kurtosis = 0;  // excess kurtosis
};

inline SkewKurt skew_kurt(const CentralMoments &c) {
    if (!(c.alpha2 > 0)) {
        throw UndefinedMoments("skewness and kurtosis need a positive variance");
    }
    return {c.alpha3 / std::pow(c.alpha2, 1.5), c.alpha4 / (c.alpha2 * c.alpha2) - 3};
}

/// Mean, variance, skewness, excess kurtosis. Skewness and kurtosis are NaN
/// when the variance vanishes.
struct Moments {
    double mean = 0;
    double variance = 0;
    double skewness = std::numeric_limits<double>::quiet_NaN();
    double kurtosis = std::numeric_limits<double>::quiet_NaN();

    double operator[](int i) const {
        return i == 0 ? mean : i == 1 ? variance : i == 2 ? skewness : kurtosis;
    }
    double &operator[](int i) {
        return i == 0 ? mean : i == 1 ? variance : i == 2 ? skewness : kurtosis;
    }
};

inline Moments summarize(const CentralMoments &c) {
    Moments m;
    m.mean = c.mean;
    m.variance = c.alpha2;
    if (c.alpha2 > 0) {
        auto sk = skew_kurt(c);
        m.skewness = sk.skewness;
        m.kurtosis = sk.kurtosis;
    }
    return m;
}

inline Moments summarize(const TransferDistribution &d) {
    return summarize(central_moments(d));
}

/// P(M) <- (P(M) + P(-M)) / 2.
inline TransferDistribution symmetrize(const TransferDistribution &d) {
    TransferDistribution out(d.cycles());
    const int t = static_cast<int>(d.cycles());
    for (int j = -t; j <= t; j++) {
        out.at(2 * j) = (d(2 * j) + d(-2 * j)) / 2;
    }
    return out;
}

struct JackknifeResult {
    double estimate = 0;  // statistic on the full sample
    double sigma = 0;
    double bias = 0;
    std::size_t units = 0;
};

/// Delete-one jackknife from leave-one-out values theta_i, with integer
/// multiplicities (unit i stands for weights[i] identical units):
///   sigma^2 = (N - 1) / N sum (theta_i - mean)^2,  bias = (N - 1)(mean - full).
inline JackknifeResult jackknife(std::span<const double> leave_one_out, std::span<const std::uint64_t> weights,
                                 double full) {
    if (leave_one_out.size() != weights.size()) {
        throw InvalidArgument("jackknife values and weights differ in length");
    }
    std::uint64_t n = 0;
    for (auto w : weights) {
        n += w;
    }
    if (n < 2) {
        throw InsufficientData("jackknife needs at least two units");
    }
    const double N = static_cast<double>(n);
    double mean = 0;
    for (std::size_t i = 0; i < weights.size(); i++) {
        mean += static_cast<double>(weights[i]) * leave_one_out[i];
    }
    mean /= N;
    double ss = 0;
    for (std::size_t i = 0; i < weights.size(); i++) {
        const double d = leave_one_out[i] - mean;
        ss += static_cast<double>(weights[i]) * d * d;
    }
    return {full, std::sqrt((N - 1) / N * ss), (N - 1) * (mean - full), n};
}

inline JackknifeResult jackknife(std::span<const double> leave_one_out, double full) {
    std::vector<std::uint64_t> ones(leave_one_out.size(), 1);
    return jackknife(leave_one_out, ones, full);
}

/// Jackknife of an arbitrary statistic over n units: f(skip) evaluates it with
/// unit `skip` removed, f(n) on all units.
inline JackknifeResult jackknife(std::size_t n, const std::function<double(std::size_t)> &f) {
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; i++) {
        loo[i] = f(i);
    }
    return jackknife(loo, f(n));
}

/// Moments of sampled data with jackknife uncertainties.
struct MomentEstimate {
    Moments value;
    Moments sigma;
    Moments bias;
    std::size_t units = 0;
    /// True when the resampling units are shots (a single initial state).
    bool by_shot = false;
};

/// Moments of the double-average distribution built from per-state
/// histograms at cycle t. The resampling units are initial states; with one
/// state they are its shots. With `symmetric` every resampled distribution is
/// symmetrized first.
inline MomentEstimate jackknife_moments(const std::vector<std::vector<std::uint64_t>> &hists, unsigned t,
                                        bool symmetric = false) {
    if (hists.empty()) {
        throw InsufficientData("no histograms at cycle " + std::to_string(t));
    }
    const std::size_t width = 2 * t + 1;
    auto stats_of = [&](const TransferDistribution &d) { return summarize(symmetric ? symmetrize(d) : d); };

    MomentEstimate est;
    std::array<std::vector<double>, 4> loo;
    std::vector<std::uint64_t> weights;
    TransferDistribution full(t);

    if (hists.size() == 1) {
        const auto &h = hists[0];
        std::uint64_t total = 0;
        for (auto c : h) {
            total += c;
        }
        if (total < 2) {
            throw InsufficientData("need two shots to resample a single initial state");
        }
        for (std::size_t i = 0; i < width; i++) {
            full.masses()[i] = static_cast<double>(h[i]) / static_cast<double>(total);
        }
        for (std::size_t i = 0; i < width; i++) {
            if (h[i] == 0) {
                continue;
            }
            TransferDistribution d(t);
            for (std::size_t j = 0; j < width; j++) {
                d.masses()[j] = static_cast<double>(h[j] - (i == j)) / static_cast<double>(total - 1);
            }
            Moments m = stats_of(d);
            for (int k = 0; k < 4; k++) {
                loo[k].push_back(m[k]);
            }
            weights.push_back(h[i]);
        }
        est.by_shot = true;
    } else {
        // Per-state normalized histograms; leave-one-out by subtraction.
        const std::size_t n = hists.size();
        std::vector<std::vector<double>> norm(n, std::vector<double>(width));
        std::vector<double> sum(width, 0.0);
        for (std::size_t s = 0; s < n; s++) {
            if (hists[s].size() != width) {
                throw InvalidArgument("histogram length does not match cycle " + std::to_string(t));
            }
            std::uint64_t total = 0;
            for (auto c : hists[s]) {
                total += c;
            }
            if (total == 0) {
                throw InsufficientData("initial state without kept shots");
            }
            for (std::size_t i = 0; i < width; i++) {
                norm[s][i] = static_cast<double>(hists[s][i]) / static_cast<double>(total);
            }
        }
        // Sorted sums do not depend on the order of the states.
        std::vector<double> column(n);
        for (std::size_t i = 0; i < width; i++) {
            for (std::size_t s = 0; s < n; s++) {
                column[s] = norm[s][i];
            }
            std::sort(column.begin(), column.end());
            for (double v : column) {
                sum[i] += v;
            }
        }
        for (std::size_t i = 0; i < width; i++) {
            full.masses()[i] = sum[i] / static_cast<double>(n);
        }
        for (std::size_t s = 0; s < n; s++) {
            TransferDistribution d(t);
            for (std::size_t i = 0; i < width; i++) {
                d.masses()[i] = (sum[i] - norm[s][i]) / static_cast<double>(n - 1);
            }
            Moments m = stats_of(d);
            for (int k = 0; k < 4; k++) {
                loo[k].push_back(m[k]);
            }
        }
        weights.assign(n, 1);
    }
    est.value = stats_of(full);
    for (int k = 0; k < 4; k++) {
        auto jk = jackknife(loo[k], weights, est.value[k]);
        est.sigma[k] = jk.sigma;
        est.bias[k] = jk.bias;
        est.units = jk.units;
    }
    return est;
}

struct WeightedAverage {
    double value = 0;
    double sigma = 0;
};

/// Inverse-variance weighted average; infinite sigmas carry zero weight.
inline WeightedAverage weighted_cycle_average(std::span<const double> values, std::span<const double> sigmas) {
    if (values.size() != sigmas.size() || values.empty()) {
        throw InvalidArgument("need matching, non-empty values and sigmas");
    }
    double sw = 0, swx = 0;
    for (std::size_t i = 0; i < values.size(); i++) {
        if (!(sigmas[i] > 0)) {
            throw DegenerateWeight("sigma at index " + std::to_string(i) + " is not positive");
        }
        if (std::isinf(sigmas[i])) {
            continue;
        }
        const double w = 1 / (sigmas[i] * sigmas[i]);
        sw += w;
        swx += w * values[i];
    }
    if (sw == 0) {
        throw DegenerateWeight("every sigma is infinite");
    }
    return {swx / sw, 1 / std::sqrt(sw)};
}

struct SeriesPoint {
    double t = 0;
    double value = 0;
    /// Zero means "no uncertainty available".
    double sigma = 0;
};

struct ExponentFit {
    double z = 0;
    double sigma_z = 0;
    double slope = 0;  // 1/z
    double sigma_slope = 0;
    double t_min = 0;
    double t_max = 0;
    std::size_t points = 0;
};

/// Fits value ~ t^(1/z) by weighted least squares of log value on log t over
/// t_min <= t <= t_max. Without sigmas the fit is unweighted and the slope
/// error comes from the residual scatter.
inline ExponentFit fit_dynamical_exponent(std::span<const SeriesPoint> series, double t_min, double t_max) {
    std::vector<SeriesPoint> pts;
    for (const auto &p : series) {
        if (p.t >= t_min && p.t <= t_max) {
            if (!(p.value > 0) || !(p.t > 0)) {
                throw InvalidArgument("exponent fit needs positive t and values in the window");
            }
            pts.push_back(p);
        }
    }
    if (pts.size() < 3) {
        throw InsufficientData("exponent fit needs at least 3 points in [" + std::to_string(t_min) + ", " +
                               std::to_string(t_max) + "]");
    }
    bool weighted = true;
    for (const auto &p : pts) {
        weighted = weighted && p.sigma > 0;
    }
    // Logs relative to the first point, so a common factor on the values
    // cancels before any rounding it could cause.
    const double v0 = pts[0].value, t0 = pts[0].t;
    double sw = 0, sx = 0, sy = 0;
    std::vector<double> xs, ys, ws;
    for (const auto &p : pts) {
        const double x = std::log(p.t / t0);
        const double y = std::log(p.value / v0);
        const double sig = weighted ? p.sigma / p.value : 1.0;
        const double w = 1 / (sig * sig);
        xs.push_back(x);
        ys.push_back(y);
        ws.push_back(w);
        sw += w;
        sx += w * x;
        sy += w * y;
    }
    const double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); i++) {
        sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
        sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    if (!(sxx > 0)) {
        throw InsufficientData("exponent fit needs distinct t values");
    }
    const double slope = sxy / sxx;
    if (!(slope > 0)) {
        throw InvalidArgument("fitted growth exponent is not positive");
    }
    double var_slope = 1 / sxx;
    if (!weighted) {
        double rss = 0;
        for (std::size_t i = 0; i < xs.size(); i++) {
            const double r = ys[i] - ybar - slope * (xs[i] - xbar);
            rss += r * r;
        }
        var_slope *= rss / static_cast<double>(xs.size() - 2);
    }
    ExponentFit fit;
    fit.slope = slope;
    fit.sigma_slope = std::sqrt(var_slope);
    fit.z = 1 / slope;
    fit.sigma_z = fit.sigma_slope / (slope * slope);
    fit.t_min = pts.front().t;
    fit.t_max = pts.back().t;
    fit.points = pts.size();
    return fit;
}

/// Non-negative least squares min |A x - b|, x >= 0 (Lawson-Hanson).
inline Eigen::VectorXd nnls(const Eigen::MatrixXd &A, const Eigen::VectorXd &b, int max_iter = 0) {
    const Eigen::Index n = A.cols();
    if (max_iter <= 0) {
        max_iter = static_cast<int>(3 * n + 10);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());

    auto solve_passive = [&](Eigen::VectorXd &z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; j++) {
            if (passive[static_cast<std::size_t>(j)]) {
                idx.push_back(j);
            }
        }
        z = Eigen::VectorXd::Zero(n);
        if (idx.empty()) {
            return;
        }
        Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); k++) {
            Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        }
        Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
        for (std::size_t k = 0; k < idx.size(); k++) {
            z(idx[k]) = zp(static_cast<Eigen::Index>(k));
        }
    };

    for (int outer = 0; outer < max_iter; outer++) {
        Eigen::VectorXd w = A.transpose() * (b - A * x);
        Eigen::Index best = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; j++) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
                wmax = w(j);
                best = j;
            }
        }
        if (best < 0) {
            break;
        }
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < max_iter; inner++) {
            Eigen::VectorXd z;
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; j++) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) {
                    feasible = false;
                }
            }
            if (feasible) {
                x = z;
                break;
            }
            double alpha = 1;
            for (Eigen::Index j = 0; j < n; j++) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) {
                    alpha = std::min(alpha, x(j) / (x(j) - z(j)));
                }
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; j++) {
                if (passive[static_cast<std::size_t>(j)] && std::abs(x(j)) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0;
                }
            }
        }
    }
    return x;
}

struct CollapsePoint {
    double mu = 0;
    double t = 0;
    double value = 0;
};

struct CollapseOptions {
    unsigned knots = 12;
    /// Points with t < t_min are left out (early transient).
    double t_min = 0;
};

/// Quality of the collapse of `points` onto one curve of x = mu t^gamma.
///
/// A monotone piecewise-linear curve with knots at evenly spaced ranks of x is
/// fitted by least squares, trying both increasing and decreasing curves. The
/// metric is the smaller residual sum of squares divided by the total sum of
/// squares about the mean, so 0 is a perfect collapse.
inline double collapse_residual(std::span<const CollapsePoint> points, double gamma, const CollapseOptions &opt = {}) {
    std::vector<std::pair<double, double>> xy;
    std::vector<double> mus;
    for (const auto &p : points) {
        if (p.t >= opt.t_min) {
            xy.emplace_back(p.mu * std::pow(p.t, gamma), p.value);
            mus.push_back(p.mu);
        }
    }
    std::sort(mus.begin(), mus.end());
    if (std::unique(mus.begin(), mus.end()) - mus.begin() < 2) {
        throw InsufficientData("collapse needs at least two distinct mu series");
    }
    if (xy.size() < 3 || opt.knots < 2) {
        throw InsufficientData("collapse needs at least 3 points and 2 knots");
    }
    std::sort(xy.begin(), xy.end());
    const std::size_t n = xy.size();
    std::vector<double> knots;
    for (unsigned k = 0; k < opt.knots; k++) {
        const std::size_t r = static_cast<std::size_t>(
            std::llround(static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(opt.knots - 1)));
        knots.push_back(xy[r].first);
    }
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; i++) {
        y(static_cast<Eigen::Index>(i)) = xy[i].second;
    }
    const double ybar = y.mean();
    const double sst = (y.array() - ybar).square().sum();
    if (sst == 0) {
        return 0;
    }
    if (knots.size() < 2) {
        return 1;  // every x equal: only a constant curve fits
    }
    // Curve values at the knots: v = v0 + sum_{j <= k} d_j, d >= 0 (or <= 0).
    const Eigen::Index K = static_cast<Eigen::Index>(knots.size());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), K - 1);
    for (std::size_t i = 0; i < n; i++) {
        const double x = xy[i].first;
        Eigen::Index j = std::upper_bound(knots.begin(), knots.end(), x) - knots.begin() - 1;
        j = std::clamp<Eigen::Index>(j, 0, K - 2);
        double w = (x - knots[static_cast<std::size_t>(j)]) /
                   (knots[static_cast<std::size_t>(j) + 1] - knots[static_cast<std::size_t>(j)]);
        w = std::clamp(w, 0.0, 1.0);
        // Value at x = v0 + sum_{m < j} d_m + w d_j (d_m is the rise from knot m to m+1).
        for (Eigen::Index m = 0; m < j; m++) {
            B(static_cast<Eigen::Index>(i), m) = 1;
        }
        B(static_cast<Eigen::Index>(i), j) = w;
    }
    // The free intercept v0 is eliminated by centering.
    Eigen::MatrixXd Bc = B.rowwise() - B.colwise().mean();
    Eigen::VectorXd yc = y.array() - ybar;
    double best = std::numeric_limits<double>::infinity();
    for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd d = nnls(sign * Bc, yc);
        best = std::min(best, (sign * Bc * d - yc).squaredNorm());
    }
    return best / sst;
}

/// gamma = k / 30 for k = 0..30; contains 1/3 and 2/3.
inline std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 30; k++) {
        g.push_back(k / 30.0);
    }
    return g;
}

struct CollapseScan {
    std::vector<double> gammas;
    std::vector<double> residuals;

    /// First grid value attaining the smallest residual.
    double best_gamma() const {
        auto it = std::min_element(residuals.begin(), residuals.end());
        return gammas[static_cast<std::size_t>(it - residuals.begin())];
    }
};

inline CollapseScan collapse_scan(std::span<const CollapsePoint> points, std::span<const double> gammas,
                                  const CollapseOptions &opt = {}) {
    if (gammas.empty()) {
        throw InvalidArgument("empty gamma grid");
    }
    CollapseScan scan;
    for (double g : gammas) {
        scan.gammas.push_back(g);
        scan.residuals.push_back(collapse_residual(points, g, opt));
    }
    return scan;
}

}  // namespace fcs
