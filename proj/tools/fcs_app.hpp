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

// Command implementations behind the fcs executable: JSON configuration,
// run / analyze / oracle, and the output files they write.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fcs/circuit_model.hpp"
#include "fcs/ensemble.hpp"
#include "fcs/error.hpp"
#include "fcs/io.hpp"
#include "fcs/noise.hpp"
#include "fcs/reference.hpp"
#include "fcs/sampler.hpp"
#include "fcs/stats.hpp"
#include "json.hpp"

namespace fcs::app {

using json = nlohmann::ordered_json;

inline constexpr const char *version = "0.1.0";
inline constexpr const char *out_dir_env = "FCS_OUT_DIR";

struct AnalysisConfig {
    bool symmetrize_mu0 = true;
    double exponent_t_min = 10;
    double exponent_t_max = std::numeric_limits<double>::infinity();
    double collapse_t_min = 8;
    unsigned collapse_knots = 12;
    std::vector<double> gammas = default_gamma_grid();
    double references_mu_max = 0.4;
    double references_t_min = 1;
    double references_t_max = std::numeric_limits<double>::infinity();
    double references_n_sigma = 1;
};

struct RunConfig {
    std::string mode = "exact";
    unsigned n_qubits = 0;  // 0: 2 * cycles
    unsigned cycles = 0;
    FSimParams params = FSimParams::from_pi(0.4, 0.8);
    LayerOrder layer_order = LayerOrder::EvenFirst;
    std::vector<double> mus{0.0};
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
    unsigned site_cap = 20;
    SampleConfig sampling;
    NoiseConfig noise;
    AnalysisConfig analysis;

    ChainConfig chain() const {
        return {n_qubits, cycles, params, layer_order};
    }
};

namespace detail {

/// Reads typed values out of a JSON object, naming the offending key on error
/// and rejecting unknown keys.
class Section {
   public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("'" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
        }
    }
    ~Section() = default;

    bool has(const std::string &key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const json &raw(const std::string &key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string key(const std::string &k) const {
        return path_.empty() ? k : path_ + "." + k;
    }
    Section sub(const std::string &k) {
        seen_.insert(k);
        return Section(j_.at(k), key(k));
    }

    double real(const std::string &k, double fallback) {
        if (!has(k)) {
            return fallback;
        }
        return to_real(j_.at(k), key(k));
    }
    std::optional<double> real_opt(const std::string &k) {
        if (!has(k)) {
            return std::nullopt;
        }
        return to_real(j_.at(k), key(k));
    }
    std::uint64_t uint(const std::string &k, std::uint64_t fallback) {
        if (!has(k)) {
            return fallback;
        }
        const json &v = j_.at(k);
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0 && !v.is_number_unsigned())) {
            throw ConfigError("'" + key(k) + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }
    bool boolean(const std::string &k, bool fallback) {
        if (!has(k)) {
            return fallback;
        }
        const json &v = j_.at(k);
        if (!v.is_boolean()) {
            throw ConfigError("'" + key(k) + "' must be true or false");
        }
        return v.get<bool>();
    }
    std::string string(const std::string &k, const std::string &fallback) {
        if (!has(k)) {
            return fallback;
        }
        const json &v = j_.at(k);
        if (!v.is_string()) {
            throw ConfigError("'" + key(k) + "' must be a string");
        }
        return v.get<std::string>();
    }
    std::vector<double> reals(const std::string &k) {
        const json &v = j_.at(k);
        seen_.insert(k);
        if (!v.is_array()) {
            return {to_real(v, key(k))};
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); i++) {
            out.push_back(to_real(v[i], key(k) + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError("unknown key '" + key(it.key()) + "'");
            }
        }
    }

    static double to_real(const json &v, const std::string &name) {
        if (v.is_number()) {
            return v.get<double>();
        }
        if (v.is_string()) {
            auto s = v.get<std::string>();
            if (s == "inf" || s == "infinity" || s == "Infinity") {
                return std::numeric_limits<double>::infinity();
            }
        }
        throw ConfigError("'" + name + "' must be a number (or \"inf\")");
    }

   private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json real_json(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

inline json reals_json(const std::vector<double> &v) {
    json a = json::array();
    for (double x : v) {
        a.push_back(real_json(x));
    }
    return a;
}

template <class F>
auto keyed(const std::string &key, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError("'" + key + "': " + e.what());
    }
}

}  // namespace detail

inline AnalysisConfig parse_analysis(detail::Section s) {
    AnalysisConfig a;
    a.symmetrize_mu0 = s.boolean("symmetrize_mu0", a.symmetrize_mu0);
    if (s.has("exponent")) {
        auto e = s.sub("exponent");
        a.exponent_t_min = e.real("t_min", a.exponent_t_min);
        a.exponent_t_max = e.real("t_max", a.exponent_t_max);
        e.reject_unknown();
    }
    if (s.has("collapse")) {
        auto c = s.sub("collapse");
        a.collapse_t_min = c.real("t_min", a.collapse_t_min);
        a.collapse_knots = static_cast<unsigned>(c.uint("knots", a.collapse_knots));
        if (c.has("gammas")) {
            a.gammas = c.reals("gammas");
            if (a.gammas.empty()) {
                throw ConfigError("'" + c.key("gammas") + "' must not be empty");
            }
        }
        if (a.collapse_knots < 2) {
            throw ConfigError("'" + c.key("knots") + "' must be at least 2");
        }
        c.reject_unknown();
    }
    if (s.has("references")) {
        auto r = s.sub("references");
        a.references_mu_max = r.real("mu_max", a.references_mu_max);
        a.references_t_min = r.real("t_min", a.references_t_min);
        a.references_t_max = r.real("t_max", a.references_t_max);
        a.references_n_sigma = r.real("n_sigma", a.references_n_sigma);
        r.reject_unknown();
    }
    s.reject_unknown();
    return a;
}

inline RunConfig parse_config(const json &j) {
    RunConfig c;
    detail::Section s(j, "");
    c.mode = s.string("mode", c.mode);
    if (c.mode != "exact" && c.mode != "sampled" && c.mode != "noisy-sampled") {
        throw ConfigError("'mode' must be \"exact\", \"sampled\" or \"noisy-sampled\" (got \"" + c.mode + "\")");
    }
    c.cycles = static_cast<unsigned>(s.uint("cycles", 0));
    c.n_qubits = static_cast<unsigned>(s.uint("n_qubits", 2 * c.cycles));
    if (c.n_qubits % 2 != 0) {
        throw ConfigError("'n_qubits' must be even");
    }
    if (c.n_qubits > Bitstring::max_sites) {
        throw ConfigError("'n_qubits' must not exceed 64");
    }
    if (c.n_qubits < 2 * c.cycles) {
        throw ConfigError("'n_qubits' = " + std::to_string(c.n_qubits) + " cannot resolve 'cycles' = " +
                          std::to_string(c.cycles) + " (need n_qubits >= 2 * cycles)");
    }
    auto angle = [&](const std::string &name, double fallback_over_pi) {
        auto over_pi = s.real_opt(name + "_over_pi");
        auto rad = s.real_opt(name);
        if (over_pi && rad) {
            throw ConfigError("give either '" + name + "' or '" + name + "_over_pi', not both");
        }
        double v = rad ? *rad : (over_pi ? *over_pi : fallback_over_pi) * std::numbers::pi;
        if (!std::isfinite(v)) {
            throw ConfigError("'" + name + "' must be finite");
        }
        return v;
    };
    double theta = angle("theta", 0.4);
    double phi = angle("phi", 0.8);
    std::string conv = s.string("convention", "tail");
    if (conv != "tail" && conv != "split") {
        throw ConfigError("'convention' must be \"tail\" or \"split\"");
    }
    c.params = FSimParams(theta, phi, conv == "tail" ? Convention::TailPhase : Convention::SplitPhase);
    std::string order = s.string("layer_order", "even-first");
    if (order != "even-first" && order != "odd-first") {
        throw ConfigError("'layer_order' must be \"even-first\" or \"odd-first\"");
    }
    c.layer_order = order == "even-first" ? LayerOrder::EvenFirst : LayerOrder::OddFirst;
    if (s.has("mu")) {
        c.mus = s.reals("mu");
    }
    if (c.mus.empty()) {
        throw ConfigError("'mu' must list at least one value");
    }
    for (std::size_t i = 0; i < c.mus.size(); i++) {
        if (std::isnan(c.mus[i]) || c.mus[i] < 0) {
            throw ConfigError("'mu[" + std::to_string(i) + "]' must lie in [0, inf]");
        }
        for (std::size_t k = 0; k < i; k++) {
            if (c.mus[k] == c.mus[i]) {
                throw ConfigError("'mu[" + std::to_string(i) + "]' repeats a value");
            }
        }
    }
    c.seed = s.uint("seed", c.seed);
    c.threads = static_cast<unsigned>(s.uint("threads", c.threads));
    c.out = s.string("out", "");
    if (s.has("exact")) {
        auto e = s.sub("exact");
        c.site_cap = static_cast<unsigned>(e.uint("site_cap", c.site_cap));
        e.reject_unknown();
    }
    if (s.has("sampling")) {
        auto p = s.sub("sampling");
        c.sampling.n_initial_states = static_cast<unsigned>(p.uint("n_initial_states", c.sampling.n_initial_states));
        c.sampling.shots_per_state = static_cast<unsigned>(p.uint("shots_per_state", c.sampling.shots_per_state));
        c.sampling.relabel_enabled = p.boolean("relabel", c.sampling.relabel_enabled);
        std::string ps = p.string("postselect", "number");
        if (ps != "number" && ps != "causal") {
            throw ConfigError("'sampling.postselect' must be \"number\" or \"causal\"");
        }
        c.sampling.postselect = ps == "number" ? PostselectMode::NumberOnly : PostselectMode::Causal;
        if (c.sampling.n_initial_states < 1) {
            throw ConfigError("'sampling.n_initial_states' must be at least 1");
        }
        if (c.sampling.shots_per_state < 1) {
            throw ConfigError("'sampling.shots_per_state' must be at least 1");
        }
        p.reject_unknown();
    }
    if (s.has("noise")) {
        auto n = s.sub("noise");
        c.noise.t1_cycles = n.real("t1_cycles", c.noise.t1_cycles);
        c.noise.e0 = n.real("e0", 0);
        c.noise.e1 = n.real("e1", 0);
        if (n.has("e0_per_qubit")) {
            c.noise.e0_per_qubit = n.reals("e0_per_qubit");
        }
        if (n.has("e1_per_qubit")) {
            c.noise.e1_per_qubit = n.reals("e1_per_qubit");
        }
        c.noise.angle_jitter_sd = n.real("angle_jitter_sd", 0);
        c.noise.dephasing_sd = n.real("dephasing_sd", 0);
        n.reject_unknown();
        detail::keyed("noise", [&] {
            c.noise.validate(c.n_qubits);
            return 0;
        });
        if (c.mode != "noisy-sampled" && !c.noise.noiseless()) {
            throw ConfigError("'noise' is only used in \"noisy-sampled\" mode");
        }
    }
    if (s.has("analysis")) {
        c.analysis = parse_analysis(s.sub("analysis"));
    }
    s.reject_unknown();
    return c;
}

/// Normalized configuration; excludes threads and the output directory,
/// which do not affect results.
inline json config_echo(const RunConfig &c) {
    json j;
    j["mode"] = c.mode;
    j["n_qubits"] = c.n_qubits;
    j["cycles"] = c.cycles;
    j["theta"] = c.params.theta();
    j["phi"] = c.params.phi();
    j["convention"] = c.params.convention() == Convention::TailPhase ? "tail" : "split";
    j["layer_order"] = c.layer_order == LayerOrder::EvenFirst ? "even-first" : "odd-first";
    j["mu"] = detail::reals_json(c.mus);
    j["seed"] = c.seed;
    if (c.mode == "exact") {
        j["exact"] = {{"site_cap", c.site_cap}};
    } else {
        j["sampling"] = {{"n_initial_states", c.sampling.n_initial_states},
                         {"shots_per_state", c.sampling.shots_per_state},
                         {"relabel", c.sampling.relabel_enabled},
                         {"postselect", postselect_name(c.sampling.postselect)}};
    }
    if (c.mode == "noisy-sampled") {
        j["noise"] = {{"t1_cycles", detail::real_json(c.noise.t1_cycles)},
                      {"e0", c.noise.e0},
                      {"e1", c.noise.e1},
                      {"e0_per_qubit", detail::reals_json(c.noise.e0_per_qubit)},
                      {"e1_per_qubit", detail::reals_json(c.noise.e1_per_qubit)},
                      {"angle_jitter_sd", c.noise.angle_jitter_sd},
                      {"dephasing_sd", c.noise.dephasing_sd}};
    }
    const auto &a = c.analysis;
    j["analysis"] = {{"symmetrize_mu0", a.symmetrize_mu0},
                     {"exponent", {{"t_min", detail::real_json(a.exponent_t_min)},
                                   {"t_max", detail::real_json(a.exponent_t_max)}}},
                     {"collapse", {{"t_min", detail::real_json(a.collapse_t_min)},
                                   {"knots", a.collapse_knots},
                                   {"gammas", detail::reals_json(a.gammas)}}},
                     {"references", {{"mu_max", detail::real_json(a.references_mu_max)},
                                     {"t_min", detail::real_json(a.references_t_min)},
                                     {"t_max", detail::real_json(a.references_t_max)},
                                     {"n_sigma", a.references_n_sigma}}}};
    return j;
}

inline json read_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error &e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// --out, then $FCS_OUT_DIR, then the config's "out", then the fallback.
inline std::filesystem::path resolve_out_dir(const std::optional<std::string> &flag, const std::string &config_out,
                                             const std::string &fallback) {
    if (flag && !flag->empty()) {
        return *flag;
    }
    if (const char *env = std::getenv(out_dir_env); env && *env) {
        return env;
    }
    if (!config_out.empty()) {
        return config_out;
    }
    return fallback;
}

/// Moments and samples of one mu value.
struct MuResult {
    double mu = 0;
    std::map<unsigned, TransferDistribution> distributions;
    std::vector<io::MomentsRow> moments;
    std::vector<io::CountsRow> counts;
    std::vector<std::string> initial_states;
    std::vector<std::uint64_t> kept, discarded, dropped;
    bool sampled = false;
};

/// Writes files and remembers their names for the manifest.
class OutputDir {
   public:
    OutputDir(std::filesystem::path dir, std::string run_id) : dir_(std::move(dir)), run_id_(std::move(run_id)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) {
            throw Error("io", "cannot create output directory '" + dir_.string() + "': " + ec.message());
        }
    }
    const std::filesystem::path &path() const {
        return dir_;
    }
    std::string comment() const {
        return io::manifest_comment(run_id_);
    }
    void write(const std::string &name, const std::string &content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
        out.close();
        if (!out) {
            throw Error("io", "failed to write '" + (dir_ / name).string() + "'");
        }
        files_.push_back(name);
    }
    const std::vector<std::string> &files() const {
        return files_;
    }

   private:
    std::filesystem::path dir_;
    std::string run_id_;
    std::vector<std::string> files_;
};

inline std::vector<io::MomentsRow> exact_moments(const std::map<unsigned, TransferDistribution> &dists, double mu,
                                                 const AnalysisConfig &a) {
    std::vector<io::MomentsRow> rows;
    for (const auto &[t, d] : dists) {
        io::MomentsRow r;
        r.cycle = t;
        r.value = summarize(mu == 0 && a.symmetrize_mu0 ? symmetrize(d) : d);
        r.sigma = Moments{0, 0, 0, 0};
        rows.push_back(r);
    }
    return rows;
}

/// Moments with jackknife errors from per-state histograms keyed by cycle.
inline std::vector<io::MomentsRow> sampled_moments(
    const std::map<unsigned, std::vector<std::vector<std::uint64_t>>> &hists, double mu, const AnalysisConfig &a,
    std::vector<std::string> &warnings) {
    std::vector<io::MomentsRow> rows;
    for (const auto &[t, h] : hists) {
        if (h.empty()) {
            warnings.push_back("mu=" + io::mu_label(mu) + " cycle " + std::to_string(t) +
                               ": no initial state kept a shot; cycle skipped");
            continue;
        }
        io::MomentsRow r;
        r.cycle = t;
        const bool sym = mu == 0 && a.symmetrize_mu0;
        std::uint64_t shots = 0;
        for (auto c : h[0]) {
            shots += c;
        }
        if (h.size() == 1 && shots < 2) {
            r.value = summarize(sym ? symmetrize(estimated_distribution(h, t)) : estimated_distribution(h, t));
            const double nan = std::numeric_limits<double>::quiet_NaN();
            r.sigma = Moments{nan, nan, nan, nan};
        } else {
            auto est = jackknife_moments(h, t, sym);
            r.value = est.value;
            r.sigma = est.sigma;
        }
        rows.push_back(r);
    }
    return rows;
}

struct AnalysisSummary {
    std::vector<std::string> warnings;
    std::optional<double> best_gamma;
};

/// Exponent fits, collapse scan and reference comparison over all mu values.
inline AnalysisSummary write_analysis(OutputDir &out, const std::vector<MuResult> &results, const AnalysisConfig &a) {
    AnalysisSummary summary;
    auto &warn = summary.warnings;

    std::ostringstream fits;
    fits << out.comment() << "mu,quantity,z,sigma_z,t_min,t_max,points\n";
    for (const auto &r : results) {
        for (int q = 0; q < 2; q++) {
            const char *name = q == 0 ? "mean" : "variance";
            if (q == 0 && r.mu == 0) {
                continue;  // zero mean at mu = 0
            }
            std::vector<SeriesPoint> series;
            for (const auto &row : r.moments) {
                const double s = row.sigma[q];
                series.push_back({static_cast<double>(row.cycle), row.value[q], std::isfinite(s) ? s : 0.0});
            }
            try {
                auto fit = fit_dynamical_exponent(series, a.exponent_t_min, a.exponent_t_max);
                fits << io::format_double(r.mu) << "," << name << "," << io::format_double(fit.z) << ","
                     << io::format_double(fit.sigma_z) << "," << io::format_double(fit.t_min) << ","
                     << io::format_double(fit.t_max) << "," << fit.points << "\n";
            } catch (const Error &e) {
                warn.push_back("exponent fit of " + std::string(name) + " at mu=" + io::mu_label(r.mu) +
                               " skipped: " + e.what());
            }
        }
    }
    out.write("exponent_fit.csv", fits.str());

    std::vector<CollapsePoint> pts;
    for (const auto &r : results) {
        if (r.mu > 0 && std::isfinite(r.mu)) {
            for (const auto &row : r.moments) {
                if (std::isfinite(row.value.skewness)) {
                    pts.push_back({r.mu, static_cast<double>(row.cycle), row.value.skewness});
                }
            }
        }
    }
    std::ostringstream scan_csv;
    scan_csv << out.comment() << "gamma,residual\n";
    try {
        auto scan = collapse_scan(pts, a.gammas, {a.collapse_knots, a.collapse_t_min});
        for (std::size_t i = 0; i < scan.gammas.size(); i++) {
            scan_csv << io::format_double(scan.gammas[i]) << "," << io::format_double(scan.residuals[i]) << "\n";
        }
        summary.best_gamma = scan.best_gamma();
    } catch (const Error &e) {
        warn.push_back(std::string("collapse scan skipped: ") + e.what());
    }
    out.write("collapse_scan.csv", scan_csv.str());

    std::ostringstream refs;
    refs << out.comment()
         << "name,ref_skewness,ref_kurtosis_lo,ref_kurtosis_hi,skewness,sigma_skewness,z_skewness,"
            "skewness_consistent,kurtosis,sigma_kurtosis,z_kurtosis,kurtosis_consistent\n";
    std::vector<double> qv, qs, sv, ss;
    for (const auto &r : results) {
        if (r.mu > a.references_mu_max) {
            continue;
        }
        for (const auto &row : r.moments) {
            if (row.cycle < a.references_t_min || row.cycle > a.references_t_max) {
                continue;
            }
            if (std::isfinite(row.value.kurtosis) && row.sigma.kurtosis > 0 && std::isfinite(row.sigma.kurtosis)) {
                qv.push_back(row.value.kurtosis);
                qs.push_back(row.sigma.kurtosis);
            }
            if (std::isfinite(row.value.skewness) && row.sigma.skewness > 0 && std::isfinite(row.sigma.skewness)) {
                sv.push_back(row.value.skewness);
                ss.push_back(row.sigma.skewness);
            }
        }
    }
    if (qv.empty()) {
        warn.push_back("reference comparison skipped: no kurtosis with a positive uncertainty in the window");
    } else {
        auto q = weighted_cycle_average(qv, qs);
        std::optional<Measured> s;
        if (!sv.empty()) {
            auto avg = weighted_cycle_average(sv, ss);
            s = Measured{avg.value, avg.sigma};
        }
        auto cmp = compare_to_references(s, {q.value, q.sigma}, a.references_n_sigma);
        for (std::size_t i = 0; i < cmp.size(); i++) {
            const auto &ref = kpz_references[i];
            const auto &c = cmp[i];
            refs << c.name << "," << io::format_double(ref.skewness) << "," << io::format_double(ref.kurtosis_lo)
                 << "," << io::format_double(ref.kurtosis_hi) << ",";
            if (s) {
                refs << io::format_double(s->value) << "," << io::format_double(s->sigma) << ","
                     << io::format_double(*c.z_skewness) << "," << (*c.skewness_consistent ? "true" : "false");
            } else {
                refs << ",,,";
            }
            refs << "," << io::format_double(q.value) << "," << io::format_double(q.sigma) << ","
                 << io::format_double(c.z_kurtosis) << "," << (c.kurtosis_consistent ? "true" : "false") << "\n";
        }
    }
    out.write("references.csv", refs.str());
    return summary;
}

inline void write_mu_files(OutputDir &out, const MuResult &r) {
    const std::string label = io::mu_label(r.mu);
    std::ostringstream d, m;
    io::write_distributions(d, r.distributions, out.comment());
    out.write("distribution_mu_" + label + ".csv", d.str());
    io::write_moments(m, r.moments, out.comment());
    out.write("moments_mu_" + label + ".csv", m.str());
    if (r.sampled) {
        std::ostringstream c, s, y;
        io::write_counts(c, r.counts, out.comment());
        out.write("counts_mu_" + label + ".csv", c.str());
        s << out.comment() << "state,initial\n";
        for (std::size_t i = 0; i < r.initial_states.size(); i++) {
            s << i << "," << r.initial_states[i] << "\n";
        }
        out.write("initial_states_mu_" + label + ".csv", s.str());
        y << out.comment() << "cycle,kept,discarded,dropped_states\n";
        for (std::size_t t = 0; t < r.kept.size(); t++) {
            y << t << "," << r.kept[t] << "," << r.discarded[t] << "," << r.dropped[t] << "\n";
        }
        out.write("yield_mu_" + label + ".csv", y.str());
    }
}

inline json manifest_json(const std::string &command, const std::string &run_id, const json &config,
                          const std::vector<std::string> &files, const AnalysisSummary &summary, unsigned threads,
                          double seconds) {
    json m;
    m["tool"] = "fcs";
    m["version"] = version;
    m["command"] = command;
    m["run_id"] = run_id;
    m["config"] = config;
    m["files"] = files;
    m["warnings"] = summary.warnings;
    m["collapse_best_gamma"] = summary.best_gamma ? json(*summary.best_gamma) : json(nullptr);
    // Run-dependent details live under "runtime"; everything else is a pure
    // function of the configuration.
    m["runtime"] = {{"threads", threads}, {"wall_time_seconds", seconds}};
    return m;
}

/// Executes a run; returns the output directory.
inline std::filesystem::path run(const RunConfig &cfg, const std::filesystem::path &out_dir,
                                 std::ostream &log = std::cerr) {
    const auto start = std::chrono::steady_clock::now();
    const json echo = config_echo(cfg);
    const std::string run_id = io::hex64(io::fnv1a(echo.dump()));
    ChainConfig chain = cfg.chain();
    std::vector<MuResult> results;
    AnalysisSummary summary;

    if (cfg.mode == "exact") {
        ChainConfig window = lightcone_reduce(chain);
        if (window.n_qubits > cfg.site_cap) {
            throw CapExceeded("exact mode needs " + std::to_string(window.n_qubits) +
                              " light-cone sites, above 'exact.site_cap' = " + std::to_string(cfg.site_cap) +
                              "; use \"sampled\" mode for this many cycles");
        }
        ExactOptions opt;
        opt.threads = cfg.threads;
        opt.site_cap = cfg.site_cap;
        auto table = ExactTransferTable::compute(window, opt);
        for (double mu : cfg.mus) {
            MuResult r;
            r.mu = mu;
            for (unsigned t = 0; t <= cfg.cycles; t++) {
                r.distributions.emplace(t, table.distribution(mu, t));
            }
            r.moments = exact_moments(r.distributions, mu, cfg.analysis);
            results.push_back(std::move(r));
        }
    } else {
        const NoiseConfig noise = cfg.mode == "noisy-sampled" ? cfg.noise : NoiseConfig{};
        for (std::size_t mi = 0; mi < cfg.mus.size(); mi++) {
            const double mu = cfg.mus[mi];
            SampleConfig sc = cfg.sampling;
            // Independent streams per mu value.
            sc.seed = StreamRng(cfg.seed, 0xfc5, mi)();
            sc.threads = cfg.threads;
            auto res = run_sampler(ImbalanceEnsemble(mu, chain.n_qubits), chain, sc, noise);
            MuResult r;
            r.mu = mu;
            r.sampled = true;
            std::map<unsigned, std::vector<std::vector<std::uint64_t>>> hists;
            for (unsigned t = 0; t <= cfg.cycles; t++) {
                hists[t] = res.histograms(t);
                r.kept.push_back(0);
                r.discarded.push_back(0);
                for (const auto &s : res.states) {
                    r.kept.back() += s.kept[t];
                    r.discarded.back() += s.discarded[t];
                }
                r.dropped.push_back(res.dropped_states(t));
                if (r.dropped.back() > 0) {
                    summary.warnings.push_back("mu=" + io::mu_label(mu) + " cycle " + std::to_string(t) + ": " +
                                               std::to_string(r.dropped.back()) +
                                               " initial states kept no shot and were dropped");
                }
                if (!hists[t].empty()) {
                    r.distributions.emplace(t, estimated_distribution(hists[t], t));
                }
            }
            for (std::size_t i = 0; i < res.states.size(); i++) {
                const auto &s = res.states[i];
                r.initial_states.push_back(s.initial.str());
                for (unsigned t = 0; t <= cfg.cycles; t++) {
                    for (std::size_t k = 0; k < s.counts[t].size(); k++) {
                        if (s.counts[t][k] > 0) {
                            r.counts.push_back({i, t, 2 * (static_cast<int>(k) - static_cast<int>(t)), s.counts[t][k]});
                        }
                    }
                }
            }
            r.moments = sampled_moments(hists, mu, cfg.analysis, summary.warnings);
            results.push_back(std::move(r));
        }
    }

    OutputDir out(out_dir, run_id);
    for (const auto &r : results) {
        write_mu_files(out, r);
    }
    auto analysis = write_analysis(out, results, cfg.analysis);
    summary.warnings.insert(summary.warnings.end(), analysis.warnings.begin(), analysis.warnings.end());
    summary.best_gamma = analysis.best_gamma;
    for (const auto &w : summary.warnings) {
        log << "warning: " << w << "\n";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto files = out.files();
    files.push_back("manifest.json");
    out.write("manifest.json", manifest_json("run", run_id, echo, files, summary, cfg.threads, seconds).dump(2) + "\n");
    return out.path();
}

/// Recomputes statistics from the files of a previous run (or hand-made CSVs
/// in the same schema). Per mu the richest input wins: counts, then
/// distributions, then moments.
inline std::filesystem::path analyze(const std::filesystem::path &in_dir, const AnalysisConfig &a,
                                     const std::filesystem::path &out_dir, std::ostream &log = std::cerr) {
    const auto start = std::chrono::steady_clock::now();
    if (!std::filesystem::is_directory(in_dir)) {
        throw ConfigError("input directory '" + in_dir.string() + "' does not exist");
    }
    static const std::regex pattern(R"(^(distribution|counts|moments)_mu_(.+)\.csv$)");
    std::map<double, std::map<std::string, std::filesystem::path>> found;
    for (const auto &entry : std::filesystem::directory_iterator(in_dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) {
            auto mu = io::try_parse_double(m[2].str());
            if (!mu || std::isnan(*mu) || *mu < 0) {
                throw SchemaError(name + ": cannot read mu from the file name");
            }
            found[*mu][m[1].str()] = entry.path();
        }
    }
    if (found.empty()) {
        throw SchemaError("no distribution_mu_*.csv, counts_mu_*.csv or moments_mu_*.csv files in '" +
                          in_dir.string() + "'");
    }
    AnalysisSummary summary;
    std::vector<MuResult> results;
    for (const auto &[mu, files] : found) {
        MuResult r;
        r.mu = mu;
        auto open = [](const std::filesystem::path &p) {
            std::ifstream in(p);
            if (!in) {
                throw Error("io", "cannot read '" + p.string() + "'");
            }
            return in;
        };
        if (files.count("counts")) {
            auto in = open(files.at("counts"));
            auto rows = io::read_counts(in, files.at("counts").filename().string());
            std::map<unsigned, std::map<std::uint64_t, std::vector<std::uint64_t>>> by_cycle;
            for (const auto &row : rows) {
                if (row.m % 2 != 0 || std::abs(row.m) > 2 * static_cast<int>(row.cycle)) {
                    throw SchemaError(files.at("counts").filename().string() + ", column 'M': " +
                                      std::to_string(row.m) + " outside the support of cycle " +
                                      std::to_string(row.cycle));
                }
                auto &h = by_cycle[row.cycle][row.state];
                h.resize(2 * row.cycle + 1, 0);
                h[static_cast<std::size_t>(row.m / 2 + static_cast<int>(row.cycle))] += row.count;
            }
            std::map<unsigned, std::vector<std::vector<std::uint64_t>>> hists;
            for (auto &[t, states] : by_cycle) {
                for (auto &[s, h] : states) {
                    hists[t].push_back(std::move(h));
                }
                r.distributions.emplace(t, estimated_distribution(hists[t], t));
            }
            r.moments = sampled_moments(hists, mu, a, summary.warnings);
        } else if (files.count("distribution")) {
            auto in = open(files.at("distribution"));
            r.distributions = io::read_distributions(in, files.at("distribution").filename().string());
            r.moments = exact_moments(r.distributions, mu, a);
        } else {
            auto in = open(files.at("moments"));
            r.moments = io::read_moments(in, files.at("moments").filename().string());
        }
        results.push_back(std::move(r));
    }

    json echo;
    echo["input"] = in_dir.string();
    RunConfig holder;
    holder.analysis = a;
    echo["analysis"] = config_echo(holder)["analysis"];
    const std::string run_id = io::hex64(io::fnv1a(echo.dump()));
    OutputDir out(out_dir, run_id);
    for (const auto &r : results) {
        std::ostringstream m;
        io::write_moments(m, r.moments, out.comment());
        out.write("moments_mu_" + io::mu_label(r.mu) + ".csv", m.str());
    }
    auto analysis = write_analysis(out, results, a);
    summary.warnings.insert(summary.warnings.end(), analysis.warnings.begin(), analysis.warnings.end());
    summary.best_gamma = analysis.best_gamma;
    for (const auto &w : summary.warnings) {
        log << "warning: " << w << "\n";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto files = out.files();
    files.push_back("manifest.json");
    out.write("manifest.json", manifest_json("analyze", run_id, echo, files, summary, 1, seconds).dump(2) + "\n");
    return out.path();
}

/// Closed-form values for one (theta, phi, mu).
inline json oracle(double theta, double phi, double mu) {
    json j;
    j["theta"] = theta;
    j["phi"] = phi;
    j["mu"] = detail::real_json(mu);
    FSimParams p(theta, phi);
    try {
        const double delta = p.anisotropy();
        j["anisotropy"] = delta;
        j["regime"] = regime_name(classify_regime(delta));
        try {
            auto el = eta_lambda_from(delta, p.theta());
            j["eta"] = {el.eta.real(), el.eta.imag()};
            j["lambda"] = {el.lambda.real(), el.lambda.imag()};
            j["phi_from_eta_lambda"] = el.phi;
        } catch (const Error &e) {
            j["eta_lambda_error"] = e.what();
        }
    } catch (const UndefinedAnisotropy &e) {
        j["anisotropy_error"] = e.what();
    }
    json c1;
    c1["mean"] = cycle1_mean(p.theta(), mu);
    c1["variance"] = cycle1_variance(p.theta(), mu);
    try {
        auto m = cycle1_moments(p.theta(), mu);
        c1["skewness"] = m.skewness;
        c1["kurtosis"] = m.kurtosis;
        c1["skewness_small_mu_slope"] = cycle1_skewness_slope(p.theta());
        c1["kurtosis_mu0"] = cycle1_kurtosis_mu0(p.theta());
    } catch (const Error &e) {
        c1["moments_error"] = e.what();
    }
    j["cycle1"] = c1;
    auto c2 = cycle2_small_mu(p.theta(), p.phi(), mu);
    j["cycle2_small_mu"] = {{"mean", c2.mean}, {"variance", c2.variance}};
    return j;
}

}  // namespace fcs::app
