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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fcs/ensemble.hpp"
#include "fcs/error.hpp"
#include "fcs/stats.hpp"

namespace fcs::io {

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> try_parse_double(std::string_view s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "inf" || s == "+inf" || s == "Infinity") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf" || s == "-Infinity") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

template <class Int>
std::optional<Int> try_parse_int(std::string_view s) {
    Int v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

/// File label of a mu value: "0", "0.5", "inf".
inline std::string mu_label(double mu) {
    return format_double(mu);
}

inline const char *distribution_header = "cycle,M,probability";
inline const char *moments_header = "cycle,mean,var,skew,kurt,sigma_mean,sigma_var,sigma_skew,sigma_kurt";
inline const char *counts_header = "state,cycle,M,count";

/// One moments row.
struct MomentsRow {
    unsigned cycle = 0;
    Moments value;
    Moments sigma;

    friend bool operator==(const MomentsRow &a, const MomentsRow &b) {
        auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
        for (int k = 0; k < 4; k++) {
            if (!same(a.value[k], b.value[k]) || !same(a.sigma[k], b.sigma[k])) {
                return false;
            }
        }
        return a.cycle == b.cycle;
    }
};

struct CountsRow {
    std::uint64_t state = 0;
    unsigned cycle = 0;
    int m = 0;
    std::uint64_t count = 0;

    friend bool operator==(const CountsRow &, const CountsRow &) = default;
};

/// Comment line naming the manifest; readers skip lines starting with '#'.
inline std::string manifest_comment(std::string_view run_id) {
    return "# manifest=manifest.json run=" + std::string(run_id) + "\n";
}

inline void write_distributions(std::ostream &os, const std::map<unsigned, TransferDistribution> &dists,
                                std::string_view comment = {}) {
    os << comment << distribution_header << "\n";
    for (const auto &[t, d] : dists) {
        for (std::size_t i = 0; i < d.size(); i++) {
            os << t << "," << d.magnetization(i) << "," << format_double(d.masses()[i]) << "\n";
        }
    }
}

inline void write_moments(std::ostream &os, const std::vector<MomentsRow> &rows, std::string_view comment = {}) {
    os << comment << moments_header << "\n";
    for (const auto &r : rows) {
        os << r.cycle;
        for (int k = 0; k < 4; k++) {
            os << "," << format_double(r.value[k]);
        }
        for (int k = 0; k < 4; k++) {
            os << "," << format_double(r.sigma[k]);
        }
        os << "\n";
    }
}

inline void write_counts(std::ostream &os, const std::vector<CountsRow> &rows, std::string_view comment = {}) {
    os << comment << counts_header << "\n";
    for (const auto &r : rows) {
        os << r.state << "," << r.cycle << "," << r.m << "," << r.count << "\n";
    }
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

/// Reads data rows of a CSV with the given header, checking columns by name.
class CsvReader {
   public:
    CsvReader(std::istream &is, std::string_view expected_header, std::string source)
        : is_(is), source_(std::move(source)) {
        std::string line;
        while (std::getline(is_, line)) {
            line_no_++;
            strip(line);
            if (line.empty() || line[0] == '#') {
                continue;
            }
            auto got = split(line);
            header_ = split(expected_header);
            if (got.size() != header_.size()) {
                throw SchemaError(source_ + ": expected " + std::to_string(header_.size()) + " columns (" +
                                  std::string(expected_header) + "), header has " + std::to_string(got.size()));
            }
            for (std::size_t c = 0; c < got.size(); c++) {
                if (got[c] != header_[c]) {
                    throw SchemaError(source_ + ": column " + std::to_string(c + 1) + " should be '" +
                                      std::string(header_[c]) + "' but is '" + std::string(got[c]) + "'");
                }
            }
            return;
        }
        throw SchemaError(source_ + ": missing header '" + std::string(expected_header) + "'");
    }

    bool next() {
        while (std::getline(is_, line_)) {
            line_no_++;
            strip(line_);
            if (line_.empty() || line_[0] == '#') {
                continue;
            }
            fields_ = split(line_);
            if (fields_.size() != header_.size()) {
                throw SchemaError(where() + ": expected " + std::to_string(header_.size()) + " fields, got " +
                                  std::to_string(fields_.size()));
            }
            return true;
        }
        return false;
    }

    double real(std::size_t c) const {
        auto v = try_parse_double(fields_[c]);
        if (!v) {
            throw SchemaError(where() + ", column '" + std::string(header_[c]) + "': '" + std::string(fields_[c]) +
                              "' is not a number");
        }
        return *v;
    }
    template <class Int>
    Int integer(std::size_t c) const {
        auto v = try_parse_int<Int>(fields_[c]);
        if (!v) {
            throw SchemaError(where() + ", column '" + std::string(header_[c]) + "': '" + std::string(fields_[c]) +
                              "' is not an integer");
        }
        return *v;
    }
    std::string where() const {
        return source_ + " line " + std::to_string(line_no_);
    }
    std::string_view column(std::size_t c) const {
        return header_[c];
    }

   private:
    static void strip(std::string &s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
            s.pop_back();
        }
    }

    std::istream &is_;
    std::string source_;
    std::string line_;
    std::vector<std::string_view> header_;
    std::vector<std::string_view> fields_;
    std::size_t line_no_ = 0;
};

}  // namespace detail

inline std::map<unsigned, TransferDistribution> read_distributions(std::istream &is, std::string source = "input") {
    detail::CsvReader rd(is, distribution_header, source);
    std::map<unsigned, TransferDistribution> out;
    while (rd.next()) {
        const unsigned t = rd.integer<unsigned>(0);
        const int m = rd.integer<int>(1);
        const double p = rd.real(2);
        auto it = out.try_emplace(t, TransferDistribution(t)).first;
        if (m % 2 != 0 || std::abs(m) > 2 * static_cast<int>(t)) {
            throw SchemaError(rd.where() + ", column 'M': " + std::to_string(m) + " outside the support of cycle " +
                              std::to_string(t));
        }
        it->second.at(m) = p;
    }
    return out;
}

inline std::vector<MomentsRow> read_moments(std::istream &is, std::string source = "input") {
    detail::CsvReader rd(is, moments_header, source);
    std::vector<MomentsRow> out;
    while (rd.next()) {
        MomentsRow r;
        r.cycle = rd.integer<unsigned>(0);
        for (int k = 0; k < 4; k++) {
            r.value[k] = rd.real(1 + k);
            r.sigma[k] = rd.real(5 + k);
        }
        out.push_back(r);
    }
    return out;
}

inline std::vector<CountsRow> read_counts(std::istream &is, std::string source = "input") {
    detail::CsvReader rd(is, counts_header, source);
    std::vector<CountsRow> out;
    while (rd.next()) {
        out.push_back({rd.integer<std::uint64_t>(0), rd.integer<unsigned>(1), rd.integer<int>(2),
                       rd.integer<std::uint64_t>(3)});
    }
    return out;
}

/// 64-bit FNV-1a, used to tag outputs with the run that produced them.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
    std::string s(buf, res.ptr);
    return std::string(16 - s.size(), '0') + s;
}

}  // namespace fcs::io
