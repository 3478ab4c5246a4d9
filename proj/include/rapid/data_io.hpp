#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rapid/problems.hpp"
#include "rapid/random.hpp"
#include "rapid/solver.hpp"

namespace rapid {

struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t d = 1000;
    std::size_t m = 1;  // tasks; > 1 fills y_multi instead of y
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    /// Extension: y = A·x̄ + noise_sigma·ε with a sparse x̄ instead of pure
    /// normal targets. Useful when a test needs a known support.
    bool planted = false;
    std::size_t planted_nonzeros = 10;
};

/// A has i.i.d. standard-normal entries; y (or Y) is standard normal unless
/// `planted` is set. Identical specs give bit-identical data.
inline RegressionData generate_regression(const SyntheticSpec& spec) {
    require(spec.n >= 1 && spec.d >= 1 && spec.m >= 1, "bad-spec", "n, d and m must be positive");
    RegressionData out;
    out.a = DenseMatrix(spec.n, spec.d);
    RandomStream a_stream(spec.seed, RandomStream::Matrix);
    for (std::size_t j = 0; j < spec.d; ++j)
        for (std::size_t i = 0; i < spec.n; ++i) out.a(i, j) = a_stream.normal();

    DenseMatrix y(spec.n, spec.m);
    if (spec.planted) {
        RandomStream ps(spec.seed, RandomStream::Planted);
        RandomStream noise(spec.seed, RandomStream::Noise);
        for (std::size_t task = 0; task < spec.m; ++task) {
            DenseVector xbar(spec.d);
            const std::size_t k = std::min(spec.planted_nonzeros, spec.d);
            for (std::size_t c = 0; c < k; ++c) xbar[ps.below(spec.d)] = ps.normal();
            const DenseVector ax = matvec(out.a, xbar);
            for (std::size_t i = 0; i < spec.n; ++i) y(i, task) = ax[i] + spec.noise_sigma * noise.normal();
        }
    } else {
        RandomStream ys(spec.seed, RandomStream::Targets);
        for (std::size_t task = 0; task < spec.m; ++task)
            for (std::size_t i = 0; i < spec.n; ++i) y(i, task) = ys.normal();
    }

    if (spec.m == 1)
        out.y = DenseVector(std::vector<double>(y.values()));
    else
        out.y_multi = std::move(y);
    return out;
}

// ---------------------------------------------------------------------------
// Sparse classification files: "label idx:val idx:val ..." with 1-based idx
// ---------------------------------------------------------------------------

struct LabeledData {
    DenseMatrix x;  // samples x features
    DenseVector y;  // ±1
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_index(std::string_view s, std::size_t& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace detail

/// Two overlapping Gaussian classes: yᵢ = ±1 with equal probability and
/// xᵢ = yᵢ·(separation/√d)·1 + N(0, I). Stands in for real classification
/// data in tests and demos.
inline LabeledData generate_classification(std::size_t n, std::size_t d, std::uint64_t seed,
                                           double separation = 1.0) {
    require(n >= 1 && d >= 1, "bad-spec", "n and d must be positive");
    LabeledData out{DenseMatrix(n, d), DenseVector(n)};
    RandomStream labels(seed, RandomStream::Targets);
    RandomStream feats(seed, RandomStream::Matrix);
    const double shift = separation / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < n; ++i) out.y[i] = labels.uniform() < 0.5 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) out.x(i, j) = out.y[i] * shift + feats.normal();
    return out;
}

/// Labels in {−1,+1} are kept; a {1,2} file is remapped 1 → +1, 2 → −1.
/// Any other label set is rejected with "bad-labels".
inline LabeledData parse_sparse_classification(std::istream& in, const std::string& source = "<stream>") {
    struct Row {
        double label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Row> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& why) {
        throw Error("malformed", source + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        Row row;
        if (!detail::parse_double(tok, row.label)) fail("bad label '" + tok + "'");
        std::size_t last = 0;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) fail("expected idx:val, got '" + tok + "'");
            std::size_t idx = 0;
            double val = 0.0;
            if (!detail::parse_index(std::string_view(tok).substr(0, colon), idx) || idx == 0)
                fail("bad feature index in '" + tok + "'");
            if (!detail::parse_double(std::string_view(tok).substr(colon + 1), val) || !std::isfinite(val))
                fail("bad feature value in '" + tok + "'");
            if (idx <= last) fail("feature indices must be strictly increasing");
            last = idx;
            max_index = std::max(max_index, idx);
            row.entries.emplace_back(idx - 1, val);
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "empty-data", source + ": no samples");

    std::set<double> labels;
    for (const auto& r : rows) labels.insert(r.label);
    const bool signed_labels = std::all_of(labels.begin(), labels.end(), [](double l) { return l == 1.0 || l == -1.0; });
    const bool one_two = std::all_of(labels.begin(), labels.end(), [](double l) { return l == 1.0 || l == 2.0; });
    require(signed_labels || one_two, "bad-labels", source + ": labels must be {-1,+1} or {1,2}");

    LabeledData out{DenseMatrix(rows.size(), std::max<std::size_t>(max_index, 1)), DenseVector(rows.size())};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double l = rows[i].label;
        out.y[i] = signed_labels ? l : (l == 1.0 ? 1.0 : -1.0);
        for (const auto& [j, v] : rows[i].entries) out.x(i, j) = v;
    }
    return out;
}

inline LabeledData read_sparse_classification(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "io", "cannot open '" + path + "'");
    return parse_sparse_classification(in, path);
}

inline void write_sparse_classification(const std::string& path, const LabeledData& data) {
    std::ofstream out(path);
    require(out.good(), "io", "cannot write '" + path + "'");
    char buf[64];
    for (std::size_t i = 0; i < data.x.rows(); ++i) {
        out << (data.y[i] > 0 ? "+1" : "-1");
        for (std::size_t j = 0; j < data.x.cols(); ++j) {
            if (data.x(i, j) == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.17g", data.x(i, j));
            out << ' ' << (j + 1) << ':' << buf;
        }
        out << '\n';
    }
    require(out.good(), "io", "write failed for '" + path + "'");
}

struct Split {
    LabeledData train;
    LabeledData test;
};

inline LabeledData select_rows(const LabeledData& src, std::span<const std::size_t> idx) {
    LabeledData out{DenseMatrix(idx.size(), src.x.cols()), DenseVector(idx.size())};
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.y[r] = src.y[idx[r]];
        for (std::size_t j = 0; j < src.x.cols(); ++j) out.x(r, j) = src.x(idx[r], j);
    }
    return out;
}

/// Seeded Fisher-Yates shuffle, then the first round(fraction·N) rows train.
/// Both sides are kept non-empty.
inline Split subsample(const LabeledData& data, double fraction, std::uint64_t seed) {
    require(fraction > 0.0 && fraction < 1.0, "bad-fraction", "fraction must lie in (0, 1)");
    const std::size_t n = data.x.rows();
    require(n >= 2, "empty-data", "need at least two samples to split");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RandomStream rng(seed, RandomStream::Shuffle);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    std::size_t n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    const std::span<const std::size_t> all(order);
    return {select_rows(data, all.first(n_train)), select_rows(data, all.subspan(n_train))};
}

// ---------------------------------------------------------------------------
// Dense matrix text container: "rows cols" header, then one row per line
// ---------------------------------------------------------------------------

inline void write_dense(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path);
    require(out.good(), "io", "cannot write '" + path + "'");
    out << m.rows() << ' ' << m.cols() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << (j ? " " : "") << buf;
        }
        out << '\n';
    }
    require(out.good(), "io", "write failed for '" + path + "'");
}

inline DenseMatrix read_dense(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "io", "cannot open '" + path + "'");
    std::size_t rows = 0, cols = 0;
    require(static_cast<bool>(in >> rows >> cols) && rows > 0 && cols > 0, "malformed",
            path + ": bad dimension header");
    DenseMatrix m(rows, cols);
    std::string tok;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            require(static_cast<bool>(in >> tok) && detail::parse_double(tok, m(i, j)), "malformed",
                    path + ": bad value at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1));
        }
    return m;
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

inline constexpr const char* kTraceHeader = "t,f_x,f_theta_x,theta,eta,gamma,elapsed_ns";

inline void write_trace(std::ostream& out, const Trace& trace) {
    out << kTraceHeader << '\n';
    char buf[256];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%lld", r.t, r.f_x, r.f_theta_x,
                      r.theta, r.eta, r.gamma, static_cast<long long>(r.elapsed_ns));
        out << buf << '\n';
    }
}

inline void write_trace(const std::string& path, const Trace& trace) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "io", "cannot write trace '" + path + "'");
    write_trace(out, trace);
    require(out.good(), "io", "write failed for trace '" + path + "'");
}

inline Trace parse_trace(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "malformed", source + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == kTraceHeader, "malformed", source + ":1: unexpected header '" + line + "'");
    Trace trace;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        auto fail = [&](const std::string& why) {
            throw Error("malformed", source + ":" + std::to_string(lineno) + ": " + why);
        };
        if (fields.size() != 7) fail("expected 7 fields, got " + std::to_string(fields.size()));
        IterationRecord r;
        long long ns = 0;
        const auto ns_res = std::from_chars(fields[6].data(), fields[6].data() + fields[6].size(), ns);
        if (!detail::parse_index(fields[0], r.t) || !detail::parse_double(fields[1], r.f_x) ||
            !detail::parse_double(fields[2], r.f_theta_x) || !detail::parse_double(fields[3], r.theta) ||
            !detail::parse_double(fields[4], r.eta) || !detail::parse_double(fields[5], r.gamma) ||
            ns_res.ec != std::errc() || ns_res.ptr != fields[6].data() + fields[6].size())
            fail("unparsable field");
        r.elapsed_ns = ns;
        if (trace.empty() ? r.t != 1 : r.t <= trace.back().t) fail("iteration counter must start at 1 and increase");
        trace.push_back(r);
    }
    return trace;
}

inline Trace read_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "io", "cannot open trace '" + path + "'");
    return parse_trace(in, path);
}

} // namespace rapid
