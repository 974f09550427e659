#pragma once

#include <tfpc/table.hpp>

#include <cstdio>
#include <map>
#include <random>

namespace tfpc {

struct discretize_spec {
    std::size_t nlevels = 5;
    std::map<std::string, std::size_t> overrides;   ///< per-column level counts
};

namespace detail {

inline std::string format_significant(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline double median_of_sorted(std::span<const double> v) {
    const auto m = v.size();
    return m % 2 ? v[m / 2] : (v[m / 2 - 1] + v[m / 2]) / 2.0;
}

/// Equal-count bins over the empirical quantiles i/nlevels; coinciding
/// quantiles merge their bins.
inline column discretize_column(const column& col, std::size_t nlevels) {
    std::vector<double> sorted;
    for (double x : col.numbers())
        if (!std::isnan(x)) sorted.push_back(x);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();

    // Upper bound of bin b is the inverse-ECDF quantile x_(ceil(b*m/K)).
    std::vector<double> upper;
    for (std::size_t b = 1; b <= nlevels && m > 0; ++b) {
        const std::size_t pos = (b * m + nlevels - 1) / nlevels;
        const double q = sorted[pos - 1];
        if (upper.empty() || q > upper.back()) upper.push_back(q);
    }
    if (m > 0 && sorted.front() == sorted.back())
        warn("discretize: column '" + col.name() + "' has a single distinct value");

    std::vector<std::vector<double>> members(upper.size());
    std::size_t lo = 0;
    for (std::size_t b = 0; b < upper.size(); ++b) {
        const auto hi = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), upper[b]) -
                                                 sorted.begin());
        members[b].assign(sorted.begin() + static_cast<std::ptrdiff_t>(lo),
                          sorted.begin() + static_cast<std::ptrdiff_t>(hi));
        lo = hi;
    }

    // Labels are bin medians at 4 significant digits, widened until unique.
    std::vector<std::string> labels(upper.size());
    for (int digits = 4;; ++digits) {
        for (std::size_t b = 0; b < upper.size(); ++b)
            labels[b] = format_significant(median_of_sorted(members[b]), digits);
        auto check = labels;
        std::sort(check.begin(), check.end());
        if (std::adjacent_find(check.begin(), check.end()) == check.end() || digits >= 17) break;
    }

    std::vector<std::int32_t> codes;
    codes.reserve(col.size());
    for (double x : col.numbers()) {
        if (std::isnan(x)) {
            codes.push_back(na_code);
            continue;
        }
        auto it = std::lower_bound(upper.begin(), upper.end(), x);
        codes.push_back(static_cast<std::int32_t>(it - upper.begin()));
    }
    return column::categorical(col.name(), std::move(labels), std::move(codes), column_kind::discretized);
}

} // namespace detail

/// Converts continuous columns to at most `nlevels` equal-count quantile bins
/// labelled by their member medians. With `targets` empty every continuous
/// column is converted; discrete columns pass through.
inline table discretize(const table& t, const discretize_spec& spec, std::span<const std::string> targets = {}) {
    auto check_levels = [](const std::string& where, std::size_t k) {
        if (k < 2) throw invalid_argument("discretize: nlevels must be >= 2 (" + where + ")");
    };
    check_levels("default", spec.nlevels);
    for (const auto& [name, k] : spec.overrides) {
        (void)t.index_of(name);
        check_levels(name, k);
    }
    std::vector<column> cols = t.columns();
    for (auto& col : cols) {
        if (col.is_discrete()) continue;
        if (!targets.empty() && std::find(targets.begin(), targets.end(), col.name()) == targets.end()) continue;
        auto it = spec.overrides.find(col.name());
        col = detail::discretize_column(col, it == spec.overrides.end() ? spec.nlevels : it->second);
    }
    return table(std::move(cols));
}

struct scale_entry {
    std::string column;
    double mean = 0;
    double stddev = 0;   ///< sample (n - 1) convention
};

using scale_params = std::vector<scale_entry>;

struct center_scale_result {
    table scaled;
    scale_params params;
};

/// Sample mean and standard deviation of the non-NA values.
inline scale_entry column_moments(const column& col) {
    double sum = 0;
    std::size_t m = 0;
    for (double x : col.numbers())
        if (!std::isnan(x)) {
            sum += x;
            ++m;
        }
    scale_entry e{col.name(), m ? sum / static_cast<double>(m) : 0.0, 0.0};
    if (m > 1) {
        double ss = 0;
        for (double x : col.numbers())
            if (!std::isnan(x)) ss += (x - e.mean) * (x - e.mean);
        e.stddev = std::sqrt(ss / static_cast<double>(m - 1));
    }
    return e;
}

/// Standardizes every continuous column with whole-table statistics. Columns
/// with zero spread map to zeros. NA cells stay NA.
inline center_scale_result center_scale(const table& t) {
    std::vector<column> cols = t.columns();
    scale_params params;
    for (auto& col : cols) {
        if (col.is_discrete()) continue;
        auto e = column_moments(col);
        std::vector<double> v(col.numbers().begin(), col.numbers().end());
        for (double& x : v) {
            if (std::isnan(x)) continue;
            x = e.stddev > 0 ? (x - e.mean) / e.stddev : 0.0;
        }
        col = column::continuous(col.name(), std::move(v));
        params.push_back(std::move(e));
    }
    return {table(std::move(cols)), std::move(params)};
}

/// Applies precomputed parameters, e.g. whole-data statistics to one group.
inline table apply_scale(const table& t, const scale_params& params) {
    std::vector<column> cols = t.columns();
    for (const auto& e : params) {
        auto& col = cols[t.index_of(e.column)];
        std::vector<double> v(col.numbers().begin(), col.numbers().end());
        for (double& x : v)
            if (!std::isnan(x)) x = e.stddev > 0 ? (x - e.mean) / e.stddev : 0.0;
        col = column::continuous(col.name(), std::move(v));
    }
    return table(std::move(cols));
}

/// Adds uniform noise on [-d, d) to every continuous column, with
/// d = amount_factor * (smallest positive gap between distinct values) / 2.
/// With amount_factor <= 1 the order of distinct values is preserved.
inline table jitter(const table& t, double amount_factor = 1.0, std::uint64_t seed = 0) {
    if (amount_factor < 0) throw invalid_argument("jitter: amount_factor must be >= 0");
    if (amount_factor == 0) return t;
    std::mt19937_64 rng(seed);
    std::vector<column> cols = t.columns();
    for (auto& col : cols) {
        if (col.is_discrete()) continue;
        std::vector<double> distinct;
        for (double x : col.numbers())
            if (!std::isnan(x)) distinct.push_back(x);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) {
            warn("jitter: column '" + col.name() + "' has a single distinct value; left unchanged");
            continue;
        }
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < distinct.size(); ++i) gap = std::min(gap, distinct[i] - distinct[i - 1]);
        const double d = amount_factor * gap / 2.0;
        std::uniform_real_distribution<double> noise(-d, d);
        std::vector<double> v(col.numbers().begin(), col.numbers().end());
        for (double& x : v)
            if (!std::isnan(x)) x += noise(rng);
        col = column::continuous(col.name(), std::move(v));
    }
    return table(std::move(cols));
}

/// `count` row indices drawn uniformly without replacement from [0, n), in draw order.
inline std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count < 1 || count > n)
        throw invalid_argument("subsample: N=" + std::to_string(count) + " outside [1, " + std::to_string(n) + "]");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    return idx;
}

inline table subsample(const table& t, std::size_t count, std::uint64_t seed) {
    const auto rows = subsample_rows(t.rows(), count, seed);
    return t.take_rows(rows);
}

} // namespace tfpc
