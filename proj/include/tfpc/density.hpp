#pragma once

#include <tfpc/table.hpp>

#include <thread>

namespace tfpc {

struct density_config {
    std::size_t k = 0;                          ///< neighbour count; 0 picks default_k(n)
    std::vector<std::string> columns;           ///< plotted columns; empty means every continuous column
    std::optional<std::string> group_column;    ///< neighbours are sought within the same group only
    unsigned threads = 1;
};

struct density_score {
    std::size_t row = 0;
    double density = 0;       ///< k / D(t)^q, comparable up to a shared constant
    double knn_radius = 0;    ///< D(t), distance to the k-th nearest other row
    std::size_t rank = 0;     ///< 1 = densest

    friend bool operator==(const density_score&, const density_score&) = default;
};

/// max(1, round(n/100)) capped at 50, and kept below n.
inline std::size_t default_k(std::size_t n) {
    std::size_t k = std::max<std::size_t>(1, (n + 50) / 100);
    k = std::min<std::size_t>(k, 50);
    if (n >= 2) k = std::min(k, n - 1);
    return k;
}

namespace detail {

/// Row-major points of the plotted columns plus per-row group ids.
struct knn_input {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> points;
    std::vector<std::int32_t> groups;                  ///< empty when ungrouped
    std::vector<std::vector<std::size_t>> members;    ///< rows per group (one bucket when ungrouped)
    std::size_t k = 0;
};

inline knn_input prepare_knn(const table& t, const density_config& cfg) {
    knn_input in;
    in.n = t.rows();
    std::vector<std::size_t> cols;
    if (cfg.columns.empty()) {
        for (std::size_t c = 0; c < t.cols(); ++c)
            if (t[c].is_continuous() && (!cfg.group_column || t[c].name() != *cfg.group_column)) cols.push_back(c);
    } else {
        for (const auto& name : cfg.columns) cols.push_back(t.index_of(name));
    }
    if (cols.empty()) throw invalid_argument("knn_density: no continuous columns to plot");
    for (auto c : cols) {
        if (!t[c].is_continuous())
            throw invalid_argument("knn_density: column '" + t[c].name() + "' is not continuous");
        if (t[c].na_count() > 0)
            throw invalid_argument("knn_density: column '" + t[c].name() +
                                   "' has NA cells; use complete rows first");
    }
    in.dim = cols.size();
    in.points.resize(in.n * in.dim);
    for (std::size_t j = 0; j < in.dim; ++j) {
        auto v = t[cols[j]].numbers();
        for (std::size_t r = 0; r < in.n; ++r) in.points[r * in.dim + j] = v[r];
    }

    if (cfg.group_column) {
        const auto& g = t[*cfg.group_column];
        if (!g.is_discrete())
            throw invalid_argument("knn_density: group column '" + g.name() + "' must be categorical");
        in.groups.assign(g.codes().begin(), g.codes().end());
        in.members.resize(g.level_count());
        for (std::size_t r = 0; r < in.n; ++r) {
            if (in.groups[r] == na_code)
                throw invalid_argument("knn_density: group column '" + g.name() + "' has NA cells");
            in.members[static_cast<std::size_t>(in.groups[r])].push_back(r);
        }
    } else {
        in.members.emplace_back(in.n);
        std::iota(in.members.front().begin(), in.members.front().end(), std::size_t{0});
    }

    in.k = cfg.k ? cfg.k : default_k(in.n);
    for (std::size_t gi = 0; gi < in.members.size(); ++gi) {
        const auto m = in.members[gi].size();
        if (m == 0) continue;
        if (in.k < 1 || in.k >= m)
            throw invalid_argument("knn_density: k=" + std::to_string(in.k) + " must satisfy 1 <= k < " +
                                   std::to_string(m) + (cfg.group_column ? " (group size)" : " (rows)"));
    }
    return in;
}

inline double squared_distance(const double* a, const double* b, std::size_t dim) noexcept {
    double s = 0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

/// Exact k nearest other rows of every row, ordered by (distance, row index).
/// `neighbours` receives n*k row ids when non-null.
inline std::vector<double> knn_search(const knn_input& in, unsigned threads,
                                      std::vector<std::size_t>* neighbours) {
    std::vector<double> radius(in.n);
    if (neighbours) neighbours->assign(in.n * in.k, 0);
    const auto& all_members = in.members;

    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t r = begin; r < end; ++r) {
            const auto& pool = in.groups.empty() ? all_members.front()
                                                 : all_members[static_cast<std::size_t>(in.groups[r])];
            cand.clear();
            const double* pr = &in.points[r * in.dim];
            for (auto o : pool)
                if (o != r) cand.emplace_back(squared_distance(pr, &in.points[o * in.dim], in.dim), o);
            auto kth = cand.begin() + static_cast<std::ptrdiff_t>(in.k - 1);
            std::nth_element(cand.begin(), kth, cand.end());
            radius[r] = std::sqrt(kth->first);
            if (neighbours) {
                std::sort(cand.begin(), kth + 1);
                for (std::size_t i = 0; i < in.k; ++i) (*neighbours)[r * in.k + i] = cand[i].second;
            }
        }
    };

    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(in.n, 1))));
    if (threads == 1) {
        work(0, in.n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (in.n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min(in.n, t * chunk), e = std::min(in.n, b + chunk);
            pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return radius;
}

inline std::vector<density_score> scores_from_radius(const std::vector<double>& radius, std::size_t k,
                                                     std::size_t dim) {
    const auto n = radius.size();
    for (std::size_t r = 0; r < n; ++r)
        if (!(radius[r] > 0)) throw divide_by_zero_error(r);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return radius[a] != radius[b] ? radius[a] < radius[b] : a < b;
    });
    std::vector<density_score> scores(n);
    for (std::size_t r = 0; r < n; ++r) {
        scores[r].row = r;
        scores[r].knn_radius = radius[r];
        scores[r].density = static_cast<double>(k) / std::pow(radius[r], static_cast<double>(dim));
    }
    for (std::size_t i = 0; i < n; ++i) scores[order[i]].rank = i + 1;
    return scores;
}

} // namespace detail

/// k-NN density of every row: D(t) is the Euclidean distance to the k-th
/// nearest other row (within the row's group when grouped) and the score is
/// k / D(t)^q. Ranks order by D(t) ascending, ties by row index. The result
/// is indexed by row.
inline std::vector<density_score> knn_density(const table& t, const density_config& cfg) {
    const auto in = detail::prepare_knn(t, cfg);
    const auto radius = detail::knn_search(in, cfg.threads, nullptr);
    return detail::scores_from_radius(radius, in.k, in.dim);
}

/// F > 0: the F densest rows. F < 0: the |F| least dense rows. Both ordered by rank.
inline std::vector<std::size_t> top_density_rows(std::span<const density_score> scores, long long lines) {
    if (lines == 0) throw invalid_argument("top_density_rows: |F| must be >= 1");
    std::size_t want = static_cast<std::size_t>(lines < 0 ? -lines : lines);
    if (want > scores.size()) {
        warn("top_density_rows: |F|=" + std::to_string(want) + " exceeds " + std::to_string(scores.size()) +
             " rows; clamped");
        want = scores.size();
    }
    std::vector<const density_score*> by_rank(scores.size());
    for (const auto& s : scores) by_rank.at(s.rank - 1) = &s;
    std::vector<std::size_t> out;
    out.reserve(want);
    const std::size_t first = lines > 0 ? 0 : scores.size() - want;
    for (std::size_t i = first; i < first + want; ++i) out.push_back(by_rank[i]->row);
    return out;
}

/// Rows that outrank each of their own k nearest neighbours: local density
/// modes. Ordered by rank.
inline std::vector<std::size_t> locmax_rows(const table& t, std::span<const density_score> scores,
                                            const density_config& cfg) {
    const auto in = detail::prepare_knn(t, cfg);
    if (scores.size() != in.n) throw invalid_argument("locmax_rows: scores do not match the table");
    std::vector<std::size_t> nb;
    detail::knn_search(in, cfg.threads, &nb);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < in.n; ++r) {
        bool is_max = true;
        for (std::size_t i = 0; i < in.k && is_max; ++i) is_max = scores[r].rank < scores[nb[r * in.k + i]].rank;
        if (is_max) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return scores[a].rank < scores[b].rank; });
    return out;
}

} // namespace tfpc
