#pragma once

#include <tfpc/frequency.hpp>

#include <Eigen/Dense>

#include <map>

namespace tfpc {

/// A possibly incomplete tuple: level index per column, `na_code` where missing.
using observed_pattern = std::vector<std::int32_t>;

inline std::size_t na_count(const observed_pattern& t) {
    return static_cast<std::size_t>(std::count(t.begin(), t.end(), na_code));
}

/// True iff `full` agrees with `observed` on every non-missing position.
inline bool completes(const pattern& full, const observed_pattern& observed) {
    for (std::size_t c = 0; c < observed.size(); ++c)
        if (observed[c] != na_code && static_cast<std::int32_t>(full[c]) != observed[c]) return false;
    return true;
}

/// Calls `fn(pattern)` for every completion of `observed` over `level_counts`.
template <typename Fn>
void for_each_completion(const observed_pattern& observed, std::span<const std::size_t> level_counts, Fn&& fn) {
    pattern p(observed.size());
    std::vector<std::size_t> missing;
    for (std::size_t c = 0; c < observed.size(); ++c) {
        if (observed[c] == na_code) {
            if (level_counts[c] == 0) return;
            missing.push_back(c);
            p[c] = 0;
        } else {
            p[c] = static_cast<std::uint32_t>(observed[c]);
        }
    }
    for (;;) {
        fn(static_cast<const pattern&>(p));
        std::size_t j = 0;
        for (; j < missing.size(); ++j) {
            auto c = missing[j];
            if (++p[c] < level_counts[c]) break;
            p[c] = 0;
        }
        if (j == missing.size()) return;
    }
}

/// Empirical distribution of distinct observed tuples.
struct observed_distribution {
    std::vector<std::size_t> level_counts;
    std::vector<std::pair<observed_pattern, double>> proportions;
};

inline observed_distribution observe(const table& t) {
    if (!t.all_discrete()) throw invalid_argument("missing-data estimation needs all columns discrete");
    observed_distribution d;
    for (const auto& c : t.columns()) d.level_counts.push_back(c.level_count());
    std::map<observed_pattern, std::size_t> counts;
    observed_pattern row(t.cols());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) row[c] = t[c].code(r);
        ++counts[row];
    }
    const auto n = static_cast<double>(t.rows());
    for (const auto& [pt, k] : counts) d.proportions.emplace_back(pt, static_cast<double>(k) / n);
    return d;
}

struct mom_options {
    /// Unknowns range over the full Cartesian product instead of the
    /// completions reachable from observed tuples.
    bool full_space = false;
    std::size_t max_unknowns = 4096;
};

struct mom_result {
    std::vector<pattern> patterns;
    std::vector<double> probabilities;   ///< clipped at 0, sums to 1
    std::vector<double> raw_solution;    ///< least-squares solution before clipping
    double residual = 0;                 ///< ||A x - b|| of the raw solution
    std::size_t rank = 0;
};

/// Method-of-moments estimate of intact-tuple probabilities under MCAR.
///
/// Each observed tuple t' contributes the equation
///   P(X' = t') = (1-q)^(p-c(t')) q^c(t') * sum_{t in M(t')} p_t,
/// with M(t') the intact tuples that agree with t' on its observed cells.
/// Every candidate intact tuple also contributes its own equation (left-hand
/// side 0 when never observed), and a final row imposes sum p_t = 1. The
/// system is solved in the least-squares sense; negative entries are clipped
/// to zero and the rest renormalized.
inline mom_result mom_estimate(const observed_distribution& obs, double q, const mom_options& opts = {}) {
    if (!(q > 0.0 && q < 1.0)) throw invalid_argument("mom_estimate: q must lie in (0, 1), got " + format_number(q));
    const std::size_t p = obs.level_counts.size();

    std::map<pattern, std::size_t> unknown_index;
    auto add_unknown = [&](const pattern& t) {
        if (unknown_index.size() >= opts.max_unknowns && !unknown_index.contains(t))
            throw invalid_argument("mom_estimate: more than " + std::to_string(opts.max_unknowns) + " candidate tuples");
        unknown_index.emplace(t, 0);
    };
    if (opts.full_space) {
        for_each_completion(observed_pattern(p, na_code), obs.level_counts, add_unknown);
    } else {
        for (const auto& [t, share] : obs.proportions) for_each_completion(t, obs.level_counts, add_unknown);
    }
    mom_result res;
    for (auto& [t, idx] : unknown_index) {
        idx = res.patterns.size();
        res.patterns.push_back(t);
    }
    const std::size_t u = res.patterns.size();
    if (u == 0) throw invalid_argument("mom_estimate: no candidate tuples");

    std::map<observed_pattern, double> lhs;
    for (const auto& [t, share] : obs.proportions) lhs[t] += share;
    for (const auto& t : res.patterns) lhs.try_emplace(observed_pattern(t.begin(), t.end()), 0.0);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lhs.size() + 1), static_cast<Eigen::Index>(u));
    Eigen::VectorXd b(static_cast<Eigen::Index>(lhs.size() + 1));
    Eigen::Index row = 0;
    for (const auto& [t, share] : lhs) {
        const auto c = na_count(t);
        const double coef = std::pow(1.0 - q, static_cast<double>(p - c)) * std::pow(q, static_cast<double>(c));
        for_each_completion(t, obs.level_counts, [&](const pattern& full) {
            auto it = unknown_index.find(full);
            if (it != unknown_index.end()) a(row, static_cast<Eigen::Index>(it->second)) = coef;
        });
        b(row) = share;
        ++row;
    }
    a.row(row).setOnes();
    b(row) = 1.0;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    res.rank = static_cast<std::size_t>(qr.rank());
    if (res.rank < u) throw rank_deficient_error(res.rank, u);
    const Eigen::VectorXd x = qr.solve(b);
    res.residual = (a * x - b).norm();

    res.raw_solution.assign(x.data(), x.data() + x.size());
    res.probabilities.resize(u);
    double sum = 0;
    for (std::size_t i = 0; i < u; ++i) sum += res.probabilities[i] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
    if (!(sum > 0)) throw error("mom_estimate: every estimate clipped to zero");
    for (auto& v : res.probabilities) v /= sum;
    return res;
}

inline mom_result mom_estimate(const table& t, double q, const mom_options& opts = {}) {
    return mom_estimate(observe(t), q, opts);
}

/// Forward map: observed-tuple probabilities implied by intact-tuple
/// probabilities under MCAR with per-cell missingness q.
inline std::map<observed_pattern, double> mcar_forward(const mom_result& est, std::span<const std::size_t> level_counts,
                                                       double q) {
    std::map<observed_pattern, double> out;
    const std::size_t p = level_counts.size();
    for (std::size_t i = 0; i < est.patterns.size(); ++i) {
        const auto& t = est.patterns[i];
        for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
            observed_pattern o(t.begin(), t.end());
            std::size_t c = 0;
            for (std::size_t j = 0; j < p; ++j)
                if (mask & (1u << j)) {
                    o[j] = na_code;
                    ++c;
                }
            out[o] += est.probabilities[i] * std::pow(1.0 - q, static_cast<double>(p - c)) *
                      std::pow(q, static_cast<double>(c));
        }
    }
    return out;
}

/// Method-of-moments frequencies scaled to the row count, so they rank like counts.
inline frequency_table mom_frequency_table(const table& t, double q, const mom_options& opts = {}) {
    auto est = mom_estimate(t, q, opts);
    auto ft = frequency_table::for_table(t);
    const auto n = static_cast<double>(t.rows());
    for (std::size_t i = 0; i < est.patterns.size(); ++i)
        if (est.probabilities[i] > 0) ft.add(est.patterns[i], est.probabilities[i] * n);
    ft.mark(frequency_provenance::estimator_adjusted);
    return ft;
}

enum class mar_refresh { per_row, never };

/// Update-method frequencies under MAR.
///
/// Starts from the intact-case counts. Each row with one missing column V and
/// observed part U = u then spreads unit mass over the levels v of V in
/// proportion to
///   P(M=1 | U=u) * P(U=u, V=v) / P(M=1, U=u),
/// where both missingness terms come from all rows and P(U=u, V=v) from the
/// working table (refreshed after every row under `per_row`). Mass left over
/// goes uniformly to the levels of V without support; if every level has
/// support, or the terms sum past one, the conditional is renormalized.
inline frequency_table mar_update(const table& t, mar_refresh refresh = mar_refresh::per_row) {
    auto ft = frequency_table::for_table(t);
    const std::size_t n = t.rows(), p = t.cols();
    std::vector<std::size_t> level_counts;
    for (const auto& c : t.columns()) level_counts.push_back(c.level_count());

    std::vector<std::size_t> incomplete;
    pattern full(p);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t missing = 0;
        for (std::size_t c = 0; c < p; ++c) {
            const auto v = t[c].code(r);
            if (v == na_code) ++missing;
            else full[c] = static_cast<std::uint32_t>(v);
        }
        if (missing == 0) ft.add(full, 1.0);
        else if (missing == 1) incomplete.push_back(r);
        else
            throw invalid_argument("mar_update: row " + std::to_string(r) + " has " + std::to_string(missing) +
                                   " missing cells; only single-NA rows are supported");
    }
    if (incomplete.empty()) return ft;

    auto row_tuple = [&](std::size_t r) {
        observed_pattern o(p);
        for (std::size_t c = 0; c < p; ++c) o[c] = t[c].code(r);
        return o;
    };

    // For observed part u of missing column j: rows with U=u (V present or
    // not) and rows with U=u and V missing. A row matches only if every
    // column other than j is observed and equal.
    struct support {
        std::size_t with_u = 0;
        std::size_t missing_v = 0;
    };
    std::map<observed_pattern, support> counts;   // key: tuple with column j set to na_code
    for (auto r : incomplete) counts.try_emplace(row_tuple(r));
    for (std::size_t r = 0; r < n; ++r) {
        auto o = row_tuple(r);
        for (std::size_t j = 0; j < p; ++j) {
            bool others_observed = true;
            for (std::size_t c = 0; c < p && others_observed; ++c)
                if (c != j && o[c] == na_code) others_observed = false;
            if (!others_observed) continue;
            auto key = o;
            key[j] = na_code;
            auto it = counts.find(key);
            if (it == counts.end()) continue;
            ++it->second.with_u;
            if (o[j] == na_code) ++it->second.missing_v;
        }
    }

    auto conditional = [&](const observed_pattern& key, const frequency_table& current) {
        std::size_t j = 0;
        while (key[j] != na_code) ++j;
        const auto& sup = counts.at(key);
        const double p_m_given_u = static_cast<double>(sup.missing_v) / static_cast<double>(sup.with_u);
        const double p_m_and_u = static_cast<double>(sup.missing_v) / static_cast<double>(n);
        if (!(p_m_and_u > 0)) throw error("mar_update: internal inconsistency, P(M=1, U=u) = 0 for an observed row");

        std::vector<double> cond(level_counts[j], 0.0);
        pattern full_p(key.begin(), key.end());
        const double total = current.total_weight();
        double sum = 0;
        std::size_t unsupported = 0;
        for (std::size_t v = 0; v < cond.size(); ++v) {
            full_p[j] = static_cast<std::uint32_t>(v);
            const double p_uv = total > 0 ? current.weight(full_p) / total : 0.0;
            cond[v] = p_m_given_u * p_uv / p_m_and_u;
            sum += cond[v];
            unsupported += cond[v] == 0.0;
        }
        if (sum == 0.0) {
            warn("mar_update: no intact support for an observed part of column '" + t[j].name() +
                 "'; mass spread uniformly");
            for (auto& c : cond) c = 1.0 / static_cast<double>(cond.size());
        } else if (sum < 1.0 && unsupported > 0) {
            const double share = (1.0 - sum) / static_cast<double>(unsupported);
            for (auto& c : cond)
                if (c == 0.0) c = share;
        } else {
            for (auto& c : cond) c /= sum;
        }
        return std::pair{j, std::move(cond)};
    };

    auto apply = [&](const observed_pattern& key, std::size_t j, const std::vector<double>& cond, double times,
                     frequency_table& target) {
        pattern full_p(key.begin(), key.end());
        for (std::size_t v = 0; v < cond.size(); ++v) {
            if (cond[v] == 0.0) continue;
            full_p[j] = static_cast<std::uint32_t>(v);
            target.add(full_p, cond[v] * times);
        }
    };

    if (refresh == mar_refresh::per_row) {
        for (auto r : incomplete) {
            const auto key = row_tuple(r);
            const auto [j, cond] = conditional(key, ft);
            apply(key, j, cond, 1.0, ft);
        }
    } else {
        // Identical rows receive identical mass; grouping them in key order
        // makes the result independent of row order.
        std::map<observed_pattern, std::size_t> groups;
        for (auto r : incomplete) ++groups[row_tuple(r)];
        const auto base = ft;
        for (const auto& [key, times] : groups) {
            const auto [j, cond] = conditional(key, base);
            apply(key, j, cond, static_cast<double>(times), ft);
        }
    }
    ft.mark(frequency_provenance::estimator_adjusted);
    return ft;
}

struct mcar_report {
    double q = 0;
    double predicted_complete_rate = 0;
    double empirical_complete_rate = 0;
};

/// Probability that a row of p cells is complete under MCAR.
inline double predicted_complete_rate(double q, std::size_t p) {
    return std::pow(1.0 - q, static_cast<double>(p));
}

/// Compares the complete-row rate MCAR predicts with the observed one; a wide
/// gap means missing cells clump within rows.
inline mcar_report mcar_diagnostic(const table& t) {
    mcar_report r;
    r.q = estimate_q(t);
    r.predicted_complete_rate = predicted_complete_rate(r.q, t.cols());
    std::size_t complete = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) complete += t.row_complete(i);
    r.empirical_complete_rate = static_cast<double>(complete) / static_cast<double>(t.rows());
    return r;
}

} // namespace tfpc
