#pragma once

#include <tfpc/density.hpp>
#include <tfpc/discretize.hpp>
#include <tfpc/missing.hpp>
#include <tfpc/plot.hpp>

namespace tfpc {

enum class na_method { drop, naexp, mom, mar };

inline na_method parse_na_method(std::string_view s) {
    if (s == "drop") return na_method::drop;
    if (s == "naexp") return na_method::naexp;
    if (s == "mom") return na_method::mom;
    if (s == "mar") return na_method::mar;
    throw invalid_argument("unknown NA method '" + std::string(s) + "' (expected drop, naexp, mom or mar)");
}

inline std::string_view to_string(na_method m) {
    switch (m) {
    case na_method::drop: return "drop";
    case na_method::naexp: return "naexp";
    case na_method::mom: return "mom";
    case na_method::mar: return "mar";
    }
    return "drop";
}

/// Parses "col=level:mult".
inline accentuation parse_accentuation(std::string_view s) {
    const auto eq = s.find('=');
    const auto colon = s.rfind(':');
    if (eq == std::string_view::npos || colon == std::string_view::npos || colon < eq)
        throw invalid_argument("accentuate expects col=level:mult, got '" + std::string(s) + "'");
    auto mult = parse_number(s.substr(colon + 1));
    if (!mult) throw invalid_argument("accentuate: bad multiplier in '" + std::string(s) + "'");
    return {std::string(s.substr(0, eq)), std::string(s.substr(eq + 1, colon - eq - 1)), *mult};
}

/// Splits "a,b,c" on commas; empty input gives an empty list.
inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(',', start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Everything that determines a frequency table in the categorical pipeline.
struct count_settings {
    std::vector<std::string> columns;                   ///< empty: every column
    std::optional<std::size_t> nlevels;                 ///< discretize continuous columns; else factorize them
    std::map<std::string, std::size_t> nlevel_overrides;
    na_method method = na_method::drop;
    double na_exp = 1.0;
    std::optional<accentuation> accentuate;
    unsigned threads = 1;

    friend bool operator==(const count_settings&, const count_settings&) = default;
};

/// Selects the configured columns and makes each one discrete: quantile bins
/// when a level count applies to it, one level per distinct value otherwise.
inline table discrete_view(const table& t, const count_settings& s) {
    table view = s.columns.empty() ? t : t.select(s.columns);
    std::vector<std::string> binned, factored;
    for (const auto& c : view.columns()) {
        if (c.is_discrete()) continue;
        if (s.nlevels || s.nlevel_overrides.contains(c.name())) binned.push_back(c.name());
        else factored.push_back(c.name());
    }
    if (!binned.empty()) {
        discretize_spec spec;
        spec.nlevels = s.nlevels.value_or(5);
        spec.overrides = s.nlevel_overrides;
        view = discretize(view, spec, binned);
    }
    if (!factored.empty()) view = make_factor(view, factored);
    return view;
}

inline frequency_table compute_frequencies(const table& discrete, const count_settings& s) {
    switch (s.method) {
    case na_method::drop:
    case na_method::naexp: {
        count_config cfg;
        cfg.mode = s.method == na_method::naexp ? na_mode::partial_credit : na_mode::drop;
        cfg.na_exp = s.na_exp;
        cfg.accentuate = s.accentuate;
        cfg.threads = s.threads;
        return count_tuples(discrete, cfg);
    }
    case na_method::mom: {
        if (s.accentuate) warn("accentuate is ignored by the moment estimator");
        const double q = estimate_q(discrete);
        if (q == 0.0) return count_tuples(discrete);
        return mom_frequency_table(discrete, q);
    }
    case na_method::mar:
        if (s.accentuate) warn("accentuate is ignored by the update estimator");
        return mar_update(discrete, mar_refresh::per_row);
    }
    throw invalid_argument("unknown NA method");
}

struct selection_settings {
    long long lines = 50;
    std::vector<std::string> order;
    std::optional<std::string> group;   ///< facet column
};

inline plot_model plot_frequencies(const frequency_table& ft, const selection_settings& s) {
    const auto top = top_patterns(ft, s.lines);
    plot_options opts;
    opts.column_order = s.order;
    opts.facet_column = s.group;
    return build_plot(top, ft, opts);
}

struct density_settings {
    std::vector<std::string> columns;   ///< empty: every continuous column except the group
    std::size_t k = 0;
    bool locmax = false;
    std::optional<std::string> group;
    long long lines = 50;
    std::vector<std::string> order;
    bool labels = false;
    double jitter = 0;                  ///< amount factor; 0 disables
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct density_run {
    std::vector<std::size_t> source_rows;   ///< rows of the input used (complete cases)
    std::vector<density_score> scores;      ///< indexed like source_rows
    std::vector<ranked_row> selected;       ///< rows of the input table
    plot_model model;
};

/// Complete cases -> optional jitter -> centre/scale -> k-NN density -> top-F
/// (per group when grouped) or local maxima -> plot of the raw values.
inline density_run run_density(const table& t, const density_settings& s) {
    std::vector<std::string> cols = s.columns;
    if (cols.empty())
        for (const auto& c : t.columns())
            if (c.is_continuous() && (!s.group || c.name() != *s.group)) cols.push_back(c.name());
    if (cols.empty()) throw invalid_argument("density: no continuous columns");
    auto used = cols;
    if (s.group) used.push_back(*s.group);
    table view = t.select(used);
    if (s.group && view[*s.group].is_continuous()) view = make_factor(view, std::vector<std::string>{*s.group});
    auto complete = complete_rows(view);
    if (complete.complete.rows() < 2) throw invalid_argument("density: fewer than two complete rows");

    table work = complete.complete;
    if (s.jitter > 0) work = jitter(work, s.jitter, s.seed);
    work = center_scale(work).scaled;

    density_config cfg;
    cfg.k = s.k;
    cfg.columns = cols;
    cfg.group_column = s.group;
    cfg.threads = s.threads;

    density_run run;
    run.source_rows = complete.rows;
    run.scores = knn_density(work, cfg);

    std::vector<std::size_t> picked;
    if (s.locmax) {
        picked = locmax_rows(work, run.scores, cfg);
        if (s.lines > 0 && picked.size() > static_cast<std::size_t>(s.lines)) picked.resize(static_cast<std::size_t>(s.lines));
    } else if (s.group) {
        const auto& g = work[*s.group];
        for (std::size_t lv = 0; lv < g.level_count(); ++lv) {
            std::vector<density_score> sub;
            for (const auto& sc : run.scores)
                if (g.code(sc.row) == static_cast<std::int32_t>(lv)) sub.push_back(sc);
            if (sub.empty()) continue;
            std::sort(sub.begin(), sub.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
            for (std::size_t i = 0; i < sub.size(); ++i) sub[i].rank = i + 1;
            for (auto r : top_density_rows(sub, s.lines)) picked.push_back(r);
        }
    } else {
        picked = top_density_rows(run.scores, s.lines);
    }
    for (auto r : picked) run.selected.push_back({complete.rows[r], run.scores[r].density});

    plot_options opts;
    opts.column_order = s.order.empty() ? cols : s.order;
    opts.labels = s.labels;
    opts.facet_column = s.group;
    run.model = build_plot(run.selected, view, opts);
    return run;
}

/// Ordinary parallel-coordinates plot of a uniform random subsample, for
/// comparison with the top-frequency view.
inline plot_model subsample_plot(const table& t, std::size_t count, std::uint64_t seed,
                                 const std::vector<std::string>& order = {}) {
    auto rows = subsample_rows(t.rows(), count, seed);
    std::sort(rows.begin(), rows.end());
    std::vector<ranked_row> sel;
    for (auto r : rows)
        if (t.row_complete(r)) sel.push_back({r, 1.0});
    plot_options opts;
    opts.column_order = order;
    return build_plot(sel, t, opts);
}

} // namespace tfpc
