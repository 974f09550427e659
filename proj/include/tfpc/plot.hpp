#pragma once

#include <tfpc/frequency.hpp>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

namespace tfpc {

struct tick {
    std::string label;
    double pos = 0;   ///< height on the axis, in [0, 1]

    friend bool operator==(const tick&, const tick&) = default;
};

struct axis {
    std::string name;
    bool discrete = true;
    std::vector<tick> ticks;
    double min = 0;   ///< data range of a continuous axis (whole data set)
    double max = 1;

    friend bool operator==(const axis&, const axis&) = default;
};

struct polyline {
    std::vector<double> verts;    ///< one height in [0, 1] per axis
    std::vector<double> values;   ///< per axis: level index (discrete) or raw value (continuous)
    double weight = 0;
    std::size_t color = 0;        ///< index into the legend
    std::optional<std::size_t> label;
    bool highlighted = false;

    friend bool operator==(const polyline&, const polyline&) = default;
};

/// Conjunctive brush term: a level set on a discrete axis or a closed
/// interval of raw values on a continuous one.
struct brush_condition {
    std::string axis;
    std::vector<std::string> levels;
    std::optional<std::array<double, 2>> interval;

    friend bool operator==(const brush_condition&, const brush_condition&) = default;
};

struct legend_entry {
    std::array<double, 2> weight_range{};
    std::string color;

    friend bool operator==(const legend_entry&, const legend_entry&) = default;
};

struct facet;

struct plot_model {
    std::vector<axis> axes;
    std::vector<polyline> lines;
    std::vector<brush_condition> brush;
    std::vector<facet> facets;   ///< stacked sub-plots, in level order
    std::vector<legend_entry> legend;

    friend bool operator==(const plot_model&, const plot_model&);
};

struct facet {
    std::string level;
    plot_model model;

    friend bool operator==(const facet&, const facet&) = default;
};

inline bool operator==(const plot_model& a, const plot_model& b) {
    return a.axes == b.axes && a.lines == b.lines && a.brush == b.brush && a.facets == b.facets &&
           a.legend == b.legend;
}

/// Low-to-high weight colour ramp.
inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {"#313695", "#4575b4", "#74add1", "#abd9e9",
                                                    "#fdae61", "#f46d43", "#d73027", "#a50026"};
    return colors;
}

inline constexpr std::string_view brush_color = "#ff00ff";

struct plot_options {
    std::vector<std::string> column_order;        ///< empty keeps the source order
    bool labels = false;                          ///< tag row selections with 1-based row numbers
    std::optional<std::string> facet_column;
};

/// A row picked by the density pipeline with its weight (density).
struct ranked_row {
    std::size_t row = 0;
    double weight = 0;
};

namespace detail {

inline std::string format_tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

inline double level_position(std::size_t level, std::size_t count) {
    return count <= 1 ? 0.5 : static_cast<double>(level) / static_cast<double>(count - 1);
}

inline axis discrete_axis(std::string name, const std::vector<std::string>& levels) {
    axis a;
    a.name = std::move(name);
    a.discrete = true;
    for (std::size_t i = 0; i < levels.size(); ++i) a.ticks.push_back({levels[i], level_position(i, levels.size())});
    a.min = 0;
    a.max = levels.empty() ? 0 : static_cast<double>(levels.size() - 1);
    return a;
}

inline double continuous_position(const axis& a, double x) {
    return a.max > a.min ? (x - a.min) / (a.max - a.min) : 0.5;
}

inline axis continuous_axis(const column& col) {
    axis a;
    a.name = col.name();
    a.discrete = false;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : col.numbers())
        if (!std::isnan(x)) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    if (lo > hi) lo = hi = 0;
    a.min = lo;
    a.max = hi;
    constexpr int nticks = 5;
    for (int i = 0; i < nticks; ++i) {
        const double x = lo + (hi - lo) * i / (nticks - 1);
        a.ticks.push_back({format_tick(x), continuous_position(a, x)});
        if (hi == lo) break;
    }
    return a;
}

/// Colours by weight rank: distinct weights, heaviest first, split into
/// palette-sized rank groups.
inline void assign_colors(plot_model& m) {
    m.legend.clear();
    if (m.lines.empty()) return;
    std::vector<double> distinct;
    for (const auto& l : m.lines) distinct.push_back(l.weight);
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const auto& pal = palette();
    const std::size_t groups = std::min(pal.size(), distinct.size());
    auto group_of = [&](std::size_t rank) { return rank * groups / distinct.size(); };
    // Group g (0 = heaviest) takes palette entry from the top of the ramp.
    std::vector<legend_entry> entries(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        entries[g].weight_range = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        entries[g].color = pal[pal.size() - 1 - (groups == 1 ? 0 : g * (pal.size() - 1) / (groups - 1))];
    }
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        auto& e = entries[group_of(i)];
        e.weight_range[0] = std::min(e.weight_range[0], distinct[i]);
        e.weight_range[1] = std::max(e.weight_range[1], distinct[i]);
    }
    for (auto& l : m.lines) {
        const auto rank = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), l.weight, std::greater<>()) - distinct.begin());
        l.color = group_of(rank);
    }
    m.legend = std::move(entries);
}

inline std::vector<std::size_t> resolve_order(const std::vector<std::string>& names,
                                              const std::vector<std::string>& order,
                                              const std::optional<std::string>& drop) {
    std::vector<std::size_t> idx;
    auto find = [&](const std::string& n) -> std::size_t {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return i;
        throw invalid_argument("build_plot: unknown column '" + n + "' in column order");
    };
    if (order.empty()) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (!drop || names[i] != *drop) idx.push_back(i);
    } else {
        std::set<std::string> seen;
        for (const auto& n : order) {
            if (!seen.insert(n).second) throw invalid_argument("build_plot: column '" + n + "' repeated in order");
            if (drop && n == *drop) continue;
            idx.push_back(find(n));
        }
    }
    if (idx.empty()) throw invalid_argument("build_plot: no axes to draw");
    return idx;
}

/// Folds lines with identical vertex sequences into one at combined weight.
inline void merge_overplotted(std::vector<polyline>& lines) {
    std::map<std::vector<double>, std::size_t> seen;
    std::vector<polyline> out;
    for (auto& l : lines) {
        auto [it, fresh] = seen.try_emplace(l.verts, out.size());
        if (fresh) out.push_back(std::move(l));
        else out[it->second].weight += l.weight;
    }
    lines = std::move(out);
}

} // namespace detail

/// Plot of selected patterns from a frequency table. A facet column splits the
/// lines into stacked sub-plots without its own axis.
inline plot_model build_plot(std::span<const weighted_pattern> selection, const frequency_table& ft,
                             const plot_options& opts = {}) {
    std::optional<std::size_t> facet_idx;
    if (opts.facet_column) {
        for (std::size_t i = 0; i < ft.arity(); ++i)
            if (ft.names()[i] == *opts.facet_column) facet_idx = i;
        if (!facet_idx) throw invalid_argument("build_plot: unknown facet column '" + *opts.facet_column + "'");
    }
    const auto order = detail::resolve_order(ft.names(), opts.column_order, opts.facet_column);

    plot_model base;
    for (auto i : order) base.axes.push_back(detail::discrete_axis(ft.names()[i], ft.levels()[i]));

    auto make_line = [&](const weighted_pattern& wp) {
        polyline l;
        for (auto i : order) {
            l.values.push_back(wp.levels.at(i));
            l.verts.push_back(detail::level_position(wp.levels[i], ft.levels()[i].size()));
        }
        l.weight = wp.weight;
        return l;
    };

    if (!facet_idx) {
        plot_model m = base;
        for (const auto& wp : selection) m.lines.push_back(make_line(wp));
        detail::merge_overplotted(m.lines);
        detail::assign_colors(m);
        return m;
    }
    plot_model m = base;
    const auto& facet_levels = ft.levels()[*facet_idx];
    for (std::size_t lv = 0; lv < facet_levels.size(); ++lv) {
        facet f{facet_levels[lv], base};
        for (const auto& wp : selection)
            if (wp.levels.at(*facet_idx) == lv) f.model.lines.push_back(make_line(wp));
        if (f.model.lines.empty()) continue;
        detail::merge_overplotted(f.model.lines);
        detail::assign_colors(f.model);
        m.facets.push_back(std::move(f));
    }
    return m;
}

/// Plot of selected rows of `t` (typically density-ranked). Continuous axes
/// span each column's whole-data range, so facets share one scale.
inline plot_model build_plot(std::span<const ranked_row> selection, const table& t, const plot_options& opts = {}) {
    std::optional<std::size_t> facet_idx;
    if (opts.facet_column) {
        facet_idx = t.find(*opts.facet_column);
        if (!facet_idx) throw invalid_argument("build_plot: unknown facet column '" + *opts.facet_column + "'");
        if (!t[*facet_idx].is_discrete())
            throw invalid_argument("build_plot: facet column '" + *opts.facet_column + "' must be categorical");
    }
    const auto order = detail::resolve_order(t.names(), opts.column_order, opts.facet_column);

    plot_model base;
    for (auto i : order)
        base.axes.push_back(t[i].is_discrete() ? detail::discrete_axis(t[i].name(), t[i].levels())
                                               : detail::continuous_axis(t[i]));

    auto make_line = [&](const ranked_row& rr) {
        polyline l;
        for (std::size_t a = 0; a < order.size(); ++a) {
            const auto& col = t[order[a]];
            if (col.is_na(rr.row))
                throw invalid_argument("build_plot: row " + std::to_string(rr.row) + " is missing '" + col.name() + "'");
            if (col.is_discrete()) {
                const auto code = static_cast<std::size_t>(col.code(rr.row));
                l.values.push_back(static_cast<double>(code));
                l.verts.push_back(detail::level_position(code, col.level_count()));
            } else {
                l.values.push_back(col.number(rr.row));
                l.verts.push_back(detail::continuous_position(base.axes[a], col.number(rr.row)));
            }
        }
        l.weight = rr.weight;
        if (opts.labels) l.label = rr.row + 1;
        return l;
    };

    auto finish = [&](plot_model& m) {
        if (!opts.labels) detail::merge_overplotted(m.lines);
        detail::assign_colors(m);
    };

    plot_model m = base;
    if (!facet_idx) {
        for (const auto& rr : selection) m.lines.push_back(make_line(rr));
        finish(m);
        return m;
    }
    const auto& fcol = t[*facet_idx];
    for (std::size_t lv = 0; lv < fcol.level_count(); ++lv) {
        facet f{fcol.levels()[lv], base};
        for (const auto& rr : selection)
            if (fcol.code(rr.row) == static_cast<std::int32_t>(lv)) f.model.lines.push_back(make_line(rr));
        if (f.model.lines.empty()) continue;
        finish(f.model);
        m.facets.push_back(std::move(f));
    }
    return m;
}

namespace detail {

inline const axis& find_axis(const plot_model& m, std::string_view name, std::size_t* index = nullptr) {
    for (std::size_t i = 0; i < m.axes.size(); ++i)
        if (m.axes[i].name == name) {
            if (index) *index = i;
            return m.axes[i];
        }
    throw invalid_argument("brush: unknown axis '" + std::string(name) + "'");
}

inline void validate_condition(const plot_model& m, const brush_condition& c) {
    const auto& a = find_axis(m, c.axis);
    if (c.interval) {
        if (!c.levels.empty()) throw invalid_argument("brush: condition on '" + c.axis + "' has both levels and interval");
        if (a.discrete) throw invalid_argument("brush: interval on discrete axis '" + c.axis + "'");
        if (!((*c.interval)[0] <= (*c.interval)[1])) throw invalid_argument("brush: empty interval on '" + c.axis + "'");
        return;
    }
    if (!a.discrete) throw invalid_argument("brush: level set on continuous axis '" + c.axis + "'");
    if (c.levels.empty()) throw invalid_argument("brush: empty level set on '" + c.axis + "'");
    for (const auto& l : c.levels) {
        bool found = std::any_of(a.ticks.begin(), a.ticks.end(), [&](const tick& t) { return t.label == l; });
        if (!found) throw invalid_argument("brush: axis '" + c.axis + "' has no level '" + l + "'");
    }
}

inline bool satisfies(const plot_model& m, const polyline& l, const brush_condition& c) {
    std::size_t i = 0;
    const auto& a = find_axis(m, c.axis, &i);
    const double v = l.values[i];
    if (c.interval) return (*c.interval)[0] <= v && v <= (*c.interval)[1];
    const auto& label = a.ticks.at(static_cast<std::size_t>(v)).label;
    return std::find(c.levels.begin(), c.levels.end(), label) != c.levels.end();
}

inline void brush_in_place(plot_model& m, const std::vector<brush_condition>& conditions) {
    m.brush = conditions;
    for (auto& l : m.lines)
        l.highlighted = std::all_of(conditions.begin(), conditions.end(),
                                    [&](const brush_condition& c) { return satisfies(m, l, c); });
    for (auto& f : m.facets) brush_in_place(f.model, conditions);
}

} // namespace detail

/// Highlights lines meeting every condition; other lines stay in the model.
/// An empty condition list returns the model unchanged.
inline plot_model apply_brush(const plot_model& model, const std::vector<brush_condition>& conditions) {
    if (conditions.empty()) return model;
    for (const auto& c : conditions) detail::validate_condition(model, c);
    plot_model m = model;
    detail::brush_in_place(m, conditions);
    return m;
}

/// Drops every brush condition and highlight.
inline plot_model clear_brush(const plot_model& model) {
    plot_model m = model;
    m.brush.clear();
    for (auto& l : m.lines) l.highlighted = false;
    for (auto& f : m.facets) f.model = clear_brush(f.model);
    return m;
}

/// Reorders axes and every line's vertices to `new_order` (axis names).
inline plot_model permute_columns(const plot_model& model, const std::vector<std::string>& new_order) {
    if (new_order.size() != model.axes.size())
        throw invalid_argument("permute_columns: expected " + std::to_string(model.axes.size()) + " axis names, got " +
                               std::to_string(new_order.size()));
    std::vector<std::size_t> perm;
    std::set<std::size_t> used;
    for (const auto& name : new_order) {
        std::size_t i = 0;
        detail::find_axis(model, name, &i);
        if (!used.insert(i).second) throw invalid_argument("permute_columns: axis '" + name + "' repeated");
        perm.push_back(i);
    }
    plot_model m = model;
    for (std::size_t j = 0; j < perm.size(); ++j) m.axes[j] = model.axes[perm[j]];
    for (std::size_t li = 0; li < m.lines.size(); ++li)
        for (std::size_t j = 0; j < perm.size(); ++j) {
            m.lines[li].verts[j] = model.lines[li].verts[perm[j]];
            m.lines[li].values[j] = model.lines[li].values[perm[j]];
        }
    for (auto& f : m.facets) f.model = permute_columns(f.model, new_order);
    return m;
}

inline std::vector<std::string> axis_names(const plot_model& m) {
    std::vector<std::string> out;
    for (const auto& a : m.axes) out.push_back(a.name);
    return out;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(ch);
        }
    }
    return out;
}

inline std::string fmt2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

struct svg_layout {
    static constexpr double axis_gap = 140;
    static constexpr double margin_left = 60;
    static constexpr double margin_top = 40;
    static constexpr double panel_height = 300;
    static constexpr double panel_gap = 70;
    static constexpr double legend_width = 190;
};

inline void svg_panel(std::ostream& os, const plot_model& m, double top, const std::string& title) {
    using L = svg_layout;
    auto x_of = [](std::size_t i) { return L::margin_left + L::axis_gap * static_cast<double>(i); };
    auto y_of = [&](double h) { return top + L::panel_height * (1.0 - h); };

    if (!title.empty())
        os << "<text x=\"" << fmt2(L::margin_left) << "\" y=\"" << fmt2(top - 22)
           << "\" font-weight=\"bold\">" << xml_escape(title) << "</text>\n";

    const bool brushed = !m.brush.empty();
    std::vector<std::size_t> order(m.lines.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& la = m.lines[a];
        const auto& lb = m.lines[b];
        if (la.highlighted != lb.highlighted) return !la.highlighted;
        return la.weight < lb.weight;
    });
    os << "<g class=\"lines\" fill=\"none\">\n";
    for (auto i : order) {
        const auto& l = m.lines[i];
        os << "<polyline points=\"";
        for (std::size_t a = 0; a < l.verts.size(); ++a)
            os << (a ? " " : "") << fmt2(x_of(a)) << ',' << fmt2(y_of(l.verts[a]));
        os << "\" stroke=\"" << m.legend.at(l.color).color << "\" stroke-width=\"" << (l.highlighted ? "2.5" : "1.5")
           << "\" stroke-opacity=\"" << (brushed && !l.highlighted ? "0.2" : "0.9") << "\"/>\n";
        if (l.label && !l.verts.empty())
            os << "<text x=\"" << fmt2(x_of(l.verts.size() - 1) + 6) << "\" y=\"" << fmt2(y_of(l.verts.back()) + 4)
               << "\" font-size=\"10\">" << *l.label << "</text>\n";
    }
    os << "</g>\n<g class=\"axes\">\n";
    for (std::size_t a = 0; a < m.axes.size(); ++a) {
        const auto& ax = m.axes[a];
        os << "<line x1=\"" << fmt2(x_of(a)) << "\" y1=\"" << fmt2(y_of(0)) << "\" x2=\"" << fmt2(x_of(a))
           << "\" y2=\"" << fmt2(y_of(1)) << "\" stroke=\"#000\"/>\n";
        os << "<text x=\"" << fmt2(x_of(a)) << "\" y=\"" << fmt2(y_of(0) + 20) << "\" text-anchor=\"middle\">"
           << xml_escape(ax.name) << "</text>\n";
        for (const auto& t : ax.ticks)
            os << "<text x=\"" << fmt2(x_of(a) - 4) << "\" y=\"" << fmt2(y_of(t.pos) + 4)
               << "\" text-anchor=\"end\" font-size=\"10\">" << xml_escape(t.label) << "</text>\n";
    }
    for (const auto& c : m.brush) {
        std::size_t i = 0;
        const auto& ax = find_axis(m, c.axis, &i);
        auto segment = [&](double lo, double hi) {
            os << "<line class=\"brush\" x1=\"" << fmt2(x_of(i)) << "\" y1=\"" << fmt2(y_of(lo)) << "\" x2=\""
               << fmt2(x_of(i)) << "\" y2=\"" << fmt2(y_of(hi)) << "\" stroke=\"" << brush_color
               << "\" stroke-width=\"5\"/>\n";
        };
        if (c.interval) {
            segment(continuous_position(ax, (*c.interval)[0]), continuous_position(ax, (*c.interval)[1]));
        } else {
            const double half = ax.ticks.size() > 1 ? 0.25 / static_cast<double>(ax.ticks.size() - 1) : 0.1;
            for (const auto& t : ax.ticks)
                if (std::find(c.levels.begin(), c.levels.end(), t.label) != c.levels.end())
                    segment(std::max(0.0, t.pos - half), std::min(1.0, t.pos + half));
        }
    }
    os << "</g>\n";

    const double lx = x_of(m.axes.empty() ? 0 : m.axes.size() - 1) + 60;
    os << "<g class=\"legend\">\n";
    for (std::size_t g = 0; g < m.legend.size(); ++g) {
        const auto& e = m.legend[g];
        const double y = top + 18.0 * static_cast<double>(g);
        os << "<rect x=\"" << fmt2(lx) << "\" y=\"" << fmt2(y) << "\" width=\"14\" height=\"14\" fill=\"" << e.color
           << "\"/>\n<text x=\"" << fmt2(lx + 20) << "\" y=\"" << fmt2(y + 11) << "\" font-size=\"11\">"
           << format_tick(e.weight_range[0]);
        if (e.weight_range[1] != e.weight_range[0]) os << " - " << format_tick(e.weight_range[1]);
        os << "</text>\n";
    }
    os << "</g>\n";
}

} // namespace detail

/// Deterministic SVG 1.1: one panel, or one stacked panel per facet.
inline void emit_svg(const plot_model& m, std::ostream& os) {
    using L = detail::svg_layout;
    std::size_t naxes = m.axes.size();
    const std::size_t panels = m.facets.empty() ? 1 : m.facets.size();
    const double width = L::margin_left + L::axis_gap * static_cast<double>(naxes ? naxes - 1 : 0) + L::legend_width + 40;
    const double height = L::margin_top + static_cast<double>(panels) * (L::panel_height + L::panel_gap);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << detail::fmt2(width)
       << "\" height=\"" << detail::fmt2(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
    if (m.facets.empty()) {
        detail::svg_panel(os, m, L::margin_top, "");
    } else {
        for (std::size_t i = 0; i < m.facets.size(); ++i)
            detail::svg_panel(os, m.facets[i].model, L::margin_top + 20 + static_cast<double>(i) * (L::panel_height + L::panel_gap),
                              m.facets[i].level);
    }
    os << "</svg>\n";
    if (!os) throw error("emit_svg: write failure");
}

inline std::string emit_svg(const plot_model& m) {
    std::ostringstream os;
    emit_svg(m, os);
    return os.str();
}

using json = nlohmann::ordered_json;

inline json to_json(const brush_condition& c) {
    json j;
    j["axis"] = c.axis;
    if (c.interval) j["interval"] = {(*c.interval)[0], (*c.interval)[1]};
    else j["levels"] = c.levels;
    return j;
}

inline brush_condition brush_from_json(const json& j) {
    if (!j.is_object() || !j.contains("axis") || !j["axis"].is_string())
        throw invalid_argument("brush condition needs a string 'axis'");
    brush_condition c;
    c.axis = j["axis"].get<std::string>();
    const bool has_levels = j.contains("levels"), has_interval = j.contains("interval");
    if (has_levels == has_interval) throw invalid_argument("brush condition needs exactly one of 'levels' or 'interval'");
    try {
        if (has_levels) {
            for (const auto& l : j["levels"]) c.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
        } else {
            const auto& iv = j["interval"];
            if (!iv.is_array() || iv.size() != 2) throw invalid_argument("interval must be [lo, hi]");
            c.interval = std::array<double, 2>{iv[0].get<double>(), iv[1].get<double>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw invalid_argument(std::string("malformed brush condition: ") + e.what());
    }
    return c;
}

inline json to_json(const plot_model& m) {
    json j;
    j["axes"] = json::array();
    for (const auto& a : m.axes) {
        json ja;
        ja["name"] = a.name;
        ja["kind"] = a.discrete ? "discrete" : "continuous";
        ja["min"] = a.min;
        ja["max"] = a.max;
        ja["ticks"] = json::array();
        for (const auto& t : a.ticks) ja["ticks"].push_back({{"label", t.label}, {"pos", t.pos}});
        j["axes"].push_back(std::move(ja));
    }
    j["lines"] = json::array();
    for (const auto& l : m.lines) {
        json jl;
        jl["verts"] = l.verts;
        jl["values"] = l.values;
        jl["weight"] = l.weight;
        jl["color"] = l.color;
        if (l.label) jl["label"] = *l.label;
        jl["highlighted"] = l.highlighted;
        j["lines"].push_back(std::move(jl));
    }
    j["brush"] = json::array();
    for (const auto& c : m.brush) j["brush"].push_back(to_json(c));
    j["facets"] = json::object();
    for (const auto& f : m.facets) j["facets"][f.level] = to_json(f.model);
    j["legend"] = json::array();
    for (const auto& e : m.legend)
        j["legend"].push_back({{"weight_range", {e.weight_range[0], e.weight_range[1]}}, {"color", e.color}});
    return j;
}

inline plot_model plot_from_json(const json& j) {
    try {
        plot_model m;
        for (const auto& ja : j.at("axes")) {
            axis a;
            a.name = ja.at("name").get<std::string>();
            a.discrete = ja.at("kind").get<std::string>() == "discrete";
            a.min = ja.at("min").get<double>();
            a.max = ja.at("max").get<double>();
            for (const auto& t : ja.at("ticks")) a.ticks.push_back({t.at("label").get<std::string>(), t.at("pos").get<double>()});
            m.axes.push_back(std::move(a));
        }
        for (const auto& jl : j.at("lines")) {
            polyline l;
            l.verts = jl.at("verts").get<std::vector<double>>();
            l.values = jl.at("values").get<std::vector<double>>();
            l.weight = jl.at("weight").get<double>();
            l.color = jl.at("color").get<std::size_t>();
            if (jl.contains("label")) l.label = jl["label"].get<std::size_t>();
            l.highlighted = jl.at("highlighted").get<bool>();
            m.lines.push_back(std::move(l));
        }
        for (const auto& jc : j.at("brush")) m.brush.push_back(brush_from_json(jc));
        for (const auto& [level, jm] : j.at("facets").items()) m.facets.push_back({level, plot_from_json(jm)});
        for (const auto& je : j.at("legend")) {
            const auto& r = je.at("weight_range");
            m.legend.push_back({{r.at(0).get<double>(), r.at(1).get<double>()}, je.at("color").get<std::string>()});
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_argument(std::string("malformed plot JSON: ") + e.what());
    }
}

inline void emit_json(const plot_model& m, std::ostream& os) {
    os << to_json(m).dump();
    if (!os) throw error("emit_json: write failure");
}

inline std::string emit_json(const plot_model& m) { return to_json(m).dump(); }

inline plot_model parse_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw invalid_argument(std::string("malformed plot JSON: ") + e.what());
    }
    return plot_from_json(j);
}

} // namespace tfpc
