#pragma once

#include <tfpc/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace tfpc {

enum class column_kind { continuous, categorical, discretized };

inline constexpr std::int32_t na_code = -1;

inline std::string_view to_string(column_kind kind) noexcept {
    switch (kind) {
    case column_kind::continuous: return "continuous";
    case column_kind::categorical: return "categorical";
    case column_kind::discretized: return "discretized";
    }
    return "unknown";
}

/// Shortest text that parses back to exactly `x`.
inline std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

/// Parses the whole of `text` as a finite-or-infinite double; nullopt otherwise.
inline std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

/// One named column. Continuous values live in `numbers()` with NaN as NA;
/// categorical and discretized values live in `codes()` as indices into
/// `levels()` with `na_code` as NA.
class column {
  public:
    static column continuous(std::string name, std::vector<double> values) {
        column c;
        c.name_ = std::move(name);
        c.kind_ = column_kind::continuous;
        c.numbers_ = std::move(values);
        return c;
    }

    static column categorical(std::string name, std::vector<std::string> levels,
                              std::vector<std::int32_t> codes,
                              column_kind kind = column_kind::categorical) {
        if (kind == column_kind::continuous)
            throw invalid_argument("categorical column '" + name + "' cannot have continuous kind");
        std::unordered_set<std::string_view> seen;
        for (const auto& l : levels)
            if (!seen.insert(l).second)
                throw invalid_argument("column '" + name + "': duplicate level label '" + l + "'");
        const auto nlev = static_cast<std::int32_t>(levels.size());
        for (auto code : codes)
            if (code != na_code && (code < 0 || code >= nlev))
                throw invalid_argument("column '" + name + "': level index " + std::to_string(code) +
                                       " out of range");
        column c;
        c.name_ = std::move(name);
        c.kind_ = kind;
        c.levels_ = std::move(levels);
        c.codes_ = std::move(codes);
        return c;
    }

    /// Builds a categorical column from labels; levels in first-appearance order.
    static column from_labels(std::string name, std::span<const std::optional<std::string>> labels) {
        std::vector<std::string> levels;
        std::unordered_map<std::string, std::int32_t> index;
        std::vector<std::int32_t> codes;
        codes.reserve(labels.size());
        for (const auto& l : labels) {
            if (!l) {
                codes.push_back(na_code);
                continue;
            }
            auto [it, fresh] = index.try_emplace(*l, static_cast<std::int32_t>(levels.size()));
            if (fresh) levels.push_back(*l);
            codes.push_back(it->second);
        }
        return categorical(std::move(name), std::move(levels), std::move(codes));
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] column_kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_continuous() const noexcept { return kind_ == column_kind::continuous; }
    [[nodiscard]] bool is_discrete() const noexcept { return !is_continuous(); }
    [[nodiscard]] const std::vector<std::string>& levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t level_count() const noexcept { return levels_.size(); }
    [[nodiscard]] std::span<const double> numbers() const noexcept { return numbers_; }
    [[nodiscard]] std::span<const std::int32_t> codes() const noexcept { return codes_; }

    [[nodiscard]] std::size_t size() const noexcept {
        return is_continuous() ? numbers_.size() : codes_.size();
    }

    [[nodiscard]] bool is_na(std::size_t row) const noexcept {
        return is_continuous() ? std::isnan(numbers_[row]) : codes_[row] == na_code;
    }

    [[nodiscard]] std::size_t na_count() const noexcept {
        std::size_t count = 0;
        for (std::size_t i = 0; i < size(); ++i) count += is_na(i);
        return count;
    }

    /// Level index, or `na_code`. Only for discrete columns.
    [[nodiscard]] std::int32_t code(std::size_t row) const noexcept { return codes_[row]; }

    /// Numeric value of a continuous cell (NaN when missing).
    [[nodiscard]] double number(std::size_t row) const noexcept { return numbers_[row]; }

    /// Text of a non-NA cell.
    [[nodiscard]] std::string label(std::size_t row) const {
        return is_continuous() ? format_number(numbers_[row]) : levels_[static_cast<std::size_t>(codes_[row])];
    }

    [[nodiscard]] std::optional<std::int32_t> find_level(std::string_view label) const {
        for (std::size_t i = 0; i < levels_.size(); ++i)
            if (levels_[i] == label) return static_cast<std::int32_t>(i);
        return std::nullopt;
    }

    [[nodiscard]] column take(std::span<const std::size_t> rows) const {
        column c;
        c.name_ = name_;
        c.kind_ = kind_;
        c.levels_ = levels_;
        if (is_continuous()) {
            c.numbers_.reserve(rows.size());
            for (auto r : rows) c.numbers_.push_back(numbers_[r]);
        } else {
            c.codes_.reserve(rows.size());
            for (auto r : rows) c.codes_.push_back(codes_[r]);
        }
        return c;
    }

    [[nodiscard]] column renamed(std::string name) const {
        column c = *this;
        c.name_ = std::move(name);
        return c;
    }

    friend bool operator==(const column&, const column&) = default;

  private:
    column() = default;

    std::string name_;
    column_kind kind_ = column_kind::continuous;
    std::vector<std::string> levels_;
    std::vector<double> numbers_;
    std::vector<std::int32_t> codes_;
};

/// Per-cell missingness, row-major.
class na_mask {
  public:
    na_mask(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool operator()(std::size_t row, std::size_t col) const noexcept {
        return cells_[row * cols_ + col] != 0;
    }
    void set(std::size_t row, std::size_t col, bool missing) noexcept {
        cells_[row * cols_ + col] = missing ? 1 : 0;
    }
    [[nodiscard]] std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
    }
    [[nodiscard]] bool row_complete(std::size_t row) const noexcept {
        for (std::size_t c = 0; c < cols_; ++c)
            if ((*this)(row, c)) return false;
        return true;
    }

    friend bool operator==(const na_mask&, const na_mask&) = default;

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> cells_;
};

/// Immutable columnar table; every transformation returns a new table.
class table {
  public:
    explicit table(std::vector<column> columns) : columns_(std::move(columns)) {
        if (columns_.empty()) throw invalid_argument("a table needs at least one column");
        const auto n = columns_.front().size();
        std::unordered_set<std::string_view> names;
        for (const auto& c : columns_) {
            if (c.size() != n)
                throw invalid_argument("column '" + c.name() + "' has " + std::to_string(c.size()) +
                                       " rows, expected " + std::to_string(n));
            if (!names.insert(c.name()).second)
                throw invalid_argument("duplicate column name '" + c.name() + "'");
        }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return columns_.front().size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return columns_.size(); }
    [[nodiscard]] const std::vector<column>& columns() const noexcept { return columns_; }
    [[nodiscard]] const column& operator[](std::size_t i) const { return columns_.at(i); }

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const noexcept {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i].name() == name) return i;
        return std::nullopt;
    }

    [[nodiscard]] std::size_t index_of(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw invalid_argument("unknown column '" + std::string(name) + "'");
    }

    [[nodiscard]] const column& operator[](std::string_view name) const { return columns_[index_of(name)]; }

    [[nodiscard]] std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(columns_.size());
        for (const auto& c : columns_) out.push_back(c.name());
        return out;
    }

    [[nodiscard]] na_mask mask() const {
        na_mask m(rows(), cols());
        for (std::size_t c = 0; c < cols(); ++c)
            for (std::size_t r = 0; r < rows(); ++r)
                if (columns_[c].is_na(r)) m.set(r, c, true);
        return m;
    }

    [[nodiscard]] std::size_t na_count() const noexcept {
        std::size_t total = 0;
        for (const auto& c : columns_) total += c.na_count();
        return total;
    }

    [[nodiscard]] bool row_complete(std::size_t row) const noexcept {
        return std::none_of(columns_.begin(), columns_.end(), [row](const column& c) { return c.is_na(row); });
    }

    [[nodiscard]] bool all_discrete() const noexcept {
        return std::all_of(columns_.begin(), columns_.end(), [](const column& c) { return c.is_discrete(); });
    }

    [[nodiscard]] table with_column(std::size_t i, column c) const {
        auto cols = columns_;
        cols.at(i) = std::move(c);
        return table(std::move(cols));
    }

    [[nodiscard]] table take_rows(std::span<const std::size_t> rows) const {
        std::vector<column> cols;
        cols.reserve(columns_.size());
        for (const auto& c : columns_) cols.push_back(c.take(rows));
        return table(std::move(cols));
    }

    [[nodiscard]] table select(std::span<const std::string> names) const {
        std::vector<column> cols;
        cols.reserve(names.size());
        for (const auto& n : names) cols.push_back(columns_[index_of(n)]);
        return table(std::move(cols));
    }

    friend bool operator==(const table&, const table&) = default;

  private:
    std::vector<column> columns_;
};

/// Converts the named continuous columns to categorical, one level per
/// distinct value in ascending numeric order. Discrete columns pass through.
inline table make_factor(const table& t, std::span<const std::string> column_names) {
    std::vector<column> cols = t.columns();
    for (const auto& name : column_names) {
        auto& col = cols[t.index_of(name)];
        if (col.is_discrete()) continue;
        std::vector<double> distinct;
        for (double x : col.numbers())
            if (!std::isnan(x)) distinct.push_back(x);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        std::vector<std::string> levels;
        levels.reserve(distinct.size());
        for (double x : distinct) levels.push_back(format_number(x));
        std::vector<std::int32_t> codes;
        codes.reserve(col.size());
        for (double x : col.numbers()) {
            if (std::isnan(x)) {
                codes.push_back(na_code);
            } else {
                auto it = std::lower_bound(distinct.begin(), distinct.end(), x);
                codes.push_back(static_cast<std::int32_t>(it - distinct.begin()));
            }
        }
        col = column::categorical(col.name(), std::move(levels), std::move(codes));
    }
    return table(std::move(cols));
}

/// Factorizes every continuous column.
inline table make_factor_all(const table& t) {
    std::vector<std::string> names;
    for (const auto& c : t.columns())
        if (c.is_continuous()) names.push_back(c.name());
    return make_factor(t, names);
}

/// Changes the display order of a discrete column's levels. Each cell keeps its label.
inline table re_order(const table& t, std::string_view column_name, std::span<const std::string> new_level_order) {
    const auto idx = t.index_of(column_name);
    const auto& col = t[idx];
    if (col.is_continuous())
        throw invalid_argument("re_order: column '" + col.name() + "' is continuous");

    std::vector<std::string> missing;
    std::vector<std::string> extra;
    std::unordered_map<std::string_view, std::int32_t> new_pos;
    for (std::size_t i = 0; i < new_level_order.size(); ++i) {
        if (!col.find_level(new_level_order[i]) ||
            !new_pos.emplace(new_level_order[i], static_cast<std::int32_t>(i)).second)
            extra.push_back(new_level_order[i]);
    }
    for (const auto& l : col.levels())
        if (!new_pos.contains(l)) missing.push_back(l);
    if (!missing.empty() || !extra.empty()) {
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
            return "[" + s + "]";
        };
        throw invalid_argument("re_order: new order for '" + col.name() +
                               "' is not a permutation of its levels; missing " + join(missing) +
                               ", extra " + join(extra));
    }

    std::vector<std::int32_t> remap(col.level_count());
    for (std::size_t i = 0; i < col.level_count(); ++i) remap[i] = new_pos.at(col.levels()[i]);
    std::vector<std::int32_t> codes(col.codes().begin(), col.codes().end());
    for (auto& c : codes)
        if (c != na_code) c = remap[static_cast<std::size_t>(c)];
    return t.with_column(idx, column::categorical(col.name(),
                                                  std::vector<std::string>(new_level_order.begin(),
                                                                           new_level_order.end()),
                                                  std::move(codes), col.kind()));
}

struct complete_rows_result {
    table complete;
    std::vector<std::size_t> rows;   ///< original indices of the kept rows
};

inline complete_rows_result complete_rows(const table& t) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t.rows(); ++r)
        if (t.row_complete(r)) rows.push_back(r);
    return {t.take_rows(rows), std::move(rows)};
}

} // namespace tfpc
