#pragma once

#include <tfpc/table.hpp>

#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace tfpc {

struct csv_options {
    bool header = true;
    std::vector<std::string> na_tokens = {"NA", ""};
    char delimiter = ',';
};

namespace detail {

struct csv_field {
    std::string text;
    bool quoted = false;
};

/// RFC-4180 record splitter. Quoted fields may hold delimiters, doubled
/// quotes and line breaks.
class csv_reader {
  public:
    csv_reader(std::string_view data, char delim) : data_(data), delim_(delim) {}

    /// Reads the next record into `out`; false at end of input.
    bool next(std::vector<csv_field>& out) {
        out.clear();
        if (pos_ >= data_.size()) return false;
        ++record_;
        csv_field field;
        bool at_field_start = true;
        while (pos_ < data_.size()) {
            char ch = data_[pos_];
            if (at_field_start && ch == '"') {
                field.quoted = true;
                ++pos_;
                for (;;) {
                    if (pos_ >= data_.size()) throw parse_error(record_, "unterminated quoted field");
                    char q = data_[pos_++];
                    if (q == '"') {
                        if (pos_ < data_.size() && data_[pos_] == '"') {
                            field.text.push_back('"');
                            ++pos_;
                        } else {
                            break;
                        }
                    } else {
                        field.text.push_back(q);
                    }
                }
                at_field_start = false;
                if (pos_ < data_.size() && data_[pos_] != delim_ && data_[pos_] != '\n' && data_[pos_] != '\r')
                    throw parse_error(record_, "unexpected character after closing quote");
                continue;
            }
            if (ch == delim_) {
                out.push_back(std::move(field));
                field = {};
                at_field_start = true;
                ++pos_;
                continue;
            }
            if (ch == '\r' || ch == '\n') {
                ++pos_;
                if (ch == '\r' && pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
                break;
            }
            field.text.push_back(ch);
            at_field_start = false;
            ++pos_;
        }
        out.push_back(std::move(field));
        return true;
    }

    [[nodiscard]] std::size_t record() const noexcept { return record_; }

  private:
    std::string_view data_;
    char delim_;
    std::size_t pos_ = 0;
    std::size_t record_ = 0;
};

inline bool needs_quotes(std::string_view s, char delim, std::span<const std::string> na_tokens) {
    if (s.empty()) return true;
    for (const auto& tok : na_tokens)
        if (s == tok) return true;
    return s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string_view::npos ||
           s.front() == ' ' || s.back() == ' ';
}

inline void write_field(std::ostream& os, std::string_view s, char delim, std::span<const std::string> na_tokens) {
    if (!needs_quotes(s, delim, na_tokens)) {
        os << s;
        return;
    }
    os << '"';
    for (char ch : s) {
        if (ch == '"') os << '"';
        os << ch;
    }
    os << '"';
}

} // namespace detail

/// Parses delimited text into a typed table. A column is continuous iff every
/// non-NA cell parses as a number; otherwise categorical with levels in
/// first-appearance order. Unquoted cells equal to an NA token become NA.
inline table load_csv(std::string_view data, const csv_options& opts = {}) {
    detail::csv_reader reader(data, opts.delimiter);
    std::vector<detail::csv_field> fields;
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<std::string>>> cells;

    auto is_na = [&](const detail::csv_field& f) {
        if (f.quoted) return false;
        return std::find(opts.na_tokens.begin(), opts.na_tokens.end(), f.text) != opts.na_tokens.end();
    };
    auto is_blank = [](const std::vector<detail::csv_field>& f) {
        return f.size() == 1 && f.front().text.empty() && !f.front().quoted;
    };

    std::size_t width = 0;
    bool have_header = false;
    while (reader.next(fields)) {
        if (is_blank(fields) && width != 1) continue;
        if (width == 0) width = fields.size();
        if (fields.size() != width)
            throw parse_error(reader.record(), "expected " + std::to_string(width) + " fields, found " +
                                                   std::to_string(fields.size()));
        if (opts.header && !have_header) {
            have_header = true;
            for (auto& f : fields) names.push_back(std::move(f.text));
            cells.resize(width);
            continue;
        }
        if (cells.empty()) cells.resize(width);
        for (std::size_t c = 0; c < width; ++c) {
            if (is_na(fields[c])) cells[c].emplace_back(std::nullopt);
            else cells[c].emplace_back(std::move(fields[c].text));
        }
    }
    if (width == 0) throw parse_error(1, "empty input");
    if (cells.empty() || cells.front().empty()) throw parse_error(reader.record(), "no data rows");
    if (!opts.header)
        for (std::size_t c = 0; c < width; ++c) names.push_back("V" + std::to_string(c + 1));

    std::vector<column> cols;
    cols.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
        std::vector<double> numbers;
        numbers.reserve(cells[c].size());
        bool numeric = true;
        for (const auto& cell : cells[c]) {
            if (!cell) {
                numbers.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            auto x = parse_number(*cell);
            if (!x || std::isnan(*x)) {
                numeric = false;
                break;
            }
            numbers.push_back(*x);
        }
        if (numeric) cols.push_back(column::continuous(names[c], std::move(numbers)));
        else cols.push_back(column::from_labels(names[c], cells[c]));
    }
    return table(std::move(cols));
}

inline table load_csv(std::istream& in, const csv_options& opts = {}) {
    std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw error("read failure");
    return load_csv(std::string_view(data), opts);
}

/// Writes `t` as delimited text. `load_csv` reproduces any table it produced
/// itself: values, NA cells and level order survive. Level orders changed by
/// `re_order`, unused levels and the discretized kind are not representable.
inline void emit_csv(const table& t, std::ostream& os, const csv_options& opts = {}) {
    const std::string na = opts.na_tokens.empty() ? std::string("NA") : opts.na_tokens.front();
    if (opts.header) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (c) os << opts.delimiter;
            detail::write_field(os, t[c].name(), opts.delimiter, opts.na_tokens);
        }
        os << '\n';
    }
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (c) os << opts.delimiter;
            const auto& col = t[c];
            if (col.is_na(r)) os << na;
            else detail::write_field(os, col.label(r), opts.delimiter, opts.na_tokens);
        }
        os << '\n';
    }
    if (!os) throw error("write failure");
}

inline std::string emit_csv(const table& t, const csv_options& opts = {}) {
    std::ostringstream os;
    emit_csv(t, os, opts);
    return os.str();
}

} // namespace tfpc
