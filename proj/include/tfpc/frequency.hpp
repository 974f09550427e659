#pragma once

#include <tfpc/table.hpp>

#include <bit>
#include <exception>
#include <map>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace tfpc {

/// One level index per plotted column.
using pattern = std::vector<std::uint32_t>;

/// Packs a pattern into fixed-width 64-bit words, one bit field per column.
/// Fields never straddle a word boundary.
class pattern_codec {
  public:
    pattern_codec() = default;

    explicit pattern_codec(std::span<const std::size_t> level_counts) {
        std::size_t word = 0, used = 0;
        for (auto count : level_counts) {
            const auto bits = static_cast<unsigned>(
                std::max<int>(1, std::bit_width(static_cast<std::uint64_t>(count > 0 ? count - 1 : 0))));
            if (bits > 32) throw invalid_argument("pattern_codec: too many levels");
            if (used + bits > 64) {
                ++word;
                used = 0;
            }
            fields_.push_back({static_cast<std::uint32_t>(word), static_cast<std::uint32_t>(used), bits});
            used += bits;
        }
        words_ = fields_.empty() ? 0 : word + 1;
    }

    [[nodiscard]] std::size_t words() const noexcept { return words_; }
    [[nodiscard]] std::size_t arity() const noexcept { return fields_.size(); }

    void encode(std::span<const std::uint32_t> p, std::uint64_t* key) const noexcept {
        std::fill(key, key + words_, 0);
        for (std::size_t c = 0; c < fields_.size(); ++c) put(c, p[c], key);
    }

    void put(std::size_t col, std::uint32_t level, std::uint64_t* key) const noexcept {
        const auto& f = fields_[col];
        key[f.word] |= static_cast<std::uint64_t>(level) << f.shift;
    }

    [[nodiscard]] std::uint32_t get(std::size_t col, const std::uint64_t* key) const noexcept {
        const auto& f = fields_[col];
        const std::uint64_t mask = f.bits == 64 ? ~0ULL : ((1ULL << f.bits) - 1);
        return static_cast<std::uint32_t>((key[f.word] >> f.shift) & mask);
    }

    [[nodiscard]] pattern decode(const std::uint64_t* key) const {
        pattern p(fields_.size());
        for (std::size_t c = 0; c < fields_.size(); ++c) p[c] = get(c, key);
        return p;
    }

    [[nodiscard]] std::size_t word_of(std::size_t col) const noexcept { return fields_[col].word; }
    [[nodiscard]] unsigned shift_of(std::size_t col) const noexcept { return fields_[col].shift; }

  private:
    struct field {
        std::uint32_t word;
        std::uint32_t shift;
        unsigned bits;
    };
    std::vector<field> fields_;
    std::size_t words_ = 0;
};

enum class frequency_provenance : unsigned {
    raw_counts = 0,
    fractional_credit = 1u << 0,
    estimator_adjusted = 1u << 1,
    accentuated = 1u << 2,
};

inline frequency_provenance operator|(frequency_provenance a, frequency_provenance b) {
    return static_cast<frequency_provenance>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
inline bool has_flag(frequency_provenance set, frequency_provenance flag) {
    return (static_cast<unsigned>(set) & static_cast<unsigned>(flag)) != 0;
}

/// Pattern -> nonnegative weight over a fixed set of discrete columns.
class frequency_table {
  public:
    frequency_table(std::vector<std::string> names, std::vector<std::vector<std::string>> levels)
        : names_(std::move(names)), levels_(std::move(levels)) {
        if (names_.size() != levels_.size()) throw invalid_argument("frequency_table: names/levels mismatch");
        std::vector<std::size_t> counts;
        for (const auto& l : levels_) counts.push_back(l.size());
        codec_ = pattern_codec(counts);
        slots_.assign(16, 0);
    }

    /// Column names and level labels of the discrete columns of `t`.
    static frequency_table for_table(const table& t) {
        std::vector<std::string> names;
        std::vector<std::vector<std::string>> levels;
        for (const auto& c : t.columns()) {
            if (!c.is_discrete())
                throw invalid_argument("column '" + c.name() + "' is continuous; discretize it before counting");
            names.push_back(c.name());
            levels.push_back(c.levels());
        }
        return frequency_table(std::move(names), std::move(levels));
    }

    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t arity() const noexcept { return names_.size(); }
    [[nodiscard]] const pattern_codec& codec() const noexcept { return codec_; }
    [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
    [[nodiscard]] bool empty() const noexcept { return weights_.empty(); }
    [[nodiscard]] double total_weight() const noexcept { return total_; }
    [[nodiscard]] frequency_provenance provenance() const noexcept { return provenance_; }
    void mark(frequency_provenance flag) noexcept { provenance_ = provenance_ | flag; }

    [[nodiscard]] pattern pattern_at(std::size_t i) const { return codec_.decode(&keys_[i * codec_.words()]); }
    [[nodiscard]] double weight_at(std::size_t i) const { return weights_.at(i); }

    [[nodiscard]] std::vector<std::string> labels(std::span<const std::uint32_t> p) const {
        std::vector<std::string> out;
        out.reserve(p.size());
        for (std::size_t c = 0; c < p.size(); ++c) out.push_back(levels_[c].at(p[c]));
        return out;
    }

    void add(std::span<const std::uint32_t> p, double w) {
        check_pattern(p);
        key_buf_.resize(codec_.words());
        codec_.encode(p, key_buf_.data());
        add_key(key_buf_.data(), w);
    }

    /// Adds `w` to the pattern whose packed key is `key` (codec().words() words).
    void add_key(const std::uint64_t* key, double w) {
        const auto h = hash_key(key);
        auto idx = find_slot(key, h);
        if (slots_[idx] == 0) {
            const std::size_t words = codec_.words();
            keys_.insert(keys_.end(), key, key + words);
            weights_.push_back(0.0);
            hashes_.push_back(h);
            slots_[idx] = static_cast<std::uint32_t>(weights_.size());
            if (weights_.size() * 4 > slots_.size() * 3) rehash(slots_.size() * 2);
            weights_.back() += w;
        } else {
            weights_[slots_[idx] - 1] += w;
        }
        total_ += w;
    }

    [[nodiscard]] double weight(std::span<const std::uint32_t> p) const {
        if (p.size() != arity()) return 0.0;
        for (std::size_t c = 0; c < p.size(); ++c)
            if (p[c] >= levels_[c].size()) return 0.0;
        std::vector<std::uint64_t> key(codec_.words());
        codec_.encode(p, key.data());
        auto idx = find_slot(key.data(), hash_key(key.data()));
        return slots_[idx] ? weights_[slots_[idx] - 1] : 0.0;
    }

    void merge(const frequency_table& other) {
        if (other.names_ != names_ || other.levels_ != levels_)
            throw invalid_argument("frequency_table::merge: column layouts differ");
        const std::size_t words = codec_.words();
        for (std::size_t i = 0; i < other.size(); ++i) add_key(&other.keys_[i * words], other.weights_[i]);
        provenance_ = provenance_ | other.provenance_;
    }

    void reserve(std::size_t patterns) {
        keys_.reserve(patterns * codec_.words());
        weights_.reserve(patterns);
        hashes_.reserve(patterns);
        std::size_t want = 16;
        while (want * 3 < patterns * 4) want *= 2;
        if (want > slots_.size()) rehash(want);
    }

    /// Pattern -> weight as an ordered map, for comparisons in tests.
    [[nodiscard]] std::map<pattern, double> to_map() const {
        std::map<pattern, double> m;
        for (std::size_t i = 0; i < size(); ++i) m.emplace(pattern_at(i), weights_[i]);
        return m;
    }

  private:
    void check_pattern(std::span<const std::uint32_t> p) const {
        if (p.size() != arity())
            throw invalid_argument("pattern arity " + std::to_string(p.size()) + " != " + std::to_string(arity()));
        for (std::size_t c = 0; c < p.size(); ++c)
            if (p[c] >= levels_[c].size())
                throw invalid_argument("pattern level " + std::to_string(p[c]) + " out of range for column '" +
                                       names_[c] + "'");
    }

    [[nodiscard]] std::uint64_t hash_key(const std::uint64_t* key) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::size_t i = 0; i < codec_.words(); ++i) {
            std::uint64_t x = key[i] + h;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            h = x ^ (x >> 31);
        }
        return h;
    }

    [[nodiscard]] std::size_t find_slot(const std::uint64_t* key, std::uint64_t h) const noexcept {
        const std::size_t mask = slots_.size() - 1;
        const std::size_t words = codec_.words();
        for (std::size_t i = static_cast<std::size_t>(h) & mask;; i = (i + 1) & mask) {
            const auto s = slots_[i];
            if (s == 0) return i;
            const std::size_t e = s - 1;
            if (hashes_[e] == h && std::equal(key, key + words, &keys_[e * words])) return i;
        }
    }

    void rehash(std::size_t new_size) {
        slots_.assign(new_size, 0);
        const std::size_t mask = new_size - 1;
        for (std::size_t e = 0; e < hashes_.size(); ++e) {
            std::size_t i = static_cast<std::size_t>(hashes_[e]) & mask;
            while (slots_[i] != 0) i = (i + 1) & mask;
            slots_[i] = static_cast<std::uint32_t>(e + 1);
        }
    }

    std::vector<std::string> names_;
    std::vector<std::vector<std::string>> levels_;
    pattern_codec codec_;
    std::vector<std::uint64_t> keys_;
    std::vector<double> weights_;
    std::vector<std::uint64_t> hashes_;
    std::vector<std::uint32_t> slots_;
    std::vector<std::uint64_t> key_buf_;
    double total_ = 0.0;
    frequency_provenance provenance_ = frequency_provenance::raw_counts;
};

enum class na_mode { drop, partial_credit };

struct accentuation {
    std::string column;
    std::string level;
    double multiplier = 1.0;

    friend bool operator==(const accentuation&, const accentuation&) = default;
};

struct count_config {
    na_mode mode = na_mode::drop;
    double na_exp = 1.0;                           ///< exponent on the observed fraction (p - c)/p
    std::optional<accentuation> accentuate;
    std::size_t max_completions = 10'000;          ///< per incomplete row
    unsigned threads = 1;
};

namespace detail {

struct count_plan {
    std::size_t p = 0;
    std::vector<std::span<const std::int32_t>> codes;
    std::vector<std::size_t> level_counts;
    std::size_t accent_col = 0;
    std::int32_t accent_level = na_code;
    double accent_mult = 1.0;
};

inline void count_shard(const count_plan& plan, const count_config& cfg, std::size_t begin, std::size_t end,
                        frequency_table& out) {
    constexpr std::size_t block = 1024;
    const auto& codec = out.codec();
    const std::size_t words = codec.words();
    std::vector<std::uint64_t> keys(block * words);
    std::vector<std::uint8_t> na_count(block);
    pattern completion(plan.p);
    std::vector<std::size_t> missing;
    std::vector<std::uint64_t> key(words);
    const bool accent = plan.accent_level != na_code;

    for (std::size_t b0 = begin; b0 < end; b0 += block) {
        const std::size_t len = std::min(block, end - b0);
        std::fill(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(len * words), 0);
        std::fill(na_count.begin(), na_count.begin() + static_cast<std::ptrdiff_t>(len), 0);
        for (std::size_t c = 0; c < plan.p; ++c) {
            const auto col = plan.codes[c].subspan(b0, len);
            const auto w = codec.word_of(c);
            const auto sh = codec.shift_of(c);
            for (std::size_t i = 0; i < len; ++i) {
                const auto v = col[i];
                if (v == na_code) {
                    na_count[i] = 1;
                    continue;
                }
                keys[i * words + w] |= static_cast<std::uint64_t>(v) << sh;
            }
        }
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t row = b0 + i;
            if (!na_count[i]) {
                double w = 1.0;
                if (accent && plan.codes[plan.accent_col][row] == plan.accent_level) w = plan.accent_mult;
                out.add_key(&keys[i * words], w);
                continue;
            }
            if (cfg.mode == na_mode::drop) continue;

            missing.clear();
            double completions = 1.0;
            for (std::size_t c = 0; c < plan.p; ++c) {
                const auto v = plan.codes[c][row];
                if (v == na_code) {
                    missing.push_back(c);
                    completions *= static_cast<double>(plan.level_counts[c]);
                } else {
                    completion[c] = static_cast<std::uint32_t>(v);
                }
            }
            if (completions > static_cast<double>(cfg.max_completions))
                throw invalid_argument("count_tuples: row " + std::to_string(row) + " has " +
                                       format_number(completions) + " completions, above the cap of " +
                                       std::to_string(cfg.max_completions));
            if (completions == 0) continue;   // a missing column with no levels at all
            const double observed = static_cast<double>(plan.p - missing.size()) / static_cast<double>(plan.p);
            const double credit = std::pow(observed, cfg.na_exp) / completions;
            for (auto c : missing) completion[c] = 0;
            for (;;) {
                double w = credit;
                if (accent && completion[plan.accent_col] == static_cast<std::uint32_t>(plan.accent_level))
                    w *= plan.accent_mult;
                codec.encode(completion, key.data());
                out.add_key(key.data(), w);
                std::size_t j = 0;
                for (; j < missing.size(); ++j) {
                    auto c = missing[j];
                    if (++completion[c] < plan.level_counts[c]) break;
                    completion[c] = 0;
                }
                if (j == missing.size()) break;
            }
        }
    }
}

} // namespace detail

/// Weighted tuple counts over every column of `t` (all must be discrete).
///
/// A complete row adds 1 to its pattern, times the accentuation multiplier
/// when it holds the accentuated level. In partial-credit mode a row with c of
/// p cells missing adds (1/L) * ((p - c)/p)^na_exp to each of its L
/// completions. Rows are split into `threads` contiguous shards that are
/// counted independently and merged pairwise in shard order.
inline frequency_table count_tuples(const table& t, const count_config& cfg = {}) {
    auto result = frequency_table::for_table(t);
    if (cfg.na_exp < 0 || !std::isfinite(cfg.na_exp))
        throw invalid_argument("count_tuples: NAexp must be finite and >= 0");

    detail::count_plan plan;
    plan.p = t.cols();
    for (const auto& c : t.columns()) {
        plan.codes.push_back(c.codes());
        plan.level_counts.push_back(c.level_count());
    }
    if (cfg.accentuate) {
        const auto& a = *cfg.accentuate;
        if (!(a.multiplier >= 1.0)) throw invalid_argument("accentuate: multiplier must be >= 1");
        plan.accent_col = t.index_of(a.column);
        auto lvl = t[plan.accent_col].find_level(a.level);
        if (!lvl) throw invalid_argument("accentuate: column '" + a.column + "' has no level '" + a.level + "'");
        plan.accent_level = *lvl;
        plan.accent_mult = a.multiplier;
    }

    const std::size_t n = t.rows();
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(std::max<std::size_t>(1, n))));
    if (threads == 1) {
        detail::count_shard(plan, cfg, 0, n, result);
    } else {
        std::vector<frequency_table> parts(threads, result);
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned s = 0; s < threads; ++s) {
            pool.emplace_back([&, s] {
                try {
                    const std::size_t b = std::min(n, s * chunk), e = std::min(n, b + chunk);
                    detail::count_shard(plan, cfg, b, e, parts[s]);
                } catch (...) {
                    errors[s] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (std::size_t step = 1; step < parts.size(); step *= 2)
            for (std::size_t i = 0; i + step < parts.size(); i += 2 * step) {
                parts[i].merge(parts[i + step]);
                parts[i + step] = frequency_table(result.names(), result.levels());
            }
        result = std::move(parts.front());
    }
    if (cfg.mode == na_mode::partial_credit && t.na_count() > 0) result.mark(frequency_provenance::fractional_credit);
    if (cfg.accentuate) result.mark(frequency_provenance::accentuated);
    return result;
}

struct weighted_pattern {
    pattern levels;
    double weight = 0;

    friend bool operator==(const weighted_pattern&, const weighted_pattern&) = default;
};

namespace detail {

/// Lexicographic comparison of two stored patterns by their level labels.
inline bool labels_less(const frequency_table& ft, const pattern& a, const pattern& b) {
    for (std::size_t c = 0; c < a.size(); ++c) {
        if (a[c] == b[c]) continue;
        const auto& la = ft.levels()[c][a[c]];
        const auto& lb = ft.levels()[c][b[c]];
        if (la != lb) return la < lb;
    }
    return false;
}

} // namespace detail

/// F > 0: the F heaviest patterns, descending. F < 0: the |F| lightest
/// patterns of positive weight, ascending. Equal weights order by labels.
inline std::vector<weighted_pattern> top_patterns(const frequency_table& ft, long long lines) {
    if (lines == 0) throw invalid_argument("top_patterns: |F| must be >= 1");
    std::vector<weighted_pattern> all;
    all.reserve(ft.size());
    for (std::size_t i = 0; i < ft.size(); ++i) {
        const double w = ft.weight_at(i);
        if (lines < 0 && !(w > 0)) continue;
        all.push_back({ft.pattern_at(i), w});
    }
    std::size_t want = static_cast<std::size_t>(lines < 0 ? -lines : lines);
    if (want > all.size()) {
        warn("top_patterns: |F|=" + std::to_string(want) + " exceeds " + std::to_string(all.size()) +
             " distinct patterns; clamped");
        want = all.size();
    }
    auto cmp = [&](const weighted_pattern& a, const weighted_pattern& b) {
        if (a.weight != b.weight) return lines > 0 ? a.weight > b.weight : a.weight < b.weight;
        return detail::labels_less(ft, a.levels, b.levels);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(want), all.end(), cmp);
    all.resize(want);
    return all;
}

/// Every pattern in export order.
inline std::vector<weighted_pattern> top_patterns_all(const frequency_table& ft) {
    std::vector<weighted_pattern> all;
    all.reserve(ft.size());
    for (std::size_t i = 0; i < ft.size(); ++i) all.push_back({ft.pattern_at(i), ft.weight_at(i)});
    std::sort(all.begin(), all.end(), [&](const weighted_pattern& a, const weighted_pattern& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return detail::labels_less(ft, a.levels, b.levels);
    });
    return all;
}

/// Fraction of missing cells among all n*p cells.
inline double estimate_q(const table& t) {
    return static_cast<double>(t.na_count()) / static_cast<double>(t.rows() * t.cols());
}

namespace detail {

inline std::string escape_tsv(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        default: out.push_back(ch);
        }
    }
    return out;
}

inline std::string unescape_tsv(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out.push_back(s[i]);
            continue;
        }
        switch (s[++i]) {
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        default: out.push_back(s[i]);
        }
    }
    return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace detail

inline constexpr std::string_view frequency_column_name = "Freq";

/// Tab-separated frequency file: a header of column names plus "Freq", then
/// one line per pattern (level labels, weight to 6 decimals), heaviest first,
/// equal weights by labels.
inline void export_frequencies(const frequency_table& ft, std::ostream& os) {
    for (const auto& n : ft.names()) os << detail::escape_tsv(n) << '\t';
    os << frequency_column_name << '\n';
    auto rows = top_patterns_all(ft);
    char buf[64];
    for (const auto& wp : rows) {
        for (std::size_t c = 0; c < wp.levels.size(); ++c) os << detail::escape_tsv(ft.levels()[c][wp.levels[c]]) << '\t';
        std::snprintf(buf, sizeof buf, "%.6f", wp.weight);
        os << buf << '\n';
    }
    if (!os) throw error("export_frequencies: write failure");
}

inline std::string export_frequencies(const frequency_table& ft) {
    std::ostringstream os;
    export_frequencies(ft, os);
    return os.str();
}

/// Reads a frequency file back. Level sets are the labels seen, in order of
/// first appearance.
inline frequency_table import_frequencies(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw parse_error(1, "empty frequency file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_tabs(line);
    if (header.empty() || header.back() != frequency_column_name)
        throw parse_error(1, "frequency header must end with '" + std::string(frequency_column_name) + "'");
    const std::size_t p = header.size() - 1;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < p; ++c) names.push_back(detail::unescape_tsv(header[c]));

    std::vector<std::vector<std::string>> levels(p);
    std::vector<std::unordered_map<std::string, std::uint32_t>> index(p);
    std::vector<std::pair<pattern, double>> entries;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() != p + 1)
            throw parse_error(row, "expected " + std::to_string(p + 1) + " fields, found " + std::to_string(fields.size()));
        pattern pt(p);
        for (std::size_t c = 0; c < p; ++c) {
            auto label = detail::unescape_tsv(fields[c]);
            auto [it, fresh] = index[c].try_emplace(label, static_cast<std::uint32_t>(levels[c].size()));
            if (fresh) levels[c].push_back(label);
            pt[c] = it->second;
        }
        auto w = parse_number(fields[p]);
        if (!w || *w < 0) throw parse_error(row, "bad weight '" + std::string(fields[p]) + "'");
        entries.emplace_back(std::move(pt), *w);
    }
    frequency_table ft(std::move(names), std::move(levels));
    for (const auto& [pt, w] : entries) ft.add(pt, w);
    return ft;
}

} // namespace tfpc
