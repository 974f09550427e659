#include <tfpc/csv.hpp>
#include <tfpc/frequency.hpp>

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace tfpc;

namespace {

const char* example_csv = "U,V\n1,2\n3,2\n3,NA\n3,2\n3,1\n2,2\n";

table example_table() { return make_factor_all(load_csv(example_csv)); }

std::map<std::vector<std::string>, double> by_labels(const frequency_table& ft) {
    std::map<std::vector<std::string>, double> out;
    for (const auto& [p, w] : ft.to_map()) out[ft.labels(p)] = w;
    return out;
}

std::map<oracle::cell_pattern, double> as_cells(const frequency_table& ft) {
    std::map<oracle::cell_pattern, double> out;
    for (const auto& [p, w] : ft.to_map()) out[oracle::cell_pattern(p.begin(), p.end())] = w;
    return out;
}

table three_level_table(const std::vector<std::vector<int>>& rows) {
    std::vector<column> cols;
    for (std::size_t c = 0; c < rows.front().size(); ++c) {
        std::vector<std::int32_t> codes;
        for (const auto& r : rows) codes.push_back(r[c] < 0 ? na_code : r[c] - 1);
        cols.push_back(column::categorical("c" + std::to_string(c + 1), {"1", "2", "3"}, codes));
    }
    return table(std::move(cols));
}

table random_discrete(std::size_t n, std::size_t p, std::uint64_t seed, double na_rate) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<column> cols;
    for (std::size_t c = 0; c < p; ++c) {
        const std::size_t k = 2 + rng() % 4;
        std::vector<std::string> levels;
        for (std::size_t l = 0; l < k; ++l) levels.push_back("L" + std::to_string(l));
        std::vector<std::int32_t> codes(n);
        for (auto& v : codes) v = u(rng) < na_rate ? na_code : static_cast<std::int32_t>(rng() % k);
        cols.push_back(column::categorical("v" + std::to_string(c), levels, codes));
    }
    return table(std::move(cols));
}

} // namespace

TEST(PatternCodec, RoundTripsWideTables) {
    std::vector<std::size_t> counts;
    for (int c = 0; c < 150; ++c) counts.push_back(c % 7 == 0 ? 1000 : 10);
    pattern_codec codec(counts);
    std::mt19937_64 rng(1);
    pattern p(counts.size());
    for (int trial = 0; trial < 100; ++trial) {
        for (std::size_t c = 0; c < p.size(); ++c) p[c] = static_cast<std::uint32_t>(rng() % counts[c]);
        std::vector<std::uint64_t> key(codec.words(), 0);
        codec.encode(p, key.data());
        ASSERT_EQ(codec.decode(key.data()), p);
    }
}

TEST(CountTuples, IntactCasesOfExample) {
    auto ft = count_tuples(example_table());
    std::map<std::vector<std::string>, double> expect{
        {{"1", "2"}, 1}, {{"3", "2"}, 2}, {{"3", "1"}, 1}, {{"2", "2"}, 1}};
    EXPECT_EQ(by_labels(ft), expect);
    EXPECT_EQ(ft.total_weight(), 5.0);
}

TEST(CountTuples, PartialCreditFiveEighteenths) {
    auto t = three_level_table({{2, 2, 1, 3, -1, 3}});
    count_config cfg;
    cfg.mode = na_mode::partial_credit;
    cfg.na_exp = 1;
    auto ft = count_tuples(t, cfg);
    ASSERT_EQ(ft.size(), 3u);
    for (std::uint32_t v = 0; v < 3; ++v) EXPECT_NEAR(ft.weight(pattern{1, 1, 0, 2, v, 2}), 5.0 / 18.0, 1e-15);
    EXPECT_TRUE(has_flag(ft.provenance(), frequency_provenance::fractional_credit));
}

TEST(CountTuples, ExponentZeroGivesThirds) {
    auto t = three_level_table({{2, 2, 1, 3, -1, 3}});
    count_config cfg;
    cfg.mode = na_mode::partial_credit;
    cfg.na_exp = 0;
    auto ft = count_tuples(t, cfg);
    for (std::uint32_t v = 0; v < 3; ++v) EXPECT_DOUBLE_EQ(ft.weight(pattern{1, 1, 0, 2, v, 2}), 1.0 / 3.0);
    EXPECT_NEAR(ft.total_weight(), 1.0, 1e-15);
}

TEST(CountTuples, DropModeIgnoresIncompleteRows) {
    auto t = three_level_table({{1, 1}, {1, -1}, {-1, -1}});
    auto ft = count_tuples(t);
    EXPECT_EQ(ft.size(), 1u);
    EXPECT_EQ(ft.total_weight(), 1.0);
}

TEST(CountTuples, MatchesNaiveOracle) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 1 + rng() % 400, p = 1 + rng() % 6;
        auto t = random_discrete(n, p, seed, 0.15);
        count_config cfg;
        EXPECT_EQ(as_cells(count_tuples(t, cfg)), oracle::naive_counts(t, false, 1.0));
        cfg.mode = na_mode::partial_credit;
        cfg.na_exp = 0.5 + double(seed % 3);
        auto got = as_cells(count_tuples(t, cfg));
        auto expect = oracle::naive_counts(t, true, cfg.na_exp);
        ASSERT_EQ(got.size(), expect.size());
        for (const auto& [k, w] : expect) EXPECT_NEAR(got[k], w, 1e-9);
    }
}

TEST(CountTuples, ParallelEqualsSerial) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto t = random_discrete(5000 + seed * 311, 5, seed, 0.05);
        count_config cfg;
        cfg.mode = seed % 2 ? na_mode::partial_credit : na_mode::drop;
        auto serial = count_tuples(t, cfg).to_map();
        for (unsigned threads : {2u, 3u, 8u}) {
            cfg.threads = threads;
            auto par = count_tuples(t, cfg).to_map();
            ASSERT_EQ(par.size(), serial.size());
            for (const auto& [k, w] : serial) EXPECT_NEAR(par[k], w, 1e-9);
        }
    }
}

TEST(CountTuples, MoreThreadsThanRows) {
    auto t = random_discrete(3, 2, 4, 0.0);
    count_config cfg;
    cfg.threads = 8;
    EXPECT_EQ(count_tuples(t, cfg).to_map(), count_tuples(t).to_map());
}

TEST(CountTuples, AccentuateOnlyTouchesAccentedPatterns) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto t = random_discrete(300, 4, seed + 50, 0.1);
        count_config cfg;
        cfg.mode = na_mode::partial_credit;
        auto plain = count_tuples(t, cfg);
        cfg.accentuate = accentuation{"v1", "L1", 4.0};
        auto acc = count_tuples(t, cfg);
        const auto lvl = static_cast<std::uint32_t>(*t["v1"].find_level("L1"));
        for (const auto& [p, w] : plain.to_map()) {
            if (p[1] == lvl) EXPECT_NEAR(acc.weight(p), 4.0 * w, 1e-12);
            else EXPECT_EQ(acc.weight(p), w);   // bit-identical
        }
        auto expect = oracle::naive_counts(t, true, 1.0, 1, static_cast<int>(lvl), 4.0);
        for (const auto& [k, w] : expect)
            EXPECT_NEAR(acc.weight(pattern(k.begin(), k.end())), w, 1e-9);
    }
}

TEST(CountTuples, AccentuateErrors) {
    auto t = random_discrete(10, 2, 3, 0.0);
    count_config cfg;
    cfg.accentuate = accentuation{"v0", "nope", 2.0};
    EXPECT_THROW((void)count_tuples(t, cfg), invalid_argument);
    cfg.accentuate = accentuation{"missing", "L0", 2.0};
    EXPECT_THROW((void)count_tuples(t, cfg), invalid_argument);
    cfg.accentuate = accentuation{"v0", "L0", 0.5};
    EXPECT_THROW((void)count_tuples(t, cfg), invalid_argument);
}

TEST(CountTuples, WeightsNonIncreasingInExponent) {
    auto t = random_discrete(500, 4, 99, 0.2);
    count_config cfg;
    cfg.mode = na_mode::partial_credit;
    auto complete_only = count_tuples(t);
    std::map<pattern, double> previous;
    for (double e : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        cfg.na_exp = e;
        auto m = count_tuples(t, cfg).to_map();
        for (const auto& [p, w] : m) {
            EXPECT_GE(w + 1e-12, complete_only.weight(p));
            if (!previous.empty()) { EXPECT_LE(w, previous[p] + 1e-12); }
        }
        previous = m;
    }
}

TEST(CountTuples, ExponentZeroConservesMass) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto t = random_discrete(200, 3, seed + 7, 0.3);
        count_config cfg;
        cfg.mode = na_mode::partial_credit;
        cfg.na_exp = 0;
        EXPECT_NEAR(count_tuples(t, cfg).total_weight(), double(t.rows()), 1e-9);
    }
}

TEST(CountTuples, CompletionCapAndInputErrors) {
    std::vector<column> cols;
    std::vector<std::string> levels;
    for (int l = 0; l < 200; ++l) levels.push_back(std::to_string(l));
    for (int c = 0; c < 2; ++c) cols.push_back(column::categorical("c" + std::to_string(c), levels, {na_code}));
    table t(std::move(cols));
    count_config cfg;
    cfg.mode = na_mode::partial_credit;
    EXPECT_THROW((void)count_tuples(t, cfg), invalid_argument);   // 40,000 completions

    table cont({column::continuous("x", {1, 2})});
    EXPECT_THROW((void)count_tuples(cont), invalid_argument);
    cfg.na_exp = -1;
    EXPECT_THROW((void)count_tuples(random_discrete(3, 2, 1, 0), cfg), invalid_argument);
}

TEST(TopPatterns, PositiveAndNegative) {
    frequency_table ft({"x"}, {{"A", "B", "C"}});
    ft.add(pattern{0}, 3);
    ft.add(pattern{1}, 1);
    ft.add(pattern{2}, 2);
    auto top = top_patterns(ft, 2);
    ASSERT_EQ(top.size(), 2u);
    EXPECT_EQ(top[0].levels, pattern{0});
    EXPECT_EQ(top[1].levels, pattern{2});
    auto low = top_patterns(ft, -1);
    ASSERT_EQ(low.size(), 1u);
    EXPECT_EQ(low[0].levels, pattern{1});
    EXPECT_THROW((void)top_patterns(ft, 0), invalid_argument);
}

TEST(TopPatterns, TiesByLabelAndClampWarns) {
    frequency_table ft({"x"}, {{"b", "a", "c"}});
    ft.add(pattern{0}, 1);
    ft.add(pattern{1}, 1);
    ft.add(pattern{2}, 0);
    auto top = top_patterns(ft, 2);
    EXPECT_EQ(ft.labels(top[0].levels)[0], "a");
    EXPECT_EQ(ft.labels(top[1].levels)[0], "b");
    scoped_warning_capture cap;
    auto low = top_patterns(ft, -10);
    EXPECT_EQ(low.size(), 2u);   // zero-weight patterns are not outliers
    EXPECT_EQ(cap.messages().size(), 1u);
}

TEST(TopPatterns, MatchesFullSort) {
    auto t = random_discrete(2000, 4, 5, 0.0);
    auto ft = count_tuples(t);
    std::vector<std::pair<double, std::vector<std::string>>> all;
    for (const auto& [p, w] : ft.to_map()) all.emplace_back(w, ft.labels(p));
    std::sort(all.begin(), all.end());
    auto low = top_patterns(ft, -25);
    ASSERT_EQ(low.size(), 25u);
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_EQ(low[i].weight, all[i].first);
        EXPECT_EQ(ft.labels(low[i].levels), all[i].second);
    }
}

TEST(EstimateQ, Examples) {
    EXPECT_DOUBLE_EQ(estimate_q(example_table()), 1.0 / 12.0);
    EXPECT_EQ(estimate_q(random_discrete(10, 2, 1, 0.0)), 0.0);
    EXPECT_EQ(estimate_q(random_discrete(10, 2, 1, 1.1)), 1.0);
}

TEST(ExportFrequencies, ExampleFile) {
    auto text = export_frequencies(count_tuples(example_table()));
    std::istringstream in(text);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "U\tV\tFreq");
    EXPECT_EQ(first, "3\t2\t2.000000");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 3u);
}

TEST(ExportFrequencies, EmptyTableIsHeaderOnly) {
    frequency_table ft({"a", "b"}, {{"x"}, {"y"}});
    EXPECT_EQ(export_frequencies(ft), "a\tb\tFreq\n");
}

TEST(ExportFrequencies, ImportRoundTrip) {
    auto t = random_discrete(300, 3, 12, 0.1);
    count_config cfg;
    cfg.mode = na_mode::partial_credit;
    auto ft = count_tuples(t, cfg);
    std::istringstream in(export_frequencies(ft));
    auto back = import_frequencies(in);
    EXPECT_EQ(back.names(), ft.names());
    EXPECT_EQ(back.size(), ft.size());
    for (const auto& [p, w] : ft.to_map()) {
        pattern q(p.size());
        for (std::size_t c = 0; c < p.size(); ++c) {
            const auto& lv = back.levels()[c];
            q[c] = static_cast<std::uint32_t>(std::find(lv.begin(), lv.end(), ft.levels()[c][p[c]]) - lv.begin());
        }
        EXPECT_NEAR(back.weight(q), w, 5e-7);
    }
}

TEST(ExportFrequencies, ImportRejectsMalformed) {
    std::istringstream no_freq("a\tb\n");
    EXPECT_THROW((void)import_frequencies(no_freq), parse_error);
    std::istringstream ragged("a\tFreq\nx\n");
    EXPECT_THROW((void)import_frequencies(ragged), parse_error);
}
