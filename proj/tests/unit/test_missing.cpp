#include <tfpc/csv.hpp>
#include <tfpc/missing.hpp>

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tfpc;

namespace {

observed_distribution one_column(double a, double b, double na) {
    observed_distribution d;
    d.level_counts = {2};
    d.proportions = {{{na_code}, na}, {{0}, a}, {{1}, b}};
    return d;
}

double prob_of(const mom_result& r, const pattern& p) {
    for (std::size_t i = 0; i < r.patterns.size(); ++i)
        if (r.patterns[i] == p) return r.probabilities[i];
    return 0.0;
}

/// U in {1,2,3}, V in {1,2,3}: the worked update-method example.
table mar_example() {
    const std::vector<std::string> lv{"1", "2", "3"};
    return table({column::categorical("U", lv, {0, 2, 2, 2, 2, 1}),
                  column::categorical("V", lv, {1, 1, na_code, 1, 0, 1})});
}

std::map<std::vector<std::string>, double> by_labels(const frequency_table& ft) {
    std::map<std::vector<std::string>, double> out;
    for (const auto& [p, w] : ft.to_map()) out[ft.labels(p)] = w;
    return out;
}

table random_single_na(std::size_t n, std::size_t p, std::uint64_t seed, double na_rate) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<std::vector<std::int32_t>> codes(p, std::vector<std::int32_t>(n));
    std::vector<std::size_t> k(p);
    for (auto& x : k) x = 2 + rng() % 3;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < p; ++c) codes[c][r] = static_cast<std::int32_t>(rng() % k[c]);
        if (u(rng) < na_rate) codes[rng() % p][r] = na_code;
    }
    std::vector<column> cols;
    for (std::size_t c = 0; c < p; ++c) {
        std::vector<std::string> levels;
        for (std::size_t l = 0; l < k[c]; ++l) levels.push_back(std::to_string(l + 1));
        cols.push_back(column::categorical("c" + std::to_string(c), levels, codes[c]));
    }
    return table(std::move(cols));
}

} // namespace

TEST(MomEstimate, OneColumnSymmetric) {
    auto r = mom_estimate(one_column(0.4, 0.4, 0.2), 0.2);
    EXPECT_NEAR(prob_of(r, {0}), 0.5, 1e-12);
    EXPECT_NEAR(prob_of(r, {1}), 0.5, 1e-12);
}

TEST(MomEstimate, OneColumnAsymmetric) {
    auto r = mom_estimate(one_column(0.6, 0.2, 0.2), 0.2);
    EXPECT_NEAR(prob_of(r, {0}), 0.75, 1e-12);
    EXPECT_NEAR(prob_of(r, {1}), 0.25, 1e-12);
    EXPECT_LT(r.residual, 1e-12);
}

TEST(MomEstimate, ExactRecoveryFromForwardOracle) {
    const std::map<oracle::cell_pattern, double> truth{{{0, 0}, 0.4}, {{0, 1}, 0.3}, {{1, 0}, 0.2}, {{1, 1}, 0.1}};
    const double q = 0.1;
    auto observed = oracle::mcar_observed(truth, q);
    ASSERT_EQ(observed.size(), 9u);
    observed_distribution d;
    d.level_counts = {2, 2};
    for (const auto& [o, pr] : observed) d.proportions.push_back({observed_pattern(o.begin(), o.end()), pr});
    auto r = mom_estimate(d, q);
    for (const auto& [t, pr] : truth) EXPECT_NEAR(prob_of(r, pattern(t.begin(), t.end())), pr, 1e-9);
    EXPECT_LT(r.residual, 1e-9);

    // The forward map of the estimate reproduces the input proportions.
    auto fwd = mcar_forward(r, d.level_counts, q);
    for (const auto& [o, pr] : observed) EXPECT_NEAR(fwd[observed_pattern(o.begin(), o.end())], pr, 1e-9);
}

TEST(MomEstimate, ProbabilityVector) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto t = random_single_na(400, 3, 100 + trial, 0.3);
        auto r = mom_estimate(t, estimate_q(t));
        double sum = 0;
        for (double x : r.probabilities) {
            EXPECT_GE(x, 0.0);
            sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(MomEstimate, QOutsideOpenInterval) {
    auto d = one_column(0.4, 0.4, 0.2);
    EXPECT_THROW((void)mom_estimate(d, 0.0), invalid_argument);
    EXPECT_THROW((void)mom_estimate(d, 1.0), invalid_argument);
    EXPECT_THROW((void)mom_estimate(d, -0.1), invalid_argument);
}

TEST(MomEstimate, RankDeficiencyReported) {
    // With q so close to 1 the intact-tuple equations vanish numerically and
    // the marginal equations alone cannot separate the four unknowns.
    observed_distribution d;
    d.level_counts = {2, 2};
    d.proportions = {{{0, na_code}, 0.25}, {{1, na_code}, 0.25}, {{na_code, 0}, 0.25}, {{na_code, 1}, 0.25}};
    try {
        (void)mom_estimate(d, 1.0 - 1e-12);
        FAIL() << "expected rank_deficient_error";
    } catch (const rank_deficient_error& e) {
        EXPECT_EQ(e.unknowns(), 4u);
        EXPECT_GE(e.deficiency(), 1u);
    }
}

TEST(MomEstimate, FrequencyTableScaledToRows) {
    auto t = random_single_na(1000, 2, 9, 0.2);
    auto ft = mom_frequency_table(t, estimate_q(t));
    EXPECT_NEAR(ft.total_weight(), 1000.0, 1e-6);
    EXPECT_TRUE(has_flag(ft.provenance(), frequency_provenance::estimator_adjusted));
}

TEST(MarUpdate, WorkedExample) {
    auto ft = mar_update(mar_example());
    std::map<std::vector<std::string>, double> expect{
        {{"1", "2"}, 1}, {{"3", "2"}, 2.6}, {{"3", "1"}, 1.3}, {{"2", "2"}, 1}, {{"3", "3"}, 0.1}};
    auto got = by_labels(ft);
    ASSERT_EQ(got.size(), expect.size());
    for (const auto& [k, w] : expect) EXPECT_NEAR(got[k], w, 1e-9);
    EXPECT_NEAR(ft.total_weight(), 6.0, 1e-12);
}

TEST(MarUpdate, NeverRefreshOnExampleAgrees) {
    auto a = by_labels(mar_update(mar_example(), mar_refresh::never));
    EXPECT_NEAR((a[{"3", "3"}]), 0.1, 1e-9);
    EXPECT_NEAR((a[{"3", "2"}]), 2.6, 1e-9);
}

TEST(MarUpdate, NoIncompleteRowsEqualsIntactCounts) {
    auto t = random_single_na(200, 3, 4, 0.0);
    EXPECT_EQ(mar_update(t).to_map(), count_tuples(t).to_map());
}

TEST(MarUpdate, MassConservation) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto t = random_single_na(50 + seed * 13, 2 + seed % 3, seed, 0.35);
        EXPECT_NEAR(mar_update(t).total_weight(), double(t.rows()), 1e-9);
        EXPECT_NEAR(mar_update(t, mar_refresh::never).total_weight(), double(t.rows()), 1e-9);
    }
}

TEST(MarUpdate, NeverRefreshIsOrderIndependent) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto t = random_single_na(120, 3, seed + 40, 0.3);
        std::vector<std::size_t> perm(t.rows());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::mt19937_64 rng(seed);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto a = mar_update(t, mar_refresh::never).to_map();
        auto b = mar_update(t.take_rows(perm), mar_refresh::never).to_map();
        EXPECT_EQ(a, b);
    }
}

TEST(MarUpdate, UnsupportedObservedPartSpreadsUniformly) {
    const std::vector<std::string> lv{"a", "b"};
    table t({column::categorical("U", lv, {0, 1}), column::categorical("V", lv, {0, na_code})});
    scoped_warning_capture cap;
    auto ft = mar_update(t);
    EXPECT_NEAR(ft.weight(pattern{1, 0}), 0.5, 1e-12);
    EXPECT_NEAR(ft.weight(pattern{1, 1}), 0.5, 1e-12);
    EXPECT_EQ(cap.messages().size(), 1u);
}

TEST(MarUpdate, RejectsRowsWithSeveralMissingCells) {
    const std::vector<std::string> lv{"a", "b"};
    table t({column::categorical("U", lv, {0, na_code}), column::categorical("V", lv, {0, na_code})});
    EXPECT_THROW((void)mar_update(t), invalid_argument);
}

TEST(McarDiagnostic, PredictedRate) {
    EXPECT_NEAR(predicted_complete_rate(0.135, 13), 0.152, 0.001);
}

TEST(McarDiagnostic, NaFreeTable) {
    auto r = mcar_diagnostic(random_single_na(50, 3, 1, 0.0));
    EXPECT_EQ(r.q, 0.0);
    EXPECT_EQ(r.predicted_complete_rate, 1.0);
    EXPECT_EQ(r.empirical_complete_rate, 1.0);
}

TEST(McarDiagnostic, SimulatedMcarAgrees) {
    std::mt19937_64 rng(2024);
    std::bernoulli_distribution miss(0.2);
    const std::size_t n = 50'000, p = 5;
    std::vector<column> cols;
    for (std::size_t c = 0; c < p; ++c) {
        std::vector<std::int32_t> codes(n);
        for (auto& v : codes) v = miss(rng) ? na_code : static_cast<std::int32_t>(rng() % 3);
        cols.push_back(column::categorical("c" + std::to_string(c), {"x", "y", "z"}, codes));
    }
    auto r = mcar_diagnostic(table(std::move(cols)));
    EXPECT_LT(std::abs(r.predicted_complete_rate - r.empirical_complete_rate), 0.01);
}
