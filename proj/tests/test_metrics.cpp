#include "chartforge/metrics.hpp"
#include "chartforge/sample.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace chartforge;

namespace {

using Vec = std::vector<double>;

double exhaustive_min(const std::vector<std::vector<double>> &cost) {
    std::vector<std::size_t> perm(cost.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0;
        for (std::size_t i = 0; i < perm.size(); ++i)
            s += cost[i][perm[i]];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

DataTable two_col(std::vector<std::pair<std::string, double>> rows, std::string x = "Year", std::string y = "Sales") {
    std::vector<std::vector<Cell>> cells;
    for (auto &[k, v] : rows)
        cells.push_back({k, v});
    return DataTable({{x, ColumnKind::categorical, std::nullopt}, {y, ColumnKind::numeric, std::nullopt}}, cells);
}

} // namespace

TEST(RelaxedAccuracy, KnownExamples) {
    EXPECT_EQ(relaxed_accuracy("98", "100"), 1);
    EXPECT_EQ(relaxed_accuracy("94", "100"), 0);
    EXPECT_EQ(relaxed_accuracy("Yes", "yes"), 1);
    EXPECT_EQ(relaxed_accuracy(" No ", "yes"), 0);
    EXPECT_EQ(relaxed_accuracy("0", "0"), 1);
    EXPECT_EQ(relaxed_accuracy("0.01", "0"), 0);
    EXPECT_EQ(relaxed_accuracy("12%", "12"), 1);
    EXPECT_EQ(relaxed_accuracy("1,050", "1000"), 1);
}

TEST(RelaxedAccuracy, BoundarySet) {
    for (double g : {100.0, 37.3, 0.8, -250.0, 12345.67}) {
        EXPECT_EQ(relaxed_accuracy(format_exact(g * 1.049), format_exact(g)), 1) << g;
        EXPECT_EQ(relaxed_accuracy(format_exact(g * 1.05), format_exact(g)), 1) << g;
        EXPECT_EQ(relaxed_accuracy(format_exact(g * 1.051), format_exact(g)), 0) << g;
        EXPECT_EQ(relaxed_accuracy(format_exact(g * 0.95), format_exact(g)), 1) << g;
    }
    EXPECT_EQ(relaxed_accuracy("104.9", "100"), 1);
    EXPECT_EQ(relaxed_accuracy("105", "100"), 1);
    EXPECT_EQ(relaxed_accuracy("105.1", "100"), 0);
}

TEST(RelaxedAccuracy, ScaleConsistent) {
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        const double g = rng.uniform(-1000, 1000), p = g * rng.uniform(0.8, 1.2);
        const double k = rng.chance(0.5) ? rng.uniform(0.01, 100) : -rng.uniform(0.01, 100);
        EXPECT_EQ(relaxed_accuracy(format_exact(p), format_exact(g)),
                  relaxed_accuracy(format_exact(p * k), format_exact(g * k)));
    }
}

TEST(Assignment, MatchesExhaustiveSearch) {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(6);
        std::vector<std::vector<double>> cost(n, std::vector<double>(n));
        for (auto &row : cost)
            for (auto &c : row)
                c = rng.chance(0.2) ? 1.0 : rng.unit();
        const auto a = solve_assignment(cost);
        std::vector<bool> used(n, false);
        for (auto j : a) {
            ASSERT_LT(j, n);
            ASSERT_FALSE(used[j]);
            used[j] = true;
        }
        ASSERT_NEAR(assignment_cost(cost), exhaustive_min(cost), 1e-12);
    }
}

TEST(Rnss, KnownExamples) {
    EXPECT_DOUBLE_EQ(rnss(Vec{10}, Vec{10}), 1.0);
    EXPECT_NEAR(rnss(Vec{9.5}, Vec{10}), 0.95, 1e-12);
    EXPECT_DOUBLE_EQ(rnss(Vec{}, Vec{10}), 0.0);
    EXPECT_DOUBLE_EQ(rnss(Vec{}, Vec{}), 1.0);
    // 9.5 pairs with 10 and 3 with 3; the 100 is unmatched
    EXPECT_NEAR(rnss(Vec{3, 9.5, 100}, Vec{10, 3}), 1 - (0.05 + 0 + 1) / 3, 1e-12);
}

TEST(Rnss, MonotoneUnderPerturbation) {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        Vec gold;
        for (std::size_t k = 0; k < 1 + rng.index(6); ++k)
            gold.push_back(round_to(rng.uniform(-100, 100), 2));
        Vec pred = gold;
        const auto j = rng.index(pred.size());
        double prev = rnss(pred, gold);
        for (int step = 0; step < 5; ++step) {
            pred[j] += (gold[j] >= 0 ? 1 : -1) * rng.uniform(0, 10);
            const double cur = rnss(pred, gold);
            ASSERT_LE(cur, prev + 1e-12);
            prev = cur;
        }
    }
}

TEST(Rnss, TextAndTableAgree) {
    auto t = two_col({{"2001", 5}, {"2002", 7.5}});
    EXPECT_DOUBLE_EQ(rnss(flatten_table(t), t), 1.0);
    EXPECT_EQ(text_numbers("Year | Sales & 2001 | 1,200 & 2002 | 12%"), (Vec{2001, 1200, 2002, 12}));
    EXPECT_EQ(extract_numbers("from -3.5 to .25 and 4,000"), (Vec{-3.5, 0.25, 4000}));
}

TEST(Rms, KnownExamples) {
    auto gold = two_col({{"2001", 5}, {"2002", 7}});
    auto r = rms_f1(gold, gold);
    EXPECT_DOUBLE_EQ(r.precision, 1);
    EXPECT_DOUBLE_EQ(r.recall, 1);
    EXPECT_DOUBLE_EQ(r.f1, 1);

    r = rms_f1(two_col({{"2001", 5}}), gold);
    EXPECT_DOUBLE_EQ(r.precision, 1);
    EXPECT_DOUBLE_EQ(r.recall, 0.5);
    EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-12);

    DataTable empty({{"Year", ColumnKind::categorical, std::nullopt}, {"Sales", ColumnKind::numeric, std::nullopt}},
                    {});
    r = rms_f1(empty, gold);
    EXPECT_EQ(r.precision, 0);
    EXPECT_EQ(r.recall, 0);
    EXPECT_EQ(r.f1, 0);
}

TEST(Rms, TransposedAndReorderedTablesScorePerfectly) {
    DataTable wide({{"Year", ColumnKind::categorical, std::nullopt},
                    {"Men", ColumnKind::numeric, std::nullopt},
                    {"Women", ColumnKind::numeric, std::nullopt}},
                   {{std::string("2001"), 1.0, 2.0}, {std::string("2002"), 3.0, 4.0}});
    EXPECT_DOUBLE_EQ(rms_f1(transpose_table(wide), wide).f1, 1.0);
    DataTable shuffled({{"YEAR", ColumnKind::categorical, std::nullopt},
                        {"women", ColumnKind::numeric, std::nullopt},
                        {"  Men ", ColumnKind::numeric, std::nullopt}},
                       {{std::string("2002"), 4.0, 3.0}, {std::string("2001"), 2.0, 1.0}});
    EXPECT_DOUBLE_EQ(rms_f1(shuffled, wide).f1, 1.0);
}

TEST(Rms, PartialCredit) {
    auto gold = two_col({{"2001", 10}});
    auto r = rms_f1(two_col({{"2001", 9}}), gold);
    EXPECT_NEAR(r.f1, 0.9, 1e-12);
    // key "2009 sales" vs "2001 sales": one edit in ten characters
    r = rms_f1(two_col({{"2009", 10}}), gold);
    EXPECT_NEAR(r.f1, 0.9, 1e-12);
}

TEST(Metrics, IdentityOnGeneratedTables) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto type = kAllChartTypes[seed % kAllChartTypes.size()];
        const auto t = chart_view(random_chart_table(seed, type));
        ASSERT_DOUBLE_EQ(rnss(t, t), 1.0);
        ASSERT_DOUBLE_EQ(rms_f1(t, t).f1, 1.0);
        ASSERT_DOUBLE_EQ(rms_f1(table_from_flattened(flatten_table(t)), t).f1, 1.0);
    }
}

TEST(Levenshtein, KnownDistances) {
    EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
    EXPECT_EQ(levenshtein("", "abc"), 3u);
    EXPECT_DOUBLE_EQ(normalized_levenshtein("", ""), 0.0);
    EXPECT_DOUBLE_EQ(normalized_levenshtein("ab", "cd"), 1.0);
}

TEST(Bleu, Tokenisation) {
    EXPECT_EQ(bleu_tokens("Hello, World!  It's 5.5%"),
              (std::vector<std::string>{"hello", ",", "world", "!", "it", "'", "s", "5", ".", "5", "%"}));
    EXPECT_EQ(bleu_tokens("a\xC2\xA0" "b\xE2\x80\x94" "c"), (std::vector<std::string>{"a", "b", "\xE2\x80\x94", "c"}));
}

TEST(Bleu, KnownExamples) {
    EXPECT_DOUBLE_EQ(corpus_bleu({"the cat sat on the mat", "a b c d e"}, {{"the cat sat on the mat"}, {"a b c d e"}}),
                     100.0);
    EXPECT_DOUBLE_EQ(corpus_bleu({""}, {{"the cat"}}), 0.0);
    // unigrams 3/3, bigrams 2/2, trigrams 1/1, no 4-grams; brevity 3 vs 4
    const double by_hand = 100.0 * std::exp(1.0 - 4.0 / 3.0) * std::pow(1e-9, 0.25);
    EXPECT_NEAR(corpus_bleu({"the cat sat"}, {{"the cat sat down"}}), by_hand, 1e-9);
    EXPECT_THROW(corpus_bleu({"a"}, {}), Error);
}

TEST(Bleu, ClipsAndPicksClosestReference) {
    // "the the the the" against "the cat": unigram 1/4 clipped
    const double p1 = 0.25, rest = 1e-9;
    const double by_hand = 100.0 * std::exp((std::log(p1) + 3 * std::log(rest)) / 4);
    EXPECT_NEAR(corpus_bleu({"the the the the"}, {{"the cat", "the cat sat on"}}), by_hand, 1e-12);
}
