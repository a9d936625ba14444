#include "chart_pool.hpp"
#include "qa_oracle.hpp"

#include "chartforge/qa.hpp"

#include <gtest/gtest.h>

using namespace chartforge;

namespace {

RenderedChart simple_chart(ChartType type, const std::vector<double> &values) {
    std::vector<std::vector<Cell>> rows;
    for (std::size_t i = 0; i < values.size(); ++i)
        rows.push_back({std::string("L") + std::to_string(i + 1), values[i]});
    DataTable t({{"Label", ColumnKind::categorical, std::nullopt}, {"Value", ColumnKind::numeric, std::nullopt}},
                rows);
    ChartSpec spec;
    spec.chart_type = type;
    spec.table = make_chart_ready(t, 0, std::nullopt, 1);
    return render(spec);
}

SlotBinding binding(int id, std::map<std::string, std::string> slots = {}, std::size_t variant = 0) {
    SlotBinding b;
    b.template_id = id;
    b.variant = variant;
    b.slots = std::move(slots);
    return b;
}

bool contains(const std::vector<int> &ids, int id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); }

const std::vector<testing_pool::PoolChart> &pool() {
    static const auto p = testing_pool::chart_pool(5000, 70000);
    return p;
}

} // namespace

TEST(QaTemplates, NinetyWithStableIds) {
    ASSERT_EQ(qa_templates().size(), 90u);
    for (std::size_t i = 0; i < 90; ++i) {
        EXPECT_EQ(qa_templates()[i].id, static_cast<int>(i + 1));
        EXPECT_FALSE(qa_templates()[i].patterns.empty());
    }
    const auto cat = qa_catalog_json();
    ASSERT_EQ(cat.size(), 90u);
    EXPECT_EQ(cat[0]["id"], "T01");
    EXPECT_EQ(cat[89]["id"], "T90");
    EXPECT_EQ(cat[19]["slots"][0]["type"], "n");
}

TEST(QaTemplates, AnswerExamples) {
    auto f = chart_facts(simple_chart(ChartType::simple_bar, {3, 7, 5}));
    EXPECT_EQ(answer_template(f, binding(24)), "15");

    f = chart_facts(simple_chart(ChartType::simple_bar, {2, 4, 4, 8}));
    EXPECT_EQ(answer_template(f, binding(25, {{"legend1", "Value"}}, 1)), "4");
    EXPECT_EQ(answer_template(f, binding(25, {{"legend1", "Value"}}, 0)), "4");

    f = chart_facts(simple_chart(ChartType::simple_bar, {10, 20, 30, 40}));
    EXPECT_EQ(answer_template(f, binding(20, {{"n", "2"}})), "25");
    EXPECT_EQ(answer_template(f, binding(28, {{"legend1", "Value"}, {"value", "50"}})), std::nullopt);
    EXPECT_EQ(answer_template(f, binding(28, {{"legend1", "Value"}, {"value", "30"}})), "L1 and L2");
    EXPECT_EQ(answer_template(f, binding(84)), "No");
    EXPECT_EQ(answer_template(f, binding(49)), "0.5");
}

TEST(QaTemplates, TieAndModeConventions) {
    auto f = chart_facts(simple_chart(ChartType::simple_bar, {5, 9, 1, 9, 1}));
    EXPECT_EQ(answer_template(f, binding(9)), "L2");
    EXPECT_EQ(answer_template(f, binding(11)), "L4");
    EXPECT_EQ(answer_template(f, binding(10)), "L3");
    EXPECT_EQ(answer_template(f, binding(12)), "L5");
    EXPECT_EQ(answer_template(f, binding(38, {{"legend1", "Value"}})), "L3");
    // 9 and 1 both appear twice: the smaller wins
    EXPECT_EQ(answer_template(f, binding(25, {{"legend1", "Value"}}, 1)), "1");
    EXPECT_EQ(answer_template(f, binding(72, {{"color1", f.colors[0]}})), "4");

    f = chart_facts(simple_chart(ChartType::simple_bar, {1, 2, 3}));
    EXPECT_EQ(answer_template(f, binding(25, {{"legend1", "Value"}}, 1)), std::nullopt);
    EXPECT_EQ(answer_template(f, binding(19, {{"x1", "L1"}, {"x2", "L3"}})), "L3");
}

TEST(QaApplicability, KnownExamples) {
    auto pie = enumerate_applicable(simple_chart(ChartType::pie, {10, 20, 30}));
    EXPECT_TRUE(contains(pie, 44));
    EXPECT_TRUE(contains(pie, 45));
    for (int id = 1; id <= 12; ++id)
        EXPECT_FALSE(contains(pie, id)) << id;

    auto two = enumerate_applicable(simple_chart(ChartType::simple_bar, {1, 2}));
    EXPECT_FALSE(contains(two, 25));
    EXPECT_FALSE(contains(two, 44));

    auto grouped = enumerate_applicable(render(testing_pool::random_spec(3, ChartType::grouped_bar)));
    EXPECT_TRUE(contains(grouped, 17));
    EXPECT_TRUE(contains(grouped, 1));
    EXPECT_FALSE(contains(grouped, 90));
}

TEST(QaApplicability, EveryTemplateReachable) {
    std::vector<int> hits(91, 0);
    for (const auto &p : pool())
        for (int id : enumerate_applicable(p.chart))
            ++hits[static_cast<std::size_t>(id)];
    for (int id = 1; id <= 90; ++id)
        EXPECT_GT(hits[static_cast<std::size_t>(id)], 0) << template_label(id);
}

// Each template against the brute-force evaluator on 200 charts where a
// binding exists. Positional templates compare bbox-ordered answers with
// table-ordered ones.
TEST(QaOracle, EveryTemplateMatchesBruteForce) {
    for (const auto &t : qa_templates()) {
        int checked = 0;
        for (std::size_t i = 0; i < pool().size() && checked < 200; ++i) {
            const auto &p = pool()[i];
            const auto facts = chart_facts(p.chart);
            if (!t.applies(facts))
                continue;
            auto b = bind_slots(t, facts, mix_seed(i, static_cast<std::uint64_t>(t.id)));
            if (!b)
                continue;
            const auto got = answer_template(facts, *b);
            const auto want = oracle::answer(oracle::Chart(p.spec.table, p.spec.chart_type, p.spec.style.palette), *b);
            ASSERT_EQ(got, want) << template_label(t.id) << " chart " << i << " question "
                                 << render_question(facts, *b);
            ++checked;
        }
        EXPECT_EQ(checked, 200) << template_label(t.id);
    }
}

TEST(QaGenerate, SlotValuesComeFromTheChart) {
    for (std::size_t i = 0; i < 400; ++i) {
        const auto &p = pool()[i];
        const auto f = chart_facts(p.chart);
        for (const auto &item : sample_qa(f, 15, i)) {
            for (const auto &[key, value] : item.binding.slots) {
                if (starts_with(key, "color")) {
                    EXPECT_NE(std::find(f.colors.begin(), f.colors.end(), value), f.colors.end());
                } else if (starts_with(key, "legend")) {
                    const auto &names = f.legend_names();
                    EXPECT_NE(std::find(names.begin(), names.end(), value), names.end());
                } else if (starts_with(key, "x")) {
                    EXPECT_NE(std::find(f.xs.begin(), f.xs.end(), value), f.xs.end());
                } else if (key == "value") {
                    const double v = std::stod(value);
                    const double lo = f.pie() ? 0.0 : p.chart.axis_min;
                    const double hi = f.pie() ? *std::max_element(f.v[0].begin(), f.v[0].end()) : p.chart.axis_max;
                    EXPECT_GE(v, lo) << item.question;
                    EXPECT_LE(v, hi) << item.question;
                } else {
                    EXPECT_EQ(key, "n");
                }
            }
        }
    }
}

TEST(QaGenerate, DeterministicDistinctAndTokenised) {
    const auto &chart = pool()[1].chart;
    const auto a = generate_qa(chart, 25, 9, "c1.svg");
    const auto b = generate_qa(chart, 25, 9, "c1.svg");
    ASSERT_EQ(a, b);
    EXPECT_EQ(a.size(), 25u);
    std::set<std::string> prompts;
    for (const auto &r : a) {
        EXPECT_TRUE(starts_with(r.prompt, "<answer_question> "));
        EXPECT_EQ(r.kind, TaskKind::qa_reasoning);
        EXPECT_EQ(r.image, "c1.svg");
        EXPECT_TRUE(prompts.insert(r.prompt).second);
    }
    EXPECT_NE(generate_qa(chart, 25, 10), generate_qa(chart, 25, 9));
}

TEST(QaGenerate, ExhaustsGracefully) {
    EXPECT_TRUE(generate_qa(pool()[0].chart, 0, 1).empty());
    const auto many = generate_qa(simple_chart(ChartType::pie, {1, 2}), 10000, 1);
    EXPECT_LT(many.size(), 10000u);
    EXPECT_GT(many.size(), 5u);
}
