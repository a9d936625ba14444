#include "chart_pool.hpp"
#include "flatten_oracle.hpp"
#include "qa_oracle.hpp"

#include "chartforge/corpus.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>

using namespace chartforge;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path scratch(const std::string &name) {
    auto d = fs::temp_directory_path() / ("chartforge_acceptance_" + name);
    fs::remove_all(d);
    return d;
}

std::string sha256_hex(const std::string &data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

double relative_error(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-9); }

// Labeled synthesize -> extract over the on-disk corpus.
Outcome labeled_round_trip() {
    const auto dir = scratch("c1");
    PipelineConfig cfg;
    cfg.out_dir = dir;
    cfg.seed = 101;
    cfg.chart_count = 500;
    cfg.style_overrides = {{"show_data_labels", true}};
    synthesize(cfg);
    std::size_t equal = 0, total = 0;
    std::string first_bad;
    for (const auto &e : load_manifest(dir)) {
        ++total;
        try {
            const auto res = extract_chart(read_text_file(dir / e.svg));
            if (same_display(res.table, chart_view(load_source_table(dir, e))))
                ++equal;
            else if (first_bad.empty())
                first_bad = e.id;
        } catch (const Error &err) {
            if (first_bad.empty())
                first_bad = e.id + " (" + err.what() + ")";
        }
    }
    fs::remove_all(dir);
    return {equal == total && total == 500,
            std::to_string(equal) + "/" + std::to_string(total) + " tables equal cell-for-cell" +
                (first_bad.empty() ? "" : ", first mismatch " + first_bad)};
}

// Unlabeled bars and lines: values come from the fitted axis.
Outcome unlabeled_scale_recovery() {
    const auto dir = scratch("c2");
    PipelineConfig cfg;
    cfg.out_dir = dir;
    cfg.seed = 202;
    cfg.chart_count = 500;
    cfg.weights = parse_weights({{"bar", 1}, {"line", 1}});
    cfg.style_overrides = {{"show_data_labels", false}};
    synthesize(cfg);
    std::size_t values = 0, within = 0, nonlinear = 0, other_errors = 0, shape = 0;
    for (const auto &e : load_manifest(dir)) {
        const auto truth = chart_view(load_source_table(dir, e));
        try {
            const auto res = extract_chart(read_text_file(dir / e.svg));
            if (res.table.row_count() != truth.row_count() || res.table.column_count() != truth.column_count()) {
                ++shape;
                continue;
            }
            for (std::size_t r = 0; r < truth.row_count(); ++r)
                for (std::size_t c = 0; c < truth.column_count(); ++c) {
                    if (truth.column(c).kind != ColumnKind::numeric)
                        continue;
                    ++values;
                    if (relative_error(res.table.number(r, c), truth.number(r, c)) <= 0.02)
                        ++within;
                }
        } catch (const Error &err) {
            ++(err.kind() == ErrorKind::NonLinearAxis ? nonlinear : other_errors);
        }
    }
    fs::remove_all(dir);
    const double share = values ? static_cast<double>(within) / static_cast<double>(values) : 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", share * 100);
    return {share >= 0.99 && nonlinear == 0 && other_errors == 0 && shape == 0,
            std::string(buf) + "% of " + std::to_string(values) + " values within 2%, " + std::to_string(nonlinear) +
                " NonLinearAxis, " + std::to_string(other_errors) + " other errors, " + std::to_string(shape) +
                " shape mismatches"};
}

Outcome template_oracle_equivalence() {
    const auto pool = testing_pool::chart_pool(5000, 70000);
    std::size_t compared = 0, agreed = 0, short_templates = 0;
    std::string first_bad;
    for (const auto &t : qa_templates()) {
        int checked = 0;
        for (std::size_t i = 0; i < pool.size() && checked < 200; ++i) {
            const auto facts = chart_facts(pool[i].chart);
            if (!t.applies(facts))
                continue;
            auto b = bind_slots(t, facts, mix_seed(i, static_cast<std::uint64_t>(t.id)));
            if (!b)
                continue;
            const auto got = answer_template(facts, *b);
            const auto want =
                oracle::answer(oracle::Chart(pool[i].spec.table, pool[i].spec.chart_type, pool[i].spec.style.palette), *b);
            ++compared;
            if (got == want)
                ++agreed;
            else if (first_bad.empty())
                first_bad = template_label(t.id) + " on chart " + std::to_string(i);
            ++checked;
        }
        if (checked < 200)
            ++short_templates;
    }
    return {agreed == compared && compared == 90 * 200 && short_templates == 0,
            std::to_string(agreed) + "/" + std::to_string(compared) + " answers agree over 90 templates" +
                (short_templates ? ", " + std::to_string(short_templates) + " templates below 200 charts" : "") +
                (first_bad.empty() ? "" : ", first disagreement " + first_bad)};
}

/// round(h / plot_h, 2) on the integer milli-pixel geometry, half away from zero.
std::string two_decimal_fraction(double h, double plot_h) {
    const long long H = std::llround(h * 1000), P = std::llround(plot_h * 1000);
    const long long hundredths = (200 * H + P) / (2 * P);
    std::string s = std::to_string(hundredths / 100);
    const long long frac = hundredths % 100;
    if (frac != 0) {
        s += '.';
        s += static_cast<char>('0' + frac / 10);
        if (frac % 10)
            s += static_cast<char>('0' + frac % 10);
    }
    return s;
}

Outcome value_estimation_fidelity() {
    std::size_t bars = 0, equal = 0;
    std::string first_bad;
    for (std::uint64_t seed = 0; bars < 1000; ++seed) {
        const auto type = seed % 2 ? ChartType::simple_bar : ChartType::grouped_bar;
        const auto chart = render(testing_pool::random_spec(mix_seed(seed, 0xC4), type, seed % 3 == 0));
        const auto grid = parse_flattened(value_estimation_target(chart));
        for (std::size_t s = 0; s < chart.legend.size(); ++s) {
            std::vector<const MarkRecord *> row;
            for (const auto &m : chart.marks)
                if (m.series == chart.legend[s].series)
                    row.push_back(&m);
            std::sort(row.begin(), row.end(), [](auto *a, auto *b) { return a->bbox.x < b->bbox.x; });
            for (std::size_t i = 0; i < row.size() && bars < 1000; ++i) {
                ++bars;
                const auto want = two_decimal_fraction(row[i]->bbox.h, chart.plot_area.h);
                if (s < grid.size() && i < grid[s].size() && grid[s][i] == want)
                    ++equal;
                else if (first_bad.empty())
                    first_bad = "seed " + std::to_string(seed) + " want " + want;
            }
        }
    }
    return {equal == bars, std::to_string(equal) + "/" + std::to_string(bars) + " bar fractions exact" +
                               (first_bad.empty() ? "" : ", first mismatch " + first_bad)};
}

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

Outcome metric_identities() {
    std::size_t identity_ok = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto t = chart_view(random_chart_table(mix_seed(seed, 0x5A), kAllChartTypes[seed % kAllChartTypes.size()]));
        identity_ok += rnss(t, t) == 1.0 && rms_f1(t, t).f1 == 1.0;
    }
    Rng rng(0xF022);
    std::size_t fuzz_ok = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(6);
        std::vector<std::vector<double>> cost(n, std::vector<double>(n));
        for (auto &row : cost)
            for (auto &c : row)
                c = rng.chance(0.2) ? 1.0 : rng.unit();
        fuzz_ok += std::abs(assignment_cost(cost) - exhaustive_min(cost)) <= 1e-12;
    }
    const std::vector<int> boundary = {relaxed_accuracy("104.9", "100"), relaxed_accuracy("105", "100"),
                                       relaxed_accuracy("105.1", "100"), relaxed_accuracy("95.1", "100"),
                                       relaxed_accuracy("95", "100"),    relaxed_accuracy("94.9", "100")};
    const std::vector<int> expected = {1, 1, 0, 1, 1, 0};
    return {identity_ok == 200 && fuzz_ok == 1000 && boundary == expected,
            std::to_string(identity_ok) + "/200 identities, " + std::to_string(fuzz_ok) +
                "/1000 assignments optimal, RA boundary " + (boundary == expected ? "{1,1,0}" : "wrong")};
}

Outcome flatten_round_trip() {
    std::size_t ok = 0, with_specials = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto t = flatten_oracle::random_nasty_table(mix_seed(seed, 0xF1A7));
        const auto flat = flatten_table(t);
        with_specials += flat.find('\\') != std::string::npos;
        try {
            ok += flatten_oracle::unflatten(flat, t.columns()) == t;
        } catch (const std::exception &) {
        }
    }
    return {ok == 1000, std::to_string(ok) + "/1000 tables restored, " + std::to_string(with_specials) +
                            " containing escaped separators or backslashes"};
}

std::map<std::string, std::string> pipeline_hashes(const fs::path &dir) {
    PipelineConfig cfg;
    cfg.out_dir = dir;
    cfg.seed = 707;
    cfg.chart_count = 120;
    cfg.workers = 2;
    synthesize(cfg);
    OfflineTransport transport;
    distill_corpus(dir, {}, transport);
    const auto tasks = gen_tasks(dir, cfg);
    std::map<std::string, std::string> out;
    out["manifest.jsonl"] = sha256_hex(read_text_file(dir / kManifestFile));
    out["summaries.jsonl"] = sha256_hex(read_text_file(dir / kSummariesFile));
    for (const auto &[kind, path] : tasks.files)
        out["tasks/" + path.filename().string()] = sha256_hex(read_text_file(path));
    return out;
}

Outcome determinism() {
    const auto a = scratch("c7a"), b = scratch("c7b");
    const auto ha = pipeline_hashes(a), hb = pipeline_hashes(b);
    fs::remove_all(a);
    fs::remove_all(b);
    return {ha == hb && ha.size() >= 6, std::to_string(ha.size()) + " files hashed, " +
                                            (ha == hb ? "all SHA-256 digests equal" : "digests differ") +
                                            ", manifest " + ha.at("manifest.jsonl").substr(0, 12)};
}

Outcome corpus_shape_targets() {
    const auto dir = scratch("c8");
    PipelineConfig cfg;
    cfg.out_dir = dir;
    cfg.seed = 808;
    cfg.chart_count = 1000;
    cfg.task_counts = {{TaskKind::table, 1},
                       {TaskKind::value_estimation, 1},
                       {TaskKind::qa_reasoning, 2},
                       {TaskKind::qa_open, 0},
                       {TaskKind::summary, 0}};
    synthesize(cfg);
    const auto stats = corpus_stats(dir);
    double total_w = 0, worst = 0;
    for (double w : cfg.weights)
        total_w += w;
    std::string per_type;
    for (auto t : kAllChartTypes) {
        const double want = 100.0 * cfg.weights[type_index(t)] / total_w;
        worst = std::max(worst, std::abs(stats.percent(t) - want));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s %.1f/%.1f", std::string(to_string(t)).c_str(), stats.percent(t), want);
        per_type += (per_type.empty() ? "" : ", ") + std::string(buf);
    }
    const auto table = task_count_table(gen_tasks(dir, cfg));
    const auto header = table.substr(0, table.find('\n'));
    fs::remove_all(dir);
    const bool columns = header == "| table | value_estimation | qa_reasoning | qa_open | summary |";
    char buf[48];
    std::snprintf(buf, sizeof buf, "max deviation %.2f points", worst);
    return {worst <= 3.0 && stats.charts == 1000 && columns,
            std::string(buf) + " (" + per_type + "), task table columns " + (columns ? "match" : "differ")};
}

Outcome offline_distillation() {
    const auto dir = scratch("c9");
    PipelineConfig cfg;
    cfg.out_dir = dir;
    cfg.seed = 909;
    cfg.chart_count = 300;
    synthesize(cfg);
    OfflineTransport transport;
    const auto result = distill_corpus(dir, {}, transport);
    std::size_t clean = 0;
    std::string first_bad;
    for (const auto &e : load_manifest(dir)) {
        auto it = result.summaries.find(e.id);
        if (it == result.summaries.end())
            continue;
        const auto bad = unsupported_numbers(it->second, chart_view(load_source_table(dir, e)), e.title);
        if (bad.empty())
            ++clean;
        else if (first_bad.empty())
            first_bad = e.id;
    }
    fs::remove_all(dir);
    return {transport.calls() == 0 && result.summaries.size() == 300 && result.failures.empty() && clean == 300,
            std::to_string(result.summaries.size()) + " summaries, " + std::to_string(transport.calls()) +
                " network calls, " + std::to_string(clean) + " with every number in the source table" +
                (first_bad.empty() ? "" : ", first unsupported " + first_bad)};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> run;
        double limit_s;
    };
    const std::vector<Criterion> criteria = {
        {1, "labeled round trip", labeled_round_trip, 60},
        {2, "unlabeled scale recovery", unlabeled_scale_recovery, 90},
        {3, "template oracle equivalence", template_oracle_equivalence, 0},
        {4, "value-estimation fidelity", value_estimation_fidelity, 0},
        {5, "metric identities and oracles", metric_identities, 0},
        {6, "flattening round trip", flatten_round_trip, 0},
        {7, "pipeline determinism", determinism, 0},
        {8, "corpus shape targets", corpus_shape_targets, 0},
        {9, "offline distillation", offline_distillation, 0},
    };
    int failures = 0;
    for (const auto &c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("threw ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_s > 0 && secs >= c.limit_s) {
            o.pass = false;
            o.detail += ", over the time limit";
        }
        failures += !o.pass;
        std::printf("criterion %d %s: %s - %s (%.1f s)\n", c.id, c.name.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
