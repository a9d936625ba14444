#pragma once

#include "chartforge/backend.hpp"
#include "chartforge/metrics.hpp"
#include "chartforge/qa.hpp"
#include "chartforge/render.hpp"
#include "chartforge/sample.hpp"
#include "chartforge/svg_extract.hpp"
#include "chartforge/tasks.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace chartforge {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_text_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json_file(const fs::path &path) {
    auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorKind::IoError, path.string() + " is not valid JSON");
    return j;
}

inline std::vector<nlohmann::json> read_jsonl(const fs::path &path) {
    std::vector<nlohmann::json> out;
    std::istringstream in(read_text_file(path));
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (trim(line).empty())
            continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(ErrorKind::IoError, path.string() + ":" + std::to_string(n) + " is not valid JSON");
        out.push_back(std::move(j));
    }
    return out;
}

/// Runs `job(i)` for i in [0, n) on up to `workers` threads.
template <class Job> void parallel_for(std::size_t n, std::size_t workers, Job job) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure)
                        failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Pipeline configuration

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::size_t chart_count = 100;
    ChartTypeWeights weights = kDefaultChartTypeWeights;
    /// Per-chart caps. table and value_estimation yield at most one record per chart.
    std::map<TaskKind, std::size_t> task_counts = {{TaskKind::table, 1},
                                                   {TaskKind::value_estimation, 1},
                                                   {TaskKind::qa_reasoning, 10},
                                                   {TaskKind::qa_open, 5},
                                                   {TaskKind::summary, 1}};
    nlohmann::json style_overrides = nlohmann::json::object();
    int width = 800;
    int height = 600;
    fs::path out_dir = "corpus";
    std::optional<fs::path> backend_config;
    std::size_t workers = 1;
};

inline ChartTypeWeights parse_weights(const nlohmann::json &j) {
    if (!j.is_object())
        throw Error(ErrorKind::InvalidConfig, "chart_type_weights must be an object");
    ChartTypeWeights w{};
    for (const auto &[key, value] : j.items()) {
        if (!value.is_number())
            throw Error(ErrorKind::InvalidConfig, "weight for '" + key + "' must be a number");
        const double v = value.get<double>();
        if (!(v >= 0))
            throw Error(ErrorKind::InvalidConfig, "weight for '" + key + "' is negative");
        if (key == "bar") {
            w[type_index(ChartType::simple_bar)] += v / 2;
            w[type_index(ChartType::grouped_bar)] += v / 2;
        } else if (key == "line") {
            w[type_index(ChartType::line_single)] += v / 2;
            w[type_index(ChartType::line_multi)] += v / 2;
        } else if (auto t = parse_chart_type(key)) {
            w[type_index(*t)] += v;
        } else {
            throw Error(ErrorKind::InvalidConfig, "unknown chart type '" + key + "'");
        }
    }
    double total = 0;
    for (double v : w)
        total += v;
    if (!(total > 0))
        throw Error(ErrorKind::InvalidConfig, "chart_type_weights must sum to more than 0");
    return w;
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json &j) {
    auto bad = [](const std::string &m) { return Error(ErrorKind::InvalidConfig, m); };
    if (!j.is_object())
        throw bad("config must be a JSON object");
    static const std::set<std::string> known = {"seed",   "chart_count", "chart_type_weights", "task_counts",
                                                "style",  "width",       "height",             "out_dir",
                                                "backend_config", "workers"};
    for (const auto &[key, _] : j.items())
        if (!known.count(key))
            throw bad("unknown config key '" + key + "'");
    auto count = [&](const nlohmann::json &v, const std::string &what) -> std::size_t {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw bad(what + " must be a non-negative integer");
        return static_cast<std::size_t>(v.get<long long>());
    };
    PipelineConfig c;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer())
            throw bad("seed must be an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("chart_count"))
        c.chart_count = count(j["chart_count"], "chart_count");
    if (j.contains("chart_type_weights"))
        c.weights = parse_weights(j["chart_type_weights"]);
    if (j.contains("task_counts")) {
        if (!j["task_counts"].is_object())
            throw bad("task_counts must be an object");
        for (const auto &[key, value] : j["task_counts"].items()) {
            auto kind = parse_task_kind(key);
            if (!kind)
                throw bad("unknown task kind '" + key + "'");
            c.task_counts[*kind] = count(value, "task count for " + key);
        }
    }
    if (j.contains("style")) {
        if (!j["style"].is_object())
            throw bad("style must be an object");
        c.style_overrides = j["style"];
        try {
            validate(style_from_json(j["style"]));
        } catch (const Error &e) {
            throw bad(std::string("style: ") + e.what());
        }
    }
    if (j.contains("width"))
        c.width = static_cast<int>(count(j["width"], "width"));
    if (j.contains("height"))
        c.height = static_cast<int>(count(j["height"], "height"));
    if (j.contains("out_dir"))
        c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("backend_config"))
        c.backend_config = j["backend_config"].get<std::string>();
    if (j.contains("workers"))
        c.workers = std::max<std::size_t>(1, count(j["workers"], "workers"));
    return c;
}

/// The fields that decide corpus content. Paths and worker counts are left out.
inline nlohmann::ordered_json corpus_identity(const PipelineConfig &c) {
    nlohmann::ordered_json w = nlohmann::ordered_json::object();
    for (auto t : kAllChartTypes)
        w[std::string(to_string(t))] = c.weights[type_index(t)];
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["chart_count"] = c.chart_count;
    j["chart_type_weights"] = w;
    j["style"] = c.style_overrides;
    j["width"] = c.width;
    j["height"] = c.height;
    return j;
}

// ---------------------------------------------------------------------------
// Source tables

inline nlohmann::ordered_json to_json(const ChartReadyTable &t) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto &c : t.base.columns()) {
        nlohmann::ordered_json jc;
        jc["name"] = c.name;
        jc["kind"] = to_string(c.kind);
        jc["unit"] = c.unit ? nlohmann::ordered_json(*c.unit) : nlohmann::ordered_json();
        cols.push_back(std::move(jc));
    }
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto &row : t.base.rows()) {
        nlohmann::ordered_json jr = nlohmann::ordered_json::array();
        for (const auto &cell : row) {
            if (auto *d = std::get_if<double>(&cell))
                jr.push_back(*d);
            else
                jr.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(jr));
    }
    nlohmann::ordered_json j;
    j["columns"] = cols;
    j["rows"] = rows;
    j["x_column"] = t.x_column;
    j["group_column"] = t.group_column ? nlohmann::ordered_json(*t.group_column) : nlohmann::ordered_json();
    j["y_column"] = t.y_column;
    return j;
}

inline ChartReadyTable chart_table_from_json(const nlohmann::json &j) {
    try {
        std::vector<Column> cols;
        for (const auto &c : j.at("columns")) {
            Column col{c.at("name").get<std::string>(),
                       c.at("kind").get<std::string>() == "numeric" ? ColumnKind::numeric : ColumnKind::categorical,
                       std::nullopt};
            if (c.contains("unit") && c["unit"].is_string())
                col.unit = c["unit"].get<std::string>();
            cols.push_back(std::move(col));
        }
        std::vector<std::vector<Cell>> rows;
        for (const auto &r : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto &cell : r)
                row.push_back(cell.is_number() ? Cell(cell.get<double>()) : Cell(cell.get<std::string>()));
            rows.push_back(std::move(row));
        }
        std::optional<std::size_t> group;
        if (!j.at("group_column").is_null())
            group = j["group_column"].get<std::size_t>();
        return make_chart_ready(DataTable(std::move(cols), std::move(rows)), j.at("x_column").get<std::size_t>(),
                                group, j.at("y_column").get<std::size_t>());
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::InvalidTable, std::string("bad source table: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Synthesis

struct ManifestEntry {
    std::string id;
    ChartType chart_type = ChartType::simple_bar;
    std::string svg, sidecar, table;
    int width = 0, height = 0;
    std::string title;
    std::string palette;
    bool data_labels = false;

    friend bool operator==(const ManifestEntry &, const ManifestEntry &) = default;
};

inline nlohmann::ordered_json to_json(const ManifestEntry &e) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["chart_type"] = to_string(e.chart_type);
    j["svg"] = e.svg;
    j["sidecar"] = e.sidecar;
    j["table"] = e.table;
    j["canvas"] = {e.width, e.height};
    j["title"] = e.title;
    j["palette"] = e.palette;
    j["data_labels"] = e.data_labels;
    return j;
}

inline ManifestEntry manifest_entry_from_json(const nlohmann::json &j) {
    try {
        ManifestEntry e;
        e.id = j.at("id").get<std::string>();
        auto t = parse_chart_type(j.at("chart_type").get<std::string>());
        if (!t)
            throw Error(ErrorKind::IoError, "unknown chart type in manifest entry " + e.id);
        e.chart_type = *t;
        e.svg = j.at("svg").get<std::string>();
        e.sidecar = j.at("sidecar").get<std::string>();
        e.table = j.at("table").get<std::string>();
        e.width = j.at("canvas").at(0).get<int>();
        e.height = j.at("canvas").at(1).get<int>();
        e.title = j.value("title", std::string());
        e.palette = j.value("palette", std::string());
        e.data_labels = j.value("data_labels", false);
        return e;
    } catch (const nlohmann::json::exception &ex) {
        throw Error(ErrorKind::IoError, std::string("bad manifest entry: ") + ex.what());
    }
}

inline constexpr std::string_view kManifestFile = "manifest.jsonl";
inline constexpr std::string_view kCorpusConfigFile = "corpus.json";
inline constexpr std::string_view kSummariesFile = "summaries.jsonl";
inline constexpr std::string_view kOpenQaFile = "open_qa.jsonl";

inline std::string chart_id(std::size_t index) {
    std::ostringstream ss;
    ss << "chart_" << std::setw(6) << std::setfill('0') << index;
    return ss.str();
}

/// Chart type of every chart in a corpus of `count`. Systematic sampling over
/// the cumulative weights fixes how many charts each type gets, so the mix
/// tracks the weights at any size; a seeded shuffle then spreads the types.
inline std::vector<ChartType> chart_type_plan(const ChartTypeWeights &w, std::size_t count, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x71A9));
    double total = 0;
    for (double v : w)
        total += v;
    const double offset = rng.unit();
    std::vector<ChartType> plan;
    plan.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        double p = (static_cast<double>(k) + offset) / static_cast<double>(count) * total;
        ChartType pick = ChartType::simple_bar;
        for (auto t : kAllChartTypes) {
            if (w[type_index(t)] <= 0)
                continue;
            pick = t;
            if (p < w[type_index(t)])
                break;
            p -= w[type_index(t)];
        }
        plan.push_back(pick);
    }
    rng.shuffle(plan.begin(), plan.end());
    return plan;
}

/// Everything about chart `index` besides its type follows from (config seed, index).
inline ChartSpec chart_spec_for(const PipelineConfig &cfg, std::size_t index, ChartType type) {
    const auto s = mix_seed(cfg.seed, index);
    ChartSpec spec;
    spec.chart_type = type;
    spec.table = random_chart_table(s, spec.chart_type);
    spec.style = diversify_style(s);
    if (!cfg.style_overrides.empty()) {
        auto j = to_json(spec.style);
        j.merge_patch(cfg.style_overrides);
        spec.style = style_from_json(j);
    }
    spec.width = cfg.width;
    spec.height = cfg.height;
    return spec;
}

inline std::vector<ManifestEntry> load_manifest(const fs::path &corpus_dir) {
    const auto path = corpus_dir / kManifestFile;
    if (!fs::exists(path))
        throw Error(ErrorKind::IoError, "no manifest at " + path.string());
    std::vector<ManifestEntry> out;
    for (const auto &j : read_jsonl(path))
        out.push_back(manifest_entry_from_json(j));
    return out;
}

inline std::string manifest_text(const std::vector<ManifestEntry> &entries) {
    std::string out;
    for (const auto &e : entries)
        out += to_json(e).dump() + "\n";
    return out;
}

struct SynthesizeResult {
    std::vector<ManifestEntry> entries;
    std::size_t generated = 0;
    std::size_t skipped = 0;
};

/// Writes charts/<id>.svg, .json (sidecar) and .table.json (source table) per
/// chart plus a manifest sorted by id. Charts already on disk and in the
/// manifest are kept.
inline SynthesizeResult synthesize(const PipelineConfig &cfg) {
    const auto &dir = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(dir / "charts", ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot create " + (dir / "charts").string() + ": " + ec.message());

    const auto identity = corpus_identity(cfg).dump(2) + "\n";
    const auto config_path = dir / kCorpusConfigFile;
    std::map<std::string, ManifestEntry> existing;
    if (fs::exists(config_path)) {
        if (read_text_file(config_path) != identity)
            throw Error(ErrorKind::InvalidConfig,
                        dir.string() + " holds a corpus built from a different configuration");
        if (fs::exists(dir / kManifestFile))
            for (auto &e : load_manifest(dir))
                existing.emplace(e.id, std::move(e));
    }
    write_file_atomic(config_path, identity);

    SynthesizeResult res;
    const auto plan = chart_type_plan(cfg.weights, cfg.chart_count, cfg.seed);
    res.entries.resize(cfg.chart_count);
    std::vector<char> reused(cfg.chart_count, 0);
    parallel_for(cfg.chart_count, cfg.workers, [&](std::size_t i) {
        const auto id = chart_id(i);
        auto it = existing.find(id);
        if (it != existing.end() && fs::exists(dir / it->second.svg) && fs::exists(dir / it->second.sidecar) &&
            fs::exists(dir / it->second.table)) {
            res.entries[i] = it->second;
            reused[i] = 1;
            return;
        }
        const auto spec = chart_spec_for(cfg, i, plan[i]);
        const auto chart = render(spec);
        ManifestEntry e;
        e.id = id;
        e.chart_type = spec.chart_type;
        e.svg = "charts/" + id + ".svg";
        e.sidecar = "charts/" + id + ".json";
        e.table = "charts/" + id + ".table.json";
        e.width = chart.width;
        e.height = chart.height;
        e.title = chart.title;
        e.palette = chart.palette;
        e.data_labels = chart.show_data_labels;
        write_file_atomic(dir / e.svg, chart.svg);
        write_file_atomic(dir / e.sidecar, to_json(chart).dump() + "\n");
        write_file_atomic(dir / e.table, to_json(spec.table).dump() + "\n");
        res.entries[i] = std::move(e);
    });
    for (char r : reused)
        (r ? res.skipped : res.generated) += 1;
    write_file_atomic(dir / kManifestFile, manifest_text(res.entries));
    return res;
}

inline ChartReadyTable load_source_table(const fs::path &corpus_dir, const ManifestEntry &e) {
    return chart_table_from_json(read_json_file(corpus_dir / e.table));
}

inline RenderedChart load_sidecar(const fs::path &corpus_dir, const ManifestEntry &e) {
    return rendered_from_json(read_json_file(corpus_dir / e.sidecar));
}

// ---------------------------------------------------------------------------
// Extraction

struct ExtractSummary {
    std::size_t processed = 0, exact = 0, recovered = 0, failed = 0;
    std::vector<std::pair<std::string, std::string>> failures; ///< file, "Kind: message"
};

inline std::string summary_line(const ExtractSummary &s) {
    return std::to_string(s.processed) + " processed: " + std::to_string(s.exact) + " exact, " +
           std::to_string(s.recovered) + " recovered, " + std::to_string(s.failed) + " failed";
}

/// Extracts every *.svg under `svg_dir` (recursively, sorted by path). When
/// `out_dir` is set each result is written to <out_dir>/<stem>.json.
inline ExtractSummary extract_directory(const fs::path &svg_dir, const std::optional<fs::path> &out_dir,
                                        const SelectorProfile &profile = {}, std::size_t workers = 1) {
    if (!fs::is_directory(svg_dir))
        throw Error(ErrorKind::IoError, svg_dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto &f : fs::recursive_directory_iterator(svg_dir))
        if (f.is_regular_file() && f.path().extension() == ".svg")
            files.push_back(f.path());
    std::sort(files.begin(), files.end());
    if (out_dir)
        fs::create_directories(*out_dir);

    std::vector<std::optional<Confidence>> outcome(files.size());
    std::vector<std::string> errors(files.size());
    parallel_for(files.size(), workers, [&](std::size_t i) {
        try {
            const auto r = extract_chart(read_text_file(files[i]), profile);
            outcome[i] = r.confidence;
            if (out_dir)
                write_file_atomic(*out_dir / (files[i].stem().string() + ".json"), to_json(r).dump() + "\n");
        } catch (const Error &e) {
            errors[i] = e.what();
        }
    });
    ExtractSummary s;
    s.processed = files.size();
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!outcome[i]) {
            ++s.failed;
            s.failures.emplace_back(fs::relative(files[i], svg_dir).string(), errors[i]);
        } else {
            ++(*outcome[i] == Confidence::exact ? s.exact : s.recovered);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Task generation

using SummaryMap = std::map<std::string, std::vector<std::string>>;

/// JSONL of {"id", "summary"}; several lines may share an id.
inline SummaryMap load_summaries(const fs::path &path) {
    SummaryMap out;
    for (const auto &j : read_jsonl(path)) {
        if (!j.contains("id") || !j.contains("summary"))
            throw Error(ErrorKind::IoError, path.string() + ": summary lines need \"id\" and \"summary\"");
        out[j["id"].get<std::string>()].push_back(j["summary"].get<std::string>());
    }
    return out;
}

/// JSONL of {"id", "question", "answer"}.
inline std::vector<OpenQaPair> load_open_qa(const fs::path &path) {
    std::vector<OpenQaPair> out;
    for (const auto &j : read_jsonl(path)) {
        if (!j.contains("id") || !j.contains("question") || !j.contains("answer"))
            throw Error(ErrorKind::IoError, path.string() + ": open QA lines need \"id\", \"question\", \"answer\"");
        out.push_back({j["id"].get<std::string>(), j["question"].get<std::string>(), j["answer"].get<std::string>()});
    }
    return out;
}

struct GenTasksOptions {
    std::optional<fs::path> summaries; ///< default: <corpus>/summaries.jsonl when present
    std::optional<fs::path> open_qa;   ///< default: <corpus>/open_qa.jsonl when present
    std::optional<fs::path> out_dir;   ///< default: <corpus>/tasks
};

struct GenTasksResult {
    std::map<TaskKind, std::vector<TaskRecord>> records;
    std::map<TaskKind, fs::path> files;
    std::vector<std::string> warnings;

    std::size_t count(TaskKind k) const {
        auto it = records.find(k);
        return it == records.end() ? 0 : it->second.size();
    }
};

inline std::string records_text(const std::vector<TaskRecord> &records) {
    std::string out;
    for (const auto &r : records)
        out += to_jsonl_line(r) + "\n";
    return out;
}

/// One JSONL file per task kind whose configured count is positive. Images
/// are SVG paths relative to the corpus directory.
inline GenTasksResult gen_tasks(const fs::path &corpus_dir, const PipelineConfig &cfg,
                                const GenTasksOptions &opts = {}) {
    const auto entries = load_manifest(corpus_dir);
    auto cap = [&](TaskKind k) {
        auto it = cfg.task_counts.find(k);
        return it == cfg.task_counts.end() ? std::size_t{0} : it->second;
    };
    GenTasksResult res;

    std::vector<std::vector<TaskRecord>> table(entries.size()), values(entries.size()), qa(entries.size());
    parallel_for(entries.size(), cfg.workers, [&](std::size_t i) {
        const auto &e = entries[i];
        if (cap(TaskKind::table) > 0)
            table[i].push_back(table_record(e.svg, chart_view(load_source_table(corpus_dir, e))));
        if (cap(TaskKind::value_estimation) == 0 && cap(TaskKind::qa_reasoning) == 0)
            return;
        const auto chart = load_sidecar(corpus_dir, e);
        if (cap(TaskKind::value_estimation) > 0 && chart.chart_type != ChartType::pie)
            values[i].push_back(value_estimation_record(e.svg, chart));
        if (cap(TaskKind::qa_reasoning) > 0)
            qa[i] = generate_qa(chart, cap(TaskKind::qa_reasoning), mix_seed(cfg.seed, mix_seed(i, 0x0A)), e.svg);
    });
    auto gather = [](std::vector<std::vector<TaskRecord>> &parts) {
        std::vector<TaskRecord> out;
        for (auto &p : parts)
            for (auto &r : p)
                out.push_back(std::move(r));
        return out;
    };
    if (cap(TaskKind::table) > 0)
        res.records[TaskKind::table] = gather(table);
    if (cap(TaskKind::value_estimation) > 0)
        res.records[TaskKind::value_estimation] = gather(values);
    if (cap(TaskKind::qa_reasoning) > 0)
        res.records[TaskKind::qa_reasoning] = gather(qa);

    std::map<std::string, std::string> image_of;
    std::vector<std::string> ids;
    for (const auto &e : entries) {
        image_of[e.id] = e.svg;
        ids.push_back(e.id);
    }
    const bool need_summaries = cap(TaskKind::summary) > 0 || cap(TaskKind::qa_open) > 0;
    SummaryMap summaries;
    if (need_summaries) {
        const auto path = opts.summaries.value_or(corpus_dir / kSummariesFile);
        if (fs::exists(path))
            summaries = load_summaries(path);
        else if (opts.summaries)
            throw Error(ErrorKind::IoError, "no summaries file at " + path.string());
        for (auto &[id, list] : summaries)
            if (list.size() > cap(TaskKind::summary) && cap(TaskKind::summary) > 0)
                list.resize(cap(TaskKind::summary));
    }
    auto relocate = [&](Assembly &a, TaskKind kind) {
        std::vector<TaskRecord> out;
        for (auto &r : a.records) {
            auto it = image_of.find(r.image);
            if (it == image_of.end()) {
                res.warnings.push_back(std::string(to_string(kind)) + ": unknown chart id " + r.image);
                continue;
            }
            r.image = it->second;
            out.push_back(std::move(r));
        }
        for (const auto &issue : a.issues)
            res.warnings.push_back(std::string(to_string(issue.kind)) + ": " + issue.message);
        return out;
    };
    if (cap(TaskKind::summary) > 0) {
        auto a = assemble_summary_records(ids, summaries);
        res.records[TaskKind::summary] = relocate(a, TaskKind::summary);
    }
    if (cap(TaskKind::qa_open) > 0) {
        std::vector<OpenQaPair> pairs;
        const auto path = opts.open_qa.value_or(corpus_dir / kOpenQaFile);
        if (fs::exists(path))
            pairs = load_open_qa(path);
        else if (opts.open_qa)
            throw Error(ErrorKind::IoError, "no open QA file at " + path.string());
        std::map<std::string, std::size_t> per_chart;
        std::vector<OpenQaPair> kept;
        for (auto &p : pairs)
            if (per_chart[p.chart_id]++ < cap(TaskKind::qa_open))
                kept.push_back(std::move(p));
        auto a = assemble_open_qa_records(kept, summaries);
        res.records[TaskKind::qa_open] = relocate(a, TaskKind::qa_open);
        for (const auto &id : ids)
            if (!per_chart.count(id) && !summaries.count(id))
                res.warnings.push_back("MissingSummary: no summary or open QA for chart " + id);
    }

    const auto out_dir = opts.out_dir.value_or(corpus_dir / "tasks");
    for (const auto &[kind, recs] : res.records) {
        const auto path = out_dir / (std::string(to_string(kind)) + ".jsonl");
        write_file_atomic(path, records_text(recs));
        res.files[kind] = path;
    }
    return res;
}

/// Per-kind counts with the five task columns, in a markdown grid.
inline std::string task_count_table(const GenTasksResult &r) {
    std::vector<std::string> head, row;
    for (auto k : kAllTaskKinds) {
        head.emplace_back(to_string(k));
        row.push_back(std::to_string(r.count(k)));
    }
    std::string out;
    auto line = [&](const std::vector<std::string> &cells) {
        out += "|";
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto w = std::max(head[i].size(), row[i].size());
            out += " " + cells[i] + std::string(w - cells[i].size(), ' ') + " |";
        }
        out += "\n";
    };
    line(head);
    out += "|";
    for (std::size_t i = 0; i < head.size(); ++i)
        out += std::string(std::max(head[i].size(), row[i].size()) + 2, '-') + "|";
    out += "\n";
    line(row);
    return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct TextStats {
    std::size_t documents = 0;
    std::size_t vocab = 0;
    double avg_chars = 0;
    double avg_tokens = 0;
    double avg_sentences = 0;
};

inline std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

/// Sentences are the non-blank pieces left after splitting on [.!?] followed by whitespace.
inline std::size_t sentence_count(std::string_view s) {
    static const std::regex boundary(R"([.!?]\s+)");
    const std::string text(trim(s));
    std::size_t n = 0;
    for (std::sregex_token_iterator it(text.begin(), text.end(), boundary, -1), end; it != end; ++it)
        if (!trim(it->str()).empty())
            ++n;
    return n;
}

inline TextStats text_stats(const std::vector<std::string> &docs) {
    TextStats s;
    s.documents = docs.size();
    if (docs.empty())
        return s;
    std::set<std::string> vocab;
    double chars = 0, tokens = 0, sentences = 0;
    for (const auto &d : docs) {
        const auto toks = whitespace_tokens(d);
        for (const auto &t : toks)
            vocab.insert(to_lower_ascii(t));
        chars += static_cast<double>(d.size());
        tokens += static_cast<double>(toks.size());
        sentences += static_cast<double>(sentence_count(d));
    }
    const double n = static_cast<double>(docs.size());
    s.vocab = vocab.size();
    s.avg_chars = chars / n;
    s.avg_tokens = tokens / n;
    s.avg_sentences = sentences / n;
    return s;
}

struct CorpusStats {
    std::size_t charts = 0;
    std::map<ChartType, std::size_t> type_counts;
    TextStats summaries;

    double percent(ChartType t) const {
        auto it = type_counts.find(t);
        if (charts == 0 || it == type_counts.end())
            return 0;
        return 100.0 * static_cast<double>(it->second) / static_cast<double>(charts);
    }
};

inline CorpusStats corpus_stats(const fs::path &corpus_dir, const std::optional<fs::path> &summaries = {}) {
    CorpusStats s;
    for (const auto &e : load_manifest(corpus_dir)) {
        ++s.charts;
        ++s.type_counts[e.chart_type];
    }
    const auto path = summaries.value_or(corpus_dir / kSummariesFile);
    if (fs::exists(path)) {
        std::vector<std::string> docs;
        for (const auto &[id, list] : load_summaries(path))
            docs.insert(docs.end(), list.begin(), list.end());
        s.summaries = text_stats(docs);
    } else if (summaries) {
        throw Error(ErrorKind::IoError, "no summaries file at " + path.string());
    }
    return s;
}

inline std::string format_stats(const CorpusStats &s) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "| chart type  | count | percent |\n|-------------|-------|---------|\n";
    for (auto t : kAllChartTypes) {
        auto it = s.type_counts.find(t);
        const std::size_t n = it == s.type_counts.end() ? 0 : it->second;
        out << "| " << std::left << std::setw(11) << to_string(t) << " | " << std::right << std::setw(5) << n << " | "
            << std::setw(6) << s.percent(t) << "% |\n";
    }
    out << "\ncharts: " << s.charts << "\nsummaries: " << s.summaries.documents << "\nvocab: " << s.summaries.vocab
        << "\navg characters: " << s.summaries.avg_chars << "\navg tokens: " << s.summaries.avg_tokens
        << "\navg sentences: " << s.summaries.avg_sentences << "\n";
    return out.str();
}

inline nlohmann::ordered_json to_json(const CorpusStats &s) {
    nlohmann::ordered_json types = nlohmann::ordered_json::object();
    for (auto t : kAllChartTypes) {
        auto it = s.type_counts.find(t);
        types[std::string(to_string(t))] = {{"count", it == s.type_counts.end() ? 0 : it->second},
                                            {"percent", s.percent(t)}};
    }
    nlohmann::ordered_json j;
    j["charts"] = s.charts;
    j["chart_types"] = types;
    j["summaries"] = {{"count", s.summaries.documents},
                      {"vocab", s.summaries.vocab},
                      {"avg_chars", s.summaries.avg_chars},
                      {"avg_tokens", s.summaries.avg_tokens},
                      {"avg_sentences", s.summaries.avg_sentences}};
    return j;
}

// ---------------------------------------------------------------------------
// Evaluation

inline constexpr std::array<std::string_view, 4> kMetricNames = {"ra", "rnss", "rms", "bleu"};

/// Lines of {"id", <field>} keyed by id. Gold lines may carry "target",
/// "output" or "targets" (a list, for several BLEU references).
inline std::vector<std::pair<std::string, std::vector<std::string>>> load_id_texts(const fs::path &path) {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const auto &j : read_jsonl(path)) {
        if (!j.contains("id"))
            throw Error(ErrorKind::IoError, path.string() + ": line without \"id\"");
        std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        std::vector<std::string> texts;
        if (j.contains("targets") && j["targets"].is_array()) {
            for (const auto &t : j["targets"])
                texts.push_back(t.get<std::string>());
        } else if (j.contains("output")) {
            texts.push_back(j["output"].get<std::string>());
        } else if (j.contains("target")) {
            texts.push_back(j["target"].get<std::string>());
        } else {
            throw Error(ErrorKind::IoError, path.string() + ": line " + id + " has no output or target");
        }
        if (texts.empty())
            throw Error(ErrorKind::IoError, path.string() + ": line " + id + " has an empty target list");
        out.emplace_back(std::move(id), std::move(texts));
    }
    return out;
}

/// Scores predictions against gold by id. Ids present on one side only raise
/// MissingId naming them; differing line counts raise LengthMismatch.
inline MetricReport evaluate(const std::vector<std::pair<std::string, std::vector<std::string>>> &pred,
                             const std::vector<std::pair<std::string, std::vector<std::string>>> &gold,
                             const std::vector<std::string> &metrics) {
    for (const auto &m : metrics)
        if (std::find(kMetricNames.begin(), kMetricNames.end(), m) == kMetricNames.end())
            throw Error(ErrorKind::InvalidConfig, "unknown metric '" + m + "'");
    std::map<std::string, const std::vector<std::string> *> gold_by_id, pred_by_id;
    for (const auto &[id, t] : gold)
        gold_by_id[id] = &t;
    for (const auto &[id, t] : pred)
        pred_by_id[id] = &t;
    std::vector<std::string> missing;
    for (const auto &[id, _] : pred_by_id)
        if (!gold_by_id.count(id))
            missing.push_back(id + " (not in gold)");
    for (const auto &[id, _] : gold_by_id)
        if (!pred_by_id.count(id))
            missing.push_back(id + " (not in predictions)");
    if (!missing.empty()) {
        std::string msg = "ids do not match:";
        for (const auto &m : missing)
            msg += " " + m;
        throw Error(ErrorKind::MissingId, msg);
    }
    if (pred.size() != gold.size())
        throw Error(ErrorKind::LengthMismatch, std::to_string(pred.size()) + " predictions for " +
                                                   std::to_string(gold.size()) + " gold lines");

    MetricReport report;
    std::map<std::string, double> sums;
    std::vector<std::string> bleu_pred;
    std::vector<std::vector<std::string>> bleu_gold;
    for (const auto &[id, outputs] : pred) {
        const auto &output = outputs.front();
        const auto &targets = *gold_by_id[id];
        ExampleScore ex{id, {}};
        std::optional<DataTable> gold_table;
        auto gold_as_table = [&]() -> const DataTable & {
            if (!gold_table)
                gold_table = table_from_flattened(targets.front());
            return *gold_table;
        };
        for (const auto &m : metrics) {
            double v = 0;
            if (m == "ra") {
                for (const auto &t : targets)
                    v = std::max(v, static_cast<double>(relaxed_accuracy(output, t)));
            } else if (m == "rnss") {
                v = rnss(output, gold_as_table());
            } else if (m == "rms") {
                try {
                    v = rms_f1(table_from_flattened(output), gold_as_table()).f1;
                } catch (const Error &) {
                    v = 0;
                }
            } else {
                bleu_pred.push_back(output);
                bleu_gold.push_back(targets);
                continue;
            }
            ex.scores[m] = v;
            sums[m] += v;
        }
        report.per_example.push_back(std::move(ex));
    }
    for (const auto &m : metrics) {
        if (m == "bleu")
            report.aggregate[m] = corpus_bleu(bleu_pred, bleu_gold);
        else
            report.aggregate[m] = pred.empty() ? 0.0 : sums[m] / static_cast<double>(pred.size());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Distillation over a corpus

inline Demonstration default_demonstration() {
    DataTable t({{"Year", ColumnKind::categorical, std::nullopt}, {"Sales", ColumnKind::numeric, std::nullopt}},
                {{std::string("2019"), 12.0}, {std::string("2020"), 9.0}, {std::string("2021"), 15.0}});
    return table_demonstration(t,
                               "Sales dipped from 12 in 2019 to 9 in 2020 and then rose to a high of 15 in 2021.",
                               "Sales by Year");
}

struct DistillCorpusOptions {
    std::optional<fs::path> backend_config; ///< unset: offline fallback summarizer
    std::optional<Demonstration> demonstration;
    std::optional<fs::path> checkpoint;     ///< default: <corpus>/summaries.jsonl
    std::optional<fs::path> audit_log;      ///< default: <corpus>/distill_audit.jsonl
    std::size_t max_requests = SIZE_MAX;
    std::size_t workers = 1;
};

/// Summarizes every chart's source table. Completed ids are kept in the
/// checkpoint, which doubles as the summaries file read by gen-tasks.
inline DistillResult distill_corpus(const fs::path &corpus_dir, const DistillCorpusOptions &opts,
                                    Transport &transport, Sleeper sleep = real_sleeper()) {
    std::vector<SummaryJob> jobs;
    for (const auto &e : load_manifest(corpus_dir))
        jobs.push_back({e.id, chart_view(load_source_table(corpus_dir, e)), e.title});
    DistillOptions d;
    d.checkpoint = opts.checkpoint.value_or(corpus_dir / kSummariesFile);
    d.max_requests = opts.max_requests;
    d.workers = opts.workers;
    if (!opts.backend_config) {
        FallbackSummaryBackend fallback;
        return run_distill(jobs, fallback, d);
    }
    BackendClient client(backend_config_from_json(read_json_file(*opts.backend_config)), transport, sleep);
    LlmSummaryBackend llm(client, opts.demonstration.value_or(default_demonstration()));
    auto result = run_distill(jobs, llm, d);
    const auto audit_path = opts.audit_log.value_or(corpus_dir / "distill_audit.jsonl");
    std::ofstream audit(audit_path, std::ios::app);
    if (!audit)
        throw Error(ErrorKind::IoError, "cannot write " + audit_path.string());
    for (const auto &e : client.audit()) {
        nlohmann::ordered_json j;
        j["request"] = e.request;
        j["status"] = e.status;
        j["response"] = e.response;
        audit << j.dump() << "\n";
    }
    return result;
}

} // namespace chartforge
