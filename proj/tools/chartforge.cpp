#include "chartforge/corpus.hpp"
#include "chartforge/http_transport.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace chartforge;

namespace {

PipelineConfig load_config(const std::string &path) {
    return path.empty() ? PipelineConfig{} : pipeline_config_from_json(read_json_file(path));
}

/// Config of an existing corpus: the file given on the command line, else the
/// one stored next to the manifest.
PipelineConfig corpus_config(const std::string &path, const fs::path &corpus) {
    if (!path.empty())
        return load_config(path);
    if (fs::exists(corpus / kCorpusConfigFile))
        return pipeline_config_from_json(read_json_file(corpus / kCorpusConfigFile));
    return {};
}

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!trim(cur).empty())
                out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Synthetic chart corpus builder"};
    app.require_subcommand(1);

    std::string config_path, out, profile_path, summaries, open_qa, backend, checkpoint, pred, gold, metrics = "ra";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> count, workers, max_requests;
    bool strict = false, as_json = false;
    std::string dir;

    auto *syn = app.add_subcommand("synthesize", "Render a seeded chart corpus");
    syn->add_option("--config", config_path, "Pipeline config JSON");
    syn->add_option("--seed", seed, "Override the config seed");
    syn->add_option("--count", count, "Override the chart count");
    syn->add_option("--out", out, "Output directory");
    syn->add_option("--workers", workers, "Worker threads");

    auto *ext = app.add_subcommand("extract", "Recover data tables from SVG charts");
    ext->add_option("dir", dir, "Directory of SVG files")->required();
    ext->add_option("--out", out, "Directory for extracted tables");
    ext->add_option("--profile", profile_path, "Selector profile JSON");
    ext->add_option("--workers", workers, "Worker threads");
    ext->add_flag("--strict", strict, "Exit nonzero when any file fails");

    auto *gen = app.add_subcommand("gen-tasks", "Emit task JSONL for a corpus");
    gen->add_option("corpus", dir, "Corpus directory")->required();
    gen->add_option("--config", config_path, "Pipeline config JSON (default: the corpus config)");
    gen->add_option("--seed", seed, "Override the config seed");
    gen->add_option("--summaries", summaries, "Summaries JSONL {id, summary}");
    gen->add_option("--open-qa", open_qa, "Open QA JSONL {id, question, answer}");
    gen->add_option("--out", out, "Task directory (default: <corpus>/tasks)");
    gen->add_option("--workers", workers, "Worker threads");

    auto *dis = app.add_subcommand("distill", "Summarize every chart table");
    dis->add_option("corpus", dir, "Corpus directory")->required();
    dis->add_option("--backend", backend, "Backend config JSON; omit for the offline summarizer");
    dis->add_option("--checkpoint", checkpoint, "Checkpoint JSONL (default: <corpus>/summaries.jsonl)");
    dis->add_option("--max-requests", max_requests, "Request budget for this run");
    dis->add_option("--workers", workers, "Requests in flight");

    auto *sts = app.add_subcommand("stats", "Chart type and summary statistics");
    sts->add_option("corpus", dir, "Corpus directory")->required();
    sts->add_option("--summaries", summaries, "Summaries JSONL (default: <corpus>/summaries.jsonl)");
    sts->add_flag("--json", as_json, "Print JSON");

    auto *evl = app.add_subcommand("eval", "Score predictions against gold");
    evl->add_option("--pred", pred, "Predictions JSONL {id, output}")->required();
    evl->add_option("--gold", gold, "Gold JSONL {id, target}")->required();
    evl->add_option("--metrics", metrics, "Comma-separated subset of ra,rnss,rms,bleu");
    evl->add_option("--out", out, "Write the full report JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (syn->parsed()) {
            auto cfg = load_config(config_path);
            if (seed)
                cfg.seed = *seed;
            if (count)
                cfg.chart_count = *count;
            if (!out.empty())
                cfg.out_dir = out;
            if (workers)
                cfg.workers = std::max<std::size_t>(1, *workers);
            const auto r = synthesize(cfg);
            std::cout << r.entries.size() << " charts in " << cfg.out_dir.string() << " (" << r.generated
                      << " generated, " << r.skipped << " reused)\n";
            return 0;
        }
        if (ext->parsed()) {
            SelectorProfile profile;
            if (!profile_path.empty())
                profile = profile_from_json(read_json_file(profile_path));
            const auto s = extract_directory(dir, out.empty() ? std::nullopt : std::optional<fs::path>(out), profile,
                                             workers.value_or(1));
            for (const auto &[file, msg] : s.failures)
                std::cerr << file << ": " << msg << "\n";
            std::cout << summary_line(s) << "\n";
            return strict && s.failed > 0 ? 1 : 0;
        }
        if (gen->parsed()) {
            auto cfg = corpus_config(config_path, dir);
            if (seed)
                cfg.seed = *seed;
            if (workers)
                cfg.workers = std::max<std::size_t>(1, *workers);
            GenTasksOptions opts;
            if (!summaries.empty())
                opts.summaries = summaries;
            if (!open_qa.empty())
                opts.open_qa = open_qa;
            if (!out.empty())
                opts.out_dir = out;
            const auto r = gen_tasks(dir, cfg, opts);
            for (const auto &w : r.warnings)
                std::cerr << "warning: " << w << "\n";
            std::cout << task_count_table(r);
            return 0;
        }
        if (dis->parsed()) {
            DistillCorpusOptions opts;
            if (!backend.empty())
                opts.backend_config = backend;
            if (!checkpoint.empty())
                opts.checkpoint = checkpoint;
            if (max_requests)
                opts.max_requests = *max_requests;
            opts.workers = workers.value_or(1);
            HttpTransport transport;
            const auto r = distill_corpus(dir, opts, transport);
            for (const auto &[id, msg] : r.failures)
                std::cerr << id << ": " << msg << "\n";
            std::cout << r.summaries.size() << " summarized (" << r.resumed.size() << " resumed, "
                      << r.over_budget.size() << " over budget, " << r.failures.size() << " failed)\n";
            return r.failures.empty() ? 0 : 1;
        }
        if (sts->parsed()) {
            const auto s = corpus_stats(dir, summaries.empty() ? std::nullopt : std::optional<fs::path>(summaries));
            if (as_json)
                std::cout << to_json(s).dump(2) << "\n";
            else
                std::cout << format_stats(s);
            return 0;
        }
        if (evl->parsed()) {
            const auto report = evaluate(load_id_texts(pred), load_id_texts(gold), split_list(metrics));
            if (!out.empty())
                write_file_atomic(out, to_json(report).dump(2) + "\n");
            for (const auto &[name, v] : report.aggregate)
                std::cout << name << ": " << format_exact(v) << "\n";
            return 0;
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
