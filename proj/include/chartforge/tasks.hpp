#pragma once

#include "chartforge/flatten.hpp"
#include "chartforge/render.hpp"
#include "chartforge/table.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace chartforge {

enum class TaskKind { table, value_estimation, qa_reasoning, qa_open, summary };

inline constexpr std::array<TaskKind, 5> kAllTaskKinds = {TaskKind::table, TaskKind::value_estimation,
                                                          TaskKind::qa_reasoning, TaskKind::qa_open,
                                                          TaskKind::summary};

inline std::string_view to_string(TaskKind k) {
    switch (k) {
    case TaskKind::table: return "table";
    case TaskKind::value_estimation: return "value_estimation";
    case TaskKind::qa_reasoning: return "qa_reasoning";
    case TaskKind::qa_open: return "qa_open";
    case TaskKind::summary: return "summary";
    }
    return "table";
}

inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
    for (auto k : kAllTaskKinds)
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

/// Prompt token that opens every record of a kind.
inline std::string_view prompt_token(TaskKind k) {
    switch (k) {
    case TaskKind::table: return "<extract_data_table>";
    case TaskKind::value_estimation: return "<estimate_values>";
    case TaskKind::qa_reasoning: return "<answer_question>";
    case TaskKind::qa_open: return "<open_question>";
    case TaskKind::summary: return "<summarize_chart>";
    }
    return "";
}

struct TaskRecord {
    std::string image;
    std::string prompt;
    std::string target;
    TaskKind kind = TaskKind::table;

    friend bool operator==(const TaskRecord &, const TaskRecord &) = default;
};

/// Throws InvalidPrompt unless the prompt opens with exactly one registered
/// token (the one for the record's kind) and the target is non-empty.
inline void validate(const TaskRecord &r) {
    const auto token = prompt_token(r.kind);
    if (!starts_with(r.prompt, token))
        throw Error(ErrorKind::InvalidPrompt, "prompt must start with " + std::string(token));
    std::string_view rest = std::string_view(r.prompt).substr(token.size());
    for (auto k : kAllTaskKinds)
        if (rest.find(prompt_token(k)) != std::string_view::npos)
            throw Error(ErrorKind::InvalidPrompt, "prompt carries more than one task token");
    if (trim(r.target).empty())
        throw Error(ErrorKind::InvalidPrompt, "empty target");
}

inline TaskRecord make_record(std::string image, TaskKind kind, std::string_view question, std::string target) {
    TaskRecord r{std::move(image), std::string(prompt_token(kind)), std::move(target), kind};
    if (!question.empty())
        r.prompt += " " + std::string(question);
    validate(r);
    return r;
}

inline nlohmann::json to_json(const TaskRecord &r) {
    // ordered keys keep JSONL byte-stable
    nlohmann::ordered_json j;
    j["image"] = r.image;
    j["prompt"] = r.prompt;
    j["target"] = r.target;
    j["kind"] = to_string(r.kind);
    return nlohmann::json::parse(j.dump());
}

inline std::string to_jsonl_line(const TaskRecord &r) {
    nlohmann::ordered_json j;
    j["image"] = r.image;
    j["prompt"] = r.prompt;
    j["target"] = r.target;
    j["kind"] = to_string(r.kind);
    return j.dump();
}

inline TaskRecord task_record_from_json(const nlohmann::json &j) {
    auto kind = parse_task_kind(j.at("kind").get<std::string>());
    if (!kind)
        throw Error(ErrorKind::InvalidPrompt, "unknown task kind");
    TaskRecord r{j.at("image").get<std::string>(), j.at("prompt").get<std::string>(), j.at("target").get<std::string>(),
                 *kind};
    validate(r);
    return r;
}

// ---------------------------------------------------------------------------
// Builders

inline TaskRecord table_record(const std::string &image, const DataTable &view) {
    return make_record(image, TaskKind::table, "", flatten_table(view));
}

inline TaskRecord value_estimation_record(const std::string &image, const RenderedChart &chart) {
    return make_record(image, TaskKind::value_estimation, "", value_estimation_target(chart));
}

struct AssemblyIssue {
    std::string chart_id;
    ErrorKind kind = ErrorKind::MissingSummary;
    std::string message;
};

struct Assembly {
    std::vector<TaskRecord> records;
    std::vector<AssemblyIssue> issues;
    std::vector<std::string> diagnostics;
};

/// One summary record per (chart, summary) pair. Charts without a non-empty
/// summary are listed as MissingSummary.
inline Assembly assemble_summary_records(const std::vector<std::string> &chart_ids,
                                         const std::map<std::string, std::vector<std::string>> &summaries) {
    Assembly out;
    for (const auto &id : chart_ids) {
        auto it = summaries.find(id);
        bool any = false;
        if (it != summaries.end())
            for (const auto &s : it->second) {
                if (trim(s).empty())
                    continue;
                out.records.push_back(make_record(id, TaskKind::summary, "", s));
                any = true;
            }
        if (!any)
            out.issues.push_back({id, ErrorKind::MissingSummary, "no summary for chart " + id});
    }
    return out;
}

struct OpenQaPair {
    std::string chart_id;
    std::string question;
    std::string answer;
};

/// Open-ended QA records. The answer must be a contiguous part of the chart's
/// summary when one is on file; charts without a summary pass unchecked.
inline Assembly assemble_open_qa_records(const std::vector<OpenQaPair> &pairs,
                                         const std::map<std::string, std::vector<std::string>> &summaries) {
    Assembly out;
    for (const auto &p : pairs) {
        if (trim(p.question).empty() || trim(p.answer).empty()) {
            out.issues.push_back({p.chart_id, ErrorKind::InvalidPrompt, "empty question or answer"});
            continue;
        }
        auto it = summaries.find(p.chart_id);
        bool has_summary = false, found = false;
        if (it != summaries.end())
            for (const auto &s : it->second) {
                if (trim(s).empty())
                    continue;
                has_summary = true;
                found = found || s.find(p.answer) != std::string::npos;
            }
        if (has_summary && !found) {
            out.issues.push_back({p.chart_id, ErrorKind::AnswerNotInSummary,
                                  "answer is not part of the summary of chart " + p.chart_id});
            continue;
        }
        if (!has_summary)
            out.diagnostics.push_back(p.chart_id + ": unchecked");
        out.records.push_back(make_record(p.chart_id, TaskKind::qa_open, p.question, p.answer));
    }
    return out;
}

} // namespace chartforge
