#pragma once

#include "chartforge/distill.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace chartforge {

// ---------------------------------------------------------------------------
// Configuration

struct BackendConfig {
    std::string endpoint;                ///< full URL of a chat/completions endpoint
    std::string model;
    std::string auth_env;                ///< name of the variable holding the API key
    double rpm = 60;                     ///< requests per minute
    double timeout_s = 30;
    int max_retries = 3;
    double backoff_base_s = 1.0;

    friend bool operator==(const BackendConfig &, const BackendConfig &) = default;
};

inline BackendConfig backend_config_from_json(const nlohmann::json &j) {
    auto bad = [](const std::string &m) { return Error(ErrorKind::InvalidConfig, m); };
    if (!j.is_object())
        throw bad("backend config must be an object");
    BackendConfig c;
    try {
        c.endpoint = j.at("endpoint").get<std::string>();
        c.model = j.at("model").get<std::string>();
        c.auth_env = j.value("auth_env", std::string());
        c.rpm = j.value("rpm", c.rpm);
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.backoff_base_s = j.value("backoff_base_s", c.backoff_base_s);
    } catch (const nlohmann::json::exception &e) {
        throw bad(e.what());
    }
    if (!starts_with(c.endpoint, "http://") && !starts_with(c.endpoint, "https://"))
        throw bad("endpoint must be an http(s) URL");
    if (c.model.empty())
        throw bad("model must be set");
    if (!(c.rpm > 0) || !(c.timeout_s > 0) || c.max_retries < 0 || c.backoff_base_s < 0)
        throw bad("rpm and timeout_s must be positive, retries and backoff non-negative");
    if (j.contains("api_key") || j.contains("token"))
        throw bad("secrets belong in the environment variable named by auth_env");
    return c;
}

/// The key never enters the config object; nothing here writes it to disk.
inline nlohmann::json to_json(const BackendConfig &c) {
    return {{"endpoint", c.endpoint},   {"model", c.model},         {"auth_env", c.auth_env},
            {"rpm", c.rpm},             {"timeout_s", c.timeout_s}, {"max_retries", c.max_retries},
            {"backoff_base_s", c.backoff_base_s}};
}

// ---------------------------------------------------------------------------
// Transport

struct HttpResponse {
    enum class Outcome { ok, timeout, connection_error };
    Outcome outcome = Outcome::ok;
    int status = 0;
    std::string body;
};

class Transport {
  public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string &url, const std::string &body,
                              const std::map<std::string, std::string> &headers, double timeout_s) = 0;
};

/// Refuses every request and counts the attempts.
class OfflineTransport : public Transport {
  public:
    HttpResponse post(const std::string &, const std::string &, const std::map<std::string, std::string> &,
                      double) override {
        ++calls_;
        return {HttpResponse::Outcome::connection_error, 0, "offline"};
    }
    std::size_t calls() const { return calls_.load(); }

  private:
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Rate limiting

using Clock = std::chrono::steady_clock;
using Sleeper = std::function<void(std::chrono::duration<double>)>;

inline Sleeper real_sleeper() {
    return [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
}

/// Spaces request starts at least 60/rpm seconds apart across all threads.
class RateLimiter {
  public:
    RateLimiter(double rpm, Sleeper sleep, std::function<Clock::time_point()> now = Clock::now)
        : interval_(60.0 / rpm), sleep_(std::move(sleep)), now_(std::move(now)) {}

    void acquire() {
        std::chrono::duration<double> wait{0};
        {
            std::lock_guard lock(mu_);
            const auto t = now_();
            const auto slot = started_ ? std::max(t, next_) : t;
            next_ = slot + std::chrono::duration_cast<Clock::duration>(interval_);
            started_ = true;
            wait = slot - t;
        }
        if (wait.count() > 0)
            sleep_(wait);
    }

  private:
    std::chrono::duration<double> interval_;
    Sleeper sleep_;
    std::function<Clock::time_point()> now_;
    std::mutex mu_;
    Clock::time_point next_{};
    bool started_ = false;
};

// ---------------------------------------------------------------------------
// Client

struct AuditEntry {
    std::string request;
    int status = 0;
    std::string response;
};

/// Replaces every occurrence of `secret` in `text`.
inline std::string redact(std::string text, std::string_view secret) {
    if (secret.empty())
        return text;
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos))
        text.replace(pos, secret.size(), "[REDACTED]");
    return text;
}

class BackendClient {
  public:
    BackendClient(BackendConfig config, Transport &transport, Sleeper sleep = real_sleeper())
        : config_(std::move(config)), transport_(transport), sleep_(sleep), limiter_(config_.rpm, sleep) {}

    const BackendConfig &config() const { return config_; }

    /// Chat/completions request with retries. 429 and 5xx replies and
    /// timeouts are retried with exponential backoff.
    std::string complete(const PromptBundle &bundle) {
        const auto body = nlohmann::json{{"model", config_.model},
                                         {"messages", chat_messages(bundle)},
                                         {"max_tokens", bundle.decoding.max_tokens},
                                         {"temperature", bundle.decoding.temperature}}
                              .dump();
        std::map<std::string, std::string> headers = {{"Content-Type", "application/json"}};
        const std::string key = secret();
        if (!key.empty())
            headers["Authorization"] = "Bearer " + key;

        ErrorKind last = ErrorKind::BackendError;
        std::string last_msg;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0)
                sleep_(std::chrono::duration<double>(config_.backoff_base_s * std::pow(2.0, attempt - 1)));
            limiter_.acquire();
            ++requests_;
            const auto resp = transport_.post(config_.endpoint, body, headers, config_.timeout_s);
            log({redact(body, key), resp.status, redact(resp.body, key)});
            if (resp.outcome == HttpResponse::Outcome::timeout) {
                last = ErrorKind::BackendTimeout;
                last_msg = "request timed out";
                continue;
            }
            if (resp.outcome == HttpResponse::Outcome::connection_error) {
                last = ErrorKind::BackendError;
                last_msg = "connection failed: " + resp.body;
                continue;
            }
            if (resp.status == 429) {
                last = ErrorKind::RateLimited;
                last_msg = "rate limited";
                continue;
            }
            if (resp.status >= 500) {
                last = ErrorKind::BackendError;
                last_msg = "server error " + std::to_string(resp.status);
                continue;
            }
            if (resp.status < 200 || resp.status >= 300)
                throw Error(ErrorKind::BackendError, "HTTP " + std::to_string(resp.status));
            return parse_reply(resp.body);
        }
        throw Error(last, last_msg + " after " + std::to_string(config_.max_retries + 1) + " attempts");
    }

    static std::string parse_reply(const std::string &body) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded())
            throw Error(ErrorKind::ParseFailure, "reply is not JSON");
        try {
            const auto &choice = j.at("choices").at(0);
            if (choice.contains("message"))
                return choice.at("message").at("content").get<std::string>();
            return choice.at("text").get<std::string>();
        } catch (const nlohmann::json::exception &) {
            throw Error(ErrorKind::ParseFailure, "reply has no choices[0] content");
        }
    }

    std::size_t requests() const { return requests_.load(); }

    std::vector<AuditEntry> audit() const {
        std::lock_guard lock(mu_);
        return audit_;
    }

  private:
    std::string secret() const {
        if (config_.auth_env.empty())
            return {};
        const char *v = std::getenv(config_.auth_env.c_str());
        return v ? v : "";
    }
    void log(AuditEntry e) {
        std::lock_guard lock(mu_);
        audit_.push_back(std::move(e));
    }

    BackendConfig config_;
    Transport &transport_;
    Sleeper sleep_;
    RateLimiter limiter_;
    std::atomic<std::size_t> requests_{0};
    mutable std::mutex mu_;
    std::vector<AuditEntry> audit_;
};

/// Title and table recovered from a table-summary payload.
inline std::pair<std::string, DataTable> parse_table_payload(std::string_view payload) {
    std::string title;
    std::optional<std::string> table;
    std::size_t start = 0;
    while (start <= payload.size()) {
        auto end = payload.find('\n', start);
        if (end == std::string_view::npos)
            end = payload.size();
        const auto line = payload.substr(start, end - start);
        if (starts_with(line, "Title: "))
            title = std::string(line.substr(7));
        else if (starts_with(line, "Table: "))
            table = std::string(line.substr(7));
        start = end + 1;
    }
    if (!table)
        throw Error(ErrorKind::InvalidPrompt, "payload carries no table");
    return {title, table_from_flattened(*table)};
}

/// Sends the bundle to `client`, or summarizes its table offline when no
/// client is given.
inline std::string summarize(const PromptBundle &bundle, BackendClient *client) {
    if (client)
        return std::string(trim(client->complete(bundle)));
    auto [title, table] = parse_table_payload(bundle.target_payload);
    return fallback_summary(table, title);
}

// ---------------------------------------------------------------------------
// Summary backends

struct SummaryJob {
    std::string id;
    DataTable table;
    std::string title;
};

class SummaryBackend {
  public:
    virtual ~SummaryBackend() = default;
    virtual std::string summarize(const SummaryJob &job) = 0;
    virtual bool uses_network() const = 0;
};

class FallbackSummaryBackend : public SummaryBackend {
  public:
    std::string summarize(const SummaryJob &job) override { return fallback_summary(job.table, job.title); }
    bool uses_network() const override { return false; }
};

class LlmSummaryBackend : public SummaryBackend {
  public:
    LlmSummaryBackend(BackendClient &client, Demonstration demo) : client_(client), demo_(std::move(demo)) {}
    std::string summarize(const SummaryJob &job) override {
        return std::string(trim(client_.complete(build_table_summary_prompt(job.table, demo_, job.title))));
    }
    bool uses_network() const override { return true; }

  private:
    BackendClient &client_;
    Demonstration demo_;
};

// ---------------------------------------------------------------------------
// Batch driver

struct DistillOptions {
    std::filesystem::path checkpoint;     ///< JSONL of completed {"id", "summary"}
    std::size_t max_requests = SIZE_MAX;  ///< budget of backend calls for this run
    std::size_t workers = 1;
};

struct DistillResult {
    std::map<std::string, std::string> summaries; ///< every completed id, resumed ones included
    std::vector<std::string> resumed;
    std::vector<std::string> over_budget;
    std::map<std::string, std::string> failures;
};

inline std::map<std::string, std::string> load_checkpoint(const std::filesystem::path &path) {
    std::map<std::string, std::string> out;
    if (path.empty() || !std::filesystem::exists(path))
        return out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("summary"))
            throw Error(ErrorKind::IoError, "corrupt checkpoint line in " + path.string());
        out[j["id"].get<std::string>()] = j["summary"].get<std::string>();
    }
    return out;
}

/// Writes via a temporary file and rename so readers never see a torn file.
inline void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
        out << content;
        if (!out.flush())
            throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string checkpoint_text(const std::map<std::string, std::string> &done) {
    std::string out;
    for (const auto &[id, s] : done) {
        nlohmann::ordered_json j;
        j["id"] = id;
        j["summary"] = s;
        out += j.dump() + "\n";
    }
    return out;
}

/// Summarizes every job not already in the checkpoint, up to the request
/// budget, with `workers` jobs in flight. The checkpoint is rewritten
/// atomically after each completion.
inline DistillResult run_distill(const std::vector<SummaryJob> &jobs, SummaryBackend &backend,
                                 const DistillOptions &opts) {
    DistillResult result;
    auto done = load_checkpoint(opts.checkpoint);
    std::vector<const SummaryJob *> todo;
    for (const auto &j : jobs) {
        if (done.count(j.id))
            result.resumed.push_back(j.id);
        else if (todo.size() < opts.max_requests)
            todo.push_back(&j);
        else
            result.over_budget.push_back(j.id);
    }
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            const auto &job = *todo[i];
            try {
                auto s = backend.summarize(job);
                std::lock_guard lock(mu);
                done[job.id] = s;
                if (!opts.checkpoint.empty())
                    write_file_atomic(opts.checkpoint, checkpoint_text(done));
            } catch (const Error &e) {
                std::lock_guard lock(mu);
                result.failures[job.id] = e.what();
            }
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(opts.workers, todo.size()));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n; ++i)
            pool.emplace_back(work);
        for (auto &t : pool)
            t.join();
    }
    std::set<std::string> wanted;
    for (const auto &j : jobs)
        wanted.insert(j.id);
    for (const auto &[id, s] : done)
        if (wanted.count(id))
            result.summaries[id] = s;
    return result;
}

} // namespace chartforge
