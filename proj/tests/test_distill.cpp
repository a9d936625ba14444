#include "chartforge/backend.hpp"
#include "chartforge/sample.hpp"

#include <gtest/gtest.h>

#include <deque>

using namespace chartforge;

namespace {

DataTable sales() {
    return DataTable({{"Year", ColumnKind::categorical, std::nullopt}, {"Sales", ColumnKind::numeric, "%"}},
                     {{std::string("2001"), 5.0}, {std::string("2002"), 9.5}, {std::string("2003"), 7.0}});
}

Demonstration demo() { return table_demonstration(sales(), "Sales peaked at 9.5% in 2002."); }

class ScriptedTransport : public Transport {
  public:
    explicit ScriptedTransport(std::deque<HttpResponse> replies) : replies_(std::move(replies)) {}
    HttpResponse post(const std::string &url, const std::string &body, const std::map<std::string, std::string> &headers,
                      double) override {
        ++calls;
        last_url = url;
        last_body = body;
        last_headers = headers;
        if (replies_.empty())
            return {HttpResponse::Outcome::ok, 200, ok_body("done")};
        auto r = replies_.front();
        replies_.pop_front();
        return r;
    }
    static std::string ok_body(const std::string &text) {
        return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
    }

    int calls = 0;
    std::string last_url, last_body;
    std::map<std::string, std::string> last_headers;

  private:
    std::deque<HttpResponse> replies_;
};

BackendConfig config(int retries) {
    BackendConfig c;
    c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    c.model = "m";
    c.auth_env = "CHARTFORGE_TEST_KEY";
    c.rpm = 600;
    c.max_retries = retries;
    c.backoff_base_s = 0.5;
    return c;
}

struct SleepLog {
    std::vector<double> waits;
    Sleeper sleeper() {
        return [this](std::chrono::duration<double> d) { waits.push_back(d.count()); };
    }
};

HttpResponse status(int code) { return {HttpResponse::Outcome::ok, code, "{}"}; }

ErrorKind kind_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::IoError;
}

std::filesystem::path temp_dir(const std::string &name) {
    auto d = std::filesystem::temp_directory_path() / ("chartforge_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

} // namespace

TEST(TableSummaryPrompt, DeterministicAndComplete) {
    const auto a = build_table_summary_prompt(sales(), demo(), "Sales by year");
    const auto b = build_table_summary_prompt(sales(), demo(), "Sales by year");
    EXPECT_EQ(a, b);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(prompt_text(a), prompt_text(b));
    const auto table = sales();
    for (const auto &c : table.columns())
        EXPECT_NE(a.target_payload.find(c.name), std::string::npos);
    EXPECT_TRUE(starts_with(a.target_payload, "Title: Sales by year\nUnits: Sales (%)\nTable: "));
    EXPECT_NE(a.target_payload.find(flatten_table(sales())), std::string::npos);
    EXPECT_EQ(chat_messages(a).size(), 4u);
    EXPECT_EQ(chat_messages(a)[2]["content"], "Sales peaked at 9.5% in 2002.");
}

TEST(TableSummaryPrompt, EmptyDemonstrationRejected) {
    EXPECT_EQ(kind_of([] { table_demonstration(sales(), ""); }), ErrorKind::InvalidPrompt);
    EXPECT_EQ(kind_of([] { Demonstration("x", "  "); }), ErrorKind::InvalidPrompt);
}

TEST(OcrLayout, RowsAndPadding) {
    std::vector<OcrLine> lines = {{"Men", {100, 50, 21, 10}}, {"Women", {10, 50, 35, 10}}, {"Title", {10, 10, 35, 10}}};
    const auto text = layout_text(lines);
    std::vector<std::string> rows;
    for (std::size_t s = 0, e; s <= text.size(); s = e + 1) {
        e = text.find('\n', s);
        if (e == std::string::npos)
            e = text.size();
        rows.push_back(text.substr(s, e - s));
    }
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], "Title");
    EXPECT_TRUE(starts_with(rows[1], "Women"));
    EXPECT_NE(rows[1].find("Men"), std::string::npos);

    auto lead = [](const std::vector<OcrLine> &ls, std::size_t row) {
        const auto t = layout_text(ls);
        auto pos = std::size_t{0};
        for (std::size_t r = 0; r < row; ++r)
            pos = t.find('\n', pos) + 1;
        return t.find_first_not_of(' ', pos) - pos;
    };
    std::vector<OcrLine> near = {{"a", {0, 0, 7, 10}}, {"b", {14, 30, 7, 10}}};
    std::vector<OcrLine> far = {{"a", {0, 0, 7, 10}}, {"b", {70, 30, 7, 10}}};
    EXPECT_LT(lead(near, 1), lead(far, 1));

    EXPECT_EQ(build_ocr_layout_prompt(lines, demo()), build_ocr_layout_prompt(lines, demo()));
    EXPECT_EQ(kind_of([] { build_ocr_layout_prompt({}, demo()); }), ErrorKind::InvalidPrompt);
}

TEST(Rubric, TwoStagesAndRatingParse) {
    const auto p = build_rubric_eval_prompt(sales(), "Sales rose.", "Factual correctness");
    EXPECT_NE(p.steps_request.target_payload.find("Factual correctness"), std::string::npos);
    const auto r = p.rating_request("1. Compare numbers.");
    EXPECT_NE(r.target_payload.find(flatten_table(sales())), std::string::npos);
    EXPECT_NE(r.target_payload.find("Sales rose."), std::string::npos);
    EXPECT_EQ(r, build_rubric_eval_prompt(sales(), "Sales rose.", "Factual correctness").rating_request("1. Compare numbers."));
    EXPECT_EQ(kind_of([] { build_rubric_eval_prompt(sales(), "", "x"); }), ErrorKind::InvalidPrompt);

    EXPECT_EQ(parse_rating("4 - because the numbers match"), 4);
    EXPECT_EQ(parse_rating("  5"), 5);
    EXPECT_EQ(kind_of([] { parse_rating("Rating: 4"); }), ErrorKind::ParseFailure);
    EXPECT_EQ(kind_of([] { parse_rating("7/5"); }), ErrorKind::ParseFailure);
    EXPECT_EQ(kind_of([] { parse_rating(""); }), ErrorKind::ParseFailure);
}

TEST(Fallback, MentionsMaximumAndIsDeterministic) {
    const auto s = fallback_summary(sales(), "sales by year");
    EXPECT_NE(s.find("2002"), std::string::npos);
    EXPECT_NE(s.find("9.5%"), std::string::npos);
    EXPECT_NE(s.find("2001"), std::string::npos);
    EXPECT_EQ(s, fallback_summary(sales(), "sales by year"));
    EXPECT_TRUE(unsupported_numbers(s, sales(), "sales by year").empty());
    EXPECT_EQ(unsupported_numbers("It rose 40% to 9.5", sales()), (std::vector<double>{40}));
}

TEST(Fallback, NeverInventsNumbers) {
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const auto type = kAllChartTypes[seed % kAllChartTypes.size()];
        const auto t = chart_view(random_chart_table(seed, type));
        const auto s = fallback_summary(t);
        ASSERT_TRUE(unsupported_numbers(s, t).empty()) << s << "\n" << flatten_table(t);
        const auto offline = summarize(build_table_summary_prompt(t, demo()), nullptr);
        ASSERT_TRUE(unsupported_numbers(offline, t).empty()) << offline;
    }
}

TEST(Backend, ConfigValidation) {
    auto c = backend_config_from_json(
        {{"endpoint", "https://api.example.com/v1/chat/completions"}, {"model", "x"}, {"auth_env", "K"}, {"rpm", 30}});
    EXPECT_EQ(c.rpm, 30);
    EXPECT_EQ(c.auth_env, "K");
    EXPECT_EQ(backend_config_from_json(to_json(c)), c);
    EXPECT_EQ(kind_of([] { backend_config_from_json({{"endpoint", "ftp://x"}, {"model", "x"}}); }),
              ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { backend_config_from_json({{"endpoint", "http://x"}, {"model", "x"}, {"rpm", 0}}); }),
              ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { backend_config_from_json({{"endpoint", "http://x"}, {"model", "x"}, {"api_key", "s"}}); }),
              ErrorKind::InvalidConfig);
}

TEST(Backend, RetriesWithExponentialBackoff) {
    SleepLog sleeps;
    ScriptedTransport t({status(429), status(503), {HttpResponse::Outcome::ok, 200, ScriptedTransport::ok_body(" hi ")}});
    BackendClient client(config(3), t, sleeps.sleeper());
    EXPECT_EQ(summarize(build_table_summary_prompt(sales(), demo()), &client), "hi");
    EXPECT_EQ(t.calls, 3);
    std::vector<double> backoff;
    for (double w : sleeps.waits)
        if (w >= 0.5)
            backoff.push_back(w);
    EXPECT_EQ(backoff, (std::vector<double>{0.5, 1.0}));
    const auto body = nlohmann::json::parse(t.last_body);
    EXPECT_EQ(body["model"], "m");
    EXPECT_EQ(body["messages"].size(), 4u);
}

TEST(Backend, ErrorKindsAfterBudget) {
    SleepLog sleeps;
    ScriptedTransport limited({status(429), status(429), status(429)});
    BackendClient a(config(2), limited, sleeps.sleeper());
    EXPECT_EQ(kind_of([&] { a.complete(build_table_summary_prompt(sales(), demo())); }), ErrorKind::RateLimited);
    EXPECT_EQ(limited.calls, 3);

    ScriptedTransport slow({{HttpResponse::Outcome::timeout, 0, ""}, {HttpResponse::Outcome::timeout, 0, ""}});
    BackendClient b(config(1), slow, sleeps.sleeper());
    EXPECT_EQ(kind_of([&] { b.complete(build_table_summary_prompt(sales(), demo())); }), ErrorKind::BackendTimeout);

    ScriptedTransport denied({status(401)});
    BackendClient c(config(3), denied, sleeps.sleeper());
    EXPECT_EQ(kind_of([&] { c.complete(build_table_summary_prompt(sales(), demo())); }), ErrorKind::BackendError);
    EXPECT_EQ(denied.calls, 1);

    ScriptedTransport garbage({{HttpResponse::Outcome::ok, 200, "not json"}});
    BackendClient d(config(3), garbage, sleeps.sleeper());
    EXPECT_EQ(kind_of([&] { d.complete(build_table_summary_prompt(sales(), demo())); }), ErrorKind::ParseFailure);
}

TEST(Backend, SecretOnlyInHeader) {
    ::setenv("CHARTFORGE_TEST_KEY", "sk-secret-123", 1);
    SleepLog sleeps;
    ScriptedTransport t({{HttpResponse::Outcome::ok, 200, ScriptedTransport::ok_body("echo sk-secret-123")}});
    BackendClient client(config(0), t, sleeps.sleeper());
    client.complete(build_table_summary_prompt(sales(), demo()));
    EXPECT_EQ(t.last_headers["Authorization"], "Bearer sk-secret-123");
    EXPECT_EQ(t.last_body.find("sk-secret"), std::string::npos);
    EXPECT_EQ(to_json(client.config()).dump().find("sk-secret"), std::string::npos);
    for (const auto &e : client.audit()) {
        EXPECT_EQ(e.request.find("sk-secret"), std::string::npos);
        EXPECT_EQ(e.response.find("sk-secret"), std::string::npos);
    }
    ::unsetenv("CHARTFORGE_TEST_KEY");
}

TEST(Backend, RateLimiterSpacesRequests) {
    std::vector<double> waits;
    auto now = Clock::time_point{};
    RateLimiter limiter(
        120, [&](std::chrono::duration<double> d) { waits.push_back(d.count()); }, [&] { return now; });
    limiter.acquire();
    limiter.acquire();
    limiter.acquire();
    ASSERT_EQ(waits.size(), 2u);
    EXPECT_NEAR(waits[0], 0.5, 1e-9);
    EXPECT_NEAR(waits[1], 1.0, 1e-9);
    now += std::chrono::seconds(10);
    limiter.acquire();
    EXPECT_EQ(waits.size(), 2u);
}

TEST(Batch, FallbackMakesNoNetworkCalls) {
    OfflineTransport offline;
    FallbackSummaryBackend fallback;
    std::vector<SummaryJob> jobs;
    for (std::uint64_t i = 0; i < 20; ++i)
        jobs.push_back({"c" + std::to_string(i), chart_view(random_chart_table(i, ChartType::simple_bar)), ""});
    DistillOptions opts;
    opts.workers = 4;
    const auto r = run_distill(jobs, fallback, opts);
    EXPECT_EQ(r.summaries.size(), 20u);
    EXPECT_TRUE(r.failures.empty());
    EXPECT_EQ(offline.calls(), 0u);
    EXPECT_FALSE(fallback.uses_network());
}

TEST(Batch, BudgetCheckpointAndResume) {
    const auto dir = temp_dir("distill_resume");
    std::vector<SummaryJob> jobs;
    for (std::uint64_t i = 0; i < 6; ++i)
        jobs.push_back({"c" + std::to_string(i), chart_view(random_chart_table(i, ChartType::line_single)), ""});

    SleepLog sleeps;
    ScriptedTransport t({});
    BackendClient client(config(0), t, sleeps.sleeper());
    LlmSummaryBackend llm(client, demo());
    DistillOptions opts;
    opts.checkpoint = dir / "done.jsonl";
    opts.max_requests = 4;
    auto first = run_distill(jobs, llm, opts);
    EXPECT_EQ(first.summaries.size(), 4u);
    EXPECT_EQ(first.over_budget.size(), 2u);
    EXPECT_EQ(t.calls, 4);
    EXPECT_EQ(load_checkpoint(opts.checkpoint).size(), 4u);
    EXPECT_FALSE(std::filesystem::exists(dir / "done.jsonl.tmp"));

    opts.max_requests = 10;
    auto second = run_distill(jobs, llm, opts);
    EXPECT_EQ(second.resumed.size(), 4u);
    EXPECT_EQ(second.summaries.size(), 6u);
    EXPECT_EQ(t.calls, 6);
    std::filesystem::remove_all(dir);
}
