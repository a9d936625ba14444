#pragma once

#include "chartforge/backend.hpp"

#include <httplib.h>

#include <regex>

namespace chartforge {

/// Transport over cpp-httplib. https URLs need the library built with TLS.
class HttpTransport : public Transport {
  public:
    HttpResponse post(const std::string &url, const std::string &body,
                      const std::map<std::string, std::string> &headers, double timeout_s) override {
        static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(url, m, re))
            throw Error(ErrorKind::InvalidConfig, "bad endpoint URL");
        const std::string path = m[2].matched ? m[2].str() : "/";
        httplib::Client client(m[1].str());
        const auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s));
        client.set_connection_timeout(t);
        client.set_read_timeout(t);
        client.set_write_timeout(t);
        httplib::Headers h;
        std::string content_type = "application/json";
        for (const auto &[k, v] : headers) {
            if (k == "Content-Type")
                content_type = v;
            else
                h.emplace(k, v);
        }
        auto res = client.Post(path, h, body, content_type);
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                return {HttpResponse::Outcome::timeout, 0, httplib::to_string(err)};
            return {HttpResponse::Outcome::connection_error, 0, httplib::to_string(err)};
        }
        return {HttpResponse::Outcome::ok, res->status, res->body};
    }
};

} // namespace chartforge
