#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sdmscr/decoupler.hpp"

namespace sdmscr::oracle {

struct StubReply {
    int status = 200;
    std::string content;  // assistant message content (ignored unless status is 200)
};

// Local chat-completions endpoint. The handler sees the node text embedded in
// each prompt and decides the reply.
class StubChatServer {
public:
    using Handler = std::function<StubReply(const std::string& node_text, const nlohmann::json& request)>;

    explicit StubChatServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            {
                std::lock_guard lock(mu_);
                last_auth_ = req.get_header_value("Authorization");
            }
            nlohmann::json body;
            std::string text;
            try {
                body = nlohmann::json::parse(req.body);
                const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
                text = extract_node_text(prompt).value_or("");
            } catch (const std::exception&) {
                res.status = 400;
                return;
            }
            const StubReply reply = handler_(text, body);
            res.status = reply.status;
            if (reply.status == 200) {
                const nlohmann::json out = {
                    {"id", "stub"},
                    {"object", "chat.completion"},
                    {"choices", {{{"index", 0},
                                  {"message", {{"role", "assistant"}, {"content", reply.content}}},
                                  {"finish_reason", "stop"}}}}};
                res.set_content(out.dump(), "application/json");
            } else {
                res.set_content(R"({"error":"stub"})", "application/json");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    StubChatServer(const StubChatServer&) = delete;
    StubChatServer& operator=(const StubChatServer&) = delete;

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    std::size_t hits() const { return hits_.load(); }
    std::string last_authorization() const {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> hits_{0};
    mutable std::mutex mu_;
    std::string last_auth_;
};

inline std::string json_reply(const std::string& relevant, const std::string& irrelevant) {
    return nlohmann::json{{"relevant", relevant}, {"irrelevant", irrelevant}}.dump();
}

}  // namespace sdmscr::oracle
