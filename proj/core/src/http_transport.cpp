// Chat-completion transport over cpp-httplib. Kept in its own translation
// unit so only this file pulls in httplib.

#include <httplib.h>

#include <mutex>

#include "sdmscr/decoupler.hpp"

namespace sdmscr {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // "" or "/v1"
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("LLM_API_BASE must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.path = url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

class HttpChatTransport final : public ChatTransport {
public:
    explicit HttpChatTransport(const HttpBackendConfig& cfg)
        : cfg_(cfg), url_(split_url(cfg.base_url)) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (url_.origin.rfind("https://", 0) == 0) {
            throw ConfigError("https backends need a build with OpenSSL support");
        }
#endif
    }

    ChatReply send(const ChatRequest& req) override {
        // httplib::Client is not safe for concurrent use; one per call.
        httplib::Client client(url_.origin);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        client.set_write_timeout(cfg_.timeout);
        httplib::Headers headers = {{"Authorization", "Bearer " + cfg_.api_key}};
        auto res = client.Post(url_.path + "/chat/completions", headers, chat_request_to_json(req),
                               "application/json");
        if (!res) return {0, "", httplib::to_string(res.error())};
        return {res->status, res->body, ""};
    }

private:
    HttpBackendConfig cfg_;
    SplitUrl url_;
};

}  // namespace

std::unique_ptr<ChatTransport> make_http_transport(const HttpBackendConfig& cfg) {
    return std::make_unique<HttpChatTransport>(cfg);
}

}  // namespace sdmscr
