#include "sdmscr/decoupler.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "sdmscr/embedding.hpp"

namespace sdmscr {

namespace {

using json = nlohmann::json;

constexpr std::string_view kNodeTextMarker = "Node text (JSON-encoded):\n";

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// End (one past) of the balanced {...} starting at `open`, honoring JSON
// string literals; npos if unbalanced.
std::size_t balanced_object_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

bool contains_keyword(const std::vector<std::string>& sentence_tokens,
                      const std::vector<std::string>& keyword_tokens) {
    if (keyword_tokens.empty() || keyword_tokens.size() > sentence_tokens.size()) return false;
    return std::search(sentence_tokens.begin(), sentence_tokens.end(), keyword_tokens.begin(),
                       keyword_tokens.end()) != sentence_tokens.end();
}

void append_sentence(std::string& out, std::string_view sentence) {
    if (!out.empty()) out.push_back(' ');
    out.append(sentence);
}

DecoupleRecord degraded_record(std::size_t node, const std::string& text, const std::string& model,
                               const std::string& hash) {
    return {node, text, text, "", model, hash, DecoupleStatus::Degraded};
}

}  // namespace

void TaskInstruction::validate() const {
    if (is_blank(task_background)) throw std::invalid_argument("task background must be non-empty");
    if (is_blank(output_schema_version)) {
        throw std::invalid_argument("output schema version must be non-empty");
    }
}

std::string_view to_string(DecoupleStatus s) {
    switch (s) {
        case DecoupleStatus::Ok: return "ok";
        case DecoupleStatus::Degraded: return "degraded";
        case DecoupleStatus::Failed: return "failed";
    }
    return "failed";
}

DecoupleStatus parse_status(std::string_view s) {
    if (s == "ok") return DecoupleStatus::Ok;
    if (s == "degraded") return DecoupleStatus::Degraded;
    if (s == "failed") return DecoupleStatus::Failed;
    throw std::invalid_argument("unknown decouple status '" + std::string(s) + "'");
}

std::string record_to_json_line(const DecoupleRecord& r) {
    json j = {{"node_id", r.node_id},     {"text_ori", r.text_ori},
              {"text_rel", r.text_rel},   {"text_irr", r.text_irr},
              {"model_id", r.model_id},   {"prompt_hash", r.prompt_hash},
              {"status", to_string(r.status)}};
    return j.dump();
}

DecoupleRecord record_from_json_line(std::string_view line) {
    const json j = json::parse(line);
    DecoupleRecord r;
    r.node_id = j.at("node_id").get<std::size_t>();
    r.text_ori = j.at("text_ori").get<std::string>();
    r.text_rel = j.at("text_rel").get<std::string>();
    r.text_irr = j.at("text_irr").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    r.status = parse_status(j.at("status").get<std::string>());
    if (r.prompt_hash.size() != 64) throw std::invalid_argument("prompt_hash must be 64 hex chars");
    return r;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string prompt_hash(const TaskInstruction& instr, std::string_view text_ori) {
    std::string material;
    material.reserve(kPromptTemplateId.size() + instr.task_background.size() + text_ori.size() + 2);
    material.append(kPromptTemplateId).push_back('\x1f');
    material.append(instr.task_background).push_back('\x1f');
    material.append(text_ori);
    return sha256_hex(material);
}

Prompt build_prompt(const TaskInstruction& instr, std::string_view text) {
    instr.validate();
    std::string p;
    p += "[template ";
    p += kPromptTemplateId;
    p += ", output schema ";
    p += instr.output_schema_version;
    p += "]\n";
    p += "You prepare node texts of a text-attributed graph for the downstream task below.\n";
    p += "Task background: ";
    p += instr.task_background;
    p += "\n\n";
    p += "Split the node text into two parts:\n";
    p += "- \"relevant\": the sentences that carry information useful for the task.\n";
    p += "- \"irrelevant\": every other sentence (opinions, filler, off-topic remarks).\n";
    p += "Copy sentences verbatim and keep their order. Do not paraphrase, add or drop content. "
         "Use an empty string for a part with no sentences.\n\n";
    p += kNodeTextMarker;
    p += json{{"text", std::string(text)}}.dump();
    p += "\n\n";
    p += "Respond with a single JSON object and nothing else, exactly of the form "
         "{\"relevant\": \"...\", \"irrelevant\": \"...\"}.";
    return {std::move(p), is_blank(text)};
}

std::optional<std::string> extract_node_text(std::string_view prompt) {
    const auto at = prompt.find(kNodeTextMarker);
    if (at == std::string_view::npos) return std::nullopt;
    auto rest = prompt.substr(at + kNodeTextMarker.size());
    rest = rest.substr(0, rest.find('\n'));
    try {
        const json j = json::parse(rest);
        return j.at("text").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

SplitText parse_response(std::string_view raw) {
    using K = ParseError::Kind;
    for (std::size_t open = raw.find('{'); open != std::string_view::npos;
         open = raw.find('{', open + 1)) {
        const std::size_t end = balanced_object_end(raw, open);
        if (end == std::string_view::npos) continue;
        json obj = json::parse(raw.substr(open, end - open), nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) continue;

        for (const char* key : {"relevant", "irrelevant"}) {
            if (!obj.contains(key) || !obj[key].is_string()) {
                throw ParseError(K::MissingKey, std::string("response lacks string key '") + key + "'");
            }
        }
        SplitText out{obj["relevant"].get<std::string>(), obj["irrelevant"].get<std::string>()};
        if (is_blank(out.relevant)) throw ParseError(K::EmptyRelevant, "relevant part is blank");
        return out;
    }
    throw ParseError(K::NoJsonObject, "no JSON object in response");
}

SplitText mock_decouple(std::string_view text, const std::vector<std::string>& lexicon) {
    if (lexicon.empty()) throw std::invalid_argument("mock_decouple: lexicon must be non-empty");
    std::vector<std::vector<std::string>> keywords;
    keywords.reserve(lexicon.size());
    for (const auto& k : lexicon) keywords.push_back(tokenize(k));

    std::vector<std::string_view> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '?' && c != '!') continue;
        while (i + 1 < text.size() && (text[i + 1] == '.' || text[i + 1] == '?' || text[i + 1] == '!')) ++i;
        sentences.push_back(text.substr(start, i + 1 - start));
        start = i + 1;
    }
    if (start < text.size()) sentences.push_back(text.substr(start));

    SplitText out;
    std::size_t matched = 0, nonblank = 0;
    for (auto s : sentences) {
        s = trim(s);
        if (s.empty()) continue;
        ++nonblank;
        const auto toks = tokenize(s);
        const bool hit = std::any_of(keywords.begin(), keywords.end(),
                                     [&](const auto& kw) { return contains_keyword(toks, kw); });
        if (hit) {
            ++matched;
            append_sentence(out.relevant, s);
        } else {
            append_sentence(out.irrelevant, s);
        }
    }
    if (matched == 0) return {"", std::string(text)};
    if (matched == nonblank) return {std::string(text), ""};
    return out;
}

std::string chat_request_to_json(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    return json{{"model", req.model}, {"messages", messages}, {"temperature", req.temperature}}.dump();
}

std::optional<std::string> extract_chat_content(std::string_view body) {
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

HttpBackendConfig resolve_backend_config(const std::function<const char*(const char*)>& getenv,
                                         const std::string& base_override,
                                         const std::string& model_override) {
    auto read = [&](const char* name, const std::string& override_value) -> std::string {
        if (!override_value.empty()) return override_value;
        const char* v = getenv(name);
        if (v == nullptr || *v == '\0') {
            throw ConfigError(std::string("llm backend requires environment variable ") + name);
        }
        return v;
    };
    HttpBackendConfig cfg;
    cfg.api_key = read("LLM_API_KEY", "");
    cfg.base_url = read("LLM_API_BASE", base_override);
    cfg.model = read("LLM_MODEL", model_override);
    return cfg;
}

MockChatTransport::MockChatTransport(std::vector<std::string> lexicon) : lexicon_(std::move(lexicon)) {
    if (lexicon_.empty()) throw std::invalid_argument("mock backend needs a non-empty lexicon");
}

ChatReply MockChatTransport::send(const ChatRequest& req) {
    if (req.messages.empty()) return {400, "", "no messages"};
    const auto text = extract_node_text(req.messages.back().content);
    if (!text) return {400, "", "prompt carries no node text"};
    const auto split = mock_decouple(*text, lexicon_);
    const json content = {{"relevant", split.relevant}, {"irrelevant", split.irrelevant}};
    const json body = {
        {"model", req.model},
        {"choices", json::array({{{"index", 0},
                                  {"message", {{"role", "assistant"}, {"content", content.dump()}}}}})}};
    return {200, body.dump(), ""};
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(backoff_factor, retry - 1);
    return std::chrono::milliseconds(static_cast<std::chrono::milliseconds::rep>(std::llround(ms)));
}

std::vector<DecoupleRecord> read_records(const std::filesystem::path& path) {
    std::vector<DecoupleRecord> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError("cannot open cache " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(record_from_json_line(line));
        } catch (const std::exception& e) {
            throw CacheError("corrupt cache " + path.string() + " line " + std::to_string(lineno) +
                             ": " + e.what());
        }
    }
    return out;
}

std::map<std::string, DecoupleRecord> load_cache(const std::filesystem::path& path) {
    std::map<std::string, DecoupleRecord> cache;
    for (auto& r : read_records(path)) {
        if (r.status == DecoupleStatus::Ok) cache.insert_or_assign(r.prompt_hash, std::move(r));
    }
    return cache;
}

std::vector<DecoupleRecord> assemble_records(const TextAttributedGraph& g,
                                             const std::vector<DecoupleRecord>& all) {
    std::vector<const DecoupleRecord*> pick(g.num_nodes(), nullptr);
    for (const auto& r : all) {
        if (r.node_id < g.num_nodes() && r.text_ori == g.texts()[r.node_id]) pick[r.node_id] = &r;
    }
    std::vector<DecoupleRecord> out;
    out.reserve(g.num_nodes());
    for (std::size_t i = 0; i < pick.size(); ++i) {
        if (pick[i] == nullptr) {
            throw std::invalid_argument("no decouple record for node " + std::to_string(i) +
                                        " matching the graph text");
        }
        out.push_back(*pick[i]);
    }
    return out;
}

namespace {

class NodeDecoupler {
public:
    NodeDecoupler(const TaskInstruction& instr, ChatTransport& transport,
                  const DecoupleOptions& opts, std::atomic<std::size_t>& requests)
        : instr_(instr), transport_(transport), opts_(opts), requests_(requests) {}

    DecoupleRecord run(std::size_t node, const std::string& text, const std::string& hash) const {
        const Prompt prompt = build_prompt(instr_, text);
        if (prompt.empty_input) return degraded_record(node, text, opts_.model_id, hash);

        ChatRequest req{opts_.model_id, {{"user", prompt.text}}, opts_.temperature};
        int transport_failures = 0;
        int parse_retries = 0;
        while (true) {
            const ChatReply reply = transport_.send(req);
            requests_.fetch_add(1, std::memory_order_relaxed);

            const bool retryable =
                reply.status == 0 || reply.status == 429 || (reply.status >= 500 && reply.status < 600);
            if (retryable) {
                if (++transport_failures >= opts_.retry.max_attempts) break;
                sleep(opts_.retry.delay_before_retry(transport_failures));
                continue;
            }
            if (reply.status < 200 || reply.status >= 300) break;

            try {
                const auto content = extract_chat_content(reply.body);
                if (!content) throw ParseError(ParseError::Kind::NoJsonObject, "no message content");
                auto split = parse_response(*content);
                return {node, text, std::move(split.relevant), std::move(split.irrelevant),
                        opts_.model_id, hash, DecoupleStatus::Ok};
            } catch (const ParseError&) {
                if (parse_retries++ >= opts_.retry.parse_retries) break;
                req.messages.back().content = prompt.text + std::string(kJsonOnlyReminder);
            }
        }
        return degraded_record(node, text, opts_.model_id, hash);
    }

private:
    void sleep(std::chrono::milliseconds d) const {
        if (opts_.sleep) opts_.sleep(d);
        else std::this_thread::sleep_for(d);
    }

    const TaskInstruction& instr_;
    ChatTransport& transport_;
    const DecoupleOptions& opts_;
    std::atomic<std::size_t>& requests_;
};

// Appends finished records to the cache strictly in node order.
class OrderedAppender {
public:
    OrderedAppender(std::optional<std::filesystem::path> path, std::vector<bool> skip)
        : skip_(std::move(skip)), done_(skip_.size(), false), pending_(skip_.size()) {
        if (path) {
            out_.open(*path, std::ios::binary | std::ios::app);
            if (!out_) throw CacheError("cannot append to cache " + path->string());
        }
    }

    void complete(std::size_t node, const DecoupleRecord& r) {
        std::lock_guard lock(mu_);
        pending_[node] = r;
        done_[node] = true;
        while (next_ < done_.size() && (skip_[next_] || done_[next_])) {
            if (!skip_[next_] && out_.is_open()) out_ << record_to_json_line(pending_[next_]) << '\n';
            ++next_;
        }
        if (out_.is_open()) out_.flush();
    }

    void flush_skipped_tail() {
        std::lock_guard lock(mu_);
        while (next_ < done_.size() && skip_[next_]) ++next_;
    }

private:
    std::mutex mu_;
    std::ofstream out_;
    std::vector<bool> skip_;
    std::vector<bool> done_;
    std::vector<DecoupleRecord> pending_;
    std::size_t next_ = 0;
};

}  // namespace

DecoupleResult decouple_graph(const TextAttributedGraph& g, const TaskInstruction& instr,
                              ChatTransport& transport, const DecoupleOptions& options) {
    instr.validate();
    const std::size_t n = g.num_nodes();
    const auto cache =
        options.cache_path ? load_cache(*options.cache_path) : std::map<std::string, DecoupleRecord>{};

    DecoupleResult result;
    result.records.resize(n);
    std::vector<std::string> hashes(n);
    std::vector<bool> cached(n, false);
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < n; ++i) {
        hashes[i] = prompt_hash(instr, g.texts()[i]);
        if (auto it = cache.find(hashes[i]); it != cache.end()) {
            result.records[i] = it->second;
            result.records[i].node_id = i;
            cached[i] = true;
            ++result.stats.cache_hits;
        } else {
            todo.push_back(i);
        }
    }

    std::atomic<std::size_t> requests{0};
    OrderedAppender appender(options.cache_path, cached);
    appender.flush_skipped_tail();
    const NodeDecoupler worker(instr, transport, options, requests);

    std::atomic<std::size_t> cursor{0};
    auto drain = [&] {
        for (std::size_t k = cursor.fetch_add(1); k < todo.size(); k = cursor.fetch_add(1)) {
            const std::size_t node = todo[k];
            try {
                result.records[node] = worker.run(node, g.texts()[node], hashes[node]);
            } catch (const std::exception&) {
                result.records[node] =
                    degraded_record(node, g.texts()[node], options.model_id, hashes[node]);
            }
            appender.complete(node, result.records[node]);
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(options.concurrency, 1), todo.size());
    if (threads <= 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
    }

    result.stats.requests_issued = requests.load();
    for (const auto& r : result.records) {
        if (r.status == DecoupleStatus::Ok) ++result.stats.ok;
        else ++result.stats.degraded;
    }
    return result;
}

}  // namespace sdmscr
