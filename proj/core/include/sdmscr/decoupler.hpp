#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdmscr/graph.hpp"

namespace sdmscr {

inline constexpr std::string_view kPromptTemplateId = "sdm-decouple-v1";

/// Global (never per-node) description of the downstream task.
struct TaskInstruction {
    std::string task_background;
    std::string output_schema_version = "1";

    void validate() const;
};

enum class DecoupleStatus { Ok, Degraded, Failed };

std::string_view to_string(DecoupleStatus s);
DecoupleStatus parse_status(std::string_view s);

struct DecoupleRecord {
    std::size_t node_id = 0;
    std::string text_ori;
    std::string text_rel;
    std::string text_irr;
    std::string model_id;
    std::string prompt_hash;
    DecoupleStatus status = DecoupleStatus::Ok;

    bool operator==(const DecoupleRecord&) const = default;
};

/// One JSONL line (no trailing newline).
std::string record_to_json_line(const DecoupleRecord& r);
DecoupleRecord record_from_json_line(std::string_view line);

std::string sha256_hex(std::string_view data);

/// SHA-256 over template id, task background and node text, each separated
/// by a 0x1F unit separator.
std::string prompt_hash(const TaskInstruction& instr, std::string_view text_ori);

struct Prompt {
    std::string text;
    /// Node text was empty: nothing to split, the caller should fall back.
    bool empty_input = false;
};

Prompt build_prompt(const TaskInstruction& instr, std::string_view text);

/// Recovers the node text embedded in a prompt built by build_prompt.
std::optional<std::string> extract_node_text(std::string_view prompt);

inline constexpr std::string_view kJsonOnlyReminder =
    "\n\nReminder: respond with JSON only: a single object with the keys \"relevant\" and "
    "\"irrelevant\", no other text.";

class ParseError : public std::runtime_error {
public:
    enum class Kind { NoJsonObject, MissingKey, EmptyRelevant };
    ParseError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct SplitText {
    std::string relevant;
    std::string irrelevant;
    bool operator==(const SplitText&) const = default;
};

/// Pulls {"relevant", "irrelevant"} out of the first balanced JSON object in
/// `raw`; surrounding prose is ignored.
SplitText parse_response(std::string_view raw);

/// Rule-based split: sentences (ending in '.', '?' or '!') that contain a
/// lexicon keyword as whole words, case-insensitively, go to `relevant`.
SplitText mock_decouple(std::string_view text, const std::vector<std::string>& lexicon);

// ---- backend transport -------------------------------------------------------

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
};

std::string chat_request_to_json(const ChatRequest& req);

/// `status` is the HTTP status, or 0 when the request never completed.
struct ChatReply {
    int status = 0;
    std::string body;
    std::string error;
};

/// Returns choices[0].message.content of a chat-completion response body.
std::optional<std::string> extract_chat_content(std::string_view body);

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    /// Must be safe to call from several threads at once.
    virtual ChatReply send(const ChatRequest& req) = 0;
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string api_key;
    std::string model;
    std::chrono::seconds timeout{60};
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads LLM_API_BASE, LLM_API_KEY and LLM_MODEL through `getenv`;
/// non-empty overrides win over the environment.
HttpBackendConfig resolve_backend_config(
    const std::function<const char*(const char*)>& getenv, const std::string& base_override = {},
    const std::string& model_override = {});

/// POSTs to {base_url}/chat/completions.
std::unique_ptr<ChatTransport> make_http_transport(const HttpBackendConfig& cfg);

/// Answers chat requests locally with mock_decouple on the prompt's node text.
class MockChatTransport final : public ChatTransport {
public:
    explicit MockChatTransport(std::vector<std::string> lexicon);
    ChatReply send(const ChatRequest& req) override;

private:
    std::vector<std::string> lexicon_;
};

inline constexpr std::string_view kMockModelId = "mock-lexicon";

// ---- batch decoupling ----------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    double backoff_factor = 2.0;
    int parse_retries = 1;

    /// Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay_before_retry(int retry) const;
};

struct DecoupleOptions {
    std::string model_id;
    double temperature = 0.0;
    std::size_t concurrency = 4;
    RetryPolicy retry;
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
    std::optional<std::filesystem::path> cache_path;
};

struct DecoupleStats {
    std::size_t requests_issued = 0;
    std::size_t cache_hits = 0;
    std::size_t ok = 0;
    std::size_t degraded = 0;
};

struct DecoupleResult {
    std::vector<DecoupleRecord> records;  // node order
    DecoupleStats stats;
};

class CacheError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every record in a JSONL cache file, in file order. A missing file is empty.
std::vector<DecoupleRecord> read_records(const std::filesystem::path& path);

/// prompt_hash -> record, for status=ok records (later lines win).
std::map<std::string, DecoupleRecord> load_cache(const std::filesystem::path& path);

/// Picks, per node, the last record whose text_ori matches the graph.
/// Throws std::invalid_argument if any node is left without a record.
std::vector<DecoupleRecord> assemble_records(const TextAttributedGraph& g,
                                             const std::vector<DecoupleRecord>& all);

/// Decouples every node's text. Cached ok records (by prompt hash) are reused
/// without a backend call; backend failures degrade the node to
/// (rel = ori, irr = "") and never abort the batch. New records are appended
/// to the cache in node order.
DecoupleResult decouple_graph(const TextAttributedGraph& g, const TaskInstruction& instr,
                              ChatTransport& transport, const DecoupleOptions& options);

}  // namespace sdmscr
