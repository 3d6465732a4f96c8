#pragma once

#include "chainforge/error.hpp"
#include "chainforge/problem.hpp"
#include "chainforge/random.hpp"
#include "chainforge/transcript.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace chainforge {

// ---------------------------------------------------------------------------
// Errors surfaced by the chat-completion client. Each failure family has its
// own type so callers can tell infrastructure trouble from bad servers.

class BackendError : public Error {
public:
    using Error::Error;
};

// Connection refused, timeout, DNS failure... after all retries.
class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class HttpStatusError : public BackendError {
public:
    HttpStatusError(int status, const std::string& body);
    int status() const { return status_; }

private:
    int status_;
};

// 2xx response whose body is not a chat completion.
class ResponseFormatError : public BackendError {
public:
    using BackendError::BackendError;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP client.

struct BackendConfig {
    std::string endpoint = "http://127.0.0.1:8000";
    std::string model = "meta-llama/Meta-Llama-3-70B-Instruct";
    double temperature = 0.7;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::milliseconds retry_backoff{500};
    int max_in_flight = 4;

    void validate() const;  // throws ValidationError
    nlohmann::json to_json() const;
    static BackendConfig from_json(const nlohmann::json& j);
};

// {model, messages:[{role,content}...], temperature}
nlohmann::json chat_request_body(std::span<const ChatMessage> messages, const BackendConfig& cfg);

// choices[0].message.content; throws ResponseFormatError.
std::string parse_chat_response(std::string_view body);

class ChatClient {
public:
    explicit ChatClient(BackendConfig cfg);
    ChatClient(const ChatClient&) = delete;
    ChatClient& operator=(const ChatClient&) = delete;

    // POST {endpoint}/v1/chat/completions. Retries transport failures, 408,
    // 429 and 5xx up to max_retries with exponential backoff. Thread-safe;
    // at most max_in_flight requests run at once.
    std::string complete(std::span<const ChatMessage> messages);

    const BackendConfig& config() const { return cfg_; }

private:
    BackendConfig cfg_;
    std::string origin_;     // scheme://host[:port]
    std::string path_;       // base path + /v1/chat/completions
    std::counting_semaphore<> in_flight_;
};

std::string chat_complete(std::span<const ChatMessage> messages, const BackendConfig& cfg);

// ---------------------------------------------------------------------------
// Backend abstraction consumed by the agent engine. A session serves one chain.

class ChainSession {
public:
    virtual ~ChainSession() = default;
    // messages[0] is the rendered prompt, followed by the chain so far.
    virtual std::string next(std::span<const ChatMessage> messages) = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::unique_ptr<ChainSession> open(const ProblemSpec& problem, std::uint64_t chain_seed) = 0;
    // Settings recorded into dataset manifests.
    virtual nlohmann::json describe() const = 0;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg);
    std::unique_ptr<ChainSession> open(const ProblemSpec& problem, std::uint64_t chain_seed) override;
    nlohmann::json describe() const override;

private:
    std::shared_ptr<ChatClient> client_;
};

// ---------------------------------------------------------------------------
// Deterministic mock standing in for a large teacher model.

struct MockPolicy {
    std::uint64_t seed = 0;
    double error_rate = 0.0;           // chance a turn is emitted malformed
    double premature_stop_rate = 0.0;  // chance a turn jumps to CheckCorrectChain()
    std::vector<std::string> script;   // ideal command sequence for the problem

    void validate() const;  // throws ValidationError
};

// Malformed variant of a command: quotes stripped (the unquoted-value fault);
// if that still parses, the closing parenthesis is dropped as well.
std::string corrupt_command(const std::string& command);

// Next assistant message. Walks the history to find the next scripted command
// (commands answered with "Error: ..." are retried, anything after a
// CheckCorrectChain() is Stop()), then draws exactly two uniforms from rng:
// the first may replace the command with a premature CheckCorrectChain(), the
// second may corrupt it.
std::string mock_next(std::span<const ChatMessage> messages, const MockPolicy& policy, Rng& rng);

class MockBackend final : public Backend {
public:
    MockBackend(double error_rate, double premature_stop_rate);
    std::unique_ptr<ChainSession> open(const ProblemSpec& problem, std::uint64_t chain_seed) override;
    nlohmann::json describe() const override;

private:
    double error_rate_;
    double premature_stop_rate_;
};

}  // namespace chainforge
