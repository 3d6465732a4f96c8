#include "chainforge/backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace chainforge {
namespace {

struct Endpoint {
    std::string origin;
    std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint must include a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ValidationError("unsupported endpoint scheme: " + scheme);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) e.base_path = url.substr(path_start);
    while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
    if (e.origin.size() <= scheme_end + 3) throw ValidationError("endpoint has no host: " + url);
    return e;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

// RAII slot in the client's in-flight budget.
class InFlight {
public:
    explicit InFlight(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
    ~InFlight() { sem_.release(); }
    InFlight(const InFlight&) = delete;
    InFlight& operator=(const InFlight&) = delete;

private:
    std::counting_semaphore<>& sem_;
};

class HttpSession final : public ChainSession {
public:
    explicit HttpSession(std::shared_ptr<ChatClient> client) : client_(std::move(client)) {}
    std::string next(std::span<const ChatMessage> messages) override { return client_->complete(messages); }

private:
    std::shared_ptr<ChatClient> client_;
};

}  // namespace

HttpStatusError::HttpStatusError(int status, const std::string& body)
    : BackendError("chat completion returned HTTP " + std::to_string(status) +
                   (body.empty() ? std::string() : ": " + body.substr(0, 200))),
      status_(status) {}

void BackendConfig::validate() const {
    split_endpoint(endpoint);
    if (model.empty()) throw ValidationError("backend model name is empty");
    if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (timeout.count() <= 0) throw ValidationError("timeout must be > 0");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    if (temperature < 0) throw ValidationError("temperature must be >= 0");
}

nlohmann::json BackendConfig::to_json() const {
    return {{"endpoint", endpoint},
            {"model", model},
            {"temperature", temperature},
            {"timeout_ms", timeout.count()},
            {"max_retries", max_retries},
            {"api_key_env", api_key_env},
            {"retry_backoff_ms", retry_backoff.count()},
            {"max_in_flight", max_in_flight}};
}

BackendConfig BackendConfig::from_json(const nlohmann::json& j) {
    BackendConfig c;
    try {
        c.endpoint = j.value("endpoint", c.endpoint);
        c.model = j.value("model", c.model);
        c.temperature = j.value("temperature", c.temperature);
        c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
        c.max_retries = j.value("max_retries", c.max_retries);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", c.retry_backoff.count()));
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("backend config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json chat_request_body(std::span<const ChatMessage> messages, const BackendConfig& cfg) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& m : messages) list.push_back(to_json(m));
    return {{"model", cfg.model}, {"messages", std::move(list)}, {"temperature", cfg.temperature}};
}

std::string parse_chat_response(std::string_view body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ResponseFormatError(std::string("chat completion body is not JSON: ") + e.what());
    }
    const auto* choices = j.is_object() && j.contains("choices") ? &j["choices"] : nullptr;
    if (choices == nullptr || !choices->is_array() || choices->empty()) {
        throw ResponseFormatError("chat completion has no choices");
    }
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
        !first["message"].contains("content") || !first["message"]["content"].is_string()) {
        throw ResponseFormatError("chat completion choice has no message content");
    }
    return first["message"]["content"].get<std::string>();
}

ChatClient::ChatClient(BackendConfig cfg) : cfg_(std::move(cfg)), in_flight_(cfg_.max_in_flight) {
    cfg_.validate();
    auto e = split_endpoint(cfg_.endpoint);
    origin_ = std::move(e.origin);
    path_ = e.base_path + "/v1/chat/completions";
}

std::string ChatClient::complete(std::span<const ChatMessage> messages) {
    if (messages.empty()) throw ValidationError("chat_complete needs at least the prompt message");
    const std::string body = chat_request_body(messages, cfg_).dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);

    std::string last_error;
    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(cfg_.retry_backoff * (1 << std::min(attempt - 1, 10)));

        httplib::Result res;
        {
            InFlight slot(in_flight_);
            httplib::Client cli(origin_);
            cli.set_connection_timeout(secs.count(), usecs.count());
            cli.set_read_timeout(secs.count(), usecs.count());
            cli.set_write_timeout(secs.count(), usecs.count());
            res = cli.Post(path_, headers, body, "application/json");
        }

        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return parse_chat_response(res->body);
        if (!retryable_status(res->status)) throw HttpStatusError(res->status, res->body);
        last_status = res->status;
        last_body = res->body;
    }
    if (last_status != 0) throw HttpStatusError(last_status, last_body);
    throw TransportError("chat completion transport failure after " + std::to_string(cfg_.max_retries + 1) +
                         " attempts: " + last_error);
}

std::string chat_complete(std::span<const ChatMessage> messages, const BackendConfig& cfg) {
    ChatClient client(cfg);
    return client.complete(messages);
}

HttpBackend::HttpBackend(BackendConfig cfg) : client_(std::make_shared<ChatClient>(std::move(cfg))) {}

std::unique_ptr<ChainSession> HttpBackend::open(const ProblemSpec&, std::uint64_t) {
    return std::make_unique<HttpSession>(client_);
}

nlohmann::json HttpBackend::describe() const {
    const auto& c = client_->config();
    return {{"kind", "http"}, {"endpoint", c.endpoint}, {"model", c.model}, {"temperature", c.temperature}};
}

}  // namespace chainforge
