#include "chainforge/backend.hpp"

#include <algorithm>

namespace chainforge {
namespace {

constexpr std::string_view kCheck = "CheckCorrectChain()";
constexpr std::string_view kStop = "Stop()";

bool names(const std::string& content, std::string_view name) {
    const auto parsed = parse_call(content);
    const auto* call = std::get_if<FunctionCall>(&parsed);
    return call != nullptr && call->name == name;
}

bool is_error_reply(const std::string& content) {
    return content.rfind("Error:", 0) == 0;
}

class MockSession final : public ChainSession {
public:
    explicit MockSession(MockPolicy policy) : policy_(std::move(policy)), rng_(policy_.seed) {}
    std::string next(std::span<const ChatMessage> messages) override { return mock_next(messages, policy_, rng_); }

private:
    MockPolicy policy_;
    Rng rng_;
};

}  // namespace

void MockPolicy::validate() const {
    if (!(error_rate >= 0.0 && error_rate <= 1.0)) throw ValidationError("mock error_rate must lie in [0, 1]");
    if (!(premature_stop_rate >= 0.0 && premature_stop_rate <= 1.0)) {
        throw ValidationError("mock premature_stop_rate must lie in [0, 1]");
    }
    for (const auto& cmd : script) {
        if (std::holds_alternative<SyntaxFault>(parse_call(cmd))) {
            throw ValidationError("mock script command does not parse: " + cmd);
        }
    }
}

std::string corrupt_command(const std::string& command) {
    std::string out;
    std::copy_if(command.begin(), command.end(), std::back_inserter(out), [](char c) { return c != '"'; });
    if (std::holds_alternative<FunctionCall>(parse_call(out))) {
        const auto close = out.rfind(')');
        if (close != std::string::npos) out.erase(close, 1);
    }
    return out;
}

std::string mock_next(std::span<const ChatMessage> messages, const MockPolicy& policy, Rng& rng) {
    std::size_t cursor = 0;
    bool after_check = false;
    for (std::size_t i = 0; i + 1 < messages.size(); ++i) {
        if (messages[i].role != Role::Assistant || messages[i + 1].role != Role::User) continue;
        const auto& command = messages[i].content;
        if (is_error_reply(messages[i + 1].content)) continue;
        if (cursor < policy.script.size() && command == policy.script[cursor]) ++cursor;
        after_check = names(command, "CheckCorrectChain");
    }

    std::string intended;
    if (after_check || cursor >= policy.script.size()) {
        intended = kStop;
    } else {
        intended = policy.script[cursor];
    }

    const double jump = uniform01(rng);
    const double fault = uniform01(rng);
    if (intended != kCheck && intended != kStop && jump < policy.premature_stop_rate) intended = kCheck;
    if (fault < policy.error_rate) intended = corrupt_command(intended);
    return intended;
}

MockBackend::MockBackend(double error_rate, double premature_stop_rate)
    : error_rate_(error_rate), premature_stop_rate_(premature_stop_rate) {
    MockPolicy{0, error_rate_, premature_stop_rate_, {}}.validate();
}

std::unique_ptr<ChainSession> MockBackend::open(const ProblemSpec& problem, std::uint64_t chain_seed) {
    MockPolicy policy{chain_seed, error_rate_, premature_stop_rate_, problem.reference_chain};
    policy.validate();
    return std::make_unique<MockSession>(std::move(policy));
}

nlohmann::json MockBackend::describe() const {
    return {{"kind", "mock"}, {"error_rate", error_rate_}, {"premature_stop_rate", premature_stop_rate_}};
}

}  // namespace chainforge
