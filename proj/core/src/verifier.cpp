#include "chainforge/verifier.hpp"

#include "chainforge/error.hpp"
#include "chainforge/functions.hpp"

namespace chainforge {
namespace {

bool is_call_to(const std::string& content, std::string_view name) {
    const auto parsed = parse_call(content);
    const auto* call = std::get_if<FunctionCall>(&parsed);
    return call != nullptr && call->name == name && call->args.empty();
}

}  // namespace

std::string_view label_name(Label label) {
    return label == Label::Right ? "right" : "wrong";
}

bool check_correct_chain(const ChainState& state, const ProblemSpec& problem) {
    if (const auto* trace = std::get_if<ExpectedTrace>(&problem.verifier)) {
        if (state.predicates.size() != trace->calls.size()) return false;
        for (std::size_t i = 0; i < trace->calls.size(); ++i) {
            const auto& executed = state.predicates[i];
            if (!trace->calls[i].matches(executed.call) || executed.result != "True") return false;
        }
        return true;
    }
    const auto& gold = std::get<GoldAnswer>(problem.verifier);
    return state.last_value.has_value() && *state.last_value == gold.value;
}

int count_iterations(std::span<const ChatMessage> turns) {
    if (turns.size() % 2 != 0) {
        throw StructureError("transcript has an unanswered assistant turn (" + std::to_string(turns.size()) +
                             " messages)");
    }
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const Role expected = i % 2 == 0 ? Role::Assistant : Role::User;
        if (turns[i].role != expected) {
            throw StructureError("turn " + std::to_string(i) + " has role " + std::string(role_name(turns[i].role)) +
                                 ", expected " + std::string(role_name(expected)));
        }
    }
    return static_cast<int>(turns.size() / 2);
}

ChainLabel classify_chain(std::span<const ChatMessage> turns, int n_max) {
    const int iterations = count_iterations(turns);
    bool verified = false;
    bool stopped_after = false;
    for (std::size_t i = 0; i + 1 < turns.size(); i += 2) {
        const auto& command = turns[i].content;
        const auto& reply = turns[i + 1].content;
        if (!verified && reply == "True" && is_call_to(command, "CheckCorrectChain")) {
            verified = true;
        } else if (verified && reply == kProgramStopped && is_call_to(command, "Stop")) {
            stopped_after = true;
        }
    }
    const bool right = verified && stopped_after && iterations <= n_max;
    return {right ? Label::Right : Label::Wrong, iterations};
}

}  // namespace chainforge
