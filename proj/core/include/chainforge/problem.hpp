#pragma once

#include "chainforge/command.hpp"
#include "chainforge/rational.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace chainforge {

// Task ids follow the dataset index convention: i_t = 0 for GSM8K, 1 for FOL.
enum class Task { Gsm8k = 0, Fol = 1 };

std::string_view task_name(Task task);  // "gsm8k" / "fol"
Task parse_task(std::string_view name);  // throws ValidationError

// Largest problem index per task.
int max_problem_index(Task task);

// (i_t, i_n, i_p): task, position of n_max in the configured list, problem.
struct DatasetIndex {
    int task = 0;
    int nmax = 0;
    int problem = 0;

    friend auto operator<=>(const DatasetIndex&, const DatasetIndex&) = default;
};

struct ExpectedCall {
    std::string name;
    std::vector<std::pair<std::string, std::string>> args;

    // Same name, same keyword set, same literal text per keyword.
    bool matches(const FunctionCall& call) const;
};

struct ExpectedTrace {
    std::vector<ExpectedCall> calls;
};

struct GoldAnswer {
    Rational value;
};

using VerifierData = std::variant<ExpectedTrace, GoldAnswer>;

struct ProblemSpec {
    Task task = Task::Fol;
    int problem = 0;  // i_p
    std::string persona;
    std::string question;
    std::vector<std::string> functions;
    VerifierData verifier;
    // Ideal command sequence; drives the scripted mock backend.
    std::vector<std::string> reference_chain;
    // Provenance label, e.g. "reconstruction".
    std::string source;

    bool offers(std::string_view function) const;
};

// Throws ValidationError when an invariant does not hold.
void validate(const ProblemSpec& problem);

// Per-chain mutable record of what the dispatcher executed.
struct ExecutedCall {
    FunctionCall call;
    std::string result;
};

struct ChainState {
    // Predicate calls that dispatched without error, in order.
    std::vector<ExecutedCall> predicates;
    std::optional<Rational> last_value;
    std::optional<bool> last_verdict;
    bool stopped = false;
};

}  // namespace chainforge
