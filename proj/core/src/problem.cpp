#include "chainforge/problem.hpp"

#include "chainforge/error.hpp"

#include <algorithm>
#include <set>

namespace chainforge {

std::string_view task_name(Task task) {
    return task == Task::Fol ? "fol" : "gsm8k";
}

Task parse_task(std::string_view name) {
    if (name == "fol" || name == "FOL") return Task::Fol;
    if (name == "gsm8k" || name == "GSM8K") return Task::Gsm8k;
    throw ValidationError("unknown task '" + std::string(name) + "' (expected fol or gsm8k)");
}

int max_problem_index(Task task) {
    return task == Task::Fol ? 5 : 8;
}

bool ExpectedCall::matches(const FunctionCall& call) const {
    if (call.name != name || call.args.size() != args.size()) return false;
    return std::all_of(args.begin(), args.end(), [&](const auto& kv) {
        const Literal* v = call.find(kv.first);
        return v != nullptr && v->text == kv.second;
    });
}

bool ProblemSpec::offers(std::string_view function) const {
    return std::find(functions.begin(), functions.end(), function) != functions.end();
}

void validate(const ProblemSpec& problem) {
    const std::string where = std::string(task_name(problem.task)) + " problem " + std::to_string(problem.problem);
    if (problem.problem < 0 || problem.problem > max_problem_index(problem.task)) {
        throw ValidationError(where + ": problem index out of range 0.." +
                              std::to_string(max_problem_index(problem.task)));
    }
    if (problem.functions.empty()) throw ValidationError(where + ": empty function set");
    if (problem.question.empty()) throw ValidationError(where + ": empty question");

    if (const auto* trace = std::get_if<ExpectedTrace>(&problem.verifier)) {
        if (problem.task != Task::Fol) throw ValidationError(where + ": expected trace on a non-FOL task");
        if (trace->calls.empty()) throw ValidationError(where + ": empty expected trace");
        static const std::set<std::string> control{"Reasoning", "Stop", "CheckCorrectChain"};
        for (const auto& c : trace->calls) {
            if (control.count(c.name)) {
                throw ValidationError(where + ": expected trace may not contain " + c.name);
            }
        }
    } else if (problem.task != Task::Gsm8k) {
        throw ValidationError(where + ": gold answer on a non-GSM8K task");
    }

    for (const auto& line : problem.reference_chain) {
        if (std::holds_alternative<SyntaxFault>(parse_call(line))) {
            throw ValidationError(where + ": reference chain command does not parse: " + line);
        }
    }
}

}  // namespace chainforge
