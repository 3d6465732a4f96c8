#include "chainforge/pack.hpp"

#include "chainforge/error.hpp"

#include <algorithm>
#include <fstream>

namespace chainforge {

const ProblemSpec* ProblemPack::find(Task task, int problem) const {
    auto it = std::find_if(problems.begin(), problems.end(),
                           [&](const ProblemSpec& p) { return p.task == task && p.problem == problem; });
    return it == problems.end() ? nullptr : &*it;
}

nlohmann::json to_json(const ProblemSpec& problem) {
    nlohmann::json j = {{"task", task_name(problem.task)},
                        {"i_p", problem.problem},
                        {"persona", problem.persona},
                        {"question", problem.question},
                        {"functions", problem.functions},
                        {"reference_chain", problem.reference_chain},
                        {"source", problem.source}};
    if (const auto* trace = std::get_if<ExpectedTrace>(&problem.verifier)) {
        nlohmann::json calls = nlohmann::json::array();
        for (const auto& c : trace->calls) {
            nlohmann::json args = nlohmann::json::object();
            for (const auto& [k, v] : c.args) args[k] = v;
            calls.push_back({{"name", c.name}, {"args", args}});
        }
        j["expected_trace"] = calls;
    } else {
        j["gold_answer"] = format_rational(std::get<GoldAnswer>(problem.verifier).value);
    }
    return j;
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
    ProblemSpec p;
    try {
        p.task = parse_task(j.at("task").get<std::string>());
        p.problem = j.at("i_p").get<int>();
        p.persona = j.at("persona").get<std::string>();
        p.question = j.at("question").get<std::string>();
        p.functions = j.at("functions").get<std::vector<std::string>>();
        p.reference_chain = j.value("reference_chain", std::vector<std::string>{});
        p.source = j.value("source", std::string());
        if (j.contains("expected_trace")) {
            ExpectedTrace trace;
            for (const auto& c : j["expected_trace"]) {
                ExpectedCall call{c.at("name").get<std::string>(), {}};
                const auto args = c.value("args", nlohmann::json::object());
                for (const auto& [k, v] : args.items()) {
                    call.args.emplace_back(k, v.get<std::string>());
                }
                trace.calls.push_back(std::move(call));
            }
            p.verifier = std::move(trace);
        } else if (j.contains("gold_answer")) {
            const auto text = j["gold_answer"].is_string() ? j["gold_answer"].get<std::string>()
                                                           : j["gold_answer"].dump();
            auto value = parse_rational(text);
            if (!value) throw ValidationError("gold_answer is not a rational: " + text);
            p.verifier = GoldAnswer{*value};
        } else {
            throw ValidationError("problem needs expected_trace or gold_answer");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("problem entry: ") + e.what());
    }
    validate(p);
    return p;
}

ProblemPack problem_pack_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ProblemPack pack;
    if (!j.is_object() || !j.contains("problems")) throw ValidationError("problem pack needs a \"problems\" array");
    for (const auto& entry : j["problems"]) pack.problems.push_back(problem_from_json(entry));
    std::sort(pack.problems.begin(), pack.problems.end(), [](const ProblemSpec& a, const ProblemSpec& b) {
        return std::pair(a.task, a.problem) < std::pair(b.task, b.problem);
    });
    for (std::size_t i = 1; i < pack.problems.size(); ++i) {
        const auto& a = pack.problems[i - 1];
        const auto& b = pack.problems[i];
        if (a.task == b.task && a.problem == b.problem) {
            throw ValidationError("duplicate problem " + std::string(task_name(a.task)) + " " +
                                  std::to_string(a.problem));
        }
    }

    if (j.contains("facts")) {
        const auto& facts = j["facts"];
        pack.facts = facts.is_string() ? FactStore::load(base_dir / facts.get<std::string>())
                                       : FactStore::from_json(facts);
    }

    if (j.contains("default_split")) {
        const auto& s = j["default_split"];
        for (int i : s.value("train_fol", std::vector<int>{})) pack.default_train.emplace(Task::Fol, i);
        for (int i : s.value("train_gsm8k", std::vector<int>{})) pack.default_train.emplace(Task::Gsm8k, i);
    }

    FunctionRegistry registry(pack.facts);
    for (const auto& p : pack.problems) {
        (void)registry.specs_for(p);  // every listed function must exist
    }
    return pack;
}

ProblemPack load_problem_pack(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open problem pack " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("problem pack " + path.string() + ": " + e.what());
    }
    return problem_pack_from_json(j, path.parent_path());
}

nlohmann::json canonical_json(const ProblemPack& pack) {
    nlohmann::json problems = nlohmann::json::array();
    for (const auto& p : pack.problems) problems.push_back(to_json(p));
    return {{"problems", problems}, {"facts", pack.facts.to_json()}};
}

}  // namespace chainforge
