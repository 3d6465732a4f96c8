#include "chainforge/functions.hpp"

#include "chainforge/error.hpp"
#include "chainforge/rational.hpp"
#include "chainforge/verifier.hpp"

#include <fstream>

namespace chainforge {
namespace {

std::string error_reply(const std::string& what) {
    return "Error: " + what + ". Please try again.";
}

std::vector<FunctionSpec> make_builtins() {
    auto arith = [](std::string name, std::string description, std::string example) {
        return FunctionSpec{std::move(name),
                            {{"a", ParamKind::Number}, {"b", ParamKind::Number}},
                            std::move(description),
                            std::move(example),
                            Category::Arithmetic};
    };
    return {
        {"Reasoning", {{"reasoning", ParamKind::String}},
         "Use this function for your internal reasoning.",
         R"(Reasoning(reasoning="The next step to take is..."))", Category::Reasoning},
        {"Actor", {{"name", ParamKind::String}},
         "Predicate to check if a given name is an actor.",
         R"(Actor(name="Sean Connery"))", Category::Predicate},
        {"Movie", {{"x", ParamKind::String}},
         "Predicate that queries IMDb to determine if the argument is a movie.",
         R"(Movie(x="Goldfinger"))", Category::Predicate},
        {"ActsIn", {{"actor", ParamKind::String}, {"movie_title", ParamKind::String}},
         "Check if a specific actor acted in a given movie.",
         R"(ActsIn(actor="Sean Connery", movie_title="Goldfinger"))", Category::Predicate},
        arith("Add", "Add two numbers and return the result.", R"(Add(a="2", b="3"))"),
        arith("Subtract", "Subtract b from a and return the result.", R"(Subtract(a="5", b="3"))"),
        arith("Multiply", "Multiply two numbers and return the result.", R"(Multiply(a="6", b="7"))"),
        arith("Divide", "Divide a by b and return the result.", R"(Divide(a="10", b="4"))"),
        {"CheckCorrectChain", {}, "Check if the labels are correct.", "CheckCorrectChain()",
         Category::Verifier},
        {"Stop", {}, "Use this function to stop the program.", "Stop()", Category::Control},
    };
}

// Keyword set must equal the parameter set; number params must hold a rational.
bool arguments_fit(const FunctionSpec& spec, const FunctionCall& call) {
    if (call.args.size() != spec.params.size()) return false;
    for (const auto& p : spec.params) {
        const Literal* v = call.find(p.name);
        if (v == nullptr) return false;
        if (p.kind == ParamKind::Number && !parse_rational(v->text)) return false;
    }
    return true;
}

std::string verdict(bool b) { return b ? "True" : "False"; }

}  // namespace

std::string FunctionSpec::signature() const {
    std::string out = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i > 0) out += ", ";
        out += params[i].name;
        out += params[i].kind == ParamKind::String ? ": str" : ": float";
    }
    return out + ")";
}

FactStore::FactStore(Names actors, Names movies, Credits acted_in)
    : actors_(std::move(actors)), movies_(std::move(movies)), acted_in_(std::move(acted_in)) {
    for (const auto& [actor, movie] : acted_in_) {
        if (!is_actor(actor)) throw ValidationError("fact store: acted_in names unknown actor '" + actor + "'");
        if (!is_movie(movie)) throw ValidationError("fact store: acted_in names unknown movie '" + movie + "'");
    }
}

FactStore FactStore::from_json(const nlohmann::json& j) {
    try {
        Names actors, movies;
        Credits credits;
        for (const auto& a : j.at("actors")) actors.insert(a.get<std::string>());
        for (const auto& m : j.at("movies")) movies.insert(m.get<std::string>());
        for (const auto& pair : j.at("acted_in")) {
            if (!pair.is_array() || pair.size() != 2) {
                throw ValidationError("fact store: acted_in entries must be [actor, movie]");
            }
            credits.emplace(pair[0].get<std::string>(), pair[1].get<std::string>());
        }
        return FactStore(std::move(actors), std::move(movies), std::move(credits));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("fact store: ") + e.what());
    }
}

FactStore FactStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open fact store " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("fact store " + path.string() + ": " + e.what());
    }
}

nlohmann::json FactStore::to_json() const {
    nlohmann::json credits = nlohmann::json::array();
    for (const auto& [a, m] : acted_in_) credits.push_back({a, m});
    return {{"actors", actors_}, {"movies", movies_}, {"acted_in", credits}};
}

FunctionRegistry::FunctionRegistry(FactStore facts) : facts_(std::move(facts)) {
    for (const auto& spec : builtin_specs()) specs_.emplace(spec.name, spec);
}

const std::vector<FunctionSpec>& FunctionRegistry::builtin_specs() {
    static const std::vector<FunctionSpec> specs = make_builtins();
    return specs;
}

const FunctionSpec* FunctionRegistry::find(std::string_view name) const {
    auto it = specs_.find(name);
    return it == specs_.end() ? nullptr : &it->second;
}

std::vector<FunctionSpec> FunctionRegistry::specs_for(const ProblemSpec& problem) const {
    std::vector<FunctionSpec> out;
    for (const auto& name : problem.functions) {
        const FunctionSpec* spec = find(name);
        if (spec == nullptr) throw ValidationError("problem lists unknown function " + name);
        out.push_back(*spec);
    }
    return out;
}

DispatchResult FunctionRegistry::dispatch(const FunctionCall& call, const ProblemSpec& problem,
                                          ChainState& state) const {
    const FunctionSpec* spec = find(call.name);
    if (spec == nullptr || !problem.offers(call.name)) {
        return {error_reply("unknown command " + call.name), Effect::None, false};
    }
    if (!arguments_fit(*spec, call)) {
        return {error_reply("invalid arguments for command " + call.name), Effect::None, false};
    }

    switch (spec->category) {
        case Category::Reasoning:
            return {std::string(kReasoningRecorded), Effect::None, true};

        case Category::Predicate: {
            bool holds = false;
            if (call.name == "Actor") {
                holds = facts_.is_actor(call.find("name")->text);
            } else if (call.name == "Movie") {
                holds = facts_.is_movie(call.find("x")->text);
            } else {
                holds = facts_.acted_in(call.find("actor")->text, call.find("movie_title")->text);
            }
            state.predicates.push_back({call, verdict(holds)});
            return {verdict(holds), Effect::None, true};
        }

        case Category::Arithmetic: {
            const Rational a = *parse_rational(call.find("a")->text);
            const Rational b = *parse_rational(call.find("b")->text);
            Rational r;
            if (call.name == "Add") {
                r = a + b;
            } else if (call.name == "Subtract") {
                r = a - b;
            } else if (call.name == "Multiply") {
                r = a * b;
            } else {
                if (b == 0) return {error_reply("division by zero"), Effect::None, false};
                r = a / b;
            }
            state.last_value = r;
            return {format_rational(r), Effect::None, true};
        }

        case Category::Verifier: {
            const bool pass = check_correct_chain(state, problem);
            state.last_verdict = pass;
            return {verdict(pass), pass ? Effect::VerifierPass : Effect::VerifierFail, true};
        }

        case Category::Control:
            state.stopped = true;
            return {std::string(kProgramStopped), Effect::Stop, true};
    }
    return {error_reply("unknown command " + call.name), Effect::None, false};
}

std::string render_prompt(const ProblemSpec& problem, std::span<const FunctionSpec> specs) {
    std::string out = problem.persona;
    out += "\nYou can use the following functions:\n";
    for (const auto& spec : specs) {
        out += "\n" + spec.signature() + "\n";
        if (!spec.description.empty()) out += spec.description + "\n";
        out += "Example:\n" + spec.example + "\n";
    }
    out += "\n" + problem.question;
    return out;
}

}  // namespace chainforge
