#pragma once

#include "chainforge/command.hpp"
#include "chainforge/problem.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chainforge {

enum class ParamKind { String, Number };
enum class Category { Reasoning, Predicate, Arithmetic, Verifier, Control };

struct Param {
    std::string name;
    ParamKind kind = ParamKind::String;
};

struct FunctionSpec {
    std::string name;
    std::vector<Param> params;
    std::string description;
    std::string example;
    Category category = Category::Reasoning;

    // "Name(a: str, b: float)"
    std::string signature() const;
};

// Offline stand-in for the movie database the predicates query.
class FactStore {
public:
    using Names = std::set<std::string, std::less<>>;
    using Credits = std::set<std::pair<std::string, std::string>>;

    FactStore() = default;
    // Throws ValidationError unless acted_in is a subset of actors x movies.
    FactStore(Names actors, Names movies, Credits acted_in);

    // {"actors":[...],"movies":[...],"acted_in":[["actor","movie"],...]}
    static FactStore from_json(const nlohmann::json& j);
    static FactStore load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    bool is_actor(std::string_view name) const { return actors_.find(name) != actors_.end(); }
    bool is_movie(std::string_view title) const { return movies_.find(title) != movies_.end(); }
    bool acted_in(const std::string& actor, const std::string& movie) const {
        return acted_in_.count({actor, movie}) > 0;
    }

private:
    Names actors_;
    Names movies_;
    Credits acted_in_;
};

enum class Effect { None, Stop, VerifierPass, VerifierFail };

struct DispatchResult {
    std::string content;  // body of the user-role reply
    Effect effect = Effect::None;
    bool ok = true;       // false for runtime / unknown-command errors
};

inline constexpr std::string_view kReasoningRecorded = "The reasoning has been recorded";
inline constexpr std::string_view kProgramStopped = "The program has been stopped";

class FunctionRegistry {
public:
    explicit FunctionRegistry(FactStore facts = {});

    // Reasoning, Actor, Movie, ActsIn, Add, Subtract, Multiply, Divide,
    // CheckCorrectChain, Stop.
    static const std::vector<FunctionSpec>& builtin_specs();

    const FunctionSpec* find(std::string_view name) const;
    // Specs in the order the problem lists them; unknown names throw.
    std::vector<FunctionSpec> specs_for(const ProblemSpec& problem) const;
    const FactStore& facts() const { return facts_; }

    DispatchResult dispatch(const FunctionCall& call, const ProblemSpec& problem, ChainState& state) const;

private:
    FactStore facts_;
    std::map<std::string, FunctionSpec, std::less<>> specs_;
};

std::string render_prompt(const ProblemSpec& problem, std::span<const FunctionSpec> specs);

}  // namespace chainforge
