#pragma once

#include "chainforge/functions.hpp"
#include "chainforge/problem.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <set>
#include <utility>
#include <vector>

namespace chainforge {

using ProblemId = std::pair<Task, int>;  // (task, i_p)

// Problems plus the fact store their predicates query.
struct ProblemPack {
    std::vector<ProblemSpec> problems;
    FactStore facts;
    std::set<ProblemId> default_train;

    const ProblemSpec* find(Task task, int problem) const;
};

nlohmann::json to_json(const ProblemSpec& problem);
ProblemSpec problem_from_json(const nlohmann::json& j);

// "facts" is either an inline object or a path relative to the pack file.
// Problems are returned sorted by (task, i_p); duplicates are rejected.
ProblemPack load_problem_pack(const std::filesystem::path& path);
ProblemPack problem_pack_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Canonical JSON of problems + facts; hashed into manifests.
nlohmann::json canonical_json(const ProblemPack& pack);

}  // namespace chainforge
