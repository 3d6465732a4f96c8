#pragma once

#include "chainforge/backend.hpp"
#include "chainforge/functions.hpp"
#include "chainforge/pack.hpp"
#include "chainforge/transcript.hpp"
#include "chainforge/verifier.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chainforge {

enum class ChainStatus { Complete, Aborted };

struct ChainTranscript {
    std::string prompt;
    std::vector<ChatMessage> turns;  // assistant/user alternation
    std::optional<ChainLabel> label;
    ChainStatus status = ChainStatus::Complete;
    std::string abort_reason;
};

// Render the prompt, then repeat: ask the session for a command, parse it,
// dispatch it (or answer with the syntax-error message), append the pair.
// Stops after Stop() or when n_max iterations have been recorded. A backend
// failure yields an Aborted transcript without a label.
ChainTranscript run_chain(const ProblemSpec& problem, const FunctionRegistry& registry, ChainSession& session,
                          int n_max);

// ---------------------------------------------------------------------------
// On-disk dataset D*:
//   <root>/{fol|gsm8k}/nmax_<n>/problem_<i_p>/prompt.txt
//   <root>/.../right/<j>.jsonl, <root>/.../wrong/<k>.jsonl
//   <root>/manifest.json

struct PromptRecord {
    Task task = Task::Fol;
    DatasetIndex index;
    int n_max = 10;
    int right = 0;
    int wrong = 0;
    int aborted = 0;

    std::string relative_dir() const;  // "fol/nmax_10/problem_0"
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    int n_c = 0;
    std::vector<int> n_max_values;
    nlohmann::json backend;
    std::string problems_sha256;
    std::vector<PromptRecord> prompts;  // sorted by (i_t, i_n, i_p)

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
    static DatasetManifest load(const std::filesystem::path& root);  // throws DependencyError if absent
    void save(const std::filesystem::path& root) const;

    // True when the settings (not the progress) match.
    bool same_settings(const DatasetManifest& other) const;
};

struct GenerateOptions {
    int n_c = 1000;
    std::vector<int> n_max_values{10, 20};
    std::uint64_t seed = 0;
    int workers = 1;
    int attempts_per_chain = 3;  // re-draws after aborted chains
};

// Writes D* under root. Prompts already listed in an existing manifest with
// matching settings are verified and skipped, so interrupted runs resume.
DatasetManifest generate_dataset(const ProblemPack& pack, Backend& backend, const GenerateOptions& options,
                                 const std::filesystem::path& root);

std::uint64_t chain_seed(std::uint64_t seed, const DatasetIndex& index, int chain, int attempt);

}  // namespace chainforge
