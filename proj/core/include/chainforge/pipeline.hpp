#pragma once

#include "chainforge/backend.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace chainforge {

enum class Stage { Generate, Augment, Sample, Split, Export, Eval, DpoCheck, Report };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);  // throws ValidationError

// Which model answers the prompts during generation.
struct BackendSpec {
    std::string kind = "mock";  // "mock" or "http"
    double error_rate = 0.0;
    double premature_stop_rate = 0.0;
    BackendConfig http;

    void validate() const;
    std::unique_ptr<Backend> make() const;
    nlohmann::json to_json() const;
    static BackendSpec from_json(const nlohmann::json& j);
};

// A model scored by the eval stage; generate writes its runs under runs/<name>.
struct ModelRun {
    std::string name;
    BackendSpec backend;
    std::optional<std::uint64_t> seed;
};

struct RunConfig {
    std::filesystem::path problems;
    std::filesystem::path output;

    BackendSpec backend;
    int n_c = 1000;
    std::vector<int> n_max{10, 20};
    std::optional<std::uint64_t> generate_seed;
    int workers = 1;
    std::vector<ModelRun> eval_models;

    std::optional<std::uint64_t> n_s;
    std::optional<std::uint64_t> sample_seed;

    std::optional<std::set<int>> train_fol;
    std::optional<std::set<int>> train_gsm8k;

    std::string export_format = "dpo-jsonl";

    double alpha = 0.05;
    std::optional<std::filesystem::path> dataset_a;
    std::optional<std::filesystem::path> dataset_b;
    std::optional<std::filesystem::path> report_dir;

    double beta = 0.1;
    std::optional<std::uint64_t> dpo_seed;

    // Command-line relocations of single artifacts; not part of the config file.
    std::optional<std::filesystem::path> dataset_path;
    std::optional<std::filesystem::path> augmented_path;

    // Relative paths in the file are resolved against the file's directory.
    static RunConfig load(const std::filesystem::path& file);
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    nlohmann::json to_json() const;

    // Hash of the settings that determine artifact content; the output location is left out.
    std::string hash() const;

    void validate_for(Stage stage) const;  // throws ValidationError

    std::filesystem::path dataset_dir() const { return dataset_path.value_or(output / "dataset"); }
    std::filesystem::path augmented_file() const { return augmented_path.value_or(pairs_dir() / "augmented.idx"); }
    std::filesystem::path pairs_dir() const { return output / "pairs"; }
    std::filesystem::path export_dir() const { return output / "export"; }
    std::filesystem::path runs_dir() const { return output / "runs"; }
    std::filesystem::path manifests_dir() const { return output / "manifests"; }
    std::filesystem::path dpo_dir() const { return output / "dpo"; }
    std::filesystem::path eval_dir() const { return report_dir.value_or(output / "report"); }
    std::filesystem::path model_a() const;
    std::filesystem::path model_b() const;
};

struct StageResult {
    Stage stage = Stage::Generate;
    bool ok = true;  // false only for dpo-check failures
    std::string summary;
    std::vector<std::filesystem::path> artifacts;
};

StageResult run_stage(Stage stage, const RunConfig& config);

// generate through report, in order.
std::vector<StageResult> run_pipeline(const RunConfig& config);

// Scores an exported DPO file under per-line log-probabilities
// (chosen_logp, rejected_logp, ref_chosen_logp, ref_rejected_logp).
struct DpoLossSummary {
    std::size_t pairs = 0;
    double beta = 0.1;
    double loss = 0.0;
    double mean_reward_margin = 0.0;
    double accuracy = 0.0;  // share of pairs with positive implicit reward margin
};

DpoLossSummary score_dpo_file(const std::filesystem::path& pairs_file, const std::filesystem::path& logprobs_file,
                              double beta);

}  // namespace chainforge
