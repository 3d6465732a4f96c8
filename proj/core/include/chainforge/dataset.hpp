#pragma once

#include "chainforge/engine.hpp"
#include "chainforge/pack.hpp"
#include "chainforge/transcript.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace chainforge {

// Reference to one (x, y_w, y_l) pair inside a dataset directory; content is
// materialized only on export.
struct PairRef {
    std::uint64_t position = 0;  // index within D^a
    Task task = Task::Fol;
    DatasetIndex index;
    int n_max = 10;
    int chosen = 0;    // j: right/<j>.jsonl
    int rejected = 0;  // k: wrong/<k>.jsonl
    std::string chosen_sha256;
    std::string rejected_sha256;

    std::string prompt_dir() const;
    ProblemId problem_id() const { return {task, index.problem}; }

    friend bool operator==(const PairRef&, const PairRef&) = default;
};

struct PairIndex {
    std::filesystem::path dataset_root;
    std::vector<PairRef> pairs;
};

// Header line {"dataset": <root relative to the file>, "pairs": N}, then one
// JSON object per pair.
void save_pair_index(const PairIndex& index, const std::filesystem::path& file);
PairIndex load_pair_index(const std::filesystem::path& file);  // throws DependencyError if absent

// Per-prompt cross product of right x wrong completions. Every referenced
// transcript is read and hashed; a missing file raises IntegrityError.
PairIndex augment(const std::filesystem::path& dataset_root);

// Sum over prompts of n^i * n̄^i.
std::uint64_t augmented_size(const DatasetManifest& manifest);

struct SamplePlan {
    std::uint64_t n_s = 0;
    std::uint64_t seed = 0;
    bool replacement = false;
};

// Uniform draw of n_s pairs; output ordered by position. Throws CapacityError
// when n_s exceeds |D^a| without replacement.
PairIndex sample_pairs(const PairIndex& augmented, const SamplePlan& plan);

// Problem-level partition. Problems not listed as train are test, unless an
// explicit test set is given, in which case train and test must be disjoint
// and together cover every problem present in the pairs.
struct SplitSpec {
    std::set<ProblemId> train;
    std::optional<std::set<ProblemId>> test;
};

struct SplitResult {
    PairIndex train;
    PairIndex test;
    std::vector<std::string> warnings;
};

SplitResult split(const PairIndex& pairs, const SplitSpec& spec, const std::set<ProblemId>& universe);

// Sample-count tables: per task (train/test/overall) and per problem index.
std::string render_split_counts(const SplitResult& result);
nlohmann::json split_counts_json(const SplitResult& result);

// {"prompt": ..., "chosen": [...], "rejected": [...]} per line, in pair order.
// Transcript hashes are re-checked; a mismatch raises IntegrityError.
void export_dpo(const PairIndex& pairs, const std::filesystem::path& out_file);

struct DpoRecord {
    std::string prompt;
    std::vector<ChatMessage> chosen;
    std::vector<ChatMessage> rejected;

    friend bool operator==(const DpoRecord&, const DpoRecord&) = default;
};

std::string dpo_record_line(const DpoRecord& record);
std::vector<DpoRecord> load_dpo_jsonl(const std::filesystem::path& file);

}  // namespace chainforge
