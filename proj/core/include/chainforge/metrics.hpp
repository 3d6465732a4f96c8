#pragma once

#include "chainforge/engine.hpp"
#include "chainforge/error.hpp"
#include "chainforge/pack.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chainforge::eval {

class EmptySelectionError : public Error {
public:
    using Error::Error;
};

class MismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct ProblemScore {
    Task task = Task::Fol;
    DatasetIndex index;
    int n_max = 10;
    int n_right = 0;
    int n_wrong = 0;
    double accuracy = 0.0;  // n_right / (n_right + n_wrong)

    ProblemId problem_id() const { return {task, index.problem}; }
};

// Throws UndefinedScoreError when right + wrong == 0.
ProblemScore score_problem(int n_right, int n_wrong);

std::vector<ProblemScore> scores_from_manifest(const DatasetManifest& manifest);

enum class Subset { Train, Test, Whole };

struct Scope {
    std::optional<Task> task;   // nullopt: every task
    Subset subset = Subset::Whole;
    std::optional<int> n_max;   // nullopt: every n_max
};

struct AggregateScore {
    Scope scope;
    double value = 0.0;
    std::size_t members = 0;
};

bool in_scope(const ProblemScore& s, const Scope& scope, const std::set<ProblemId>& train);

// Unweighted mean of the selected per-problem accuracies. Throws
// EmptySelectionError if nothing is selected.
AggregateScore aggregate(std::span<const ProblemScore> scores, const Scope& scope,
                         const std::set<ProblemId>& train = {});

// ---------------------------------------------------------------------------

enum class PValueMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double w = 0.0;        // min(W+, W-)
    double w_plus = 0.0;   // rank sum of positive (second - first) differences
    double w_minus = 0.0;
    double p = 1.0;        // two-sided
    int n_effective = 0;   // pairs left after dropping zero differences
    double alpha = 0.05;
    bool significant = false;
    PValueMethod method = PValueMethod::Exact;
};

// Zero differences are dropped, tied |d| share their average rank. Auto uses
// the exact null distribution for n <= 20 and the tie-corrected normal
// approximation (with continuity correction) above. Throws
// DegenerateInputError when no nonzero difference remains.
WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> paired, double alpha = 0.05,
                                    PValueMethod method = PValueMethod::Auto);

// Average ranks (1-based) of the values; equal values within 1e-9 tie.
std::vector<double> average_ranks(std::span<const double> values);

// ---------------------------------------------------------------------------

// 0.9242 -> "92.42%"
std::string format_percent(double fraction);
// 4.8828e-4 -> "4.88e-4"
std::string format_pvalue(double p);

struct ReportInput {
    std::vector<ProblemScore> original;
    std::vector<ProblemScore> finetuned;
    std::set<ProblemId> train;
    double alpha = 0.05;
    std::string original_name = "original";
    std::string finetuned_name = "fine-tuned";
};

struct Report {
    std::string text;
    nlohmann::json json;
};

// Accuracy grid (per n_max and pooled; model x train/test/whole; FOL, GSM8K,
// overall) and the Wilcoxon grid (FOL, GSM8K, overall), as text and JSON.
// Throws MismatchError if the two models were scored on different prompts.
Report render_report(const ReportInput& input);

}  // namespace chainforge::eval
