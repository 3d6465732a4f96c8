#pragma once

#include "chainforge/random.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chainforge::dpo {

// Sequence-level log-probabilities of one preference pair under the trained
// policy and the frozen reference.
struct PairLogProbs {
    double policy_chosen = 0.0;
    double policy_rejected = 0.0;
    double ref_chosen = 0.0;
    double ref_rejected = 0.0;
};

// -mean log sigmoid(beta * ((pc - rc) - (pr - rr))). Throws DomainError on an
// empty batch, beta <= 0, NaN inputs, or -inf under the reference.
double dpo_loss(std::span<const PairLogProbs> batch, double beta);

// Implicit reward margin beta * (Δ_chosen - Δ_rejected) of one pair.
double preference_logit(const PairLogProbs& pair, double beta);

// Numerically stable log(1 + e^x).
double softplus(double x);
double sigmoid(double x);

// ---------------------------------------------------------------------------

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::size_t prompts() const = 0;
    virtual std::size_t completions() const = 0;
    virtual double log_prob(std::size_t prompt, std::size_t completion) const = 0;
};

// Categorical over a finite completion set per prompt; softmax of a logit row.
class ToyPolicy final : public Policy {
public:
    ToyPolicy(std::size_t prompts, std::size_t completions, std::vector<double> logits);
    static ToyPolicy uniform(std::size_t prompts, std::size_t completions);
    static ToyPolicy random(std::size_t prompts, std::size_t completions, Rng& rng, double scale = 1.0);

    std::size_t prompts() const override { return prompts_; }
    std::size_t completions() const override { return completions_; }
    double log_prob(std::size_t prompt, std::size_t completion) const override;

    double logit(std::size_t prompt, std::size_t completion) const { return logits_[prompt * completions_ + completion]; }
    // Row-major [prompt x completion].
    std::span<const double> parameters() const { return logits_; }
    std::span<double> parameters() { return logits_; }

private:
    std::size_t prompts_;
    std::size_t completions_;
    std::vector<double> logits_;
};

// Explicit log-probability table; entries may be -inf.
class LogProbTable final : public Policy {
public:
    LogProbTable(std::size_t prompts, std::size_t completions, std::vector<double> log_probs);
    std::size_t prompts() const override { return prompts_; }
    std::size_t completions() const override { return completions_; }
    double log_prob(std::size_t prompt, std::size_t completion) const override {
        return table_[prompt * completions_ + completion];
    }

private:
    std::size_t prompts_;
    std::size_t completions_;
    std::vector<double> table_;
};

// (x, y_w, y_l) as ids into a toy support.
struct PreferenceIndex {
    std::size_t prompt = 0;
    std::size_t chosen = 0;
    std::size_t rejected = 0;
};

std::vector<PairLogProbs> gather(std::span<const PreferenceIndex> batch, const Policy& policy, const Policy& reference);

double dpo_loss(std::span<const PreferenceIndex> batch, const Policy& policy, const Policy& reference, double beta);

// Analytic gradient of dpo_loss with respect to policy's logits (row-major).
// Within a prompt the softmax normaliser cancels between chosen and rejected,
// leaving -beta * sigmoid(-z) / B on the chosen logit and the negation on the
// rejected one.
std::vector<double> dpo_gradient(std::span<const PreferenceIndex> batch, const ToyPolicy& policy,
                                 const Policy& reference, double beta);

// log pi(y_w|x) - log pi(y_l|x)
double margin(const Policy& policy, const PreferenceIndex& pair);

struct DpoConfig {
    double beta = 0.1;
    double learning_rate = 1.0;
    int steps = 100;

    void validate() const;  // throws ValidationError
};

struct TrainStep {
    int step = 0;
    double loss = 0.0;
    double mean_margin = 0.0;
};

struct TrainResult {
    ToyPolicy policy;
    std::vector<TrainStep> history;  // steps + 1 entries: before each update, then final
    std::vector<double> initial_margins;
    std::vector<double> final_margins;
};

// Plain gradient descent from pi_theta = pi_ref. Throws DivergenceError if the
// loss becomes non-finite.
TrainResult toy_train(std::span<const PreferenceIndex> pairs, const ToyPolicy& reference, const DpoConfig& config);

// ---------------------------------------------------------------------------
// Self-check suite behind `chainforge dpo-check`.

struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<CheckOutcome> run_dpo_checks(std::uint64_t seed);

}  // namespace chainforge::dpo
