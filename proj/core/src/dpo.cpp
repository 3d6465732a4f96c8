#include "chainforge/dpo.hpp"

#include "chainforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace chainforge::dpo {

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double preference_logit(const PairLogProbs& p, double beta) {
    return beta * ((p.policy_chosen - p.ref_chosen) - (p.policy_rejected - p.ref_rejected));
}

double dpo_loss(std::span<const PairLogProbs> batch, double beta) {
    if (batch.empty()) throw DomainError("DPO loss over an empty batch");
    if (!(beta > 0.0)) throw DomainError("DPO beta must be > 0");
    double sum = 0.0;
    for (const auto& p : batch) {
        if (std::isnan(p.policy_chosen) || std::isnan(p.policy_rejected) || std::isnan(p.ref_chosen) ||
            std::isnan(p.ref_rejected)) {
            throw DomainError("NaN log-probability in DPO batch");
        }
        if (std::isinf(p.ref_chosen) || std::isinf(p.ref_rejected)) {
            throw DomainError("completion lies outside the reference policy's support");
        }
        sum += softplus(-preference_logit(p, beta));
    }
    return sum / static_cast<double>(batch.size());
}

ToyPolicy::ToyPolicy(std::size_t prompts, std::size_t completions, std::vector<double> logits)
    : prompts_(prompts), completions_(completions), logits_(std::move(logits)) {
    if (prompts_ == 0 || completions_ == 0) throw ValidationError("toy policy needs a non-empty support");
    if (logits_.size() != prompts_ * completions_) throw ValidationError("toy policy logit count mismatch");
    if (!std::all_of(logits_.begin(), logits_.end(), [](double v) { return std::isfinite(v); })) {
        throw ValidationError("toy policy logits must be finite");
    }
}

ToyPolicy ToyPolicy::uniform(std::size_t prompts, std::size_t completions) {
    return ToyPolicy(prompts, completions, std::vector<double>(prompts * completions, 0.0));
}

ToyPolicy ToyPolicy::random(std::size_t prompts, std::size_t completions, Rng& rng, double scale) {
    std::vector<double> logits(prompts * completions);
    for (auto& v : logits) v = scale * (2.0 * uniform01(rng) - 1.0);
    return ToyPolicy(prompts, completions, std::move(logits));
}

double ToyPolicy::log_prob(std::size_t prompt, std::size_t completion) const {
    const double* row = logits_.data() + prompt * completions_;
    const double peak = *std::max_element(row, row + completions_);
    double z = 0.0;
    for (std::size_t c = 0; c < completions_; ++c) z += std::exp(row[c] - peak);
    return row[completion] - peak - std::log(z);
}

LogProbTable::LogProbTable(std::size_t prompts, std::size_t completions, std::vector<double> log_probs)
    : prompts_(prompts), completions_(completions), table_(std::move(log_probs)) {
    if (table_.size() != prompts_ * completions_) throw ValidationError("log-prob table size mismatch");
}

namespace {

void check_pair(const PreferenceIndex& p, const Policy& policy, const Policy& reference) {
    if (p.prompt >= policy.prompts() || p.chosen >= policy.completions() || p.rejected >= policy.completions() ||
        p.prompt >= reference.prompts() || p.chosen >= reference.completions() ||
        p.rejected >= reference.completions()) {
        throw DomainError("preference pair outside the policy support");
    }
    if (p.chosen == p.rejected) throw DomainError("preference pair compares a completion with itself");
}

}  // namespace

std::vector<PairLogProbs> gather(std::span<const PreferenceIndex> batch, const Policy& policy,
                                 const Policy& reference) {
    std::vector<PairLogProbs> out;
    out.reserve(batch.size());
    for (const auto& p : batch) {
        check_pair(p, policy, reference);
        out.push_back({policy.log_prob(p.prompt, p.chosen), policy.log_prob(p.prompt, p.rejected),
                       reference.log_prob(p.prompt, p.chosen), reference.log_prob(p.prompt, p.rejected)});
    }
    return out;
}

double dpo_loss(std::span<const PreferenceIndex> batch, const Policy& policy, const Policy& reference, double beta) {
    const auto lp = gather(batch, policy, reference);
    return dpo_loss(lp, beta);
}

std::vector<double> dpo_gradient(std::span<const PreferenceIndex> batch, const ToyPolicy& policy,
                                 const Policy& reference, double beta) {
    const auto lp = gather(batch, policy, reference);
    (void)dpo_loss(lp, beta);  // same domain checks as the loss
    std::vector<double> grad(policy.parameters().size(), 0.0);
    const double scale = beta / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double weight = scale * sigmoid(-preference_logit(lp[i], beta));
        const std::size_t row = batch[i].prompt * policy.completions();
        grad[row + batch[i].chosen] -= weight;
        grad[row + batch[i].rejected] += weight;
    }
    return grad;
}

double margin(const Policy& policy, const PreferenceIndex& pair) {
    return policy.log_prob(pair.prompt, pair.chosen) - policy.log_prob(pair.prompt, pair.rejected);
}

void DpoConfig::validate() const {
    if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (steps < 0) throw ValidationError("steps must be >= 0");
}

TrainResult toy_train(std::span<const PreferenceIndex> pairs, const ToyPolicy& reference, const DpoConfig& config) {
    config.validate();
    if (pairs.empty()) throw ValidationError("toy_train needs at least one pair");

    TrainResult r{reference, {}, {}, {}};
    auto margins = [&](const ToyPolicy& p) {
        std::vector<double> m;
        for (const auto& pair : pairs) m.push_back(margin(p, pair));
        return m;
    };
    auto record = [&](int step) {
        const double loss = dpo_loss(pairs, r.policy, reference, config.beta);
        const auto m = margins(r.policy);
        const double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
        if (!std::isfinite(loss) || !std::isfinite(mean)) {
            std::ostringstream os;
            os << "DPO toy training diverged at step " << step << " (loss=" << loss << ", mean margin=" << mean
               << ", lr=" << config.learning_rate << ", beta=" << config.beta << ")";
            throw DivergenceError(os.str());
        }
        r.history.push_back({step, loss, mean});
    };

    r.initial_margins = margins(r.policy);
    record(0);
    for (int step = 1; step <= config.steps; ++step) {
        const auto grad = dpo_gradient(pairs, r.policy, reference, config.beta);
        auto params = r.policy.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];
        record(step);
    }
    r.final_margins = margins(r.policy);
    return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<PreferenceIndex> random_batch(Rng& rng, std::size_t prompts, std::size_t completions, std::size_t n) {
    std::vector<PreferenceIndex> batch;
    for (std::size_t i = 0; i < n; ++i) {
        PreferenceIndex p;
        p.prompt = uniform_below(rng, prompts);
        p.chosen = uniform_below(rng, completions);
        do {
            p.rejected = uniform_below(rng, completions);
        } while (p.rejected == p.chosen);
        batch.push_back(p);
    }
    return batch;
}

// Norm-wise relative error ||a - n|| / max(||a||, ||n||); coordinates whose true
// gradient is zero would make an element-wise ratio meaningless.
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
    return std::sqrt(diff) / denom;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::vector<CheckOutcome> run_dpo_checks(std::uint64_t seed) {
    std::vector<CheckOutcome> out;
    Rng rng(seed);

    {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto ref = ToyPolicy::random(4, 5, rng, 3.0);
            const auto batch = random_batch(rng, 4, 5, 1 + uniform_below(rng, 16));
            worst = std::max(worst, std::abs(dpo_loss(batch, ref, ref, 0.1) - std::log(2.0)));
        }
        out.push_back({"identity anchor (pi_theta = pi_ref => ln 2)", worst <= 1e-12, "max |loss - ln 2| = " + fmt(worst)});
    }

    {
        double worst = 0.0;
        constexpr double h = 1e-6;
        for (int trial = 0; trial < 50; ++trial) {
            auto theta = ToyPolicy::random(3, 4, rng, 2.0);
            const auto ref = ToyPolicy::random(3, 4, rng, 2.0);
            const auto batch = random_batch(rng, 3, 4, 8);
            const double beta = 0.05 + uniform01(rng);
            const auto analytic = dpo_gradient(batch, theta, ref, beta);
            std::vector<double> numeric(analytic.size());
            for (std::size_t i = 0; i < numeric.size(); ++i) {
                auto params = theta.parameters();
                const double saved = params[i];
                params[i] = saved + h;
                const double up = dpo_loss(batch, theta, ref, beta);
                params[i] = saved - h;
                const double down = dpo_loss(batch, theta, ref, beta);
                params[i] = saved;
                numeric[i] = (up - down) / (2 * h);
            }
            worst = std::max(worst, max_relative_error(analytic, numeric));
        }
        out.push_back({"gradient vs central differences", worst < 1e-5, "max relative error = " + fmt(worst)});
    }

    {
        std::vector<PreferenceIndex> pairs;
        for (std::size_t p = 0; p < 20; ++p) pairs.push_back({p, 0, 1 + p % 3});
        const auto ref = ToyPolicy::random(20, 4, rng, 0.5);
        const auto r = toy_train(pairs, ref, {0.1, 50.0, 500});
        std::size_t improved = 0;
        for (std::size_t i = 0; i < pairs.size(); ++i) improved += r.final_margins[i] > r.initial_margins[i];
        const double final_loss = r.history.back().loss;
        const bool ok = improved * 100 >= 95 * pairs.size() && final_loss < 0.1 && final_loss <= r.history.front().loss;
        out.push_back({"toy preference learning (500 steps)", ok,
                       std::to_string(improved) + "/20 margins improved, final loss = " + fmt(final_loss)});
    }

    {
        const std::vector<PreferenceIndex> pairs{{0, 0, 1}, {0, 1, 0}};
        const auto ref = ToyPolicy::uniform(1, 2);
        const auto r = toy_train(pairs, ref, {0.1, 10.0, 200});
        const bool ok = r.history.back().loss >= std::log(2.0) - 1e-12 && std::abs(r.final_margins[0]) < 1e-9;
        out.push_back({"contradictory pairs plateau at ln 2", ok, "final loss = " + fmt(r.history.back().loss)});
    }

    {
        const std::vector<PreferenceIndex> pairs{{0, 0, 1}, {1, 2, 0}};
        const auto ref = ToyPolicy::random(2, 3, rng, 1.0);
        auto norm = [](const std::vector<double>& g) {
            return std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
        };
        const double g1 = norm(dpo_gradient(pairs, ref, ref, 0.1));
        const double g2 = norm(dpo_gradient(pairs, ref, ref, 0.2));
        out.push_back({"doubling beta doubles the step-0 gradient", g2 > g1 && std::abs(g2 - 2 * g1) < 1e-12,
                       "|g(0.1)| = " + fmt(g1) + ", |g(0.2)| = " + fmt(g2)});
    }
    return out;
}

}  // namespace chainforge::dpo
