#include "chainforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace chainforge::eval {

ProblemScore score_problem(int n_right, int n_wrong) {
    if (n_right < 0 || n_wrong < 0) throw UndefinedScoreError("negative completion count");
    if (n_right + n_wrong == 0) throw UndefinedScoreError("accuracy undefined for a prompt with no completions");
    ProblemScore s;
    s.n_right = n_right;
    s.n_wrong = n_wrong;
    s.accuracy = static_cast<double>(n_right) / static_cast<double>(n_right + n_wrong);
    return s;
}

std::vector<ProblemScore> scores_from_manifest(const DatasetManifest& manifest) {
    std::vector<ProblemScore> out;
    for (const auto& p : manifest.prompts) {
        auto s = score_problem(p.right, p.wrong);
        s.task = p.task;
        s.index = p.index;
        s.n_max = p.n_max;
        out.push_back(s);
    }
    return out;
}

bool in_scope(const ProblemScore& s, const Scope& scope, const std::set<ProblemId>& train) {
    if (scope.task && s.task != *scope.task) return false;
    if (scope.n_max && s.n_max != *scope.n_max) return false;
    const bool is_train = train.count(s.problem_id()) > 0;
    if (scope.subset == Subset::Train && !is_train) return false;
    if (scope.subset == Subset::Test && is_train) return false;
    return true;
}

AggregateScore aggregate(std::span<const ProblemScore> scores, const Scope& scope, const std::set<ProblemId>& train) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : scores) {
        if (!in_scope(s, scope, train)) continue;
        sum += s.accuracy;
        ++n;
    }
    if (n == 0) throw EmptySelectionError("aggregate scope selects no problems");
    return {scope, sum / static_cast<double>(n), n};
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    auto tied = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); };

    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && tied(values[order[i]], values[order[j]])) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

namespace {

// Two-sided exact p over all 2^n sign assignments, counted by a subset-sum
// recurrence on doubled ranks (average ranks are multiples of 1/2).
double exact_p(const std::vector<double>& ranks, double w) {
    std::vector<long> doubled;
    long total = 0;
    for (double r : ranks) {
        doubled.push_back(std::lround(2.0 * r));
        total += doubled.back();
    }
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(total) + 1, 0);
    ways[0] = 1;
    long reach = 0;
    for (long r : doubled) {
        reach += r;
        for (long s = reach; s >= r; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
    }
    const long w2 = std::lround(2.0 * w);
    std::uint64_t hits = 0;
    for (long s = 0; s <= total; ++s) {
        if (std::min(s, total - s) <= w2) hits += ways[static_cast<std::size_t>(s)];
    }
    return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

double normal_p(const std::vector<double>& abs_diffs, double w) {
    const double n = static_cast<double>(abs_diffs.size());
    const double mean = n * (n + 1) / 4.0;
    double var = n * (n + 1) * (2 * n + 1) / 24.0;

    std::vector<double> sorted = abs_diffs;
    std::sort(sorted.begin(), sorted.end());
    const auto ranks = average_ranks(sorted);
    for (std::size_t i = 0; i < ranks.size();) {
        std::size_t j = i + 1;
        while (j < ranks.size() && ranks[j] == ranks[i]) ++j;
        const double t = static_cast<double>(j - i);
        var -= (t * t * t - t) / 48.0;
        i = j;
    }
    if (var <= 0.0) return 1.0;
    const double z = (w - mean + 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(-z / std::sqrt(2.0)));  // 2 * Phi(z)
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> paired, double alpha,
                                    PValueMethod method) {
    std::vector<double> diffs;
    for (const auto& [a, b] : paired) {
        const double d = b - a;
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw DegenerateInputError("Wilcoxon test needs at least one nonzero difference");

    std::vector<double> abs_diffs(diffs.size());
    std::transform(diffs.begin(), diffs.end(), abs_diffs.begin(), [](double d) { return std::abs(d); });
    const auto ranks = average_ranks(abs_diffs);

    WilcoxonResult r;
    for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
    r.w = std::min(r.w_plus, r.w_minus);
    r.n_effective = static_cast<int>(diffs.size());
    r.alpha = alpha;
    r.method = method == PValueMethod::Auto ? (r.n_effective <= 20 ? PValueMethod::Exact : PValueMethod::Normal)
                                            : method;
    if (r.method == PValueMethod::Exact && r.n_effective > 62) {
        throw DegenerateInputError("exact Wilcoxon p-value supports at most 62 nonzero differences");
    }
    r.p = r.method == PValueMethod::Exact ? exact_p(ranks, r.w) : normal_p(abs_diffs, r.w);
    r.significant = r.p < alpha;
    return r;
}

}  // namespace chainforge::eval
