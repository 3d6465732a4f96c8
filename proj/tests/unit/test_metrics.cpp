#include "chainforge/error.hpp"
#include "chainforge/metrics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace chainforge;
using namespace chainforge::eval;

namespace {

std::vector<std::pair<double, double>> zip(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(a[i], b[i]);
    return out;
}

ProblemScore make(Task t, int ip, int n_max, int right, int wrong) {
    auto s = score_problem(right, wrong);
    s.task = t;
    s.index = {static_cast<int>(t), n_max == 10 ? 0 : 1, ip};
    s.n_max = n_max;
    return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("per-problem accuracy") {
    CHECK(score_problem(1000, 0).accuracy == 1.0);
    CHECK(score_problem(0, 1000).accuracy == 0.0);
    CHECK(score_problem(250, 750).accuracy == 0.25);
    CHECK_THROWS_AS(score_problem(0, 0), UndefinedScoreError);
}

TEST_CASE("aggregates are unweighted means") {
    std::vector<ProblemScore> s{make(Task::Fol, 0, 10, 8, 2), make(Task::Fol, 1, 10, 90, 10)};
    CHECK(aggregate(s, {Task::Fol, Subset::Whole, std::nullopt}).value == doctest::Approx(0.85));
    CHECK(aggregate(std::span(s).first(1), {}).value == doctest::Approx(0.8));
    CHECK_THROWS_AS(aggregate(s, {Task::Gsm8k, Subset::Whole, std::nullopt}), EmptySelectionError);
}

TEST_CASE("15-problem aggregates agree with a second summation path") {
    Rng rng(15);
    std::vector<ProblemScore> scores;
    std::set<ProblemId> train{{Task::Fol, 0}, {Task::Fol, 1}, {Task::Fol, 2}, {Task::Fol, 3},
                              {Task::Gsm8k, 0}, {Task::Gsm8k, 1}, {Task::Gsm8k, 2}, {Task::Gsm8k, 3}, {Task::Gsm8k, 4}};
    for (int n_max : {10, 20}) {
        for (int i = 0; i < 6; ++i) {
            const int r = static_cast<int>(uniform_below(rng, 101));
            scores.push_back(make(Task::Fol, i, n_max, r, 100 - r));
        }
        for (int i = 0; i < 9; ++i) {
            const int r = static_cast<int>(uniform_below(rng, 101));
            scores.push_back(make(Task::Gsm8k, i, n_max, r, 100 - r));
        }
    }
    // Second path: integer right-counts over a common denominator of 100.
    for (std::optional<int> n_max : {std::optional<int>{10}, std::optional<int>{20}, std::optional<int>{}}) {
        for (Subset sub : {Subset::Train, Subset::Test, Subset::Whole}) {
            for (std::optional<Task> task : {std::optional<Task>{Task::Fol}, std::optional<Task>{Task::Gsm8k},
                                             std::optional<Task>{}}) {
                long right = 0, members = 0;
                for (const auto& s : scores) {
                    const bool is_train = train.count(s.problem_id()) > 0;
                    if (task && s.task != *task) continue;
                    if (n_max && s.n_max != *n_max) continue;
                    if ((sub == Subset::Train && !is_train) || (sub == Subset::Test && is_train)) continue;
                    right += s.n_right;
                    ++members;
                }
                const auto a = aggregate(scores, {task, sub, n_max}, train);
                CHECK(a.members == static_cast<std::size_t>(members));
                CHECK(a.value == doctest::Approx(static_cast<double>(right) / (100.0 * members)).epsilon(1e-12));
            }
        }
    }
    const auto whole = aggregate(scores, {});
    CHECK(whole.members == 30);
}

TEST_CASE("all-positive differences, n = 6") {
    const auto r = wilcoxon_signed_rank(zip({0, 0, 0, 0, 0, 0}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
    CHECK(r.w == 0);
    CHECK(r.w_plus == 21);
    CHECK(r.p == 0.03125);
    CHECK(r.n_effective == 6);
    CHECK(r.significant);
    CHECK(r.method == PValueMethod::Exact);
}

TEST_CASE("textbook example: p = 0.0390625, V = 40") {
    const std::vector<double> x{1.83, 0.50, 1.62, 2.48, 1.68, 1.88, 1.55, 3.06, 1.30};
    const std::vector<double> y{0.878, 0.647, 0.598, 2.05, 1.06, 1.29, 1.06, 3.14, 1.29};
    const auto r = wilcoxon_signed_rank(zip(y, x));
    CHECK(r.w_plus == 40);
    CHECK(r.w == 5);
    CHECK(r.p == doctest::Approx(0.0390625).epsilon(1e-12));
}

TEST_CASE("10-pair example with ties matches enumeration") {
    const std::vector<double> a{0.62, 0.55, 0.71, 0.48, 0.80, 0.66, 0.59, 0.73, 0.50, 0.69};
    const std::vector<double> b{0.70, 0.61, 0.69, 0.60, 0.91, 0.74, 0.58, 0.85, 0.63, 0.77};
    const auto r = wilcoxon_signed_rank(zip(a, b));
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) d.push_back(b[i] - a[i]);
    CHECK(r.w == 3);
    CHECK(std::abs(r.p - oracle::brute_force_wilcoxon_p(d)) < 1e-12);
    CHECK(r.p == doctest::Approx(10.0 / 1024).epsilon(1e-12));
}

TEST_CASE("exact p agrees with brute force on random inputs") {
    Rng rng(31337);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(uniform_below(rng, 12));
        std::vector<std::pair<double, double>> pairs;
        std::vector<double> d;
        for (int i = 0; i < n; ++i) {
            // Coarse grid so ties and zeros occur.
            const double a = static_cast<double>(uniform_below(rng, 11)) / 10;
            const double b = static_cast<double>(uniform_below(rng, 11)) / 10;
            pairs.emplace_back(a, b);
            d.push_back(b - a);
        }
        const auto s = oracle::signed_ranks(d);
        if (s.n == 0) {
            CHECK_THROWS_AS(wilcoxon_signed_rank(pairs), DegenerateInputError);
            continue;
        }
        const auto r = wilcoxon_signed_rank(pairs, 0.05, PValueMethod::Exact);
        CHECK(r.n_effective == s.n);
        CHECK(r.w_plus == doctest::Approx(s.w_plus));
        CHECK(r.w_minus == doctest::Approx(s.w_minus));
        CHECK(std::abs(r.p - oracle::brute_force_wilcoxon_p(d)) <= 1e-12);
        CHECK(r.p >= 0.0);
        CHECK(r.p <= 1.0);
    }
}

TEST_CASE("symmetry, order and swap invariance") {
    const auto sym = wilcoxon_signed_rank(zip({0.5, 0.5, 0.5, 0.5}, {0.6, 0.4, 0.7, 0.3}));
    CHECK(sym.p == 1.0);
    CHECK_FALSE(sym.significant);

    Rng rng(5);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 15; ++i) pairs.emplace_back(uniform01(rng), uniform01(rng));
    const auto base = wilcoxon_signed_rank(pairs);
    auto shuffled = pairs;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(wilcoxon_signed_rank(shuffled).p == base.p);
    std::vector<std::pair<double, double>> swapped;
    for (auto [a, b] : pairs) swapped.emplace_back(b, a);
    const auto sw = wilcoxon_signed_rank(swapped);
    CHECK(sw.p == base.p);
    CHECK(sw.w_plus == base.w_minus);
    CHECK(sw.w_minus == base.w_plus);
}

TEST_CASE("normal approximation tracks the exact path at n = 20") {
    Rng rng(20);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::pair<double, double>> pairs;
        const double shift = 0.3 * uniform01(rng);
        for (int i = 0; i < 20; ++i) pairs.emplace_back(uniform01(rng), uniform01(rng) + shift);
        const auto exact = wilcoxon_signed_rank(pairs, 0.05, PValueMethod::Exact);
        const auto normal = wilcoxon_signed_rank(pairs, 0.05, PValueMethod::Normal);
        CHECK(std::abs(exact.p - normal.p) < 0.01);
        CHECK(wilcoxon_signed_rank(pairs).method == PValueMethod::Exact);
    }
    std::vector<std::pair<double, double>> big;
    for (int i = 0; i < 30; ++i) big.emplace_back(0.0, 0.01 * (i + 1));
    const auto r = wilcoxon_signed_rank(big);
    CHECK(r.method == PValueMethod::Normal);
    CHECK(r.p < 1e-5);
}

TEST_CASE("degenerate input") {
    CHECK_THROWS_AS(wilcoxon_signed_rank(zip({0.5, 0.2}, {0.5, 0.2})), DegenerateInputError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<std::pair<double, double>>{}), DegenerateInputError);
}

TEST_CASE("average ranks") {
    const std::vector<double> v{3, 1, 4, 1, 5};
    CHECK(average_ranks(v) == std::vector<double>{3, 1.5, 4, 1.5, 5});
}

TEST_CASE("formatting") {
    CHECK(format_percent(0.9242) == "92.42%");
    CHECK(format_percent(1.0) == "100.00%");
    CHECK(format_percent(0.0) == "0.00%");
    CHECK(format_percent(0.08256) == "8.26%");
    CHECK(format_percent(0.5) == "50.00%");
    CHECK(format_pvalue(2.0 / 4096) == "4.88e-4");
    CHECK(format_pvalue(0.0390625) == "0.0391");
    CHECK(format_pvalue(9.996e-5) == "1.00e-4");
}

TEST_CASE("report on equal models flags degenerate Wilcoxon cells") {
    std::vector<ProblemScore> s{make(Task::Fol, 0, 10, 9, 1), make(Task::Gsm8k, 0, 10, 5, 5)};
    const auto rep = render_report({s, s, {{Task::Fol, 0}}, 0.05});
    for (const auto& row : rep.json["wilcoxon"]) CHECK(row["degenerate"] == true);
    CHECK(rep.text.find("90.00%") != std::string::npos);
    CHECK(rep.text.find("degenerate") != std::string::npos);
}

TEST_CASE("report rejects mismatched problem sets") {
    std::vector<ProblemScore> a{make(Task::Fol, 0, 10, 9, 1)};
    std::vector<ProblemScore> b{make(Task::Fol, 1, 10, 9, 1)};
    CHECK_THROWS_AS(render_report({a, b, {}, 0.05}), MismatchError);
}

TEST_CASE("report grid cells use unweighted means") {
    std::vector<ProblemScore> a{make(Task::Fol, 0, 10, 1, 3), make(Task::Fol, 1, 10, 2, 2), make(Task::Gsm8k, 0, 10, 0, 4)};
    std::vector<ProblemScore> b{make(Task::Fol, 0, 10, 3, 1), make(Task::Fol, 1, 10, 4, 0), make(Task::Gsm8k, 0, 10, 1, 3)};
    const auto rep = render_report({a, b, {{Task::Fol, 0}}, 0.05, "orig", "tuned"});
    bool seen = false;
    for (const auto& row : rep.json["accuracy"]) {
        if (row["model"] == "tuned" && row["subset"] == "Whole set" && row["n_max"] == 10) {
            CHECK(row["fol"].get<double>() == doctest::Approx(0.875));
            CHECK(row["gsm8k"].get<double>() == doctest::Approx(0.25));
            CHECK(row["overall"].get<double>() == doctest::Approx((0.75 + 1.0 + 0.25) / 3));
            seen = true;
        }
        if (row["subset"] == "Training set") CHECK(row["gsm8k"].is_null());
    }
    CHECK(seen);
    CHECK(rep.text.find("87.50%") != std::string::npos);
}

}  // TEST_SUITE
