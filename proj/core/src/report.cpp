#include "chainforge/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace chainforge::eval {

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
    return buf;
}

std::string format_pvalue(double p) {
    if (p <= 0.0) return "0";
    if (p >= 0.01) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", p);
        return buf;
    }
    int exponent = static_cast<int>(std::floor(std::log10(p)));
    double mantissa = p / std::pow(10.0, exponent);
    if (std::round(mantissa * 100.0) >= 1000.0) {
        mantissa /= 10.0;
        ++exponent;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2fe%d", mantissa, exponent);
    return buf;
}

namespace {

using Key = std::tuple<int, int, int>;  // (i_t, n_max, i_p)

Key key_of(const ProblemScore& s) { return {s.index.task, s.n_max, s.index.problem}; }

std::map<Key, const ProblemScore*> by_key(const std::vector<ProblemScore>& scores) {
    std::map<Key, const ProblemScore*> m;
    for (const auto& s : scores) m[key_of(s)] = &s;
    return m;
}

std::string pad_right(const std::string& s, std::size_t w) {
    return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t w) {
    return s.size() >= w ? " " + s : std::string(w - s.size(), ' ') + s;
}

std::optional<double> try_aggregate(const std::vector<ProblemScore>& scores, const Scope& scope,
                                    const std::set<ProblemId>& train) {
    try {
        return aggregate(scores, scope, train).value;
    } catch (const EmptySelectionError&) {
        return std::nullopt;
    }
}

const char* subset_name(Subset s) {
    switch (s) {
        case Subset::Train: return "Training set";
        case Subset::Test: return "Test set";
        case Subset::Whole: return "Whole set";
    }
    return "";
}

}  // namespace

Report render_report(const ReportInput& input) {
    const auto a = by_key(input.original);
    const auto b = by_key(input.finetuned);
    if (a.size() != input.original.size() || b.size() != input.finetuned.size()) {
        throw MismatchError("duplicate prompt in a score set");
    }
    for (const auto& [k, _] : a) {
        if (!b.count(k)) throw MismatchError("the two models were not scored on the same prompts");
    }
    if (a.size() != b.size()) throw MismatchError("the two models were not scored on the same prompts");
    if (a.empty()) throw MismatchError("no scores to report");

    std::set<int> n_max_values;
    for (const auto& s : input.original) n_max_values.insert(s.n_max);
    std::vector<std::optional<int>> nmax_scopes(n_max_values.begin(), n_max_values.end());
    nmax_scopes.push_back(std::nullopt);

    std::ostringstream os;
    nlohmann::json accuracy = nlohmann::json::array();
    const std::vector<std::pair<std::string, const std::vector<ProblemScore>*>> models{
        {input.original_name, &input.original}, {input.finetuned_name, &input.finetuned}};

    os << "Task average and overall accuracy\n";
    for (const auto& nmax : nmax_scopes) {
        std::string heading = "n_max = ";
        if (nmax) {
            heading += std::to_string(*nmax);
        } else {
            bool first = true;
            for (int v : n_max_values) {
                heading += (first ? "" : " and ") + std::to_string(v);
                first = false;
            }
        }
        os << "\n" << heading << "\n";
        os << pad_right("Model", 12) << pad_right("Dataset", 14) << pad_left("FOL", 10) << pad_left("GSM8K", 10)
           << pad_left("Overall", 10) << "\n";
        for (const auto& [name, scores] : models) {
            for (Subset subset : {Subset::Train, Subset::Test, Subset::Whole}) {
                nlohmann::json row = {{"n_max", nmax ? nlohmann::json(*nmax) : nlohmann::json("all")},
                                      {"model", name},
                                      {"subset", subset_name(subset)}};
                os << pad_right(name, 12) << pad_right(subset_name(subset), 14);
                for (auto [col, task] : {std::pair<const char*, std::optional<Task>>{"fol", Task::Fol},
                                         {"gsm8k", Task::Gsm8k},
                                         {"overall", std::nullopt}}) {
                    const auto v = try_aggregate(*scores, {task, subset, nmax}, input.train);
                    os << pad_left(v ? format_percent(*v) : "-", 10);
                    row[col] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
                }
                os << "\n";
                accuracy.push_back(row);
            }
        }
    }

    os << "\nWilcoxon signed-rank test (" << input.finetuned_name << " vs " << input.original_name
       << ", alpha = " << input.alpha << ")\n";
    os << pad_right("Dataset", 10) << pad_left("W", 8) << pad_left("p-value", 12) << pad_left("n", 5) << "\n";
    nlohmann::json wilcoxon = nlohmann::json::array();
    for (auto [label, task] : {std::pair<const char*, std::optional<Task>>{"FOL", Task::Fol},
                               {"GSM8K", Task::Gsm8k},
                               {"Overall", std::nullopt}}) {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& [k, sa] : a) {
            if (task && sa->task != *task) continue;
            pairs.emplace_back(sa->accuracy, b.at(k)->accuracy);
        }
        nlohmann::json row = {{"dataset", label}, {"pairs", pairs.size()}};
        os << pad_right(label, 10);
        if (pairs.empty()) {
            os << pad_left("-", 8) << pad_left("-", 12) << pad_left("0", 5) << "\n";
            row["degenerate"] = true;
            wilcoxon.push_back(row);
            continue;
        }
        try {
            const auto r = wilcoxon_signed_rank(pairs, input.alpha);
            os << pad_left(format_pvalue(r.w), 8) << pad_left(format_pvalue(r.p), 12)
               << pad_left(std::to_string(r.n_effective), 5) << (r.significant ? "  < alpha" : "") << "\n";
            row.update({{"W", r.w},
                        {"W_plus", r.w_plus},
                        {"W_minus", r.w_minus},
                        {"p", r.p},
                        {"n_effective", r.n_effective},
                        {"method", r.method == PValueMethod::Exact ? "exact" : "normal"},
                        {"significant", r.significant},
                        {"degenerate", false}});
        } catch (const DegenerateInputError&) {
            os << pad_left("-", 8) << pad_left("-", 12) << pad_left("0", 5) << "  degenerate: all differences zero\n";
            row["degenerate"] = true;
        }
        wilcoxon.push_back(row);
    }

    os << "\nPer-problem accuracy\n";
    os << pad_right("task", 7) << pad_left("n_max", 6) << pad_left("i_p", 5) << pad_right("", 2)
       << pad_right("split", 6) << pad_left(input.original_name, 12) << pad_left(input.finetuned_name, 12) << "\n";
    nlohmann::json problems = nlohmann::json::array();
    for (const auto& [k, sa] : a) {
        const auto* sb = b.at(k);
        const bool train = input.train.count(sa->problem_id()) > 0;
        os << pad_right(std::string(task_name(sa->task)), 7) << pad_left(std::to_string(sa->n_max), 6)
           << pad_left(std::to_string(sa->index.problem), 5) << pad_right("", 2) << pad_right(train ? "train" : "test", 6)
           << pad_left(format_percent(sa->accuracy), 12) << pad_left(format_percent(sb->accuracy), 12) << "\n";
        problems.push_back({{"task", task_name(sa->task)},
                            {"i_t", sa->index.task},
                            {"i_n", sa->index.nmax},
                            {"i_p", sa->index.problem},
                            {"n_max", sa->n_max},
                            {"split", train ? "train" : "test"},
                            {"original", {{"right", sa->n_right}, {"wrong", sa->n_wrong}, {"accuracy", sa->accuracy}}},
                            {"finetuned", {{"right", sb->n_right}, {"wrong", sb->n_wrong}, {"accuracy", sb->accuracy}}}});
    }

    Report r;
    r.text = os.str();
    r.json = {{"alpha", input.alpha},
              {"models", {input.original_name, input.finetuned_name}},
              {"accuracy", accuracy},
              {"wilcoxon", wilcoxon},
              {"problems", problems}};
    return r;
}

}  // namespace chainforge::eval
