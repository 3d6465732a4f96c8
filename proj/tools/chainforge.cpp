// chainforge: command-line driver for the dataset / DPO / evaluation pipeline.
//
//   chainforge <stage> --config run.json [overrides]
//
// Exit status: 0 success, 1 validation or dependency problem, 2 runtime failure.

#include "chainforge/error.hpp"
#include "chainforge/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace chainforge;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Flags {
    std::string config;
    std::string root;
    std::string problems;
    std::optional<int> workers;

    // generate
    std::string backend;
    std::optional<int> n_c;
    std::vector<int> n_max;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<double> error_rate;
    std::optional<double> premature_stop_rate;
    std::string endpoint;
    std::string model;
    std::optional<double> temperature;

    // augment
    std::string in;

    // sample
    std::optional<std::uint64_t> n_s;

    // split
    std::vector<int> train_fol;
    std::vector<int> train_gsm;
    bool train_fol_set = false;
    bool train_gsm_set = false;

    // export
    std::string format;

    // eval
    std::string dataset_a;
    std::string dataset_b;
    std::optional<double> alpha;

    // dpo-loss
    std::string pairs;
    std::string logprobs;
    std::optional<double> beta;
};

fs::path from_cwd(const std::string& p) { return fs::absolute(p).lexically_normal(); }

RunConfig build_config(const Flags& f, Stage stage) {
    RunConfig cfg;
    if (!f.config.empty()) {
        cfg = RunConfig::load(f.config);
    } else {
        cfg.output = from_cwd(".");
    }
    if (!f.root.empty()) cfg.output = from_cwd(f.root);
    if (!f.problems.empty()) cfg.problems = from_cwd(f.problems);
    if (f.workers) cfg.workers = *f.workers;

    switch (stage) {
        case Stage::Generate:
            if (!f.backend.empty()) cfg.backend.kind = f.backend;
            if (f.error_rate) cfg.backend.error_rate = *f.error_rate;
            if (f.premature_stop_rate) cfg.backend.premature_stop_rate = *f.premature_stop_rate;
            if (!f.endpoint.empty()) cfg.backend.http.endpoint = f.endpoint;
            if (!f.model.empty()) cfg.backend.http.model = f.model;
            if (f.temperature) cfg.backend.http.temperature = *f.temperature;
            if (f.n_c) cfg.n_c = *f.n_c;
            if (!f.n_max.empty()) cfg.n_max = f.n_max;
            if (f.seed) cfg.generate_seed = f.seed;
            if (!f.out.empty()) cfg.dataset_path = from_cwd(f.out);
            break;
        case Stage::Augment:
            if (!f.in.empty()) cfg.dataset_path = from_cwd(f.in);
            if (!f.out.empty()) cfg.augmented_path = from_cwd(f.out);
            break;
        case Stage::Sample:
            if (f.n_s) cfg.n_s = f.n_s;
            if (f.seed) cfg.sample_seed = f.seed;
            if (!f.in.empty()) cfg.augmented_path = from_cwd(f.in);
            break;
        case Stage::Split:
            if (f.train_fol_set) cfg.train_fol = std::set<int>(f.train_fol.begin(), f.train_fol.end());
            if (f.train_gsm_set) cfg.train_gsm8k = std::set<int>(f.train_gsm.begin(), f.train_gsm.end());
            if (f.train_fol_set && !f.train_gsm_set && !cfg.train_gsm8k) cfg.train_gsm8k = std::set<int>{};
            if (f.train_gsm_set && !f.train_fol_set && !cfg.train_fol) cfg.train_fol = std::set<int>{};
            break;
        case Stage::Export:
            if (!f.format.empty()) cfg.export_format = f.format;
            break;
        case Stage::Eval:
            if (!f.dataset_a.empty()) cfg.dataset_a = from_cwd(f.dataset_a);
            if (!f.dataset_b.empty()) cfg.dataset_b = from_cwd(f.dataset_b);
            if (f.alpha) cfg.alpha = *f.alpha;
            if (!f.out.empty()) cfg.report_dir = from_cwd(f.out);
            break;
        case Stage::DpoCheck:
            if (f.seed) cfg.dpo_seed = f.seed;
            break;
        case Stage::Report:
            if (!f.out.empty()) cfg.report_dir = from_cwd(f.out);
            break;
    }
    return cfg;
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--root", f.root, "output root (overrides the config's \"output\")");
    sub->add_option("--problems", f.problems, "problem pack JSON")->check(CLI::ExistingFile);
}

int report_error(const std::exception& e, int code) {
    std::cerr << "chainforge: " << e.what() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chainforge: function-calling reasoning chains, preference pairs and evaluation"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("generate", "run the agent over every prompt and write the labelled dataset");
    add_common(gen, f);
    gen->add_option("--backend", f.backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    gen->add_option("--n-c", f.n_c, "chains per prompt");
    gen->add_option("--n-max", f.n_max, "iteration caps, comma separated")->delimiter(',');
    gen->add_option("--seed", f.seed, "generation seed");
    gen->add_option("--out", f.out, "dataset directory");
    gen->add_option("--workers", f.workers, "parallel chains");
    gen->add_option("--error-rate", f.error_rate, "mock: chance of a malformed command");
    gen->add_option("--premature-stop-rate", f.premature_stop_rate, "mock: chance of an early CheckCorrectChain()");
    gen->add_option("--endpoint", f.endpoint, "http: server base URL");
    gen->add_option("--model", f.model, "http: model name");
    gen->add_option("--temperature", f.temperature, "http: sampling temperature");

    auto* aug = app.add_subcommand("augment", "build the right x wrong pair index");
    add_common(aug, f);
    aug->add_option("--in", f.in, "dataset directory");
    aug->add_option("--out", f.out, "pair index file");

    auto* smp = app.add_subcommand("sample", "draw n_s pairs without replacement");
    add_common(smp, f);
    smp->add_option("--n-s", f.n_s, "sample size");
    smp->add_option("--seed", f.seed, "sampling seed");
    smp->add_option("--in", f.in, "augmented pair index");

    auto* spl = app.add_subcommand("split", "partition sampled pairs by problem into train and test");
    add_common(spl, f);
    spl->add_option("--train-fol", f.train_fol, "FOL problems in train")->delimiter(',');
    spl->add_option("--train-gsm", f.train_gsm, "GSM8K problems in train")->delimiter(',');

    auto* exp = app.add_subcommand("export", "write DPO JSONL files for train and test");
    add_common(exp, f);
    exp->add_option("--format", f.format, "output format")->check(CLI::IsMember({"dpo-jsonl"}));

    auto* ev = app.add_subcommand("eval", "score two runs and compare them");
    add_common(ev, f);
    ev->add_option("--dataset-a", f.dataset_a, "run of the original model");
    ev->add_option("--dataset-b", f.dataset_b, "run of the fine-tuned model");
    ev->add_option("--alpha", f.alpha, "significance level");
    ev->add_option("--out", f.out, "report directory");

    auto* chk = app.add_subcommand("dpo-check", "identity, gradient and toy-training checks of the DPO loss");
    add_common(chk, f);
    chk->add_option("--seed", f.seed, "check seed");

    auto* rep = app.add_subcommand("report", "summarise dataset, split and evaluation");
    add_common(rep, f);
    rep->add_option("--out", f.out, "report directory");

    auto* run = app.add_subcommand("run", "generate, augment, sample, split, export, eval, report");
    add_common(run, f);

    auto* loss = app.add_subcommand("dpo-loss", "score an exported pair file under given log-probabilities");
    loss->add_option("--pairs", f.pairs, "DPO JSONL file")->required()->check(CLI::ExistingFile);
    loss->add_option("--logprobs", f.logprobs,
                     "JSONL, one row per pair: chosen_logp, rejected_logp, ref_chosen_logp, ref_rejected_logp")
        ->required()
        ->check(CLI::ExistingFile);
    loss->add_option("--beta", f.beta, "temperature (default 0.1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    f.train_fol_set = spl->count("--train-fol") > 0;
    f.train_gsm_set = spl->count("--train-gsm") > 0;

    try {
        if (loss->parsed()) {
            const double beta = f.beta.value_or(0.1);
            if (!(beta > 0.0)) throw ValidationError("--beta must be positive");
            const auto s = score_dpo_file(f.pairs, f.logprobs, beta);
            std::printf("pairs %zu\nbeta %g\nloss %.12g\nmean reward margin %.12g\nreward accuracy %.4f\n", s.pairs,
                        s.beta, s.loss, s.mean_reward_margin, s.accuracy);
            return kOk;
        }
        if (run->parsed()) {
            const auto cfg = build_config(f, Stage::Generate);
            for (const auto& r : run_pipeline(cfg)) {
                std::cout << "== " << stage_name(r.stage) << "\n" << r.summary;
            }
            return kOk;
        }
        for (auto* sub : app.get_subcommands()) {
            const Stage stage = parse_stage(sub->get_name());
            const auto cfg = build_config(f, stage);
            const auto r = run_stage(stage, cfg);
            std::cout << r.summary;
            return r.ok ? kOk : kRuntime;
        }
    } catch (const ValidationError& e) {
        return report_error(e, kValidation);
    } catch (const std::exception& e) {
        return report_error(e, kRuntime);
    }
    return kOk;
}
