#include "chainforge/pipeline.hpp"

#include "chainforge/dataset.hpp"
#include "chainforge/dpo.hpp"
#include "chainforge/engine.hpp"
#include "chainforge/error.hpp"
#include "chainforge/hash.hpp"
#include "chainforge/metrics.hpp"
#include "chainforge/pack.hpp"
#include "chainforge/transcript.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace chainforge {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 8> kStages{{
    {Stage::Generate, "generate"},
    {Stage::Augment, "augment"},
    {Stage::Sample, "sample"},
    {Stage::Split, "split"},
    {Stage::Export, "export"},
    {Stage::Eval, "eval"},
    {Stage::DpoCheck, "dpo-check"},
    {Stage::Report, "report"},
}};

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ValidationError("unknown key \"" + key + "\" in " + where);
        }
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::optional<std::uint64_t> opt_seed(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number_unsigned() && !(j.at(key).is_number_integer() && j.at(key).get<long long>() >= 0)) {
        throw ValidationError(std::string(key) + " must be a non-negative integer");
    }
    return j.at(key).get<std::uint64_t>();
}

std::set<int> index_set(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + " must be an array of problem indices");
    std::set<int> out;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw ValidationError(where + " must contain integers");
        out.insert(v.get<int>());
    }
    return out;
}

json seed_json(const std::optional<std::uint64_t>& s) { return s ? json(*s) : json(nullptr); }

std::string tree_sha256(const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files) listing += f + " " + sha256_hex(read_file(root / f)) + "\n";
    return sha256_hex(listing);
}

void require(const fs::path& path, Stage prerequisite) {
    if (!fs::exists(path)) {
        throw DependencyError("missing " + path.string() + "; run the `" + std::string(stage_name(prerequisite)) +
                              "` stage first");
    }
}

void write_stage_manifest(const RunConfig& cfg, Stage stage, const std::optional<std::uint64_t>& seed,
                          const std::vector<fs::path>& artifacts) {
    json outputs = json::object();
    for (const auto& a : artifacts) {
        const auto rel = fs::relative(a, cfg.output).generic_string();
        const auto key = rel.rfind("..", 0) == 0 ? a.generic_string() : rel;
        outputs[key] = fs::is_directory(a) ? tree_sha256(a) : sha256_hex(read_file(a));
    }
    const json m = {{"stage", stage_name(stage)},
                    {"config_sha256", cfg.hash()},
                    {"seed", seed_json(seed)},
                    {"outputs", outputs}};
    write_file(cfg.manifests_dir() / (std::string(stage_name(stage)) + ".json"), m.dump(2) + "\n");
}

std::set<ProblemId> train_set(const RunConfig& cfg, const ProblemPack& pack) {
    if (!cfg.train_fol && !cfg.train_gsm8k) return pack.default_train;
    std::set<ProblemId> out;
    if (cfg.train_fol) {
        for (int i : *cfg.train_fol) out.insert({Task::Fol, i});
    }
    if (cfg.train_gsm8k) {
        for (int i : *cfg.train_gsm8k) out.insert({Task::Gsm8k, i});
    }
    return out;
}

std::set<ProblemId> universe(const ProblemPack& pack) {
    std::set<ProblemId> out;
    for (const auto& p : pack.problems) out.insert({p.task, p.problem});
    return out;
}

GenerateOptions generate_options(const RunConfig& cfg, std::uint64_t seed) {
    GenerateOptions o;
    o.n_c = cfg.n_c;
    o.n_max_values = cfg.n_max;
    o.seed = seed;
    o.workers = cfg.workers;
    return o;
}

std::string dataset_line(const std::string& label, const DatasetManifest& m) {
    long right = 0, wrong = 0, aborted = 0;
    for (const auto& p : m.prompts) {
        right += p.right;
        wrong += p.wrong;
        aborted += p.aborted;
    }
    std::ostringstream os;
    os << label << ": " << m.prompts.size() << " prompts, " << right << " right, " << wrong << " wrong";
    if (aborted) os << ", " << aborted << " aborted";
    return os.str();
}

StageResult stage_generate(const RunConfig& cfg) {
    const auto pack = load_problem_pack(cfg.problems);
    StageResult r{Stage::Generate, true, {}, {}};
    auto backend = cfg.backend.make();
    const auto m = generate_dataset(pack, *backend, generate_options(cfg, *cfg.generate_seed), cfg.dataset_dir());
    r.artifacts.push_back(cfg.dataset_dir());
    r.summary = dataset_line("dataset", m) + "\n";
    for (const auto& model : cfg.eval_models) {
        auto b = model.backend.make();
        const auto dir = cfg.runs_dir() / model.name;
        const auto mm = generate_dataset(pack, *b, generate_options(cfg, *model.seed), dir);
        r.artifacts.push_back(dir);
        r.summary += dataset_line("runs/" + model.name, mm) + "\n";
    }
    write_stage_manifest(cfg, Stage::Generate, cfg.generate_seed, r.artifacts);
    return r;
}

StageResult stage_augment(const RunConfig& cfg) {
    require(cfg.dataset_dir() / "manifest.json", Stage::Generate);
    const auto index = augment(cfg.dataset_dir());
    const auto file = cfg.augmented_file();
    save_pair_index(index, file);
    write_stage_manifest(cfg, Stage::Augment, std::nullopt, {file});
    return {Stage::Augment, true, "augmented pairs |D^a| = " + std::to_string(index.pairs.size()) + "\n", {file}};
}

StageResult stage_sample(const RunConfig& cfg) {
    const auto in = cfg.augmented_file();
    require(in, Stage::Augment);
    const auto augmented = load_pair_index(in);
    const auto sampled = sample_pairs(augmented, {*cfg.n_s, *cfg.sample_seed, false});
    const auto file = cfg.pairs_dir() / "sample.idx";
    save_pair_index(sampled, file);
    write_stage_manifest(cfg, Stage::Sample, cfg.sample_seed, {file});
    return {Stage::Sample, true,
            "sampled " + std::to_string(sampled.pairs.size()) + " of " + std::to_string(augmented.pairs.size()) +
                " pairs\n",
            {file}};
}

StageResult stage_split(const RunConfig& cfg) {
    const auto in = cfg.pairs_dir() / "sample.idx";
    require(in, Stage::Sample);
    const auto pack = load_problem_pack(cfg.problems);
    const auto sampled = load_pair_index(in);
    const auto result = split(sampled, {train_set(cfg, pack), std::nullopt}, universe(pack));
    const std::vector<fs::path> files{cfg.pairs_dir() / "train.idx", cfg.pairs_dir() / "test.idx",
                                      cfg.pairs_dir() / "split_counts.txt", cfg.pairs_dir() / "split_counts.json"};
    save_pair_index(result.train, files[0]);
    save_pair_index(result.test, files[1]);
    const auto text = render_split_counts(result);
    write_file(files[2], text);
    write_file(files[3], split_counts_json(result).dump(2) + "\n");
    write_stage_manifest(cfg, Stage::Split, std::nullopt, files);
    std::string summary = text;
    for (const auto& w : result.warnings) summary += "warning: " + w + "\n";
    return {Stage::Split, true, summary, files};
}

StageResult stage_export(const RunConfig& cfg) {
    const auto train_in = cfg.pairs_dir() / "train.idx";
    const auto test_in = cfg.pairs_dir() / "test.idx";
    require(train_in, Stage::Split);
    require(test_in, Stage::Split);
    const std::vector<fs::path> files{cfg.export_dir() / "train.jsonl", cfg.export_dir() / "test.jsonl"};
    const auto train = load_pair_index(train_in);
    const auto test = load_pair_index(test_in);
    export_dpo(train, files[0]);
    export_dpo(test, files[1]);
    write_stage_manifest(cfg, Stage::Export, std::nullopt, files);
    return {Stage::Export, true,
            "exported " + std::to_string(train.pairs.size()) + " train and " + std::to_string(test.pairs.size()) +
                " test records\n",
            files};
}

StageResult stage_eval(const RunConfig& cfg) {
    require(cfg.model_a() / "manifest.json", Stage::Generate);
    require(cfg.model_b() / "manifest.json", Stage::Generate);
    const auto pack = load_problem_pack(cfg.problems);
    eval::ReportInput input;
    input.original = eval::scores_from_manifest(DatasetManifest::load(cfg.model_a()));
    input.finetuned = eval::scores_from_manifest(DatasetManifest::load(cfg.model_b()));
    input.train = train_set(cfg, pack);
    input.alpha = cfg.alpha;
    input.original_name = cfg.model_a().filename().string();
    input.finetuned_name = cfg.model_b().filename().string();
    const auto report = eval::render_report(input);
    const std::vector<fs::path> files{cfg.eval_dir() / "report.txt", cfg.eval_dir() / "report.json"};
    write_file(files[0], report.text);
    write_file(files[1], report.json.dump(2) + "\n");
    write_stage_manifest(cfg, Stage::Eval, std::nullopt, files);
    return {Stage::Eval, true, report.text, files};
}

StageResult stage_dpo_check(const RunConfig& cfg) {
    const auto outcomes = dpo::run_dpo_checks(*cfg.dpo_seed);
    std::string text;
    json j = json::array();
    bool ok = true;
    for (const auto& o : outcomes) {
        text += std::string(o.passed ? "PASS " : "FAIL ") + o.name + ": " + o.detail + "\n";
        j.push_back({{"check", o.name}, {"passed", o.passed}, {"detail", o.detail}});
        ok = ok && o.passed;
    }
    const std::vector<fs::path> files{cfg.dpo_dir() / "checks.txt", cfg.dpo_dir() / "checks.json"};
    write_file(files[0], text);
    write_file(files[1], json{{"seed", *cfg.dpo_seed}, {"checks", j}}.dump(2) + "\n");
    write_stage_manifest(cfg, Stage::DpoCheck, cfg.dpo_seed, files);
    return {Stage::DpoCheck, ok, text, files};
}

StageResult stage_report(const RunConfig& cfg) {
    const auto report_json = cfg.eval_dir() / "report.json";
    const auto counts_json = cfg.pairs_dir() / "split_counts.json";
    require(report_json, Stage::Eval);
    require(counts_json, Stage::Split);
    require(cfg.dataset_dir() / "manifest.json", Stage::Generate);

    const auto dataset = DatasetManifest::load(cfg.dataset_dir());
    std::string augmented_line;
    {
        std::ifstream in(cfg.augmented_file());
        std::string header;
        if (in && std::getline(in, header)) {
            augmented_line = "augmented pairs |D^a| = " + std::to_string(json::parse(header).at("pairs").get<long>());
        }
    }
    std::ostringstream os;
    os << "config sha256: " << cfg.hash() << "\n";
    os << dataset_line("dataset", dataset) << "\n";
    if (!augmented_line.empty()) os << augmented_line << "\n";
    os << "\nSplit counts\n" << read_file(cfg.pairs_dir() / "split_counts.txt");
    os << "\n" << read_file(cfg.eval_dir() / "report.txt");

    const json summary = {{"config_sha256", cfg.hash()},
                          {"dataset", dataset.to_json()},
                          {"split_counts", json::parse(read_file(counts_json))},
                          {"evaluation", json::parse(read_file(report_json))}};
    const std::vector<fs::path> files{cfg.eval_dir() / "summary.txt", cfg.eval_dir() / "summary.json"};
    write_file(files[0], os.str());
    write_file(files[1], summary.dump(2) + "\n");
    write_stage_manifest(cfg, Stage::Report, std::nullopt, files);
    return {Stage::Report, true, os.str(), files};
}

}  // namespace

std::string_view stage_name(Stage stage) {
    for (const auto& [s, name] : kStages) {
        if (s == stage) return name;
    }
    return "unknown";
}

Stage parse_stage(std::string_view name) {
    for (const auto& [s, n] : kStages) {
        if (n == name) return s;
    }
    throw ValidationError("unknown stage " + std::string(name));
}

void BackendSpec::validate() const {
    if (kind == "mock") {
        MockPolicy{0, error_rate, premature_stop_rate, {}}.validate();
    } else if (kind == "http") {
        http.validate();
    } else {
        throw ValidationError("backend kind must be \"mock\" or \"http\", got \"" + kind + "\"");
    }
}

std::unique_ptr<Backend> BackendSpec::make() const {
    validate();
    if (kind == "http") return std::make_unique<HttpBackend>(http);
    return std::make_unique<MockBackend>(error_rate, premature_stop_rate);
}

json BackendSpec::to_json() const {
    if (kind == "http") {
        auto j = http.to_json();
        j["kind"] = "http";
        return j;
    }
    return {{"kind", kind}, {"error_rate", error_rate}, {"premature_stop_rate", premature_stop_rate}};
}

BackendSpec BackendSpec::from_json(const json& j) {
    BackendSpec b;
    if (!j.is_object()) throw ValidationError("backend must be a JSON object");
    try {
        b.kind = j.value("kind", std::string("mock"));
        if (b.kind == "mock") {
            check_keys(j, {"kind", "error_rate", "premature_stop_rate"}, "mock backend");
            b.error_rate = j.value("error_rate", 0.0);
            b.premature_stop_rate = j.value("premature_stop_rate", 0.0);
        } else {
            auto rest = j;
            rest.erase("kind");
            check_keys(rest,
                       {"endpoint", "model", "temperature", "timeout_ms", "max_retries", "api_key_env",
                        "retry_backoff_ms", "max_in_flight"},
                       "http backend");
            b.http = BackendConfig::from_json(rest);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("backend: ") + e.what());
    }
    b.validate();
    return b;
}

RunConfig RunConfig::load(const fs::path& file) {
    if (!fs::exists(file)) throw ValidationError("config file not found: " + file.string());
    json j;
    try {
        j = json::parse(read_file(file));
    } catch (const json::parse_error& e) {
        throw ValidationError(file.string() + ": " + e.what());
    }
    return from_json(j, fs::absolute(file).parent_path());
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
    RunConfig c;
    check_keys(j, {"problems", "output", "generate", "models", "sample", "split", "export", "eval", "dpo"}, "config");
    try {
        if (!j.contains("problems")) throw ValidationError("config needs \"problems\"");
        if (!j.contains("output")) throw ValidationError("config needs \"output\"");
        c.problems = resolve(base_dir, j.at("problems").get<std::string>());
        c.output = resolve(base_dir, j.at("output").get<std::string>());
        if (!fs::exists(c.problems)) throw ValidationError("problem pack not found: " + c.problems.string());

        if (j.contains("generate")) {
            const auto& g = j.at("generate");
            check_keys(g, {"backend", "n_c", "n_max", "seed", "workers"}, "generate");
            if (g.contains("backend")) c.backend = BackendSpec::from_json(g.at("backend"));
            c.n_c = g.value("n_c", c.n_c);
            if (g.contains("n_max")) c.n_max = g.at("n_max").get<std::vector<int>>();
            c.generate_seed = opt_seed(g, "seed");
            c.workers = g.value("workers", c.workers);
        }
        if (j.contains("models")) {
            for (const auto& m : j.at("models")) {
                check_keys(m, {"name", "backend", "seed"}, "models entry");
                ModelRun run;
                run.name = m.at("name").get<std::string>();
                if (m.contains("backend")) run.backend = BackendSpec::from_json(m.at("backend"));
                run.seed = opt_seed(m, "seed");
                c.eval_models.push_back(std::move(run));
            }
        }
        if (j.contains("sample")) {
            const auto& s = j.at("sample");
            check_keys(s, {"n_s", "seed"}, "sample");
            c.n_s = opt_seed(s, "n_s");
            c.sample_seed = opt_seed(s, "seed");
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            check_keys(s, {"train_fol", "train_gsm8k"}, "split");
            if (s.contains("train_fol")) c.train_fol = index_set(s.at("train_fol"), "split.train_fol");
            if (s.contains("train_gsm8k")) c.train_gsm8k = index_set(s.at("train_gsm8k"), "split.train_gsm8k");
        }
        if (j.contains("export")) {
            check_keys(j.at("export"), {"format"}, "export");
            c.export_format = j.at("export").value("format", c.export_format);
        }
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            check_keys(e, {"alpha", "dataset_a", "dataset_b", "out"}, "eval");
            c.alpha = e.value("alpha", c.alpha);
            if (e.contains("dataset_a") && !e.at("dataset_a").is_null()) c.dataset_a = resolve(base_dir, e.at("dataset_a").get<std::string>());
            if (e.contains("dataset_b") && !e.at("dataset_b").is_null()) c.dataset_b = resolve(base_dir, e.at("dataset_b").get<std::string>());
            if (e.contains("out") && !e.at("out").is_null()) c.report_dir = resolve(base_dir, e.at("out").get<std::string>());
        }
        if (j.contains("dpo")) {
            const auto& d = j.at("dpo");
            check_keys(d, {"beta", "seed"}, "dpo");
            c.beta = d.value("beta", c.beta);
            c.dpo_seed = opt_seed(d, "seed");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

json RunConfig::to_json() const {
    json models = json::array();
    for (const auto& m : eval_models) {
        models.push_back({{"name", m.name}, {"backend", m.backend.to_json()}, {"seed", seed_json(m.seed)}});
    }
    json split_j = json::object();
    if (train_fol) split_j["train_fol"] = *train_fol;
    if (train_gsm8k) split_j["train_gsm8k"] = *train_gsm8k;
    json eval_j = {{"alpha", alpha}};
    if (dataset_a) eval_j["dataset_a"] = dataset_a->generic_string();
    if (dataset_b) eval_j["dataset_b"] = dataset_b->generic_string();
    if (report_dir) eval_j["out"] = report_dir->generic_string();
    return {{"problems", problems.generic_string()},
            {"output", output.generic_string()},
            {"generate",
             {{"backend", backend.to_json()},
              {"n_c", n_c},
              {"n_max", n_max},
              {"seed", seed_json(generate_seed)},
              {"workers", workers}}},
            {"models", models},
            {"sample", {{"n_s", seed_json(n_s)}, {"seed", seed_json(sample_seed)}}},
            {"split", split_j},
            {"export", {{"format", export_format}}},
            {"eval", eval_j},
            {"dpo", {{"beta", beta}, {"seed", seed_json(dpo_seed)}}}};
}

std::string RunConfig::hash() const {
    auto j = to_json();
    j.erase("output");
    j["generate"].erase("workers");
    j["eval"].erase("out");
    // Locations are not content: the pack is identified by its canonical form.
    j["problems"] = problems.empty() ? json(nullptr)
                                     : json(sha256_hex(canonical_json(load_problem_pack(problems)).dump()));
    for (const char* key : {"dataset_a", "dataset_b"}) {
        if (!j["eval"].contains(key)) continue;
        const fs::path p = j["eval"][key].get<std::string>();
        const auto rel = fs::relative(p, output).generic_string();
        if (rel.rfind("..", 0) != 0) j["eval"][key] = rel;
    }
    return sha256_hex(j.dump());
}

fs::path RunConfig::model_a() const {
    if (dataset_a) return *dataset_a;
    return runs_dir() / (!eval_models.empty() ? eval_models[0].name : std::string("original"));
}

fs::path RunConfig::model_b() const {
    if (dataset_b) return *dataset_b;
    return runs_dir() / (eval_models.size() > 1 ? eval_models[1].name : std::string("finetuned"));
}

void RunConfig::validate_for(Stage stage) const {
    if (output.empty()) throw ValidationError("no output root configured");
    if (stage == Stage::Generate || stage == Stage::Split || stage == Stage::Eval) {
        if (problems.empty()) throw ValidationError("no problem pack configured (problems or --problems)");
        if (!fs::exists(problems)) throw ValidationError("problem pack not found: " + problems.string());
    }
    switch (stage) {
        case Stage::Generate:
            if (!generate_seed) throw ValidationError("generate needs an explicit seed (generate.seed or --seed)");
            if (n_c < 1) throw ValidationError("n_c must be >= 1");
            if (n_max.empty()) throw ValidationError("n_max needs at least one value");
            for (int v : n_max) {
                if (v < 1) throw ValidationError("n_max values must be >= 1");
            }
            if (std::set<int>(n_max.begin(), n_max.end()).size() != n_max.size()) {
                throw ValidationError("n_max values must be distinct");
            }
            if (workers < 1) throw ValidationError("workers must be >= 1");
            backend.validate();
            {
                std::set<std::string> names;
                for (const auto& m : eval_models) {
                    if (m.name.empty() || m.name.find_first_of("/\\") != std::string::npos || m.name == "." ||
                        m.name == "..") {
                        throw ValidationError("model name \"" + m.name + "\" is not a plain directory name");
                    }
                    if (!names.insert(m.name).second) throw ValidationError("duplicate model name " + m.name);
                    if (!m.seed) throw ValidationError("model " + m.name + " needs an explicit seed");
                    m.backend.validate();
                }
            }
            break;
        case Stage::Sample:
            if (!n_s) throw ValidationError("sample needs n_s (sample.n_s or --n-s)");
            if (!sample_seed) throw ValidationError("sample needs an explicit seed (sample.seed or --seed)");
            break;
        case Stage::Export:
            if (export_format != "dpo-jsonl") {
                throw ValidationError("unsupported export format " + export_format + " (only dpo-jsonl)");
            }
            break;
        case Stage::Eval:
            if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
            break;
        case Stage::DpoCheck:
            if (!dpo_seed) throw ValidationError("dpo-check needs an explicit seed (dpo.seed or --seed)");
            break;
        case Stage::Augment:
        case Stage::Split:
        case Stage::Report:
            break;
    }
}

StageResult run_stage(Stage stage, const RunConfig& config) {
    config.validate_for(stage);
    switch (stage) {
        case Stage::Generate: return stage_generate(config);
        case Stage::Augment: return stage_augment(config);
        case Stage::Sample: return stage_sample(config);
        case Stage::Split: return stage_split(config);
        case Stage::Export: return stage_export(config);
        case Stage::Eval: return stage_eval(config);
        case Stage::DpoCheck: return stage_dpo_check(config);
        case Stage::Report: return stage_report(config);
    }
    throw ValidationError("unknown stage");
}

std::vector<StageResult> run_pipeline(const RunConfig& config) {
    std::vector<StageResult> out;
    for (Stage s : {Stage::Generate, Stage::Augment, Stage::Sample, Stage::Split, Stage::Export, Stage::Eval,
                    Stage::Report}) {
        out.push_back(run_stage(s, config));
    }
    return out;
}

DpoLossSummary score_dpo_file(const fs::path& pairs_file, const fs::path& logprobs_file, double beta) {
    if (!fs::exists(pairs_file)) throw ValidationError("pair file not found: " + pairs_file.string());
    if (!fs::exists(logprobs_file)) throw ValidationError("log-prob file not found: " + logprobs_file.string());
    const auto records = load_dpo_jsonl(pairs_file);

    std::vector<dpo::PairLogProbs> batch;
    std::istringstream in(read_file(logprobs_file));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            batch.push_back({j.at("chosen_logp").get<double>(), j.at("rejected_logp").get<double>(),
                             j.at("ref_chosen_logp").get<double>(), j.at("ref_rejected_logp").get<double>()});
        } catch (const json::exception& e) {
            throw ValidationError(logprobs_file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (batch.size() != records.size()) {
        throw ValidationError("log-prob file has " + std::to_string(batch.size()) + " rows but the pair file has " +
                              std::to_string(records.size()) + " records");
    }
    if (batch.empty()) throw ValidationError("pair file is empty");

    DpoLossSummary s;
    s.pairs = batch.size();
    s.beta = beta;
    s.loss = dpo::dpo_loss(batch, beta);
    std::size_t positive = 0;
    for (const auto& p : batch) {
        const double z = dpo::preference_logit(p, beta);
        s.mean_reward_margin += z;
        if (z > 0) ++positive;
    }
    s.mean_reward_margin /= static_cast<double>(batch.size());
    s.accuracy = static_cast<double>(positive) / static_cast<double>(batch.size());
    return s;
}

}  // namespace chainforge
