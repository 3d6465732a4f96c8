#include "chainforge/engine.hpp"

#include "chainforge/error.hpp"
#include "chainforge/hash.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace chainforge {
namespace fs = std::filesystem;

ChainTranscript run_chain(const ProblemSpec& problem, const FunctionRegistry& registry, ChainSession& session,
                          int n_max) {
    if (n_max < 1) throw ValidationError("n_max must be >= 1");
    const auto specs = registry.specs_for(problem);

    ChainTranscript t;
    t.prompt = render_prompt(problem, specs);

    std::vector<ChatMessage> messages{{Role::System, t.prompt}};
    ChainState state;
    for (int iteration = 0; iteration < n_max; ++iteration) {
        std::string content;
        try {
            content = session.next(messages);
        } catch (const BackendError& e) {
            t.status = ChainStatus::Aborted;
            t.abort_reason = e.what();
            t.turns.assign(messages.begin() + 1, messages.end());
            return t;
        }

        const auto parsed = parse_call(content);
        DispatchResult reply;
        if (const auto* fault = std::get_if<SyntaxFault>(&parsed)) {
            reply = {render_error(*fault), Effect::None, false};
        } else {
            reply = registry.dispatch(std::get<FunctionCall>(parsed), problem, state);
        }
        messages.push_back({Role::Assistant, std::move(content)});
        messages.push_back({Role::User, std::move(reply.content)});
        if (reply.effect == Effect::Stop) break;
    }

    t.turns.assign(messages.begin() + 1, messages.end());
    t.label = classify_chain(t.turns, n_max);
    return t;
}

std::uint64_t chain_seed(std::uint64_t seed, const DatasetIndex& index, int chain, int attempt) {
    return derive_seed({seed, static_cast<std::uint64_t>(index.task), static_cast<std::uint64_t>(index.nmax),
                        static_cast<std::uint64_t>(index.problem), static_cast<std::uint64_t>(chain),
                        static_cast<std::uint64_t>(attempt)});
}

std::string PromptRecord::relative_dir() const {
    return std::string(task_name(task)) + "/nmax_" + std::to_string(n_max) + "/problem_" +
           std::to_string(index.problem);
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json prompts_json = nlohmann::json::array();
    for (const auto& p : prompts) {
        prompts_json.push_back({{"path", p.relative_dir()},
                                {"task", task_name(p.task)},
                                {"i_t", p.index.task},
                                {"i_n", p.index.nmax},
                                {"i_p", p.index.problem},
                                {"n_max", p.n_max},
                                {"right", p.right},
                                {"wrong", p.wrong},
                                {"aborted", p.aborted}});
    }
    return {{"kind", "chainforge-dataset"},
            {"seed", seed},
            {"n_c", n_c},
            {"n_max", n_max_values},
            {"backend", backend},
            {"problems_sha256", problems_sha256},
            {"prompts", prompts_json}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.n_c = j.at("n_c").get<int>();
        m.n_max_values = j.at("n_max").get<std::vector<int>>();
        m.backend = j.at("backend");
        m.problems_sha256 = j.at("problems_sha256").get<std::string>();
        for (const auto& p : j.at("prompts")) {
            PromptRecord r;
            r.task = parse_task(p.at("task").get<std::string>());
            r.index = {p.at("i_t").get<int>(), p.at("i_n").get<int>(), p.at("i_p").get<int>()};
            r.n_max = p.at("n_max").get<int>();
            r.right = p.at("right").get<int>();
            r.wrong = p.at("wrong").get<int>();
            r.aborted = p.value("aborted", 0);
            m.prompts.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("dataset manifest: ") + e.what());
    }
    return m;
}

DatasetManifest DatasetManifest::load(const fs::path& root) {
    const auto path = root / "manifest.json";
    if (!fs::exists(path)) {
        throw DependencyError("no dataset manifest at " + path.string() + " (run the generate stage first)");
    }
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw IntegrityError(path.string() + ": " + e.what());
    }
}

void DatasetManifest::save(const fs::path& root) const {
    write_file(root / "manifest.json", to_json().dump(2) + "\n");
}

bool DatasetManifest::same_settings(const DatasetManifest& other) const {
    return seed == other.seed && n_c == other.n_c && n_max_values == other.n_max_values &&
           backend == other.backend && problems_sha256 == other.problems_sha256;
}

namespace {

std::size_t count_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) return 0;
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

bool prompt_on_disk(const fs::path& root, const PromptRecord& r) {
    const auto dir = root / r.relative_dir();
    return fs::exists(dir / "prompt.txt") && count_files(dir / "right") == static_cast<std::size_t>(r.right) &&
           count_files(dir / "wrong") == static_cast<std::size_t>(r.wrong);
}

// Runs n_c chain slots (possibly on several threads); results indexed by slot.
std::vector<ChainTranscript> run_slots(const ProblemSpec& problem, const FunctionRegistry& registry,
                                       Backend& backend, const GenerateOptions& options, const DatasetIndex& index,
                                       int n_max, int& aborted_total) {
    std::vector<ChainTranscript> results(static_cast<std::size_t>(options.n_c));
    std::vector<int> aborted(results.size(), 0);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (int slot = next++; slot < options.n_c; slot = next++) {
            try {
                for (int attempt = 0;; ++attempt) {
                    auto session = backend.open(problem, chain_seed(options.seed, index, slot, attempt));
                    auto t = run_chain(problem, registry, *session, n_max);
                    if (t.status == ChainStatus::Complete) {
                        results[static_cast<std::size_t>(slot)] = std::move(t);
                        break;
                    }
                    ++aborted[static_cast<std::size_t>(slot)];
                    if (attempt + 1 >= options.attempts_per_chain) {
                        throw BackendError("chain aborted " + std::to_string(attempt + 1) +
                                           " times: " + t.abort_reason);
                    }
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = options.n_c;
            }
        }
    };

    const int threads = std::max(1, std::min(options.workers, options.n_c));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    for (int a : aborted) aborted_total += a;
    return results;
}

}  // namespace

DatasetManifest generate_dataset(const ProblemPack& pack, Backend& backend, const GenerateOptions& options,
                                 const fs::path& root) {
    if (options.n_c < 1) throw ValidationError("n_c must be >= 1");
    if (options.n_max_values.empty()) throw ValidationError("at least one n_max value is required");
    for (int n : options.n_max_values) {
        if (n < 1) throw ValidationError("n_max values must be >= 1");
    }
    if (options.attempts_per_chain < 1) throw ValidationError("attempts_per_chain must be >= 1");
    if (pack.problems.empty()) throw ValidationError("problem pack is empty");

    DatasetManifest manifest;
    manifest.seed = options.seed;
    manifest.n_c = options.n_c;
    manifest.n_max_values = options.n_max_values;
    manifest.backend = backend.describe();
    manifest.problems_sha256 = sha256_hex(canonical_json(pack).dump());

    std::vector<PromptRecord> done;
    if (fs::exists(root / "manifest.json")) {
        auto previous = DatasetManifest::load(root);
        if (!previous.same_settings(manifest)) {
            throw ValidationError("dataset at " + root.string() +
                                  " was generated with different settings; use a fresh output directory");
        }
        for (const auto& r : previous.prompts) {
            if (prompt_on_disk(root, r)) done.push_back(r);
        }
    }

    FunctionRegistry registry(pack.facts);
    for (Task task : {Task::Gsm8k, Task::Fol}) {
        for (std::size_t in = 0; in < options.n_max_values.size(); ++in) {
            const int n_max = options.n_max_values[in];
            for (const auto& problem : pack.problems) {
                if (problem.task != task) continue;
                PromptRecord record;
                record.task = task;
                record.index = {static_cast<int>(task), static_cast<int>(in), problem.problem};
                record.n_max = n_max;

                auto prior = std::find_if(done.begin(), done.end(),
                                          [&](const PromptRecord& r) { return r.index == record.index; });
                if (prior != done.end()) {
                    manifest.prompts.push_back(*prior);
                    continue;
                }

                const auto dir = root / record.relative_dir();
                fs::remove_all(dir);
                auto transcripts = run_slots(problem, registry, backend, options, record.index, n_max, record.aborted);
                write_file(dir / "prompt.txt", transcripts.front().prompt);
                fs::create_directories(dir / "right");
                fs::create_directories(dir / "wrong");
                for (const auto& t : transcripts) {
                    if (t.label->label == Label::Right) {
                        write_transcript(dir / "right" / (std::to_string(record.right++) + ".jsonl"), t.turns);
                    } else {
                        write_transcript(dir / "wrong" / (std::to_string(record.wrong++) + ".jsonl"), t.turns);
                    }
                }
                manifest.prompts.push_back(record);
                manifest.save(root);
            }
        }
    }
    manifest.save(root);
    return manifest;
}

}  // namespace chainforge
