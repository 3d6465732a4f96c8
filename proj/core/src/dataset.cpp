#include "chainforge/dataset.hpp"

#include "chainforge/error.hpp"
#include "chainforge/hash.hpp"
#include "chainforge/random.hpp"
#include "chainforge/verifier.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace chainforge {
namespace fs = std::filesystem;

namespace {

nlohmann::json pair_to_json(const PairRef& p) {
    return {{"pair", p.position},   {"task", task_name(p.task)}, {"i_t", p.index.task},
            {"i_n", p.index.nmax},  {"i_p", p.index.problem},    {"n_max", p.n_max},
            {"j", p.chosen},        {"k", p.rejected},           {"chosen_sha256", p.chosen_sha256},
            {"rejected_sha256", p.rejected_sha256}};
}

PairRef pair_from_json(const nlohmann::json& j) {
    PairRef p;
    p.position = j.at("pair").get<std::uint64_t>();
    p.task = parse_task(j.at("task").get<std::string>());
    p.index = {j.at("i_t").get<int>(), j.at("i_n").get<int>(), j.at("i_p").get<int>()};
    p.n_max = j.at("n_max").get<int>();
    p.chosen = j.at("j").get<int>();
    p.rejected = j.at("k").get<int>();
    p.chosen_sha256 = j.at("chosen_sha256").get<std::string>();
    p.rejected_sha256 = j.at("rejected_sha256").get<std::string>();
    return p;
}

std::string problem_label(const ProblemId& id) {
    return std::string(task_name(id.first)) + " " + std::to_string(id.second);
}

}  // namespace

std::string PairRef::prompt_dir() const {
    return std::string(task_name(task)) + "/nmax_" + std::to_string(n_max) + "/problem_" +
           std::to_string(index.problem);
}

void save_pair_index(const PairIndex& index, const fs::path& file) {
    const auto base = file.has_parent_path() ? file.parent_path() : fs::path(".");
    fs::create_directories(base);
    const auto rel = fs::relative(fs::absolute(index.dataset_root), fs::absolute(base));
    std::string out = nlohmann::json{{"dataset", rel.generic_string()}, {"pairs", index.pairs.size()}}.dump() + "\n";
    for (const auto& p : index.pairs) out += pair_to_json(p).dump() + "\n";
    write_file(file, out);
}

PairIndex load_pair_index(const fs::path& file) {
    if (!fs::exists(file)) throw DependencyError("pair index " + file.string() + " not found");
    std::ifstream in(file);
    std::string line;
    PairIndex index;
    try {
        if (!std::getline(in, line)) throw IntegrityError("empty pair index " + file.string());
        const auto header = nlohmann::json::parse(line);
        const auto base = file.has_parent_path() ? file.parent_path() : fs::path(".");
        index.dataset_root = (base / header.at("dataset").get<std::string>()).lexically_normal();
        const auto expected = header.at("pairs").get<std::size_t>();
        while (std::getline(in, line)) {
            if (!line.empty()) index.pairs.push_back(pair_from_json(nlohmann::json::parse(line)));
        }
        if (index.pairs.size() != expected) {
            throw IntegrityError("pair index " + file.string() + " is truncated: header says " +
                                 std::to_string(expected) + " pairs, found " + std::to_string(index.pairs.size()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError("pair index " + file.string() + ": " + e.what());
    }
    return index;
}

std::uint64_t augmented_size(const DatasetManifest& manifest) {
    std::uint64_t total = 0;
    for (const auto& p : manifest.prompts) {
        total += static_cast<std::uint64_t>(p.right) * static_cast<std::uint64_t>(p.wrong);
    }
    return total;
}

PairIndex augment(const fs::path& dataset_root) {
    const auto manifest = DatasetManifest::load(dataset_root);
    PairIndex out;
    out.dataset_root = dataset_root;
    out.pairs.reserve(augmented_size(manifest));

    auto hash_all = [&](const fs::path& dir, int count) {
        std::vector<std::string> hashes;
        for (int i = 0; i < count; ++i) {
            const auto file = dir / (std::to_string(i) + ".jsonl");
            if (!fs::exists(file)) throw IntegrityError("dataset is missing transcript " + file.string());
            hashes.push_back(sha256_hex(read_file(file)));
        }
        return hashes;
    };

    std::uint64_t position = 0;
    for (const auto& prompt : manifest.prompts) {
        const auto dir = dataset_root / prompt.relative_dir();
        if (!fs::exists(dir / "prompt.txt")) throw IntegrityError("dataset is missing " + (dir / "prompt.txt").string());
        const auto right = hash_all(dir / "right", prompt.right);
        const auto wrong = hash_all(dir / "wrong", prompt.wrong);
        for (int j = 0; j < prompt.right; ++j) {
            for (int k = 0; k < prompt.wrong; ++k) {
                out.pairs.push_back({position++, prompt.task, prompt.index, prompt.n_max, j, k,
                                     right[static_cast<std::size_t>(j)], wrong[static_cast<std::size_t>(k)]});
            }
        }
    }
    return out;
}

PairIndex sample_pairs(const PairIndex& augmented, const SamplePlan& plan) {
    const std::uint64_t total = augmented.pairs.size();
    if (!plan.replacement && plan.n_s > total) {
        throw CapacityError("cannot draw " + std::to_string(plan.n_s) + " pairs without replacement from " +
                            std::to_string(total));
    }
    if (plan.replacement && plan.n_s > 0 && total == 0) throw CapacityError("cannot sample from an empty pair set");

    Rng rng(plan.seed);
    std::vector<std::uint64_t> picks;
    picks.reserve(plan.n_s);
    if (plan.replacement) {
        for (std::uint64_t i = 0; i < plan.n_s; ++i) picks.push_back(uniform_below(rng, total));
    } else {
        // Floyd's algorithm: exactly n_s distinct, uniformly chosen indices.
        std::unordered_set<std::uint64_t> chosen;
        chosen.reserve(plan.n_s);
        for (std::uint64_t j = total - plan.n_s; j < total; ++j) {
            const std::uint64_t t = uniform_below(rng, j + 1);
            const std::uint64_t pick = chosen.count(t) ? j : t;
            chosen.insert(pick);
            picks.push_back(pick);
        }
    }
    std::sort(picks.begin(), picks.end());

    PairIndex out;
    out.dataset_root = augmented.dataset_root;
    out.pairs.reserve(picks.size());
    for (auto i : picks) out.pairs.push_back(augmented.pairs[i]);
    return out;
}

SplitResult split(const PairIndex& pairs, const SplitSpec& spec, const std::set<ProblemId>& universe) {
    for (const auto& id : spec.train) {
        if (!universe.count(id)) throw SplitSpecError("train set names unknown problem " + problem_label(id));
    }
    std::set<ProblemId> test;
    if (spec.test) {
        for (const auto& id : *spec.test) {
            if (!universe.count(id)) throw SplitSpecError("test set names unknown problem " + problem_label(id));
            if (spec.train.count(id)) throw SplitSpecError("problem " + problem_label(id) + " is in both train and test");
        }
        for (const auto& id : universe) {
            if (!spec.train.count(id) && !spec.test->count(id)) {
                throw SplitSpecError("problem " + problem_label(id) + " is assigned to neither train nor test");
            }
        }
        test = *spec.test;
    } else {
        for (const auto& id : universe) {
            if (!spec.train.count(id)) test.insert(id);
        }
    }

    SplitResult r;
    r.train.dataset_root = pairs.dataset_root;
    r.test.dataset_root = pairs.dataset_root;
    for (const auto& p : pairs.pairs) {
        const auto id = p.problem_id();
        if (spec.train.count(id)) {
            r.train.pairs.push_back(p);
        } else if (test.count(id)) {
            r.test.pairs.push_back(p);
        } else {
            throw SplitSpecError("pair " + std::to_string(p.position) + " belongs to unassigned problem " +
                                 problem_label(id));
        }
    }
    if (test.empty()) r.warnings.push_back("every problem is assigned to train; the test set is empty");
    if (spec.train.empty()) r.warnings.push_back("no problem is assigned to train; the train set is empty");
    return r;
}

namespace {

struct CountTable {
    std::map<ProblemId, std::uint64_t> train, test;
    std::uint64_t total(const std::map<ProblemId, std::uint64_t>& side, Task task) const {
        std::uint64_t n = 0;
        for (const auto& [id, c] : side) {
            if (id.first == task) n += c;
        }
        return n;
    }
};

CountTable tally(const SplitResult& r) {
    CountTable t;
    for (const auto& p : r.train.pairs) ++t.train[p.problem_id()];
    for (const auto& p : r.test.pairs) ++t.test[p.problem_id()];
    return t;
}

std::string cell(const std::map<ProblemId, std::uint64_t>& side, const ProblemId& id) {
    auto it = side.find(id);
    return it == side.end() ? "-" : std::to_string(it->second);
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string render_split_counts(const SplitResult& result) {
    const auto t = tally(result);
    std::ostringstream os;
    const auto fol_train = t.total(t.train, Task::Fol), gsm_train = t.total(t.train, Task::Gsm8k);
    const auto fol_test = t.total(t.test, Task::Fol), gsm_test = t.total(t.test, Task::Gsm8k);
    os << pad("Dataset", 14) << pad("FOL", 12) << pad("GSM8K", 12) << pad("overall", 12) << "\n";
    os << pad("Training set", 14) << pad(std::to_string(fol_train), 12) << pad(std::to_string(gsm_train), 12)
       << pad(std::to_string(fol_train + gsm_train), 12) << "\n";
    os << pad("Test set", 14) << pad(std::to_string(fol_test), 12) << pad(std::to_string(gsm_test), 12)
       << pad(std::to_string(fol_test + gsm_test), 12) << "\n\n";

    os << pad("i_p", 5) << pad("Train (FOL)", 14) << pad("Test (FOL)", 14) << pad("Train (GSM8K)", 15)
       << pad("Test (GSM8K)", 15) << "\n";
    for (int i = 0; i <= max_problem_index(Task::Gsm8k); ++i) {
        os << pad(std::to_string(i), 5) << pad(cell(t.train, {Task::Fol, i}), 14)
           << pad(cell(t.test, {Task::Fol, i}), 14) << pad(cell(t.train, {Task::Gsm8k, i}), 15)
           << pad(cell(t.test, {Task::Gsm8k, i}), 15) << "\n";
    }
    os << pad("tot.", 5) << pad(std::to_string(fol_train), 14) << pad(std::to_string(fol_test), 14)
       << pad(std::to_string(gsm_train), 15) << pad(std::to_string(gsm_test), 15) << "\n";
    for (const auto& w : result.warnings) os << "warning: " << w << "\n";
    return os.str();
}

nlohmann::json split_counts_json(const SplitResult& result) {
    const auto t = tally(result);
    auto side_json = [](const std::map<ProblemId, std::uint64_t>& side) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& [id, c] : side) j.push_back({{"task", task_name(id.first)}, {"i_p", id.second}, {"pairs", c}});
        return j;
    };
    return {{"train", {{"fol", t.total(t.train, Task::Fol)},
                       {"gsm8k", t.total(t.train, Task::Gsm8k)},
                       {"overall", result.train.pairs.size()},
                       {"per_problem", side_json(t.train)}}},
            {"test", {{"fol", t.total(t.test, Task::Fol)},
                      {"gsm8k", t.total(t.test, Task::Gsm8k)},
                      {"overall", result.test.pairs.size()},
                      {"per_problem", side_json(t.test)}}},
            {"warnings", result.warnings}};
}

std::string dpo_record_line(const DpoRecord& record) {
    nlohmann::ordered_json j;
    j["prompt"] = record.prompt;
    j["chosen"] = nlohmann::ordered_json::array();
    j["rejected"] = nlohmann::ordered_json::array();
    for (const auto& m : record.chosen) j["chosen"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
    for (const auto& m : record.rejected) {
        j["rejected"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    return j.dump();
}

void export_dpo(const PairIndex& pairs, const fs::path& out_file) {
    std::map<std::string, std::string> prompts;
    std::map<fs::path, std::vector<ChatMessage>> cache;

    auto transcript = [&](const fs::path& file, const std::string& expected) -> const std::vector<ChatMessage>& {
        auto it = cache.find(file);
        if (it != cache.end()) return it->second;
        const auto bytes = read_file(file);
        if (sha256_hex(bytes) != expected) throw IntegrityError("transcript " + file.string() + " changed since augment");
        return cache.emplace(file, from_jsonl(bytes)).first->second;
    };

    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + out_file.string());
    for (const auto& p : pairs.pairs) {
        const auto dir = pairs.dataset_root / p.prompt_dir();
        auto pit = prompts.find(p.prompt_dir());
        if (pit == prompts.end()) pit = prompts.emplace(p.prompt_dir(), read_file(dir / "prompt.txt")).first;
        DpoRecord rec{pit->second,
                      transcript(dir / "right" / (std::to_string(p.chosen) + ".jsonl"), p.chosen_sha256),
                      transcript(dir / "wrong" / (std::to_string(p.rejected) + ".jsonl"), p.rejected_sha256)};
        out << dpo_record_line(rec) << "\n";
    }
    if (!out) throw Error("write failed for " + out_file.string());
}

std::vector<DpoRecord> load_dpo_jsonl(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DependencyError("DPO pair file " + file.string() + " not found");
    std::vector<DpoRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DpoRecord r;
            r.prompt = j.at("prompt").get<std::string>();
            for (const auto& m : j.at("chosen")) r.chosen.push_back(message_from_json(m));
            for (const auto& m : j.at("rejected")) r.rejected.push_back(message_from_json(m));
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw StructureError(file.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace chainforge
