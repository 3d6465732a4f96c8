#include "chainforge/error.hpp"
#include "chainforge/dataset.hpp"
#include "chainforge/hash.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <map>

using namespace chainforge;
namespace fs = std::filesystem;

namespace {

const ProblemPack& pack() {
    static const ProblemPack p = load_problem_pack(oracle::problems_path());
    return p;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / "chainforge_unit" / name;
    fs::remove_all(p);
    return p;
}

// Hand-made dataset: two prompts with (right, wrong) = (3, 2) and (0, 4).
fs::path tiny_dataset() {
    const auto root = scratch("tiny");
    DatasetManifest m;
    m.seed = 1;
    m.n_c = 5;
    m.n_max_values = {10};
    m.backend = {{"kind", "hand"}};
    PromptRecord a{Task::Fol, {1, 0, 0}, 10, 3, 2, 0};
    PromptRecord b{Task::Gsm8k, {0, 0, 2}, 10, 0, 4, 0};
    m.prompts = {b, a};
    for (const auto& r : m.prompts) {
        const auto dir = root / r.relative_dir();
        write_file(dir / "prompt.txt", "prompt " + r.relative_dir());
        for (int j = 0; j < r.right; ++j) {
            write_transcript(dir / "right" / (std::to_string(j) + ".jsonl"),
                             std::vector<ChatMessage>{{Role::Assistant, "Stop()"}, {Role::User, "right " + std::to_string(j)}});
        }
        for (int k = 0; k < r.wrong; ++k) {
            write_transcript(dir / "wrong" / (std::to_string(k) + ".jsonl"),
                             std::vector<ChatMessage>{{Role::Assistant, "Stop()"}, {Role::User, "wrong " + std::to_string(k)}});
        }
    }
    m.save(root);
    return root;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("augment is the per-prompt cross product") {
    const auto root = tiny_dataset();
    const auto idx = augment(root);
    REQUIRE(idx.pairs.size() == 6);
    CHECK(augmented_size(DatasetManifest::load(root)) == 6);
    std::set<std::pair<int, int>> jk;
    for (std::size_t i = 0; i < idx.pairs.size(); ++i) {
        const auto& p = idx.pairs[i];
        CHECK(p.position == i);
        CHECK(p.prompt_dir() == "fol/nmax_10/problem_0");
        jk.insert({p.chosen, p.rejected});
        CHECK(p.chosen_sha256 ==
              sha256_hex(read_file(root / p.prompt_dir() / "right" / (std::to_string(p.chosen) + ".jsonl"))));
    }
    CHECK(jk.size() == 6);
}

TEST_CASE("augment detects missing transcripts") {
    const auto root = tiny_dataset();
    fs::remove(root / "fol/nmax_10/problem_0/wrong/1.jsonl");
    CHECK_THROWS_AS(augment(root), IntegrityError);
}

TEST_CASE("pair index round-trips and detects truncation") {
    const auto root = tiny_dataset();
    const auto idx = augment(root);
    const auto file = root.parent_path() / "tiny_pairs" / "a.idx";
    save_pair_index(idx, file);
    const auto back = load_pair_index(file);
    CHECK(back.pairs == idx.pairs);
    CHECK(fs::equivalent(back.dataset_root, root));

    auto text = read_file(file);
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    write_file(file, text);
    CHECK_THROWS_AS(load_pair_index(file), IntegrityError);
    CHECK_THROWS_AS(load_pair_index(file.parent_path() / "none.idx"), DependencyError);
}

TEST_CASE("sampling without replacement") {
    PairIndex all;
    for (std::uint64_t i = 0; i < 50; ++i) all.pairs.push_back({i, Task::Fol, {1, 0, 0}, 10, 0, 0, "", ""});

    const auto full = sample_pairs(all, {50, 9, false});
    CHECK(full.pairs == all.pairs);

    const auto some = sample_pairs(all, {20, 9, false});
    CHECK(some.pairs.size() == 20);
    std::set<std::uint64_t> distinct;
    for (const auto& p : some.pairs) distinct.insert(p.position);
    CHECK(distinct.size() == 20);
    CHECK(std::is_sorted(some.pairs.begin(), some.pairs.end(),
                         [](const PairRef& a, const PairRef& b) { return a.position < b.position; }));
    CHECK(sample_pairs(all, {20, 9, false}).pairs == some.pairs);
    CHECK(sample_pairs(all, {20, 10, false}).pairs != some.pairs);

    CHECK_THROWS_AS(sample_pairs(all, {51, 9, false}), CapacityError);
    CHECK(sample_pairs(all, {0, 9, false}).pairs.empty());
    CHECK(sample_pairs(all, {80, 9, true}).pairs.size() == 80);
}

TEST_CASE("sampling is close to uniform") {
    PairIndex all;
    for (std::uint64_t i = 0; i < 20; ++i) all.pairs.push_back({i, Task::Fol, {1, 0, 0}, 10, 0, 0, "", ""});
    std::map<std::uint64_t, int> hits;
    const int trials = 4000;
    for (int s = 0; s < trials; ++s) {
        for (const auto& p : sample_pairs(all, {5, static_cast<std::uint64_t>(s), false}).pairs) ++hits[p.position];
    }
    // Each index is chosen with probability 5/20; expect 1000 +- ~4.5 sd.
    for (const auto& [pos, n] : hits) {
        CAPTURE(pos);
        CHECK(std::abs(n - 1000) < 125);
    }
    CHECK(hits.size() == 20);
}

TEST_CASE("split partitions by problem") {
    PairIndex all;
    std::uint64_t pos = 0;
    for (const auto& p : pack().problems) {
        for (int c = 0; c < 3; ++c) all.pairs.push_back({pos++, p.task, {static_cast<int>(p.task), 0, p.problem}, 10, c, 0, "", ""});
    }
    std::set<ProblemId> universe;
    for (const auto& p : pack().problems) universe.insert({p.task, p.problem});

    const auto r = split(all, {pack().default_train, std::nullopt}, universe);
    CHECK(r.train.pairs.size() == 27);
    CHECK(r.test.pairs.size() == 18);
    for (const auto& p : r.train.pairs) CHECK(pack().default_train.count(p.problem_id()) == 1);
    for (const auto& p : r.test.pairs) CHECK(pack().default_train.count(p.problem_id()) == 0);
    CHECK(r.warnings.empty());

    const auto text = render_split_counts(r);
    CHECK(text.find("  Training set          12          15          27") != std::string::npos);
    CHECK(text.find("    5             -             3              -              3") != std::string::npos);
    CHECK(split_counts_json(r)["test"]["overall"] == 18);

    std::set<ProblemId> everything = universe;
    CHECK_FALSE(split(all, {everything, std::nullopt}, universe).warnings.empty());
    CHECK_THROWS_AS(split(all, {{{Task::Fol, 0}}, std::set<ProblemId>{{Task::Fol, 0}}}, universe), SplitSpecError);
    CHECK_THROWS_AS(split(all, {{{Task::Fol, 9}}, std::nullopt}, universe), SplitSpecError);
    CHECK_THROWS_AS(split(all, {{{Task::Fol, 0}}, std::set<ProblemId>{{Task::Fol, 1}}}, universe), SplitSpecError);
}

TEST_CASE("export re-parses losslessly and checks hashes") {
    const auto root = tiny_dataset();
    const auto idx = augment(root);
    const auto out = root.parent_path() / "tiny_export" / "pairs.jsonl";
    export_dpo(idx, out);
    const auto recs = load_dpo_jsonl(out);
    REQUIRE(recs.size() == 6);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& p = idx.pairs[i];
        const auto dir = root / p.prompt_dir();
        CHECK(recs[i].prompt == read_file(dir / "prompt.txt"));
        CHECK(recs[i].chosen == read_transcript(dir / "right" / (std::to_string(p.chosen) + ".jsonl")));
        CHECK(recs[i].rejected == read_transcript(dir / "wrong" / (std::to_string(p.rejected) + ".jsonl")));
    }
    const auto first_line = read_file(out).substr(0, read_file(out).find('\n'));
    CHECK(first_line.rfind("{\"prompt\":", 0) == 0);
    CHECK(first_line.find("\"chosen\":[") < first_line.find("\"rejected\":["));

    write_file(root / "fol/nmax_10/problem_0/right/0.jsonl", "{\"role\": \"user\", \"content\": \"tampered\"}\n");
    CHECK_THROWS_AS(export_dpo(idx, out), IntegrityError);
}

}  // TEST_SUITE
