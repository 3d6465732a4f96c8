#include "chainforge/error.hpp"
#include "chainforge/engine.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace chainforge;
namespace fs = std::filesystem;

namespace {

const ProblemPack& pack() {
    static const ProblemPack p = load_problem_pack(oracle::problems_path());
    return p;
}

// Scripted session replaying fixed commands, then Stop().
class Scripted final : public ChainSession {
public:
    explicit Scripted(std::vector<std::string> cmds) : cmds_(std::move(cmds)) {}
    std::string next(std::span<const ChatMessage>) override { return i_ < cmds_.size() ? cmds_[i_++] : "Stop()"; }

private:
    std::vector<std::string> cmds_;
    std::size_t i_ = 0;
};

class Failing final : public ChainSession {
public:
    std::string next(std::span<const ChatMessage>) override { throw TransportError("connection refused"); }
};

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / "chainforge_unit" / name;
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("error-free mock reproduces the right completion for Cast Away") {
    const auto& p = *pack().find(Task::Fol, 0);
    const FunctionRegistry reg(pack().facts);
    MockBackend backend(0.0, 0.0);
    auto session = backend.open(p, 42);
    const auto t = run_chain(p, reg, *session, 10);
    REQUIRE(t.label);
    CHECK(t.label->label == Label::Right);
    CHECK(t.turns == from_jsonl(oracle::fixture("right_completion.jsonl")));
    CHECK(t.prompt == oracle::fixture("movie_prompt.txt"));
}

TEST_CASE("premature check gives the wrong-completion pattern") {
    const auto& p = *pack().find(Task::Fol, 0);
    const FunctionRegistry reg(pack().facts);
    Scripted s({R"(Reasoning(reasoning="I need to reason step-by-step, checking if the actor and the film actualy exist"))",
                "Reasoning(reasoning=Check if Tom Hanks is an actor)", "CheckCorrectChain()", "Stop()"});
    const auto t = run_chain(p, reg, s, 10);
    CHECK(t.turns == from_jsonl(oracle::fixture("wrong_completion.jsonl")));
    CHECK(t.label->label == Label::Wrong);
}

TEST_CASE("cap stops the loop") {
    const auto& p = *pack().find(Task::Fol, 0);
    const FunctionRegistry reg(pack().facts);
    Scripted s(std::vector<std::string>(50, R"(Reasoning(reasoning="again"))"));
    const auto t = run_chain(p, reg, s, 10);
    CHECK(count_iterations(t.turns) == 10);
    CHECK(t.label->label == Label::Wrong);
    CHECK_THROWS_AS(run_chain(p, reg, s, 0), ValidationError);
}

TEST_CASE("backend failure aborts") {
    const auto& p = *pack().find(Task::Gsm8k, 0);
    const FunctionRegistry reg(pack().facts);
    Failing f;
    const auto t = run_chain(p, reg, f, 10);
    CHECK(t.status == ChainStatus::Aborted);
    CHECK(t.abort_reason == "connection refused");
}

TEST_CASE("every reference chain is right under the error-free mock") {
    const FunctionRegistry reg(pack().facts);
    MockBackend backend(0.0, 0.0);
    for (const auto& p : pack().problems) {
        CAPTURE(p.problem);
        auto s = backend.open(p, 0);
        CHECK(run_chain(p, reg, *s, 20).label->label == Label::Right);
        CHECK(p.reference_chain.size() <= 10);
    }
}

TEST_CASE("generated dataset layout and counts") {
    const auto root = scratch("gen");
    MockBackend backend(0.3, 0.05);
    GenerateOptions o;
    o.n_c = 12;
    o.seed = 5;
    const auto m = generate_dataset(pack(), backend, o, root);
    CHECK(m.prompts.size() == 30);
    CHECK(m.prompts.front().task == Task::Gsm8k);
    CHECK(m.prompts.front().relative_dir() == "gsm8k/nmax_10/problem_0");
    CHECK(m.prompts.back().relative_dir() == "fol/nmax_20/problem_5");
    for (const auto& r : m.prompts) {
        CHECK(r.right + r.wrong == 12);
        CHECK(r.index.task == static_cast<int>(r.task));
        const auto dir = root / r.relative_dir();
        CHECK(fs::exists(dir / "prompt.txt"));
        for (int j = 0; j < r.right; ++j) {
            const auto turns = read_transcript(dir / "right" / (std::to_string(j) + ".jsonl"));
            CHECK(classify_chain(turns, r.n_max).label == Label::Right);
        }
        for (int k = 0; k < r.wrong; ++k) {
            const auto turns = read_transcript(dir / "wrong" / (std::to_string(k) + ".jsonl"));
            CHECK(classify_chain(turns, r.n_max).label == Label::Wrong);
        }
    }
    CHECK(DatasetManifest::load(root).to_json() == m.to_json());
}

TEST_CASE("generation is deterministic across worker counts and resumes") {
    MockBackend backend(0.2, 0.1);
    GenerateOptions o;
    o.n_c = 8;
    o.seed = 77;
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    generate_dataset(pack(), backend, o, a);
    o.workers = 3;
    generate_dataset(pack(), backend, o, b);
    CHECK(oracle::tree(a) == oracle::tree(b));

    // Losing one prompt directory and re-running regenerates it identically.
    fs::remove_all(b / "fol" / "nmax_20" / "problem_3");
    generate_dataset(pack(), backend, o, b);
    CHECK(oracle::tree(a) == oracle::tree(b));

    o.seed = 78;
    CHECK_THROWS_AS(generate_dataset(pack(), backend, o, b), ValidationError);
}

TEST_CASE("missing manifest is a dependency error") {
    CHECK_THROWS_AS(DatasetManifest::load(scratch("nothing")), DependencyError);
}

}  // TEST_SUITE
