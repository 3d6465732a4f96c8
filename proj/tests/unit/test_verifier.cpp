#include "chainforge/error.hpp"
#include "chainforge/functions.hpp"
#include "chainforge/pack.hpp"
#include "chainforge/transcript.hpp"
#include "chainforge/verifier.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace chainforge;

namespace {

std::vector<ChatMessage> load(const std::string& name) { return from_jsonl(oracle::fixture(name)); }

const ProblemPack& pack() {
    static const ProblemPack p = load_problem_pack(oracle::problems_path());
    return p;
}

// Re-executes the assistant turns and checks every recorded reply.
ChainState replay(const std::vector<ChatMessage>& turns, const ProblemSpec& problem) {
    const FunctionRegistry reg(pack().facts);
    ChainState st;
    for (std::size_t i = 0; i + 1 < turns.size(); i += 2) {
        const auto parsed = parse_call(turns[i].content);
        std::string reply = std::holds_alternative<SyntaxFault>(parsed)
                                ? render_error(std::get<SyntaxFault>(parsed))
                                : reg.dispatch(std::get<FunctionCall>(parsed), problem, st).content;
        CHECK(reply == turns[i + 1].content);
    }
    return st;
}

}  // namespace

TEST_SUITE("verifier") {

TEST_CASE("iteration counts of the fixture transcripts") {
    CHECK(count_iterations(load("right_completion_literal.jsonl")) == 10);
    CHECK(count_iterations(load("right_completion.jsonl")) == 10);
    CHECK(count_iterations(load("right_completion_with_error.jsonl")) == 8);
    CHECK(count_iterations(load("wrong_completion.jsonl")) == 4);
}

TEST_CASE("labels of the fixture transcripts") {
    CHECK(classify_chain(load("right_completion_literal.jsonl"), 10) == ChainLabel{Label::Right, 10});
    CHECK(classify_chain(load("right_completion.jsonl"), 10) == ChainLabel{Label::Right, 10});
    CHECK(classify_chain(load("right_completion.jsonl"), 9).label == Label::Wrong);
    CHECK(classify_chain(load("right_completion_with_error.jsonl"), 10) == ChainLabel{Label::Right, 8});
    CHECK(classify_chain(load("wrong_completion.jsonl"), 10) == ChainLabel{Label::Wrong, 4});
    CHECK(classify_chain(load("wrong_completion.jsonl"), 20).label == Label::Wrong);
}

TEST_CASE("replaying the normalized transcripts reproduces every reply") {
    const auto& castaway = *pack().find(Task::Fol, 0);
    for (const char* name : {"right_completion.jsonl", "right_completion_with_error.jsonl"}) {
        CAPTURE(name);
        const auto st = replay(load(name), castaway);
        CHECK(st.predicates.size() == 3);
        CHECK(st.stopped);
        CHECK(check_correct_chain(st, castaway));
    }
    const auto st = replay(load("wrong_completion.jsonl"), castaway);
    CHECK(st.predicates.empty());
    CHECK_FALSE(check_correct_chain(st, castaway));
}

TEST_CASE("the literal transcript contains two commands the grammar rejects") {
    int faults = 0;
    for (const auto& m : load("right_completion_literal.jsonl")) {
        if (m.role == Role::Assistant && std::holds_alternative<SyntaxFault>(parse_call(m.content))) ++faults;
    }
    // Five positional Reasoning(...) calls and the ActsIn call missing its '='.
    CHECK(faults == 6);
}

TEST_CASE("FOL verifier needs the exact predicate order, all true") {
    const auto& p = *pack().find(Task::Fol, 0);
    const FunctionRegistry reg(pack().facts);
    auto run = [&](std::initializer_list<const char*> cmds) {
        ChainState st;
        for (const char* c : cmds) reg.dispatch(std::get<FunctionCall>(parse_call(c)), p, st);
        return check_correct_chain(st, p);
    };
    CHECK(run({R"(Actor(name="Tom Hanks"))", R"(Movie(x="Cast Away"))",
               R"(ActsIn(actor="Tom Hanks", movie_title="Cast Away"))"}));
    CHECK_FALSE(run({R"(Movie(x="Cast Away"))", R"(Actor(name="Tom Hanks"))",
                     R"(ActsIn(actor="Tom Hanks", movie_title="Cast Away"))"}));
    CHECK_FALSE(run({R"(Actor(name="Tom Hanks"))", R"(Movie(x="Cast Away"))"}));
    CHECK_FALSE(run({R"(Actor(name="Tom Hanks"))", R"(Actor(name="Tom Hanks"))", R"(Movie(x="Cast Away"))",
                     R"(ActsIn(actor="Tom Hanks", movie_title="Cast Away"))"}));
}

TEST_CASE("math verifier checks only the final value") {
    const auto& p = *pack().find(Task::Gsm8k, 0);
    ChainState st;
    CHECK_FALSE(check_correct_chain(st, p));
    st.last_value = Rational(72);
    CHECK(check_correct_chain(st, p));
    st.last_value = Rational(71);
    CHECK_FALSE(check_correct_chain(st, p));
}

TEST_CASE("structure errors") {
    std::vector<ChatMessage> odd{{Role::Assistant, "Stop()"}};
    CHECK_THROWS_AS(count_iterations(odd), StructureError);
    std::vector<ChatMessage> swapped{{Role::User, "x"}, {Role::Assistant, "Stop()"}};
    CHECK_THROWS_AS(count_iterations(swapped), StructureError);
    CHECK(count_iterations(std::vector<ChatMessage>{}) == 0);
    CHECK(classify_chain(std::vector<ChatMessage>{}, 10).label == Label::Wrong);
}

TEST_CASE("stop before a passing check is wrong") {
    std::vector<ChatMessage> t{{Role::Assistant, "Stop()"},
                               {Role::User, std::string(kProgramStopped)},
                               {Role::Assistant, "CheckCorrectChain()"},
                               {Role::User, "True"}};
    CHECK(classify_chain(t, 10).label == Label::Wrong);
}

TEST_CASE("transcript JSONL round-trips and uses the fixture spacing") {
    const auto text = oracle::fixture("right_completion.jsonl");
    const auto turns = from_jsonl(text);
    CHECK(to_jsonl(turns) == text);
    CHECK_THROWS_AS(from_jsonl("{\"role\": \"robot\", \"content\": \"x\"}\n"), StructureError);
    CHECK_THROWS_AS(from_jsonl("not json\n"), StructureError);
}

}  // TEST_SUITE
