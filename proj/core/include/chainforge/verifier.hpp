#pragma once

#include "chainforge/problem.hpp"
#include "chainforge/transcript.hpp"

#include <span>

namespace chainforge {

enum class Label { Right, Wrong };

std::string_view label_name(Label label);

struct ChainLabel {
    Label label = Label::Wrong;
    int iterations = 0;

    friend bool operator==(const ChainLabel&, const ChainLabel&) = default;
};

// FOL: the executed predicate subsequence equals the expected trace (names and
// arguments) and every predicate answered True. GSM8K: the last arithmetic
// value equals the gold answer exactly.
bool check_correct_chain(const ChainState& state, const ProblemSpec& problem);

// Number of (assistant, user) pairs. Throws StructureError unless the turns
// alternate strictly, start with assistant and end with user.
int count_iterations(std::span<const ChatMessage> turns);

// Right iff some CheckCorrectChain() turn was answered "True", a Stop() turn
// was answered afterwards, and the chain fits within n_max iterations. Reads
// only the recorded turns, so stored transcripts can be relabelled offline.
ChainLabel classify_chain(std::span<const ChatMessage> turns, int n_max);

}  // namespace chainforge
