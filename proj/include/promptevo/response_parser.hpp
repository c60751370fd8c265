#pragma once

// Tolerant extraction of structured answers from free-form oracle output.
//
// Oracle responses mix reasoning prose, markdown fences and Python-ish literals.
// These functions scan for literals anywhere in the text and use the LAST one that
// parses, since reasoning often quotes illustrative fragments before the answer.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "promptevo/types.hpp"

namespace promptevo {

/// Pairs from the last `prompts = [(neg, pos), ...]` assignment (falling back to the
/// last bare list of 2-tuples). Accepts single/double/triple quotes, adjacent-literal
/// concatenation, trailing commas and `#` comments. Members are trimmed; pairs with
/// an empty member are dropped. Throws ParseError when nothing usable is found.
std::vector<PromptPair> parse_prompt_pairs(std::string_view text);

/// Partition from the last `list[list[int]]` literal, converted from 1-based to 0-based.
/// Throws ParseError, CoverageError (missing indices) or DuplicateIndexError.
std::vector<std::vector<std::size_t>> parse_group_indices(std::string_view text, std::size_t expected_count);

/// One line of the form `N. ("neg", "pos")` optionally followed by `, Score: S`.
struct NumberedPair {
  std::size_t index = 0;
  PromptPair pair;
  std::optional<int> score;
};

/// Reads back the numbered lists the meta-prompt renderers produce.
std::vector<NumberedPair> parse_numbered_pairs(std::string_view text);

}  // namespace promptevo
