#pragma once

/// @file templates.hpp
/// Meta-prompt templates for the three oracle requests: building the initial
/// population, mutating selected exemplars, and grouping near-duplicate pairs.
///
/// Placeholders are written `{name}`:
///  - `{count}` pairs requested (init, mutate)
///  - `{task_description}` (all kinds)
///  - `{selection_size}` number of exemplars shown (mutate)
///  - `{exemplar_block}` scored exemplar list (mutate, required)
///  - `{batch_block}` numbered pair list (crowd, required)
///  - `{cot_strategy}`, `{cot_reasoning}` chain-of-thought instructions (mutate)
///
/// Chain-of-thought phrases are only produced through the two `cot_*`
/// placeholders; with CoT on and neither placeholder present they are appended.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/types.hpp"

namespace promptevo {

enum class TemplateKind { init, mutate, crowd };

std::string_view to_string(TemplateKind kind);

inline constexpr std::string_view kPairFormatInstruction =
    "Only provide the output as Python code in the following format: "
    "prompts = list[tuple[negative: str, positive: str]]";
inline constexpr std::string_view kCotStrategy = "Formulate a strategy";
inline constexpr std::string_view kCotReasoning = "Let's think step-by-step";
inline constexpr std::string_view kCoverageInstruction =
    "Make sure to include all pairs in the output, even if they are not grouped with others.";

struct MetaPromptTemplate {
  TemplateKind kind = TemplateKind::init;
  std::string body;
  bool cot_enabled = true;

  /// Throws TemplateError if a required placeholder for `kind` is missing.
  void validate() const;

  static MetaPromptTemplate builtin(TemplateKind kind);
  static MetaPromptTemplate from_file(TemplateKind kind, const std::string& path);
};

struct Exemplar {
  PromptPair pair;
  int score = 0;
};

/// Exemplars in ascending score order, scores in [60, 90].
using ExemplarBlock = std::vector<Exemplar>;

/// `("negative", "positive")` with Python-style escaping.
std::string format_pair_literal(const PromptPair& pair);

std::string render_init_prompt(const MetaPromptTemplate& tmpl, int count, std::string_view task);
std::string render_mutation_prompt(const MetaPromptTemplate& tmpl, const ExemplarBlock& exemplars, int count,
                                   std::string_view task = {});
/// `max_batch` bounds the batch size (the configured crowding batch size).
std::string render_crowd_prompt(const MetaPromptTemplate& tmpl, std::span<const PromptPair> batch,
                                std::string_view task = {}, std::size_t max_batch = 30);

}  // namespace promptevo
