#include "promptevo/templates.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "promptevo/errors.hpp"

namespace promptevo {

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::init: return "init";
    case TemplateKind::mutate: return "mutate";
    case TemplateKind::crowd: return "crowd";
  }
  return "init";
}

namespace {

constexpr std::string_view kBuiltinInit =
    "Give {count} distinct textual descriptions of pairs of visual discriminative features to identify "
    "{task_description}.\n"
    "Each description pair must contain two contrasting features: one indicative of a normal finding, "
    "and one indicative of the disease.\n"
    "\n"
    "Only provide the output as Python code in the following format: "
    "prompts = list[tuple[negative: str, positive: str]]\n";

constexpr std::string_view kBuiltinMutate =
    "The task is to generate distinct textual descriptions pairs of visual discriminative features to "
    "identify {task_description}.\n"
    "\n"
    "Here are the best performing pairs in ascending order. High scores indicate higher quality visual "
    "discriminative features.\n"
    "Current top {selection_size} prompt pairs:\n"
    "{exemplar_block}\n"
    "\n"
    "Write {count} new prompt pairs that are different from the old ones and have a score as high as "
    "possible. {cot_strategy}\n"
    "Only provide the output as Python code in the following format: "
    "prompts = list[tuple[negative: str, positive: str]]. {cot_reasoning}\n";

constexpr std::string_view kBuiltinCrowd =
    "The task is to group textual description pairs of visual discriminative features for "
    "{task_description}.\n"
    "Current Prompt Pairs: Format: <Index. Prompt Pair>\n"
    "{batch_block}\n"
    "\n"
    "Each pair corresponds to a feature of the same medical concept. Group the prompt pairs that has "
    "exactly same observation but differ only in language variations. Give the indexes of the grouped "
    "pairs in the output.\n"
    "Provide the output as follows: list[list[index:int]]. Make sure to include all pairs in the output, "
    "even if they are not grouped with others.\n"
    "Let's think step by step.\n";

constexpr std::string_view kBlockSentinel = "\x01block\x01";

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

void replace_all(std::string& text, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
}

void append_line(std::string& text, std::string_view line) {
  if (!text.empty() && text.back() != '\n') text += '\n';
  text += line;
  text += '\n';
}

// Trailing spaces left behind by empty placeholders.
std::string strip_line_ends(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pending = 0;
  for (char c : text) {
    if (c == ' ' || c == '\t') {
      ++pending;
      continue;
    }
    if (c != '\n') out.append(pending, ' ');
    pending = 0;
    out += c;
  }
  return out;
}

void check_resolved(const std::string& text) {
  static const std::regex placeholder(R"(\{[A-Za-z_][A-Za-z0-9_]*\})");
  std::smatch m;
  if (std::regex_search(text, m, placeholder)) {
    throw TemplateError("unresolved placeholder " + m.str());
  }
}

std::string escape_python(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void MetaPromptTemplate::validate() const {
  auto require = [&](std::string_view placeholder) {
    if (!contains(body, placeholder)) {
      throw TemplateError(std::string(to_string(kind)) + " template must reference " + std::string(placeholder));
    }
  };
  switch (kind) {
    case TemplateKind::init:
      require("{count}");
      require("{task_description}");
      break;
    case TemplateKind::mutate:
      require("{exemplar_block}");
      break;
    case TemplateKind::crowd:
      require("{batch_block}");
      break;
  }
}

MetaPromptTemplate MetaPromptTemplate::builtin(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::init: return {kind, std::string(kBuiltinInit), true};
    case TemplateKind::mutate: return {kind, std::string(kBuiltinMutate), true};
    case TemplateKind::crowd: return {kind, std::string(kBuiltinCrowd), true};
  }
  return {};
}

MetaPromptTemplate MetaPromptTemplate::from_file(TemplateKind kind, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot read template '" + path + "'");
  std::ostringstream body;
  body << in.rdbuf();
  MetaPromptTemplate tmpl{kind, body.str(), true};
  tmpl.validate();
  return tmpl;
}

std::string format_pair_literal(const PromptPair& pair) {
  return "(\"" + escape_python(pair.negative) + "\", \"" + escape_python(pair.positive) + "\")";
}

std::string render_init_prompt(const MetaPromptTemplate& tmpl, int count, std::string_view task) {
  if (tmpl.kind != TemplateKind::init) throw TemplateError("expected an init template");
  if (count < 1) throw InputError("init count must be at least 1");
  tmpl.validate();
  std::string text = tmpl.body;
  replace_all(text, "{count}", std::to_string(count));
  replace_all(text, "{task_description}", task);
  if (!contains(text, "prompts = list[tuple[")) append_line(text, kPairFormatInstruction);
  check_resolved(text);
  return text;
}

std::string render_mutation_prompt(const MetaPromptTemplate& tmpl, const ExemplarBlock& exemplars, int count,
                                   std::string_view task) {
  if (tmpl.kind != TemplateKind::mutate) throw TemplateError("expected a mutate template");
  if (count < 1) throw InputError("mutation count must be at least 1");
  if (exemplars.empty()) throw InputError("mutation prompt needs at least one exemplar");
  for (std::size_t i = 1; i < exemplars.size(); ++i) {
    if (exemplars[i].score < exemplars[i - 1].score) {
      throw OrderError("exemplars must be in ascending score order");
    }
  }
  tmpl.validate();
  if (!tmpl.cot_enabled && (contains(tmpl.body, kCotStrategy) || contains(tmpl.body, kCotReasoning))) {
    throw TemplateError("template hard-codes chain-of-thought phrases; use {cot_strategy}/{cot_reasoning}");
  }

  std::string block;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (i) block += '\n';
    block += std::to_string(i + 1) + ". " + format_pair_literal(exemplars[i].pair) +
             ", Score: " + std::to_string(exemplars[i].score);
  }

  std::string text = tmpl.body;
  const bool has_cot_slots = contains(text, "{cot_strategy}") || contains(text, "{cot_reasoning}");
  replace_all(text, "{count}", std::to_string(count));
  replace_all(text, "{selection_size}", std::to_string(exemplars.size()));
  replace_all(text, "{task_description}", task);
  replace_all(text, "{cot_strategy}", tmpl.cot_enabled ? std::string(kCotStrategy) + "." : "");
  replace_all(text, "{cot_reasoning}", tmpl.cot_enabled ? kCotReasoning : "");
  if (!contains(text, "prompts = list[tuple[")) append_line(text, kPairFormatInstruction);
  if (tmpl.cot_enabled && !has_cot_slots) {
    append_line(text, std::string(kCotStrategy) + ". " + std::string(kCotReasoning));
  }
  // Substituted last so pair texts containing braces are not mistaken for placeholders.
  replace_all(text, "{exemplar_block}", kBlockSentinel);
  check_resolved(text);
  replace_all(text, kBlockSentinel, block);
  return strip_line_ends(text);
}

std::string render_crowd_prompt(const MetaPromptTemplate& tmpl, std::span<const PromptPair> batch,
                                std::string_view task, std::size_t max_batch) {
  if (tmpl.kind != TemplateKind::crowd) throw TemplateError("expected a crowd template");
  if (batch.empty()) throw InputError("crowding batch is empty");
  if (batch.size() > max_batch) {
    throw InputError("crowding batch of " + std::to_string(batch.size()) + " exceeds limit " +
                     std::to_string(max_batch));
  }
  tmpl.validate();
  std::string block;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i) block += '\n';
    block += std::to_string(i + 1) + ". " + format_pair_literal(batch[i]);
  }
  std::string text = tmpl.body;
  replace_all(text, "{task_description}", task);
  replace_all(text, "{count}", std::to_string(batch.size()));
  if (!contains(text, "Make sure to include all pairs in the output")) append_line(text, kCoverageInstruction);
  replace_all(text, "{batch_block}", kBlockSentinel);
  check_resolved(text);
  replace_all(text, kBlockSentinel, block);
  return text;
}

}  // namespace promptevo
