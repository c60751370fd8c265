#include "promptevo/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <string>
#include <variant>

#include "promptevo/errors.hpp"

namespace promptevo {

namespace {

// Minimal Python literal model: strings, integers, lists and tuples.
struct PyValue {
  enum class Kind { string, integer, list, tuple, other };
  Kind kind = Kind::other;
  std::string text;
  long long integer = 0;
  std::vector<PyValue> items;

  bool is_sequence() const { return kind == Kind::list || kind == Kind::tuple; }
};

struct LiteralError {};

class LiteralReader {
 public:
  LiteralReader(std::string_view src, std::size_t pos) : src_(src), pos_(pos) {}

  PyValue value() {
    skip_space();
    if (pos_ >= src_.size()) throw LiteralError{};
    const char c = src_[pos_];
    if (c == '[') return sequence(']', PyValue::Kind::list);
    if (c == '(') return sequence(')', PyValue::Kind::tuple);
    if (c == '"' || c == '\'' || is_string_prefix()) return string_concat();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') return integer();
    throw LiteralError{};
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool is_string_prefix() const {
    if (pos_ + 1 >= src_.size()) return false;
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_])));
    const char n = src_[pos_ + 1];
    return (c == 'r' || c == 'u') && (n == '"' || n == '\'');
  }

  PyValue sequence(char close, PyValue::Kind kind) {
    ++pos_;
    PyValue out;
    out.kind = kind;
    bool saw_comma = false;
    for (;;) {
      skip_space();
      if (pos_ >= src_.size()) throw LiteralError{};
      if (src_[pos_] == close) {
        ++pos_;
        break;
      }
      if (!out.items.empty() && !saw_comma) throw LiteralError{};
      out.items.push_back(value());
      skip_space();
      saw_comma = false;
      if (pos_ < src_.size() && src_[pos_] == ',') {
        ++pos_;
        saw_comma = true;
      }
    }
    // `("x")` is a parenthesised string in Python, not a 1-tuple.
    if (kind == PyValue::Kind::tuple && out.items.size() == 1 && !saw_comma) return out.items.front();
    return out;
  }

  PyValue integer() {
    std::size_t start = pos_;
    if (src_[pos_] == '-' || src_[pos_] == '+') ++pos_;
    const std::size_t digits = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ == digits) throw LiteralError{};
    if (pos_ < src_.size() && (src_[pos_] == '.' || std::isalpha(static_cast<unsigned char>(src_[pos_])))) {
      throw LiteralError{};
    }
    PyValue out;
    out.kind = PyValue::Kind::integer;
    try {
      out.integer = std::stoll(std::string(src_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      throw LiteralError{};
    }
    return out;
  }

  PyValue string_concat() {
    PyValue out;
    out.kind = PyValue::Kind::string;
    out.text = string_literal();
    for (;;) {
      const std::size_t save = pos_;
      skip_space();
      if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'' || is_string_prefix())) {
        out.text += string_literal();
      } else {
        pos_ = save;
        break;
      }
    }
    return out;
  }

  std::string string_literal() {
    bool raw = false;
    if (is_string_prefix()) {
      raw = std::tolower(static_cast<unsigned char>(src_[pos_])) == 'r';
      ++pos_;
    }
    const char quote = src_[pos_];
    const bool triple = src_.substr(pos_, 3) == std::string(3, quote);
    pos_ += triple ? 3 : 1;
    std::string out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (triple ? src_.substr(pos_, 3) == std::string(3, quote) : c == quote) {
        pos_ += triple ? 3 : 1;
        return out;
      }
      if (c == '\n' && !triple) throw LiteralError{};
      if (c == '\\' && pos_ + 1 < src_.size()) {
        const char e = src_[pos_ + 1];
        pos_ += 2;
        if (raw) {
          out += '\\';
          out += e;
          continue;
        }
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\': out += '\\'; break;
          case '\'': out += '\''; break;
          case '"': out += '"'; break;
          case '\n': break;
          default:
            out += '\\';
            out += e;
        }
        continue;
      }
      out += c;
      ++pos_;
    }
    throw LiteralError{};
  }

  std::string_view src_;
  std::size_t pos_;
};

struct Parsed {
  std::size_t start;
  std::size_t end;
  PyValue value;
};

std::optional<Parsed> read_literal(std::string_view text, std::size_t pos) {
  try {
    LiteralReader reader(text, pos);
    PyValue v = reader.value();
    return Parsed{pos, reader.pos(), std::move(v)};
  } catch (const LiteralError&) {
    return std::nullopt;
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

enum class PairShape { ok, arity, not_pairs };

PairShape check_pair_list(const PyValue& v) {
  if (!v.is_sequence() || v.items.empty()) return PairShape::not_pairs;
  bool arity_problem = false;
  for (const auto& item : v.items) {
    if (!item.is_sequence()) return PairShape::not_pairs;
    for (const auto& member : item.items) {
      if (member.kind != PyValue::Kind::string) return PairShape::not_pairs;
    }
    if (item.items.size() != 2) arity_problem = true;
  }
  return arity_problem ? PairShape::arity : PairShape::ok;
}

std::vector<PromptPair> to_pairs(const PyValue& v) {
  std::vector<PromptPair> out;
  for (const auto& item : v.items) {
    PromptPair p{trim(item.items[0].text), trim(item.items[1].text)};
    if (p.negative.empty() || p.positive.empty()) continue;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<PromptPair> parse_prompt_pairs(std::string_view text) {
  const std::string owned(text);
  bool arity_error = false;

  // Preferred: `prompts = [...]` (optionally annotated, e.g. `prompts: list[...] = [...]`).
  static const std::regex assignment(R"(\bprompts\s*(?::[^=\n]*)?=\s*)");
  std::optional<Parsed> best;
  for (auto it = std::sregex_iterator(owned.begin(), owned.end(), assignment); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position() + it->length());
    auto parsed = read_literal(text, pos);
    if (!parsed) continue;
    const auto shape = check_pair_list(parsed->value);
    if (shape == PairShape::arity) arity_error = true;
    if (shape == PairShape::ok) best = std::move(parsed);
  }

  if (!best) {
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
      if (text[pos] != '[') continue;
      auto parsed = read_literal(text, pos);
      if (!parsed) continue;
      const auto shape = check_pair_list(parsed->value);
      if (shape == PairShape::arity) arity_error = true;
      if (shape != PairShape::ok) continue;
      if (!best || parsed->end > best->end) best = std::move(parsed);
      pos = best->end - 1;
    }
  }

  if (!best) {
    throw ParseError(arity_error ? "prompt tuples must have exactly two members"
                                 : "no prompt pair list found in oracle output",
                     owned);
  }
  auto pairs = to_pairs(best->value);
  if (pairs.empty()) throw ParseError("prompt pair list contains no non-empty pairs", owned);
  return pairs;
}

std::vector<std::vector<std::size_t>> parse_group_indices(std::string_view text, std::size_t expected_count) {
  if (expected_count < 1) throw InputError("expected_count must be at least 1");
  const std::string owned(text);

  auto is_groups = [](const PyValue& v) {
    if (!v.is_sequence() || v.items.empty()) return false;
    for (const auto& g : v.items) {
      if (!g.is_sequence()) return false;
      for (const auto& x : g.items) {
        if (x.kind != PyValue::Kind::integer) return false;
      }
    }
    return true;
  };

  std::optional<Parsed> best;
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    if (text[pos] != '[') continue;
    auto parsed = read_literal(text, pos);
    if (!parsed || !is_groups(parsed->value)) continue;
    if (!best || parsed->end > best->end) best = std::move(parsed);
    pos = best->end - 1;
  }
  if (!best) throw ParseError("no list[list[int]] literal found in oracle output", owned);

  std::vector<std::vector<std::size_t>> groups;
  std::vector<bool> seen(expected_count, false);
  for (const auto& g : best->value.items) {
    std::vector<std::size_t> group;
    for (const auto& x : g.items) {
      if (x.integer < 1 || static_cast<std::size_t>(x.integer) > expected_count) {
        throw ParseError("group index " + std::to_string(x.integer) + " outside 1.." + std::to_string(expected_count),
                         owned);
      }
      const auto idx = static_cast<std::size_t>(x.integer - 1);
      if (seen[idx]) throw DuplicateIndexError(idx, owned);
      seen[idx] = true;
      group.push_back(idx);
    }
    if (!group.empty()) groups.push_back(std::move(group));
  }
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < expected_count; ++i) {
    if (!seen[i]) missing.push_back(i);
  }
  if (!missing.empty()) throw CoverageError(std::move(missing), owned);
  return groups;
}

std::vector<NumberedPair> parse_numbered_pairs(std::string_view text) {
  std::vector<NumberedPair> out;
  std::size_t line_start = 0;
  static const std::regex score_re(R"(^\s*,?\s*Score:\s*(-?\d+))");
  while (line_start <= text.size()) {
    auto line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    const std::string_view line = text.substr(line_start, line_end - line_start);
    line_start = line_end + 1;

    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t digits = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits || i >= line.size() || line[i] != '.') continue;
    const auto index = static_cast<std::size_t>(std::stoul(std::string(line.substr(digits, i - digits))));
    ++i;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] != '(') continue;

    auto parsed = read_literal(line, i);
    if (!parsed || parsed->value.kind != PyValue::Kind::tuple || parsed->value.items.size() != 2 ||
        parsed->value.items[0].kind != PyValue::Kind::string || parsed->value.items[1].kind != PyValue::Kind::string) {
      continue;
    }
    NumberedPair entry;
    entry.index = index;
    entry.pair = {parsed->value.items[0].text, parsed->value.items[1].text};
    const std::string rest(line.substr(parsed->end));
    std::smatch m;
    if (std::regex_search(rest, m, score_re)) entry.score = std::stoi(m[1].str());
    out.push_back(std::move(entry));
    if (line_end == text.size()) break;
  }
  return out;
}

}  // namespace promptevo
