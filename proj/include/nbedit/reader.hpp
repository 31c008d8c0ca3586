#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbedit/core.hpp"
#include "nbedit/prompts.hpp"

namespace nbedit {

inline constexpr std::size_t kQaMaxTokens = 20;
inline constexpr std::size_t kFcMaxTokens = 10;

struct ReaderRequest {
  std::string prompt;
  std::size_t max_tokens = kQaMaxTokens;
  // Decoding is always greedy; kept on the request so backends can assert it.
  static constexpr std::string_view decode = "greedy";
};

ReaderRequest make_request(std::string prompt, TaskKind task);

struct Completion {
  std::string text;
  bool truncated = false;  // the max_tokens cap removed output
};

// Cuts `text` after its max_tokens-th whitespace-delimited token.
Completion truncate_to_tokens(std::string_view text, std::size_t max_tokens);
std::size_t count_tokens(std::string_view text);

// The black-box language model. Implementations must be safe to call from
// several threads at once.
class Reader {
 public:
  virtual ~Reader() = default;
  virtual Completion complete(const ReaderRequest& request) const = 0;
  // Stable identifier used to key cached predictions.
  virtual std::string id() const = 0;
};

struct FactTriple {
  std::string subject;
  std::string relation;
  std::string object;

  // "The <relation> of <subject> is <object>."
  std::string render() const;
  bool operator==(const FactTriple&) const = default;
};

// Parses "the <relation> of <subject> is <object>[.]" case-insensitively.
// Returned fields are lowercased with whitespace collapsed.
std::optional<FactTriple> parse_fact(std::string_view sentence);

// Question grammar understood by the mock reader:
//   "What is the <r> of <s>?"              -> relations {r}
//   "What is the <r2> of the <r1> of <s>?" -> relations {r1, r2}
struct QuestionShape {
  std::string subject;
  std::vector<std::string> relations;  // hop order
};
std::optional<QuestionShape> parse_question(std::string_view question);

// Parametric memory of the mock base model: at most one object per
// (subject, relation), matched case-insensitively.
class MockWorld {
 public:
  // Throws Error(InvalidArgument) on an empty field or a conflicting object.
  void add(FactTriple fact);
  std::optional<std::string> lookup(std::string_view subject, std::string_view relation) const;
  const std::vector<FactTriple>& facts() const noexcept { return facts_; }
  std::size_t size() const noexcept { return facts_.size(); }

 private:
  std::vector<FactTriple> facts_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

struct MockPrompt {
  PromptKind kind = PromptKind::QaNoContext;
  std::vector<std::string> context_lines;
  std::string query;  // question or hypothesis
};

// Inverts render(). "Is it true that X?" is reported as FcNoContext (the
// boolean probe renders the same shape). Throws Error(UnrecognizedPrompt).
MockPrompt mock_parse(std::string_view prompt);

struct MockReaderOptions {
  // Probability that a with-context prompt is answered as if it had no
  // context. Decided by hashing (seed, prompt), so it stays deterministic.
  double context_noise = 0.0;
  std::uint64_t seed = 0;
};

// Deterministic, perfectly context-faithful stand-in for an instruction-tuned
// reader. Answers with context come only from context triples; answers
// without context come from the world.
class MockReader final : public Reader {
 public:
  explicit MockReader(MockWorld world, MockReaderOptions options = {});

  Completion complete(const ReaderRequest& request) const override;
  std::string id() const override { return "mock"; }

  // Untruncated answer; exposed for tests.
  std::string answer(std::string_view prompt) const;
  const MockWorld& world() const noexcept { return world_; }

 private:
  std::string answer_with_context(const MockPrompt& parsed) const;
  std::string answer_without_context(const MockPrompt& parsed) const;
  bool ignores_context(std::string_view prompt) const;

  MockWorld world_;
  MockReaderOptions options_;
};

}  // namespace nbedit
