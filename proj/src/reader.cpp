#include "nbedit/reader.hpp"


namespace nbedit {

ReaderRequest make_request(std::string prompt, TaskKind task) {
  return ReaderRequest{std::move(prompt),
                       task == TaskKind::QuestionAnswering ? kQaMaxTokens : kFcMaxTokens};
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Lowercase, collapse whitespace runs, trim.
std::string canonical(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  if (text.empty()) return lines;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    lines.emplace_back(text.substr(start, nl == std::string_view::npos ? nl : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

Completion truncate_to_tokens(std::string_view text, std::size_t max_tokens) {
  std::size_t n = 0;
  std::size_t last_end = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    if (n == max_tokens) return Completion{std::string(text.substr(0, last_end)), true};
    while (i < text.size() && !is_space(text[i])) ++i;
    ++n;
    last_end = i;
  }
  return Completion{std::string(text), false};
}

std::string FactTriple::render() const {
  return "The " + relation + " of " + subject + " is " + object + ".";
}

std::optional<FactTriple> parse_fact(std::string_view sentence) {
  std::string s = canonical(sentence);
  if (!s.empty() && s.back() == '.') s.pop_back();
  while (!s.empty() && s.back() == ' ') s.pop_back();
  if (!starts_with(s, "the ")) return std::nullopt;
  const std::size_t of = s.find(" of ", 4);
  if (of == std::string::npos) return std::nullopt;
  const std::size_t is = s.find(" is ", of + 4);
  if (is == std::string::npos) return std::nullopt;
  FactTriple fact{s.substr(of + 4, is - of - 4), s.substr(4, of - 4), s.substr(is + 4)};
  if (fact.subject.empty() || fact.relation.empty() || fact.object.empty()) return std::nullopt;
  return fact;
}

std::optional<QuestionShape> parse_question(std::string_view question) {
  std::string s = canonical(question);
  if (!ends_with(s, "?")) return std::nullopt;
  s.pop_back();
  while (!s.empty() && s.back() == ' ') s.pop_back();
  constexpr std::string_view kLead = "what is the ";
  if (!starts_with(s, kLead)) return std::nullopt;
  const std::string body = s.substr(kLead.size());

  QuestionShape shape;
  if (const std::size_t inner = body.find(" of the "); inner != std::string::npos) {
    const std::string outer_rel = body.substr(0, inner);
    const std::string rest = body.substr(inner + 8);
    const std::size_t of = rest.find(" of ");
    if (of == std::string::npos) return std::nullopt;
    shape.relations = {rest.substr(0, of), outer_rel};
    shape.subject = rest.substr(of + 4);
  } else {
    const std::size_t of = body.find(" of ");
    if (of == std::string::npos) return std::nullopt;
    shape.relations = {body.substr(0, of)};
    shape.subject = body.substr(of + 4);
  }
  for (const auto& r : shape.relations) {
    if (r.empty()) return std::nullopt;
  }
  if (shape.subject.empty()) return std::nullopt;
  return shape;
}

void MockWorld::add(FactTriple fact) {
  if (trim(fact.subject).empty() || trim(fact.relation).empty() || trim(fact.object).empty()) {
    throw Error(ErrorCode::InvalidArgument, "fact triple fields must be non-empty");
  }
  auto key = std::make_pair(canonical(fact.subject), canonical(fact.relation));
  if (auto it = index_.find(key); it != index_.end()) {
    if (canonical(facts_[it->second].object) != canonical(fact.object)) {
      throw Error(ErrorCode::InvalidArgument,
                  "conflicting object for (" + key.first + ", " + key.second + ")");
    }
    return;
  }
  index_.emplace(std::move(key), facts_.size());
  facts_.push_back(std::move(fact));
}

std::optional<std::string> MockWorld::lookup(std::string_view subject,
                                             std::string_view relation) const {
  auto it = index_.find({canonical(subject), canonical(relation)});
  if (it == index_.end()) return std::nullopt;
  return facts_[it->second].object;
}

MockPrompt mock_parse(std::string_view prompt) {
  using namespace templates;
  MockPrompt out;

  const std::string mrc_head = std::string(kMrcHeader) + "\n\n";
  if (starts_with(prompt, mrc_head)) {
    const std::string_view rest = prompt.substr(mrc_head.size());
    const std::size_t split = rest.rfind("\n\n");
    if (split == std::string_view::npos) {
      throw Error(ErrorCode::UnrecognizedPrompt, "MRC prompt without question block");
    }
    out.kind = PromptKind::MrcWithContext;
    out.context_lines = split_lines(rest.substr(0, split));
    out.query = std::string(rest.substr(split + 2));
    return out;
  }
  if (starts_with(prompt, kQaNoContextPrefix)) {
    out.kind = PromptKind::QaNoContext;
    out.query = std::string(prompt.substr(kQaNoContextPrefix.size()));
    return out;
  }
  if (ends_with(prompt, kFcOptions)) {
    const std::string marker = "\n\n" + std::string(kFcQuestionPrefix);
    const std::string_view head = prompt.substr(0, prompt.size() - kFcOptions.size());
    const std::size_t split = head.rfind(marker);
    if (split == std::string_view::npos) {
      throw Error(ErrorCode::UnrecognizedPrompt, "FC prompt without hypothesis");
    }
    out.kind = PromptKind::FcWithContext;
    out.context_lines = split_lines(head.substr(0, split));
    out.query = std::string(head.substr(split + marker.size()));
    return out;
  }
  if (starts_with(prompt, kIsItTruePrefix) && ends_with(prompt, "?")) {
    out.kind = PromptKind::FcNoContext;
    out.query = std::string(prompt.substr(kIsItTruePrefix.size(),
                                          prompt.size() - kIsItTruePrefix.size() - 1));
    return out;
  }
  throw Error(ErrorCode::UnrecognizedPrompt, "prompt does not match any known template");
}

MockReader::MockReader(MockWorld world, MockReaderOptions options)
    : world_(std::move(world)), options_(options) {
  if (options_.context_noise < 0.0 || options_.context_noise > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "context_noise must be in [0, 1]");
  }
}

Completion MockReader::complete(const ReaderRequest& request) const {
  if (request.prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  return truncate_to_tokens(answer(request.prompt), request.max_tokens);
}

std::string MockReader::answer(std::string_view prompt) const {
  MockPrompt parsed;
  try {
    parsed = mock_parse(prompt);
  } catch (const Error&) {
    return std::string(kQaIrrelevanceMarker);
  }
  if (has_context(parsed.kind) && !ignores_context(prompt)) return answer_with_context(parsed);
  return answer_without_context(parsed);
}

bool MockReader::ignores_context(std::string_view prompt) const {
  if (options_.context_noise <= 0.0) return false;
  const std::uint64_t h = fnv1a64(std::to_string(options_.seed) + '\x1f' + std::string(prompt));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < options_.context_noise;
}

namespace {

// First (best-ranked) line wins for a repeated (subject, relation).
std::map<std::pair<std::string, std::string>, std::string> context_facts(
    const std::vector<std::string>& lines) {
  std::map<std::pair<std::string, std::string>, std::string> facts;
  for (const auto& line : lines) {
    if (auto fact = parse_fact(line)) {
      facts.emplace(std::make_pair(fact->subject, fact->relation), fact->object);
    }
  }
  return facts;
}

}  // namespace

std::string MockReader::answer_with_context(const MockPrompt& parsed) const {
  const auto facts = context_facts(parsed.context_lines);
  auto from_context = [&](const std::string& s, const std::string& r) -> std::optional<std::string> {
    auto it = facts.find({s, r});
    if (it == facts.end()) return std::nullopt;
    return it->second;
  };

  if (parsed.kind == PromptKind::MrcWithContext) {
    const std::string marker(kQaIrrelevanceMarker);
    auto shape = parse_question(parsed.query);
    if (!shape) return marker;
    // The first hop must be grounded in context; later hops may fall back to
    // parametric memory.
    auto current = from_context(shape->subject, shape->relations.front());
    if (!current) return marker;
    for (std::size_t hop = 1; hop < shape->relations.size(); ++hop) {
      const std::string subject = canonical(*current);
      auto next = from_context(subject, shape->relations[hop]);
      if (!next) next = world_.lookup(subject, shape->relations[hop]);
      if (!next) return marker;
      current = std::move(next);
    }
    return *current;
  }

  const std::string marker(kFcIrrelevanceMarker);
  auto claim = parse_fact(parsed.query);
  if (!claim) return marker;
  auto object = from_context(claim->subject, claim->relation);
  if (!object) return marker;
  return canonical(*object) == claim->object ? "Yes" : "No";
}

std::string MockReader::answer_without_context(const MockPrompt& parsed) const {
  if (task_of(parsed.kind) == TaskKind::QuestionAnswering) {
    auto shape = parse_question(parsed.query);
    if (!shape) return "unknown";
    std::string subject = shape->subject;
    std::optional<std::string> current;
    for (const auto& relation : shape->relations) {
      current = world_.lookup(subject, relation);
      if (!current) return "unknown";
      subject = canonical(*current);
    }
    return *current;
  }
  auto claim = parse_fact(parsed.query);
  if (!claim) return "unknown";
  auto object = world_.lookup(claim->subject, claim->relation);
  if (!object) return "unknown";
  return canonical(*object) == claim->object ? "Yes" : "No";
}

}  // namespace nbedit
