#include "nbedit/prompts.hpp"

namespace nbedit {

std::string_view irrelevance_marker(TaskKind task) {
  return task == TaskKind::QuestionAnswering ? kQaIrrelevanceMarker : kFcIrrelevanceMarker;
}

TaskKind task_of(PromptKind kind) {
  switch (kind) {
    case PromptKind::MrcWithContext:
    case PromptKind::QaNoContext:
      return TaskKind::QuestionAnswering;
    case PromptKind::FcWithContext:
    case PromptKind::FcNoContext:
    case PromptKind::BooleanProbe:
      return TaskKind::FactChecking;
  }
  return TaskKind::QuestionAnswering;
}

std::string_view irrelevance_marker(PromptKind kind) { return irrelevance_marker(task_of(kind)); }

bool has_context(PromptKind kind) {
  return kind == PromptKind::MrcWithContext || kind == PromptKind::FcWithContext;
}

PromptKind with_context_kind(TaskKind task) {
  return task == TaskKind::QuestionAnswering ? PromptKind::MrcWithContext
                                             : PromptKind::FcWithContext;
}

PromptKind no_context_kind(TaskKind task) {
  return task == TaskKind::QuestionAnswering ? PromptKind::QaNoContext : PromptKind::FcNoContext;
}

std::string render_context(std::span<const Note> notes) {
  std::string out;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += notes[i].text;
  }
  return out;
}

std::string render(PromptKind kind, std::string_view context, std::string_view input,
                   ContextPolicy policy) {
  using namespace templates;
  if (has_context(kind)) {
    if (context.empty() && policy == ContextPolicy::Strict) {
      throw Error(ErrorCode::MissingContext, "with-context prompt rendered without context");
    }
  } else if (!context.empty()) {
    throw Error(ErrorCode::UnexpectedContext, "no-context prompt rendered with context");
  }

  std::string out;
  switch (kind) {
    case PromptKind::MrcWithContext:
      out.append(kMrcHeader).append("\n\n").append(context).append("\n\n").append(input);
      break;
    case PromptKind::QaNoContext:
      out.append(kQaNoContextPrefix).append(input);
      break;
    case PromptKind::FcWithContext:
      out.append(context).append("\n\n").append(kFcQuestionPrefix).append(input).append(kFcOptions);
      break;
    case PromptKind::FcNoContext:
      out.append(kIsItTruePrefix).append(input).append("?");
      break;
    case PromptKind::BooleanProbe: {
      std::string statement = trim(input);
      if (!statement.empty() && statement.back() == '.') statement.pop_back();
      out.append(kIsItTruePrefix).append(statement).append("?");
      break;
    }
  }
  return out;
}

bool detect_irrelevance(std::string_view raw, TaskKind task) {
  return normalize_answer(raw).find(to_lower_ascii(irrelevance_marker(task))) !=
         std::string::npos;
}

namespace {

bool contains_word(std::string_view haystack, std::string_view word) {
  auto is_word_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
  };
  for (std::size_t pos = haystack.find(word); pos != std::string_view::npos;
       pos = haystack.find(word, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

Verdict fc_verdict(std::string_view raw) {
  if (detect_irrelevance(raw, TaskKind::FactChecking)) return Verdict::Irrelevant;
  const std::string line = normalize_answer(raw);
  if (contains_word(line, "yes")) return Verdict::Supported;
  if (contains_word(line, "no")) return Verdict::Refuted;
  return Verdict::Unrecognized;
}

Answer make_answer(std::string raw, TaskKind task) {
  Answer answer;
  answer.normalized = normalize_answer(raw);
  answer.kind = detect_irrelevance(raw, task) ? AnswerKind::Irrelevant : AnswerKind::Grounded;
  answer.raw = std::move(raw);
  return answer;
}

}  // namespace nbedit
