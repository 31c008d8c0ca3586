#pragma once

#include <span>
#include <string>
#include <string_view>

#include "nbedit/core.hpp"

namespace nbedit {

enum class PromptKind { MrcWithContext, QaNoContext, FcWithContext, FcNoContext, BooleanProbe };

inline constexpr std::string_view kQaIrrelevanceMarker = "unanswerable";
inline constexpr std::string_view kFcIrrelevanceMarker = "It's impossible to say";

std::string_view irrelevance_marker(TaskKind task);
std::string_view irrelevance_marker(PromptKind kind);
TaskKind task_of(PromptKind kind);
bool has_context(PromptKind kind);

PromptKind with_context_kind(TaskKind task);
PromptKind no_context_kind(TaskKind task);

// Note texts joined by '\n' in the order given.
std::string render_context(std::span<const Note> notes);

enum class ContextPolicy {
  Strict,      // with-context kinds require non-empty context
  AllowEmpty,  // with-context kinds accept "" (one-step baseline on an empty notebook)
};

// Renders the exact template text. Throws Error(MissingContext) when a
// with-context kind gets empty context under Strict, Error(UnexpectedContext)
// when a no-context kind gets any context.
std::string render(PromptKind kind, std::string_view context, std::string_view input,
                   ContextPolicy policy = ContextPolicy::Strict);

// Literal template fragments, shared with the mock reader's parser.
namespace templates {
inline constexpr std::string_view kMrcHeader =
    "Read this and answer the question. If the question is unanswerable, say \"unanswerable\".";
inline constexpr std::string_view kQaNoContextPrefix = "Please answer this question: ";
inline constexpr std::string_view kFcQuestionPrefix = "Based on the paragraph, can we conclude that \"";
inline constexpr std::string_view kFcOptions =
    "\"?\n\nOPTIONS:\n- Yes\n- It's impossible to say\n- No";
inline constexpr std::string_view kIsItTruePrefix = "Is it true that ";
}  // namespace templates

// Case-insensitive containment of the task's marker in the normalized first
// line of `raw`.
bool detect_irrelevance(std::string_view raw, TaskKind task);

enum class Verdict { Supported, Refuted, Irrelevant, Unrecognized };

// Marker first, then the word "yes", then the word "no" (word boundaries).
Verdict fc_verdict(std::string_view raw);

// Builds an Answer record from raw reader output.
Answer make_answer(std::string raw, TaskKind task);

}  // namespace nbedit
