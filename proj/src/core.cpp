#include "nbedit/core.hpp"

#include <algorithm>
#include <cctype>

namespace nbedit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyStatement: return "EmptyStatement";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::UnexpectedContext: return "UnexpectedContext";
    case ErrorCode::UnrecognizedPrompt: return "UnrecognizedPrompt";
    case ErrorCode::BackendTimeout: return "BackendTimeout";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NoInScopeExamples: return "NoInScopeExamples";
    case ErrorCode::NoOutOfScopeExamples: return "NoOutOfScopeExamples";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::CorruptLine: return "CorruptLine";
    case ErrorCode::SeqGap: return "SeqGap";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view to_string(TaskKind task) {
  return task == TaskKind::QuestionAnswering ? "qa" : "fc";
}

TaskKind parse_task(std::string_view text) {
  if (text == "qa") return TaskKind::QuestionAnswering;
  if (text == "fc") return TaskKind::FactChecking;
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(text) + "'");
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string normalize_answer(std::string_view text) {
  const std::string_view line = text.substr(0, text.find('\n'));

  std::string out;
  out.reserve(line.size());
  bool pending_space = false;
  for (char c : line) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
  return out;
}

bool exact_match(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b);
}

std::vector<std::string> validate(const EditRecord& record) {
  std::vector<std::string> problems;
  if (record.edit.id.empty()) problems.emplace_back("edit id is empty");
  if (trim(record.edit.statement).empty()) problems.emplace_back("statement is empty");
  for (std::size_t i = 0; i < record.in_scope.size(); ++i) {
    const auto& ex = record.in_scope[i];
    const auto* scope = std::get_if<InScope>(&ex.scope);
    const std::string where = "in_scope[" + std::to_string(i) + "]";
    if (scope == nullptr) {
      problems.push_back(where + " is not marked in-scope");
      continue;
    }
    if (scope->edit_ids.empty()) problems.push_back(where + " lists no edit ids");
    if (std::find(scope->edit_ids.begin(), scope->edit_ids.end(), record.edit.id) ==
        scope->edit_ids.end()) {
      problems.push_back(where + " does not reference " + record.edit.id);
    }
    if (trim(ex.input).empty()) problems.push_back(where + " has empty input");
    if (trim(ex.expected).empty()) problems.push_back(where + " has empty expected");
  }
  for (std::size_t i = 0; i < record.out_of_scope.size(); ++i) {
    const auto& ex = record.out_of_scope[i];
    const std::string where = "out_of_scope[" + std::to_string(i) + "]";
    if (!std::holds_alternative<OutOfScope>(ex.scope)) {
      problems.push_back(where + " is not marked out-of-scope");
    }
    if (trim(ex.input).empty()) problems.push_back(where + " has empty input");
    if (trim(ex.expected).empty()) problems.push_back(where + " has empty expected");
  }
  return problems;
}

Notebook Notebook::from_notes(std::vector<Note> notes) {
  Notebook nb;
  nb.notes_.reserve(notes.size());
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (notes[i].seq != i) throw SeqGapError(i, notes[i].seq);
    if (!nb.by_id_.emplace(notes[i].edit_id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate edit id '" + notes[i].edit_id + "'");
    }
    nb.notes_.push_back(std::move(notes[i]));
  }
  return nb;
}

const Note& Notebook::append(const Edit& edit) {
  if (trim(edit.statement).empty()) {
    throw Error(ErrorCode::EmptyStatement, "edit '" + edit.id + "' has an empty statement");
  }
  if (by_id_.contains(edit.id)) {
    throw Error(ErrorCode::DuplicateId, "duplicate edit id '" + edit.id + "'");
  }
  const std::size_t seq = notes_.size();
  notes_.push_back(Note{edit.id, edit.statement, seq});
  by_id_.emplace(edit.id, seq);
  return notes_.back();
}

bool Notebook::contains(std::string_view edit_id) const {
  return by_id_.contains(std::string(edit_id));
}

std::optional<std::size_t> Notebook::seq_of(std::string_view edit_id) const {
  auto it = by_id_.find(std::string(edit_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Notebook append_edit(Notebook notebook, const Edit& edit) {
  notebook.append(edit);
  return notebook;
}

}  // namespace nbedit
