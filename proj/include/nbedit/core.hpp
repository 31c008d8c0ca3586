#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nbedit/error.hpp"

namespace nbedit {

enum class TaskKind { QuestionAnswering, FactChecking };

// "qa" / "fc".
std::string_view to_string(TaskKind task);
TaskKind parse_task(std::string_view text);

struct Edit {
  std::string id;
  std::string statement;
  TaskKind task = TaskKind::QuestionAnswering;

  bool operator==(const Edit&) const = default;
};

struct InScope {
  std::vector<std::string> edit_ids;
  bool operator==(const InScope&) const = default;
};

struct OutOfScope {
  std::optional<std::string> tag;
  bool operator==(const OutOfScope&) const = default;
};

inline constexpr std::string_view kNeighborSubjectTag = "neighbor_subject";
inline constexpr std::string_view kSameSubjectTag = "same_subject";

// One labeled (input, expected) pair. For fact checking `expected` is the
// verdict label ("Yes" / "No").
struct ScopedExample {
  std::string input;
  std::string expected;
  std::variant<InScope, OutOfScope> scope;

  bool in_scope() const { return std::holds_alternative<InScope>(scope); }
  bool operator==(const ScopedExample&) const = default;
};

struct EditRecord {
  Edit edit;
  std::vector<ScopedExample> in_scope;
  std::vector<ScopedExample> out_of_scope;

  bool operator==(const EditRecord&) const = default;
};

// Returns human-readable violations of the EditRecord invariants; empty when
// the record is well formed.
std::vector<std::string> validate(const EditRecord& record);

struct Note {
  std::string edit_id;
  std::string text;
  std::size_t seq = 0;

  bool operator==(const Note&) const = default;
};

// Append-only memory of applied edits. Existing notes are never reordered or
// mutated; seq of the i-th note is always i.
class Notebook {
 public:
  Notebook() = default;

  // Rebuilds a notebook from persisted notes. Throws SeqGapError when seq is
  // not 0..n-1 in order and Error(DuplicateId) on repeated ids.
  static Notebook from_notes(std::vector<Note> notes);

  // Throws Error(EmptyStatement) or Error(DuplicateId); the notebook is
  // unchanged on failure.
  const Note& append(const Edit& edit);

  const std::vector<Note>& notes() const noexcept { return notes_; }
  std::size_t size() const noexcept { return notes_.size(); }
  bool empty() const noexcept { return notes_.empty(); }
  const Note& operator[](std::size_t seq) const { return notes_.at(seq); }

  bool contains(std::string_view edit_id) const;
  std::optional<std::size_t> seq_of(std::string_view edit_id) const;

  bool operator==(const Notebook& other) const { return notes_ == other.notes_; }

 private:
  std::vector<Note> notes_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

Notebook append_edit(Notebook notebook, const Edit& edit);

enum class AnswerKind { Grounded, Irrelevant };

struct Answer {
  std::string raw;
  std::string normalized;
  AnswerKind kind = AnswerKind::Grounded;

  bool irrelevant() const { return kind == AnswerKind::Irrelevant; }
  bool operator==(const Answer&) const = default;
};

// First line only, ASCII-lowercased, whitespace runs collapsed, surrounding
// whitespace and trailing periods removed.
std::string normalize_answer(std::string_view text);

bool exact_match(std::string_view a, std::string_view b);

std::string trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

// Stable 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace nbedit
