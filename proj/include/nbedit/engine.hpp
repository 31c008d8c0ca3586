#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "nbedit/core.hpp"
#include "nbedit/prompts.hpp"
#include "nbedit/reader.hpp"
#include "nbedit/retriever.hpp"

namespace nbedit {

struct EditorConfig {
  std::size_t k = kDefaultTopK;
  TaskKind task = TaskKind::QuestionAnswering;
  std::size_t max_tokens_qa = kQaMaxTokens;
  std::size_t max_tokens_fc = kFcMaxTokens;

  std::size_t max_tokens() const {
    return task == TaskKind::QuestionAnswering ? max_tokens_qa : max_tokens_fc;
  }
  // Throws Error(InvalidArgument) when k == 0.
  void validate() const;
};

struct QueryTrace {
  std::string input;
  RetrievalResult retrieved;
  // Absent when the notebook was empty and the grounded step was skipped.
  std::optional<Answer> with_context_answer;
  bool fell_back = false;
  Answer final;
  std::size_t reader_calls = 0;
};

// Folds append_edit over `edits` left to right. On failure the successfully
// applied prefix stays in `notebook` and the error propagates.
void apply_edits_sequentially(Notebook& notebook, std::span<const Edit> edits);

// Grounded answer from the top-k notes; if the reader signals irrelevance,
// re-ask without context. At most two reader calls. `index` must be synced
// with `notebook`.
QueryTrace two_step_query(const Notebook& notebook, const NoteIndex& index, const Reader& reader,
                          const EditorConfig& config, std::string_view input);

// Single with-context call; the irrelevance marker is returned as-is.
Answer one_step_mrc_query(const Notebook& notebook, const NoteIndex& index, const Reader& reader,
                          const EditorConfig& config, std::string_view input);

// The base model: no-context prompt only.
Answer unedited_query(const Reader& reader, const EditorConfig& config, std::string_view input);

// Convenience overloads that embed the notebook on the fly with the default
// lexical embedder.
QueryTrace two_step_query(const Notebook& notebook, const Reader& reader,
                          const EditorConfig& config, std::string_view input);
Answer one_step_mrc_query(const Notebook& notebook, const Reader& reader,
                          const EditorConfig& config, std::string_view input);

// Notebook plus its embedding index, kept in lockstep. Queries are const and
// may run concurrently; apply() must be serialized by the caller.
class EditedModel {
 public:
  explicit EditedModel(EditorConfig config = {},
                       std::shared_ptr<const Embedder> embedder = std::make_shared<LexicalEmbedder>());
  EditedModel(Notebook notebook, EditorConfig config,
              std::shared_ptr<const Embedder> embedder = std::make_shared<LexicalEmbedder>());

  const Note& apply(const Edit& edit);
  // Sequential semantics as apply_edits_sequentially; the index follows the
  // applied prefix even when an edit fails.
  void apply_sequentially(std::span<const Edit> edits);

  QueryTrace two_step(const Reader& reader, std::string_view input) const;
  Answer one_step_mrc(const Reader& reader, std::string_view input) const;
  Answer unedited(const Reader& reader, std::string_view input) const;
  RetrievalResult retrieve(std::string_view input, std::size_t k) const;

  const Notebook& notebook() const noexcept { return notebook_; }
  const NoteIndex& index() const noexcept { return index_; }
  const EditorConfig& config() const noexcept { return config_; }

 private:
  EditorConfig config_;
  Notebook notebook_;
  NoteIndex index_;
};

}  // namespace nbedit
