#include "nbedit/engine.hpp"

#include <vector>

namespace nbedit {

void EditorConfig::validate() const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
}

void apply_edits_sequentially(Notebook& notebook, std::span<const Edit> edits) {
  for (const auto& edit : edits) notebook.append(edit);
}

namespace {

void require_input(std::string_view input) {
  if (trim(input).empty()) throw Error(ErrorCode::InvalidArgument, "query input is empty");
}

void require_synced(const Notebook& notebook, const NoteIndex& index) {
  if (notebook.size() != index.size()) {
    throw Error(ErrorCode::InvalidArgument, "note index is out of sync with the notebook");
  }
}

Answer ask(const Reader& reader, const EditorConfig& config, std::string prompt) {
  ReaderRequest request{std::move(prompt), config.max_tokens()};
  return make_answer(reader.complete(request).text, config.task);
}

std::string grounded_prompt(const Notebook& notebook, const RetrievalResult& retrieved,
                            const EditorConfig& config, std::string_view input,
                            ContextPolicy policy) {
  std::vector<Note> ranked;
  ranked.reserve(retrieved.items.size());
  for (const auto& item : retrieved.items) ranked.push_back(notebook[item.note_seq]);
  return render(with_context_kind(config.task), render_context(ranked), input, policy);
}

}  // namespace

Answer unedited_query(const Reader& reader, const EditorConfig& config, std::string_view input) {
  require_input(input);
  return ask(reader, config, render(no_context_kind(config.task), "", input));
}

QueryTrace two_step_query(const Notebook& notebook, const NoteIndex& index, const Reader& reader,
                          const EditorConfig& config, std::string_view input) {
  require_input(input);
  config.validate();
  require_synced(notebook, index);

  QueryTrace trace;
  trace.input = std::string(input);
  trace.retrieved.k = config.k;
  if (!notebook.empty()) {
    trace.retrieved = index.top_k(input, config.k);
    trace.with_context_answer =
        ask(reader, config, grounded_prompt(notebook, trace.retrieved, config, input,
                                            ContextPolicy::Strict));
    ++trace.reader_calls;
  }
  trace.fell_back = !trace.with_context_answer || trace.with_context_answer->irrelevant();
  if (trace.fell_back) {
    trace.final = unedited_query(reader, config, input);
    ++trace.reader_calls;
  } else {
    trace.final = *trace.with_context_answer;
  }
  return trace;
}

Answer one_step_mrc_query(const Notebook& notebook, const NoteIndex& index, const Reader& reader,
                          const EditorConfig& config, std::string_view input) {
  require_input(input);
  config.validate();
  require_synced(notebook, index);
  RetrievalResult retrieved{{}, config.k};
  if (!notebook.empty()) retrieved = index.top_k(input, config.k);
  return ask(reader, config,
             grounded_prompt(notebook, retrieved, config, input, ContextPolicy::AllowEmpty));
}

namespace {

NoteIndex lexical_index(const Notebook& notebook) {
  NoteIndex index(std::make_shared<LexicalEmbedder>());
  index.sync(notebook);
  return index;
}

}  // namespace

QueryTrace two_step_query(const Notebook& notebook, const Reader& reader,
                          const EditorConfig& config, std::string_view input) {
  return two_step_query(notebook, lexical_index(notebook), reader, config, input);
}

Answer one_step_mrc_query(const Notebook& notebook, const Reader& reader,
                          const EditorConfig& config, std::string_view input) {
  return one_step_mrc_query(notebook, lexical_index(notebook), reader, config, input);
}

EditedModel::EditedModel(EditorConfig config, std::shared_ptr<const Embedder> embedder)
    : EditedModel(Notebook{}, config, std::move(embedder)) {}

EditedModel::EditedModel(Notebook notebook, EditorConfig config,
                         std::shared_ptr<const Embedder> embedder)
    : config_(config), notebook_(std::move(notebook)), index_(std::move(embedder)) {
  config_.validate();
  index_.sync(notebook_);
}

const Note& EditedModel::apply(const Edit& edit) {
  const Note& note = notebook_.append(edit);
  index_.sync(notebook_);
  return note;
}

void EditedModel::apply_sequentially(std::span<const Edit> edits) {
  try {
    apply_edits_sequentially(notebook_, edits);
  } catch (...) {
    index_.sync(notebook_);
    throw;
  }
  index_.sync(notebook_);
}

QueryTrace EditedModel::two_step(const Reader& reader, std::string_view input) const {
  return two_step_query(notebook_, index_, reader, config_, input);
}

Answer EditedModel::one_step_mrc(const Reader& reader, std::string_view input) const {
  return one_step_mrc_query(notebook_, index_, reader, config_, input);
}

Answer EditedModel::unedited(const Reader& reader, std::string_view input) const {
  return unedited_query(reader, config_, input);
}

RetrievalResult EditedModel::retrieve(std::string_view input, std::size_t k) const {
  return index_.top_k(input, k);
}

}  // namespace nbedit
