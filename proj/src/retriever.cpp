#include "nbedit/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nbedit {

Embedding Embedding::normalized(Eigen::VectorXd values) {
  Embedding e;
  const double norm = values.norm();
  if (norm > 0.0) values /= norm;
  e.values_ = std::move(values);
  return e;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding dimensions differ: " +
                                                  std::to_string(a.dim()) + " vs " +
                                                  std::to_string(b.dim()));
  }
  if (a.dim() == 0) return 0.0;
  return a.values().dot(b.values());
}

namespace {

bool is_token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

LexicalEmbedder::LexicalEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

Embedding LexicalEmbedder::embed(std::string_view text) const {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& token : lexical_tokens(text)) {
    counts[static_cast<Eigen::Index>(fnv1a64(token) % dim_)] += 1.0;
  }
  return Embedding::normalized(std::move(counts));
}

Embedding embed_lexical(std::string_view text, std::size_t dim) {
  return LexicalEmbedder(dim).embed(text);
}

std::set<std::size_t> RetrievalResult::seqs() const {
  std::set<std::size_t> out;
  for (const auto& item : items) out.insert(item.note_seq);
  return out;
}

namespace {

RetrievalResult select_top(std::vector<ScoredNote> scored, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), [](const ScoredNote& a, const ScoredNote& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.note_seq < b.note_seq;
                    });
  scored.resize(keep);
  return RetrievalResult{std::move(scored), k};
}

}  // namespace

NoteIndex::NoteIndex(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {
  if (!embedder_) throw Error(ErrorCode::InvalidArgument, "NoteIndex needs an embedder");
}

void NoteIndex::sync(const Notebook& notebook) {
  if (notebook.size() < embeddings_.size()) {
    throw Error(ErrorCode::InvalidArgument, "notebook is shorter than its index");
  }
  embeddings_.reserve(notebook.size());
  for (std::size_t seq = embeddings_.size(); seq < notebook.size(); ++seq) {
    embeddings_.push_back(embedder_->embed(notebook[seq].text));
  }
}

RetrievalResult NoteIndex::top_k(std::string_view query, std::size_t k) const {
  const Embedding q = embedder_->embed(query);
  std::vector<ScoredNote> scored(embeddings_.size());
  for (std::size_t seq = 0; seq < embeddings_.size(); ++seq) {
    scored[seq] = ScoredNote{seq, cosine(q, embeddings_[seq])};
  }
  return select_top(std::move(scored), k);
}

RetrievalResult top_k(std::string_view query, const Notebook& notebook, std::size_t k,
                      const Embedder& embedder) {
  const Embedding q = embedder.embed(query);
  std::vector<ScoredNote> scored;
  scored.reserve(notebook.size());
  for (const auto& note : notebook.notes()) {
    scored.push_back(ScoredNote{note.seq, cosine(q, embedder.embed(note.text))});
  }
  return select_top(std::move(scored), k);
}

RetrievalResult top_k(std::string_view query, const Notebook& notebook, std::size_t k) {
  return top_k(query, notebook, k, LexicalEmbedder{});
}

double recall_at_k(
    const std::vector<std::pair<RetrievalResult, std::set<std::size_t>>>& results) {
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [retrieved, gold] : results) {
    if (gold.empty()) throw Error(ErrorCode::EmptyGold, "gold note set is empty");
    const auto got = retrieved.seqs();
    const auto hits = std::count_if(gold.begin(), gold.end(),
                                    [&](std::size_t seq) { return got.contains(seq); });
    total += static_cast<double>(hits) / static_cast<double>(gold.size());
  }
  return total / static_cast<double>(results.size());
}

}  // namespace nbedit
