#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nbedit/core.hpp"

namespace nbedit {

inline constexpr std::size_t kDefaultEmbeddingDim = 1024;
inline constexpr std::size_t kDefaultTopK = 5;

// Unit-norm (or all-zero) dense vector.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::size_t dim) : values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

  // Scales `values` to unit L2 norm; an all-zero input stays zero.
  static Embedding normalized(Eigen::VectorXd values);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  bool is_zero() const { return values_.isZero(0.0); }

 private:
  Eigen::VectorXd values_;
};

// Throws Error(DimensionMismatch). Zero vectors score 0.
double cosine(const Embedding& a, const Embedding& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
};

// Feature-hashed bag of words: ASCII-lowercased tokens split on
// non-alphanumeric runs, FNV-1a(token) mod dim, L2-normalized counts.
class LexicalEmbedder final : public Embedder {
 public:
  explicit LexicalEmbedder(std::size_t dim = kDefaultEmbeddingDim);

  Embedding embed(std::string_view text) const override;
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
};

std::vector<std::string> lexical_tokens(std::string_view text);

Embedding embed_lexical(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

struct ScoredNote {
  std::size_t note_seq = 0;
  double score = 0.0;

  bool operator==(const ScoredNote&) const = default;
};

struct RetrievalResult {
  std::vector<ScoredNote> items;  // best first; ties by ascending seq
  std::size_t k = 0;

  std::set<std::size_t> seqs() const;
};

// Per-note embedding cache keyed by seq. sync() embeds only notes appended
// since the last call; the owner thread calls it after each append.
class NoteIndex {
 public:
  explicit NoteIndex(std::shared_ptr<const Embedder> embedder);

  void sync(const Notebook& notebook);
  std::size_t size() const noexcept { return embeddings_.size(); }
  const Embedder& embedder() const noexcept { return *embedder_; }
  const Embedding& embedding(std::size_t seq) const { return embeddings_.at(seq); }

  // Scores every indexed note against the query. Requires k >= 1.
  RetrievalResult top_k(std::string_view query, std::size_t k) const;

 private:
  std::shared_ptr<const Embedder> embedder_;
  std::vector<Embedding> embeddings_;
};

// Uncached scan with the default lexical embedder.
RetrievalResult top_k(std::string_view query, const Notebook& notebook, std::size_t k,
                      const Embedder& embedder);
RetrievalResult top_k(std::string_view query, const Notebook& notebook, std::size_t k);

// Mean per-query |retrieved ∩ gold| / |gold|, in [0, 1]. Throws
// Error(EmptyGold) if any gold set is empty. An empty query list yields 0.
double recall_at_k(const std::vector<std::pair<RetrievalResult, std::set<std::size_t>>>& results);

}  // namespace nbedit
