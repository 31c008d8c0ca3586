#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbedit/core.hpp"

namespace nbedit {

struct CorruptLine {
  std::size_t line_no = 0;  // 1-based
  std::string reason;
};

struct NotebookLoad {
  Notebook notebook;
  std::vector<CorruptLine> corrupt;
  // Byte offset just past the last line that held a valid note.
  std::uintmax_t valid_bytes = 0;
};

// One {"seq","edit_id","text"} object, no trailing newline.
std::string note_to_json_line(const Note& note);

// Skips and reports lines that are not valid notes. Throws Error(IoError)
// when the file cannot be read and SeqGapError when seq is not contiguous.
NotebookLoad load_notebook(const std::filesystem::path& path);

// Rewrites `path` with every note of `notebook`.
void save_notebook(const std::filesystem::path& path, const Notebook& notebook);

// Append-mode notebook file. Each append writes one line and flushes before
// returning, so every intermediate notebook is durable. A torn last line
// left by a crash is cut off on open. Single writer per file.
class NotebookFile {
 public:
  // Creates the file if it does not exist.
  static NotebookFile open(const std::filesystem::path& path);

  const Note& append(const Edit& edit);

  const Notebook& notebook() const noexcept { return notebook_; }
  const std::vector<CorruptLine>& recovered() const noexcept { return recovered_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  NotebookFile() = default;

  std::filesystem::path path_;
  Notebook notebook_;
  std::vector<CorruptLine> recovered_;
  std::ofstream out_;
};

// Memoized normalized answers keyed by (reader id, 64-bit prompt digest).
// The full prompt is stored so digest collisions never return a wrong
// answer. Insert-only; safe for concurrent get/put.
class PredictionCache {
 public:
  using DigestFn = std::function<std::uint64_t(std::string_view)>;

  explicit PredictionCache(DigestFn digest = fnv1a64);

  std::optional<std::string> get(std::string_view reader_id, std::string_view prompt) const;
  // Returns false (and keeps the old answer) if the entry already exists.
  bool put(std::string_view reader_id, std::string_view prompt, std::string_view answer);
  std::size_t size() const;

  // Loads existing entries from `path` (if present) and appends every later
  // put to it as a JSONL line {"reader_id","digest","prompt","answer"}.
  void attach(const std::filesystem::path& path);

 private:
  struct Entry {
    std::string prompt;
    std::string answer;
  };

  bool insert_locked(std::string reader_id, std::string prompt, std::string answer);

  DigestFn digest_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::uint64_t>, std::vector<Entry>> entries_;
  std::size_t count_ = 0;
  std::ofstream sink_;
};

}  // namespace nbedit
