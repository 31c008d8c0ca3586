#include "nbedit/store.hpp"

#include <mutex>
#include <sstream>

#include "json.hpp"

namespace nbedit {

using nlohmann::json;

std::string note_to_json_line(const Note& note) {
  return json{{"seq", note.seq}, {"edit_id", note.edit_id}, {"text", note.text}}.dump();
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return buf.str();
}

std::optional<Note> parse_note(std::string_view line, std::string& reason) {
  try {
    const auto j = json::parse(line);
    Note note;
    note.seq = j.at("seq").get<std::size_t>();
    note.edit_id = j.at("edit_id").get<std::string>();
    note.text = j.at("text").get<std::string>();
    return note;
  } catch (const json::exception& e) {
    reason = e.what();
    return std::nullopt;
  }
}

}  // namespace

NotebookLoad load_notebook(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  NotebookLoad load;
  std::vector<Note> notes;

  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < data.size()) {
    ++line_no;
    const std::size_t nl = data.find('\n', start);
    const std::size_t end = nl == std::string::npos ? data.size() : nl;
    const std::string_view line(data.data() + start, end - start);
    const std::size_t next = nl == std::string::npos ? data.size() : nl + 1;

    if (trim(line).empty()) {
      start = next;
      continue;
    }
    std::string reason;
    if (auto note = parse_note(line, reason)) {
      if (note->seq != notes.size()) throw SeqGapError(notes.size(), note->seq);
      notes.push_back(std::move(*note));
      load.valid_bytes = next;
    } else {
      load.corrupt.push_back(CorruptLine{line_no, std::move(reason)});
    }
    start = next;
  }
  load.notebook = Notebook::from_notes(std::move(notes));
  return load;
}

void save_notebook(const std::filesystem::path& path, const Notebook& notebook) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& note : notebook.notes()) out << note_to_json_line(note) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

NotebookFile NotebookFile::open(const std::filesystem::path& path) {
  NotebookFile file;
  file.path_ = path;
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    auto load = load_notebook(path);
    file.notebook_ = std::move(load.notebook);
    file.recovered_ = std::move(load.corrupt);
    const auto size = std::filesystem::file_size(path);
    if (load.valid_bytes < size) std::filesystem::resize_file(path, load.valid_bytes);
  }
  file.out_.open(path, std::ios::binary | std::ios::app);
  if (!file.out_) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for append");
  // A last line without its newline still counts as a note; terminate it.
  if (file.notebook_.size() > 0) {
    std::ifstream in(path, std::ios::binary);
    in.seekg(-1, std::ios::end);
    char last = '\n';
    if (in.get(last) && last != '\n') file.out_ << '\n';
  }
  return file;
}

const Note& NotebookFile::append(const Edit& edit) {
  if (trim(edit.statement).empty()) {
    throw Error(ErrorCode::EmptyStatement, "edit '" + edit.id + "' has an empty statement");
  }
  if (notebook_.contains(edit.id)) {
    throw Error(ErrorCode::DuplicateId, "duplicate edit id '" + edit.id + "'");
  }
  // Disk first: the in-memory notebook never runs ahead of the file.
  out_ << note_to_json_line(Note{edit.id, edit.statement, notebook_.size()}) << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "append failed for " + path_.string());
  return notebook_.append(edit);
}

PredictionCache::PredictionCache(DigestFn digest) : digest_(std::move(digest)) {}

std::optional<std::string> PredictionCache::get(std::string_view reader_id,
                                                std::string_view prompt) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({std::string(reader_id), digest_(prompt)});
  if (it == entries_.end()) return std::nullopt;
  for (const auto& entry : it->second) {
    if (entry.prompt == prompt) return entry.answer;
  }
  return std::nullopt;
}

bool PredictionCache::insert_locked(std::string reader_id, std::string prompt,
                                    std::string answer) {
  auto& bucket = entries_[{std::move(reader_id), digest_(prompt)}];
  for (const auto& entry : bucket) {
    if (entry.prompt == prompt) return false;
  }
  bucket.push_back(Entry{std::move(prompt), std::move(answer)});
  ++count_;
  return true;
}

bool PredictionCache::put(std::string_view reader_id, std::string_view prompt,
                          std::string_view answer) {
  std::unique_lock lock(mutex_);
  if (!insert_locked(std::string(reader_id), std::string(prompt), std::string(answer))) {
    return false;
  }
  if (sink_.is_open()) {
    sink_ << json{{"reader_id", reader_id},
                  {"digest", digest_(prompt)},
                  {"prompt", prompt},
                  {"answer", answer}}
                 .dump()
          << '\n';
    sink_.flush();
    if (!sink_) throw Error(ErrorCode::IoError, "prediction cache write failed");
  }
  return true;
}

std::size_t PredictionCache::size() const {
  std::shared_lock lock(mutex_);
  return count_;
}

void PredictionCache::attach(const std::filesystem::path& path) {
  std::unique_lock lock(mutex_);
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    std::istringstream lines(read_file(path));
    std::string line;
    while (std::getline(lines, line)) {
      if (trim(line).empty()) continue;
      try {
        const auto j = json::parse(line);
        insert_locked(j.at("reader_id").get<std::string>(), j.at("prompt").get<std::string>(),
                      j.at("answer").get<std::string>());
      } catch (const json::exception&) {
        // torn tail line from an interrupted run; the entry is recomputed
      }
    }
  }
  sink_.open(path, std::ios::binary | std::ios::app);
  if (!sink_) throw Error(ErrorCode::IoError, "cannot open " + path.string());
}

}  // namespace nbedit
