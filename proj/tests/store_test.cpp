#include "doctest.h"

#include <thread>

#include "json.hpp"
#include "nbedit/store.hpp"
#include "temp_dir.hpp"

using namespace nbedit;

namespace {

Notebook notebook_of(std::size_t n) {
  Notebook nb;
  for (std::size_t i = 0; i < n; ++i) {
    nb.append(Edit{"e" + std::to_string(i), "The r" + std::to_string(i) + " of s is \"o\\" + std::to_string(i) + "\".",
                   TaskKind::QuestionAnswering});
  }
  return nb;
}

}  // namespace

TEST_CASE("notebook round trip") {
  TempDir dir;
  const auto nb = notebook_of(1024);
  save_notebook(dir / "nb.jsonl", nb);
  const auto load = load_notebook(dir / "nb.jsonl");
  CHECK(load.corrupt.empty());
  CHECK(load.notebook == nb);

  save_notebook(dir / "empty.jsonl", Notebook{});
  CHECK(load_notebook(dir / "empty.jsonl").notebook.size() == 0);
  CHECK_THROWS_AS(load_notebook(dir / "absent.jsonl"), Error);
}

TEST_CASE("note lines") {
  const Note n{"e1", "The ceo of apple is tim cook.", 0};
  const auto line = note_to_json_line(n);
  CHECK(line.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("seq") == 0);
  CHECK(j.at("edit_id") == "e1");
  CHECK(j.at("text") == n.text);
}

TEST_CASE("seq gaps are rejected") {
  TempDir dir;
  spit(dir / "gap.jsonl", note_to_json_line({"a", "x", 0}) + "\n" + note_to_json_line({"b", "y", 1}) + "\n" +
                              note_to_json_line({"c", "z", 3}) + "\n");
  try {
    load_notebook(dir / "gap.jsonl");
    FAIL("expected SeqGapError");
  } catch (const SeqGapError& e) {
    CHECK(e.expected() == 2);
    CHECK(e.found() == 3);
    CHECK(e.code() == ErrorCode::SeqGap);
  }
}

TEST_CASE("truncated tail is reported and repaired") {
  TempDir dir;
  const auto path = dir / "nb.jsonl";
  save_notebook(path, notebook_of(3));
  auto text = slurp(path);
  const auto full_size = text.size();
  const std::string torn = note_to_json_line({"e3", "half written", 3});
  spit(path, text + torn.substr(0, torn.size() / 2));

  const auto load = load_notebook(path);
  CHECK(load.notebook.size() == 3);
  REQUIRE(load.corrupt.size() == 1);
  CHECK(load.corrupt[0].line_no == 4);
  CHECK(load.valid_bytes == full_size);

  {
    auto file = NotebookFile::open(path);
    CHECK(file.recovered().size() == 1);
    CHECK(file.notebook().size() == 3);
    file.append(Edit{"e3", "whole", TaskKind::QuestionAnswering});
  }
  const auto after = load_notebook(path);
  CHECK(after.corrupt.empty());
  REQUIRE(after.notebook.size() == 4);
  CHECK(after.notebook[3].text == "whole");
}

TEST_CASE("notebook file appends durably") {
  TempDir dir;
  const auto path = dir / "nb.jsonl";
  {
    auto file = NotebookFile::open(path);
    CHECK(std::filesystem::exists(path));
    CHECK(file.notebook().size() == 0);
    for (int i = 0; i < 5; ++i) {
      const auto& note = file.append(Edit{"e" + std::to_string(i), "s" + std::to_string(i), TaskKind::QuestionAnswering});
      CHECK(note.seq == static_cast<std::size_t>(i));
      // Every intermediate notebook is already on disk.
      CHECK(load_notebook(path).notebook == file.notebook());
    }
    CHECK_THROWS_AS(file.append(Edit{"e1", "dup", TaskKind::QuestionAnswering}), Error);
    CHECK_THROWS_AS(file.append(Edit{"e9", " ", TaskKind::QuestionAnswering}), Error);
    CHECK(load_notebook(path).notebook.size() == 5);
  }
  // A final line missing its newline is still a note, and later appends stay separate.
  auto text = slurp(path);
  text.pop_back();
  spit(path, text);
  {
    auto file = NotebookFile::open(path);
    CHECK(file.recovered().empty());
    file.append(Edit{"e5", "s5", TaskKind::QuestionAnswering});
  }
  CHECK(load_notebook(path).notebook.size() == 6);
}

TEST_CASE("prediction cache") {
  PredictionCache cache;
  CHECK_FALSE(cache.get("mock", "prompt"));
  CHECK(cache.put("mock", "prompt", "paris"));
  CHECK(cache.get("mock", "prompt") == "paris");
  CHECK_FALSE(cache.put("mock", "prompt", "rome"));
  CHECK(cache.get("mock", "prompt") == "paris");
  CHECK_FALSE(cache.get("other", "prompt"));
  CHECK(cache.size() == 1);
}

TEST_CASE("digest collisions never return the wrong answer") {
  PredictionCache cache([](std::string_view) { return std::uint64_t{42}; });
  cache.put("mock", "a", "1");
  cache.put("mock", "b", "2");
  CHECK(cache.get("mock", "a") == "1");
  CHECK(cache.get("mock", "b") == "2");
  CHECK_FALSE(cache.get("mock", "c"));
  CHECK(cache.size() == 2);
}

TEST_CASE("cache persists through its sink") {
  TempDir dir;
  {
    PredictionCache cache;
    cache.attach(dir / "cache.jsonl");
    cache.put("mock", "p1", "a1");
    cache.put("mock", "p2", "a2");
  }
  PredictionCache again;
  again.attach(dir / "cache.jsonl");
  CHECK(again.size() == 2);
  CHECK(again.get("mock", "p2") == "a2");
}

TEST_CASE("cache under concurrent access") {
  PredictionCache cache;
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&cache] {
      for (int i = 0; i < 500; ++i) {
        const auto key = "p" + std::to_string(i);
        cache.put("mock", key, "a" + std::to_string(i));
        const auto got = cache.get("mock", key);
        CHECK(got == "a" + std::to_string(i));
      }
    });
  }
  threads.clear();
  CHECK(cache.size() == 500);
}
