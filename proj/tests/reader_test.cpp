#include "doctest.h"

#include <random>

#include "nbedit/reader.hpp"

using namespace nbedit;

namespace {

MockWorld apple_world() {
  MockWorld w;
  w.add({"apple", "ceo", "steve jobs"});
  w.add({"france", "capital", "paris"});
  w.add({"alice", "country", "france"});
  return w;
}

std::string mrc(std::string_view context, std::string_view q) {
  return render(PromptKind::MrcWithContext, context, q);
}

}  // namespace

TEST_CASE("token truncation") {
  CHECK(count_tokens("  a b\n c ") == 3);
  auto c = truncate_to_tokens("one two three four", 2);
  CHECK(c.text == "one two");
  CHECK(c.truncated);
  c = truncate_to_tokens("one two  ", 2);
  CHECK(c.text == "one two  ");
  CHECK_FALSE(c.truncated);
  c = truncate_to_tokens("a\nb c", 2);
  CHECK(c.text == "a\nb");
  CHECK(truncate_to_tokens("x", 0).text.empty());
  CHECK(make_request("p", TaskKind::QuestionAnswering).max_tokens == 20);
  CHECK(make_request("p", TaskKind::FactChecking).max_tokens == 10);
  CHECK(ReaderRequest::decode == "greedy");
}

TEST_CASE("fact and question grammar") {
  CHECK(FactTriple{"Apple", "ceo", "Tim Cook"}.render() == "The ceo of Apple is Tim Cook.");
  auto f = parse_fact("The ceo of Apple is Tim Cook.");
  REQUIRE(f);
  CHECK(*f == FactTriple{"apple", "ceo", "tim cook"});
  CHECK(parse_fact("THE  CEO OF APPLE IS TIM COOK").value() == *f);
  CHECK_FALSE(parse_fact("Apple is run by Tim Cook."));

  auto one = parse_question("What is the ceo of apple?");
  REQUIRE(one);
  CHECK(one->subject == "apple");
  CHECK(one->relations == std::vector<std::string>{"ceo"});

  auto two = parse_question("What is the capital of the country of Alice?");
  REQUIRE(two);
  CHECK(two->subject == "alice");
  CHECK(two->relations == std::vector<std::string>{"country", "capital"});
  CHECK_FALSE(parse_question("Who runs apple?"));
}

TEST_CASE("mock_parse inverts render") {
  const std::string ctx = "The ceo of apple is tim cook.\nThe capital of france is paris.";
  auto m = mock_parse(mrc(ctx, "What is the ceo of apple?"));
  CHECK(m.kind == PromptKind::MrcWithContext);
  CHECK(m.context_lines == std::vector<std::string>{"The ceo of apple is tim cook.", "The capital of france is paris."});
  CHECK(m.query == "What is the ceo of apple?");

  m = mock_parse(render(PromptKind::FcWithContext, ctx, "The ceo of apple is tim cook."));
  CHECK(m.kind == PromptKind::FcWithContext);
  CHECK(m.context_lines.size() == 2);
  CHECK(m.query == "The ceo of apple is tim cook.");

  m = mock_parse(render(PromptKind::QaNoContext, "", "What is x of y?"));
  CHECK(m.kind == PromptKind::QaNoContext);
  CHECK(m.query == "What is x of y?");
  CHECK(m.context_lines.empty());

  m = mock_parse(render(PromptKind::FcNoContext, "", "Saxony is in Ireland"));
  CHECK(m.kind == PromptKind::FcNoContext);
  CHECK(m.query == "Saxony is in Ireland");

  m = mock_parse(render(PromptKind::MrcWithContext, "", "q?", ContextPolicy::AllowEmpty));
  CHECK(m.context_lines.empty());
  CHECK(m.query == "q?");

  CHECK_THROWS_AS(mock_parse("hello there"), Error);
}

TEST_CASE("mock answering rules") {
  const MockReader reader(apple_world());
  CHECK(reader.answer(mrc("The ceo of apple is tim cook.", "What is the ceo of apple?")) == "tim cook");
  CHECK(reader.answer(mrc("The capital of spain is madrid.", "What is the ceo of apple?")) == "unanswerable");
  CHECK(reader.answer(render(PromptKind::QaNoContext, "", "What is the ceo of apple?")) == "steve jobs");
  CHECK(reader.answer(render(PromptKind::QaNoContext, "", "What is the ceo of nokia?")) == "unknown");
  CHECK(reader.answer("garbage prompt") == "unanswerable");

  SUBCASE("two hop") {
    const std::string q = "What is the capital of the country of Alice?";
    CHECK(reader.answer(render(PromptKind::QaNoContext, "", q)) == "paris");
    // Hop 1 from context, hop 2 from parametric memory.
    CHECK(reader.answer(mrc("The country of alice is france.", q)) == "paris");
    // Both hops edited.
    CHECK(reader.answer(mrc("The country of alice is spain.\nThe capital of spain is Madrid.", q)) == "madrid");
    // Only hop 2 in context: first hop is not grounded.
    CHECK(reader.answer(mrc("The capital of france is lyon.", q)) == "unanswerable");
  }

  SUBCASE("fact checking") {
    const std::string ctx = "The ceo of apple is tim cook.";
    CHECK(reader.answer(render(PromptKind::FcWithContext, ctx, "The ceo of apple is Tim Cook.")) == "Yes");
    CHECK(reader.answer(render(PromptKind::FcWithContext, ctx, "The ceo of apple is steve jobs.")) == "No");
    CHECK(reader.answer(render(PromptKind::FcWithContext, ctx, "The capital of france is paris.")) ==
          "It's impossible to say");
    CHECK(reader.answer(render(PromptKind::FcNoContext, "", "The ceo of apple is steve jobs.")) == "Yes");
    CHECK(reader.answer(render(PromptKind::FcNoContext, "", "The ceo of apple is tim cook.")) == "No");
    CHECK(reader.answer(render(PromptKind::BooleanProbe, "", "The ceo of apple is steve jobs.")) == "Yes");
  }
}

TEST_CASE("grounding dominance and robust irrelevance") {
  const MockReader reader(apple_world());
  const std::string q = "What is the ceo of apple?";
  CHECK(reader.answer(mrc("The ceo of apple is tim cook.", q)) == "tim cook");

  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::string ctx = "The ceo of apple is tim cook.";
    std::string noise;
    const int extra = 1 + static_cast<int>(rng() % 6);
    for (int j = 0; j < extra; ++j) {
      const std::string line = "The r" + std::to_string(rng() % 50) + " of s" + std::to_string(rng() % 50) +
                               " is o" + std::to_string(rng() % 50) + ".";
      ctx += "\n" + line;
      noise += (noise.empty() ? "" : "\n") + line;
    }
    CHECK(reader.answer(mrc(ctx, q)) == "tim cook");
    CHECK(reader.answer(mrc(noise, q)) == "unanswerable");
  }
}

TEST_CASE("conflicting context lines: best-ranked wins") {
  const MockReader reader(apple_world());
  CHECK(reader.answer(mrc("The ceo of apple is a.\nThe ceo of apple is b.", "What is the ceo of apple?")) == "a");
}

TEST_CASE("mock reader is pure and respects the token cap") {
  MockWorld w;
  w.add({"x", "name", "one two three four five six seven eight nine ten eleven twelve"});
  const MockReader reader(w);
  const ReaderRequest req = make_request(render(PromptKind::QaNoContext, "", "What is the name of x?"), TaskKind::FactChecking);
  const auto a = reader.complete(req);
  const auto b = reader.complete(req);
  CHECK(a.text == b.text);
  CHECK(count_tokens(a.text) <= 10);
  CHECK(a.truncated);
  CHECK_THROWS_AS(reader.complete(ReaderRequest{"", 5}), Error);
}

TEST_CASE("context noise knob") {
  const MockReader exact(apple_world());
  const MockReader always(apple_world(), MockReaderOptions{1.0, 3});
  const MockReader half(apple_world(), MockReaderOptions{0.5, 3});
  const std::string p = mrc("The ceo of apple is tim cook.", "What is the ceo of apple?");
  CHECK(exact.answer(p) == "tim cook");
  CHECK(always.answer(p) == "steve jobs");
  CHECK(half.answer(p) == half.answer(p));
  int ignored = 0;
  for (int i = 0; i < 400; ++i) {
    const std::string pi = mrc("The ceo of apple is tim cook.\nThe z of q" + std::to_string(i) + " is w.",
                               "What is the ceo of apple?");
    ignored += half.answer(pi) == "steve jobs" ? 1 : 0;
  }
  CHECK(ignored > 140);
  CHECK(ignored < 260);
  CHECK_THROWS_AS(MockReader(MockWorld{}, MockReaderOptions{1.5, 0}), Error);
}

TEST_CASE("MockWorld rejects conflicts") {
  MockWorld w;
  w.add({"A", "r", "o"});
  w.add({"a", "R", "O"});  // same fact, different case
  CHECK(w.size() == 1);
  CHECK_THROWS_AS(w.add({"a", "r", "p"}), Error);
  CHECK_THROWS_AS(w.add({"", "r", "p"}), Error);
  CHECK(w.lookup("A", "r") == "o");
  CHECK_FALSE(w.lookup("b", "r"));
}
