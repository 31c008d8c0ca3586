// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "nbedit/datakit.hpp"
#include "nbedit/eval.hpp"
#include "nbedit/store.hpp"
#include "temp_dir.hpp"

using namespace nbedit;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

EditorConfig config_k(std::size_t k) {
  EditorConfig c;
  c.k = k;
  return c;
}

EvalOptions parallel_options() {
  EvalOptions o;
  o.parallel = workers();
  return o;
}

const std::size_t kEdits = 1024;

WorldSpec paper_scale_spec() {
  WorldSpec spec;
  spec.seed = 2024;
  spec.n_facts = kEdits;
  spec.n_paraphrases = 2;
  spec.n_oos_per_edit = 2;
  spec.two_hop_fraction = 0.25;
  return spec;
}

const GeneratedWorld& paper_scale_world() {
  static const GeneratedWorld g = generate_world(paper_scale_spec());
  return g;
}

Dataset as_dataset(const GeneratedWorld& g) { return Dataset{g.records, {}}; }

bool is_two_hop(const ExampleOutcome& ex) { return ex.in_scope && ex.gold.size() == 2; }

// Evaluations of the 1024-edit world are shared between criteria 2 to 4.
const Evaluation& two_step_at(std::size_t k) {
  static std::map<std::size_t, Evaluation> memo;
  auto it = memo.find(k);
  if (it == memo.end()) {
    const auto& g = paper_scale_world();
    const MockReader reader(g.world);
    it = memo.emplace(k, evaluate(as_dataset(g), Strategy::TwoStep, reader, config_k(k), parallel_options())).first;
  }
  return it->second;
}

void metric_arithmetic(Outcome& o) {
  struct Row {
    double es, bp, eq;
  };
  for (const Row r : {Row{96.9, 96.8, 96.9}, Row{41.9, 100.0, 59.1}, Row{58.9, 49.8, 54.0}, Row{60.1, 67.9, 63.8}}) {
    const double h = harmonic_mean(r.es, r.bp);
    const double rounded = round_half_up_1dp(h);
    char buf[96];
    std::snprintf(buf, sizeof buf, " (%.1f, %.1f) -> %.6f -> %.1f", r.es, r.bp, h, rounded);
    o.detail << buf;
    o.require(std::fabs(rounded - r.eq) <= 0.05 + 1e-12, "expected " + std::to_string(r.eq));
  }
}

void sequential_editing(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const auto& g = paper_scale_world();
  // Apply sequentially and check every prefix lands in order.
  Notebook nb;
  std::vector<Edit> edits;
  for (const auto& r : g.records) edits.push_back(r.edit);
  apply_edits_sequentially(nb, edits);
  o.require(nb.size() == kEdits, "notebook size");
  for (std::size_t i = 0; i < nb.size(); ++i) {
    if (nb[i].edit_id != edits[i].id || nb[i].seq != i) {
      o.require(false, "edit order");
      break;
    }
  }
  const auto& r = two_step_at(kEdits).report;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.detail << " es=" << r.es << " bp=" << r.bp << " eq=" << r.eq << " in_scope=" << r.in_scope
           << " out_of_scope=" << r.out_of_scope << " time=" << secs << "s";
  o.require(r.es == 100.0 && r.bp == 100.0 && r.eq == 100.0, "perfect scores");
  o.require(r.failed == 0, "no failures");
  o.require(secs < 60.0, "runtime under 60 s");
}

void recall_properties(Outcome& o) {
  const auto dataset = as_dataset(paper_scale_world());
  const std::vector<std::size_t> ks{1, 2, 5, 10, kEdits};
  const auto curve = recall_curve(dataset, ks);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    o.detail << " r@" << curve[i].k << "=" << curve[i].recall;
    if (i > 0) o.require(curve[i].recall >= curve[i - 1].recall, "non-decreasing at k=" + std::to_string(curve[i].k));
  }
  o.require(curve.back().recall == 100.0, "recall@1024 = 100");

  std::size_t violations = 0;
  for (std::size_t k : ks) {
    const auto& ev = two_step_at(k);
    for (const auto& ex : ev.examples) {
      if (ex.in_scope && ex.correct && !ex.all_gold_retrieved()) ++violations;
    }
    // The report's own recall must agree with the curve.
    const auto point = std::find_if(curve.begin(), curve.end(), [k](const RecallPoint& p) { return p.k == k; });
    o.require(ev.report.recall_at_k && std::fabs(*ev.report.recall_at_k - point->recall) < 1e-9,
              "report recall at k=" + std::to_string(k));
  }
  o.detail << " violations=" << violations;
  o.require(violations == 0, "correct implies gold retrieved");
}

void multi_edit_combination(Outcome& o) {
  std::map<std::size_t, double> accuracy;
  std::size_t both_retrieved = 0;
  std::size_t both_retrieved_wrong = 0;
  for (std::size_t k : {1, 2, 5, 10}) {
    std::size_t total = 0;
    std::size_t hits = 0;
    for (const auto& ex : two_step_at(k).examples) {
      if (!is_two_hop(ex)) continue;
      ++total;
      hits += ex.correct ? 1 : 0;
      if (ex.all_gold_retrieved()) {
        ++both_retrieved;
        both_retrieved_wrong += ex.correct ? 0 : 1;
      }
    }
    accuracy[k] = total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 0.0;
    o.detail << " acc@" << k << "=" << accuracy[k] << " (n=" << total << ")";
    o.require(total > 0, "two-hop examples present");
  }
  for (std::size_t k : {2, 5, 10}) o.require(accuracy[1] < accuracy[k], "k=1 below k=" + std::to_string(k));
  o.detail << " both_retrieved=" << both_retrieved << " of which wrong=" << both_retrieved_wrong;
  o.require(both_retrieved > 0 && both_retrieved_wrong == 0, "100% when both gold notes retrieved");
}

// Emits the irrelevance marker on every with-context prompt.
class MarkerStub final : public Reader {
 public:
  explicit MarkerStub(const Reader& inner) : inner_(inner) {}
  Completion complete(const ReaderRequest& request) const override {
    const auto prompt = mock_parse(request.prompt);
    if (has_context(prompt.kind)) return {std::string(irrelevance_marker(prompt.kind)), false};
    return inner_.complete(request);
  }
  std::string id() const override { return "marker-stub"; }

 private:
  const Reader& inner_;
};

std::string random_input(std::mt19937_64& rng, const std::vector<FactTriple>& facts) {
  static const std::vector<std::string> words{"what", "is", "the", "of", "who", "capital", "zeta", "?", "Lorem",
                                               "  ", "ceo", "IS", "born", "in", "1999", "x"};
  const auto& f = facts[rng() % facts.size()];
  switch (rng() % 4) {
    case 0:
      return "What is the " + f.relation + " of " + f.subject + "?";
    case 1: {
      const auto& g = facts[rng() % facts.size()];
      return "What is the " + g.relation + " of the " + f.relation + " of " + f.subject + "?";
    }
    case 2:
      return "what IS the " + f.relation + " of   " + f.object;
    default: {
      std::string s;
      const std::size_t n = 1 + rng() % 10;
      for (std::size_t i = 0; i < n; ++i) s += words[rng() % words.size()] + " ";
      return s + "q";
    }
  }
}

void identity_under_irrelevance(Outcome& o) {
  const auto& g = paper_scale_world();
  const MockReader mock(g.world);
  const MarkerStub stub(mock);
  const EditedModel model = build_model(as_dataset(g), config_k(5));
  const auto facts = g.world.facts();
  std::mt19937_64 rng(77);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 10000; ++i) {
    const auto input = random_input(rng, facts);
    pairs.emplace_back(model.two_step(stub, input).final.raw, model.unedited(stub, input).raw);
  }
  std::size_t agree = 0;
  for (const auto& [a, b] : pairs) agree += a == b ? 1 : 0;
  const double bp = behavior_preservation(pairs);
  o.detail << " inputs=" << pairs.size() << " identical=" << agree << " bp=" << bp;
  o.require(agree == pairs.size(), "every answer identical");
  o.require(bp == 100.0, "bp = 100");
}

void baseline_contrast(Outcome& o) {
  WorldSpec spec;
  spec.seed = 99;
  spec.n_facts = 256;
  spec.n_paraphrases = 2;
  spec.n_oos_per_edit = 2;
  spec.two_hop_fraction = 0.25;
  const auto g = generate_world(spec);
  const auto d = as_dataset(g);
  const MockReader reader(g.world);
  const auto cfg = config_k(5);
  const auto two = evaluate(d, Strategy::TwoStep, reader, cfg, parallel_options()).report;
  const auto one = evaluate(d, Strategy::OneStep, reader, cfg, parallel_options()).report;
  const auto base = evaluate(d, Strategy::Unedited, reader, cfg, parallel_options()).report;
  o.detail << " two_step es/bp/eq=" << two.es << "/" << two.bp << "/" << two.eq << " one_step=" << one.es << "/"
           << one.bp << "/" << one.eq << " unedited=" << base.es << "/" << base.bp << "/" << base.eq;
  o.require(one.bp < two.bp, "one-step bp below two-step");
  o.require(base.es < two.es, "unedited es below two-step");
}

void filtering_thresholds(Outcome& o) {
  const std::string edit = "The ceo of apple is tim cook.";
  const std::string example = "Who runs apple?";
  auto judge = [&](double s, double neutral) {
    MockNliJudge j;
    j.set(edit, edit, {s, 1.0 - s, 0.0});
    j.set(edit, example, {0.0, neutral, 1.0 - neutral});
    return j;
  };
  int examples = 0;
  auto expect = [&](bool got, bool want, const std::string& what) {
    ++examples;
    o.require(got == want, what);
  };
  expect(filter_in_scope(judge(0.9, 0.5), edit, example).kept, true, "in 0.50 / 0.90");
  expect(filter_in_scope(judge(0.9, 0.8), edit, example).kept, false, "in 0.80 / 0.90");
  expect(filter_in_scope(judge(0.3, 0.0), edit, example).kept, true, "in 0 / 0.30");
  expect(filter_out_of_scope(judge(0.9, 0.95), edit, example).kept, true, "out 0.95 / 0.90");
  expect(filter_out_of_scope(judge(0.9, 0.5), edit, example).kept, false, "out 0.50 / 0.90");
  expect(filter_out_of_scope(judge(0.5, 0.8 * 0.5), edit, example).kept, false, "out boundary");
  o.detail << " examples=" << examples;

  // Random tables: one record with several examples, judged at two self-entailment levels.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    EditRecord record;
    record.edit = Edit{"e", edit, TaskKind::QuestionAnswering};
    for (int i = 0; i < 6; ++i) {
      record.in_scope.push_back({"in " + std::to_string(i), "x", InScope{{"e"}}});
      record.out_of_scope.push_back({"out " + std::to_string(i), "x", OutOfScope{}});
    }
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    MockNliJudge a, b;
    a.set(edit, edit, {lo, 1.0 - lo, 0.0});
    b.set(edit, edit, {hi, 1.0 - hi, 0.0});
    for (const auto* list : {&record.in_scope, &record.out_of_scope}) {
      for (const auto& ex : *list) {
        const double neutral = u(rng);
        const double entail = (1.0 - neutral) * u(rng);
        const NliProbs p{entail, neutral, 1.0 - neutral - entail};
        a.set(edit, ex.input, p);
        b.set(edit, ex.input, p);
      }
    }
    const auto low = filter_dataset({record}, a).decisions;
    const auto high = filter_dataset({record}, b).decisions;
    for (std::size_t i = 0; i < low.size(); ++i) {
      // Raising s never drops an in-scope example nor keeps a new out-of-scope one.
      const bool ok = low[i].in_scope ? (!low[i].kept || high[i].kept) : (!high[i].kept || low[i].kept);
      violations += ok ? 0 : 1;
    }
  }
  o.detail << " random_tables=1000 violations=" << violations;
  o.require(violations == 0, "monotone in s");
}

void determinism_and_persistence(Outcome& o) {
  TempDir dir;
  auto run_once = [&](const std::string& name) {
    WorldSpec spec = paper_scale_spec();
    spec.n_facts = 256;
    const auto g = generate_world(spec);
    const MockReader reader(g.world, MockReaderOptions{0.1, 5});
    const auto report = evaluate(as_dataset(g), Strategy::TwoStep, reader, config_k(3), parallel_options()).report;
    spit(dir / name, report_to_json(report).dump(2) + "\n");
    return slurp(dir / name);
  };
  const auto first = run_once("a.json");
  const auto second = run_once("b.json");
  o.require(!first.empty() && first == second, "byte-identical report");
  o.detail << " report_bytes=" << first.size();

  const auto nb = build_model(as_dataset(paper_scale_world()), config_k(5)).notebook();
  save_notebook(dir / "nb.jsonl", nb);
  const auto load = load_notebook(dir / "nb.jsonl");
  o.require(load.notebook == nb && load.corrupt.empty(), "1024-note round trip");
  o.detail << " round_trip_notes=" << load.notebook.size();

  const auto intact = slurp(dir / "nb.jsonl");
  const std::string torn = note_to_json_line({"extra", "torn", nb.size()});
  spit(dir / "nb.jsonl", intact + torn.substr(0, torn.size() / 2));
  const auto damaged = load_notebook(dir / "nb.jsonl");
  o.require(damaged.notebook == nb, "valid prefix recovered");
  o.require(damaged.corrupt.size() == 1 && damaged.corrupt[0].line_no == nb.size() + 1, "one corrupt line reported");
  {
    auto file = NotebookFile::open(dir / "nb.jsonl");
    o.require(slurp(dir / "nb.jsonl") == intact, "torn tail cut on open");
    file.append(Edit{"extra", "whole", TaskKind::QuestionAnswering});
  }
  const auto repaired = load_notebook(dir / "nb.jsonl");
  o.require(repaired.corrupt.empty() && repaired.notebook.size() == nb.size() + 1, "append after repair");
  o.detail << " recovered_corrupt=" << damaged.corrupt.size();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"metric arithmetic", metric_arithmetic},
      {"sequential editing at 1024 edits", sequential_editing},
      {"recall properties", recall_properties},
      {"multi-edit combination", multi_edit_combination},
      {"identity under irrelevance", identity_under_irrelevance},
      {"baseline contrast", baseline_contrast},
      {"filtering thresholds", filtering_thresholds},
      {"determinism and persistence", determinism_and_persistence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ":" << o.detail.str()
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
