#include "nbedit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace nbedit {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::TwoStep: return "two_step";
    case Strategy::OneStep: return "one_step";
    case Strategy::Unedited: return "unedited";
  }
  return "two_step";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "two_step") return Strategy::TwoStep;
  if (text == "one_step") return Strategy::OneStep;
  if (text == "unedited") return Strategy::Unedited;
  throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + std::string(text) + "'");
}

double harmonic_mean(double a, double b) {
  if (!(a >= 0.0 && a <= 100.0) || !(b >= 0.0 && b <= 100.0)) {
    throw Error(ErrorCode::OutOfRange, "harmonic_mean arguments must be percentages");
  }
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double round_half_up_1dp(double value) {
  // Two stages: hundredths first, then tenths. Scores are published at one
  // decimal, so the mean of two of them is only good to about two, and
  // 2*96.9*96.8/193.7 = 96.84995 should read as 96.85 and report as 96.9.
  // The hundredths stage also absorbs binary representation error.
  const double hundredths = std::floor(value * 100.0 + 0.5 + 1e-9);
  return std::floor(hundredths / 10.0 + 0.5 + 1e-9) / 10.0;
}

namespace {

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

double matched_share(std::span<const std::pair<std::string, std::string>> pairs) {
  std::size_t hits = 0;
  for (const auto& [a, b] : pairs) hits += exact_match(a, b) ? 1 : 0;
  return percent(hits, pairs.size());
}

}  // namespace

double edit_success(std::span<const std::pair<std::string, std::string>> predictions) {
  if (predictions.empty()) throw Error(ErrorCode::NoInScopeExamples, "no in-scope examples");
  return matched_share(predictions);
}

double behavior_preservation(std::span<const std::pair<std::string, std::string>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::NoOutOfScopeExamples, "no out-of-scope examples");
  return matched_share(pairs);
}

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json breakdown = nlohmann::json::object();
  for (const auto& [tag, bp] : r.breakdown) breakdown[tag] = bp;
  return {
      {"report_version", kReportVersion},
      {"strategy", to_string(r.strategy)},
      {"task", to_string(r.task)},
      {"k", r.k},
      {"es", r.es},
      {"bp", r.bp},
      {"eq", r.eq},
      {"es_strict", r.es_strict},
      {"recall_at_k", r.recall_at_k ? nlohmann::json(*r.recall_at_k) : nlohmann::json(nullptr)},
      {"breakdown", std::move(breakdown)},
      {"counts", {{"in_scope", r.in_scope}, {"out_of_scope", r.out_of_scope}, {"failed", r.failed}}},
      {"rounded",
       {{"es", round_half_up_1dp(r.es)}, {"bp", round_half_up_1dp(r.bp)}, {"eq", round_half_up_1dp(r.eq)}}},
  };
}

std::string report_to_table(const MetricsReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << std::left << std::setw(10) << "strategy" << std::right << std::setw(4) << "k"
      << std::setw(8) << "ES" << std::setw(8) << "BP" << std::setw(8) << "EQ" << std::setw(10)
      << "recall@k" << '\n';
  out << std::left << std::setw(10) << to_string(r.strategy) << std::right << std::setw(4) << r.k
      << std::setw(8) << round_half_up_1dp(r.es) << std::setw(8) << round_half_up_1dp(r.bp)
      << std::setw(8) << round_half_up_1dp(r.eq) << std::setw(10);
  if (r.recall_at_k) {
    out << round_half_up_1dp(*r.recall_at_k);
  } else {
    out << "-";
  }
  out << '\n';
  for (const auto& [tag, bp] : r.breakdown) {
    out << "  bp[" << tag << "] = " << round_half_up_1dp(bp) << '\n';
  }
  out << "  in_scope=" << r.in_scope << " out_of_scope=" << r.out_of_scope
      << " failed=" << r.failed << " es_strict=" << round_half_up_1dp(r.es_strict) << '\n';
  return out.str();
}

bool ExampleOutcome::all_gold_retrieved() const {
  for (std::size_t seq : gold) {
    if (!retrieved.contains(seq)) return false;
  }
  return true;
}

EditedModel build_model(const Dataset& dataset, const EditorConfig& config) {
  EditedModel model(config);
  for (const auto& record : dataset.records) model.apply(record.edit);
  return model;
}

namespace {

struct WorkItem {
  std::size_t record;
  const ScopedExample* example;
};

std::vector<WorkItem> collect(const Dataset& dataset, bool in_scope) {
  std::vector<WorkItem> items;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    const auto& list = in_scope ? dataset.records[r].in_scope : dataset.records[r].out_of_scope;
    for (const auto& ex : list) items.push_back({r, &ex});
  }
  if (!in_scope) {
    for (const auto& ex : dataset.extra_out_of_scope) items.push_back({dataset.records.size(), &ex});
  }
  return items;
}

std::set<std::size_t> gold_seqs(const Notebook& notebook, const ScopedExample& example) {
  std::set<std::size_t> gold;
  for (const auto& id : std::get<InScope>(example.scope).edit_ids) {
    auto seq = notebook.seq_of(id);
    if (!seq) throw Error(ErrorCode::InvalidArgument, "in-scope example references unknown edit '" + id + "'");
    gold.insert(*seq);
  }
  return gold;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; the first exception
// is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

struct Prediction {
  std::string normalized;
  std::set<std::size_t> retrieved;
  bool fell_back = false;
  bool failed = false;
};

Prediction predict(const EditedModel& model, Strategy strategy, const Reader& reader,
                   std::string_view input) {
  Prediction p;
  try {
    switch (strategy) {
      case Strategy::TwoStep: {
        auto trace = model.two_step(reader, input);
        p.normalized = trace.final.normalized;
        p.retrieved = trace.retrieved.seqs();
        p.fell_back = trace.fell_back;
        break;
      }
      case Strategy::OneStep:
        p.normalized = model.one_step_mrc(reader, input).normalized;
        if (!model.notebook().empty()) p.retrieved = model.retrieve(input, model.config().k).seqs();
        break;
      case Strategy::Unedited:
        p.normalized = model.unedited(reader, input).normalized;
        p.fell_back = true;
        break;
    }
  } catch (const BackendFailure&) {
    p = Prediction{};
    p.failed = true;
  }
  return p;
}

std::optional<std::string> base_prediction(const EditedModel& model, const Reader& reader,
                                           std::string_view input, PredictionCache* cache) {
  const std::string prompt = render(no_context_kind(model.config().task), "", input);
  if (cache) {
    if (auto hit = cache->get(reader.id(), prompt)) return hit;
  }
  try {
    auto answer = model.unedited(reader, input).normalized;
    if (cache) cache->put(reader.id(), prompt, answer);
    return answer;
  } catch (const BackendFailure&) {
    return std::nullopt;
  }
}

}  // namespace

Evaluation evaluate(const Dataset& dataset, Strategy strategy, const Reader& reader,
                    const EditorConfig& config, const EvalOptions& options) {
  const EditedModel model = build_model(dataset, config);
  const auto in_items = collect(dataset, true);
  const auto out_items = collect(dataset, false);
  if (in_items.empty()) throw Error(ErrorCode::NoInScopeExamples, "dataset has no in-scope examples");
  if (out_items.empty()) throw Error(ErrorCode::NoOutOfScopeExamples, "dataset has no out-of-scope examples");

  Evaluation result;
  result.examples.resize(in_items.size() + out_items.size());

  parallel_for(result.examples.size(), options.parallel, [&](std::size_t i) {
    const bool in_scope = i < in_items.size();
    const WorkItem& item = in_scope ? in_items[i] : out_items[i - in_items.size()];
    const ScopedExample& ex = *item.example;

    ExampleOutcome outcome;
    outcome.record = item.record;
    outcome.in_scope = in_scope;
    outcome.input = ex.input;
    if (in_scope) {
      outcome.gold = gold_seqs(model.notebook(), ex);
      outcome.expected = ex.expected;
    } else {
      outcome.tag = std::get<OutOfScope>(ex.scope).tag;
    }

    Prediction p = predict(model, strategy, reader, ex.input);
    outcome.prediction = p.normalized;
    outcome.retrieved = std::move(p.retrieved);
    outcome.fell_back = p.fell_back;
    outcome.failed = p.failed;

    if (in_scope) {
      outcome.correct = !p.failed && exact_match(outcome.prediction, ex.expected);
    } else {
      std::optional<std::string> base;
      if (strategy == Strategy::Unedited) {
        if (!p.failed) base = outcome.prediction;
      } else {
        base = base_prediction(model, reader, ex.input, options.cache);
      }
      outcome.expected = base.value_or("");
      outcome.correct = !p.failed && base && exact_match(outcome.prediction, *base);
    }
    result.examples[i] = std::move(outcome);
  });

  MetricsReport& report = result.report;
  report.strategy = strategy;
  report.task = config.task;
  report.k = config.k;
  report.in_scope = in_items.size();
  report.out_of_scope = out_items.size();

  std::size_t es_hits = 0;
  std::size_t bp_hits = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> tags;  // hits, total
  std::map<std::size_t, bool> record_ok;
  double recall_sum = 0.0;
  for (const auto& o : result.examples) {
    report.failed += o.failed ? 1 : 0;
    if (o.in_scope) {
      es_hits += o.correct ? 1 : 0;
      auto [it, inserted] = record_ok.emplace(o.record, true);
      it->second = it->second && o.correct;
      std::size_t found = 0;
      for (std::size_t seq : o.gold) found += o.retrieved.contains(seq) ? 1 : 0;
      recall_sum += static_cast<double>(found) / static_cast<double>(o.gold.size());
    } else {
      bp_hits += o.correct ? 1 : 0;
      auto& bucket = tags[o.tag.value_or(std::string(kUntaggedBucket))];
      bucket.first += o.correct ? 1 : 0;
      ++bucket.second;
    }
  }
  report.es = percent(es_hits, report.in_scope);
  report.bp = percent(bp_hits, report.out_of_scope);
  report.eq = harmonic_mean(report.es, report.bp);
  std::size_t strict = 0;
  for (const auto& [record, ok] : record_ok) strict += ok ? 1 : 0;
  report.es_strict = percent(strict, record_ok.size());
  if (strategy != Strategy::Unedited) {
    report.recall_at_k = 100.0 * recall_sum / static_cast<double>(report.in_scope);
  }
  for (const auto& [tag, counts] : tags) report.breakdown[tag] = percent(counts.first, counts.second);
  return result;
}

std::vector<RecallPoint> recall_curve(const Dataset& dataset, std::span<const std::size_t> ks) {
  const EditedModel model = build_model(dataset, EditorConfig{});
  const auto items = collect(dataset, true);
  std::vector<std::set<std::size_t>> gold;
  gold.reserve(items.size());
  for (const auto& item : items) gold.push_back(gold_seqs(model.notebook(), *item.example));

  std::vector<RecallPoint> curve;
  if (ks.empty()) return curve;
  for (std::size_t k : ks) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  }
  // Rankings are a total order, so the top-k list is a prefix of the top-K
  // list for every k <= K: retrieve once at the largest k.
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  std::vector<RetrievalResult> ranked;
  ranked.reserve(items.size());
  for (const auto& item : items) ranked.push_back(model.retrieve(item.example->input, k_max));

  for (std::size_t k : ks) {
    std::vector<std::pair<RetrievalResult, std::set<std::size_t>>> results;
    results.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      RetrievalResult prefix = ranked[i];
      prefix.items.resize(std::min(k, prefix.items.size()));
      prefix.k = k;
      results.emplace_back(std::move(prefix), gold[i]);
    }
    curve.push_back(RecallPoint{k, 100.0 * recall_at_k(results)});
  }
  return curve;
}

}  // namespace nbedit
