#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "nbedit/datakit.hpp"
#include "nbedit/engine.hpp"
#include "nbedit/store.hpp"

namespace nbedit {

inline constexpr int kReportVersion = 1;

enum class Strategy { TwoStep, OneStep, Unedited };
std::string_view to_string(Strategy strategy);
// "two_step" | "one_step" | "unedited"
Strategy parse_strategy(std::string_view text);

// 2ab / (a + b) on percentages, 0 when both are 0. Throws Error(OutOfRange).
double harmonic_mean(double a, double b);

// One decimal, ties away from zero (inputs here are non-negative).
double round_half_up_1dp(double value);

// Pairs are (prediction, expected). Throws Error(NoInScopeExamples).
double edit_success(std::span<const std::pair<std::string, std::string>> predictions);

// Pairs are (edited answer, base answer). Throws Error(NoOutOfScopeExamples).
double behavior_preservation(std::span<const std::pair<std::string, std::string>> pairs);

struct MetricsReport {
  Strategy strategy = Strategy::TwoStep;
  TaskKind task = TaskKind::QuestionAnswering;
  std::size_t k = kDefaultTopK;
  double es = 0.0;
  double bp = 0.0;
  double eq = 0.0;
  // Share of edits whose every in-scope example is answered correctly.
  double es_strict = 0.0;
  std::optional<double> recall_at_k;  // percent, retrieval strategies only
  std::map<std::string, double> breakdown;  // out-of-scope tag -> bp
  std::size_t in_scope = 0;
  std::size_t out_of_scope = 0;
  std::size_t failed = 0;
};

inline constexpr std::string_view kUntaggedBucket = "untagged";

nlohmann::json report_to_json(const MetricsReport& report);
// Aligned plain-text table, values rounded to one decimal.
std::string report_to_table(const MetricsReport& report);

struct ExampleOutcome {
  std::size_t record = 0;  // index into Dataset::records; records.size() for extras
  bool in_scope = true;
  std::string input;
  std::string expected;           // label for in-scope, base answer for out-of-scope
  std::string prediction;         // normalized
  std::optional<std::string> tag;
  std::set<std::size_t> gold;     // note seqs, in-scope only
  std::set<std::size_t> retrieved;
  bool correct = false;           // matches expected / preserved
  bool failed = false;            // reader backend error
  bool fell_back = false;

  bool all_gold_retrieved() const;
};

struct EvalOptions {
  std::size_t parallel = 1;
  // Base-model predictions are looked up here first and stored on miss.
  PredictionCache* cache = nullptr;
};

struct Evaluation {
  MetricsReport report;
  std::vector<ExampleOutcome> examples;
};

// Applies every edit in dataset order, runs each in-scope and out-of-scope
// example through `strategy`, and scores against labels / base predictions.
// Backend failures count as wrong; any other error propagates.
Evaluation evaluate(const Dataset& dataset, Strategy strategy, const Reader& reader,
                    const EditorConfig& config, const EvalOptions& options = {});

struct RecallPoint {
  std::size_t k = 0;
  double recall = 0.0;  // percent
};

// Recall of gold notes for every in-scope example after applying all edits.
std::vector<RecallPoint> recall_curve(const Dataset& dataset, std::span<const std::size_t> ks);

// Model with every dataset edit applied in order.
EditedModel build_model(const Dataset& dataset, const EditorConfig& config);

}  // namespace nbedit
