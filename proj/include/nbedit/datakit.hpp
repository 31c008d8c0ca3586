#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "nbedit/core.hpp"
#include "nbedit/http.hpp"
#include "nbedit/reader.hpp"

namespace nbedit {

// ---------------------------------------------------------------------------
// Dataset records
// ---------------------------------------------------------------------------

struct Dataset {
  std::vector<EditRecord> records;
  // Out-of-scope examples not attached to any edit.
  std::vector<ScopedExample> extra_out_of_scope;
};

struct SchemaIssue {
  std::size_t line = 0;  // 1-based
  std::string field;
  std::string message;
};

struct DatasetLoad {
  std::vector<EditRecord> records;
  std::vector<SchemaIssue> issues;
};

// {"id","task","statement","in_scope":[{"input","expected","edit_ids"}],
//  "out_of_scope":[{"input","expected","tag"}]}
nlohmann::json record_to_json(const EditRecord& record);
std::string dataset_to_jsonl(const std::vector<EditRecord>& records);

// JSON Lines, one record per line. Invalid lines are skipped and reported;
// only an unreadable file throws (Error(IoError)).
DatasetLoad load_dataset(const std::filesystem::path& path);
DatasetLoad parse_dataset(std::string_view jsonl);
void save_dataset(const std::filesystem::path& path, const std::vector<EditRecord>& records);

// MockWorld files: one {"subject","relation","object"} per line.
void save_world(const std::filesystem::path& path, const MockWorld& world);
MockWorld load_world(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// NLI filtering
// ---------------------------------------------------------------------------

struct NliProbs {
  double entail = 0.0;
  double neutral = 0.0;
  double contradict = 0.0;

  // Each in [0,1], sum within 1e-6 of 1. Throws Error(InvalidArgument).
  void validate() const;
};

class NliJudge {
 public:
  virtual ~NliJudge() = default;
  virtual NliProbs judge(std::string_view premise, std::string_view hypothesis) const = 0;
};

// Table lookup with a fixed default for unlisted pairs.
class MockNliJudge final : public NliJudge {
 public:
  static constexpr NliProbs kDefault{0.1, 0.8, 0.1};

  explicit MockNliJudge(NliProbs fallback = kDefault);

  void set(std::string premise, std::string hypothesis, NliProbs probs);
  NliProbs judge(std::string_view premise, std::string_view hypothesis) const override;

  // JSONL rows {"premise","hypothesis","entail","neutral","contradict"}.
  static MockNliJudge load(const std::filesystem::path& path);

 private:
  NliProbs fallback_;
  std::map<std::pair<std::string, std::string>, NliProbs, std::less<>> table_;
};

// POST {base}/nli {premise, hypothesis} -> {entail, neutral, contradict}.
class HttpNliJudge final : public NliJudge {
 public:
  explicit HttpNliJudge(HttpConfig config);
  NliProbs judge(std::string_view premise, std::string_view hypothesis) const override;

 private:
  HttpTransport transport_;
};

inline constexpr double kSelfEntailmentRatio = 0.8;

enum class FilterReason { Kept, InScopeNeutralTooHigh, OutOfScopeNeutralTooLow };
std::string_view to_string(FilterReason reason);

struct FilterDecision {
  std::string edit_id;
  bool in_scope = true;
  std::size_t index = 0;  // position within the record's in_scope / out_of_scope list
  std::string input;
  double neutral = 0.0;
  double threshold = 0.0;  // 0.8 x self-entailment
  bool kept = false;
  FilterReason reason = FilterReason::Kept;
};

// Keep iff P(neutral | edit, example) < 0.8 * P(entail | edit, edit).
FilterDecision filter_in_scope(const NliJudge& judge, std::string_view edit_statement,
                               std::string_view in_scope_statement);
// Keep iff P(neutral | edit, example) > 0.8 * P(entail | edit, edit).
FilterDecision filter_out_of_scope(const NliJudge& judge, std::string_view edit_statement,
                                   std::string_view oos_statement);

struct FilterResult {
  std::vector<EditRecord> records;
  std::vector<FilterDecision> decisions;
};

// Filters every record; records whose in-scope list empties are kept with
// no in-scope examples so edit order is preserved.
FilterResult filter_dataset(const std::vector<EditRecord>& records, const NliJudge& judge);

nlohmann::json decision_to_json(const FilterDecision& decision);
void write_audit_log(const std::filesystem::path& path, const std::vector<FilterDecision>& decisions);

// ---------------------------------------------------------------------------
// Synthetic worlds
// ---------------------------------------------------------------------------

struct WorldSpec {
  std::uint64_t seed = 0;
  std::size_t n_facts = 0;         // one counterfactual edit per fact
  std::size_t n_paraphrases = 0;   // extra in-scope phrasings per edit
  std::size_t n_oos_per_edit = 0;  // alternating neighbor_subject / same_subject
  double two_hop_fraction = 0.0;   // floor(fraction * n_facts) two-hop questions
  TaskKind task = TaskKind::QuestionAnswering;
};

struct GeneratedWorld {
  MockWorld world;
  std::vector<EditRecord> records;
};

// Seeded, platform-independent generator. Every edit has a distinct subject
// and its own relation word. Two-hop question j chains edit j (s, r1, o1)
// with edit P+j whose subject is o1. Throws Error(InvalidSize).
GeneratedWorld generate_world(const WorldSpec& spec);

}  // namespace nbedit
