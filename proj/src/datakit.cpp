#include "nbedit/datakit.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace nbedit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Dataset records

json record_to_json(const EditRecord& record) {
  json in_scope = json::array();
  for (const auto& ex : record.in_scope) {
    in_scope.push_back({{"input", ex.input},
                        {"expected", ex.expected},
                        {"edit_ids", std::get<InScope>(ex.scope).edit_ids}});
  }
  json out_of_scope = json::array();
  for (const auto& ex : record.out_of_scope) {
    json j{{"input", ex.input}, {"expected", ex.expected}};
    if (const auto& tag = std::get<OutOfScope>(ex.scope).tag) j["tag"] = *tag;
    out_of_scope.push_back(std::move(j));
  }
  return {{"id", record.edit.id},
          {"task", to_string(record.edit.task)},
          {"statement", record.edit.statement},
          {"in_scope", std::move(in_scope)},
          {"out_of_scope", std::move(out_of_scope)}};
}

std::string dataset_to_jsonl(const std::vector<EditRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    out += record_to_json(record).dump();
    out.push_back('\n');
  }
  return out;
}

namespace {

struct FieldError {
  std::string field;
  std::string message;
};

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError{where + key, "missing field"};
  return *it;
}

std::string require_text(const json& obj, const std::string& key, const std::string& where,
                         bool non_empty = true) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw FieldError{where + key, "expected a string"};
  auto s = v.get<std::string>();
  if (non_empty && trim(s).empty()) throw FieldError{where + key, "must be non-empty"};
  return s;
}

EditRecord record_from_json(const json& j) {
  if (!j.is_object()) throw FieldError{"", "record is not a JSON object"};
  EditRecord record;
  record.edit.id = require_text(j, "id", "");
  const std::string task = require_text(j, "task", "");
  if (task != "qa" && task != "fc") throw FieldError{"task", "must be \"qa\" or \"fc\""};
  record.edit.task = parse_task(task);
  record.edit.statement = require_text(j, "statement", "");

  const json& in_scope = require(j, "in_scope", "");
  if (!in_scope.is_array()) throw FieldError{"in_scope", "expected an array"};
  for (std::size_t i = 0; i < in_scope.size(); ++i) {
    const std::string where = "in_scope[" + std::to_string(i) + "].";
    const json& ex = in_scope[i];
    if (!ex.is_object()) throw FieldError{where, "expected an object"};
    ScopedExample example;
    example.input = require_text(ex, "input", where);
    example.expected = require_text(ex, "expected", where);
    const json& ids = require(ex, "edit_ids", where);
    if (!ids.is_array() || ids.empty()) throw FieldError{where + "edit_ids", "expected a non-empty array"};
    InScope scope;
    for (const auto& id : ids) {
      if (!id.is_string()) throw FieldError{where + "edit_ids", "ids must be strings"};
      scope.edit_ids.push_back(id.get<std::string>());
    }
    example.scope = std::move(scope);
    record.in_scope.push_back(std::move(example));
  }

  const json& out_of_scope = require(j, "out_of_scope", "");
  if (!out_of_scope.is_array()) throw FieldError{"out_of_scope", "expected an array"};
  for (std::size_t i = 0; i < out_of_scope.size(); ++i) {
    const std::string where = "out_of_scope[" + std::to_string(i) + "].";
    const json& ex = out_of_scope[i];
    if (!ex.is_object()) throw FieldError{where, "expected an object"};
    ScopedExample example;
    example.input = require_text(ex, "input", where);
    example.expected = require_text(ex, "expected", where);
    OutOfScope scope;
    if (auto it = ex.find("tag"); it != ex.end() && !it->is_null()) {
      if (!it->is_string()) throw FieldError{where + "tag", "expected a string"};
      scope.tag = it->get<std::string>();
    }
    example.scope = std::move(scope);
    record.out_of_scope.push_back(std::move(example));
  }

  if (auto problems = validate(record); !problems.empty()) {
    throw FieldError{"in_scope", problems.front()};
  }
  return record;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

DatasetLoad parse_dataset(std::string_view jsonl) {
  DatasetLoad load;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    ++line_no;
    const std::size_t nl = jsonl.find('\n', start);
    const std::string_view line = jsonl.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    if (trim(line).empty()) continue;

    try {
      auto record = record_from_json(json::parse(line));
      if (!seen.insert(record.edit.id).second) {
        throw FieldError{"id", "duplicate edit id '" + record.edit.id + "'"};
      }
      load.records.push_back(std::move(record));
    } catch (const FieldError& e) {
      load.issues.push_back(SchemaIssue{line_no, e.field, e.message});
    } catch (const json::exception& e) {
      load.issues.push_back(SchemaIssue{line_no, "", e.what()});
    }
  }
  return load;
}

DatasetLoad load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path));
}

void save_dataset(const std::filesystem::path& path, const std::vector<EditRecord>& records) {
  write_text_file(path, dataset_to_jsonl(records));
}

void save_world(const std::filesystem::path& path, const MockWorld& world) {
  std::string out;
  for (const auto& fact : world.facts()) {
    out += json{{"subject", fact.subject}, {"relation", fact.relation}, {"object", fact.object}}
               .dump();
    out.push_back('\n');
  }
  write_text_file(path, out);
}

MockWorld load_world(const std::filesystem::path& path) {
  std::istringstream lines(read_text_file(path));
  MockWorld world;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      world.add(FactTriple{j.at("subject").get<std::string>(), j.at("relation").get<std::string>(),
                           j.at("object").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return world;
}

// ---------------------------------------------------------------------------
// NLI filtering

void NliProbs::validate() const {
  for (double p : {entail, neutral, contradict}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "NLI probability outside [0,1]");
  }
  if (std::abs(entail + neutral + contradict - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "NLI probabilities do not sum to 1");
  }
}

MockNliJudge::MockNliJudge(NliProbs fallback) : fallback_(fallback) { fallback_.validate(); }

void MockNliJudge::set(std::string premise, std::string hypothesis, NliProbs probs) {
  probs.validate();
  table_[{std::move(premise), std::move(hypothesis)}] = probs;
}

NliProbs MockNliJudge::judge(std::string_view premise, std::string_view hypothesis) const {
  auto it = table_.find(std::make_pair(std::string(premise), std::string(hypothesis)));
  return it == table_.end() ? fallback_ : it->second;
}

MockNliJudge MockNliJudge::load(const std::filesystem::path& path) {
  std::istringstream lines(read_text_file(path));
  MockNliJudge judge;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      judge.set(j.at("premise").get<std::string>(), j.at("hypothesis").get<std::string>(),
                NliProbs{j.at("entail").get<double>(), j.at("neutral").get<double>(),
                         j.at("contradict").get<double>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return judge;
}

HttpNliJudge::HttpNliJudge(HttpConfig config) : transport_(std::move(config)) {}

NliProbs HttpNliJudge::judge(std::string_view premise, std::string_view hypothesis) const {
  const auto response = transport_.post_json(
      "/nli", {{"premise", std::string(premise)}, {"hypothesis", std::string(hypothesis)}});
  NliProbs probs;
  try {
    probs = NliProbs{response.at("entail").get<double>(), response.at("neutral").get<double>(),
                     response.at("contradict").get<double>()};
  } catch (const json::exception&) {
    throw BackendFailure(ErrorCode::BackendError, 200, response.dump(), "malformed NLI response");
  }
  probs.validate();
  return probs;
}

std::string_view to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::Kept: return "Kept";
    case FilterReason::InScopeNeutralTooHigh: return "InScopeNeutralTooHigh";
    case FilterReason::OutOfScopeNeutralTooLow: return "OutOfScopeNeutralTooLow";
  }
  return "Kept";
}

namespace {

FilterDecision measure(const NliJudge& judge, std::string_view edit, std::string_view example) {
  const NliProbs self = judge.judge(edit, edit);
  const NliProbs pair = judge.judge(edit, example);
  FilterDecision d;
  d.input = std::string(example);
  d.neutral = pair.neutral;
  d.threshold = kSelfEntailmentRatio * self.entail;
  return d;
}

}  // namespace

FilterDecision filter_in_scope(const NliJudge& judge, std::string_view edit_statement,
                               std::string_view in_scope_statement) {
  FilterDecision d = measure(judge, edit_statement, in_scope_statement);
  d.in_scope = true;
  d.kept = d.neutral < d.threshold;
  d.reason = d.kept ? FilterReason::Kept : FilterReason::InScopeNeutralTooHigh;
  return d;
}

FilterDecision filter_out_of_scope(const NliJudge& judge, std::string_view edit_statement,
                                   std::string_view oos_statement) {
  FilterDecision d = measure(judge, edit_statement, oos_statement);
  d.in_scope = false;
  d.kept = d.neutral > d.threshold;
  d.reason = d.kept ? FilterReason::Kept : FilterReason::OutOfScopeNeutralTooLow;
  return d;
}

FilterResult filter_dataset(const std::vector<EditRecord>& records, const NliJudge& judge) {
  FilterResult result;
  for (const auto& record : records) {
    EditRecord kept{record.edit, {}, {}};
    for (std::size_t i = 0; i < record.in_scope.size(); ++i) {
      auto d = filter_in_scope(judge, record.edit.statement, record.in_scope[i].input);
      d.edit_id = record.edit.id;
      d.index = i;
      if (d.kept) kept.in_scope.push_back(record.in_scope[i]);
      result.decisions.push_back(std::move(d));
    }
    for (std::size_t i = 0; i < record.out_of_scope.size(); ++i) {
      auto d = filter_out_of_scope(judge, record.edit.statement, record.out_of_scope[i].input);
      d.edit_id = record.edit.id;
      d.index = i;
      if (d.kept) kept.out_of_scope.push_back(record.out_of_scope[i]);
      result.decisions.push_back(std::move(d));
    }
    result.records.push_back(std::move(kept));
  }
  return result;
}

json decision_to_json(const FilterDecision& d) {
  return {{"edit_id", d.edit_id},   {"scope", d.in_scope ? "in" : "out"},
          {"index", d.index},       {"input", d.input},
          {"neutral", d.neutral},   {"threshold", d.threshold},
          {"kept", d.kept},         {"reason", to_string(d.reason)}};
}

void write_audit_log(const std::filesystem::path& path,
                     const std::vector<FilterDecision>& decisions) {
  std::string out;
  for (const auto& d : decisions) {
    out += decision_to_json(d).dump();
    out.push_back('\n');
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Synthetic worlds

namespace {

// std::uniform_int_distribution is implementation-defined; this mapping is
// the same on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

class NameGenerator {
 public:
  explicit NameGenerator(SeededRng& rng) : rng_(rng) {}

  // Capitalized pronounceable word never handed out before (case-insensitive).
  std::string entity() {
    std::string word = fresh(2, 2);
    word[0] = static_cast<char>(word[0] - 'a' + 'A');
    return word;
  }

  // Lowercase relation word, disjoint from every entity name.
  std::string relation() { return fresh(2, 1); }

 private:
  std::string fresh(std::size_t min_syllables, std::size_t extra) {
    static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    for (std::size_t attempt = 0;; ++attempt) {
      // Grow the name space if collisions pile up.
      const std::size_t syllables = min_syllables + rng_.below(extra + 1) + attempt / 16;
      std::string word;
      for (std::size_t i = 0; i < syllables; ++i) {
        word.push_back(kConsonants[rng_.below(kConsonants.size())]);
        word.push_back(kVowels[rng_.below(kVowels.size())]);
      }
      if (used_.insert(word).second) return word;
    }
  }

  SeededRng& rng_;
  std::unordered_set<std::string> used_;
};

std::string question(std::string_view relation, std::string_view subject) {
  return "What is the " + std::string(relation) + " of " + std::string(subject) + "?";
}

std::string upper_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

std::string spaced(std::string_view s) {
  std::string out;
  for (char c : s) {
    out.push_back(c);
    if (c == ' ') out.push_back(' ');
  }
  return out;
}

// Surface variants of one input; all parse to the same fact.
std::string paraphrase(const std::string& text, std::size_t variant) {
  switch (variant % 5) {
    case 0: return text;
    case 1: return to_lower_ascii(text);
    case 2: return upper_ascii(text);
    case 3: return spaced(text);
    default: return "  " + to_lower_ascii(spaced(text)) + " ";
  }
}

struct PlannedEdit {
  std::string id;
  std::string subject;
  std::string relation;
  std::string old_object;
  std::string new_object;
};

}  // namespace

GeneratedWorld generate_world(const WorldSpec& spec) {
  if (!(spec.two_hop_fraction >= 0.0 && spec.two_hop_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidSize, "two_hop_fraction must be in [0, 1]");
  }
  const auto pairs = static_cast<std::size_t>(
      std::floor(spec.two_hop_fraction * static_cast<double>(spec.n_facts) + 1e-9));
  if (2 * pairs > spec.n_facts) {
    throw Error(ErrorCode::InvalidSize, "two-hop questions need two distinct edits each");
  }
  if (pairs > 0 && spec.task != TaskKind::QuestionAnswering) {
    throw Error(ErrorCode::InvalidSize, "two-hop examples are only generated for QA");
  }

  SeededRng rng(spec.seed);
  NameGenerator names(rng);
  GeneratedWorld out;

  std::vector<PlannedEdit> plan(spec.n_facts);
  const std::size_t width = std::to_string(spec.n_facts > 0 ? spec.n_facts - 1 : 0).size();
  for (std::size_t i = 0; i < spec.n_facts; ++i) {
    std::string id = std::to_string(i);
    plan[i].id = "e" + std::string(width - id.size(), '0') + id;
    plan[i].relation = names.relation();
    plan[i].new_object = names.entity();
  }
  for (std::size_t i = 0; i < spec.n_facts; ++i) {
    auto& e = plan[i];
    e.subject = (i >= pairs && i < 2 * pairs) ? plan[i - pairs].new_object : names.entity();
    e.old_object = names.entity();
    out.world.add(FactTriple{e.subject, e.relation, e.old_object});
  }

  std::vector<std::string> background(16);
  for (auto& r : background) r = names.relation();

  const bool qa = spec.task == TaskKind::QuestionAnswering;
  for (std::size_t i = 0; i < spec.n_facts; ++i) {
    const auto& e = plan[i];
    EditRecord record;
    record.edit = Edit{e.id, FactTriple{e.subject, e.relation, e.new_object}.render(), spec.task};

    for (std::size_t v = 0; v <= spec.n_paraphrases; ++v) {
      ScopedExample ex;
      if (qa) {
        ex.input = paraphrase(question(e.relation, e.subject), v);
        ex.expected = e.new_object;
      } else {
        const bool refute = v % 2 == 1;
        ex.input = paraphrase(
            FactTriple{e.subject, e.relation, refute ? e.old_object : e.new_object}.render(), v);
        ex.expected = refute ? "No" : "Yes";
      }
      ex.scope = InScope{{e.id}};
      record.in_scope.push_back(std::move(ex));
    }
    if (i < pairs) {
      const auto& second = plan[i + pairs];
      ScopedExample ex;
      ex.input = "What is the " + second.relation + " of the " + e.relation + " of " + e.subject + "?";
      ex.expected = second.new_object;
      ex.scope = InScope{{e.id, second.id}};
      record.in_scope.push_back(std::move(ex));
    }

    for (std::size_t j = 0; j < spec.n_oos_per_edit; ++j) {
      ScopedExample ex;
      FactTriple fact;
      if (j % 2 == 0) {
        fact = FactTriple{names.entity(), e.relation, names.entity()};
        out.world.add(fact);
        ex.scope = OutOfScope{std::string(kNeighborSubjectTag)};
      } else {
        const std::string& relation = background[(i + j / 2) % background.size()];
        if (auto known = out.world.lookup(e.subject, relation)) {
          fact = FactTriple{e.subject, relation, *known};
        } else {
          fact = FactTriple{e.subject, relation, names.entity()};
          out.world.add(fact);
        }
        ex.scope = OutOfScope{std::string(kSameSubjectTag)};
      }
      if (qa) {
        ex.input = question(fact.relation, fact.subject);
        ex.expected = fact.object;
      } else {
        ex.input = fact.render();
        ex.expected = "Yes";
      }
      record.out_of_scope.push_back(std::move(ex));
    }

    if (auto problems = validate(record); !problems.empty()) {
      throw Error(ErrorCode::SchemaError, "generated record " + e.id + ": " + problems.front());
    }
    out.records.push_back(std::move(record));
  }
  return out;
}

}  // namespace nbedit
