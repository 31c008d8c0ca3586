#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nbedit/datakit.hpp"
#include "nbedit/engine.hpp"
#include "nbedit/eval.hpp"
#include "nbedit/http.hpp"
#include "nbedit/store.hpp"

namespace nbedit::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string notebook = "notebook.jsonl";
  std::string reader = "mock";
  std::string world;
  std::string base_url;
  std::string model;
  std::size_t k = kDefaultTopK;
  std::string task = "qa";
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  bool trace = false;
  bool pretty = false;

  // edit add
  std::string statement;
  std::string edit_id;
  // query
  std::string input;
  // eval
  std::string strategy = "two_step";
  std::string cache;
  // recall
  std::vector<std::string> k_list{"1", "2", "5", "10", "all"};
  // filter
  std::string judge;
  std::string judge_url;
  std::string audit;
  // gen-world
  std::size_t n_facts = 128;
  std::size_t n_paraphrases = 1;
  std::size_t n_oos = 2;
  double two_hop_fraction = 0.0;
};

std::unique_ptr<Reader> make_reader(const Options& o) {
  if (o.reader == "mock") {
    return std::make_unique<MockReader>(o.world.empty() ? MockWorld{} : load_world(o.world));
  }
  if (o.base_url.empty() || o.model.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--reader http needs --base-url and --model");
  }
  return std::make_unique<HttpReader>(http_config_from_env(o.base_url), o.model);
}

Notebook read_notebook(const std::string& path, std::ostream& err) {
  if (!std::filesystem::exists(path)) return Notebook{};
  auto load = load_notebook(path);
  for (const auto& c : load.corrupt) {
    err << "warning: " << path << ":" << c.line_no << ": skipped corrupt line\n";
  }
  return std::move(load.notebook);
}

Dataset read_dataset(const Options& o, std::ostream& err) {
  if (o.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "--dataset is required");
  auto load = load_dataset(o.dataset);
  for (const auto& issue : load.issues) {
    err << "warning: " << o.dataset << ":" << issue.line << ": " << issue.field << ": "
        << issue.message << '\n';
  }
  return Dataset{std::move(load.records), {}};
}

EditorConfig editor_config(const Options& o) {
  EditorConfig config;
  config.k = o.k;
  config.task = parse_task(o.task);
  config.validate();
  return config;
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path);
  file << text;
  if (!file.flush()) throw Error(ErrorCode::IoError, "write failed for " + path);
}

int cmd_edit_add(const Options& o, std::ostream& out) {
  auto file = NotebookFile::open(o.notebook);
  const Note& note = file.append(Edit{o.edit_id, o.statement, parse_task(o.task)});
  out << note_to_json_line(note) << '\n';
  return kOk;
}

int cmd_edit_list(const Options& o, std::ostream& out, std::ostream& err) {
  const Notebook nb = read_notebook(o.notebook, err);
  std::ostringstream table;
  table << std::left << std::setw(6) << "seq" << std::setw(16) << "edit_id" << "text\n";
  for (const auto& note : nb.notes()) {
    table << std::left << std::setw(6) << note.seq << std::setw(16) << note.edit_id << note.text << '\n';
  }
  if (o.pretty) {
    out << table.str();
  } else {
    json rows = json::array();
    for (const auto& note : nb.notes()) {
      rows.push_back({{"seq", note.seq}, {"edit_id", note.edit_id}, {"text", note.text}});
    }
    out << rows.dump() << '\n';
    err << table.str();
  }
  return kOk;
}

int cmd_query(const Options& o, std::ostream& out, std::ostream& err) {
  const auto reader = make_reader(o);
  const EditedModel model(read_notebook(o.notebook, err), editor_config(o));
  const QueryTrace trace = model.two_step(*reader, o.input);

  if (o.pretty) {
    out << trace.final.raw << '\n';
    if (o.trace) {
      for (const auto& item : trace.retrieved.items) {
        out << "  [" << item.note_seq << "] " << std::fixed << std::setprecision(4) << item.score
            << "  " << model.notebook()[item.note_seq].text << '\n';
      }
      out << "  fell_back=" << (trace.fell_back ? "true" : "false") << '\n';
    }
    return kOk;
  }
  json j{{"input", trace.input}, {"answer", trace.final.raw}, {"normalized", trace.final.normalized}};
  if (o.trace) {
    json retrieved = json::array();
    for (const auto& item : trace.retrieved.items) {
      retrieved.push_back({{"seq", item.note_seq},
                           {"score", item.score},
                           {"text", model.notebook()[item.note_seq].text}});
    }
    j["retrieved"] = std::move(retrieved);
    j["fell_back"] = trace.fell_back;
    j["with_context_answer"] =
        trace.with_context_answer ? json(trace.with_context_answer->raw) : json(nullptr);
  }
  out << j.dump() << '\n';
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const auto reader = make_reader(o);
  const Dataset dataset = read_dataset(o, err);
  std::optional<PredictionCache> cache;
  if (!o.cache.empty()) {
    cache.emplace();
    cache->attach(o.cache);
  }
  EvalOptions options;
  options.parallel = o.parallel;
  options.cache = cache ? &*cache : nullptr;
  const auto evaluation =
      evaluate(dataset, parse_strategy(o.strategy), *reader, editor_config(o), options);

  write_or_print(o.out, report_to_json(evaluation.report).dump(2) + "\n", out);
  (o.pretty ? out : err) << report_to_table(evaluation.report);
  return kOk;
}

int cmd_recall(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset dataset = read_dataset(o, err);
  std::size_t n_edits = dataset.records.size();
  std::vector<std::size_t> ks;
  for (const auto& token : o.k_list) {
    if (token == "all") {
      ks.push_back(std::max<std::size_t>(n_edits, 1));
      continue;
    }
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
      value = std::stoull(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size() || value == 0) {
      throw Error(ErrorCode::InvalidArgument, "bad k value '" + token + "'");
    }
    ks.push_back(static_cast<std::size_t>(value));
  }
  const auto curve = recall_curve(dataset, ks);

  json rows = json::array();
  std::ostringstream table;
  table << std::left << std::setw(8) << "k" << "recall\n" << std::fixed << std::setprecision(1);
  for (const auto& point : curve) {
    rows.push_back({{"k", point.k}, {"recall", point.recall}});
    table << std::left << std::setw(8) << point.k << round_half_up_1dp(point.recall) << '\n';
  }
  write_or_print(o.out, rows.dump() + "\n", out);
  (o.pretty ? out : err) << table.str();
  return kOk;
}

int cmd_filter(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset dataset = read_dataset(o, err);
  std::unique_ptr<NliJudge> judge;
  if (!o.judge_url.empty()) {
    judge = std::make_unique<HttpNliJudge>(http_config_from_env(o.judge_url));
  } else if (!o.judge.empty()) {
    judge = std::make_unique<MockNliJudge>(MockNliJudge::load(o.judge));
  } else {
    judge = std::make_unique<MockNliJudge>();
  }
  const auto result = filter_dataset(dataset.records, *judge);
  write_or_print(o.out, dataset_to_jsonl(result.records), out);
  if (!o.audit.empty()) write_audit_log(o.audit, result.decisions);

  std::size_t kept = 0;
  for (const auto& d : result.decisions) kept += d.kept ? 1 : 0;
  (o.pretty ? out : err) << "kept " << kept << " of " << result.decisions.size() << " examples\n";
  return kOk;
}

int cmd_gen_world(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty() || o.world.empty()) {
    throw Error(ErrorCode::InvalidArgument, "gen-world needs --out (dataset) and --world (facts)");
  }
  WorldSpec spec;
  spec.seed = o.seed;
  spec.n_facts = o.n_facts;
  spec.n_paraphrases = o.n_paraphrases;
  spec.n_oos_per_edit = o.n_oos;
  spec.two_hop_fraction = o.two_hop_fraction;
  spec.task = parse_task(o.task);
  const auto generated = generate_world(spec);
  save_dataset(o.out, generated.records);
  save_world(o.world, generated.world);
  const json summary{{"records", generated.records.size()}, {"facts", generated.world.size()},
                     {"dataset", o.out}, {"world", o.world}};
  out << summary.dump() << '\n';
  (o.pretty ? out : err) << "wrote " << generated.records.size() << " records and "
                         << generated.world.size() << " facts\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Notebook-based black-box model editing toolkit", "nbedit"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--notebook", o.notebook, "Notebook JSONL file")->capture_default_str();
  app.add_option("--reader", o.reader, "Reader backend")
      ->check(CLI::IsMember({"mock", "http"}))
      ->capture_default_str();
  app.add_option("--world", o.world, "Mock world facts (JSONL)");
  app.add_option("--base-url", o.base_url, "HTTP reader base URL");
  app.add_option("--model", o.model, "HTTP reader model id");
  app.add_option("--k", o.k, "Notes retrieved per query")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--task", o.task, "Task kind")->check(CLI::IsMember({"qa", "fc"}))->capture_default_str();
  app.add_option("--dataset", o.dataset, "Dataset JSONL file");
  app.add_option("--out", o.out, "Output file (stdout when omitted)");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--parallel", o.parallel, "Concurrent queries during eval")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--trace", o.trace, "Show retrieved notes and fallback flag");
  app.add_flag("--pretty", o.pretty, "Human-readable output on stdout");

  auto* edit = app.add_subcommand("edit", "Manage the persisted notebook");
  edit->require_subcommand(1);
  auto* edit_add = edit->add_subcommand("add", "Append an edit");
  edit_add->add_option("statement", o.statement, "Edit statement")->required();
  edit_add->add_option("--id", o.edit_id, "Unique edit id")->required();
  auto* edit_list = edit->add_subcommand("list", "List notes");

  auto* query = app.add_subcommand("query", "Answer one input with two-step inference");
  query->add_option("input", o.input, "Question or claim")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate an editing strategy on a dataset");
  eval->add_option("--strategy", o.strategy)
      ->check(CLI::IsMember({"two_step", "one_step", "unedited"}))
      ->capture_default_str();
  eval->add_option("--cache", o.cache, "Base-prediction cache file");

  auto* recall = app.add_subcommand("recall", "Recall of the note retriever per k");
  recall->add_option("--k-list", o.k_list, "Comma-separated k values; 'all' = number of edits")
      ->delimiter(',');

  auto* filter = app.add_subcommand("filter", "NLI-threshold filtering of a dataset");
  filter->add_option("--judge", o.judge, "Mock NLI table (JSONL)");
  filter->add_option("--judge-url", o.judge_url, "Remote NLI judge base URL");
  filter->add_option("--audit", o.audit, "Decision audit log (JSONL)");

  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic world and dataset");
  gen->add_option("--n-facts", o.n_facts)->capture_default_str();
  gen->add_option("--n-paraphrases", o.n_paraphrases)->capture_default_str();
  gen->add_option("--n-oos", o.n_oos)->capture_default_str();
  gen->add_option("--two-hop-fraction", o.two_hop_fraction)->capture_default_str();

  std::vector<std::string> argv_storage{"nbedit"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  }

  try {
    if (edit_add->parsed()) return cmd_edit_add(o, out);
    if (edit_list->parsed()) return cmd_edit_list(o, out, err);
    if (query->parsed()) return cmd_query(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out, err);
    if (recall->parsed()) return cmd_recall(o, out, err);
    if (filter->parsed()) return cmd_filter(o, out, err);
    if (gen->parsed()) return cmd_gen_world(o, out, err);
  } catch (const BackendFailure& e) {
    err << "backend error: " << e.what() << '\n';
    return kBackendError;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DuplicateId) {
      err << "error: duplicate edit id: " << e.what() << '\n';
    } else {
      err << "error: " << e.what() << '\n';
    }
    return kUserError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  }
  return kUserError;
}

}  // namespace nbedit::cli
