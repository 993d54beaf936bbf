#include "auditflow/app/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "auditflow/app/artifacts.hpp"
#include "auditflow/app/config.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/eval/evaluator.hpp"
#include "auditflow/kb/query.hpp"
#include "auditflow/optimizer/optimizer.hpp"
#include "auditflow/util.hpp"

namespace auditflow::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<scoring::TaskSample> load_samples(const fs::path& path) {
  std::vector<scoring::TaskSample> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> contracts;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".sol") {
        contracts.push_back(entry.path());
      }
    }
    std::sort(contracts.begin(), contracts.end());
    for (const auto& c : contracts) {
      const fs::path expected = c.parent_path() / (c.stem().string() + ".expected.md");
      if (!fs::exists(expected)) throw SchemaError("no expected analysis for " + c.string());
      out.push_back(scoring::TaskSample::make(c.stem().string(), read_file(c), read_file(expected)));
    }
  } else {
    std::istringstream in(read_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        const auto j = json::parse(line);
        out.push_back(scoring::TaskSample::make(j.at("id").get<std::string>(),
                                                j.at("contract").get<std::string>(),
                                                j.at("expected").get<std::string>()));
      } catch (const json::exception& e) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  if (out.empty()) throw SchemaError("no task samples in " + path.string());
  return out;
}

std::vector<std::string> load_seeds(const fs::path& path) {
  std::vector<std::string> seeds;
  std::string current;
  for (const auto& line : split_lines(read_file(path))) {
    if (trim(line).empty()) {
      if (!trim(current).empty()) seeds.push_back(trim(current));
      current.clear();
      continue;
    }
    if (!current.empty()) current.push_back('\n');
    current += line;
  }
  if (!trim(current).empty()) seeds.push_back(trim(current));
  if (seeds.empty()) throw FormatError("no seed instructions in " + path.string());
  return seeds;
}

const std::vector<std::string>& default_seeds() {
  static const std::vector<std::string> seeds{
      "Analyze the smart contract and list every function, state variable, modifier and event "
      "with a precise description of its purpose, visibility and side effects. Finish with the "
      "security questions an auditor should investigate.",
      "Act as a security auditor. Explain the contract's business logic, then enumerate its "
      "functions, variables, modifiers and events, describing parameters, return values and how "
      "each affects contract state. Point out areas that need closer review."};
  return seeds;
}

namespace {

constexpr const char* kOptimizeTask =
    "Instruct a model to analyze a Solidity smart contract and describe its functions, state "
    "variables, modifiers and events accurately and completely, followed by the security "
    "questions worth auditing.";

struct Options {
  std::string config_path;
  std::string output_dir;
  bool verbose = false;

  std::string contract;
  std::string contract_id;
  std::string static_report;
  std::vector<std::string> context;
  bool rag = false;
  std::string index_dir;

  std::string train;
  std::string val;
  std::string seeds;

  std::string report;
  std::string gold;
  std::string eval_out;
  std::string judge;
  bool strict = false;

  std::string docs;
  std::string query;
  int k = 5;
  std::vector<std::string> vuln_tags;
  std::vector<std::string> platforms;
  std::string source_type;
};

AppConfig resolve_config(const Options& o) {
  AppConfig cfg;
  if (!o.config_path.empty()) {
    cfg = load_config(o.config_path);
  } else {
    cfg.optimizer.rng_seed = cfg.rng_seed;
  }
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.index_dir.empty()) cfg.kb.index_dir = fs::path(o.index_dir);
  return cfg;
}

std::unique_ptr<kb::Chunker> make_chunker(const AppConfig& cfg) {
  if (cfg.kb.chunker == "paragraph") {
    return std::make_unique<kb::ParagraphChunker>(cfg.kb.chunk_policy.size);
  }
  return std::make_unique<kb::FixedSizeChunker>(cfg.kb.chunk_policy);
}

std::unique_ptr<kb::KnowledgeIndex> open_index(const AppConfig& cfg, llm::Gateway& gateway) {
  if (!cfg.kb.index_dir) throw ConfigError("kb.index_dir: no knowledge index configured (use --index)");
  return kb::KnowledgeIndex::open(*cfg.kb.index_dir, gateway);
}

int run_audit(const Options& o, std::ostream& out) {
  AppConfig cfg = resolve_config(o);
  const fs::path contract_path(o.contract);
  ContractInput contract;
  contract.contract_id = o.contract_id.empty() ? contract_path.stem().string() : o.contract_id;
  contract.source_code = read_file(contract_path);
  for (const auto& c : o.context) contract.context_docs.push_back(read_file(c));
  if (!o.static_report.empty()) {
    if (!fs::exists(o.static_report)) throw Error("static report not found: " + o.static_report);
    contract.static_report_path = o.static_report;
    cfg.workflow.use_static = true;
  }
  if (o.rag) cfg.workflow.use_rag = true;

  auto gateway = make_gateway(cfg);
  std::unique_ptr<kb::KnowledgeIndex> index;
  if (cfg.workflow.use_rag) index = open_index(cfg, *gateway);
  cfg.workflow.model_id = cfg.provider.model_id;

  workflow::AuditEngine engine(*gateway, cfg.workflow, index.get());
  const json config_doc = to_json(cfg);
  const fs::path run_dir = create_run_dir(cfg.output_dir, contract.contract_id, utc_timestamp());
  workflow::RunTrace trace;
  AuditReport report;
  try {
    report = engine.run_audit(contract, &trace);
  } catch (const std::exception& e) {
    write_partial_run(run_dir, config_doc, trace, e.what());
    spdlog::error("audit aborted; partial artifacts in {}", run_dir.string());
    throw;
  }
  write_run(run_dir, config_doc, trace, report);
  out << "run: " << run_dir.string() << "\n"
      << "findings: " << report.findings.size() << "\n"
      << "llm steps: " << report.run_metadata.step_count << "\n";
  return 0;
}

std::string history_csv(const std::vector<optimizer::GenerationRecord>& history) {
  std::ostringstream csv;
  csv << "generation,batch_size,temperature,best_fitness,mean_fitness,diversity\n";
  for (const auto& r : history) {
    csv << r.generation << "," << r.batch_size << "," << r.temperature << "," << r.best_fitness
        << "," << r.mean_fitness << "," << r.diversity << "\n";
  }
  return csv.str();
}

int run_optimize(const Options& o, std::ostream& out) {
  AppConfig cfg = resolve_config(o);
  const auto train = load_samples(o.train);
  const auto val = load_samples(o.val);
  const auto seeds = o.seeds.empty() ? default_seeds() : load_seeds(o.seeds);

  auto gateway = make_gateway(cfg);
  scoring::JudgeOptions judge_opts;
  judge_opts.model_id = cfg.provider.judge_model();
  scoring::DetailJudge judge(*gateway, judge_opts);
  scoring::ScorerOptions scorer_opts;
  scorer_opts.model_id = cfg.provider.model_id;
  scorer_opts.weights = cfg.optimizer.weights;
  scoring::InstructionScorer scorer(*gateway, judge, scorer_opts);
  scoring::EmbeddingSimilarity similarity(*gateway);

  optimizer::PromptOptimizer opt(
      cfg.optimizer,
      [&](const std::string& instruction, const scoring::TaskSample& sample) {
        return scorer.combined_score(instruction, sample).combined;
      },
      [&](const std::string& a, const std::string& b) { return similarity.similarity(a, b); },
      std::make_shared<optimizer::LlmMutator>(*gateway, cfg.provider.model_id),
      std::make_shared<optimizer::LlmGenerator>(*gateway, cfg.provider.model_id, kOptimizeTask));

  std::string stamp = utc_timestamp();
  std::replace(stamp.begin(), stamp.end(), ':', '-');
  const fs::path dir = cfg.output_dir / "optimize" / stamp;
  fs::create_directories(dir / "population");
  write_file_atomic(dir / "config.json", to_json(cfg).dump(2) + "\n");

  auto population = opt.init_population(seeds);
  opt.evaluate_initial(population, train);
  std::vector<optimizer::GenerationRecord> history;
  const auto result = opt.evolve(population, train, [&](const optimizer::GenerationRecord& r) {
    history.push_back(r);
    char name[32];
    std::snprintf(name, sizeof(name), "gen-%02d.json", r.generation);
    write_file_atomic(dir / "population" / name, json(r.population).dump(2) + "\n");
    write_file_atomic(dir / "history.csv", history_csv(history));
  });
  const auto selection = opt.final_select(result.population, val);

  write_file_atomic(dir / "rho_star.txt", selection.instruction.text + "\n");
  write_file_atomic(dir / "selection.json",
                    json{{"instruction", selection.instruction},
                         {"validation_mean", selection.validation_mean},
                         {"complexity", selection.complexity},
                         {"objective", selection.objective},
                         {"generations", result.history.size()},
                         {"stop_reason", optimizer::to_string(result.stop)}}
                            .dump(2) +
                        "\n");
  out << "run: " << dir.string() << "\n"
      << "generations: " << result.history.size() << " (" << optimizer::to_string(result.stop)
      << ")\n"
      << "selected: " << selection.instruction.id << " objective " << selection.objective << "\n";
  return 0;
}

int run_evaluate(const Options& o, std::ostream& out) {
  AppConfig cfg = resolve_config(o);
  if (!fs::exists(o.gold)) throw Error("ground truth not found: " + o.gold);
  json gold_doc;
  try {
    gold_doc = json::parse(read_file(o.gold));
  } catch (const json::parse_error& e) {
    throw FormatError(o.gold + ": " + e.what());
  }
  const auto gold = eval::parse_ground_truth(gold_doc);

  std::vector<AuditReport> reports;
  for (const auto& p : find_reports(o.report)) reports.push_back(load_report(p));

  const std::string judge_kind = o.judge.empty() ? cfg.evaluator.judge : o.judge;
  std::unique_ptr<llm::Gateway> gateway;
  std::unique_ptr<eval::MatchJudge> judge;
  if (judge_kind == "rule") {
    judge = std::make_unique<eval::RuleJudge>();
  } else if (judge_kind == "llm") {
    gateway = make_gateway(cfg);
    judge = std::make_unique<eval::LlmJudge>(*gateway, cfg.provider.judge_model());
  } else {
    throw ConfigError("judge must be \"llm\" or \"rule\"");
  }

  eval::EvalOptions opts;
  opts.strict = o.strict || cfg.evaluator.strict;
  opts.ap_mode = cfg.evaluator.ap_mode;
  opts.top_ns = cfg.evaluator.top_ns;
  const auto summary = eval::evaluate(reports, gold, *judge, opts);

  fs::path dir = o.eval_out.empty()
                     ? (fs::is_directory(o.report) ? fs::path(o.report) : fs::path(o.report).parent_path())
                     : fs::path(o.eval_out);
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  write_file_atomic(dir / "eval.json", json(summary).dump(2) + "\n");
  write_file_atomic(dir / "eval.csv", eval::to_csv(summary));
  out << "eval: " << (dir / "eval.json").string() << "\n";
  for (const auto& [n, v] : summary.top_n) out << "top-" << n << ": " << v << "\n";
  out << "top-max: " << summary.top_max << "\nmrr: " << summary.mrr << "\nmap: " << summary.map
      << "\n";
  return 0;
}

int run_kb_ingest(const Options& o, std::ostream& out) {
  AppConfig cfg = resolve_config(o);
  auto gateway = make_gateway(cfg);
  auto index = open_index(cfg, *gateway);
  auto chunks = kb::load_corpus(o.docs, *make_chunker(cfg));
  const auto delta = index->ingest(std::move(chunks));
  out << "added: " << delta.added << "\nreplaced: " << delta.replaced
      << "\nsize: " << delta.size_after << "\n";
  return 0;
}

int run_kb_query(const Options& o, std::ostream& out) {
  AppConfig cfg = resolve_config(o);
  auto gateway = make_gateway(cfg);
  auto index = open_index(cfg, *gateway);
  kb::RetrievalQuery q;
  q.text = o.query;
  q.k = o.k;
  q.filters.vulnerability_tags = o.vuln_tags;
  q.filters.platform_tags = o.platforms;
  if (!o.source_type.empty()) q.filters.source_type = o.source_type;
  json results = json::array();
  int rank = 0;
  for (const auto& hit : index->retrieve(q)) {
    json chunk = *hit.chunk;
    chunk.erase("embedding");
    results.push_back({{"rank", ++rank}, {"score", hit.score}, {"chunk", chunk}});
  }
  out << json{{"query", q.text}, {"k", q.k}, {"results", results}}.dump(2) << "\n";
  return 0;
}

void setup_logging(bool verbose) {
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("auditflow");
    spdlog::set_default_logger(l);
    return l;
  }();
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Staged LLM smart contract auditing, prompt optimization and evaluation",
               "auditflow"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config_path, "JSON configuration file");
  app.add_option("-o,--output-dir", o.output_dir, "Directory for run artifacts");
  app.add_flag("-v,--verbose", o.verbose, "Log progress to stderr");

  auto* audit = app.add_subcommand("audit", "Audit one contract");
  audit->add_option("contract", o.contract, "Solidity source file")->required();
  audit->add_option("--id", o.contract_id, "Contract id (default: file stem)");
  audit->add_option("--static", o.static_report, "Slither JSON report to use as hints");
  audit->add_option("--context", o.context, "Context document files");
  audit->add_flag("--rag", o.rag, "Calibrate with retrieved knowledge");
  audit->add_option("--index", o.index_dir, "Knowledge index directory");

  auto* optimize = app.add_subcommand("optimize", "Search for the best analysis instruction");
  optimize->add_option("train", o.train, "Training samples (directory or JSONL)")->required();
  optimize->add_option("val", o.val, "Validation samples (directory or JSONL)")->required();
  optimize->add_option("--seeds", o.seeds, "Seed instructions, blank-line separated");

  auto* evaluate = app.add_subcommand("evaluate", "Score reports against ground truth");
  evaluate->add_option("report", o.report, "report.json or a directory of runs")->required();
  evaluate->add_option("gold", o.gold, "Ground-truth JSON")->required();
  evaluate->add_option("--out", o.eval_out, "Directory for eval.json and eval.csv");
  evaluate->add_option("--judge", o.judge, "llm or rule");
  evaluate->add_flag("--strict", o.strict, "Count only exact matches as true positives");

  auto* kbcmd = app.add_subcommand("kb", "Knowledge base maintenance");
  kbcmd->require_subcommand(1);
  auto* ingest = kbcmd->add_subcommand("ingest", "Chunk, embed and index a document directory");
  ingest->add_option("docs", o.docs, "Directory of documents with .meta.json sidecars")->required();
  ingest->add_option("--index", o.index_dir, "Knowledge index directory");
  auto* query = kbcmd->add_subcommand("query", "Retrieve the top-k chunks for a text");
  query->add_option("text", o.query, "Query text")->required();
  query->add_option("-k", o.k, "Number of results")->check(CLI::PositiveNumber);
  query->add_option("--index", o.index_dir, "Knowledge index directory");
  query->add_option("--vuln-tag", o.vuln_tags, "Vulnerability tag filter");
  query->add_option("--platform", o.platforms, "Platform tag filter");
  query->add_option("--source-type", o.source_type, "Source type filter");

  std::vector<std::string> argv_storage{"auditflow"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  setup_logging(o.verbose);
  try {
    if (*audit) return run_audit(o, out);
    if (*optimize) return run_optimize(o, out);
    if (*evaluate) return run_evaluate(o, out);
    if (*ingest) return run_kb_ingest(o, out);
    if (*query) return run_kb_query(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace auditflow::app
