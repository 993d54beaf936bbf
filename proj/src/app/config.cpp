#include "auditflow/app/config.hpp"

#include <cstdlib>
#include <set>

#include <spdlog/spdlog.h>

#include "auditflow/errors.hpp"
#include "auditflow/llm/http_provider.hpp"
#include "auditflow/llm/mock.hpp"
#include "auditflow/util.hpp"

namespace auditflow::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
constexpr const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) {
    return "boolean";
  } else if constexpr (std::is_integral_v<T>) {
    return "integer";
  } else if constexpr (std::is_floating_point_v<T>) {
    return "number";
  } else if constexpr (std::is_same_v<T, std::string>) {
    return "string";
  } else {
    return "array";
  }
}

// Reads one config object, naming fields by their dotted path in errors.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return obj_.contains(key) && !obj_[key].is_null(); }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const char* key, T& out) const {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = obj_[key];
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer() || v.is_number_unsigned();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = v.is_string();
    } else {
      ok = v.is_array();
    }
    if (!ok) throw ConfigError(field(key) + ": expected " + type_name<T>());
    try {
      out = v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": expected " + type_name<T>());
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) const {
    seen_.insert(key);
    if (!has(key)) return;
    T value{};
    get(key, value);
    out = std::move(value);
  }

  void get_path(const char* key, std::optional<fs::path>& out, const fs::path& base) const {
    std::optional<std::string> raw;
    get(key, raw);
    if (!raw) return;
    fs::path p(*raw);
    if (p.is_relative() && !base.empty()) p = base / p;
    out = p.lexically_normal();
  }

  Reader child(const char* key) const {
    seen_.insert(key);
    static const json kEmpty = json::object();
    if (!has(key)) return Reader(kEmpty, field(key));
    return Reader(obj_[key], field(key));
  }

  void warn_unknown() const {
    for (const auto& [k, _] : obj_.items()) {
      if (!seen_.count(k)) spdlog::warn("config: unknown field {}", field(k.c_str()));
    }
  }

 private:
  const json& obj_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

std::string ap_mode_name(eval::ApMode m) {
  return m == eval::ApMode::ListLength ? "list_length" : "standard";
}

}  // namespace

void AppConfig::validate() const {
  if (provider.kind != "mock" && provider.kind != "openai") {
    throw ConfigError("provider.kind: must be \"mock\" or \"openai\"");
  }
  if (provider.model_id.empty()) throw ConfigError("provider.model_id: must not be empty");
  if (provider.kind == "openai" && provider.base_url.empty()) {
    throw ConfigError("provider.base_url: required for the openai provider");
  }
  if (provider.kind == "mock" && provider.mock_script && !fs::exists(*provider.mock_script)) {
    throw ConfigError("provider.mock_script: file not found: " + provider.mock_script->string());
  }
  if (provider.embedding_dim == 0) throw ConfigError("provider.embedding_dim: must be positive");
  if (provider.timeout_seconds <= 0) throw ConfigError("provider.timeout_seconds: must be positive");
  if (gateway.max_attempts < 1) throw ConfigError("gateway.max_attempts: must be >= 1");
  if (gateway.initial_backoff_ms < 0) throw ConfigError("gateway.initial_backoff_ms: must be >= 0");
  if (gateway.max_total_tokens && *gateway.max_total_tokens <= 0) {
    throw ConfigError("gateway.max_total_tokens: must be positive");
  }
  if (gateway.min_request_interval_ms < 0) {
    throw ConfigError("gateway.min_request_interval_ms: must be >= 0");
  }
  try {
    workflow.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("workflow.") + e.what());
  }
  try {
    optimizer.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("optimizer.") + e.what());
  }
  if (kb.chunker != "fixed" && kb.chunker != "paragraph") {
    throw ConfigError("kb.chunker: must be \"fixed\" or \"paragraph\"");
  }
  try {
    kb.chunk_policy.validate();
  } catch (const InvalidRequest& e) {
    throw ConfigError(std::string("kb: ") + e.what());
  }
  if (evaluator.judge != "llm" && evaluator.judge != "rule") {
    throw ConfigError("evaluator.judge: must be \"llm\" or \"rule\"");
  }
  for (int n : evaluator.top_ns) {
    if (n < 1) throw ConfigError("evaluator.top_n: entries must be >= 1");
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

AppConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  if (!doc.contains("provider")) throw ConfigError("config: missing required block 'provider'");

  AppConfig c;
  Reader root(doc, "");

  {
    Reader r = root.child("provider");
    r.get("kind", c.provider.kind);
    r.get("model_id", c.provider.model_id);
    r.get("judge_model_id", c.provider.judge_model_id);
    r.get("base_url", c.provider.base_url);
    r.get("api_key_env", c.provider.api_key_env);
    r.get("embedding_model", c.provider.embedding_model);
    r.get_path("mock_script", c.provider.mock_script, base_dir);
    r.get("embedding_dim", c.provider.embedding_dim);
    r.get("timeout_seconds", c.provider.timeout_seconds);
    r.get("logprobs", c.provider.logprobs);
    r.warn_unknown();
  }
  {
    Reader r = root.child("gateway");
    r.get("max_attempts", c.gateway.max_attempts);
    r.get("initial_backoff_ms", c.gateway.initial_backoff_ms);
    r.get("max_total_tokens", c.gateway.max_total_tokens);
    r.get("min_request_interval_ms", c.gateway.min_request_interval_ms);
    r.warn_unknown();
  }
  {
    Reader r = root.child("workflow");
    auto& w = c.workflow;
    r.get("threshold_confidence", w.threshold_confidence);
    r.get("use_static", w.use_static);
    r.get("use_rag", w.use_rag);
    r.get("retrieval_k", w.retrieval_k);
    r.get("temperature", w.temperature);
    r.get("max_tokens", w.max_tokens);
    r.get("parallel_workers", w.parallel_workers);
    r.get("hint_cap", w.hints.cap);
    r.get("hint_max_chars", w.hints.max_chars);
    r.get("query_terms", w.query.salient_terms);
    r.get("query_platforms", w.query.default_platforms);
    if (r.has("prompts")) {
      Reader p = r.child("prompts");
      p.get("analysis", w.prompts.analysis);
      p.get("planning", w.prompts.planning);
      p.get("review", w.prompts.review);
      p.get("calibration", w.prompts.calibration);
      p.get("synthesis", w.prompts.synthesis);
      p.warn_unknown();
    }
    r.warn_unknown();
  }
  root.get("rng_seed", c.rng_seed);
  c.optimizer.rng_seed = c.rng_seed;
  {
    Reader r = root.child("optimizer");
    auto& o = c.optimizer;
    r.get("population_size", o.population_size);
    r.get("elite_count", o.elite_count);
    r.get("max_generations", o.max_generations);
    r.get("tau_max", o.tau_max);
    r.get("beta", o.beta);
    r.get("epsilon", o.epsilon);
    r.get("alpha", o.alpha);
    r.get("lambda", o.lambda);
    r.get("batch_base_fraction", o.batch_base_fraction);
    r.get("delta_fitness", o.delta_fitness);
    r.get("n_stable", o.n_stable);
    r.get("diversity_min", o.diversity_min);
    r.get("replay_capacity", o.replay_capacity);
    r.get("rng_seed", o.rng_seed);
    r.get("full_batch", o.full_batch);
    r.get("guided_mutation", o.guided_mutation);
    r.get("duplicate_retries", o.duplicate_retries);
    r.get("workers", o.workers);
    if (r.has("weights")) {
      Reader w = r.child("weights");
      w.get("w_exec", o.weights.w_exec);
      w.get("w_log", o.weights.w_log);
      w.get("w_cov", o.weights.w_cov);
      w.get("w_det", o.weights.w_det);
      w.warn_unknown();
    }
    r.warn_unknown();
  }
  {
    Reader r = root.child("kb");
    r.get_path("index_dir", c.kb.index_dir, base_dir);
    r.get("chunker", c.kb.chunker);
    r.get("chunk_size", c.kb.chunk_policy.size);
    r.get("chunk_overlap", c.kb.chunk_policy.overlap);
    r.get("enforce_chunk_bounds", c.kb.chunk_policy.enforce_bounds);
    r.warn_unknown();
  }
  {
    Reader r = root.child("evaluator");
    r.get("judge", c.evaluator.judge);
    r.get("strict", c.evaluator.strict);
    std::string ap = ap_mode_name(c.evaluator.ap_mode);
    r.get("ap_mode", ap);
    if (ap == "list_length") {
      c.evaluator.ap_mode = eval::ApMode::ListLength;
    } else if (ap == "standard") {
      c.evaluator.ap_mode = eval::ApMode::Standard;
    } else {
      throw ConfigError("evaluator.ap_mode: must be \"list_length\" or \"standard\"");
    }
    r.get("top_n", c.evaluator.top_ns);
    r.warn_unknown();
  }
  root.get_path("cache_dir", c.cache_dir, base_dir);
  std::optional<fs::path> out;
  root.get_path("output_dir", out, base_dir);
  if (out) c.output_dir = *out;
  root.warn_unknown();

  c.validate();
  return c;
}

AppConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

json to_json(const AppConfig& c) {
  const auto opt_path = [](const std::optional<fs::path>& p) {
    return p ? json(p->string()) : json(nullptr);
  };
  json optimizer;
  optimizer::to_json(optimizer, c.optimizer);
  return json{
      {"provider",
       {{"kind", c.provider.kind},
        {"model_id", c.provider.model_id},
        {"judge_model_id", c.provider.judge_model_id},
        {"base_url", c.provider.base_url},
        {"api_key_env", c.provider.api_key_env},
        {"embedding_model", c.provider.embedding_model},
        {"mock_script", opt_path(c.provider.mock_script)},
        {"embedding_dim", c.provider.embedding_dim},
        {"timeout_seconds", c.provider.timeout_seconds},
        {"logprobs", c.provider.logprobs}}},
      {"gateway",
       {{"max_attempts", c.gateway.max_attempts},
        {"initial_backoff_ms", c.gateway.initial_backoff_ms},
        {"max_total_tokens",
         c.gateway.max_total_tokens ? json(*c.gateway.max_total_tokens) : json(nullptr)},
        {"min_request_interval_ms", c.gateway.min_request_interval_ms}}},
      {"workflow",
       {{"threshold_confidence", c.workflow.threshold_confidence},
        {"use_static", c.workflow.use_static},
        {"use_rag", c.workflow.use_rag},
        {"retrieval_k", c.workflow.retrieval_k},
        {"temperature", c.workflow.temperature},
        {"max_tokens", c.workflow.max_tokens},
        {"parallel_workers", c.workflow.parallel_workers},
        {"hint_cap", c.workflow.hints.cap},
        {"hint_max_chars", c.workflow.hints.max_chars},
        {"query_terms", c.workflow.query.salient_terms},
        {"query_platforms", c.workflow.query.default_platforms},
        {"prompts", c.workflow.prompts}}},
      {"optimizer", optimizer},
      {"kb",
       {{"index_dir", opt_path(c.kb.index_dir)},
        {"chunker", c.kb.chunker},
        {"chunk_size", c.kb.chunk_policy.size},
        {"chunk_overlap", c.kb.chunk_policy.overlap},
        {"enforce_chunk_bounds", c.kb.chunk_policy.enforce_bounds}}},
      {"evaluator",
       {{"judge", c.evaluator.judge},
        {"strict", c.evaluator.strict},
        {"ap_mode", ap_mode_name(c.evaluator.ap_mode)},
        {"top_n", c.evaluator.top_ns}}},
      {"cache_dir", opt_path(c.cache_dir)},
      {"output_dir", c.output_dir.string()},
      {"rng_seed", c.rng_seed}};
}

Providers make_providers(const AppConfig& config) {
  Providers p;
  if (config.provider.kind == "mock") {
    auto mock = config.provider.mock_script
                    ? std::make_shared<llm::MockProvider>(
                          llm::MockProvider::from_file(*config.provider.mock_script))
                    : std::make_shared<llm::MockProvider>();
    p.completions = mock;
    p.embeddings = std::make_shared<llm::MockEmbedder>(config.provider.embedding_dim);
    return p;
  }
  const char* key = std::getenv(config.provider.api_key_env.c_str());
  if (!key || !*key) {
    throw ConfigError("provider.api_key_env: environment variable " + config.provider.api_key_env +
                      " is not set");
  }
  llm::HttpProviderOptions opts;
  opts.base_url = config.provider.base_url;
  opts.api_key = key;
  opts.embedding_model = config.provider.embedding_model;
  opts.timeout = std::chrono::seconds(config.provider.timeout_seconds);
  opts.logprobs = config.provider.logprobs;
  auto http = std::make_shared<llm::HttpProvider>(opts);
  p.completions = http;
  p.embeddings = http;
  return p;
}

std::unique_ptr<llm::Gateway> make_gateway(const AppConfig& config) {
  auto providers = make_providers(config);
  llm::GatewayOptions opts;
  opts.retry.max_attempts = config.gateway.max_attempts;
  opts.retry.initial_backoff = std::chrono::milliseconds(config.gateway.initial_backoff_ms);
  opts.max_total_tokens = config.gateway.max_total_tokens;
  opts.cache_dir = config.cache_dir;
  opts.min_request_interval = std::chrono::milliseconds(config.gateway.min_request_interval_ms);
  return std::make_unique<llm::Gateway>(providers.completions, providers.embeddings, opts);
}

}  // namespace auditflow::app
