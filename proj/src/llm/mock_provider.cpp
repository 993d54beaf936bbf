#include <cmath>

#include "auditflow/digest.hpp"
#include "auditflow/errors.hpp"
#include "auditflow/llm/mock.hpp"
#include "auditflow/util.hpp"

namespace auditflow::llm {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in (0, 1].
double unit_interval(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

std::uint64_t seed_from(std::string_view text) {
  const auto bytes = sha256(text);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | bytes[static_cast<std::size_t>(i)];
  return seed;
}

std::vector<double> derived_logprobs(const std::string& digest, int count) {
  std::uint64_t state = seed_from(digest + "/logprobs");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(-(0.05 + 1.95 * unit_interval(state)));
  return out;
}

}  // namespace

std::vector<double> hashed_unit_vector(const std::string& text, std::size_t dim) {
  std::uint64_t state = seed_from(text);
  std::vector<double> v(dim);
  constexpr double kTwoPi = 6.283185307179586476925;
  for (std::size_t i = 0; i < dim; i += 2) {
    // Box-Muller on the library's own generator keeps vectors portable.
    const double r = std::sqrt(-2.0 * std::log(unit_interval(state)));
    const double theta = kTwoPi * unit_interval(state);
    v[i] = r * std::cos(theta);
    if (i + 1 < dim) v[i + 1] = r * std::sin(theta);
  }
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double n = std::sqrt(ss);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return v;
}

MockProvider::MockProvider(const MockProvider& other)
    : entries_(other.entries_),
      strict_(other.strict_),
      supports_logprobs_(other.supports_logprobs_),
      calls_(other.calls_.load()) {
  std::lock_guard lock(other.log_mutex_);
  log_ = other.log_;
}

MockProvider MockProvider::from_json(const nlohmann::json& fixture) {
  MockProvider mock;
  mock.strict_ = fixture.value("strict", false);
  mock.supports_logprobs_ = fixture.value("supports_logprobs", true);
  for (const auto& r : fixture.value("rules", nlohmann::json::array())) {
    MockRule rule;
    if (r.contains("digest")) rule.digest = r["digest"].get<std::string>();
    if (r.contains("match")) rule.pattern = r["match"].get<std::string>();
    if (!rule.digest && !rule.pattern) {
      throw FormatError("mock rule needs 'digest' or 'match'");
    }
    rule.text = r.at("text").get<std::string>();
    if (r.contains("logprobs")) rule.logprobs = r["logprobs"].get<std::vector<double>>();
    mock.add_rule(std::move(rule));
  }
  return mock;
}

MockProvider MockProvider::from_file(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad mock fixture " + path.string() + ": " + e.what());
  }
}

void MockProvider::add_rule(MockRule rule) {
  Entry e;
  if (rule.pattern) e.compiled.emplace(*rule.pattern, std::regex::ECMAScript);
  e.rule = std::move(rule);
  entries_.push_back(std::move(e));
}

void MockProvider::on_match(const std::string& pattern, std::string text,
                            std::optional<std::vector<double>> logprobs) {
  add_rule(MockRule{std::nullopt, pattern, std::move(text), std::move(logprobs)});
}

void MockProvider::add_handler(Handler handler) {
  Entry e;
  e.handler = std::move(handler);
  entries_.push_back(std::move(e));
}

std::vector<CompletionRequest> MockProvider::requests() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

Completion MockProvider::complete(const CompletionRequest& req) {
  req.validate();
  calls_.fetch_add(1);
  {
    std::lock_guard lock(log_mutex_);
    log_.push_back(req);
  }
  const std::string digest = req.digest();
  const std::string haystack = req.system_prompt + "\n" + req.user_prompt;

  std::optional<ScriptedReply> reply;
  for (const auto& e : entries_) {
    if (e.handler) {
      reply = e.handler(req);
      if (reply) break;
      continue;
    }
    if (e.rule.digest && *e.rule.digest == digest) {
      reply = ScriptedReply{e.rule.text, e.rule.logprobs};
      break;
    }
    if (e.compiled) {
      std::smatch m;
      if (std::regex_search(haystack, m, *e.compiled)) {
        reply = ScriptedReply{m.format(e.rule.text), e.rule.logprobs};
        break;
      }
    }
  }
  if (!reply) {
    if (strict_) throw ProviderError("mock: no scripted response for request " + digest);
    reply = ScriptedReply{"mock:" + digest.substr(0, 16), std::nullopt};
  }

  Completion c;
  c.text = std::move(reply->text);
  c.provider = name();
  c.usage.prompt_tokens = approx_token_count(haystack);
  c.usage.completion_tokens = std::max(1, approx_token_count(c.text));
  if (req.want_logprobs && supports_logprobs_) {
    c.token_logprobs = reply->logprobs ? *reply->logprobs
                                       : derived_logprobs(digest, c.usage.completion_tokens);
    c.usage.completion_tokens = static_cast<int>(c.token_logprobs->size());
  }
  return c;
}

std::vector<EmbeddingVector> MockEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InvalidRequest("embed: empty input");
  calls_.fetch_add(1);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<double> values;
    {
      std::lock_guard lock(mutex_);
      auto it = pinned_.find(t);
      if (it != pinned_.end()) values = it->second;
    }
    if (values.empty()) values = hashed_unit_vector(t, dim_);
    out.push_back(EmbeddingVector::from_values(std::move(values)));
  }
  return out;
}

void MockEmbedder::pin(const std::string& text, std::vector<double> values) {
  if (values.size() != dim_) throw DimensionMismatch("pinned vector has wrong dimension");
  std::lock_guard lock(mutex_);
  pinned_[text] = std::move(values);
}

}  // namespace auditflow::llm
