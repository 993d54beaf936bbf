#include "auditflow/optimizer/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "auditflow/errors.hpp"
#include "auditflow/util.hpp"

namespace auditflow::optimizer {

using nlohmann::json;

void to_json(json& j, const Instruction& i) {
  j = json{{"id", i.id},
           {"text", i.text},
           {"smoothed_fitness", i.smoothed_fitness},
           {"last_raw_fitness", i.last_raw_fitness},
           {"evaluated", i.evaluated},
           {"born", i.born}};
  j["lineage"] = i.lineage ? json(*i.lineage) : json(nullptr);
}

void OptimizerConfig::validate() const {
  if (population_size < 1) throw ConfigError("population_size must be >= 1");
  if (elite_count < 1 || elite_count > population_size) {
    throw ConfigError("elite_count must satisfy 1 <= k_e <= k");
  }
  if (max_generations < 1) throw ConfigError("max_generations must be >= 1");
  if (!(tau_max > 0.0)) throw ConfigError("tau_max must be positive");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (!(batch_base_fraction > 0.0 && batch_base_fraction <= 1.0)) {
    throw ConfigError("batch_base_fraction must be in (0, 1]");
  }
  if (delta_fitness < 0.0) throw ConfigError("delta_fitness must be >= 0");
  if (n_stable < 1) throw ConfigError("n_stable must be >= 1");
  if (diversity_min < 0.0 || diversity_min > 1.0) throw ConfigError("diversity_min must be in [0, 1]");
  if (replay_capacity < 0) throw ConfigError("replay_capacity must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

void to_json(json& j, const OptimizerConfig& c) {
  j = json{{"population_size", c.population_size},
           {"elite_count", c.elite_count},
           {"max_generations", c.max_generations},
           {"tau_max", c.tau_max},
           {"beta", c.beta},
           {"epsilon", c.epsilon},
           {"alpha", c.alpha},
           {"lambda", c.lambda},
           {"batch_base_fraction", c.batch_base_fraction},
           {"delta_fitness", c.delta_fitness},
           {"n_stable", c.n_stable},
           {"diversity_min", c.diversity_min},
           {"replay_capacity", c.replay_capacity},
           {"weights",
            {{"w_exec", c.weights.w_exec},
             {"w_log", c.weights.w_log},
             {"w_cov", c.weights.w_cov},
             {"w_det", c.weights.w_det}}},
           {"rng_seed", c.rng_seed},
           {"full_batch", c.full_batch},
           {"guided_mutation", c.guided_mutation},
           {"duplicate_retries", c.duplicate_retries},
           {"workers", c.workers}};
}

void from_json(const json& j, OptimizerConfig& c) {
  c = OptimizerConfig{};
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("population_size", c.population_size);
  get("elite_count", c.elite_count);
  get("max_generations", c.max_generations);
  get("tau_max", c.tau_max);
  get("beta", c.beta);
  get("epsilon", c.epsilon);
  get("alpha", c.alpha);
  get("lambda", c.lambda);
  get("batch_base_fraction", c.batch_base_fraction);
  get("delta_fitness", c.delta_fitness);
  get("n_stable", c.n_stable);
  get("diversity_min", c.diversity_min);
  get("replay_capacity", c.replay_capacity);
  get("rng_seed", c.rng_seed);
  get("full_batch", c.full_batch);
  get("guided_mutation", c.guided_mutation);
  get("duplicate_retries", c.duplicate_retries);
  get("workers", c.workers);
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    if (w.contains("w_exec")) c.weights.w_exec = w["w_exec"].get<double>();
    if (w.contains("w_log")) c.weights.w_log = w["w_log"].get<double>();
    if (w.contains("w_cov")) c.weights.w_cov = w["w_cov"].get<double>();
    if (w.contains("w_det")) c.weights.w_det = w["w_det"].get<double>();
  }
}

int minibatch_size(int t, int train_size, int max_generations, double base_fraction) {
  if (t < 0 || max_generations < 1 || train_size < 0) {
    throw InvalidRequest("minibatch_size: need t >= 0, T >= 1, train_size >= 0");
  }
  // Snap values within floating-point error of an integer before the ceiling.
  const double base = base_fraction * train_size;
  const double n = base * (max_generations + t) / max_generations;
  const double nearest = std::round(n);
  if (std::abs(n - nearest) < 1e-9 * std::max(1.0, n)) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(n));
}

double mutation_temperature(int t, double tau_max, double beta) {
  return tau_max * std::exp(-beta * t);
}

double smooth_fitness(double prev, double raw, double alpha) {
  return alpha * prev + (1.0 - alpha) * raw;
}

double raw_fitness(double batch_mean, const std::vector<double>& similarities,
                   const std::vector<ReplayEntry>& replay, double epsilon) {
  if (replay.empty()) return batch_mean;
  if (similarities.size() != replay.size()) {
    throw InvalidRequest("raw_fitness: one similarity per replay entry required");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < replay.size(); ++i) sum += similarities[i] * replay[i].recorded_fitness;
  return batch_mean + epsilon * (sum / static_cast<double>(replay.size()));
}

void ReplayBuffer::update(const std::vector<Instruction>& members, int generation) {
  for (const auto& m : members) {
    if (!m.evaluated) continue;
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const ReplayEntry& e) { return e.instruction_text == m.text; });
    if (it == entries_.end()) {
      entries_.push_back({m.text, m.smoothed_fitness, generation});
    } else if (m.smoothed_fitness > it->recorded_fitness) {
      it->recorded_fitness = m.smoothed_fitness;
      it->generation = generation;
    }
  }
  std::sort(entries_.begin(), entries_.end(), [](const ReplayEntry& a, const ReplayEntry& b) {
    if (a.recorded_fitness != b.recorded_fitness) return a.recorded_fitness > b.recorded_fitness;
    return a.instruction_text < b.instruction_text;
  });
  if (entries_.size() > capacity_) entries_.resize(capacity_);
}

double diversity(const std::vector<Instruction>& population, const SimilarityFn& sim) {
  if (population.size() < 2) throw DegeneratePopulation("diversity needs at least two members");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    for (std::size_t j = i + 1; j < population.size(); ++j) {
      sum += sim(population[i].text, population[j].text);
      ++pairs;
    }
  }
  return 1.0 - sum / static_cast<double>(pairs);
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxGenerations: return "max_generations";
    case StopReason::Plateau: return "plateau";
    case StopReason::LowDiversity: return "low_diversity";
  }
  return "max_generations";
}

namespace {

bool fitter(const Instruction& a, const Instruction& b) {
  if (a.smoothed_fitness != b.smoothed_fitness) return a.smoothed_fitness > b.smoothed_fitness;
  return a.id < b.id;
}

std::string member_id(int generation, int serial) {
  return "g" + std::to_string(generation) + "-" + std::to_string(serial);
}

}  // namespace

PromptOptimizer::PromptOptimizer(OptimizerConfig config, FitnessFn fitness,
                                 SimilarityFn similarity, std::shared_ptr<Mutator> mutator,
                                 std::shared_ptr<Generator> generator)
    : config_(std::move(config)),
      fitness_(std::move(fitness)),
      similarity_(std::move(similarity)),
      mutator_(std::move(mutator)),
      generator_(std::move(generator)),
      rng_(config_.rng_seed) {
  config_.validate();
  if (!fitness_) throw ConfigError("optimizer needs a fitness function");
  if (!similarity_) throw ConfigError("optimizer needs a similarity function");
}

std::vector<Instruction> PromptOptimizer::init_population(const std::vector<std::string>& seeds) {
  const auto k = static_cast<std::size_t>(config_.population_size);
  std::vector<Instruction> population;
  std::set<std::string> seen;
  const auto add = [&](const std::string& text, std::optional<std::string> lineage) {
    const std::string cleaned = trim(text);
    if (cleaned.empty() || population.size() >= k) return;
    if (!seen.insert(normalize_text(cleaned)).second) return;
    Instruction inst;
    inst.id = member_id(0, static_cast<int>(population.size()));
    inst.text = cleaned;
    inst.lineage = std::move(lineage);
    population.push_back(std::move(inst));
  };

  for (const auto& s : seeds) add(s, std::nullopt);
  const std::size_t seed_members = population.size();
  if (seed_members == 0 && !generator_) {
    throw GenerationFailed("no seeds and no meta-prompt generator");
  }

  const int budget = std::max(10, 5 * config_.population_size);
  for (int attempt = 0; population.size() < k && attempt < budget; ++attempt) {
    const bool use_generator =
        generator_ && (seed_members == 0 || !mutator_ || attempt % 2 == 0);
    if (use_generator) {
      add(generator_->generate(config_.tau_max, attempt), std::nullopt);
    } else if (mutator_ && seed_members > 0) {
      const auto& parent = population[static_cast<std::size_t>(attempt) % seed_members];
      add(mutator_->mutate(parent.text, config_.tau_max, attempt), parent.id);
    } else {
      break;
    }
  }
  if (population.size() < k) {
    throw GenerationFailed("only " + std::to_string(population.size()) + " distinct instructions of " +
                           std::to_string(k) + " after retries");
  }
  return population;
}

double PromptOptimizer::batch_mean(const std::string& text,
                                   const std::vector<TaskSample>& batch) const {
  if (batch.empty()) throw InvalidRequest("fitness batch is empty");
  double sum = 0.0;
  for (const auto& sample : batch) sum += fitness_(text, sample);
  return sum / static_cast<double>(batch.size());
}

std::vector<TaskSample> PromptOptimizer::sample_batch(const std::vector<TaskSample>& train, int t) {
  if (config_.full_batch) return train;
  const int n = std::min(static_cast<int>(train.size()),
                         std::max(1, minibatch_size(t, static_cast<int>(train.size()),
                                                    config_.max_generations,
                                                    config_.batch_base_fraction)));
  std::vector<TaskSample> batch;
  batch.reserve(static_cast<std::size_t>(n));
  std::sample(train.begin(), train.end(), std::back_inserter(batch), n, rng_);
  return batch;
}

void PromptOptimizer::score_population(std::vector<Instruction>& population,
                                       const std::vector<TaskSample>& batch,
                                       const ReplayBuffer& replay) const {
  const auto score_one = [&](Instruction& inst) {
    const double mean = batch_mean(inst.text, batch);
    std::vector<double> sims;
    sims.reserve(replay.size());
    for (const auto& e : replay.entries()) sims.push_back(similarity_(inst.text, e.instruction_text));
    const double raw = raw_fitness(mean, sims, replay.entries(), config_.epsilon);
    inst.last_raw_fitness = raw;
    inst.smoothed_fitness = smooth_fitness(inst.smoothed_fitness, raw, config_.alpha);
    inst.evaluated = true;
  };
  const auto workers = static_cast<std::size_t>(config_.workers);
  if (workers <= 1) {
    for (auto& inst : population) score_one(inst);
    return;
  }
  for (std::size_t begin = 0; begin < population.size(); begin += workers) {
    const std::size_t end = std::min(population.size(), begin + workers);
    std::vector<std::future<void>> futures;
    for (std::size_t i = begin; i < end; ++i) {
      futures.push_back(std::async(std::launch::async, [&, i] { score_one(population[i]); }));
    }
    for (auto& f : futures) f.get();
  }
}

void PromptOptimizer::evaluate_initial(std::vector<Instruction>& population,
                                       const std::vector<TaskSample>& train) {
  if (train.empty()) throw InvalidRequest("training set is empty");
  const auto batch = sample_batch(train, 0);
  for (auto& inst : population) {
    const double mean = batch_mean(inst.text, batch);
    inst.last_raw_fitness = mean;
    inst.smoothed_fitness = mean;
    inst.evaluated = true;
  }
}

Instruction PromptOptimizer::mutate(const Instruction& parent, double tau,
                                    const std::vector<TaskSample>& batch, int generation,
                                    int serial) {
  if (!(tau > 0.0)) throw InvalidRequest("mutation temperature must be positive");
  if (!mutator_) throw GenerationFailed("no mutator configured");
  Instruction child;
  child.id = member_id(generation, serial);
  child.lineage = parent.id;
  child.born = generation;
  child.smoothed_fitness = parent.smoothed_fitness;
  child.text = trim(mutator_->mutate(parent.text, tau, variant_counter_++));
  if (config_.guided_mutation) {
    std::string other = trim(mutator_->mutate(parent.text, tau, variant_counter_++));
    if (!other.empty() && (child.text.empty() || batch_mean(other, batch) > batch_mean(child.text, batch))) {
      child.text = std::move(other);
    }
  }
  if (child.text.empty()) throw GenerationFailed("mutation of " + parent.id + " produced no text");
  return child;
}

EvolveResult PromptOptimizer::evolve(std::vector<Instruction> population,
                                     const std::vector<TaskSample>& train,
                                     const GenerationCallback& on_generation) {
  if (train.empty()) throw InvalidRequest("training set is empty");
  if (population.size() != static_cast<std::size_t>(config_.population_size)) {
    throw InvalidRequest("population must have exactly k members");
  }
  if (config_.population_size < 2 || config_.elite_count >= config_.population_size) {
    throw InvalidRequest("evolution needs k >= 2 and k_e < k");
  }
  if (std::any_of(population.begin(), population.end(),
                  [](const Instruction& i) { return !i.evaluated; })) {
    evaluate_initial(population, train);
  }

  EvolveResult result;
  ReplayBuffer replay(static_cast<std::size_t>(config_.replay_size()));
  const auto k_e = static_cast<std::size_t>(config_.elite_count);
  std::optional<double> previous_best;
  int stable = 0;

  for (int t = 1; t <= config_.max_generations; ++t) {
    const auto batch = sample_batch(train, t);
    score_population(population, batch, replay);
    std::sort(population.begin(), population.end(), fitter);

    GenerationRecord rec;
    rec.generation = t;
    rec.batch_size = static_cast<int>(batch.size());
    rec.temperature = mutation_temperature(t, config_.tau_max, config_.beta);
    rec.best_fitness = population.front().smoothed_fitness;
    double sum = 0.0;
    for (const auto& m : population) sum += m.smoothed_fitness;
    rec.mean_fitness = sum / static_cast<double>(population.size());
    rec.diversity = diversity(population, similarity_);
    rec.population = population;

    std::vector<Instruction> elites(population.begin(),
                                    population.begin() + static_cast<std::ptrdiff_t>(k_e));
    replay.update(elites, t);

    if (previous_best && std::abs(rec.best_fitness - *previous_best) < config_.delta_fitness) {
      ++stable;
    } else {
      stable = 0;
    }
    previous_best = rec.best_fitness;

    result.history.push_back(rec);
    if (on_generation) on_generation(rec);
    spdlog::info("generation {}: batch {} best {:.6f} mean {:.6f} diversity {:.4f}", t,
                 rec.batch_size, rec.best_fitness, rec.mean_fitness, rec.diversity);

    if (stable >= config_.n_stable) {
      result.stop = StopReason::Plateau;
      break;
    }
    if (rec.diversity < config_.diversity_min) {
      result.stop = StopReason::LowDiversity;
      break;
    }
    if (t == config_.max_generations) break;

    std::set<std::string> seen;
    for (const auto& e : elites) seen.insert(normalize_text(e.text));
    std::vector<Instruction> next = elites;
    std::uniform_int_distribution<std::size_t> pick(0, elites.size() - 1);
    int serial = 0;
    while (next.size() < population.size()) {
      const Instruction& parent = elites[pick(rng_)];
      Instruction child = mutate(parent, rec.temperature, batch, t, serial++);
      for (int retry = 0; retry < config_.duplicate_retries && seen.count(normalize_text(child.text));
           ++retry) {
        child = mutate(parent, rec.temperature, batch, t, serial - 1);
      }
      seen.insert(normalize_text(child.text));
      next.push_back(std::move(child));
    }
    population = std::move(next);
  }

  result.population = std::move(population);
  result.replay = replay.entries();
  return result;
}

Selection final_select(const std::vector<Instruction>& population,
                       const std::vector<TaskSample>& val, const FitnessFn& fitness, double lambda) {
  if (population.empty()) throw InvalidRequest("final_select: empty population");
  if (val.empty()) throw InvalidRequest("final_select: empty validation set");
  std::optional<Selection> best;
  for (const auto& inst : population) {
    Selection s;
    s.instruction = inst;
    double sum = 0.0;
    for (const auto& sample : val) sum += fitness(inst.text, sample);
    s.validation_mean = sum / static_cast<double>(val.size());
    s.complexity = scoring::complexity(inst.text);
    s.objective = s.validation_mean - lambda * s.complexity;
    const bool better =
        !best || s.objective > best->objective ||
        (s.objective == best->objective &&
         (s.complexity < best->complexity ||
          (s.complexity == best->complexity && s.instruction.id < best->instruction.id)));
    if (better) best = std::move(s);
  }
  return *best;
}

Selection PromptOptimizer::final_select(const std::vector<Instruction>& population,
                                        const std::vector<TaskSample>& val) const {
  return optimizer::final_select(population, val, fitness_, config_.lambda);
}

}  // namespace auditflow::optimizer
