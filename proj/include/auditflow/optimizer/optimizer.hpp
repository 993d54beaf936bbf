#pragma once

// Evolutionary search for the analysis/planning instruction.
//
// Each generation scores every instruction on a growing random mini-batch,
// adds a replay term that rewards similarity to historically strong
// instructions, smooths fitness with momentum, keeps the top elites and
// refills the population by mutating uniformly chosen elites at a decaying
// temperature. The final choice trades validation score against instruction
// complexity.

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auditflow/llm/gateway.hpp"
#include "auditflow/scoring/scoring.hpp"

namespace auditflow::optimizer {

using scoring::TaskSample;

struct Instruction {
  std::string id;
  std::string text;
  double smoothed_fitness = 0.0;
  double last_raw_fitness = 0.0;
  bool evaluated = false;
  std::optional<std::string> lineage;  // parent id
  int born = 0;                        // generation of creation
};

void to_json(nlohmann::json& j, const Instruction& i);

struct OptimizerConfig {
  int population_size = 20;  // k
  int elite_count = 10;      // k_e
  int max_generations = 10;  // T
  double tau_max = 0.7;
  double beta = 0.1;
  double epsilon = 0.1;
  double alpha = 0.3;
  double lambda = 0.01;
  double batch_base_fraction = 0.1;
  double delta_fitness = 0.005;
  int n_stable = 5;
  double diversity_min = 0.3;
  int replay_capacity = 0;  // 0 means elite_count
  scoring::ScoreWeights weights;
  std::uint64_t rng_seed = 42;
  // Score every instruction on the whole training set each generation.
  bool full_batch = false;
  // Best-of-two mutation judged on the current batch.
  bool guided_mutation = false;
  // Retry budget when a mutation duplicates an existing member.
  int duplicate_retries = 3;
  int workers = 1;

  void validate() const;
  int replay_size() const { return replay_capacity > 0 ? replay_capacity : elite_count; }
};

void to_json(nlohmann::json& j, const OptimizerConfig& c);
// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, OptimizerConfig& c);

// --- pure schedule and fitness arithmetic ----------------------------------

// ceil(base_fraction * train_size * (1 + t / T)).
int minibatch_size(int t, int train_size, int max_generations, double base_fraction = 0.1);
double mutation_temperature(int t, double tau_max, double beta);
double smooth_fitness(double prev, double raw, double alpha);

struct ReplayEntry {
  std::string instruction_text;
  double recorded_fitness = 0.0;
  int generation = 0;
};

// batch_mean + epsilon * mean(sim_i * f'_i); the replay term is 0 for an
// empty buffer.
double raw_fitness(double batch_mean, const std::vector<double>& similarities,
                   const std::vector<ReplayEntry>& replay, double epsilon);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  // Inserts or improves entries by text, then keeps the best `capacity`
  // sorted by recorded fitness desc (text asc on ties).
  void update(const std::vector<Instruction>& members, int generation);
  const std::vector<ReplayEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::vector<ReplayEntry> entries_;
};

// --- pluggable collaborators -----------------------------------------------

// f(rho, c, A). Must be safe to call concurrently when workers > 1.
using FitnessFn = std::function<double(const std::string& instruction, const TaskSample& sample)>;
using SimilarityFn = std::function<double(const std::string& a, const std::string& b)>;

class Mutator {
 public:
  virtual ~Mutator() = default;
  // Rewrites `text` at sampling temperature `tau`. `variant` distinguishes
  // repeated requests for the same parent.
  virtual std::string mutate(const std::string& text, double tau, int variant) = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  // A fresh instruction from the meta-prompt.
  virtual std::string generate(double tau, int variant) = 0;
};

// Model-backed operators.
class LlmMutator : public Mutator {
 public:
  LlmMutator(llm::Gateway& gateway, std::string model_id, int max_tokens = 512);
  std::string mutate(const std::string& text, double tau, int variant) override;

 private:
  llm::Gateway& gateway_;
  std::string model_id_;
  int max_tokens_;
};

class LlmGenerator : public Generator {
 public:
  LlmGenerator(llm::Gateway& gateway, std::string model_id, std::string task_description,
               int max_tokens = 512);
  std::string generate(double tau, int variant) override;

 private:
  llm::Gateway& gateway_;
  std::string model_id_;
  std::string task_description_;
  int max_tokens_;
};

// Strips a surrounding code fence and whitespace from a model reply.
std::string clean_instruction(const std::string& reply);

// 1 - mean pairwise similarity over unordered distinct pairs.
// DegeneratePopulation below two members.
double diversity(const std::vector<Instruction>& population, const SimilarityFn& sim);

struct GenerationRecord {
  int generation = 0;
  int batch_size = 0;
  double temperature = 0.0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double diversity = 0.0;
  std::vector<Instruction> population;  // evaluated members of this generation
};

enum class StopReason { MaxGenerations, Plateau, LowDiversity };
std::string_view to_string(StopReason r);

struct EvolveResult {
  std::vector<Instruction> population;
  std::vector<GenerationRecord> history;
  std::vector<ReplayEntry> replay;
  StopReason stop = StopReason::MaxGenerations;
};

struct Selection {
  Instruction instruction;
  double validation_mean = 0.0;
  double complexity = 0.0;
  double objective = 0.0;
};

class PromptOptimizer {
 public:
  using GenerationCallback = std::function<void(const GenerationRecord&)>;

  PromptOptimizer(OptimizerConfig config, FitnessFn fitness, SimilarityFn similarity,
                  std::shared_ptr<Mutator> mutator, std::shared_ptr<Generator> generator = nullptr);

  // k distinct instructions (normalized-text dedup): the seeds first, then
  // meta-prompt generations and seed mutations at tau_max, alternating.
  // GenerationFailed when the retry budget runs out short of k.
  std::vector<Instruction> init_population(const std::vector<std::string>& seeds);

  // Initial smoothed fitness: batch mean on a first mini-batch (the whole set
  // in full-batch mode), no replay term.
  void evaluate_initial(std::vector<Instruction>& population, const std::vector<TaskSample>& train);

  // Child of `parent` at temperature `tau`; inherits the parent's smoothed
  // fitness. In guided mode two candidates are scored on `batch` and the
  // better one is kept.
  Instruction mutate(const Instruction& parent, double tau, const std::vector<TaskSample>& batch,
                     int generation, int serial);

  EvolveResult evolve(std::vector<Instruction> population, const std::vector<TaskSample>& train,
                      const GenerationCallback& on_generation = {});

  // argmax of validation mean - lambda * complexity; ties prefer lower
  // complexity, then id.
  Selection final_select(const std::vector<Instruction>& population,
                         const std::vector<TaskSample>& val) const;

  double batch_mean(const std::string& text, const std::vector<TaskSample>& batch) const;
  const OptimizerConfig& config() const { return config_; }

 private:
  std::vector<TaskSample> sample_batch(const std::vector<TaskSample>& train, int t);
  void score_population(std::vector<Instruction>& population, const std::vector<TaskSample>& batch,
                        const ReplayBuffer& replay) const;

  OptimizerConfig config_;
  FitnessFn fitness_;
  SimilarityFn similarity_;
  std::shared_ptr<Mutator> mutator_;
  std::shared_ptr<Generator> generator_;
  std::mt19937_64 rng_;
  int variant_counter_ = 0;
};

// Standalone form of the selection objective.
Selection final_select(const std::vector<Instruction>& population,
                       const std::vector<TaskSample>& val, const FitnessFn& fitness, double lambda);

}  // namespace auditflow::optimizer
