#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "auditflow/errors.hpp"
#include "auditflow/optimizer/optimizer.hpp"
#include "auditflow/util.hpp"
#include "../support/synthetic.hpp"

using namespace auditflow;
using namespace auditflow::optimizer;
using namespace testsupport;

namespace {

double keyword_score(const std::string& text, const TaskSample&) { return keyword_fitness(text); }

OptimizerConfig small_config() {
  OptimizerConfig c;
  c.population_size = 6;
  c.elite_count = 3;
  c.max_generations = 6;
  c.full_batch = true;
  c.diversity_min = 0.0;
  c.rng_seed = 5;
  return c;
}

PromptOptimizer make(OptimizerConfig c, std::shared_ptr<Mutator> m = std::make_shared<KeywordMutator>(),
                     std::shared_ptr<Generator> g = nullptr) {
  return PromptOptimizer(std::move(c), keyword_score, jaccard, std::move(m), std::move(g));
}

// Text with the given token and sentence counts.
std::string shaped(int tokens, int sentences) {
  std::string out;
  for (int i = 0; i < tokens; ++i) {
    if (i) out += " ";
    out += "w";
    if (i >= tokens - sentences) out += ".";
  }
  return out;
}

class AlternatingMutator : public Mutator {
 public:
  std::string mutate(const std::string&, double, int variant) override {
    return variant % 2 == 0 ? "candidate A" : "candidate B";
  }
};

class RepeatingGenerator : public Generator {
 public:
  std::string generate(double, int variant) override {
    return variant % 2 == 0 ? "Same instruction." : "Fresh instruction " + std::to_string(variant);
  }
};

Instruction member(const std::string& id, const std::string& text) {
  Instruction i;
  i.id = id;
  i.text = text;
  return i;
}

}  // namespace

TEST(Schedule, MinibatchGrowsToDouble) {
  EXPECT_EQ(minibatch_size(1, 800, 10), 88);
  EXPECT_EQ(minibatch_size(5, 800, 10), 120);
  EXPECT_EQ(minibatch_size(10, 800, 10), 160);
  EXPECT_EQ(minibatch_size(0, 800, 10), 80);
  EXPECT_THROW(minibatch_size(-1, 800, 10), InvalidRequest);
  for (int t = 1; t < 10; ++t) EXPECT_LE(minibatch_size(t, 37, 10), minibatch_size(t + 1, 37, 10));
}

TEST(Schedule, TemperatureDecays) {
  EXPECT_DOUBLE_EQ(mutation_temperature(0, 0.7, 0.1), 0.7);
  EXPECT_DOUBLE_EQ(mutation_temperature(7, 0.7, 0.0), 0.7);
  EXPECT_NEAR(mutation_temperature(1, 0.7, 0.1), 0.7 * std::exp(-0.1), 1e-15);
  for (int t = 1; t < 20; ++t) {
    EXPECT_LT(mutation_temperature(t + 1, 0.7, 0.1), mutation_temperature(t, 0.7, 0.1));
  }
}

TEST(Fitness, SmoothingMomentum) {
  EXPECT_NEAR(smooth_fitness(0.5, 0.8, 0.3), 0.71, 1e-15);
  EXPECT_DOUBLE_EQ(smooth_fitness(0.5, 0.8, 0.0), 0.8);
  EXPECT_DOUBLE_EQ(smooth_fitness(0.5, 0.8, 1.0), 0.5);
}

TEST(Fitness, ReplayTerm) {
  EXPECT_DOUBLE_EQ(raw_fitness(0.5, {}, {}, 0.1), 0.5);
  const std::vector<ReplayEntry> replay{{"other", 1.0, 1}};
  EXPECT_NEAR(raw_fitness(0.5, {0.5}, replay, 0.1), 0.55, 1e-15);
  EXPECT_DOUBLE_EQ(raw_fitness(0.5, {0.0}, replay, 0.1), 0.5);
  EXPECT_THROW(raw_fitness(0.5, {}, replay, 0.1), InvalidRequest);
}

TEST(Replay, KeepsBestByFitness) {
  ReplayBuffer buf(2);
  auto a = member("a", "alpha");
  auto b = member("b", "beta");
  auto c = member("c", "gamma");
  for (auto* m : {&a, &b, &c}) m->evaluated = true;
  a.smoothed_fitness = 0.2;
  b.smoothed_fitness = 0.9;
  c.smoothed_fitness = 0.5;
  buf.update({a, b, c}, 1);
  ASSERT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.entries()[0].instruction_text, "beta");
  EXPECT_EQ(buf.entries()[1].instruction_text, "gamma");
  a.smoothed_fitness = 0.95;
  buf.update({a}, 2);
  EXPECT_EQ(buf.entries()[0].instruction_text, "alpha");
  EXPECT_EQ(buf.entries()[0].generation, 2);
}

TEST(Diversity, MeanPairwise) {
  const std::vector<Instruction> pop{member("a", "x"), member("b", "y"), member("c", "z")};
  const auto sim = [](const std::string& p, const std::string& q) {
    return (p == "x" && q == "y") ? 1.0 : 0.5;
  };
  EXPECT_NEAR(diversity(pop, sim), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(diversity({member("a", "t"), member("b", "t")}, jaccard), 0.0);
  EXPECT_DOUBLE_EQ(diversity({member("a", "p q"), member("b", "r s")}, jaccard), 1.0);
  EXPECT_THROW(diversity({member("a", "x")}, jaccard), DegeneratePopulation);
}

TEST(Init, SingleSeedWithoutMutation) {
  auto c = small_config();
  c.population_size = 1;
  c.elite_count = 1;
  PromptOptimizer opt(c, keyword_score, jaccard, nullptr);
  const auto pop = opt.init_population({"Audit this."});
  ASSERT_EQ(pop.size(), 1u);
  EXPECT_EQ(pop[0].text, "Audit this.");
}

TEST(Init, DedupesAndRefillsToK) {
  auto c = small_config();
  c.population_size = 4;
  c.elite_count = 2;
  auto opt = make(c, nullptr, std::make_shared<RepeatingGenerator>());
  const auto pop = opt.init_population({"Same instruction.", "same  INSTRUCTION."});
  ASSERT_EQ(pop.size(), 4u);
  std::set<std::string> texts;
  for (const auto& m : pop) texts.insert(normalize_text(m.text));
  EXPECT_EQ(texts.size(), 4u);
  EXPECT_EQ(pop[0].text, "Same instruction.");
}

TEST(Init, FailsWhenGeneratorCannotDiversify) {
  class Constant : public Generator {
   public:
    std::string generate(double, int) override { return "one"; }
  };
  auto c = small_config();
  auto opt = make(c, nullptr, std::make_shared<Constant>());
  EXPECT_THROW(opt.init_population({}), GenerationFailed);
}

TEST(Mutate, ChildInheritsParentFitness) {
  auto opt = make(small_config());
  auto parent = member("p", "Audit the contract.");
  parent.smoothed_fitness = 0.42;
  const auto child = opt.mutate(parent, 0.5, samples(1), 2, 0);
  EXPECT_DOUBLE_EQ(child.smoothed_fitness, 0.42);
  EXPECT_EQ(child.lineage, "p");
  EXPECT_EQ(child.text.rfind("Audit the contract.", 0), 0u);
  EXPECT_THROW(opt.mutate(parent, 0.0, samples(1), 2, 0), InvalidRequest);
}

TEST(Mutate, GuidedKeepsHigherScoringCandidate) {
  auto c = small_config();
  c.guided_mutation = true;
  const auto fitness = [](const std::string& text, const TaskSample&) {
    return text == "candidate B" ? 0.6 : 0.4;
  };
  PromptOptimizer opt(c, fitness, jaccard, std::make_shared<AlternatingMutator>());
  const auto child = opt.mutate(member("p", "x"), 0.5, samples(2), 1, 0);
  EXPECT_EQ(child.text, "candidate B");
}

TEST(Evolve, PopulationSizeAndElitesSurvive) {
  auto opt = make(small_config());
  auto pop = opt.init_population({"Audit the contract.", "Find bugs in the code."});
  const auto res = opt.evolve(pop, samples(4));
  ASSERT_EQ(res.history.size(), 6u);
  for (std::size_t g = 0; g < res.history.size(); ++g) {
    EXPECT_EQ(res.history[g].population.size(), 6u);
    if (g + 1 == res.history.size()) break;
    std::set<std::string> next;
    for (const auto& m : res.history[g + 1].population) next.insert(m.id);
    for (int e = 0; e < 3; ++e) EXPECT_TRUE(next.count(res.history[g].population[e].id));
  }
}

TEST(Evolve, BestNonDecreasingWithoutMomentum) {
  auto c = small_config();
  c.alpha = 0.0;
  c.epsilon = 0.0;
  c.max_generations = 10;
  auto opt = make(c);
  const auto res = opt.evolve(opt.init_population({"Audit the contract."}), samples(3));
  for (std::size_t g = 1; g < res.history.size(); ++g) {
    EXPECT_GE(res.history[g].best_fitness, res.history[g - 1].best_fitness);
  }
}

TEST(Evolve, ReplaysWithSameSeed) {
  auto c = small_config();
  c.full_batch = false;
  c.batch_base_fraction = 0.3;
  auto a = make(c);
  auto b = make(c);
  const auto ra = a.evolve(a.init_population({"Audit."}), samples(10));
  const auto rb = b.evolve(b.init_population({"Audit."}), samples(10));
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t g = 0; g < ra.history.size(); ++g) {
    EXPECT_EQ(ra.history[g].best_fitness, rb.history[g].best_fitness);
    EXPECT_EQ(ra.history[g].batch_size, rb.history[g].batch_size);
  }
}

TEST(Evolve, PlateauStopsAfterStableRun) {
  auto c = small_config();
  c.delta_fitness = 10.0;
  c.n_stable = 5;
  c.max_generations = 20;
  auto opt = make(c);
  const auto res = opt.evolve(opt.init_population({"Audit."}), samples(3));
  EXPECT_EQ(res.history.size(), 6u);
  EXPECT_EQ(res.stop, StopReason::Plateau);
}

TEST(Evolve, ClonesStopOnLowDiversity) {
  auto c = small_config();
  c.diversity_min = 0.3;
  auto opt = make(c);
  std::vector<Instruction> clones;
  for (int i = 0; i < 6; ++i) clones.push_back(member("c" + std::to_string(i), "Audit the code."));
  const auto res = opt.evolve(clones, samples(3));
  EXPECT_EQ(res.history.size(), 1u);
  EXPECT_EQ(res.stop, StopReason::LowDiversity);
}

TEST(Evolve, RejectsWrongPopulationSize) {
  auto opt = make(small_config());
  EXPECT_THROW(opt.evolve({member("a", "x")}, samples(2)), InvalidRequest);
  EXPECT_THROW(opt.evolve(opt.init_population({"x"}), {}), InvalidRequest);
}

TEST(Select, ComplexityPenaltyChangesWinner) {
  const auto verbose = member("a", shaped(130, 30));
  const auto terse = member("b", shaped(13, 3));
  ASSERT_NEAR(scoring::complexity(verbose.text), 100.0, 1e-9);
  ASSERT_NEAR(scoring::complexity(terse.text), 10.0, 1e-9);
  const auto fitness = [&](const std::string& text, const TaskSample&) {
    return text == verbose.text ? 0.80 : 0.78;
  };
  const auto s = final_select({verbose, terse}, samples(2), fitness, 0.01);
  EXPECT_EQ(s.instruction.id, "b");
  EXPECT_NEAR(s.objective, 0.68, 1e-9);
  EXPECT_EQ(final_select({verbose, terse}, samples(2), fitness, 0.0).instruction.id, "a");
}

TEST(Select, TiePrefersLowerComplexity) {
  const auto fitness = [](const std::string&, const TaskSample&) { return 0.5; };
  const auto s = final_select({member("a", shaped(50, 1)), member("b", shaped(40, 1))}, samples(1),
                              fitness, 0.0);
  EXPECT_EQ(s.instruction.id, "b");
  EXPECT_THROW(final_select({}, samples(1), fitness, 0.0), InvalidRequest);
}

TEST(OptConfig, DefaultsAndValidation) {
  const OptimizerConfig d;
  EXPECT_EQ(d.population_size, 20);
  EXPECT_EQ(d.elite_count, 10);
  EXPECT_EQ(d.max_generations, 10);
  EXPECT_EQ(d.replay_size(), 10);
  OptimizerConfig c;
  c.elite_count = 30;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.population_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  const nlohmann::json j{{"population_size", 8}, {"elite_count", 4}};
  const auto parsed = j.get<OptimizerConfig>();
  EXPECT_EQ(parsed.population_size, 8);
  EXPECT_DOUBLE_EQ(parsed.lambda, 0.01);
}

TEST(Instructions, CleanStripsFence) {
  EXPECT_EQ(clean_instruction("```\nAudit it.\n```"), "Audit it.");
  EXPECT_EQ(clean_instruction("  Audit it. \n"), "Audit it.");
}

TEST(Evolve, NeedsRoomForOffspring) {
  auto c = small_config();
  c.elite_count = c.population_size;
  auto opt = make(c);
  EXPECT_THROW(opt.evolve(opt.init_population({"Audit."}), samples(2)), InvalidRequest);
}
