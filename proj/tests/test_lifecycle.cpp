#include <doctest.h>

#include <numeric>
#include <sstream>

#include "aigx/lifecycle.hpp"
#include "aigx/waterfill.hpp"

using namespace aigx;

namespace {

// Reduced sizes so the phase logic runs in seconds.
RunConfig small_config() {
  RunConfig cfg;
  cfg.seed = 7;
  cfg.lifecycle.t1_dataset_size = 600;
  cfg.lifecycle.t2_dataset_size = 400;
  cfg.lifecycle.eval_size = 300;
  cfg.lifecycle.retrain_epochs = 4;
  cfg.training.epochs = 6;
  cfg.training.batch_size = 64;
  cfg.training.learning_rate = 1e-3;
  cfg.denoiser.hidden_units = 48;
  cfg.denoiser.hidden_layers = 2;
  cfg.schedule.num_steps = 20;
  cfg.drl.train.iterations = 30;
  cfg.drl.train.batch_size = 64;
  cfg.drl.policy.hidden_units = 32;
  return cfg;
}

}  // namespace

TEST_CASE("virtuous_gain") {
  CHECK(virtuous_gain(2.0, 2.0) == 0.0);
  CHECK(virtuous_gain(1.151 * 3.0, 3.0) == doctest::Approx(0.151).epsilon(1e-12));
  CHECK(virtuous_gain(1.0, 2.0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(virtuous_gain(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(virtuous_gain(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("collect_dataset: degenerate single point") {
  ChannelConfig cfg;
  cfg.num_channels = 2;
  cfg.power_budget = 1.0;
  const auto dist = GainDistribution::from_blocks({{1, 4.0, 4.0}, {1, 1.0, 1.0}});
  Rng rng{1};
  const auto ds = collect_dataset(dist, 1, cfg, rng, "T1");
  REQUIRE(ds.samples.size() == 1);
  CHECK(ds.samples[0].expert.powers[0] == doctest::Approx(0.875).epsilon(1e-12));
  CHECK(ds.samples[0].expert.powers[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(ds.samples[0].sum_rate == doctest::Approx(std::log2(4.5) + std::log2(1.125)).epsilon(1e-12));
  CHECK_THROWS_AS(collect_dataset(dist, 0, cfg, rng, "T1"), std::invalid_argument);
}

TEST_CASE("collect_dataset: 10,000 verified T1 pairs; T2 expert beats uniform") {
  const RunConfig cfg;
  Rng rng{2};
  const auto t1 = collect_dataset(cfg.t1_distribution(), 10000, cfg.channel, rng, "T1");
  CHECK(t1.samples.size() == 10000);
  for (const auto& s : t1.samples) {
    CHECK(verify_kkt(as_candidate(s.expert, s.state, cfg.channel), s.state, cfg.channel, kDatasetKktTol));
  }
  const auto t2 = collect_dataset(cfg.t2_distribution(), 2000, cfg.channel, rng, "T2");
  double expert = 0.0, uniform = 0.0;
  for (const auto& s : t2.samples) {
    expert += s.sum_rate;
    uniform += sum_rate(s.state, uniform_allocation(cfg.channel), cfg.channel);
  }
  CHECK(expert > uniform);
}

TEST_CASE("evaluate_phase: exact expert dominance and score definitions") {
  const RunConfig cfg;
  Rng rng{3};
  std::vector<ChannelState> states;
  for (int i = 0; i < 200; ++i) states.push_back(sample_gains(cfg.t2_distribution(), rng));
  std::vector<PowerAllocation> uni(states.size(), uniform_allocation(cfg.channel));
  std::vector<PowerAllocation> best;
  for (const auto& s : states) best.push_back(waterfill(s, cfg.channel).allocation);
  const auto r = evaluate_phase("X", states, cfg.channel, best, uni);
  CHECK(r.expert_dominates);
  CHECK(r.at(Method::gdm).ratio_to_expert == 1.0);
  CHECK(r.at(Method::drl).improvement_over_uniform == 0.0);
  CHECK(r.at(Method::expert).improvement_over_uniform > 0.0);
  CHECK_THROWS_AS(evaluate_phase("X", states, cfg.channel, std::span(best).first(3), uni), std::invalid_argument);
}

TEST_CASE("phases: determinism, schema, and the no-shift control") {
  const auto cfg = small_config();
  const auto schedule = phase_schedule(cfg);
  const auto t1 = run_t1(schedule, cfg);
  const auto t1_again = run_t1(schedule, cfg);
  CHECK(t1.training.val_loss == t1_again.training.val_loss);
  CHECK(t1.eval.at(Method::gdm).per_state == t1_again.eval.at(Method::gdm).per_state);
  CHECK(t1.eval.expert_dominates);
  CHECK(t1.eval.at(Method::expert).improvement_over_uniform >= t1.improvement_over_uniform);

  const double t1_ratio = t1.eval.at(Method::gdm).ratio_to_expert;
  const auto t2 = run_t2(t1.denoiser, t1.policy, t1_ratio, schedule, cfg);
  CHECK(t2.dataset.samples.size() == 400);
  CHECK(t2.dataset.source_phase == "T2");
  for (const auto& s : t2.dataset.samples) {
    CHECK(verify_kkt(as_candidate(s.expert, s.state, cfg.channel), s.state, cfg.channel, kDatasetKktTol));
  }
  CHECK(t2.degradation == doctest::Approx(1.0 - t2.eval.at(Method::gdm).ratio_to_expert / t1_ratio));

  auto control = schedule;
  control.t2_dist = control.t1_dist;
  const auto t2c = run_t2(t1.denoiser, t1.policy, t1_ratio, control, cfg);
  CHECK(std::abs(t2c.degradation) <= 0.02);

  const auto t3 = run_t3(t1.denoiser, t1.policy, t1.dataset, t2.dataset, schedule, cfg);
  CHECK(t3.training.train_loss.size() == 4);
  CHECK(t3.virtuous_gain == doctest::Approx(t3.eval.at(Method::gdm).improvement_over_uniform));

  const auto metrics = assemble_metrics(t1, t2, t3);
  std::istringstream table(metrics_table_csv(metrics));
  std::string line;
  std::getline(table, line);
  CHECK(line == "phase,method,mean_sum_rate,ratio_to_expert,improvement_over_uniform,virtuous_gain");
  std::vector<std::string> keys;
  while (std::getline(table, line)) keys.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
  const std::vector<std::string> expected{"T1,expert", "T1,gdm", "T1,uniform", "T1,drl",
                                          "T2-pre,expert", "T2-pre,gdm", "T2-pre,uniform", "T2-pre,drl",
                                          "T3,expert", "T3,gdm", "T3,uniform", "T3,drl"};
  CHECK(keys == expected);
  CHECK(summary_csv(metrics).find("expert_dominates,true") != std::string::npos);
}

TEST_CASE("from_scratch retraining starts from a fresh network") {
  auto cfg = small_config();
  cfg.lifecycle.retrain_mode = RetrainMode::from_scratch;
  const auto schedule = phase_schedule(cfg);
  const auto t1 = run_t1(schedule, cfg);
  const auto t2 = run_t2(t1.denoiser, t1.policy, t1.eval.at(Method::gdm).ratio_to_expert, schedule, cfg);
  const auto t3 = run_t3(t1.denoiser, t1.policy, t1.dataset, t2.dataset, schedule, cfg);
  CHECK(t3.training.train_loss.size() == static_cast<std::size_t>(cfg.training.epochs));
  CHECK(t3.training.initial_val_loss > t1.training.val_loss[static_cast<std::size_t>(t1.training.best_epoch)]);
  ExpertDataset empty;
  CHECK_THROWS_AS(run_t3(t1.denoiser, t1.policy, t1.dataset, empty, schedule, cfg), std::invalid_argument);
}
