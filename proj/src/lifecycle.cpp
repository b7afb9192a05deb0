#include "aigx/lifecycle.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "aigx/parallel.hpp"
#include "aigx/waterfill.hpp"

namespace aigx {
namespace {

std::vector<ChannelState> draw_states(const GainDistribution& dist, int n, Rng& rng) {
  std::vector<ChannelState> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_gains(dist, rng));
  return out;
}

MethodResult score(Method method, std::vector<double> rates, std::span<const double> expert,
                   double expert_mean, double uniform_mean) {
  MethodResult r;
  r.method = method;
  const double n = static_cast<double>(rates.size());
  r.mean_sum_rate = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
  r.ratio_to_expert = r.mean_sum_rate / expert_mean;
  r.improvement_over_uniform = virtuous_gain(r.mean_sum_rate, uniform_mean);
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) ratio_sum += rates[i] / expert[i];
  r.mean_state_ratio = ratio_sum / n;
  r.per_state = std::move(rates);
  return r;
}

void check_rows(const char* label, std::size_t got, std::size_t want) {
  if (got != want) {
    throw std::invalid_argument(std::string("evaluate_phase: ") + label + " has " +
                                std::to_string(got) + " allocations for " + std::to_string(want) +
                                " states");
  }
}

}  // namespace

ExpertDataset collect_dataset(const GainDistribution& dist, int n, const ChannelConfig& cfg, Rng& rng,
                              std::string source_phase, double waterfill_tol) {
  if (n < 1) throw std::invalid_argument("collect_dataset: n must be >= 1");
  ExpertDataset ds;
  ds.source_phase = std::move(source_phase);
  ds.samples.resize(static_cast<std::size_t>(n));
  for (auto& s : ds.samples) s.state = sample_gains(dist, rng);
  parallel_for(ds.samples.size(), [&](std::size_t i) {
    auto& s = ds.samples[i];
    const auto sol = waterfill(s.state, cfg, waterfill_tol);
    if (!verify_kkt(sol, s.state, cfg, kDatasetKktTol)) {
      throw std::runtime_error("collect_dataset: expert solution failed KKT check at sample " +
                               std::to_string(i));
    }
    s.expert = sol.allocation;
    s.sum_rate = sum_rate(s.state, s.expert, cfg);
  });
  return ds;
}

std::vector<gdm::TrainSample> to_train_samples(std::span<const ExpertDataset> datasets,
                                               const ChannelConfig& cfg) {
  std::vector<gdm::TrainSample> out;
  for (const auto& ds : datasets) {
    for (const auto& s : ds.samples) out.push_back(gdm::make_train_sample(s.state, s.expert, cfg));
  }
  return out;
}

double virtuous_gain(double r_model, double r_uniform) {
  if (!(r_uniform > 0.0)) throw std::invalid_argument("virtuous_gain: uniform rate must be > 0");
  return (r_model - r_uniform) / r_uniform;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::expert:
      return "expert";
    case Method::gdm:
      return "gdm";
    case Method::uniform:
      return "uniform";
    case Method::drl:
      return "drl";
  }
  return "unknown";
}

const MethodResult& PhaseResult::at(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return r;
  }
  throw std::out_of_range("phase " + phase + " has no result for " + to_string(m));
}

PhaseResult evaluate_phase(std::string phase, std::span<const ChannelState> states,
                           const ChannelConfig& cfg, std::span<const PowerAllocation> gdm_allocs,
                           std::span<const PowerAllocation> drl_allocs, double waterfill_tol) {
  if (states.empty()) throw std::invalid_argument("evaluate_phase: no states");
  check_rows("gdm", gdm_allocs.size(), states.size());
  check_rows("drl", drl_allocs.size(), states.size());

  const std::size_t n = states.size();
  std::vector<double> expert(n), gdm_r(n), uniform(n), drl_r(n);
  const auto uni = uniform_allocation(cfg);
  parallel_for(n, [&](std::size_t i) {
    expert[i] = sum_rate(states[i], waterfill(states[i], cfg, waterfill_tol).allocation, cfg);
    gdm_r[i] = sum_rate(states[i], gdm_allocs[i], cfg);
    uniform[i] = sum_rate(states[i], uni, cfg);
    drl_r[i] = sum_rate(states[i], drl_allocs[i], cfg);
  });

  PhaseResult out;
  out.phase = std::move(phase);
  for (std::size_t i = 0; i < n; ++i) {
    if (expert[i] < gdm_r[i] || expert[i] < uniform[i] || expert[i] < drl_r[i]) {
      out.expert_dominates = false;
    }
  }
  const double expert_mean = std::accumulate(expert.begin(), expert.end(), 0.0) / static_cast<double>(n);
  const double uniform_mean = std::accumulate(uniform.begin(), uniform.end(), 0.0) / static_cast<double>(n);
  const std::vector<double> expert_copy = expert;
  out.methods.push_back(score(Method::expert, std::move(expert), expert_copy, expert_mean, uniform_mean));
  out.methods.push_back(score(Method::gdm, std::move(gdm_r), expert_copy, expert_mean, uniform_mean));
  out.methods.push_back(score(Method::uniform, std::move(uniform), expert_copy, expert_mean, uniform_mean));
  out.methods.push_back(score(Method::drl, std::move(drl_r), expert_copy, expert_mean, uniform_mean));
  return out;
}

PhaseSchedule phase_schedule(const RunConfig& cfg) {
  PhaseSchedule s;
  s.t1_dist = cfg.t1_distribution();
  s.t2_dist = cfg.t2_distribution();
  s.t1_dataset_size = cfg.lifecycle.t1_dataset_size;
  s.t2_dataset_size = cfg.lifecycle.t2_dataset_size;
  s.retrain_mode = cfg.lifecycle.retrain_mode;
  return s;
}

namespace {

gdm::DiffusionSchedule diffusion_schedule(const RunConfig& cfg) {
  return gdm::make_schedule(cfg.schedule.num_steps, cfg.schedule.beta_start, cfg.schedule.beta_end);
}

gdm::SamplerOptions sampler_options(const RunConfig& cfg) {
  return {cfg.schedule.deterministic_last_step};
}

}  // namespace

T1Outcome run_t1(const PhaseSchedule& schedule, const RunConfig& cfg) {
  const auto seed = cfg.seed;
  const auto sched = diffusion_schedule(cfg);
  T1Outcome out;

  Rng data_rng = make_stream(seed, "t1/data");
  out.dataset = collect_dataset(schedule.t1_dist, schedule.t1_dataset_size, cfg.channel, data_rng, "T1",
                                cfg.waterfill_tolerance);

  Rng init_rng = make_stream(seed, "t1/init");
  out.denoiser = gdm::make_denoiser(cfg.channel.num_channels, cfg.denoiser, init_rng);
  const auto samples = to_train_samples(std::span<const ExpertDataset>(&out.dataset, 1), cfg.channel);
  Rng train_rng = make_stream(seed, "t1/train");
  out.training = gdm::train(out.denoiser, samples, cfg.training, sched, train_rng);

  Rng drl_init = make_stream(seed, "t1/drl_init");
  out.policy = drl::make_policy(cfg.channel.num_channels, cfg.drl.policy, drl_init);
  Rng drl_rng = make_stream(seed, "t1/drl");
  out.drl_training = drl::drl_train(out.policy, schedule.t1_dist, cfg.channel, cfg.drl.train, drl_rng);

  Rng eval_rng = make_stream(seed, "t1/eval_states");
  const auto states = draw_states(schedule.t1_dist, cfg.lifecycle.eval_size, eval_rng);
  const auto gdm_allocs = gdm::generate_allocations(out.denoiser, sched, states, cfg.channel,
                                                    derive_seed(seed, "t1/eval_sample"),
                                                    sampler_options(cfg));
  const auto drl_allocs = drl::act_deterministic(out.policy, states, cfg.channel);
  out.eval = evaluate_phase("T1", states, cfg.channel, gdm_allocs, drl_allocs, cfg.waterfill_tolerance);
  out.improvement_over_uniform = out.eval.at(Method::gdm).improvement_over_uniform;
  return out;
}

T2Outcome run_t2(const gdm::Denoiser& denoiser, const drl::PolicyModel& policy, double t1_gdm_ratio,
                 const PhaseSchedule& schedule, const RunConfig& cfg) {
  const auto seed = cfg.seed;
  const auto sched = diffusion_schedule(cfg);
  T2Outcome out;

  Rng eval_rng = make_stream(seed, "t2/eval_states");
  const auto states = draw_states(schedule.t2_dist, cfg.lifecycle.eval_size, eval_rng);
  const auto gdm_allocs = gdm::generate_allocations(denoiser, sched, states, cfg.channel,
                                                    derive_seed(seed, "t2/eval_sample"),
                                                    sampler_options(cfg));
  const auto drl_allocs = drl::act_deterministic(policy, states, cfg.channel);
  out.eval = evaluate_phase("T2-pre", states, cfg.channel, gdm_allocs, drl_allocs, cfg.waterfill_tolerance);

  const double ratio = out.eval.at(Method::gdm).ratio_to_expert;
  out.degradation = 1.0 - ratio / t1_gdm_ratio;
  out.ratio_drop = t1_gdm_ratio - ratio;

  Rng data_rng = make_stream(seed, "t2/data");
  out.dataset = collect_dataset(schedule.t2_dist, schedule.t2_dataset_size, cfg.channel, data_rng, "T2",
                                cfg.waterfill_tolerance);
  return out;
}

T3Outcome run_t3(const gdm::Denoiser& denoiser, const drl::PolicyModel& policy,
                 const ExpertDataset& t1_dataset, const ExpertDataset& t2_dataset,
                 const PhaseSchedule& schedule, const RunConfig& cfg) {
  if (t2_dataset.samples.empty()) throw std::invalid_argument("run_t3: empty T2 dataset");
  const auto seed = cfg.seed;
  const auto sched = diffusion_schedule(cfg);
  T3Outcome out;

  const ExpertDataset pooled[] = {t1_dataset, t2_dataset};
  const auto samples = to_train_samples(pooled, cfg.channel);
  gdm::TrainConfig tc = cfg.training;
  if (schedule.retrain_mode == RetrainMode::fine_tune) {
    out.denoiser = denoiser;
    out.policy = policy;
    tc.epochs = cfg.lifecycle.retrain_epochs;
  } else {
    Rng init_rng = make_stream(seed, "t3/init");
    out.denoiser = gdm::make_denoiser(cfg.channel.num_channels, cfg.denoiser, init_rng);
    Rng drl_init = make_stream(seed, "t3/drl_init");
    out.policy = drl::make_policy(cfg.channel.num_channels, cfg.drl.policy, drl_init);
  }
  Rng train_rng = make_stream(seed, "t3/train");
  out.training = gdm::train(out.denoiser, samples, tc, sched, train_rng);

  Rng drl_rng = make_stream(seed, "t3/drl");
  out.drl_training = drl::drl_train(out.policy, schedule.t2_dist, cfg.channel, cfg.drl.train, drl_rng);

  Rng eval_rng = make_stream(seed, "t3/eval_states");
  const auto states = draw_states(schedule.t2_dist, cfg.lifecycle.eval_size, eval_rng);
  const auto gdm_allocs = gdm::generate_allocations(out.denoiser, sched, states, cfg.channel,
                                                    derive_seed(seed, "t3/eval_sample"),
                                                    sampler_options(cfg));
  const auto drl_allocs = drl::act_deterministic(out.policy, states, cfg.channel);
  out.eval = evaluate_phase("T3", states, cfg.channel, gdm_allocs, drl_allocs, cfg.waterfill_tolerance);
  const double uniform = out.eval.at(Method::uniform).mean_sum_rate;
  out.virtuous_gain = virtuous_gain(out.eval.at(Method::gdm).mean_sum_rate, uniform);
  out.drl_virtuous_gain = virtuous_gain(out.eval.at(Method::drl).mean_sum_rate, uniform);
  return out;
}

RunMetrics assemble_metrics(const T1Outcome& t1, const T2Outcome& t2, const T3Outcome& t3) {
  RunMetrics m;
  m.t1 = t1.eval;
  m.t2_pre = t2.eval;
  m.t3 = t3.eval;
  m.improvement_over_uniform_t1 = t1.improvement_over_uniform;
  m.degradation_t2 = t2.degradation;
  m.ratio_drop_t2 = t2.ratio_drop;
  m.pre_retrain_gain = t2.eval.at(Method::gdm).improvement_over_uniform;
  m.virtuous_gain = t3.virtuous_gain;
  m.drl_virtuous_gain = t3.drl_virtuous_gain;
  return m;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

std::string metrics_table_csv(const RunMetrics& m) {
  std::ostringstream os;
  os << "phase,method,mean_sum_rate,ratio_to_expert,improvement_over_uniform,virtuous_gain\n";
  for (const auto* phase : {&m.t1, &m.t2_pre, &m.t3}) {
    for (const auto& r : phase->methods) {
      os << phase->phase << ',' << to_string(r.method) << ',' << format_number(r.mean_sum_rate) << ','
         << format_number(r.ratio_to_expert) << ',' << format_number(r.improvement_over_uniform) << ',';
      // Virtuous gain is defined only after retraining, on the T2 distribution.
      if (phase == &m.t3) os << format_number(r.improvement_over_uniform);
      os << '\n';
    }
  }
  return os.str();
}

std::string summary_csv(const RunMetrics& m) {
  std::ostringstream os;
  os << "key,value\n";
  auto row = [&](const char* k, double v) { os << k << ',' << format_number(v) << '\n'; };
  row("t1_gdm_ratio_to_expert", m.t1.at(Method::gdm).ratio_to_expert);
  row("t1_gdm_improvement_over_uniform", m.improvement_over_uniform_t1);
  row("t1_expert_improvement_over_uniform", m.t1.at(Method::expert).improvement_over_uniform);
  row("t2_gdm_ratio_to_expert", m.t2_pre.at(Method::gdm).ratio_to_expert);
  row("t2_degradation", m.degradation_t2);
  row("t2_ratio_drop", m.ratio_drop_t2);
  row("t2_pre_retrain_gain", m.pre_retrain_gain);
  row("t3_gdm_ratio_to_expert", m.t3.at(Method::gdm).ratio_to_expert);
  row("t3_virtuous_gain_gdm", m.virtuous_gain);
  row("t3_virtuous_gain_drl", m.drl_virtuous_gain);
  row("t1_gdm_mean_state_ratio", m.t1.at(Method::gdm).mean_state_ratio);
  row("t2_gdm_mean_state_ratio", m.t2_pre.at(Method::gdm).mean_state_ratio);
  row("t3_gdm_mean_state_ratio", m.t3.at(Method::gdm).mean_state_ratio);
  os << "expert_dominates," << (m.expert_dominates() ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace aigx
