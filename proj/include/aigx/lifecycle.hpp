#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aigx/channel_env.hpp"
#include "aigx/config.hpp"
#include "aigx/drl_baseline.hpp"
#include "aigx/gdm.hpp"

namespace aigx {

/// Expert-labelled channel states.
struct ExpertSample {
  ChannelState state;
  PowerAllocation expert;
  double sum_rate = 0.0;
};

struct ExpertDataset {
  std::vector<ExpertSample> samples;
  std::string source_phase;
};

inline constexpr double kDatasetKktTol = 1e-6;

/// n i.i.d. states from `dist`, each paired with its water-filling
/// allocation. Every pair is KKT-checked; a failure throws
/// std::runtime_error.
ExpertDataset collect_dataset(const GainDistribution& dist, int n, const ChannelConfig& cfg, Rng& rng,
                              std::string source_phase, double waterfill_tol = 1e-10);

std::vector<gdm::TrainSample> to_train_samples(std::span<const ExpertDataset> datasets,
                                               const ChannelConfig& cfg);

/// (r_model - r_uniform) / r_uniform. Throws std::invalid_argument if
/// r_uniform <= 0.
double virtuous_gain(double r_model, double r_uniform);

enum class Method { expert, gdm, uniform, drl };
std::string to_string(Method m);

struct MethodResult {
  Method method = Method::expert;
  double mean_sum_rate = 0.0;
  double ratio_to_expert = 0.0;           // mean rate / mean expert rate
  double improvement_over_uniform = 0.0;  // mean rate vs mean uniform rate
  double mean_state_ratio = 0.0;          // mean over states of rate / expert rate
  std::vector<double> per_state;
};

struct PhaseResult {
  std::string phase;
  std::vector<MethodResult> methods;  // expert, gdm, uniform, drl order
  bool expert_dominates = true;       // per state, expert >= every method

  const MethodResult& at(Method m) const;
};

/// Scores expert and uniform plus the supplied learned allocations on
/// `states`.
PhaseResult evaluate_phase(std::string phase, std::span<const ChannelState> states,
                           const ChannelConfig& cfg, std::span<const PowerAllocation> gdm_allocs,
                           std::span<const PowerAllocation> drl_allocs, double waterfill_tol = 1e-10);

struct PhaseSchedule {
  GainDistribution t1_dist;
  GainDistribution t2_dist;
  int t1_dataset_size = 10000;
  int t2_dataset_size = 10000;
  RetrainMode retrain_mode = RetrainMode::fine_tune;
};

PhaseSchedule phase_schedule(const RunConfig& cfg);

struct T1Outcome {
  gdm::Denoiser denoiser;
  drl::PolicyModel policy;
  ExpertDataset dataset;
  gdm::TrainResult training;
  drl::DrlResult drl_training;
  PhaseResult eval;
  double improvement_over_uniform = 0.0;
};

struct T2Outcome {
  PhaseResult eval;
  double degradation = 0.0;  // 1 - ratio_T2 / ratio_T1
  double ratio_drop = 0.0;   // ratio_T1 - ratio_T2
  ExpertDataset dataset;
};

struct T3Outcome {
  gdm::Denoiser denoiser;
  drl::PolicyModel policy;
  gdm::TrainResult training;
  drl::DrlResult drl_training;
  PhaseResult eval;
  double virtuous_gain = 0.0;
  double drl_virtuous_gain = 0.0;
};

/// Phase T1: collect, train the denoiser and the baseline, evaluate on
/// fresh T1 states.
T1Outcome run_t1(const PhaseSchedule& schedule, const RunConfig& cfg);

/// Phase T2: score the T1 models under the shifted distribution and
/// collect fresh expert pairs there.
T2Outcome run_t2(const gdm::Denoiser& denoiser, const drl::PolicyModel& policy, double t1_gdm_ratio,
                 const PhaseSchedule& schedule, const RunConfig& cfg);

/// Phase T3: retrain on T1 + T2 data (fine-tune or from scratch), continue
/// the baseline on T2, evaluate on fresh T2 states.
T3Outcome run_t3(const gdm::Denoiser& denoiser, const drl::PolicyModel& policy,
                 const ExpertDataset& t1_dataset, const ExpertDataset& t2_dataset,
                 const PhaseSchedule& schedule, const RunConfig& cfg);

struct RunMetrics {
  PhaseResult t1;
  PhaseResult t2_pre;
  PhaseResult t3;
  double improvement_over_uniform_t1 = 0.0;
  double degradation_t2 = 0.0;
  double ratio_drop_t2 = 0.0;
  double pre_retrain_gain = 0.0;
  double virtuous_gain = 0.0;
  double drl_virtuous_gain = 0.0;

  bool expert_dominates() const {
    return t1.expert_dominates && t2_pre.expert_dominates && t3.expert_dominates;
  }
};

RunMetrics assemble_metrics(const T1Outcome& t1, const T2Outcome& t2, const T3Outcome& t3);

/// phase,method,mean_sum_rate,ratio_to_expert,improvement_over_uniform,virtuous_gain
std::string metrics_table_csv(const RunMetrics& m);
/// key,value rows of the headline statistics.
std::string summary_csv(const RunMetrics& m);

/// Fixed-precision number formatting shared by every emitted table.
std::string format_number(double v);

}  // namespace aigx
