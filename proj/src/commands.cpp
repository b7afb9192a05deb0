#include "aigx/commands.hpp"

#include <chrono>
#include <ctime>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aigx/checkpoint.hpp"
#include "aigx/io.hpp"

namespace aigx::cli {
namespace {

namespace fs = std::filesystem;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string loss_curve_csv(const gdm::TrainResult& r) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n";
  os << "0,," << format_number(r.initial_val_loss) << '\n';
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
    os << e + 1 << ',' << format_number(r.train_loss[e]) << ',' << format_number(r.val_loss[e]) << '\n';
  }
  return os.str();
}

std::string reward_curve_csv(const drl::DrlResult& r) {
  std::ostringstream os;
  os << "iteration,mean_reward\n";
  for (std::size_t i = 0; i < r.mean_reward.size(); ++i) {
    os << i + 1 << ',' << format_number(r.mean_reward[i]) << '\n';
  }
  return os.str();
}

DenoiserCheckpoint denoiser_checkpoint(const gdm::Denoiser& d, const RunConfig& cfg) {
  return {d, cfg.schedule, cfg.channel, cfg.seed};
}

PolicyCheckpoint policy_checkpoint(const drl::PolicyModel& p, const RunConfig& cfg) {
  return {p, cfg.channel, cfg.seed};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  io::write_file_atomic(path, j.dump(1) + "\n");
}

GainDistribution distribution_for(const RunConfig& cfg, Phase phase) {
  return phase == Phase::t1 ? cfg.t1_distribution() : cfg.t2_distribution();
}

std::string phase_name(Phase p) { return p == Phase::t1 ? "T1" : "T2"; }

}  // namespace

Phase phase_from_string(const std::string& name) {
  if (name == "t1" || name == "T1") return Phase::t1;
  if (name == "t2" || name == "T2") return Phase::t2;
  throw std::invalid_argument("unknown phase '" + name + "' (t1 | t2)");
}

RunConfig resolve_config(const std::string& config_path, std::optional<std::uint64_t> seed,
                         std::optional<RetrainMode> retrain_mode) {
  RunConfig cfg = config_path.empty() ? parse_config(default_config_text()) : load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (retrain_mode) cfg.lifecycle.retrain_mode = *retrain_mode;
  cfg.validate();
  return cfg;
}

std::size_t cmd_collect(const RunConfig& cfg, const fs::path& out_path, const CollectOptions& opts) {
  const int n = opts.samples.value_or(opts.phase == Phase::t1 ? cfg.lifecycle.t1_dataset_size
                                                              : cfg.lifecycle.t2_dataset_size);
  Rng rng = make_stream(cfg.seed, opts.phase == Phase::t1 ? "t1/data" : "t2/data");
  const auto ds = collect_dataset(distribution_for(cfg, opts.phase), n, cfg.channel, rng,
                                  phase_name(opts.phase), cfg.waterfill_tolerance);
  io::write_file_atomic(out_path, io::dataset_to_csv(ds));
  return ds.samples.size();
}

TrainOutputs cmd_train(const RunConfig& cfg, const fs::path& dataset_path, const fs::path& checkpoint_out) {
  const auto ds = io::dataset_from_csv(io::read_file(dataset_path), cfg.channel, dataset_path.string());
  const auto samples = to_train_samples(std::span<const ExpertDataset>(&ds, 1), cfg.channel);

  const auto sched = gdm::make_schedule(cfg.schedule.num_steps, cfg.schedule.beta_start, cfg.schedule.beta_end);
  Rng init_rng = make_stream(cfg.seed, "t1/init");
  auto denoiser = gdm::make_denoiser(cfg.channel.num_channels, cfg.denoiser, init_rng);
  Rng train_rng = make_stream(cfg.seed, "t1/train");

  TrainOutputs out;
  out.result = gdm::train(denoiser, samples, cfg.training, sched, train_rng);
  out.checkpoint = checkpoint_out;
  out.loss_curve = checkpoint_out;
  out.loss_curve.replace_extension(".loss.csv");
  write_json(out.checkpoint, to_json(denoiser_checkpoint(denoiser, cfg)));
  io::write_file_atomic(out.loss_curve, loss_curve_csv(out.result));
  return out;
}

std::string EvaluateRow::csv_header() {
  return "phase,method,mean_sum_rate,expert_sum_rate,uniform_sum_rate,ratio_to_expert,"
         "improvement_over_uniform";
}

std::string EvaluateRow::csv() const {
  return phase + ',' + method + ',' + format_number(mean_sum_rate) + ',' + format_number(expert_sum_rate) +
         ',' + format_number(uniform_sum_rate) + ',' + format_number(ratio_to_expert) + ',' +
         format_number(improvement_over_uniform);
}

EvaluateRow cmd_evaluate(const fs::path& checkpoint, const RunConfig& cfg, Phase phase) {
  const auto j = read_json_file(checkpoint.string());
  const auto kind = checkpoint_kind(j);

  Rng eval_rng = make_stream(cfg.seed, "evaluate/states");
  const auto dist = distribution_for(cfg, phase);
  std::vector<ChannelState> states;
  for (int i = 0; i < cfg.lifecycle.eval_size; ++i) states.push_back(sample_gains(dist, eval_rng));

  std::vector<PowerAllocation> allocs;
  Method method = Method::gdm;
  auto check_channel = [&](const ChannelConfig& c) {
    if (c.num_channels != cfg.channel.num_channels || c.power_budget != cfg.channel.power_budget ||
        c.noise_power != cfg.channel.noise_power) {
      throw CheckpointError("checkpoint channel settings do not match the config");
    }
  };
  if (kind == "gdm_denoiser") {
    const auto ckpt = denoiser_from_json(j);
    check_channel(ckpt.channel);
    const auto sched = gdm::make_schedule(ckpt.schedule.num_steps, ckpt.schedule.beta_start,
                                          ckpt.schedule.beta_end);
    allocs = gdm::generate_allocations(ckpt.denoiser, sched, states, cfg.channel,
                                       derive_seed(cfg.seed, "evaluate/sample"),
                                       {ckpt.schedule.deterministic_last_step});
  } else {
    const auto ckpt = policy_from_json(j);
    check_channel(ckpt.channel);
    allocs = drl::act_deterministic(ckpt.policy, states, cfg.channel);
    method = Method::drl;
  }
  const auto result = evaluate_phase(phase_name(phase), states, cfg.channel, allocs, allocs,
                                     cfg.waterfill_tolerance);
  const auto& r = result.at(method);
  EvaluateRow row;
  row.phase = result.phase;
  row.method = to_string(method);
  row.mean_sum_rate = r.mean_sum_rate;
  row.expert_sum_rate = result.at(Method::expert).mean_sum_rate;
  row.uniform_sum_rate = result.at(Method::uniform).mean_sum_rate;
  row.ratio_to_expert = r.ratio_to_expert;
  row.improvement_over_uniform = r.improvement_over_uniform;
  return row;
}

LifecycleRun cmd_lifecycle(const RunConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  fs::create_directories(out_dir);
  auto say = [&](const std::string& msg) {
    if (log) *log << msg << std::endl;
  };

  nlohmann::json manifest = {
      {"schema", "aigx.manifest"},
      {"schema_version", kManifestSchemaVersion},
      {"tool_version", kToolVersion},
      {"master_seed", cfg.seed},
      {"seed_derivation", "splitmix64(splitmix64(seed ^ fnv1a(stream)) + splitmix64(counter + 1))"},
      {"config", io::config_to_json(cfg)},
      {"started_at", utc_timestamp()},
      {"status", "running"},
      {"completed_phases", nlohmann::json::array()},
  };
  write_json(out_dir / "manifest.json", manifest);

  LifecycleRun run;
  const auto schedule = phase_schedule(cfg);

  say("[T1] collecting " + std::to_string(schedule.t1_dataset_size) + " expert pairs and training");
  run.t1 = run_t1(schedule, cfg);
  write_json(out_dir / "t1_denoiser.json", to_json(denoiser_checkpoint(run.t1.denoiser, cfg)));
  write_json(out_dir / "t1_policy.json", to_json(policy_checkpoint(run.t1.policy, cfg)));
  io::write_file_atomic(out_dir / "t1_loss.csv", loss_curve_csv(run.t1.training));
  io::write_file_atomic(out_dir / "t1_drl_reward.csv", reward_curve_csv(run.t1.drl_training));
  manifest["completed_phases"].push_back("T1");
  write_json(out_dir / "manifest.json", manifest);
  say("[T1] gdm ratio-to-expert " + format_number(run.t1.eval.at(Method::gdm).ratio_to_expert) +
      ", improvement over uniform " + format_number(run.t1.improvement_over_uniform));

  say("[T2] evaluating under the shifted distribution and collecting data");
  run.t2 = run_t2(run.t1.denoiser, run.t1.policy, run.t1.eval.at(Method::gdm).ratio_to_expert, schedule, cfg);
  io::write_file_atomic(out_dir / "t2_dataset.csv", io::dataset_to_csv(run.t2.dataset));
  manifest["completed_phases"].push_back("T2");
  write_json(out_dir / "manifest.json", manifest);
  say("[T2] gdm ratio-to-expert " + format_number(run.t2.eval.at(Method::gdm).ratio_to_expert) +
      ", degradation " + format_number(run.t2.degradation));

  say("[T3] retraining (" + to_string(schedule.retrain_mode) + ")");
  run.t3 = run_t3(run.t1.denoiser, run.t1.policy, run.t1.dataset, run.t2.dataset, schedule, cfg);
  write_json(out_dir / "t3_denoiser.json", to_json(denoiser_checkpoint(run.t3.denoiser, cfg)));
  write_json(out_dir / "t3_policy.json", to_json(policy_checkpoint(run.t3.policy, cfg)));
  io::write_file_atomic(out_dir / "t3_loss.csv", loss_curve_csv(run.t3.training));
  io::write_file_atomic(out_dir / "t3_drl_reward.csv", reward_curve_csv(run.t3.drl_training));

  run.metrics = assemble_metrics(run.t1, run.t2, run.t3);
  io::write_file_atomic(out_dir / "metrics.csv", metrics_table_csv(run.metrics));
  io::write_file_atomic(out_dir / "summary.csv", summary_csv(run.metrics));
  manifest["completed_phases"].push_back("T3");
  manifest["status"] = "complete";
  manifest["finished_at"] = utc_timestamp();
  write_json(out_dir / "manifest.json", manifest);
  say("[T3] virtuous gain gdm " + format_number(run.metrics.virtuous_gain) + ", drl " +
      format_number(run.metrics.drl_virtuous_gain));
  return run;
}

int run_main(int argc, char** argv) {
  CLI::App app{"Diffusion-model power allocation: expert data, training, evaluation, lifecycle"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  auto common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", config_path, "YAML configuration file (defaults built in)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed, overrides the config");
    if (needs_out) sub->add_option("--out", out, "Output path")->required();
  };

  auto* collect = app.add_subcommand("collect", "Write an expert (water-filling) dataset CSV");
  common(collect, true);
  std::string phase = "t1";
  std::optional<int> samples;
  collect->add_option("--phase", phase, "Gain distribution: t1 | t2")->capture_default_str();
  collect->add_option("--samples", samples, "Number of samples (default: phase dataset size)")
      ->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train a denoiser on a dataset CSV");
  common(train, true);
  std::string dataset;
  train->add_option("--dataset", dataset, "Dataset CSV from 'collect'")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on fresh states");
  common(evaluate, false);
  std::string checkpoint;
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  evaluate->add_option("--phase", phase, "Gain distribution: t1 | t2")->capture_default_str();
  evaluate->add_option("--out", out, "Also write the metrics row to this CSV file");

  auto* lifecycle = app.add_subcommand("lifecycle", "Run the T1 -> T2 -> T3 cycle");
  common(lifecycle, true);
  std::string retrain;
  lifecycle->add_option("--retrain-mode", retrain, "fine_tune | from_scratch");

  auto* print_default = app.add_subcommand("print-default-config", "Print the built-in configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (print_default->parsed()) {
      std::cout << default_config_text();
      return 0;
    }
    std::optional<RetrainMode> mode;
    if (!retrain.empty()) mode = retrain_mode_from_string(retrain);
    const auto cfg = resolve_config(config_path, seed, mode);

    if (collect->parsed()) {
      const auto rows = cmd_collect(cfg, out, {phase_from_string(phase), samples});
      std::cerr << "wrote " << rows << " samples to " << out << '\n';
    } else if (train->parsed()) {
      const auto r = cmd_train(cfg, dataset, out);
      std::cerr << "trained " << r.result.train_loss.size() << " epochs; best val_loss "
                << format_number(r.result.best_epoch >= 0 ? r.result.val_loss[static_cast<std::size_t>(r.result.best_epoch)]
                                                          : r.result.initial_val_loss)
                << "; checkpoint " << r.checkpoint.string() << '\n';
    } else if (evaluate->parsed()) {
      const auto row = cmd_evaluate(checkpoint, cfg, phase_from_string(phase));
      const auto text = EvaluateRow::csv_header() + "\n" + row.csv() + "\n";
      std::cout << text;
      if (!out.empty()) io::write_file_atomic(out, text);
    } else if (lifecycle->parsed()) {
      cmd_lifecycle(cfg, out, &std::cerr);
      std::cout << io::read_file(fs::path(out) / "metrics.csv");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace aigx::cli
