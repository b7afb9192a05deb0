#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "aigx/checkpoint.hpp"
#include "aigx/commands.hpp"
#include "aigx/io.hpp"

using namespace aigx;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("aigx_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig quick_config() {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.training.epochs = 8;
  cfg.training.batch_size = 64;
  cfg.training.learning_rate = 1e-3;
  cfg.denoiser.hidden_units = 48;
  cfg.denoiser.hidden_layers = 2;
  cfg.schedule.num_steps = 20;
  cfg.lifecycle.eval_size = 200;
  return cfg;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "aigx");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("default config text parses to the built-in defaults") {
  const auto parsed = parse_config(default_config_text());
  const RunConfig defaults;
  CHECK(io::config_to_json(parsed) == io::config_to_json(defaults));
  CHECK(parsed.channel.power_budget == 0.2);
  CHECK(parsed.t1_distribution() == defaults.t1_distribution());
}

TEST_CASE("config errors name the offending key") {
  CHECK_THROWS_WITH_AS(parse_config("channel:\n  power_budget: 3\n"), doctest::Contains("channel.power_budget"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_config("channel:\n  num_channels: 5\n"), std::invalid_argument);  // ranges no longer cover M
  CHECK_THROWS_AS(parse_config("lifecycle:\n  retrain_mode: sometimes\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("training: [1, 2"), std::invalid_argument);
  const auto cfg = parse_config("seed: 9\nlifecycle:\n  retrain_mode: from_scratch\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.lifecycle.retrain_mode == RetrainMode::from_scratch);
}

TEST_CASE("collect: format contract, determinism, feasibility") {
  const auto dir = scratch_dir("collect");
  const auto cfg = quick_config();
  CHECK(cli::cmd_collect(cfg, dir / "a.csv", {cli::Phase::t1, 100}) == 100);
  CHECK(cli::cmd_collect(cfg, dir / "b.csv", {cli::Phase::t1, 100}) == 100);
  const auto text = io::read_file(dir / "a.csv");
  CHECK(text == io::read_file(dir / "b.csv"));

  const auto rows = lines(text);
  REQUIRE(rows.size() == 101);
  for (const auto& r : rows) CHECK(std::count(r.begin(), r.end(), ',') == 40);

  // Re-parse independently of the library reader.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string cell;
    std::vector<double> v;
    while (std::getline(in, cell, ',')) v.push_back(std::stod(cell));
    const double total = std::accumulate(v.begin() + 20, v.begin() + 40, 0.0);
    CHECK(std::abs(total - cfg.channel.power_budget) <= 1e-9 * cfg.channel.power_budget);
  }
  fs::remove_all(dir);
}

TEST_CASE("train and evaluate: loss falls, checkpoint round-trips") {
  const auto dir = scratch_dir("train");
  const auto cfg = quick_config();
  cli::cmd_collect(cfg, dir / "data.csv", {cli::Phase::t1, 1500});
  const auto out = cli::cmd_train(cfg, dir / "data.csv", dir / "model.json");
  CHECK(out.result.val_loss.back() < out.result.initial_val_loss);
  CHECK(fs::exists(out.loss_curve));
  CHECK(lines(io::read_file(out.loss_curve)).front() == "epoch,train_loss,val_loss");

  // Reloaded checkpoint reproduces the in-memory parameters exactly.
  const auto ckpt = denoiser_from_json(read_json_file((dir / "model.json").string()));
  const auto again = denoiser_from_json(to_json(ckpt));
  for (std::size_t l = 0; l < ckpt.denoiser.net.num_layers(); ++l) {
    CHECK(ckpt.denoiser.net.weights[l] == again.denoiser.net.weights[l]);
  }
  const auto sched = gdm::make_schedule(cfg.schedule.num_steps, cfg.schedule.beta_start, cfg.schedule.beta_end);
  Rng rng{1};
  std::vector<ChannelState> states;
  for (int i = 0; i < 50; ++i) states.push_back(sample_gains(cfg.t1_distribution(), rng));
  const auto a = gdm::generate_allocations(ckpt.denoiser, sched, states, cfg.channel, 11);
  const auto b = gdm::generate_allocations(again.denoiser, sched, states, cfg.channel, 11);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].powers == b[i].powers);

  const auto row1 = cli::cmd_evaluate(dir / "model.json", cfg, cli::Phase::t1);
  const auto row2 = cli::cmd_evaluate(dir / "model.json", cfg, cli::Phase::t1);
  CHECK(row1.csv() == row2.csv());
  CHECK(row1.method == "gdm");
  CHECK(row1.ratio_to_expert <= 1.0);
  fs::remove_all(dir);
}

TEST_CASE("train: truncated or mismatched dataset leaves no checkpoint") {
  const auto dir = scratch_dir("truncated");
  const auto cfg = quick_config();
  cli::cmd_collect(cfg, dir / "data.csv", {cli::Phase::t1, 120});
  const auto text = io::read_file(dir / "data.csv");
  {
    std::ofstream(dir / "cut.csv") << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(cli::cmd_train(cfg, dir / "cut.csv", dir / "model.json"), std::runtime_error);
  CHECK_FALSE(fs::exists(dir / "model.json"));

  auto other = cfg;
  other.channel.num_channels = 10;
  other.t1_blocks = {{10, 5.0, 8.0}};
  other.t2_blocks = {{10, 1.0, 7.0}};
  CHECK_THROWS_WITH_AS(cli::cmd_train(other, dir / "data.csv", dir / "model.json"), doctest::Contains("columns"),
                       std::runtime_error);
  CHECK_FALSE(fs::exists(dir / "model.json"));
  fs::remove_all(dir);
}

TEST_CASE("evaluate: corrupt or foreign checkpoints raise schema errors") {
  const auto dir = scratch_dir("corrupt");
  const auto cfg = quick_config();
  {
    std::ofstream(dir / "garbage.json") << "{\"schema\": \"aigx.checkpoint\", \"kind\": \"gdm_de";
  }
  CHECK_THROWS_AS(cli::cmd_evaluate(dir / "garbage.json", cfg, cli::Phase::t1), CheckpointError);
  {
    std::ofstream(dir / "other.json") << "{\"hello\": 1}";
  }
  CHECK_THROWS_AS(cli::cmd_evaluate(dir / "other.json", cfg, cli::Phase::t1), CheckpointError);

  Rng rng{4};
  DenoiserCheckpoint good{gdm::make_denoiser(20, cfg.denoiser, rng), cfg.schedule, cfg.channel, 4};
  auto j = to_json(good);
  j["schema_version"] = 99;
  io::write_file_atomic(dir / "future.json", j.dump());
  CHECK_THROWS_WITH_AS(cli::cmd_evaluate(dir / "future.json", cfg, cli::Phase::t1),
                       doctest::Contains("schema_version"), CheckpointError);
  j = to_json(good);
  j["network"]["weights_row_major"][0].erase(0);
  io::write_file_atomic(dir / "short.json", j.dump());
  CHECK_THROWS_AS(cli::cmd_evaluate(dir / "short.json", cfg, cli::Phase::t1), CheckpointError);
  CHECK_THROWS_AS(cli::cmd_evaluate(dir / "missing.json", cfg, cli::Phase::t1), CheckpointError);
  fs::remove_all(dir);
}

TEST_CASE("policy checkpoints round-trip and evaluate as drl") {
  const auto dir = scratch_dir("policy");
  const auto cfg = quick_config();
  Rng rng{5};
  const PolicyCheckpoint ckpt{drl::make_policy(20, cfg.drl.policy, rng), cfg.channel, 5};
  io::write_file_atomic(dir / "policy.json", to_json(ckpt).dump());
  const auto back = policy_from_json(read_json_file((dir / "policy.json").string()));
  CHECK(back.policy.net.weights.back() == ckpt.policy.net.weights.back());
  CHECK(cli::cmd_evaluate(dir / "policy.json", cfg, cli::Phase::t2).method == "drl");
  CHECK_THROWS_AS(denoiser_from_json(to_json(ckpt)), CheckpointError);
  fs::remove_all(dir);
}

TEST_CASE("atomic writes leave no temporaries and fail cleanly") {
  const auto dir = scratch_dir("atomic");
  io::write_file_atomic(dir / "x.txt", "one");
  io::write_file_atomic(dir / "x.txt", "two");
  CHECK(io::read_file(dir / "x.txt") == "two");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
  CHECK_THROWS_AS(io::write_file_atomic(dir / "no" / "such" / "x.txt", "z"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const auto dir = scratch_dir("exit");
  CHECK(run({"print-default-config"}) == 0);
  CHECK(run({}) == 1);
  CHECK(run({"collect"}) == 1);  // --out missing
  CHECK(run({"collect", "--config", (dir / "absent.yaml").string(), "--out", (dir / "d.csv").string()}) == 1);
  CHECK(run({"collect", "--samples", "25", "--out", (dir / "d.csv").string()}) == 0);
  CHECK(lines(io::read_file(dir / "d.csv")).size() == 26);
  CHECK(run({"collect", "--samples", "5", "--out", (dir / "missing" / "d.csv").string()}) == 2);
  {
    std::ofstream(dir / "bad.yaml") << "channel:\n  noise_power_linear: -1\n";
  }
  CHECK(run({"collect", "--config", (dir / "bad.yaml").string(), "--out", (dir / "e.csv").string()}) == 2);
  CHECK(run({"evaluate", "--checkpoint", (dir / "d.csv").string()}) == 2);
  CHECK(run({"lifecycle", "--retrain-mode", "sideways", "--out", (dir / "run").string()}) == 2);
  fs::remove_all(dir);
}
