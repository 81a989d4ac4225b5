// Command-line front end: train (run), re-evaluate checkpoints (eval),
// execute the verification suites (oracle), and reproduce the benchmark
// tables across seeds (bench).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "acflow/checkpoint.hpp"
#include "acflow/config_json.hpp"
#include "acflow/oracles.hpp"
#include "acflow/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace acflow;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Deterministic artifact: timing is excluded (wall_ms column written as 0 so
// identical config+seed reproduce the file byte for byte); measured wall time
// goes to summary.json instead.
void write_metrics_csv(const fs::path& path, const MetricsLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iter,tau,critic_loss,err_v0,err_g,err_u,cost_mean,cost_stderr,"
         "wall_ms\n";
  for (const auto& r : log.rows)
    out << r.iter << ',' << fmt_double(r.tau) << ','
        << fmt_double(r.critic_loss) << ',' << fmt_double(r.err_v0) << ','
        << fmt_double(r.err_g) << ',' << fmt_double(r.err_u) << ','
        << fmt_double(r.cost_mean) << ',' << fmt_double(r.cost_stderr)
        << ",0\n";
}

json row_to_json(const MetricsRow& r) {
  return json{{"iter", r.iter},
              {"tau", r.tau},
              {"critic_loss", r.critic_loss},
              {"err_v0", r.err_v0},
              {"err_g", r.err_g},
              {"err_u", r.err_u},
              {"cost_mean", r.cost_mean},
              {"cost_stderr", r.cost_stderr}};
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ACFLOW_OUT"); env && *env) return env;
  return "out";
}

TrainConfig load_config(const std::string& config_path,
                        const std::string& problem_preset) {
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    json j;
    in >> j;
    return config_from_json(j);
  }
  if (!problem_preset.empty()) return preset_config(problem_preset);
  throw std::runtime_error("need --config or --problem");
}

struct SeedRun {
  std::uint64_t seed;
  MetricsLog log;
  double wall_ms;
};

// Train one seed and write its artifacts under dir.
SeedRun run_one(TrainConfig config, std::uint64_t seed, const fs::path& dir) {
  config.seed = seed;
  fs::create_directories(dir);

  const auto t0 = std::chrono::steady_clock::now();
  TrainerState st;
  MetricsLog log = run_training(config, &st);
  const double wall =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - t0)
          .count();

  write_metrics_csv(dir / "metrics.csv", log);
  save_checkpoint((dir / "checkpoint.bin").string(), st, seed,
                  log.final_row().iter);

  json summary{{"config", config_to_json(config)},
               {"config_hash", config_hash(config)},
               {"seed", seed},
               {"final", row_to_json(log.final_row())},
               {"wall_ms", wall}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  return {seed, std::move(log), wall};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_run(const std::string& config_path, const std::string& problem,
            const std::string& mode, std::uint64_t seed, int num_seeds,
            const std::string& out_flag) {
  TrainConfig config = load_config(config_path, problem);
  if (!mode.empty()) config.mode = run_mode_from_string(mode);
  config.validate();

  const fs::path out = resolve_out_dir(out_flag);
  fs::create_directories(out);

  json manifest{{"command", "run"},
                {"config", config_to_json(config)},
                {"config_hash", config_hash(config)},
                {"started_at", timestamp_utc()}};
  std::vector<std::uint64_t> seeds;
  if (num_seeds > 1)
    for (int k = 0; k < num_seeds; ++k) seeds.push_back(seed + k);
  else
    seeds.push_back(seed);
  manifest["seeds"] = seeds;

  for (std::uint64_t s : seeds) {
    const fs::path dir =
        seeds.size() == 1 ? out : out / ("seed_" + std::to_string(s));
    SeedRun r = run_one(config, s, dir);
    const auto& f = r.log.final_row();
    std::printf(
        "seed %llu: err_v0=%.4f err_g=%.4f err_u=%.4f cost=%.6g (%.0f ms)\n",
        static_cast<unsigned long long>(s), f.err_v0, f.err_g, f.err_u,
        f.cost_mean, r.wall_ms);
  }
  manifest["finished_at"] = timestamp_utc();
  std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint_path,
             const std::string& config_path, const std::string& problem) {
  TrainConfig config = load_config(config_path, problem);
  config.validate();
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  config.seed = ck.seed;

  TrainerState st = make_trainer_state(config);
  if (st.v0.params.size() != ck.v0.params.size() ||
      st.g.params.size() != ck.g.params.size() ||
      st.u.params.size() != ck.u.params.size())
    throw std::runtime_error("checkpoint does not match config architecture");
  st.v0 = ck.v0;
  st.g = ck.g;
  st.u = ck.u;

  const MetricsRow row = evaluate_metrics(st, config, ck.iteration, 0.0, 0.0);
  json out = row_to_json(row);
  out.erase("critic_loss");
  out["checkpoint"] = checkpoint_path;
  out["config_hash"] = config_hash(config);
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_oracle(const std::string& suite) {
  std::vector<oracles::Check> checks;
  auto append = [&](std::vector<oracles::Check> more) {
    checks.insert(checks.end(), more.begin(), more.end());
  };
  const bool all = suite == "all";
  if (all || suite == "gradients") append(oracles::gradient_suite());
  if (all || suite == "td") append(oracles::td_suite());
  if (all || suite == "isometry") append(oracles::isometry_suite());
  if (all || suite == "pde") append(oracles::pde_suite());
  if (all || suite == "pg") append(oracles::pg_suite());
  if (checks.empty()) throw std::runtime_error("unknown suite: " + suite);

  bool ok = true;
  for (const auto& c : checks) {
    std::printf("[%s] %-28s value=%-12.5g bound=%-12.5g %s\n",
                c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.threshold,
                c.note.c_str());
    ok = ok && c.pass;
  }
  if (!ok) throw std::runtime_error("oracle suite '" + suite + "' failed");
  return 0;
}

int cmd_bench(const std::string& problem, int num_seeds,
              const std::string& out_flag) {
  TrainConfig config = preset_config(problem);
  const fs::path out = resolve_out_dir(out_flag) / ("bench_" + problem);
  fs::create_directories(out);

  std::vector<double> ev, eg, eu;
  json per_seed = json::array();
  for (int k = 0; k < num_seeds; ++k) {
    SeedRun r = run_one(config, k, out / ("seed_" + std::to_string(k)));
    const auto& f = r.log.final_row();
    ev.push_back(f.err_v0);
    eg.push_back(f.err_g);
    eu.push_back(f.err_u);
    per_seed.push_back(row_to_json(f));
    std::printf("seed %d: err_v0=%.4f err_g=%.4f err_u=%.4f (%.0f ms)\n", k,
                f.err_v0, f.err_g, f.err_u, r.wall_ms);
  }
  std::printf("%-10s %10s %10s %10s\n", "median", "err_v0", "err_g", "err_u");
  std::printf("%-10s %10.4f %10.4f %10.4f\n", problem.c_str(), median(ev),
              median(eg), median(eu));

  json table{{"problem", problem},
             {"seeds", num_seeds},
             {"median", {{"err_v0", median(ev)},
                         {"err_g", median(eg)},
                         {"err_u", median(eu)}}},
             {"per_seed", per_seed}};
  std::ofstream(out / "bench.json") << table.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"actor-critic solver for continuous-time stochastic control"};
  app.require_subcommand(1);

  std::string config_path, problem, mode, out_flag, checkpoint_path;
  std::string suite = "all";
  std::uint64_t seed = 0;
  int num_seeds = 1;

  auto* run = app.add_subcommand("run", "train and write metrics/checkpoint");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--problem", problem, "preset: lq1d | lq10d | aiyagari");
  run->add_option("--mode", mode, "ac | vanilla | supervised");
  run->add_option("--seed", seed, "base RNG seed");
  run->add_option("--seeds", num_seeds, "number of consecutive seeds");
  run->add_option("--out", out_flag, "output directory (or ACFLOW_OUT)");

  auto* ev = app.add_subcommand("eval", "recompute errors from a checkpoint");
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  ev->add_option("--config", config_path, "JSON config file");
  ev->add_option("--problem", problem, "preset: lq1d | lq10d | aiyagari");

  auto* orc = app.add_subcommand("oracle", "run verification suites");
  orc->add_option("--suite", suite,
                  "gradients | td | isometry | pde | pg | all");

  auto* bench = app.add_subcommand("bench", "median errors across seeds");
  bench->add_option("--problem", problem, "preset: lq1d | lq10d | aiyagari")
      ->required();
  bench->add_option("--seeds", num_seeds, "number of seeds");
  bench->add_option("--out", out_flag, "output directory (or ACFLOW_OUT)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, problem, mode, seed, num_seeds, out_flag);
    if (ev->parsed()) return cmd_eval(checkpoint_path, config_path, problem);
    if (orc->parsed()) return cmd_oracle(suite);
    if (bench->parsed()) return cmd_bench(problem, num_seeds, out_flag);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
