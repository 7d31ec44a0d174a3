// Command-line driver: equivariance audits, SO(3)/SO(2) oracle checks,
// complexity benchmarks, prediction on XYZ structures, and a toy relaxation
// loop.  Exit codes: 0 pass, 1 fail/error, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "equikernel/audit.hpp"
#include "equikernel/bench.hpp"
#include "equikernel/checkpoint.hpp"
#include "equikernel/relax.hpp"

namespace {

using namespace equikernel;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << text;
}

void emit(const std::optional<std::string>& out_path, const std::string& text) {
  if (out_path)
    write_file(*out_path, text);
  else
    std::cout << text;
}

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("EQUIKERNEL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

ModelConfig load_config(const std::optional<std::string>& path) {
  if (!path) return ModelConfig::tiny();
  return ModelConfig::from_json(read_file(*path));
}

ModelWeights load_weights(const ModelConfig& cfg, const std::optional<std::string>& checkpoint,
                          std::optional<std::uint64_t> random_seed) {
  if (checkpoint) return load_checkpoint(*checkpoint, cfg);
  ModelWeights w = ModelWeights::make(cfg);
  Rng rng(random_seed.value_or(0));
  w.init_random(rng);
  return w;
}

nlohmann::json prediction_json(const ForwardResult& r) {
  nlohmann::json j;
  j["energy"] = r.energy;
  j["units"] = {{"energy", "eV"}, {"forces", "eV/Angstrom"}};
  j["forces"] = nlohmann::json::array();
  for (const Vec3& f : r.forces) j["forces"].push_back({f.x, f.y, f.z});
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equikernel: SO(3)-equivariant kernels with eSCN-reduced convolutions"};
  app.require_subcommand(1);

  // check-equivariance
  auto* cmd_check = app.add_subcommand("check-equivariance",
                                       "per-layer and whole-model rotation audits");
  std::uint64_t seed = 0;
  int n_trials = 5;
  int check_threads = 0;
  bool corrupt = false;
  std::optional<std::string> check_config;
  cmd_check->add_option("--seed", seed, "rng seed");
  cmd_check->add_option("--trials", n_trials, "random rotations per layer");
  cmd_check->add_option("--config", check_config, "model config JSON (default: tiny profile)");
  cmd_check->add_option("--threads", check_threads, "worker threads (or EQUIKERNEL_THREADS)");
  cmd_check->add_flag("--corrupt-cg", corrupt, "inject a fault into one CG tensor");

  // check-oracle
  auto* cmd_oracle = app.add_subcommand("check-oracle",
                                        "eSCN vs full tensor-product equivalence");
  int oracle_lmax = 3;
  int n_edges = 20;
  std::uint64_t oracle_seed = 0;
  cmd_oracle->add_option("--lmax", oracle_lmax, "largest degree to test (<= 3)");
  cmd_oracle->add_option("--edges", n_edges, "random edges per degree");
  cmd_oracle->add_option("--seed", oracle_seed, "rng seed");

  // bench
  auto* cmd_bench = app.add_subcommand("bench", "kernel timing vs L_max with log-log slopes");
  std::vector<int> bench_lmax{2, 4, 6, 8};
  int bench_channels = 4;
  int bench_reps = 5;
  int bench_mmax = -1;
  std::uint64_t bench_seed = 0;
  std::optional<std::string> bench_out;
  cmd_bench->add_option("--lmax", bench_lmax, "L_max values");
  cmd_bench->add_option("--mmax", bench_mmax, "SO(2) order cap (default: equal to L_max)");
  cmd_bench->add_option("--channels", bench_channels, "channels per degree");
  cmd_bench->add_option("--reps", bench_reps, "repetitions (minimum 3)");
  cmd_bench->add_option("--seed", bench_seed, "rng seed");
  cmd_bench->add_option("--out", bench_out, "write CSV here instead of stdout");

  // predict
  auto* cmd_predict = app.add_subcommand("predict", "energy and forces for an XYZ structure");
  std::string predict_xyz;
  std::optional<std::string> predict_config, predict_ckpt, predict_out;
  std::optional<std::uint64_t> predict_seed;
  int predict_threads = 0;
  cmd_predict->add_option("xyz", predict_xyz, "input XYZ path")->required();
  cmd_predict->add_option("--config", predict_config, "model config JSON (default: tiny profile)");
  auto* pc = cmd_predict->add_option("--checkpoint", predict_ckpt, "weight checkpoint");
  auto* ps = cmd_predict->add_option("--random-seed", predict_seed, "random weights from seed");
  pc->excludes(ps);
  ps->excludes(pc);
  cmd_predict->add_option("--out", predict_out, "write JSON here instead of stdout");
  cmd_predict->add_option("--threads", predict_threads,
                          "worker threads (or EQUIKERNEL_THREADS)");

  // relax
  auto* cmd_relax = app.add_subcommand("relax", "toy structure relaxation on predicted forces");
  std::string relax_xyz;
  std::optional<std::string> relax_config, relax_ckpt, relax_out, relax_trace;
  std::optional<std::uint64_t> relax_seed;
  int relax_threads = 0;
  int max_steps = 300;
  double fmax = 0.02;
  double step_size = 0.01;
  cmd_relax->add_option("xyz", relax_xyz, "input XYZ path")->required();
  cmd_relax->add_option("--config", relax_config, "model config JSON (default: tiny profile)");
  auto* rc = cmd_relax->add_option("--checkpoint", relax_ckpt, "weight checkpoint");
  auto* rs = cmd_relax->add_option("--random-seed", relax_seed, "random weights from seed");
  rc->excludes(rs);
  rs->excludes(rc);
  cmd_relax->add_option("--out", relax_out, "final XYZ path");
  cmd_relax->add_option("--trace", relax_trace, "trace CSV path (default: stdout)");
  cmd_relax->add_option("--max-steps", max_steps, "step limit");
  cmd_relax->add_option("--fmax", fmax, "force convergence threshold, eV/A");
  cmd_relax->add_option("--step-size", step_size, "descent step size");
  cmd_relax->add_option("--threads", relax_threads, "worker threads (or EQUIKERNEL_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? 0 : 2;
  }

  try {
    if (cmd_check->parsed()) {
      if (n_trials < 1) {
        std::cerr << "error: --trials must be >= 1\n";
        return 2;
      }
      so3::testing::corrupt_cg(corrupt);
      AuditReport rep = run_equivariance_audit(load_config(check_config), seed, n_trials,
                                               resolve_threads(check_threads));
      std::cout << audit_text(rep);
      return rep.all_pass ? 0 : 1;
    }

    if (cmd_oracle->parsed()) {
      OracleReport rep = run_oracle_check(oracle_lmax, oracle_seed, n_edges);
      std::cout << oracle_text(rep);
      return rep.pass ? 0 : 1;
    }

    if (cmd_bench->parsed()) {
      std::vector<BenchRecord> records;
      try {
        records = run_bench(bench_lmax, bench_channels, bench_reps, bench_seed, bench_mmax);
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
      std::ostringstream os;
      os << bench_csv(records);
      for (const char* kernel : {"so3_full", "escn"}) {
        const double s = fitted_slope(records, kernel);
        os << "# slope " << kernel << " ";
        if (std::isnan(s))
          os << "n/a";
        else
          os << s;
        os << "\n";
      }
      emit(bench_out, os.str());
      return 0;
    }

    if (cmd_predict->parsed()) {
      const ModelConfig cfg = load_config(predict_config);
      const ModelWeights w = load_weights(cfg, predict_ckpt, predict_seed);
      const AtomicStructure s = parse_xyz(read_file(predict_xyz));
      const AtomGraph g = build_graph(s, cfg.cutoff, cfg.max_neighbors);
      const ForwardResult r = forward(cfg, w, g, resolve_threads(predict_threads));
      emit(predict_out, prediction_json(r).dump(2) + "\n");
      return 0;
    }

    if (cmd_relax->parsed()) {
      const ModelConfig cfg = load_config(relax_config);
      const ModelWeights w = load_weights(cfg, relax_ckpt, relax_seed);
      const AtomicStructure s = parse_xyz(read_file(relax_xyz));
      RelaxOptions opt;
      opt.max_steps = max_steps;
      opt.fmax_threshold = fmax;
      opt.step_size = step_size;
      opt.n_threads = resolve_threads(relax_threads);
      const RelaxResult r = relax(cfg, w, s, opt);
      emit(relax_trace, relax_trace_csv(r));
      if (relax_out) write_file(*relax_out, write_xyz(r.final_structure));
      if (r.aborted) {
        std::cerr << "relaxation aborted: " << r.abort_reason << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
