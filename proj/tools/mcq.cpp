// mcq: matrix completion from quantized samples, command-line front end.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcq/grsbl.hpp"
#include "mcq/harness.hpp"
#include "mcq/io.hpp"
#include "mcq/lse2d.hpp"

namespace {

using nlohmann::json;

struct SolverFlags {
  int k = 10;
  int t_outer = 100;
  double damping = 0.7;
  std::string learn_noise = "auto";
  double sigma2 = 0.0;
  std::uint64_t seed = 1;
  double tol = 0.0;
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--k", f.k, "Factor columns (upper bound on the rank)")->check(CLI::PositiveNumber);
  app->add_option("--t-outer", f.t_outer, "Outer EP iterations")->check(CLI::PositiveNumber);
  app->add_option("--damping", f.damping, "Extrinsic damping factor in (0, 1]");
  app->add_option("--learn-noise", f.learn_noise, "auto | on | off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  app->add_option("--sigma2", f.sigma2, "Initial noise variance (0: half the prior variance)");
  app->add_option("--tol", f.tol, "Stop once the relative change falls below this (0: run all iterations)");
  app->add_option("--seed", f.seed, "Factor initialization seed");
}

mcq::GrSblConfig to_config(const SolverFlags& f) {
  mcq::GrSblConfig cfg;
  cfg.k = f.k;
  cfg.t_outer = f.t_outer;
  cfg.damping = f.damping;
  cfg.learn_noise = f.learn_noise == "on"    ? mcq::NoiseLearning::kOn
                    : f.learn_noise == "off" ? mcq::NoiseLearning::kOff
                                             : mcq::NoiseLearning::kAuto;
  cfg.sigma2_init = f.sigma2;
  cfg.seed = f.seed;
  cfg.tol = f.tol;
  return cfg;
}

int parse_bits_flag(const std::string& s) {
  if (s == "inf") return 0;
  const int b = std::stoi(s);
  if (b < 1 || b > mcq::QuantizerSpec::kMaxBits) throw CLI::ValidationError("--bits", "must be 1..16 or inf");
  return b;
}

mcq::ObservedMatrix load_observed(const std::string& path, const std::string& bits) {
  json doc = json::parse(mcq::io::read_file(path));
  if (!bits.empty()) doc["B"] = parse_bits_flag(bits);
  return mcq::io::observed_from_json(doc);
}

std::optional<Eigen::MatrixXcd> load_reference(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return mcq::io::matrix_from_json(json::parse(mcq::io::read_file(path)).at("Z"));
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
  } else {
    mcq::io::write_file(path, text + "\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix completion from quantized samples"};
  app.require_subcommand(1);

  // simulate
  std::string config_path, csv_path, summary_path;
  int threads = 1;
  bool no_timing = false;
  bool quiet = false;
  auto* sim = app.add_subcommand("simulate", "Run a Monte-Carlo experiment from a JSON config");
  sim->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--output", csv_path, "CSV output (default: stdout)");
  sim->add_option("--summary", summary_path, "JSON summary with per-(SNR, B) medians");
  sim->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_flag("--no-timing", no_timing, "Write wall_ms as 0 so repeated runs are byte-identical");
  sim->add_flag("--quiet", quiet, "No progress on stderr");

  // complete
  std::string input_path, output_path, bits_flag, reference_path;
  SolverFlags solver_flags;
  auto* complete = app.add_subcommand("complete", "Complete one observed matrix");
  complete->add_option("--input", input_path, "Observed matrix (JSON)")->required()->check(CLI::ExistingFile);
  complete->add_option("--bits", bits_flag, "Bit depth of the input (1..16 or inf); overrides the file");
  complete->add_option("--output", output_path, "Result JSON (default: stdout)");
  complete->add_option("--reference", reference_path, "Ground truth JSON with \"Z\", for the NMSE trace");
  add_solver_flags(complete, solver_flags);

  // lse2d
  int grid = mcq::kDefaultMusicGrid;
  auto* lse = app.add_subcommand("lse2d", "Estimate 2D line spectra from one observed matrix");
  lse->add_option("--input", input_path, "Observed matrix (JSON)")->required()->check(CLI::ExistingFile);
  lse->add_option("--bits", bits_flag, "Bit depth of the input (1..16 or inf); overrides the file");
  lse->add_option("--output", output_path, "Estimate JSON (default: stdout)");
  lse->add_option("--grid", grid, "MUSIC grid size")->check(CLI::Range(8, 1 << 24));
  add_solver_flags(lse, solver_flags);

  // generate
  std::string scenario = "random-lowrank", snr_flag = "10", truth_path;
  int gm = 100, gn = 100, gr = 5;
  double gp = 0.8;
  std::uint64_t gseed = 1;
  auto* gen = app.add_subcommand("generate", "Draw a synthetic observed matrix");
  gen->add_option("--scenario", scenario, "random-lowrank | lse2d")
      ->check(CLI::IsMember({"random-lowrank", "lse2d"}));
  gen->add_option("--m", gm)->check(CLI::PositiveNumber);
  gen->add_option("--n", gn)->check(CLI::PositiveNumber);
  gen->add_option("--r", gr)->check(CLI::PositiveNumber);
  gen->add_option("--p", gp, "Sampling fraction");
  gen->add_option("--snr", snr_flag, "SNR in dB or inf");
  gen->add_option("--bits", bits_flag, "1..16 or inf")->default_val("3");
  gen->add_option("--seed", gseed);
  gen->add_option("--output", output_path, "Observed matrix JSON (default: stdout)");
  gen->add_option("--truth", truth_path, "Write the ground truth here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto cfg = mcq::parse_experiment_config(mcq::io::read_file(config_path));
      mcq::RunOptions opts;
      opts.threads = threads;
      opts.timing = !no_timing;
      if (!quiet) {
        opts.progress = [](std::size_t done, std::size_t total) {
          std::cerr << "\r" << done << "/" << total << std::flush;
          if (done == total) std::cerr << '\n';
        };
      }
      const auto rows = mcq::run_experiment(cfg, opts);
      if (csv_path.empty() || csv_path == "-") {
        mcq::write_csv(std::cout, rows);
      } else {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        mcq::write_csv(out, rows);
      }
      if (!summary_path.empty()) mcq::io::write_file(summary_path, mcq::summarize_json(cfg, rows) + "\n");
      int failed = 0;
      for (const auto& r : rows) failed += r.failed ? 1 : 0;
      if (failed > 0) std::cerr << failed << " solver rows failed\n";
    } else if (complete->parsed()) {
      const auto obs = load_observed(input_path, bits_flag);
      const auto reference = load_reference(reference_path);
      const auto result = mcq::run_mc_grsbl(obs, to_config(solver_flags), reference ? &*reference : nullptr);
      emit(output_path, mcq::io::to_json(result).dump());
    } else if (lse->parsed()) {
      const auto obs = load_observed(input_path, bits_flag);
      mcq::Lse2dConfig cfg;
      cfg.solver = to_config(solver_flags);
      cfg.grid_size = grid;
      const auto result = mcq::run_lse2d(obs, cfg);
      json doc = mcq::io::to_json(result.estimate);
      doc["rank"] = result.rank;
      doc["degraded"] = result.degraded;
      doc["ill_conditioned"] = result.ill_conditioned;
      doc["Z_hat"] = mcq::io::matrix_to_json(result.z_hat);
      emit(output_path, doc.dump());
    } else if (gen->parsed()) {
      const double snr = snr_flag == "inf" ? mcq::kInf : std::stod(snr_flag);
      const int bits = parse_bits_flag(bits_flag);
      json truth;
      Eigen::MatrixXcd z;
      double sigma_z2 = 0.0;
      if (scenario == "lse2d") {
        auto draw = mcq::gen_line_spectral(gm, gn, gr, mcq::stream_seed(gseed, 1));
        z = draw.z;
        sigma_z2 = draw.sigma_z2;
        truth["scene"] = mcq::io::to_json(draw.scene);
      } else {
        auto draw = mcq::gen_random_lowrank(gm, gn, gr, mcq::stream_seed(gseed, 1));
        z = draw.z;
        sigma_z2 = draw.sigma_z2;
      }
      const auto omega = mcq::sample_omega(gm, gn, gp, mcq::stream_seed(gseed, 2));
      std::optional<mcq::QuantizerSpec> spec;
      if (bits > 0) spec = mcq::QuantizerSpec::uniform(bits, std::sqrt(sigma_z2));
      const auto obs = mcq::add_noise_and_quantize(z, sigma_z2, snr, spec, omega, mcq::stream_seed(gseed, 3));
      emit(output_path, mcq::io::to_json(obs).dump());
      if (!truth_path.empty()) {
        truth["Z"] = mcq::io::matrix_to_json(z);
        truth["sigma_z2"] = sigma_z2;
        truth["sigma2"] = mcq::noise_variance(sigma_z2, snr);
        mcq::io::write_file(truth_path, truth.dump() + "\n");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
