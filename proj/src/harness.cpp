#include "mcq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "mcq/metrics.hpp"
#include "mcq/numerics.hpp"
#include "mcq/vsbl.hpp"

namespace mcq {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) { return splitmix64(seed ^ trial); }

std::uint64_t stream_seed(std::uint64_t trial_seed, std::uint64_t stream) {
  return splitmix64(trial_seed + stream);
}

namespace {

enum Stream : std::uint64_t { kScene = 1, kOmega = 2, kNoise = 3, kSolver = 4 };

cd complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  const double re = gauss(rng);
  return {re, gauss(rng)};
}

}  // namespace

LowRankDraw gen_random_lowrank(Index m, Index n, int r, std::uint64_t seed) {
  if (r < 1 || r > std::min(m, n)) throw std::invalid_argument("rank must satisfy 1 <= r <= min(m, n)");
  std::mt19937_64 rng(seed);
  MatrixXcd u(m, r);
  MatrixXcd v(n, r);
  for (Index c = 0; c < r; ++c) {
    for (Index i = 0; i < m; ++i) u(i, c) = complex_normal(rng);
    for (Index j = 0; j < n; ++j) v(j, c) = complex_normal(rng);
  }
  return {u * v.adjoint(), static_cast<double>(r)};
}

namespace {

bool well_separated(const std::vector<double>& f, double min_sep) {
  for (std::size_t a = 0; a < f.size(); ++a) {
    for (std::size_t b = a + 1; b < f.size(); ++b) {
      if (std::abs(numerics::wrap_angle(f[a] - f[b])) < min_sep) return false;
    }
  }
  return true;
}

std::vector<double> draw_frequencies(int r, double min_sep, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::vector<double> f(static_cast<std::size_t>(r));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (auto& x : f) x = angle(rng);
    if (well_separated(f, min_sep)) return f;
  }
  throw std::runtime_error("could not draw separated frequencies in 1e4 attempts");
}

}  // namespace

LineSpectralDraw gen_line_spectral(Index m, Index n, int r, std::uint64_t seed, double min_sep) {
  if (r < 1 || r > std::min(m, n)) throw std::invalid_argument("order must satisfy 1 <= r <= min(m, n)");
  if (!(min_sep > 0.0)) min_sep = 2.0 * 2.0 * std::numbers::pi / static_cast<double>(std::max(m, n));
  if (r * min_sep >= 2.0 * std::numbers::pi) {
    throw std::invalid_argument("r * min_sep must be below 2 pi");
  }
  std::mt19937_64 rng(seed);
  LineSpectralDraw out;
  out.scene.m = m;
  out.scene.n = n;
  out.scene.theta = draw_frequencies(r, min_sep, rng);
  out.scene.phi = draw_frequencies(r, min_sep, rng);
  std::normal_distribution<double> magnitude(1.0, std::sqrt(0.2));
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < r; ++i) {
    double a = magnitude(rng);
    while (!(a > 0.0)) a = magnitude(rng);
    out.scene.g.push_back(std::polar(a, phase(rng)));
  }
  out.z = out.scene.synthesize();
  out.sigma_z2 = static_cast<double>(r);
  return out;
}

IndexSet sample_omega(Index m, Index n, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  const Index total = m * n;
  const auto count = static_cast<Index>(std::llround(p * static_cast<double>(total)));
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index a = 0; a < count; ++a) {
    std::uniform_int_distribution<Index> pick(a, total - 1);
    std::swap(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  IndexSet omega;
  omega.reserve(idx.size());
  for (Index e : idx) omega.emplace_back(e / n, e % n);
  return omega;
}

double noise_variance(double sigma_z2, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
  return sigma_z2 * std::pow(10.0, -snr_db / 10.0);
}

VectorXcd unit_noise(const IndexSet& omega, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VectorXcd out(static_cast<Index>(omega.size()));
  for (Index e = 0; e < out.size(); ++e) out(e) = complex_normal(rng);
  return out;
}

ObservedMatrix observe(const MatrixXcd& z, double sigma_z2, double sigma2,
                       const std::optional<QuantizerSpec>& spec, const IndexSet& omega,
                       const VectorXcd& unit) {
  if (unit.size() != static_cast<Index>(omega.size())) {
    throw std::invalid_argument("noise must align with omega");
  }
  MatrixXcd w = z;
  const double sigma = std::sqrt(sigma2);
  for (std::size_t e = 0; e < omega.size(); ++e) {
    const auto [i, j] = omega[e];
    w(i, j) += sigma * unit(static_cast<Index>(e));
  }
  if (spec) return quantize_complex_matrix(w, omega, *spec);
  return observe_unquantized(w, omega, std::sqrt(sigma_z2));
}

ObservedMatrix add_noise_and_quantize(const MatrixXcd& z, double sigma_z2, double snr_db,
                                      const std::optional<QuantizerSpec>& spec,
                                      const IndexSet& omega, std::uint64_t seed) {
  return observe(z, sigma_z2, noise_variance(sigma_z2, snr_db), spec, omega,
                 unit_noise(omega, seed));
}

int ExperimentConfig::effective_k() const {
  if (k > 0) return k;
  return std::max(1, std::min(2 * r, std::min(m, n) / 2));
}

void ExperimentConfig::validate() const {
  if (m < 2 || n < 2) throw std::invalid_argument("m and n must be at least 2");
  if (r < 1 || r > std::min(m, n)) throw std::invalid_argument("r must satisfy 1 <= r <= min(m, n)");
  if (k < 0) throw std::invalid_argument("k must be non-negative");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (snr_db.empty() || bits.empty()) throw std::invalid_argument("snr_db and bits must be non-empty");
  for (double s : snr_db) {
    if (std::isnan(s) || s == -kInf) throw std::invalid_argument("invalid SNR");
  }
  for (int b : bits) {
    if (b < 0 || b > QuantizerSpec::kMaxBits) throw std::invalid_argument("bits must be in [1, 16] or inf");
  }
  if (t_outer < 1) throw std::invalid_argument("t_outer must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must be in (0, 1]");
}

std::string to_string(Scenario s) { return s == Scenario::kLse2d ? "lse2d" : "random-lowrank"; }

namespace {

double parse_snr(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "infinity") return kInf;
    throw std::invalid_argument("SNR must be a number or \"inf\"");
  }
  return j.get<double>();
}

int parse_bits(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "infinity") return 0;
    throw std::invalid_argument("bit depth must be an integer or \"inf\"");
  }
  const int b = j.get<int>();
  if (b < 1) throw std::invalid_argument("bit depth must be at least 1");
  return b;
}

template <class F>
auto as_list(const json& j, F parse) {
  std::vector<decltype(parse(j))> out;
  if (j.is_array()) {
    for (const auto& x : j) out.push_back(parse(x));
  } else {
    out.push_back(parse(j));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "scenario") {
        const auto s = value.get<std::string>();
        if (s == "random-lowrank") {
          cfg.scenario = Scenario::kRandomLowRank;
        } else if (s == "lse2d") {
          cfg.scenario = Scenario::kLse2d;
        } else {
          throw std::invalid_argument("unknown scenario '" + s + "'");
        }
      } else if (key == "m") {
        cfg.m = value.get<int>();
      } else if (key == "n") {
        cfg.n = value.get<int>();
      } else if (key == "r") {
        cfg.r = value.get<int>();
      } else if (key == "k") {
        cfg.k = value.get<int>();
      } else if (key == "p") {
        cfg.p = value.get<double>();
      } else if (key == "snr_db") {
        cfg.snr_db = as_list(value, parse_snr);
      } else if (key == "bits") {
        cfg.bits = as_list(value, parse_bits);
      } else if (key == "trials") {
        cfg.trials = value.get<int>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "t_outer") {
        cfg.t_outer = value.get<int>();
      } else if (key == "damping") {
        cfg.damping = value.get<double>();
      } else if (key == "learn_noise") {
        if (value.is_boolean()) {
          cfg.learn_noise = value.get<bool>() ? NoiseLearning::kOn : NoiseLearning::kOff;
        } else if (value.is_string() && value.get<std::string>() == "auto") {
          cfg.learn_noise = NoiseLearning::kAuto;
        } else {
          throw std::invalid_argument("learn_noise must be true, false or \"auto\"");
        }
      } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    }
  } catch (const json::type_error& e) {
    throw std::invalid_argument(std::string("config value has the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

MetricRow base_row(const ExperimentConfig& cfg, double snr_db, int bits, int trial,
                   const char* solver) {
  MetricRow row;
  row.scenario = cfg.scenario;
  row.m = cfg.m;
  row.n = cfg.n;
  row.r = cfg.r;
  row.k = cfg.effective_k();
  row.p = cfg.p;
  row.snr_db = snr_db;
  row.bits = bits;
  row.trial = trial;
  row.solver = solver;
  return row;
}

void fill_errors(MetricRow& row, const MatrixXcd& z_hat, const MatrixXcd& z) {
  row.nmse_db = nmse_db(z_hat, z);
  row.debiased_nmse_db = debiased_nmse_db(z_hat, z);
}

std::vector<const char*> solvers_for(Scenario s) {
  if (s == Scenario::kLse2d) return {"mc-gr-sbl", "vsbl", "mc-gr-sbl-music"};
  return {"mc-gr-sbl", "vsbl"};
}

}  // namespace

std::vector<MetricRow> run_trial(const ExperimentConfig& cfg, double snr_db, int bits, int trial) {
  const std::uint64_t ts = trial_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  std::vector<MetricRow> rows;
  for (const char* name : solvers_for(cfg.scenario)) rows.push_back(base_row(cfg, snr_db, bits, trial, name));

  try {
    MatrixXcd z;
    double sigma_z2 = 0.0;
    LineSpectralScene truth;
    if (cfg.scenario == Scenario::kLse2d) {
      auto draw = gen_line_spectral(cfg.m, cfg.n, cfg.r, stream_seed(ts, kScene));
      z = std::move(draw.z);
      sigma_z2 = draw.sigma_z2;
      truth = std::move(draw.scene);
    } else {
      auto draw = gen_random_lowrank(cfg.m, cfg.n, cfg.r, stream_seed(ts, kScene));
      z = std::move(draw.z);
      sigma_z2 = draw.sigma_z2;
    }
    const IndexSet omega = sample_omega(cfg.m, cfg.n, cfg.p, stream_seed(ts, kOmega));
    const double sigma2 = noise_variance(sigma_z2, snr_db);
    std::optional<QuantizerSpec> spec;
    if (bits > 0) spec = QuantizerSpec::uniform(bits, std::sqrt(sigma_z2));
    const ObservedMatrix obs = observe(z, sigma_z2, sigma2, spec, omega, unit_noise(omega, stream_seed(ts, kNoise)));

    GrSblConfig solver;
    solver.t_outer = cfg.t_outer;
    solver.k = cfg.effective_k();
    solver.learn_noise = cfg.learn_noise;
    solver.damping = cfg.damping;
    solver.sigma2_init = std::max(sigma2, solver.bounds.floor);
    solver.seed = stream_seed(ts, kSolver);

    auto start = std::chrono::steady_clock::now();
    const GrSblResult gr = run_mc_grsbl(obs, solver, &z);
    rows[0].wall_ms = elapsed_ms(start);
    fill_errors(rows[0], gr.z_hat, z);
    rows[0].rank_correct = gr.rank == cfg.r;
    rows[0].iters = gr.iterations;
    rows[0].nmse_trace = gr.nmse_trace;

    // Baseline: codewords treated as linear data with the channel noise level.
    const double baseline_var = std::max(sigma2, solver.bounds.floor);
    VsblOptions vo;
    vo.k = solver.k;
    vo.seed = solver.seed;
    start = std::chrono::steady_clock::now();
    const VsblResult vs = vsbl_solve(as_linear_observations(obs, baseline_var), vo);
    rows[1].wall_ms = elapsed_ms(start);
    fill_errors(rows[1], vs.state.mean_z(), z);
    rows[1].rank_correct = vs.rank == cfg.r;
    rows[1].iters = vs.iterations;

    if (cfg.scenario == Scenario::kLse2d) {
      start = std::chrono::steady_clock::now();
      const Lse2dResult music = lse2d_from_factors(gr);
      rows[2].wall_ms = rows[0].wall_ms + elapsed_ms(start);
      fill_errors(rows[2], music.z_hat, z);
      rows[2].rank_correct = music.rank == cfg.r;
      rows[2].iters = gr.iterations;
      if (rows[2].rank_correct) {
        const auto assign = match_frequencies(music.estimate.theta, music.estimate.phi, truth.theta, truth.phi);
        rows[2].mse_theta_db = mse_freq_db(music.estimate.theta, truth.theta, assign);
        rows[2].mse_phi_db = mse_freq_db(music.estimate.phi, truth.phi, assign);
      }
    }
  } catch (const std::exception& e) {
    for (auto& row : rows) {
      row.failed = true;
      row.error = e.what();
      row.nmse_db = std::numeric_limits<double>::quiet_NaN();
      row.debiased_nmse_db = std::numeric_limits<double>::quiet_NaN();
      row.rank_correct = false;
      row.mse_theta_db.reset();
      row.mse_phi_db.reset();
    }
  }
  return rows;
}

std::vector<MetricRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  struct Job {
    double snr;
    int bits;
    int trial;
  };
  std::vector<Job> jobs;
  for (double snr : cfg.snr_db) {
    for (int b : cfg.bits) {
      for (int t = 0; t < cfg.trials; ++t) jobs.push_back({snr, b, t});
    }
  }
  std::vector<std::vector<MetricRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t idx = next++; idx < jobs.size(); idx = next++) {
      const Job& job = jobs[idx];
      results[idx] = run_trial(cfg, job.snr, job.bits, job.trial);
      if (!options.timing) {
        for (auto& row : results[idx]) row.wall_ms = 0.0;
      }
      const std::size_t finished = ++done;
      if (options.progress) {
        const std::lock_guard<std::mutex> lock(progress_mutex);
        options.progress(finished, jobs.size());
      }
    }
  };
  const int width = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < width; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<MetricRow> rows;
  for (auto& r : results) {
    for (auto& row : r) rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string format_number(double x, const char* fmt = "%.6f") {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string format_bits(int bits) { return bits > 0 ? std::to_string(bits) : "inf"; }

}  // namespace

void write_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& row : rows) {
    os << to_string(row.scenario) << ',' << row.m << ',' << row.n << ',' << row.r << ',' << row.k
       << ',' << format_number(row.p, "%g") << ',' << format_number(row.snr_db, "%g") << ','
       << format_bits(row.bits) << ',' << row.trial << ',' << row.solver << ','
       << format_number(row.nmse_db) << ',' << format_number(row.debiased_nmse_db) << ','
       << (row.rank_correct ? 1 : 0) << ','
       << (row.mse_theta_db ? format_number(*row.mse_theta_db) : "nan") << ','
       << (row.mse_phi_db ? format_number(*row.mse_phi_db) : "nan") << ',' << row.iters << ','
       << format_number(row.wall_ms, "%.3f") << '\n';
  }
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double x) { return std::isnan(x); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

namespace {

json number_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace

std::string summarize_json(const ExperimentConfig& cfg, const std::vector<MetricRow>& rows) {
  json groups = json::array();
  for (double snr : cfg.snr_db) {
    for (int b : cfg.bits) {
      for (const char* solver : solvers_for(cfg.scenario)) {
        std::vector<double> nmse, debiased, theta, phi;
        int count = 0, failed = 0, correct = 0;
        for (const auto& row : rows) {
          if (row.snr_db != snr || row.bits != b || row.solver != solver) continue;
          ++count;
          if (row.failed) {
            ++failed;
            continue;
          }
          nmse.push_back(row.nmse_db);
          debiased.push_back(row.debiased_nmse_db);
          correct += row.rank_correct ? 1 : 0;
          if (row.mse_theta_db) theta.push_back(*row.mse_theta_db);
          if (row.mse_phi_db) phi.push_back(*row.mse_phi_db);
        }
        json g;
        g["snr_db"] = number_or_null(snr);
        g["bits"] = b > 0 ? json(b) : json("inf");
        g["solver"] = solver;
        g["trials"] = count;
        g["failed"] = failed;
        g["median_nmse_db"] = number_or_null(median(nmse));
        g["median_debiased_nmse_db"] = number_or_null(median(debiased));
        g["rank_correct_rate"] = count > failed ? json(static_cast<double>(correct) / (count - failed)) : json(nullptr);
        if (cfg.scenario == Scenario::kLse2d) {
          g["median_mse_theta_db"] = number_or_null(median(theta));
          g["median_mse_phi_db"] = number_or_null(median(phi));
        }
        groups.push_back(std::move(g));
      }
    }
  }
  json doc;
  doc["scenario"] = to_string(cfg.scenario);
  doc["m"] = cfg.m;
  doc["n"] = cfg.n;
  doc["r"] = cfg.r;
  doc["k"] = cfg.effective_k();
  doc["p"] = cfg.p;
  doc["trials"] = cfg.trials;
  doc["seed"] = cfg.seed;
  if (cfg.scenario == Scenario::kLse2d) {
    doc["amplitude_magnitude_law"] = "real normal, mean 1, variance 0.2, truncated to positive";
  }
  doc["groups"] = std::move(groups);
  return doc.dump(2);
}

}  // namespace mcq
