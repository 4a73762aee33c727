#include "mcq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcq {

QuantizerSpec QuantizerSpec::uniform(int bits, double sigma_z) {
  if (bits < 1 || bits > kMaxBits) {
    throw std::invalid_argument("quantizer bit depth must be in [1, 16], got " +
                                std::to_string(bits));
  }
  if (!(sigma_z > 0.0)) throw std::invalid_argument("quantizer sigma_z must be positive");

  const double half_range = 3.0 * sigma_z / std::numbers::sqrt2;
  const double step = 3.0 * sigma_z / std::pow(2.0, bits - 0.5);
  if (bits == 1) {
    // Per-component RMS codewords; only the codeword baseline reads them.
    const double c = sigma_z / std::numbers::sqrt2;
    return QuantizerSpec(1, sigma_z, {0.0}, {-c, c}, step);
  }

  const int levels = 1 << bits;
  std::vector<double> t(static_cast<std::size_t>(levels - 1));
  std::vector<double> w(static_cast<std::size_t>(levels));
  for (int b = 0; b < levels; ++b) {
    w[b] = -half_range + (b + 0.5) * step;
    if (b > 0) t[b - 1] = -half_range + b * step;
  }
  // Centre threshold exactly zero regardless of rounding.
  t[static_cast<std::size_t>(levels / 2 - 1)] = 0.0;
  return QuantizerSpec(bits, sigma_z, std::move(t), std::move(w), step);
}

QuantizerSpec::QuantizerSpec(int bits, double sigma_z, std::vector<double> thresholds,
                             std::vector<double> codewords, double step)
    : bits_(bits),
      sigma_z_(sigma_z),
      step_(step),
      thresholds_(std::move(thresholds)),
      codewords_(std::move(codewords)) {
  if (bits_ < 1 || bits_ > kMaxBits) throw std::invalid_argument("bad bit depth");
  const auto levels = static_cast<std::size_t>(1) << bits_;
  if (thresholds_.size() + 1 != levels || codewords_.size() != levels) {
    throw std::invalid_argument("quantizer needs 2^B - 1 thresholds and 2^B codewords");
  }
  for (std::size_t i = 1; i < thresholds_.size(); ++i) {
    if (!(thresholds_[i - 1] < thresholds_[i])) {
      throw std::invalid_argument("quantizer thresholds must be strictly increasing");
    }
  }
}

int QuantizerSpec::quantize(double a) const {
  const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), a);
  return static_cast<int>(it - thresholds_.begin());
}

GaussInterval QuantizerSpec::interval(int b) const {
  if (b < 0 || b >= levels()) throw std::out_of_range("bin index out of range");
  GaussInterval out;
  if (b > 0) out.lo = thresholds_[static_cast<std::size_t>(b - 1)];
  if (b < levels() - 1) out.hi = thresholds_[static_cast<std::size_t>(b)];
  return out;
}

void ObservedMatrix::validate() const {
  const int levels = quantizer ? quantizer->levels() : 0;
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= n) {
      throw std::invalid_argument("observed entry index out of range");
    }
    if (quantizer && (e.re_bin < 0 || e.re_bin >= levels || e.im_bin < 0 || e.im_bin >= levels)) {
      throw std::invalid_argument("observed entry bin out of range");
    }
  }
}

ObservedMatrix quantize_complex_matrix(const Eigen::MatrixXcd& w, const IndexSet& omega,
                                       const QuantizerSpec& spec) {
  ObservedMatrix out;
  out.m = w.rows();
  out.n = w.cols();
  out.sigma_z = spec.sigma_z();
  out.quantizer = spec;
  out.entries.reserve(omega.size());
  for (const auto& [i, j] : omega) {
    ObservedEntry e;
    e.row = i;
    e.col = j;
    e.re_bin = spec.quantize(w(i, j).real());
    e.im_bin = spec.quantize(w(i, j).imag());
    e.value = cd(spec.codeword(e.re_bin), spec.codeword(e.im_bin));
    out.entries.push_back(e);
  }
  return out;
}

ObservedMatrix observe_unquantized(const Eigen::MatrixXcd& w, const IndexSet& omega,
                                   double sigma_z) {
  ObservedMatrix out;
  out.m = w.rows();
  out.n = w.cols();
  out.sigma_z = sigma_z;
  out.entries.reserve(omega.size());
  for (const auto& [i, j] : omega) {
    ObservedEntry e;
    e.row = i;
    e.col = j;
    e.value = w(i, j);
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace mcq
