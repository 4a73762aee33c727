#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcq/numerics.hpp"

namespace mcq {

// Scalar quantizer Q(.) with 2^B cells [t_b, t_{b+1}), t_0 = -inf and
// t_{2^B} = +inf. Real and imaginary parts are quantized separately.
class QuantizerSpec {
 public:
  static constexpr int kMaxBits = 16;

  // Zero-threshold sign quantizer for B = 1; uniform mid-rise quantizer with
  // step 3 sigma_z / 2^(B - 0.5) over [-3 sigma_z / sqrt 2, 3 sigma_z / sqrt 2]
  // for B >= 2.
  static QuantizerSpec uniform(int bits, double sigma_z);

  // Arbitrary thresholds (strictly increasing, 2^B - 1 of them) and codewords.
  QuantizerSpec(int bits, double sigma_z, std::vector<double> thresholds,
                std::vector<double> codewords, double step);

  int bits() const { return bits_; }
  int levels() const { return 1 << bits_; }
  double sigma_z() const { return sigma_z_; }
  double step() const { return step_; }
  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::vector<double>& codewords() const { return codewords_; }

  // Bin index b with a in [t_b, t_{b+1}).
  int quantize(double a) const;

  // [t_b, t_{b+1}); throws std::out_of_range for b outside [0, 2^B).
  GaussInterval interval(int b) const;

  double codeword(int b) const { return codewords_.at(static_cast<std::size_t>(b)); }

 private:
  int bits_;
  double sigma_z_;
  double step_;
  std::vector<double> thresholds_;
  std::vector<double> codewords_;
};

inline QuantizerSpec build_uniform_quantizer(int bits, double sigma_z) {
  return QuantizerSpec::uniform(bits, sigma_z);
}

inline int quantize_real(double a, const QuantizerSpec& spec) { return spec.quantize(a); }

inline GaussInterval bin_interval(int b, const QuantizerSpec& spec) { return spec.interval(b); }

struct ObservedEntry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  int re_bin = 0;
  int im_bin = 0;
  // Codeword omega_re + j omega_im for quantized data, the raw measurement for
  // the identity channel.
  cd value{0.0, 0.0};
};

// Partially observed measurements Y_Omega. When `quantizer` is empty the
// channel is the identity (unquantized) and `value` carries the data.
struct ObservedMatrix {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  double sigma_z = 1.0;
  std::optional<QuantizerSpec> quantizer;
  std::vector<ObservedEntry> entries;

  bool quantized() const { return quantizer.has_value(); }
  int bits() const { return quantizer ? quantizer->bits() : 0; }
  std::size_t size() const { return entries.size(); }

  // Throws std::invalid_argument on out-of-range indices or bins.
  void validate() const;
};

using IndexSet = std::vector<std::pair<Eigen::Index, Eigen::Index>>;

ObservedMatrix quantize_complex_matrix(const Eigen::MatrixXcd& w, const IndexSet& omega,
                                       const QuantizerSpec& spec);

// Identity-channel observation of w on omega.
ObservedMatrix observe_unquantized(const Eigen::MatrixXcd& w, const IndexSet& omega,
                                   double sigma_z);

}  // namespace mcq
