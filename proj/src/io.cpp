#include "mcq/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mcq::io {

using Eigen::Index;

json to_json(const ObservedMatrix& obs) {
  json entries = json::array();
  for (const auto& e : obs.entries) {
    if (obs.quantizer) {
      entries.push_back({e.row, e.col, e.re_bin, e.im_bin});
    } else {
      entries.push_back({e.row, e.col, e.value.real(), e.value.imag()});
    }
  }
  return {{"m", obs.m}, {"n", obs.n}, {"B", obs.bits()}, {"sigma_z", obs.sigma_z},
          {"entries", std::move(entries)}};
}

ObservedMatrix observed_from_json(const json& j) {
  ObservedMatrix obs;
  obs.m = j.at("m").get<Index>();
  obs.n = j.at("n").get<Index>();
  obs.sigma_z = j.at("sigma_z").get<double>();
  const int bits = j.at("B").get<int>();
  if (bits > 0) obs.quantizer = QuantizerSpec::uniform(bits, obs.sigma_z);
  for (const auto& row : j.at("entries")) {
    if (!row.is_array() || row.size() != 4) {
      throw std::invalid_argument("each entry must be [i, j, re, im]");
    }
    ObservedEntry e;
    e.row = row[0].get<Index>();
    e.col = row[1].get<Index>();
    if (obs.quantizer) {
      if (!row[2].is_number_integer() || !row[3].is_number_integer()) {
        throw std::invalid_argument("quantized entries carry integer bin indices");
      }
      e.re_bin = row[2].get<int>();
      e.im_bin = row[3].get<int>();
      if (e.re_bin < 0 || e.re_bin >= obs.quantizer->levels() || e.im_bin < 0 ||
          e.im_bin >= obs.quantizer->levels()) {
        throw std::invalid_argument("bin index out of range");
      }
      e.value = cd(obs.quantizer->codeword(e.re_bin), obs.quantizer->codeword(e.im_bin));
    } else {
      e.value = cd(row[2].get<double>(), row[3].get<double>());
    }
    obs.entries.push_back(e);
  }
  obs.validate();
  return obs;
}

json matrix_to_json(const Eigen::MatrixXcd& z) {
  json re = json::array();
  json im = json::array();
  for (Index i = 0; i < z.rows(); ++i) {
    json rr = json::array();
    json ri = json::array();
    for (Index c = 0; c < z.cols(); ++c) {
      rr.push_back(z(i, c).real());
      ri.push_back(z(i, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"re", std::move(re)}, {"im", std::move(im)}};
}

Eigen::MatrixXcd matrix_from_json(const json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const auto rows = static_cast<Index>(re.size());
  if (static_cast<Index>(im.size()) != rows) throw std::invalid_argument("re/im row count differs");
  const Index cols = rows > 0 ? static_cast<Index>(re[0].size()) : 0;
  Eigen::MatrixXcd z(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& rr = re[static_cast<std::size_t>(i)];
    const auto& ri = im[static_cast<std::size_t>(i)];
    if (static_cast<Index>(rr.size()) != cols || static_cast<Index>(ri.size()) != cols) {
      throw std::invalid_argument("ragged matrix");
    }
    for (Index c = 0; c < cols; ++c) {
      z(i, c) = cd(rr[static_cast<std::size_t>(c)].get<double>(), ri[static_cast<std::size_t>(c)].get<double>());
    }
  }
  return z;
}

json to_json(const GrSblResult& result) {
  return {{"Z_hat", matrix_to_json(result.z_hat)},
          {"rank", result.rank},
          {"gamma", std::vector<double>(result.gamma.data(), result.gamma.data() + result.gamma.size())},
          {"sigma2", result.sigma2},
          {"nmse_trace", result.nmse_trace},
          {"iterations", result.iterations}};
}

json to_json(const LineSpectralScene& scene) {
  std::vector<double> g_re, g_im;
  for (const auto& g : scene.g) {
    g_re.push_back(g.real());
    g_im.push_back(g.imag());
  }
  return {{"m", scene.m}, {"n", scene.n}, {"r", scene.order()}, {"theta", scene.theta},
          {"phi", scene.phi}, {"g_re", g_re}, {"g_im", g_im}};
}

LineSpectralScene scene_from_json(const json& j) {
  LineSpectralScene s;
  s.m = j.value("m", Index{0});
  s.n = j.value("n", Index{0});
  s.theta = j.at("theta").get<std::vector<double>>();
  s.phi = j.at("phi").get<std::vector<double>>();
  const auto g_re = j.at("g_re").get<std::vector<double>>();
  const auto g_im = j.at("g_im").get<std::vector<double>>();
  const std::size_t r = s.theta.size();
  if (s.phi.size() != r || g_re.size() != r || g_im.size() != r) {
    throw std::invalid_argument("scene arrays must share one length");
  }
  if (j.contains("r") && j.at("r").get<std::size_t>() != r) {
    throw std::invalid_argument("scene order does not match array length");
  }
  for (std::size_t i = 0; i < r; ++i) s.g.emplace_back(g_re[i], g_im[i]);
  return s;
}

json to_json(const FactorState& state) {
  json su = json::array();
  json sv = json::array();
  for (const auto& s : state.sigma_u) su.push_back(matrix_to_json(s));
  for (const auto& s : state.sigma_v) sv.push_back(matrix_to_json(s));
  return {{"m", state.m},
          {"n", state.n},
          {"k", state.k},
          {"u", matrix_to_json(state.u)},
          {"v", matrix_to_json(state.v)},
          {"sigma_u", std::move(su)},
          {"sigma_v", std::move(sv)},
          {"gamma", std::vector<double>(state.gamma.data(), state.gamma.data() + state.gamma.size())}};
}

FactorState factors_from_json(const json& j) {
  FactorState s;
  s.m = j.at("m").get<Index>();
  s.n = j.at("n").get<Index>();
  s.k = j.at("k").get<Index>();
  s.u = matrix_from_json(j.at("u"));
  s.v = matrix_from_json(j.at("v"));
  for (const auto& x : j.at("sigma_u")) s.sigma_u.push_back(matrix_from_json(x));
  for (const auto& x : j.at("sigma_v")) s.sigma_v.push_back(matrix_from_json(x));
  const auto gamma = j.at("gamma").get<std::vector<double>>();
  s.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Index>(gamma.size()));
  if (s.u.rows() != s.m || s.u.cols() != s.k || s.v.rows() != s.n || s.v.cols() != s.k ||
      static_cast<Index>(s.sigma_u.size()) != s.m || static_cast<Index>(s.sigma_v.size()) != s.n ||
      s.gamma.size() != s.k) {
    throw std::invalid_argument("factor snapshot has inconsistent dimensions");
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace mcq::io
