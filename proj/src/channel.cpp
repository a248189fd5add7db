#include "ris/channel.hpp"

#include <cmath>
#include <json.hpp>

#include "ris/rng.hpp"

namespace ris {

namespace {

using nlohmann::json;

void require(bool ok, const char* field, const char* why) {
  if (!ok) throw std::invalid_argument(std::string("scenario: ") + field + " " + why);
}

// sqrt(kappa/(1+kappa)) * ones + sqrt(1/(1+kappa)) * fading, scaled by amplitude
Mat rician(double amplitude, double kappa, int rows, int cols, std::uint64_t seed) {
  Mat nlos = complex_gaussian(rows, cols, seed);
  double los_w = std::sqrt(kappa / (1.0 + kappa));
  double nlos_w = std::sqrt(1.0 / (1.0 + kappa));
  return amplitude * (los_w * Mat::Ones(rows, cols) + nlos_w * nlos);
}

}  // namespace

void Scenario::validate() const {
  require(n_t >= 1, "n_t", "must be at least 1");
  require(n_s >= 1, "n_s", "must be at least 1");
  require(n_r >= 1, "n_r", "must be at least 1");
  require(group_size >= 1 && n_s % group_size == 0, "group_size", "must divide n_s");
  require(d_d > 0, "d_d", "must be positive");
  require(d_f > 0, "d_f", "must be positive");
  require(d_b > 0, "d_b", "must be positive");
  require(kappa_d >= 0, "kappa_d", "must be nonnegative");
  require(kappa_f >= 0, "kappa_f", "must be nonnegative");
  require(kappa_b >= 0, "kappa_b", "must be nonnegative");
}

double pathloss(double d, double gamma, double lambda0_db) {
  if (d <= 0) throw std::invalid_argument("pathloss: distance must be positive");
  return std::pow(10.0, lambda0_db / 10.0) * std::pow(d, -gamma);
}

ChannelSet sample_channels(const Scenario& sc) {
  sc.validate();
  double amp_d = std::sqrt(pathloss(sc.d_d, sc.gamma_d, sc.lambda0_db));
  double amp_b = std::sqrt(pathloss(sc.d_b, sc.gamma_b, sc.lambda0_db));
  double amp_f = std::sqrt(pathloss(sc.d_f, sc.gamma_f, sc.lambda0_db));
  ChannelSet ch;
  ch.h_d = rician(amp_d, sc.kappa_d, sc.n_r, sc.n_t, derive_seed(sc.seed, Stream::direct));
  ch.h_b = rician(amp_b, sc.kappa_b, sc.n_r, sc.n_s, derive_seed(sc.seed, Stream::backward));
  ch.h_f = rician(amp_f, sc.kappa_f, sc.n_s, sc.n_t, derive_seed(sc.seed, Stream::forward));
  return ch;
}

Mat assemble(const ChannelSet& ch, const BlockUnitary& theta) {
  const int n_s = static_cast<int>(ch.h_b.cols());
  if (ch.h_f.rows() != n_s || theta.dim() != n_s)
    throw std::invalid_argument("assemble: surface dimension mismatch");
  if (ch.h_d.rows() != ch.h_b.rows() || ch.h_d.cols() != ch.h_f.cols())
    throw std::invalid_argument("assemble: direct channel shape mismatch");
  const int L = theta.group_size;
  Mat h = ch.h_d;
  for (int g = 0; g < theta.groups(); ++g)
    h += ch.h_b.middleCols(g * L, L) * theta.blocks[g] * ch.h_f.middleRows(g * L, L);
  return h;
}

ChannelSet perturb(const ChannelSet& ch, double epsilon, double lambda_b, double lambda_f,
                   std::uint64_t seed) {
  if (epsilon < 0) throw std::invalid_argument("perturb: epsilon must be nonnegative");
  if (epsilon == 0) return ch;
  double dev = std::sqrt(epsilon * lambda_b * lambda_f);
  std::uint64_t base = derive_seed(seed, Stream::estimation_error);
  ChannelSet out = ch;
  out.h_b += dev * complex_gaussian(static_cast<int>(ch.h_b.rows()),
                                    static_cast<int>(ch.h_b.cols()),
                                    derive_seed(base, Stream::backward));
  out.h_f += dev * complex_gaussian(static_cast<int>(ch.h_f.rows()),
                                    static_cast<int>(ch.h_f.cols()),
                                    derive_seed(base, Stream::forward));
  return out;
}

std::pair<Mat, Mat> group_slice(const ChannelSet& ch, int g, int L) {
  const int n_s = static_cast<int>(ch.h_b.cols());
  if (L < 1 || n_s % L != 0 || ch.h_f.rows() != n_s)
    throw std::invalid_argument("group_slice: group size must divide the surface dimension");
  if (g < 1 || g > n_s / L) throw std::out_of_range("group_slice: group index out of range");
  return {ch.h_b.middleCols((g - 1) * L, L), ch.h_f.middleRows((g - 1) * L, L)};
}

namespace {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Mat matrix_from_json(const json& j) {
  Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  const json& data = j.at("data");
  for (int i = 0; i < m.rows(); ++i)
    for (int jj = 0; jj < m.cols(); ++jj)
      m(i, jj) = cxd(data.at(i).at(jj).at(0).get<double>(), data.at(i).at(jj).at(1).get<double>());
  return m;
}

}  // namespace

std::string channel_to_json(const ChannelSet& ch) {
  json j{{"h_d", matrix_to_json(ch.h_d)},
         {"h_b", matrix_to_json(ch.h_b)},
         {"h_f", matrix_to_json(ch.h_f)}};
  return j.dump();
}

ChannelSet channel_from_json(const std::string& text) {
  json j = json::parse(text);
  return {matrix_from_json(j.at("h_d")), matrix_from_json(j.at("h_b")),
          matrix_from_json(j.at("h_f"))};
}

}  // namespace ris
