#include "misfit/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "misfit/csv.hpp"
#include "misfit/errors.hpp"
#include "misfit/rng.hpp"

namespace misfit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2Pi = 1.8378770664093454836;

// Noise scales of the generators: 1D modes have variance 9; the 2D
// pre-rotation covariance is diag(300, 20) and the mode shift is +-15 on the
// second coordinate.
constexpr double kSigma1d = 3.0;
constexpr double kModeShift1d = 50.0;
constexpr double kVar2dA = 300.0;
constexpr double kVar2dB = 20.0;
constexpr double kModeShift2d = 15.0;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double log_normal_pdf(double y, double mu, double var) {
  const double d = y - mu;
  return -0.5 * d * d / var - 0.5 * std::log(var) - 0.5 * kLog2Pi;
}

double log_sum_exp(double a, double b) {
  const double m = a > b ? a : b;
  if (!std::isfinite(m)) return m;
  return m + std::log1p(std::exp((a < b ? a : b) - m));
}

// Rotation applied to the centered 2D offsets: u -> (c u0 + s u1,
// -s u0 + c u1) with c = s = 1/sqrt(2). Chosen so the total covariance comes
// out [[272.5, -27.5], [-27.5, 272.5]].
void rotate2(double u0, double u1, double* out) {
  out[0] = kInvSqrt2 * (u0 + u1);
  out[1] = kInvSqrt2 * (u1 - u0);
}

double log_bivariate_normal(const double* y, const double* mu, double s11,
                            double s12, double s22) {
  const double det = s11 * s22 - s12 * s12;
  const double d0 = y[0] - mu[0], d1 = y[1] - mu[1];
  const double quad = (s22 * d0 * d0 - 2.0 * s12 * d0 * d1 + s11 * d1 * d1) /
                      det;
  return -0.5 * quad - 0.5 * std::log(det) - kLog2Pi;
}

// Per-mode covariance of the rotated 2D mixture.
void mode_cov_2d(double* s11, double* s12, double* s22) {
  // R diag(a, b) R^T for the rotation above.
  *s11 = 0.5 * (kVar2dA + kVar2dB);
  *s22 = *s11;
  *s12 = 0.5 * (kVar2dB - kVar2dA);
}

void mode_means_2d(double x, double mode_sign, double* mu) {
  const double c = x * x * x;
  double off[2];
  rotate2(0.0, mode_sign * kModeShift2d, off);
  mu[0] = c + off[0];
  mu[1] = c + off[1];
}

}  // namespace

DatasetName dataset_from_string(const std::string& s) {
  if (s == "unimodal1d") return DatasetName::unimodal1d;
  if (s == "bimodal1d") return DatasetName::bimodal1d;
  if (s == "bimodal2d") return DatasetName::bimodal2d;
  throw UserError("unknown dataset '" + s +
                  "'; valid names: unimodal1d, bimodal1d, bimodal2d");
}

std::string to_string(DatasetName name) {
  switch (name) {
    case DatasetName::unimodal1d: return "unimodal1d";
    case DatasetName::bimodal1d: return "bimodal1d";
    case DatasetName::bimodal2d: return "bimodal2d";
  }
  return "?";
}

int dataset_y_dim(DatasetName name) {
  return name == DatasetName::bimodal2d ? 2 : 1;
}

double GroundTruth::log_pdf(double x, const double* y) const {
  const double c = x * x * x;
  switch (name) {
    case DatasetName::unimodal1d:
      return log_normal_pdf(y[0], c, kSigma1d * kSigma1d);
    case DatasetName::bimodal1d: {
      const double v = kSigma1d * kSigma1d;
      return log_sum_exp(log_normal_pdf(y[0], c - kModeShift1d, v),
                         log_normal_pdf(y[0], c + kModeShift1d, v)) -
             std::log(2.0);
    }
    case DatasetName::bimodal2d: {
      double s11, s12, s22, mu[2];
      mode_cov_2d(&s11, &s12, &s22);
      mode_means_2d(x, -1.0, mu);
      const double la = log_bivariate_normal(y, mu, s11, s12, s22);
      mode_means_2d(x, +1.0, mu);
      const double lb = log_bivariate_normal(y, mu, s11, s12, s22);
      return log_sum_exp(la, lb) - std::log(2.0);
    }
  }
  return 0.0;
}

double GroundTruth::log_pdf(double x, double y) const {
  return log_pdf(x, &y);
}

void GroundTruth::mean(double x, double* out) const {
  const double c = x * x * x;
  out[0] = c;
  if (name == DatasetName::bimodal2d) out[1] = c;
}

void GroundTruth::cov(double x, double* out) const {
  (void)x;
  switch (name) {
    case DatasetName::unimodal1d:
      out[0] = kSigma1d * kSigma1d;
      break;
    case DatasetName::bimodal1d:
      out[0] = mixture_variance();
      break;
    case DatasetName::bimodal2d: {
      // mode covariance plus the between-mode spread d d^T with
      // d = R (0, 15)^T
      double s11, s12, s22;
      mode_cov_2d(&s11, &s12, &s22);
      double d[2];
      rotate2(0.0, kModeShift2d, d);
      out[0] = s11 + d[0] * d[0];
      out[1] = s12 + d[0] * d[1];
      out[2] = s12 + d[0] * d[1];
      out[3] = s22 + d[1] * d[1];
      break;
    }
  }
}

double GroundTruth::mixture_variance() const {
  if (name != DatasetName::bimodal1d)
    throw UserError("mixture_variance is defined for bimodal1d only");
  return kSigma1d * kSigma1d + 0.25 * (2.0 * kModeShift1d) *
                                   (2.0 * kModeShift1d);
}

GroundTruth ground_truth(DatasetName name) { return GroundTruth{name}; }

namespace {

Dataset make_base(DatasetName name, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UserError("dataset size must be >= 1");
  Dataset ds;
  ds.name = name;
  ds.seed = seed;
  ds.n = n;
  ds.x_dim = 1;
  ds.y_dim = dataset_y_dim(name);
  ds.x.resize(n);
  ds.y.resize(n * ds.y_dim);
  return ds;
}

void fill_y(Dataset& ds, std::uint64_t seed) {
  CounterRng mode_rng(seed, streams::kMode);
  CounterRng noise_rng(seed, streams::kNoise);
  for (std::size_t i = 0; i < ds.n; ++i) {
    const double c = ds.x[i] * ds.x[i] * ds.x[i];
    switch (ds.name) {
      case DatasetName::unimodal1d:
        ds.y[i] = c + kSigma1d * noise_rng.normal();
        break;
      case DatasetName::bimodal1d: {
        const double m = mode_rng.uniform() < 0.5 ? -1.0 : 1.0;
        ds.y[i] = c + m * kModeShift1d + kSigma1d * noise_rng.normal();
        break;
      }
      case DatasetName::bimodal2d: {
        const double m = mode_rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double u0 = std::sqrt(kVar2dA) * noise_rng.normal();
        const double u1 = m * kModeShift2d +
                          std::sqrt(kVar2dB) * noise_rng.normal();
        double off[2];
        rotate2(u0, u1, off);
        ds.y[2 * i] = c + off[0];
        ds.y[2 * i + 1] = c + off[1];
        break;
      }
    }
  }
}

}  // namespace

Dataset gen_unimodal_1d(std::size_t n, std::uint64_t seed, double lo,
                        double hi) {
  Dataset ds = make_base(DatasetName::unimodal1d, n, seed);
  CounterRng x_rng(seed, streams::kInputs);
  for (std::size_t i = 0; i < n; ++i) ds.x[i] = x_rng.uniform(lo, hi);
  fill_y(ds, seed);
  return ds;
}

Dataset gen_bimodal_1d(std::size_t n, std::uint64_t seed, double lo,
                       double hi) {
  Dataset ds = make_base(DatasetName::bimodal1d, n, seed);
  CounterRng x_rng(seed, streams::kInputs);
  for (std::size_t i = 0; i < n; ++i) ds.x[i] = x_rng.uniform(lo, hi);
  fill_y(ds, seed);
  return ds;
}

Dataset gen_bimodal_2d(std::size_t n, std::uint64_t seed, double lo,
                       double hi) {
  Dataset ds = make_base(DatasetName::bimodal2d, n, seed);
  CounterRng x_rng(seed, streams::kInputs);
  for (std::size_t i = 0; i < n; ++i) ds.x[i] = x_rng.uniform(lo, hi);
  fill_y(ds, seed);
  return ds;
}

Dataset generate(DatasetName name, std::size_t n, std::uint64_t seed) {
  switch (name) {
    case DatasetName::unimodal1d: return gen_unimodal_1d(n, seed);
    case DatasetName::bimodal1d: return gen_bimodal_1d(n, seed);
    case DatasetName::bimodal2d: return gen_bimodal_2d(n, seed);
  }
  throw UserError("bad dataset name");
}

Dataset generate_test(DatasetName name, std::size_t n, std::uint64_t seed) {
  Dataset ds = make_base(name, n, seed);
  for (std::size_t i = 0; i < n; ++i)
    ds.x[i] = n == 1 ? 0.5 * (kTrainLo + kTrainHi)
                     : kTrainLo + (kTrainHi - kTrainLo) *
                                      static_cast<double>(i) /
                                      static_cast<double>(n - 1);
  fill_y(ds, seed);
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> header;
  for (int d = 0; d < ds.x_dim; ++d) header.push_back("x" + std::to_string(d));
  for (int d = 0; d < ds.y_dim; ++d) header.push_back("y" + std::to_string(d));
  csv.row(header);
  std::vector<double> row(ds.x_dim + ds.y_dim);
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (int d = 0; d < ds.x_dim; ++d) row[d] = ds.x[i * ds.x_dim + d];
    for (int d = 0; d < ds.y_dim; ++d)
      row[ds.x_dim + d] = ds.y[i * ds.y_dim + d];
    csv.row(row);
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv '" + path + "'");
  int x_dim = 0, y_dim = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty() && tok[0] == 'x') ++x_dim;
      if (!tok.empty() && tok[0] == 'y') ++y_dim;
    }
  }
  if (x_dim == 0 || y_dim == 0)
    throw IoError("'" + path + "' lacks a dataset header");
  Dataset ds;
  ds.x_dim = x_dim;
  ds.y_dim = y_dim;
  ds.name = y_dim == 2 ? DatasetName::bimodal2d : DatasetName::bimodal1d;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      const double v = std::strtod(tok.c_str(), nullptr);
      if (col < x_dim)
        ds.x.push_back(v);
      else
        ds.y.push_back(v);
      ++col;
    }
    if (col != x_dim + y_dim)
      throw IoError("'" + path + "': bad column count in row");
  }
  ds.n = ds.x.size() / x_dim;
  return ds;
}

}  // namespace misfit
