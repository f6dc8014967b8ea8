#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace misfit {

enum class DatasetName { unimodal1d, bimodal1d, bimodal2d };

DatasetName dataset_from_string(const std::string& s);
std::string to_string(DatasetName name);
int dataset_y_dim(DatasetName name);

// Training interval for x on all three problems.
constexpr double kTrainLo = -4.0;
constexpr double kTrainHi = 4.0;

struct Dataset {
  DatasetName name = DatasetName::unimodal1d;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  int x_dim = 1;
  int y_dim = 1;
  std::vector<double> x;  // row-major [n][x_dim]
  std::vector<double> y;  // row-major [n][y_dim]
};

// Closed-form conditional ground truth p(y|x) with its first two moments.
struct GroundTruth {
  DatasetName name;

  double log_pdf(double x, const double* y) const;
  double log_pdf(double x, double y) const;
  // mean / covariance of p(y|x); buffers sized y_dim and y_dim^2.
  void mean(double x, double* out) const;
  void cov(double x, double* out) const;
  int y_dim() const { return dataset_y_dim(name); }
  // Total variance of the 1D mixture (bimodal1d only): 3^2 + 100^2/4.
  double mixture_variance() const;
};

GroundTruth ground_truth(DatasetName name);

// Deterministic generators. x ~ uniform on [lo, hi] (stream kInputs), mode
// choices on stream kMode, noise on stream kNoise. Throws UserError if n = 0.
Dataset gen_unimodal_1d(std::size_t n, std::uint64_t seed,
                        double lo = kTrainLo, double hi = kTrainHi);
Dataset gen_bimodal_1d(std::size_t n, std::uint64_t seed,
                       double lo = kTrainLo, double hi = kTrainHi);
Dataset gen_bimodal_2d(std::size_t n, std::uint64_t seed,
                       double lo = kTrainLo, double hi = kTrainHi);
Dataset generate(DatasetName name, std::size_t n, std::uint64_t seed);

// Test set: x equidistant on the training interval, y drawn from the ground
// truth with the held-out seed's noise streams.
Dataset generate_test(DatasetName name, std::size_t n, std::uint64_t seed);

// CSV with header x0[,x1...],y0[,y1], one row per sample, 17 significant
// digits so values round-trip exactly.
void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace misfit
