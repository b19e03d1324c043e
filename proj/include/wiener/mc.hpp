#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wiener::mc {

// Identifies a reproducible random stream. Draws are a pure function of
// (seed, stream, substream, position) so no generator state is shared.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Sequential view over one substream of a RngSpec. Inside `estimate` the
// substream is the sample index, so sample i sees the same draws no matter
// how the run is chunked or threaded.
class GaussianStream {
 public:
  explicit GaussianStream(RngSpec spec, std::uint64_t substream = 0);

  double uniform();  // in (0, 1)
  double gaussian();
  Eigen::VectorXd gaussian_vector(Eigen::Index dim);
  void fill_gaussian(std::span<double> out);

  std::uint64_t substream() const { return substream_; }
  const RngSpec& spec() const { return spec_; }

 private:
  void refill();

  RngSpec spec_;
  std::uint64_t substream_;
  std::array<std::uint32_t, 2> key_{};
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// dim independent standard normals from substream 0 of spec.
Eigen::VectorXd gaussian_vector(RngSpec spec, Eigen::Index dim);

struct EstimatorResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  RngSpec spec;
};

struct EstimateOptions {
  std::size_t chunk_size = 4096;
  unsigned threads = 0;  // 0: hardware concurrency
};

using SampleFn = std::function<double(GaussianStream&)>;
using VectorSampleFn = std::function<void(GaussianStream&, std::span<double>)>;

inline constexpr std::size_t kMinSamples = 100;

// Mean and standard error (sample std / sqrt(n)) of fn over n samples.
// Chunk statistics are computed with pairwise sums and merged in a fixed
// tree, so the result does not depend on thread count and depends on chunk
// size only through rounding.
EstimatorResult estimate(const SampleFn& fn, std::size_t n, RngSpec spec, EstimateOptions opts = {});

// Same contract for k simultaneous statistics computed from one sample.
std::vector<EstimatorResult> estimate_many(std::size_t k, const VectorSampleFn& fn, std::size_t n, RngSpec spec,
                                           EstimateOptions opts = {});

// Raw per-sample values in sample order.
std::vector<double> sample_values(const SampleFn& fn, std::size_t n, RngSpec spec, EstimateOptions opts = {});

double pairwise_sum(std::span<const double> values);

struct SlopePoint {
  double x = 0.0;   // abscissa, e.g. epsilon
  double p = 0.0;   // estimated probability or moment
  double se = 0.0;  // standard error of p
};

struct SlopeFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  std::size_t points_used = 0;
  std::vector<std::string> warnings;
};

// Weighted least squares of log p on log x. Weights are (p/se)^2 (delta
// method) when every se > 0, uniform otherwise. The reported slope_se is the
// larger of the weight-implied and the residual-scaled standard errors.
// Points with p <= 0 are dropped with a warning; fewer than 3 left throws.
SlopeFit loglog_slope(std::span<const SlopePoint> points);

// Mean and standard error of stored per-sample values (pairwise sums).
EstimatorResult summarize(std::span<const double> values, RngSpec spec);

}  // namespace wiener::mc
