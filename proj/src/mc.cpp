#include "wiener/mc.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "wiener/errors.hpp"

namespace wiener::mc {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct ChunkStats {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
};

ChunkStats merge(const ChunkStats& a, const ChunkStats& b) {
  if (a.n == 0.0) return b;
  if (b.n == 0.0) return a;
  const double n = a.n + b.n;
  const double delta = b.mean - a.mean;
  return {n, a.mean + delta * (b.n / n), a.m2 + b.m2 + delta * delta * (a.n * b.n / n)};
}

ChunkStats merge_tree(std::span<const ChunkStats> stats) {
  if (stats.empty()) return {};
  if (stats.size() == 1) return stats[0];
  const std::size_t half = stats.size() / 2;
  return merge(merge_tree(stats.first(half)), merge_tree(stats.subspan(half)));
}

ChunkStats chunk_stats(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - mean) * (values[i] - mean);
  return {n, mean, pairwise_sum(dev)};
}

unsigned resolve_threads(unsigned requested, std::size_t chunks) {
  unsigned t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(chunks, 1)));
}

// Runs body(chunk_index) for every chunk on a small worker pool.
template <typename Body>
void for_each_chunk(std::size_t chunks, unsigned threads, Body&& body) {
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks && !failed; c = next++) {
        try {
          body(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

[[noreturn]] void poisoned(const RngSpec& spec, std::uint64_t sample, double value) {
  std::ostringstream msg;
  msg << "non-finite sample value " << value << " at seed=" << spec.seed << " stream=" << spec.stream
      << " sample=" << sample;
  throw PoisonedSampleError(msg.str(), sample);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

GaussianStream::GaussianStream(RngSpec spec, std::uint64_t substream) : spec_(spec), substream_(substream) {
  const std::uint64_t k = splitmix64(spec.seed ^ splitmix64(spec.stream + 0x632BE59BD9B4E019ull));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void GaussianStream::refill() {
  buffer_ = philox4x32({block_++, 0u, static_cast<std::uint32_t>(substream_),
                        static_cast<std::uint32_t>(substream_ >> 32)},
                       key_);
  buffer_pos_ = 0;
}

double GaussianStream::uniform() {
  if (buffer_pos_ > 2) refill();
  const std::uint64_t hi = buffer_[buffer_pos_] >> 5;  // 27 bits
  const std::uint64_t lo = buffer_[buffer_pos_ + 1] >> 6;  // 26 bits
  buffer_pos_ += 2;
  // 53-bit grid shifted by half a step: never 0, never 1.
  return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
}

double GaussianStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

Eigen::VectorXd GaussianStream::gaussian_vector(Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  fill_gaussian(std::span<double>(v.data(), static_cast<std::size_t>(dim)));
  return v;
}

void GaussianStream::fill_gaussian(std::span<double> out) {
  for (double& x : out) x = gaussian();
}

Eigen::VectorXd gaussian_vector(RngSpec spec, Eigen::Index dim) {
  if (dim < 1) throw DomainError("gaussian_vector needs dim >= 1");
  GaussianStream stream(spec, 0);
  return stream.gaussian_vector(dim);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::vector<EstimatorResult> estimate_many(std::size_t k, const VectorSampleFn& fn, std::size_t n, RngSpec spec,
                                           EstimateOptions opts) {
  if (n < kMinSamples) {
    throw PreconditionError("estimate needs at least " + std::to_string(kMinSamples) + " samples, got " +
                            std::to_string(n));
  }
  if (k == 0) return {};
  const std::size_t chunk = std::max<std::size_t>(opts.chunk_size, 1);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<ChunkStats> stats(chunks * k);

  for_each_chunk(chunks, resolve_threads(opts.threads, chunks), [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    const std::size_t len = end - begin;
    std::vector<double> values(len * k);  // statistic-major
    std::vector<double> row(k);
    for (std::size_t i = begin; i < end; ++i) {
      GaussianStream rng(spec, i);
      fn(rng, row);
      for (std::size_t j = 0; j < k; ++j) {
        if (!std::isfinite(row[j])) poisoned(spec, i, row[j]);
        values[j * len + (i - begin)] = row[j];
      }
    }
    for (std::size_t j = 0; j < k; ++j) {
      stats[j * chunks + c] = chunk_stats(std::span<const double>(values.data() + j * len, len));
    }
  });

  std::vector<EstimatorResult> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    const ChunkStats total = merge_tree(std::span<const ChunkStats>(stats.data() + j * chunks, chunks));
    const double var = total.m2 / (total.n - 1.0);
    out[j] = {total.mean, std::sqrt(std::max(var, 0.0) / total.n), n, spec};
  }
  return out;
}

EstimatorResult estimate(const SampleFn& fn, std::size_t n, RngSpec spec, EstimateOptions opts) {
  return estimate_many(
      1, [&](GaussianStream& rng, std::span<double> out) { out[0] = fn(rng); }, n, spec, opts)[0];
}

std::vector<double> sample_values(const SampleFn& fn, std::size_t n, RngSpec spec, EstimateOptions opts) {
  std::vector<double> values(n);
  const std::size_t chunk = std::max<std::size_t>(opts.chunk_size, 1);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  for_each_chunk(chunks, resolve_threads(opts.threads, chunks), [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      GaussianStream rng(spec, i);
      values[i] = fn(rng);
      if (!std::isfinite(values[i])) poisoned(spec, i, values[i]);
    }
  });
  return values;
}

SlopeFit loglog_slope(std::span<const SlopePoint> points) {
  SlopeFit fit;
  std::vector<double> xs, ys, ws;
  bool weighted = true;
  for (const auto& pt : points) {
    if (!(pt.p > 0.0) || !(pt.x > 0.0)) {
      std::ostringstream msg;
      msg << "dropped point x=" << pt.x << " with p=" << pt.p;
      fit.warnings.push_back(msg.str());
      continue;
    }
    xs.push_back(std::log(pt.x));
    ys.push_back(std::log(pt.p));
    ws.push_back(pt.se > 0.0 ? (pt.p / pt.se) * (pt.p / pt.se) : 0.0);
    if (!(pt.se > 0.0)) weighted = false;
  }
  const std::size_t m = xs.size();
  if (m < 3) {
    throw PreconditionError("log-log slope needs at least 3 positive points, " + std::to_string(m) + " remain");
  }
  if (!weighted) std::fill(ws.begin(), ws.end(), 1.0);

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
    sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0.0)) throw PreconditionError("log-log slope needs distinct abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += ws[i] * r * r;
  }
  const double residual_se = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  const double weight_se = weighted ? std::sqrt(1.0 / sxx) : 0.0;
  fit.slope_se = std::max(residual_se, weight_se);
  fit.points_used = m;
  return fit;
}

EstimatorResult summarize(std::span<const double> values, RngSpec spec) {
  if (values.size() < 2) throw PreconditionError("summarize needs at least 2 values");
  const ChunkStats s = chunk_stats(values);
  return {s.mean, std::sqrt(s.m2 / (s.n - 1.0) / s.n), values.size(), spec};
}

}  // namespace wiener::mc
