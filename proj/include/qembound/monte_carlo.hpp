#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qembound/error.hpp"

namespace qembound {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent substream `stream` derived from a user seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Worker count: `requested` if positive, else the hardware concurrency;
/// QEMBOUND_THREADS caps either.
inline unsigned resolve_thread_count(unsigned requested = 0) {
  unsigned threads = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QEMBOUND_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) threads = std::min(threads, static_cast<unsigned>(cap));
  }
  return std::max(1u, threads);
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Sample mean of exp(x_i) kept on the log scale.
struct LogMeanEstimate {
  double log_mean = 0.0;
  /// Standard error of the mean divided by the mean (delta method: the
  /// standard error of log_mean).
  double relative_std_error = 0.0;
  std::size_t samples = 0;
  /// Share of the total weight carried by the largest 0.1% of summands.
  double top_weight_share = 0.0;
};

/// Aggregates log-summands with a max shift. Summation runs in index order
/// so the result only depends on the values, not on how they were produced.
inline LogMeanEstimate aggregate_log_values(std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::invalid_argument, "need at least two samples");
  const double top = *std::max_element(values.begin(), values.end());
  require(std::isfinite(top), ErrorKind::numerical_overflow, "non-finite log summand");
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : values) {
    const double w = std::exp(v - top);
    s1 += w;
    s2 += w * w;
  }
  const double n = static_cast<double>(values.size());
  const double mean = s1 / n;
  const double variance = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));

  std::vector<double> sorted(values.begin(), values.end());
  const std::size_t k = std::max<std::size_t>(1, values.size() / 1000);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                   std::greater<>());
  double top_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) top_sum += std::exp(sorted[i] - top);

  LogMeanEstimate est;
  est.log_mean = top + std::log(mean);
  est.relative_std_error = std::sqrt(variance / n) / mean;
  est.samples = values.size();
  est.top_weight_share = top_sum / s1;
  require(std::isfinite(est.log_mean) && std::isfinite(est.relative_std_error), ErrorKind::numerical_overflow,
          "log-mean estimate is not finite");
  return est;
}

inline constexpr std::size_t kDefaultBlockSize = 4096;

/// Fills `samples` draws block by block. Block b draws from an
/// engine seeded with substream_seed(seed, b), so the output is
/// bit-reproducible for a fixed seed and block size at any worker count.
/// `draw(engine, normal)` must be safe to call concurrently; `normal` is a
/// per-block standard normal distribution.
template <typename Draw>
std::vector<double> draw_samples(std::size_t samples, std::uint64_t seed, unsigned threads, Draw&& draw,
                                    std::size_t block_size = kDefaultBlockSize) {
  require(block_size > 0, ErrorKind::invalid_argument, "block size must be positive");
  std::vector<double> values(samples);
  const std::size_t blocks = (samples + block_size - 1) / block_size;
  parallel_for(blocks, resolve_thread_count(threads), [&](std::size_t b) {
    std::mt19937_64 engine(substream_seed(seed, b));
    std::normal_distribution<double> normal;
    const std::size_t end = std::min(samples, (b + 1) * block_size);
    for (std::size_t i = b * block_size; i < end; ++i) values[i] = draw(engine, normal);
  });
  return values;
}

template <typename Draw>
LogMeanEstimate estimate_log_mean(std::size_t samples, std::uint64_t seed, unsigned threads, Draw&& draw,
                                  std::size_t block_size = kDefaultBlockSize) {
  const auto values = draw_samples(samples, seed, threads, std::forward<Draw>(draw), block_size);
  return aggregate_log_values(values);
}

}  // namespace qembound
