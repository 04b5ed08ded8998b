#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace actrob {

using Vector = std::vector<double>;
using StateVector = Vector;
using ActionVector = Vector;

/// Raised when a vector does not have the length an operation expects.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string_view what, std::size_t expected, std::size_t actual);

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

void check_dim(std::string_view what, std::size_t expected, std::size_t actual);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stable seed for a path of indices below a base seed, e.g.
/// derive_seed(base, {generation, individual, episode}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// Seeded random stream. One stream per consumer; never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a 64-bit, used for content hashes in manifests and provenance tags.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::span<const double> values, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Callers must
/// write results by index so the outcome does not depend on scheduling.
/// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

double squared_norm(std::span<const double> v);
double mean(std::span<const double> v);
/// Population standard deviation.
double population_std(std::span<const double> v);

}  // namespace actrob
