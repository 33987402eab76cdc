#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nrl/integrators.hpp"

namespace nrl {

// Welford running mean and sum of squared deviations; merging two
// accumulators matches accumulating the concatenation up to roundoff.
class RunningAverage : public Accumulator {
 public:
  void add(double value) override;
  void merge(const RunningAverage& other);

  std::uint64_t count() const { return count_; }
  double mean() const;
  double sample_variance() const;  // unbiased, needs count >= 2

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Fixed-size batch means along a single trajectory.  The trailing partial
// batch is discarded.
class BatchMeans : public Accumulator {
 public:
  BatchMeans(std::uint64_t batch_size, double dt);

  void add(double value) override;

  std::uint64_t batch_size() const { return batch_size_; }
  double dt() const { return dt_; }
  const std::vector<double>& batch_means() const { return means_; }
  std::uint64_t total_count() const { return total_count_; }
  double overall_mean() const;  // mean over completed batches

 private:
  std::uint64_t batch_size_;
  double dt_;
  std::vector<double> means_;
  double current_sum_ = 0.0;
  std::uint64_t current_count_ = 0;
  std::uint64_t total_count_ = 0;
};

// Standard choice K = floor(sqrt(n)) batches.
std::uint64_t default_batch_size(std::uint64_t n_samples);

enum class VarianceMethod { ensemble, batch_means };

struct VarianceReport {
  double estimate = 0.0;   // pooled estimate of pi(f)
  double asym_var = 0.0;   // continuous-time asymptotic variance estimate
  double ci_low = 0.0;     // 95% interval for the estimate
  double ci_high = 0.0;
  VarianceMethod method = VarianceMethod::ensemble;
  std::uint64_t n_effective = 0;
};

// sigma2_hat = T * sample variance of the per-chain time averages; the CI for
// the pooled mean uses the 0.975 normal quantile.  T is the (post burn-in)
// time horizon of each chain.
VarianceReport ensemble_asymptotic_variance(const std::vector<double>& estimates, double time_horizon);

// sigma2_hat = batch_size * dt * sample variance of the batch means around
// full_mean.  Requires at least 20 completed batches.
VarianceReport batch_means_variance(const BatchMeans& state, double full_mean);

// 95% interval for a variance estimate with the given degrees of freedom
// (Wilson-Hilferty chi-square approximation); used to compare variance
// estimates across runs.
std::pair<double, double> variance_confidence_interval(double variance, std::uint64_t dof);

struct MseResult {
  double mse = 0.0;
  double relative_mse = 0.0;
  std::uint64_t n_used = 0;
  std::uint64_t n_blowups = 0;
  bool all_blown_up = false;
};

struct RunEstimate {
  double estimate = 0.0;
  bool blowup = false;
};

// Mean squared deviation from the reference over completed runs; blown-up
// runs are excluded but counted.
MseResult mse(const std::vector<RunEstimate>& runs, double reference);

}  // namespace nrl
