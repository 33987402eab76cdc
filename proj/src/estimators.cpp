#include "nrl/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace nrl {

namespace {
constexpr double kNormalQuantile975 = 1.959964;
}

void RunningAverage::add(double value) {
  count_ += 1;
  const double delta = value - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (value - mean_);
}

void RunningAverage::merge(const RunningAverage& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double delta = other.mean_ - mean_;
  const double n = na + nb;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  count_ += other.count_;
}

double RunningAverage::mean() const {
  if (count_ == 0) throw std::invalid_argument("RunningAverage: empty stream");
  return mean_;
}

double RunningAverage::sample_variance() const {
  if (count_ < 2) throw std::invalid_argument("RunningAverage: need at least two values");
  return m2_ / static_cast<double>(count_ - 1);
}

BatchMeans::BatchMeans(std::uint64_t batch_size, double dt)
    : batch_size_(batch_size), dt_(dt) {
  if (batch_size_ == 0) throw std::invalid_argument("BatchMeans: batch size must be positive");
  if (!(dt_ > 0.0)) throw std::invalid_argument("BatchMeans: dt must be positive");
}

void BatchMeans::add(double value) {
  current_sum_ += value;
  current_count_ += 1;
  total_count_ += 1;
  if (current_count_ == batch_size_) {
    means_.push_back(current_sum_ / static_cast<double>(batch_size_));
    current_sum_ = 0.0;
    current_count_ = 0;
  }
}

double BatchMeans::overall_mean() const {
  if (means_.empty()) throw std::invalid_argument("BatchMeans: no completed batches");
  double sum = 0.0;
  for (double m : means_) sum += m;
  return sum / static_cast<double>(means_.size());
}

std::uint64_t default_batch_size(std::uint64_t n_samples) {
  const auto k = static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(n_samples))));
  if (k == 0) return 1;
  return n_samples / k;
}

VarianceReport ensemble_asymptotic_variance(const std::vector<double>& estimates,
                                            double time_horizon) {
  if (estimates.size() < 2) {
    throw std::invalid_argument("ensemble_asymptotic_variance: need at least 2 chains");
  }
  if (!(time_horizon > 0.0)) {
    throw std::invalid_argument("ensemble_asymptotic_variance: time horizon must be positive");
  }
  const double r = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= r;
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  const double sample_var = ss / (r - 1.0);

  VarianceReport report;
  report.method = VarianceMethod::ensemble;
  report.estimate = mean;
  report.asym_var = time_horizon * sample_var;
  const double half_width = kNormalQuantile975 * std::sqrt(sample_var / r);
  report.ci_low = mean - half_width;
  report.ci_high = mean + half_width;
  report.n_effective = estimates.size();
  return report;
}

VarianceReport batch_means_variance(const BatchMeans& state, double full_mean) {
  const auto& means = state.batch_means();
  const std::uint64_t k = means.size();
  if (k < 20) {
    throw std::invalid_argument(
        "batch_means_variance: need at least 20 completed batches, have " + std::to_string(k));
  }
  double ss = 0.0;
  for (double m : means) ss += (m - full_mean) * (m - full_mean);
  const double batch_time = static_cast<double>(state.batch_size()) * state.dt();
  const double asym_var = batch_time * ss / static_cast<double>(k - 1);
  const double total_time =
      static_cast<double>(k) * static_cast<double>(state.batch_size()) * state.dt();

  VarianceReport report;
  report.method = VarianceMethod::batch_means;
  report.estimate = full_mean;
  report.asym_var = asym_var;
  const double half_width = kNormalQuantile975 * std::sqrt(asym_var / total_time);
  report.ci_low = full_mean - half_width;
  report.ci_high = full_mean + half_width;
  report.n_effective = k - 1;
  return report;
}

std::pair<double, double> variance_confidence_interval(double variance, std::uint64_t dof) {
  if (dof == 0) throw std::invalid_argument("variance_confidence_interval: dof must be positive");
  // Wilson-Hilferty: chi2_k(p) ~ k (1 - 2/(9k) + z_p sqrt(2/(9k)))^3.
  const double k = static_cast<double>(dof);
  auto chi2_quantile = [k](double z) {
    const double c = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * c * c * c;
  };
  const double lo_q = chi2_quantile(-kNormalQuantile975);
  const double hi_q = chi2_quantile(kNormalQuantile975);
  return {variance * k / hi_q, variance * k / std::max(lo_q, 1e-12)};
}

MseResult mse(const std::vector<RunEstimate>& runs, double reference) {
  if (runs.empty()) throw std::invalid_argument("mse: need at least one run");
  if (!std::isfinite(reference)) throw std::invalid_argument("mse: reference must be finite");
  MseResult result;
  double sum = 0.0;
  for (const RunEstimate& run : runs) {
    if (run.blowup) {
      result.n_blowups += 1;
      continue;
    }
    const double d = run.estimate - reference;
    sum += d * d;
    result.n_used += 1;
  }
  if (result.n_used == 0) {
    result.all_blown_up = true;
    result.mse = std::numeric_limits<double>::quiet_NaN();
    result.relative_mse = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  result.mse = sum / static_cast<double>(result.n_used);
  result.relative_mse = reference != 0.0
                            ? result.mse / (reference * reference)
                            : std::numeric_limits<double>::quiet_NaN();
  return result;
}

}  // namespace nrl
