#include "iondetect/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iondetect/errors.hpp"

namespace iondetect {

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<std::string> ClassifierConfig::violations() const {
  std::vector<std::string> out;
  if (averaging_window < 1) out.emplace_back("averaging_window: must be >= 1");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) {
      out.emplace_back("thresholds: must be strictly increasing (entry " + std::to_string(i) + ")");
      break;
    }
  }
  return out;
}

void ClassifierConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw ConfigError("ClassifierConfig." + v.front());
}

double bin_window_gain(int n_bins) {
  const double half = constants::pi / n_bins;
  return std::sin(half) / half;
}

double demodulate(const BinnedCounts& counts, double phase, bool correct_bin_window) {
  const std::size_t n = counts.counts.size();
  if (n < 3) throw DomainError("demodulate: need at least 3 phase bins");
  const auto total = counts.total();
  if (total <= 0) throw NormalizationError("demodulate: no photons counted");
  const double width = constants::two_pi / static_cast<double>(n);
  double proj = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double c = std::cos((static_cast<double>(k) + 0.5) * width - phase);
    proj += static_cast<double>(counts.counts[k]) * c;
    norm += c * c;
  }
  // cos(theta_k - phase) sums to zero over uniform bins, so the in-phase
  // coefficient decouples from the offset.
  const double mean = static_cast<double>(total) / static_cast<double>(n);
  double amplitude = proj / norm / mean;
  if (correct_bin_window) amplitude /= bin_window_gain(static_cast<int>(n));
  return amplitude;
}

std::vector<double> pool_windows(std::span<const double> values, std::size_t window) {
  if (window < 1) throw ConfigError("pool_windows: window must be >= 1");
  std::vector<double> out;
  out.reserve(values.size() / window + 1);
  for (std::size_t start = 0; start < values.size(); start += window) {
    const std::size_t len = std::min(window, values.size() - start);
    out.push_back(mean_of(values.subspan(start, len)));
  }
  return out;
}

int classify_value(double value, std::span<const double> thresholds) {
  int label = 0;
  for (double t : thresholds) {
    if (value > t) ++label;
  }
  return label;
}

std::vector<int> classify(std::span<const double> estimates, const ClassifierConfig& cfg) {
  cfg.validate();
  const auto pooled = pool_windows(estimates, cfg.averaging_window);
  std::vector<int> labels;
  labels.reserve(pooled.size());
  for (double v : pooled) labels.push_back(classify_value(v, cfg.thresholds));
  return labels;
}

std::vector<double> class_levels(std::span<const double> thresholds) {
  if (thresholds.empty()) return {0.0};
  std::vector<double> levels;
  levels.reserve(thresholds.size() + 1);
  const double edge_gap = thresholds.size() > 1 ? 0.5 * (thresholds[1] - thresholds[0]) : 1.0;
  levels.push_back(thresholds.front() - edge_gap);
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    levels.push_back(0.5 * (thresholds[i - 1] + thresholds[i]));
  }
  const double top_gap =
      thresholds.size() > 1 ? 0.5 * (thresholds.back() - thresholds[thresholds.size() - 2]) : 1.0;
  levels.push_back(thresholds.back() + top_gap);
  return levels;
}

Histogram histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0)) throw DomainError("histogram: bin_width must be > 0");
  Histogram h;
  h.bin_width = bin_width;
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(finite.begin(), finite.end());
  const auto first = static_cast<long long>(std::floor(*lo_it / bin_width));
  const auto last = static_cast<long long>(std::floor(*hi_it / bin_width));
  const auto n = static_cast<std::size_t>(last - first + 1);
  h.counts.assign(n, 0);
  h.centers.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    h.centers[k] = (static_cast<double>(first + static_cast<long long>(k)) + 0.5) * bin_width;
  }
  for (double v : finite) {
    const auto k = static_cast<long long>(std::floor(v / bin_width)) - first;
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

std::vector<std::size_t> resolved_maxima(const Histogram& h, double sigmas) {
  const auto& c = h.counts;
  const std::size_t n = c.size();
  auto at = [&](long long i) -> double {
    return (i < 0 || i >= static_cast<long long>(n)) ? 0.0 : static_cast<double>(c[static_cast<std::size_t>(i)]);
  };
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const auto si = static_cast<long long>(i);
    const double peak = at(si);
    if (peak <= 0.0 || !(peak > at(si - 1)) || peak < at(si + 1)) continue;
    // a plateau counts once, at its left end
    double left_base = peak;
    for (long long j = si - 1; j >= -1; --j) {
      const double v = at(j);
      if (v > peak) break;
      left_base = std::min(left_base, v);
    }
    double right_base = peak;
    for (long long j = si + 1; j <= static_cast<long long>(n); ++j) {
      const double v = at(j);
      if (v > peak) break;
      right_base = std::min(right_base, v);
    }
    const double prominence = peak - std::max(left_base, right_base);
    if (prominence > sigmas * std::sqrt(peak)) peaks.push_back(i);
  }
  return peaks;
}

std::vector<Jump> detect_jumps(std::span<const double> values, const ClassifierConfig& cfg) {
  const auto labels = classify(values, cfg);
  std::vector<Jump> jumps;
  for (std::size_t k = 1; k < labels.size(); ++k) {
    if (labels[k] != labels[k - 1]) jumps.push_back({k, labels[k - 1], labels[k]});
  }
  return jumps;
}

FidelityResult detection_fidelity(std::span<const double> a, std::span<const double> b, double threshold) {
  if (a.empty() || b.empty()) throw DomainError("detection_fidelity: ensembles must be non-empty");
  const bool a_high = mean_of(a) >= mean_of(b);
  const auto high = a_high ? a : b;
  const auto low = a_high ? b : a;
  const auto high_wrong = std::count_if(high.begin(), high.end(), [&](double v) { return !(v > threshold); });
  const auto low_wrong = std::count_if(low.begin(), low.end(), [&](double v) { return v > threshold; });
  FidelityResult r;
  r.threshold = threshold;
  r.error_high = static_cast<double>(high_wrong) / static_cast<double>(high.size());
  r.error_low = static_cast<double>(low_wrong) / static_cast<double>(low.size());
  r.balanced = 1.0 - 0.5 * (r.error_high + r.error_low);
  r.pooled_accuracy = 1.0 - static_cast<double>(high_wrong + low_wrong) /
                                static_cast<double>(high.size() + low.size());
  return r;
}

FidelityResult best_threshold_fidelity(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("best_threshold_fidelity: ensembles must be non-empty");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  const bool a_high = mean_of(a) >= mean_of(b);
  std::vector<double> high(a_high ? a.begin() : b.begin(), a_high ? a.end() : b.end());
  std::vector<double> low(a_high ? b.begin() : a.begin(), a_high ? b.end() : a.end());
  std::sort(high.begin(), high.end());
  std::sort(low.begin(), low.end());

  auto evaluate = [&](double t) {
    const auto high_wrong = std::upper_bound(high.begin(), high.end(), t) - high.begin();
    const auto low_wrong = low.end() - std::upper_bound(low.begin(), low.end(), t);
    return 1.0 - 0.5 * (static_cast<double>(high_wrong) / static_cast<double>(high.size()) +
                        static_cast<double>(low_wrong) / static_cast<double>(low.size()));
  };

  double best_t = pooled.front() - 1.0;
  double best = evaluate(best_t);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const double t = i + 1 < pooled.size() ? 0.5 * (pooled[i] + pooled[i + 1]) : pooled[i] + 1.0;
    const double f = evaluate(t);
    if (f > best) {
      best = f;
      best_t = t;
    }
  }
  return detection_fidelity(a, b, best_t);
}

}  // namespace iondetect
