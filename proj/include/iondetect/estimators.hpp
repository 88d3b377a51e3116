#pragma once

// State recovery from detection signals: in-phase demodulation of binned
// counts, threshold classification over pooled windows, fixed-width
// histograms, jump detection and two-state discrimination fidelity.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iondetect/fluorescence.hpp"

namespace iondetect {

struct ClassifierConfig {
  std::vector<double> thresholds;  // strictly increasing
  std::size_t averaging_window = 1;

  std::vector<std::string> violations() const;
  void validate() const;
};

/// Least-squares amplitude of cos(theta_k - phase) over the bins, in units
/// of the mean count per bin. theta_k is the centre of bin k. Finite bin
/// width attenuates a true modulation by sinc(pi / n_bins); pass
/// correct_bin_window = true to undo it. Throws NormalizationError when no
/// photons were counted.
double demodulate(const BinnedCounts& counts, double phase, bool correct_bin_window = false);

/// sin(pi/n) / (pi/n): response of a phase bin to a unit cosine.
double bin_window_gain(int n_bins);

/// Window means: consecutive groups of averaging_window values; a trailing
/// partial group is pooled as well.
std::vector<double> pool_windows(std::span<const double> values, std::size_t window);

/// Class index = number of thresholds strictly below the value, so a value
/// sitting on a threshold falls in the lower class.
int classify_value(double value, std::span<const double> thresholds);

/// Pools then classifies. One label per window.
std::vector<int> classify(std::span<const double> estimates, const ClassifierConfig& cfg);

/// Representative signal for each class (midpoints, with the outer classes
/// placed half a gap beyond the extreme thresholds).
std::vector<double> class_levels(std::span<const double> thresholds);

struct Histogram {
  double bin_width = 0.0;
  std::vector<double> centers;
  std::vector<std::size_t> counts;
};

/// Left-closed bins [k w, (k+1) w) over the data range, empty bins in
/// between included.
Histogram histogram(std::span<const double> values, double bin_width);

/// Local maxima that stand out of the surrounding valleys by more than
/// `sigmas` Poisson standard deviations of the peak count. Returns bin
/// indices in ascending order.
std::vector<std::size_t> resolved_maxima(const Histogram& h, double sigmas = 3.0);

struct Jump {
  std::size_t index = 0;  // window index where the new level starts
  int from = 0;
  int to = 0;
};

/// Classifies pooled windows and reports every window whose class differs
/// from the previous one.
std::vector<Jump> detect_jumps(std::span<const double> values, const ClassifierConfig& cfg);

struct FidelityResult {
  double threshold = 0.0;
  double balanced = 0.0;        // 1 - mean(error_high, error_low)
  double pooled_accuracy = 0.0; // correct / total over both ensembles
  double error_high = 0.0;      // brighter ensemble read at or below threshold
  double error_low = 0.0;       // dimmer ensemble read above threshold
};

/// The ensemble with the larger mean is the one expected above threshold,
/// which keeps the result symmetric in its arguments.
FidelityResult detection_fidelity(std::span<const double> a, std::span<const double> b, double threshold);

/// Threshold that maximises the balanced fidelity.
FidelityResult best_threshold_fidelity(std::span<const double> a, std::span<const double> b);

}  // namespace iondetect
