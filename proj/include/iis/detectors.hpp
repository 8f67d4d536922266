// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file detectors.hpp
/// @brief Streaming correctness detectors: robust z-score and Page-Hinkley.

#pragma once

#include <cstddef>
#include <span>

#include "iis/model.hpp"

namespace iis
{

double median(std::span<const double> values);

/// median(|x - center|)
double median_absolute_deviation(std::span<const double> values, double center);

/// 0.6745 * |candidate - median| / MAD, with MAD floored at
/// 1e-9 * max(1, |median|) so constant windows stay finite.
double robust_zscore(std::span<const double> window, double candidate);

/// false until the window holds zscore_window values (warm-up).
bool detect_outlier(std::span<const double> window, double candidate, const DetectorParams& params);

/// One-sided Page-Hinkley test for an upward shift in the mean.
class PageHinkley
{
public:
  PageHinkley() = default;
  PageHinkley(double delta, double lambda) : delta_(delta), lambda_(lambda) {}

  /// Feeds one sample; true when the statistic exceeds lambda. The caller
  /// decides whether to reset() after an alarm.
  bool update(double value);
  void reset();

  double mean() const { return mean_; }
  double cumulative() const { return cumulative_; }
  double minimum() const { return minimum_; }
  std::size_t count() const { return count_; }
  double statistic() const { return cumulative_ - minimum_; }

private:
  double delta_ = 0.05;
  double lambda_ = 5.0;
  double mean_ = 0.0;
  double cumulative_ = 0.0;
  double minimum_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace iis
