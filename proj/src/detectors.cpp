// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace iis
{

namespace
{

double median_in_place(std::vector<double>& v)
{
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

}  // namespace

double median(std::span<const double> values)
{
  if (values.empty()) {
    throw std::invalid_argument("median of empty window");
  }
  std::vector<double> copy(values.begin(), values.end());
  return median_in_place(copy);
}

double median_absolute_deviation(std::span<const double> values, double center)
{
  if (values.empty()) {
    throw std::invalid_argument("MAD of empty window");
  }
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double x : values) {
    dev.push_back(std::abs(x - center));
  }
  return median_in_place(dev);
}

double robust_zscore(std::span<const double> window, double candidate)
{
  const double med = median(window);
  const double eps = 1e-9 * std::max(1.0, std::abs(med));
  double mad = median_absolute_deviation(window, med);
  if (mad < eps) {
    mad = eps;
  }
  return 0.6745 * std::abs(candidate - med) / mad;
}

bool detect_outlier(std::span<const double> window, double candidate, const DetectorParams& params)
{
  if (window.size() < static_cast<std::size_t>(params.zscore_window)) {
    return false;
  }
  return robust_zscore(window, candidate) > params.zscore_threshold;
}

bool PageHinkley::update(double value)
{
  ++count_;
  mean_ += (value - mean_) / static_cast<double>(count_);
  cumulative_ += value - mean_ - delta_;
  minimum_ = std::min(minimum_, cumulative_);
  return statistic() > lambda_;
}

void PageHinkley::reset()
{
  mean_ = 0.0;
  cumulative_ = 0.0;
  minimum_ = 0.0;
  count_ = 0;
}

}  // namespace iis
