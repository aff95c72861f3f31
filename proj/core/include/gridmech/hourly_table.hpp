#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gridmech {

/// Dense scenario-by-hour array of doubles, row-major by scenario.
class HourlyTable {
 public:
  HourlyTable() = default;
  HourlyTable(std::size_t scenarios, std::size_t hours, double fill = 0.0)
      : scenarios_(scenarios), hours_(hours), data_(scenarios * hours, fill) {}

  std::size_t scenarios() const noexcept { return scenarios_; }
  std::size_t hours() const noexcept { return hours_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t w, std::size_t t) const {
    assert(w < scenarios_ && t < hours_);
    return data_[w * hours_ + t];
  }
  double& operator()(std::size_t w, std::size_t t) {
    assert(w < scenarios_ && t < hours_);
    return data_[w * hours_ + t];
  }

  std::span<const double> row(std::size_t w) const {
    return {data_.data() + w * hours_, hours_};
  }
  std::span<double> row(std::size_t w) { return {data_.data() + w * hours_, hours_}; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  /// Zero-valued lookup that tolerates an empty table.
  double value_or_zero(std::size_t w, std::size_t t) const {
    return data_.empty() ? 0.0 : (*this)(w, t);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool same_shape(const HourlyTable& other) const noexcept {
    return scenarios_ == other.scenarios_ && hours_ == other.hours_;
  }

  friend bool operator==(const HourlyTable&, const HourlyTable&) = default;

 private:
  std::size_t scenarios_ = 0;
  std::size_t hours_ = 0;
  std::vector<double> data_;
};

/// Largest |a - b| over two tables of equal shape; an empty table reads as zeros.
inline double max_abs_difference(const HourlyTable& a, const HourlyTable& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty()) return b.max_abs();
  if (b.empty()) return a.max_abs();
  assert(a.same_shape(b));
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) m = std::max(m, std::abs(av[k] - bv[k]));
  return m;
}

}  // namespace gridmech
