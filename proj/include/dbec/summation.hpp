#pragma once

#include <cmath>
#include <cstddef>

namespace dbec {

/// Neumaier-compensated accumulator. Reductions walk the data in storage
/// order, so results are bit-identical between runs.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <typename F>
double compensated_sum(std::size_t count, F&& term) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < count; ++i) acc.add(term(i));
  return acc.value();
}

}  // namespace dbec
