#pragma once

#include <vector>

#include "nnes/types.hpp"

namespace nnes::quad {

/// Composite Simpson weights for `n_nodes` equally spaced nodes (step `dt`).
/// Even interval counts give plain composite Simpson; an odd trailing
/// interval is handled with the 3-point half-interval Newton-Cotes rule
/// (h/12)(-f[m-2] + 8 f[m-1] + 5 f[m]). Two nodes fall back to trapezoid.
std::vector<double> simpson_weights(int n_nodes, double dt);

/// Running Simpson integral over a node sequence processed in order.
/// current() is the integral from the first node to the latest one, with the
/// same prefix rules as simpson_weights.
template <class T>
class CumulativeSimpson {
 public:
  explicit CumulativeSimpson(double dt) : dt_(dt) {}

  void add(const T& f) {
    last_[2] = last_[1];
    last_[1] = last_[0];
    last_[0] = f;
    if (count_ == 0) even_sum_ = T(0.0 * f);
    ++count_;
    const int m = count_ - 1;  // intervals so far
    if (m >= 2 && m % 2 == 0)
      even_sum_ = even_sum_ + (dt_ / 3.0) * (last_[2] + 4.0 * last_[1] + last_[0]);
  }

  int nodes() const { return count_; }

  T current() const {
    const int m = count_ - 1;
    if (m <= 0) return even_sum_;
    if (m % 2 == 0) return even_sum_;
    if (m == 1) return T((dt_ / 2.0) * (last_[1] + last_[0]));
    return T(even_sum_ +
             (dt_ / 12.0) * (-1.0 * last_[2] + 8.0 * last_[1] + 5.0 * last_[0]));
  }

 private:
  double dt_;
  int count_ = 0;
  T last_[3] = {};
  T even_sum_{};
};

}  // namespace nnes::quad
