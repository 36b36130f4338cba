#include "nnes/plateau.hpp"

#include <algorithm>
#include <cmath>

namespace nnes {

void RecurrenceTracker::add(double s, double g) {
  g_.push_back(g);
  gmax_ = std::max(gmax_, g);
  const int k = static_cast<int>(g_.size()) - 1;
  if (k + 1 < env_window_) return;
  double env = 0;
  for (int i = k - env_window_ + 1; i <= k; ++i) env = std::max(env, g_[static_cast<size_t>(i)]);
  if (env < 0.5 * gmax_) env_min_ = std::min(env_min_, env);
  if (!recurrence_ && env_min_ < 0.5 * gmax_ &&
      env > factor_ * std::max(env_min_, 1e-300)) {
    recurrence_ = true;
    onset_ = s;
  }
}

PlateauMonitor::PlateauMonitor(PlateauParams params, double step)
    : p_(params),
      win_samples_(std::max(2, static_cast<int>(std::lround(params.window / step)) + 1)),
      tracker_(params.recurrence_factor, win_samples_ / 2) {}

bool PlateauMonitor::add(double s, double g, double monitored) {
  svals_.push_back(s);
  gvals_.push_back(g);
  monitored_.push_back(monitored);
  tracker_.add(s, g);

  const int k = static_cast<int>(monitored_.size()) - 1;
  if (!plateau_ && !tracker_.recurrence() && k + 1 >= win_samples_) {
    double lo = monitored_[static_cast<size_t>(k)], hi = lo;
    for (int i = k - win_samples_ + 1; i <= k; ++i) {
      lo = std::min(lo, monitored_[static_cast<size_t>(i)]);
      hi = std::max(hi, monitored_[static_cast<size_t>(i)]);
    }
    const bool pass = p_.criterion == PlateauParams::Criterion::window_variation
                          ? (hi - lo <= p_.tol_rel * p_.scale)
                          : (hi <= p_.tol_rel * p_.scale);
    if (pass) {
      plateau_ = true;
      plateau_index_ = k;
    }
  }
  return !(plateau_ || tracker_.recurrence());
}

std::vector<std::pair<double, double>> local_maxima(const std::vector<double>& s,
                                                    const std::vector<double>& g) {
  std::vector<std::pair<double, double>> out;
  for (size_t i = 1; i + 1 < g.size(); ++i)
    if (g[i] > g[i - 1] && g[i] > g[i + 1]) out.emplace_back(s[i], g[i]);
  return out;
}

double fit_power_law(const std::vector<std::pair<double, double>>& envelope,
                     double s_abs_min, double s_abs_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [s, g] : envelope) {
    const double as = std::abs(s);
    if (as < s_abs_min || as > s_abs_max || g <= 0) continue;
    const double x = std::log(as), y = std::log(g);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / denom;
}

double tail_from_fit(double g_end, double s_end, double exponent, double window) {
  const double as = std::abs(s_end);
  if (std::isfinite(exponent) && exponent < -1.0 && as > 0)
    return g_end * as / (-exponent - 1.0);
  return g_end * window;
}

}  // namespace nnes
