#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "nnes/types.hpp"

namespace nnes {

struct PlateauParams {
  enum class Criterion {
    window_variation,  // max-min of the monitored value over the window
    below_threshold,   // monitored value itself stays below tol over the window
  };
  double tol_rel = 1e-4;
  double window = 5.0;  // time units
  double recurrence_factor = 3.0;
  double scale = 1.0;
  Criterion criterion = Criterion::window_variation;
};

/// Declares a recurrence when the trailing-window envelope of g rebounds
/// above recurrence_factor times the minimum it reached after a genuine
/// decay (envelope below half the global maximum).
class RecurrenceTracker {
 public:
  RecurrenceTracker(double factor, int env_window)
      : factor_(factor), env_window_(std::max(2, env_window)) {}

  void add(double s, double g);
  bool recurrence() const { return recurrence_; }
  double onset() const { return onset_; }

 private:
  double factor_;
  int env_window_;
  std::vector<double> g_;
  double gmax_ = 0.0;
  double env_min_ = std::numeric_limits<double>::infinity();
  bool recurrence_ = false;
  double onset_ = std::numeric_limits<double>::quiet_NaN();
};

/// Diagnostics for one s -> -infinity surrogate scan. `s` decreases from the
/// first entry; `g` is the (A5)-type commutator-norm integrand;
/// `running_integral` its cumulative Simpson integral from s[0].
struct PlateauReport {
  std::vector<double> s;
  std::vector<double> g;
  std::vector<double> running_integral;
  std::vector<double> monitored;

  bool plateau_detected = false;
  int plateau_index = -1;
  double plateau_value = 0.0;   // running integral at the plateau
  double recurrence_onset = std::numeric_limits<double>::quiet_NaN();
  double tail_estimate = 0.0;
  double fit_exponent = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;         // no plateau before recurrence / end of scan
};

/// Scans a monitored scalar series r(s_k) (s strictly decreasing) plus the
/// envelope series g(s_k); detects a plateau of r and a recurrence of g.
class PlateauMonitor {
 public:
  PlateauMonitor(PlateauParams params, double step);

  /// Feed one sample; returns false once a plateau or recurrence is found.
  bool add(double s, double g, double monitored);

  bool plateau() const { return plateau_; }
  bool recurrence() const { return tracker_.recurrence(); }
  int plateau_index() const { return plateau_index_; }
  double recurrence_onset() const { return tracker_.onset(); }
  const std::vector<double>& monitored() const { return monitored_; }
  const std::vector<double>& svals() const { return svals_; }
  const std::vector<double>& gvals() const { return gvals_; }

 private:
  PlateauParams p_;
  int win_samples_;
  RecurrenceTracker tracker_;
  std::vector<double> svals_, gvals_, monitored_;
  bool plateau_ = false;
  int plateau_index_ = -1;
};

/// Upper envelope of g via strict local maxima; returns (s, g) pairs.
std::vector<std::pair<double, double>> local_maxima(const std::vector<double>& s,
                                                    const std::vector<double>& g);

/// Log-log least-squares slope of the envelope over a window of |s|;
/// NaN when fewer than three maxima are available.
double fit_power_law(const std::vector<std::pair<double, double>>& envelope,
                     double s_abs_min, double s_abs_max);

/// Tail estimate for int_{-inf}^{s_end} g ds from a fitted envelope
/// g ~ C |s|^p: g_end |s_end| / (-p-1) when p < -1, otherwise the crude
/// window bound g_end * window (divergent-tail regime; callers flag it).
double tail_from_fit(double g_end, double s_end, double exponent, double window);

}  // namespace nnes
