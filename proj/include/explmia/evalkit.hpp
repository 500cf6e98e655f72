#ifndef EXPLMIA_EVALKIT_HPP
#define EXPLMIA_EVALKIT_HPP

#include <cstdint>
#include <utility>
#include <vector>

namespace explmia::evalkit {

// Operating points sorted by fpr, starting at (0,0) and ending at (1,1).
struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
};

// Threshold sweep over distinct score values with predict-member iff
// score >= threshold; tied scores collapse into one operating point.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// Max TPR over operating points with FPR <= x (step convention, no
// interpolation).
double tpr_at_fpr(const RocCurve& curve, double x);

// Trapezoidal area.
double auc(const RocCurve& curve);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample std, 0 for a single run
  int run_count = 0;
};

Aggregate aggregate(const std::vector<double>& runs);

struct AttackMetrics {
  Aggregate tpr_at_fpr_001;
  Aggregate tpr_at_fpr_01;
  Aggregate auc;
};

}  // namespace explmia::evalkit

#endif  // EXPLMIA_EVALKIT_HPP
