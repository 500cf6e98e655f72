#include "explmia/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace explmia::evalkit {

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_curve: size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (auto l : labels) (l ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("roc_curve: need at least one positive and one negative label");
  }
  for (double s : scores) {
    // NaNs would break the sort's strict weak ordering; reject loudly
    if (!std::isfinite(s)) throw std::invalid_argument("roc_curve: non-finite score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    double v = scores[order[i]];
    // consume the whole tie group as one operating point
    while (i < order.size() && scores[order[i]] == v) {
      (labels[order[i]] ? tp : fp)++;
      ++i;
    }
    curve.points.emplace_back(static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos);
  }
  if (curve.points.back() != std::make_pair(1.0, 1.0)) curve.points.emplace_back(1.0, 1.0);
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double x) {
  if (x <= 0.0 || x >= 1.0) throw std::invalid_argument("tpr_at_fpr: x must be in (0, 1)");
  double best = 0.0;
  for (const auto& [fpr, tpr] : curve.points) {
    if (fpr <= x) best = std::max(best, tpr);
  }
  return best;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& [x0, y0] = curve.points[i - 1];
    const auto& [x1, y1] = curve.points[i];
    area += (x1 - x0) * 0.5 * (y0 + y1);
  }
  return area;
}

Aggregate aggregate(const std::vector<double>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: empty run set");
  Aggregate a;
  a.run_count = static_cast<int>(runs.size());
  for (double v : runs) a.mean += v;
  a.mean /= runs.size();
  if (runs.size() > 1) {
    double ss = 0.0;
    for (double v : runs) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (runs.size() - 1));
  }
  return a;
}

}  // namespace explmia::evalkit
