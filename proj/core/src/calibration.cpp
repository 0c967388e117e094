#include "factalign/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "factalign/error.hpp"

namespace factalign {

using nlohmann::json;

double pair_deviation(std::span<const IndexPair> predicted, std::span<const IndexPair> gold) {
  const std::set<IndexPair> p(predicted.begin(), predicted.end());
  const std::set<IndexPair> g(gold.begin(), gold.end());
  if (p.empty() && g.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& pair : p) common += g.count(pair);
  const double f1 = 2.0 * static_cast<double>(common) / static_cast<double>(p.size() + g.size());
  return 1.0 - f1;
}

void validate_gold(const GoldCase& gold_case) {
  const auto& g = gold_case.gold;
  if (gold_case.a.id != g.annotation_a_id || gold_case.b.id != g.annotation_b_id) {
    throw Error(ErrorKind::InvalidArgument, "gold '" + g.id + "' does not reference the given annotations");
  }
  std::set<std::size_t> seen_a, seen_b;
  for (const auto& [ia, ib] : g.pairs) {
    if (ia >= gold_case.a.facts.size() || ib >= gold_case.b.facts.size()) {
      throw Error(ErrorKind::InvalidArgument, "gold '" + g.id + "' pair index out of range");
    }
    if (!seen_a.insert(ia).second || !seen_b.insert(ib).second) {
      throw Error(ErrorKind::InvalidArgument, "gold '" + g.id + "' pairs are not injective");
    }
  }
}

std::vector<double> threshold_grid(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.1)) {
    throw Error(ErrorKind::InvalidArgument, "grid_step must satisfy 0 < step <= 0.1");
  }
  std::vector<double> grid;
  const double inv = 1.0 / grid_step;
  const double steps = std::round(inv);
  if (std::abs(inv - steps) < 1e-9) {
    const auto n = static_cast<long>(steps);
    for (long k = 0; k <= n; ++k) grid.push_back(static_cast<double>(k) / static_cast<double>(n));
  } else {
    for (long k = 0; static_cast<double>(k) * grid_step <= 1.0; ++k) {
      grid.push_back(static_cast<double>(k) * grid_step);
    }
    if (grid.back() < 1.0) grid.push_back(1.0);
  }
  return grid;
}

CalibrationReport calibrate_threshold(std::span<const GoldCase> golds, const Embedder& embedder,
                                      double grid_step, ThresholdTieBreak tie_break) {
  if (golds.empty()) throw Error(ErrorKind::EmptyGoldSet, "empty gold set");
  const auto grid = threshold_grid(grid_step);

  // The assignment does not depend on the threshold: solve each gold pair
  // once and only re-filter per grid point.
  std::vector<MatchResult> solved;
  solved.reserve(golds.size());
  for (const auto& g : golds) {
    validate_gold(g);
    solved.push_back(match_annotations(g.a, g.b, embedder, 0.0));
  }

  CalibrationReport report;
  report.gold_count = golds.size();
  for (double t : grid) {
    double sum = 0.0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const auto predicted = filter_matches(solved[i].assignment, solved[i].matrix, t);
      sum += pair_deviation(predicted, golds[i].gold.pairs);
    }
    report.objective_curve.push_back({t, sum / static_cast<double>(golds.size())});
  }

  const auto& curve = report.objective_curve;
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const bool better = tie_break == ThresholdTieBreak::Lowest
                            ? curve[i].mean_deviation < curve[best].mean_deviation
                            : curve[i].mean_deviation <= curve[best].mean_deviation;
    if (better) best = i;
  }
  report.best_threshold = curve[best].threshold;
  report.best_deviation = curve[best].mean_deviation;
  return report;
}

double evaluate_provider(std::span<const GoldCase> golds, const Embedder& embedder) {
  return calibrate_threshold(golds, embedder, kDefaultGridStep).best_deviation;
}

void to_json(json& j, const CalibrationReport& r) {
  json curve = json::array();
  for (const auto& p : r.objective_curve) {
    curve.push_back({{"threshold", p.threshold}, {"mean_deviation", p.mean_deviation}});
  }
  j = json{{"best_threshold", r.best_threshold},
           {"best_deviation", r.best_deviation},
           {"objective_curve", std::move(curve)},
           {"gold_count", r.gold_count}};
}

}  // namespace factalign
