#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "factalign/embedding.hpp"
#include "factalign/matching.hpp"
#include "factalign/model.hpp"

namespace factalign {

/// 1 - F1 between predicted and gold pair sets; 0 when both are empty.
double pair_deviation(std::span<const IndexPair> predicted, std::span<const IndexPair> gold);

/// A gold matching together with the two annotations it refers to.
struct GoldCase {
  GoldMatching gold;
  Annotation a;
  Annotation b;
};

/// Checks indices against the annotations and that pairs form a partial
/// injective map. Throws InvalidArgument.
void validate_gold(const GoldCase& gold_case);

enum class ThresholdTieBreak { Lowest, Highest };

struct CurvePoint {
  double threshold = 0.0;
  double mean_deviation = 0.0;
};

struct CalibrationReport {
  double best_threshold = 0.0;
  double best_deviation = 0.0;
  std::vector<CurvePoint> objective_curve;
  std::size_t gold_count = 0;
};

inline constexpr double kDefaultGridStep = 0.01;

/// Threshold grid {0, step, 2 step, ..., 1}. When 1/step is an integer N
/// the points are k/N exactly; otherwise 1.0 is appended after the last
/// multiple of step. Throws InvalidArgument unless 0 < step <= 0.1.
std::vector<double> threshold_grid(double grid_step);

/// Grid search for the global threshold minimizing mean pair_deviation
/// against the gold matchings. Throws EmptyGoldSet.
CalibrationReport calibrate_threshold(std::span<const GoldCase> golds, const Embedder& embedder,
                                      double grid_step = kDefaultGridStep,
                                      ThresholdTieBreak tie_break = ThresholdTieBreak::Lowest);

/// Best achievable mean deviation over the default grid; lower is better.
double evaluate_provider(std::span<const GoldCase> golds, const Embedder& embedder);

void to_json(nlohmann::json& j, const CalibrationReport& r);

}  // namespace factalign
