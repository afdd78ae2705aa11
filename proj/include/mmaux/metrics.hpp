#pragma once

#include <string>
#include <vector>

#include "mmaux/synthdata.hpp"

namespace mmaux {

// Rows index the gold label, columns the prediction.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long> counts;

  long at(int gold, int pred) const {
    return counts[static_cast<std::size_t>(gold * num_classes + pred)];
  }
  long& at(int gold, int pred) {
    return counts[static_cast<std::size_t>(gold * num_classes + pred)];
  }
  long total() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& golds,
                                 int num_classes);

struct F1Breakdown {
  std::vector<double> per_class;
  double weighted = 0.0;
};

// Per-class F1 with support weights. A class scores 0 when precision and
// recall are both zero; classes absent from the gold labels carry no weight.
F1Breakdown f1_breakdown(const std::vector<int>& preds, const std::vector<int>& golds,
                         int num_classes);

// Same, with the class count inferred from the largest label seen.
double weighted_f1(const std::vector<int>& preds, const std::vector<int>& golds);

struct RelationAccuracy {
  RelationTag tag;
  int support = 0;
  int correct = 0;
  double accuracy = 0.0;
};

// Per-tag rows for tags that appear in the data, in relation-mix order.
// Keeping the raw correct counts makes "support-weighted tag accuracy equals
// overall accuracy" an integer identity.
struct RelationBreakdown {
  std::vector<RelationAccuracy> rows;
};

RelationBreakdown accuracy_by_relation(const std::vector<int>& preds,
                                       const std::vector<int>& golds,
                                       const std::vector<RelationTag>& relations);

// Short tag key for tables and JSON: "img" = image adds meaning, "txt" =
// text represented in the image, '+'/'-' for set/unset.
std::string relation_key(const RelationTag& tag);

struct Aggregate {
  double mean = 0.0;
  double sample_std = 0.0;  // n-1 denominator, 0 when n == 1
};

Aggregate aggregate(const std::vector<double>& values);

struct WelchResult {
  double t = 0.0;
  double degrees_of_freedom = 0.0;
  double p_two_sided = 1.0;
};

// Unequal-variance t statistic with Welch-Satterthwaite degrees of freedom.
// Throws InputError when either sample has fewer than two values and
// DegenerateError when both samples have zero variance.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// I_x(a, b) via the symmetric continued-fraction expansion.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_two_sided_p(double t, double degrees_of_freedom);

}  // namespace mmaux
