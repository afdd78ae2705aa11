#include "mmaux/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmaux/errors.hpp"

namespace mmaux {

long ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& golds,
                                 int num_classes) {
  if (preds.size() != golds.size())
    throw InputError("confusion_matrix: preds and golds differ in length");
  if (preds.empty()) throw InputError("confusion_matrix: need at least one example");
  if (num_classes < 1) throw InputError("confusion_matrix: need at least one class");
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int g = golds[i], p = preds[i];
    if (g < 0 || g >= num_classes || p < 0 || p >= num_classes)
      throw InputError("confusion_matrix: label outside [0, " + std::to_string(num_classes) +
                       ")");
    ++cm.at(g, p);
  }
  return cm;
}

F1Breakdown f1_breakdown(const std::vector<int>& preds, const std::vector<int>& golds,
                         int num_classes) {
  ConfusionMatrix cm = confusion_matrix(preds, golds, num_classes);
  const double n = static_cast<double>(cm.total());
  F1Breakdown out;
  out.per_class.resize(static_cast<std::size_t>(num_classes), 0.0);
  for (int c = 0; c < num_classes; ++c) {
    long tp = cm.at(c, c), gold_c = 0, pred_c = 0;
    for (int j = 0; j < num_classes; ++j) {
      gold_c += cm.at(c, j);
      pred_c += cm.at(j, c);
    }
    const double precision = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    const double recall = gold_c > 0 ? static_cast<double>(tp) / gold_c : 0.0;
    const double f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    out.per_class[static_cast<std::size_t>(c)] = f1;
    out.weighted += (gold_c / n) * f1;
  }
  return out;
}

double weighted_f1(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size())
    throw InputError("weighted_f1: preds and golds differ in length");
  if (preds.empty()) throw InputError("weighted_f1: need at least one example");
  int k = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    k = std::max({k, preds[i] + 1, golds[i] + 1});
  return f1_breakdown(preds, golds, k).weighted;
}

RelationBreakdown accuracy_by_relation(const std::vector<int>& preds,
                                       const std::vector<int>& golds,
                                       const std::vector<RelationTag>& relations) {
  if (preds.size() != golds.size() || preds.size() != relations.size())
    throw InputError("accuracy_by_relation: preds, golds, relations differ in length");
  const RelationTag order[4] = {{true, true}, {true, false}, {false, true}, {false, false}};
  RelationBreakdown out;
  for (const RelationTag& tag : order) {
    RelationAccuracy row;
    row.tag = tag;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (!(relations[i] == tag)) continue;
      ++row.support;
      if (preds[i] == golds[i]) ++row.correct;
    }
    if (row.support == 0) continue;
    row.accuracy = static_cast<double>(row.correct) / row.support;
    out.rows.push_back(row);
  }
  return out;
}

std::string relation_key(const RelationTag& tag) {
  return std::string("img") + (tag.image_adds ? '+' : '-') + "txt" +
         (tag.text_represented ? '+' : '-');
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) throw InputError("aggregate: need at least one value");
  Aggregate out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.sample_std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

// Continued fraction for the incomplete beta, evaluated with the modified
// Lentz scheme.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double sample_variance(const std::vector<double>& v, double mean) {
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return sq / static_cast<double>(v.size() - 1);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw InputError("regularized_incomplete_beta: a and b must be positive");
  if (x < 0.0 || x > 1.0)
    throw InputError("regularized_incomplete_beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // The continued fraction converges fast on the left of the distribution
  // mass; use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the right.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double degrees_of_freedom) {
  if (degrees_of_freedom <= 0.0)
    throw InputError("student_t_two_sided_p: degrees of freedom must be positive");
  const double x = degrees_of_freedom / (degrees_of_freedom + t * t);
  return regularized_incomplete_beta(degrees_of_freedom / 2.0, 0.5, x);
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw InputError("welch_t_test: each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  const double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  const double sea = va / na, seb = vb / nb;
  const double se2 = sea + seb;
  if (se2 == 0.0)
    throw DegenerateError("welch_t_test: both samples have zero variance");
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.degrees_of_freedom =
      se2 * se2 / (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0));
  r.p_two_sided = student_t_two_sided_p(r.t, r.degrees_of_freedom);
  return r;
}

}  // namespace mmaux
