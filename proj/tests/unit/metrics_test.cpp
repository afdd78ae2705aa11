#include <cmath>
#include <vector>

#include "doctest.h"
#include "mmaux/errors.hpp"
#include "mmaux/metrics.hpp"
#include "mmaux/rng.hpp"

using namespace mmaux;

namespace {

// Independent reference: explicit per-class true/false positive counts.
double oracle_weighted_f1(const std::vector<int>& preds, const std::vector<int>& golds,
                          int num_classes) {
  double weighted = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    long tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (golds[i] == c) ++support;
      if (preds[i] == c && golds[i] == c) ++tp;
      if (preds[i] == c && golds[i] != c) ++fp;
      if (preds[i] != c && golds[i] == c) ++fn;
    }
    double f1 = 0.0;
    if (2 * tp + fp + fn > 0) f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    weighted += f1 * (static_cast<double>(support) / static_cast<double>(preds.size()));
  }
  return weighted;
}

}  // namespace

TEST_CASE("confusion matrix counts and validates") {
  ConfusionMatrix cm = confusion_matrix({0, 1, 1, 0}, {0, 0, 1, 1}, 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 0) == 1);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.total() == 4);
  CHECK_THROWS_AS(confusion_matrix({0, 1}, {0}, 2), InputError);
  CHECK_THROWS_AS(confusion_matrix({0, 2}, {0, 1}, 2), InputError);
  CHECK_THROWS_AS(confusion_matrix({}, {}, 2), InputError);
}

TEST_CASE("weighted F1 hand values") {
  CHECK(weighted_f1({0, 1, 2, 1}, {0, 1, 2, 1}) == 1.0);

  // Class 0: precision 1, recall 1/2 -> 2/3. Class 1: precision 2/3,
  // recall 1 -> 4/5. Supports are equal, so the mean is 11/15.
  const double hand = weighted_f1({0, 1, 1, 1}, {0, 0, 1, 1});
  CHECK(hand == doctest::Approx(11.0 / 15.0).epsilon(1e-12));
  CHECK(std::fabs(hand - 0.7333) < 5e-5);

  // A class that never occurs in the gold labels carries no weight.
  CHECK(weighted_f1({0, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK(f1_breakdown({0, 0, 0}, {0, 0, 0}, 2).weighted == 1.0);
  F1Breakdown br = f1_breakdown({0, 1, 1, 1}, {0, 0, 1, 1}, 2);
  CHECK(br.per_class[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(br.per_class[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("weighted F1 matches the brute-force oracle on random instances") {
  Rng rng(111);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + rng.next_int(3);
    const int n = 1 + rng.next_int(50);
    std::vector<int> preds(static_cast<std::size_t>(n)), golds(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      preds[static_cast<std::size_t>(i)] = rng.next_int(k);
      golds[static_cast<std::size_t>(i)] = rng.next_int(k);
    }
    const double ours = f1_breakdown(preds, golds, k).weighted;
    const double ref = oracle_weighted_f1(preds, golds, k);
    CHECK(std::fabs(ours - ref) <= 1e-12);
  }
}

TEST_CASE("weighted F1 is invariant under relabeling bijections") {
  Rng rng(113);
  const int relabel[3] = {2, 0, 1};
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + rng.next_int(40);
    std::vector<int> preds(static_cast<std::size_t>(n)), golds(static_cast<std::size_t>(n));
    std::vector<int> rp(static_cast<std::size_t>(n)), rg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      preds[static_cast<std::size_t>(i)] = rng.next_int(3);
      golds[static_cast<std::size_t>(i)] = rng.next_int(3);
      rp[static_cast<std::size_t>(i)] = relabel[preds[static_cast<std::size_t>(i)]];
      rg[static_cast<std::size_t>(i)] = relabel[golds[static_cast<std::size_t>(i)]];
    }
    CHECK(f1_breakdown(preds, golds, 3).weighted ==
          doctest::Approx(f1_breakdown(rp, rg, 3).weighted).epsilon(1e-12));
  }
}

TEST_CASE("relation breakdown counts supports and drops absent tags") {
  const RelationTag tt{true, true}, tf{true, false}, ft{false, true}, ff{false, false};
  RelationBreakdown br = accuracy_by_relation({0, 1, 0, 1}, {0, 1, 1, 0}, {tt, tf, ft, ff});
  REQUIRE(br.rows.size() == 4);
  CHECK(br.rows[0].accuracy == 1.0);
  CHECK(br.rows[1].accuracy == 1.0);
  CHECK(br.rows[2].accuracy == 0.0);
  CHECK(br.rows[3].accuracy == 0.0);

  RelationBreakdown two = accuracy_by_relation({0, 0}, {0, 1}, {tt, tt});
  REQUIRE(two.rows.size() == 1);
  CHECK(two.rows[0].support == 2);
  CHECK(two.rows[0].correct == 1);
  CHECK(two.rows[0].accuracy == 0.5);

  CHECK_THROWS_AS(accuracy_by_relation({0}, {0}, {tt, tf}), InputError);
  CHECK(relation_key(tt) == "img+txt+");
  CHECK(relation_key(ff) == "img-txt-");
}

TEST_CASE("relation supports sum to n and recover overall accuracy exactly") {
  Rng rng(127);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + rng.next_int(60);
    std::vector<int> preds(static_cast<std::size_t>(n)), golds(static_cast<std::size_t>(n));
    std::vector<RelationTag> rel(static_cast<std::size_t>(n));
    long overall_correct = 0;
    for (int i = 0; i < n; ++i) {
      preds[static_cast<std::size_t>(i)] = rng.next_int(3);
      golds[static_cast<std::size_t>(i)] = rng.next_int(3);
      rel[static_cast<std::size_t>(i)] = {rng.next_int(2) == 1, rng.next_int(2) == 1};
      if (preds[static_cast<std::size_t>(i)] == golds[static_cast<std::size_t>(i)])
        ++overall_correct;
    }
    RelationBreakdown br = accuracy_by_relation(preds, golds, rel);
    long support_sum = 0, correct_sum = 0;
    for (const RelationAccuracy& row : br.rows) {
      support_sum += row.support;
      correct_sum += row.correct;
    }
    CHECK(support_sum == n);
    CHECK(correct_sum == overall_correct);
    // Integer counts make the support-weighted identity exact.
    CHECK(static_cast<double>(correct_sum) / n == static_cast<double>(overall_correct) / n);
  }
}

TEST_CASE("aggregate mean and sample standard deviation") {
  Aggregate one = aggregate({5.0});
  CHECK(one.mean == 5.0);
  CHECK(one.sample_std == 0.0);

  Aggregate abc = aggregate({1.0, 2.0, 3.0});
  CHECK(abc.mean == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(abc.sample_std == doctest::Approx(1.0).epsilon(1e-15));

  Aggregate seeds = aggregate({0.731, 0.746, 0.735});
  CHECK(seeds.mean == doctest::Approx(0.7373333333333333).epsilon(1e-15));
  CHECK(seeds.sample_std == doctest::Approx(0.007767453465154036).epsilon(1e-12));

  CHECK_THROWS_AS(aggregate({}), InputError);
}

TEST_CASE("incomplete beta reference values") {
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
  // I_x(2,2) = 3x^2 - 2x^3.
  CHECK(regularized_incomplete_beta(2.0, 2.0, 0.25) == doctest::Approx(0.15625).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(4.0, 0.5, 1.0) == 1.0);
  CHECK(regularized_incomplete_beta(4.0, 0.5, 0.0) == 0.0);
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  const double lhs = regularized_incomplete_beta(2.5, 1.5, 0.3);
  const double rhs = 1.0 - regularized_incomplete_beta(1.5, 2.5, 0.7);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  CHECK_THROWS_AS(regularized_incomplete_beta(-1.0, 1.0, 0.5), InputError);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), InputError);
}

TEST_CASE("student t tail probabilities match closed forms") {
  // df=1 is Cauchy: p = 1 - (2/pi) atan(|t|).
  CHECK(student_t_two_sided_p(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  // df=2 has p = 1 - |t| / sqrt(2 + t^2).
  CHECK(student_t_two_sided_p(2.0, 2.0) ==
        doctest::Approx(1.0 - 2.0 / std::sqrt(6.0)).epsilon(1e-10));
  CHECK(student_t_two_sided_p(0.0, 7.0) == 1.0);
  CHECK_THROWS_AS(student_t_two_sided_p(1.0, 0.0), InputError);
}

TEST_CASE("welch t test reference cases") {
  WelchResult r = welch_t_test({1, 2, 3, 4, 5}, {2, 3, 4, 5, 6});
  CHECK(r.t == -1.0);
  CHECK(r.degrees_of_freedom == 8.0);
  CHECK(r.p_two_sided == doctest::Approx(0.34659350708733416).epsilon(1e-10));

  WelchResult seeds = welch_t_test({0.70, 0.72, 0.71}, {0.74, 0.75, 0.76});
  CHECK(seeds.t == doctest::Approx(-4.898979485566356).epsilon(1e-12));
  CHECK(seeds.degrees_of_freedom == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(seeds.p_two_sided == doctest::Approx(0.00804989310083772).epsilon(1e-9));

  // One degenerate sample still yields a finite test.
  WelchResult one = welch_t_test({1, 1, 1}, {1, 2, 3});
  CHECK(one.degrees_of_freedom == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(one.p_two_sided ==
        doctest::Approx(1.0 - std::sqrt(3.0) / std::sqrt(5.0)).epsilon(1e-10));
}

TEST_CASE("welch t test symmetry and invariances") {
  std::vector<double> a = {0.61, 0.64, 0.59, 0.66};
  std::vector<double> b = {0.63, 0.70, 0.68};
  WelchResult ab = welch_t_test(a, b);
  WelchResult ba = welch_t_test(b, a);
  CHECK(ab.t == -ba.t);
  CHECK(ab.p_two_sided == ba.p_two_sided);

  std::vector<double> a_shift = a, b_shift = b;
  for (double& v : a_shift) v += 0.17;
  for (double& v : b_shift) v += 0.17;
  WelchResult shifted = welch_t_test(a_shift, b_shift);
  CHECK(shifted.p_two_sided == doctest::Approx(ab.p_two_sided).epsilon(1e-9));

  WelchResult same = welch_t_test(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p_two_sided == 1.0);

  CHECK_THROWS_AS(welch_t_test({1.0}, {1.0, 2.0}), InputError);
  CHECK_THROWS_AS(welch_t_test({0.5, 0.5, 0.5}, {0.9, 0.9, 0.9}), DegenerateError);
}
