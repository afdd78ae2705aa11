#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mmaux/errors.hpp"
#include "mmaux/gradcheck.hpp"
#include "mmaux/losses.hpp"
#include "mmaux/rng.hpp"

using namespace mmaux;

namespace {

// Unit-row matrix from a raw random draw, as a plain tensor.
Tensor unit_rows(int n, int d, Rng& rng) {
  Tensor t = Tensor::uniform({n, d}, -1.0, 1.0, rng);
  for (int r = 0; r < n; ++r) {
    double sq = 0.0;
    for (int c = 0; c < d; ++c) sq += t.at(r, c) * t.at(r, c);
    const double norm = std::sqrt(sq);
    for (int c = 0; c < d; ++c) t.at(r, c) /= norm;
  }
  return t;
}

double itc_value(const Tensor& l, const Tensor& i, double tau_value, bool inverse = false) {
  Tape tape;
  ParamBinding bind(tape);
  Param tau("tau", Tensor::scalar(tau_value));
  return itc_loss(tape.leaf(l), tape.leaf(i), tau, bind, inverse).item();
}

}  // namespace

TEST_CASE("contrastive loss on collapsed and identity batches") {
  // All rows equal: every similarity is 1, softmax is uniform, loss = ln N.
  Tensor same = Tensor::zeros({4, 3});
  for (int r = 0; r < 4; ++r) same.at(r, 0) = 1.0;
  CHECK(std::fabs(itc_value(same, same, 0.0) - std::log(4.0)) < 1e-9);
  CHECK(std::fabs(itc_value(same, same, kTauInit) - std::log(4.0)) < 1e-9);

  // Orthonormal rows at temperature 1: diagonal 1, off-diagonal 0.
  Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
  CHECK(itc_value(eye, eye, 0.0) == doctest::Approx(0.3132616875182228).epsilon(1e-12));

  CHECK(kTauInit == doctest::Approx(std::log(0.07)).epsilon(1e-15));
}

TEST_CASE("contrastive loss symmetry and permutation invariance are exact") {
  Rng rng(71);
  Tensor l = unit_rows(5, 4, rng);
  Tensor i = unit_rows(5, 4, rng);
  const double forward = itc_value(l, i, kTauInit);
  const double swapped = itc_value(i, l, kTauInit);
  CHECK(forward == swapped);

  const int perm[5] = {3, 0, 4, 1, 2};
  Tensor lp = Tensor::zeros(l.shape), ip = Tensor::zeros(i.shape);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 4; ++c) {
      lp.at(r, c) = l.at(perm[r], c);
      ip.at(r, c) = i.at(perm[r], c);
    }
  CHECK(itc_value(lp, ip, kTauInit) == forward);
}

TEST_CASE("contrastive loss validates its inputs") {
  Tape tape;
  ParamBinding bind(tape);
  Param tau("tau", Tensor::scalar(0.0));
  Rng rng(73);
  Tensor good = unit_rows(3, 4, rng);
  Tensor bad = good;
  bad.at(1, 0) *= 2.0;
  CHECK_THROWS_AS(itc_loss(tape.leaf(good), tape.leaf(bad), tau, bind), InputError);
  CHECK_THROWS_AS(itc_loss(tape.leaf(good), tape.leaf(unit_rows(4, 4, rng)), tau, bind),
                  InputError);
  Tensor one = unit_rows(1, 4, rng);
  CHECK_THROWS_AS(itc_loss(tape.leaf(one), tape.leaf(one), tau, bind), DegenerateError);
}

TEST_CASE("temperature clamp saturates and kills the tau gradient") {
  Rng rng(79);
  Tensor l = unit_rows(3, 4, rng);
  Tensor i = unit_rows(3, 4, rng);
  // Both temperatures clamp to the same bound, so the losses are identical.
  CHECK(itc_value(l, i, -20.0) == itc_value(l, i, -25.0));
  CHECK(itc_value(l, i, 5.0) == itc_value(l, i, 9.0));

  Tape tape;
  ParamBinding bind(tape);
  Param tau("tau", Tensor::scalar(-20.0));
  Var loss = itc_loss(tape.leaf(l), tape.leaf(i), tau, bind);
  tape.backward(loss);
  bind.accumulate_grads();
  CHECK(tau.grad.data[0] == 0.0);
}

TEST_CASE("inverse temperature convention flips the exponent") {
  Rng rng(83);
  Tensor l = unit_rows(4, 3, rng);
  Tensor i = unit_rows(4, 3, rng);
  CHECK(itc_value(l, i, 0.5, true) ==
        doctest::Approx(itc_value(l, i, -0.5, false)).epsilon(1e-12));
  // At tau = 0 both conventions scale by exactly 1.
  CHECK(itc_value(l, i, 0.0, true) == doctest::Approx(itc_value(l, i, 0.0, false)).epsilon(1e-15));
}

TEST_CASE("contrastive loss gradients pass finite differences") {
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(200 + static_cast<std::uint64_t>(trial));
    Param raw_l("raw_l", Tensor::uniform({4, 3}, -1, 1, rng));
    Param raw_i("raw_i", Tensor::uniform({4, 3}, -1, 1, rng));
    Param tau("tau", Tensor::scalar(0.3));
    std::vector<Param*> params = {&raw_l, &raw_i, &tau};
    const bool inverse = trial % 2 == 1;

    auto loss_fn = [&](bool with_grad) {
      Tape t;
      ParamBinding bd(t);
      Var l = normalize_rows(bd.use(raw_l));
      Var i = normalize_rows(bd.use(raw_i));
      Var loss = itc_loss(l, i, tau, bd, inverse);
      if (with_grad) {
        t.backward(loss);
        bd.accumulate_grads();
      }
      return loss.item();
    };
    auto rep = finite_diff_check(params, loss_fn, 1e-5, 1e-4);
    CHECK_MESSAGE(rep.pass, rep.describe());
  }
}

TEST_CASE("matching perturbation honors the replacement probability") {
  Rng rng(89);
  ItmBatch keep = itm_perturb(6, 0.0, rng);
  for (int i = 0; i < 6; ++i) {
    CHECK(keep.image_indices[static_cast<std::size_t>(i)] == i);
    CHECK(keep.match_labels[static_cast<std::size_t>(i)] == 1);
  }
  ItmBatch swap = itm_perturb(6, 1.0, rng);
  for (int i = 0; i < 6; ++i) {
    CHECK(swap.image_indices[static_cast<std::size_t>(i)] != i);
    CHECK(swap.image_indices[static_cast<std::size_t>(i)] >= 0);
    CHECK(swap.image_indices[static_cast<std::size_t>(i)] < 6);
    CHECK(swap.match_labels[static_cast<std::size_t>(i)] == 0);
  }

  CHECK_THROWS_AS(itm_perturb(1, 0.5, rng), DegenerateError);
  CHECK_THROWS_AS(itm_perturb(4, 1.5, rng), ConfigError);

  Rng a(17), b(17);
  ItmBatch ba = itm_perturb(8, 0.5, a);
  ItmBatch bb = itm_perturb(8, 0.5, b);
  CHECK(ba.image_indices == bb.image_indices);
  CHECK(ba.match_labels == bb.match_labels);
}

TEST_CASE("matching perturbation statistics: rate and donor uniformity") {
  Rng rng(97);
  const int trials = 4000;
  int mismatches = 0;
  std::vector<int> donor_hits(5, 0);
  for (int t = 0; t < trials; ++t) {
    ItmBatch b = itm_perturb(5, 0.5, rng);
    for (int i = 0; i < 5; ++i) {
      if (b.match_labels[static_cast<std::size_t>(i)] == 0) {
        ++mismatches;
        if (i == 0) ++donor_hits[static_cast<std::size_t>(b.image_indices[0])];
      } else {
        CHECK(b.image_indices[static_cast<std::size_t>(i)] == i);
      }
    }
  }
  const double n = 5.0 * trials;
  const double rate = mismatches / n;
  CHECK(std::fabs(rate - 0.5) < 3.0 * std::sqrt(0.25 / n));

  // Donors for post 0 should spread uniformly over posts 1..4.
  int total0 = 0;
  for (int j = 1; j < 5; ++j) total0 += donor_hits[static_cast<std::size_t>(j)];
  CHECK(donor_hits[0] == 0);
  for (int j = 1; j < 5; ++j) {
    const double p = 0.25;
    const double sigma = std::sqrt(total0 * p * (1 - p));
    CHECK(std::fabs(donor_hits[static_cast<std::size_t>(j)] - total0 * p) < 4.0 * sigma);
  }
}

TEST_CASE("matching loss on hand-built heads") {
  Tape tape;
  ParamBinding bind(tape);
  Var h = tape.leaf(Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  ItmBatch itm;
  itm.image_indices = {0, 0, 2};
  itm.match_labels = {1, 0, 1};

  // Rows of the head matrix become the logits; true-class probabilities are
  // then 0.9, 0.2, 0.7.
  Param head_w("head_w", Tensor::matrix({{std::log(0.1), std::log(0.9)},
                                         {std::log(0.2), std::log(0.8)},
                                         {std::log(0.3), std::log(0.7)}}));
  Param head_b("head_b", Tensor::zeros({1, 2}));
  Var loss = itm_loss(h, itm, head_w, head_b, bind);
  CHECK(loss.item() == doctest::Approx(0.6904911240102196).epsilon(1e-12));

  Param zero_w("zero_w", Tensor::zeros({3, 2}));
  Var ln2 = itm_loss(h, itm, zero_w, head_b, bind);
  CHECK(ln2.item() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));

  ItmBatch inconsistent;
  inconsistent.image_indices = {0, 1, 2};
  inconsistent.match_labels = {1, 0, 1};
  CHECK_THROWS_AS(itm_loss(h, inconsistent, head_w, head_b, bind), InputError);
  ItmBatch short_batch;
  short_batch.image_indices = {0, 1};
  short_batch.match_labels = {1, 1};
  CHECK_THROWS_AS(itm_loss(h, short_batch, head_w, head_b, bind), InputError);
}

TEST_CASE("matching loss gradients pass finite differences") {
  Rng rng(101);
  Param raw_h("raw_h", Tensor::uniform({4, 6}, -1, 1, rng));
  Param head_w("head_w", Tensor::uniform({6, 2}, -1, 1, rng));
  Param head_b("head_b", Tensor::uniform({1, 2}, -1, 1, rng));
  std::vector<Param*> params = {&raw_h, &head_w, &head_b};
  ItmBatch itm;
  itm.image_indices = {2, 1, 3, 0};
  itm.match_labels = {0, 1, 0, 0};

  auto loss_fn = [&](bool with_grad) {
    Tape t;
    ParamBinding bd(t);
    Var loss = itm_loss(bd.use(raw_h), itm, head_w, head_b, bd);
    if (with_grad) {
      t.backward(loss);
      bd.accumulate_grads();
    }
    return loss.item();
  };
  auto rep = finite_diff_check(params, loss_fn, 1e-5, 1e-4);
  CHECK_MESSAGE(rep.pass, rep.describe());
}

TEST_CASE("balanced class weights follow total / (K * count)") {
  ClassWeights two = balanced_class_weights({10, 30});
  CHECK(two.weights[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(two.weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  ClassWeights three = balanced_class_weights({1, 1, 8});
  CHECK(three.weights[0] == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  CHECK(three.weights[1] == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  CHECK(three.weights[2] == doctest::Approx(10.0 / 24.0).epsilon(1e-15));

  CHECK_THROWS_AS(balanced_class_weights({5, 0}), ConfigError);
  CHECK_THROWS_AS(balanced_class_weights({}), ConfigError);
}

TEST_CASE("classification loss hand values") {
  Tape tape;
  // Uniform logits: every class equally likely, loss = ln K.
  ClassWeights unif{{1.0, 1.0, 1.0, 1.0}};
  Var flat = ce_loss(tape.leaf(Tensor::zeros({3, 4})), {0, 2, 3}, unif);
  CHECK(flat.item() == doctest::Approx(std::log(4.0)).epsilon(1e-15));

  // Two samples with true-class probabilities 1/2 and 1/4, weights 2 and 2/3.
  Tensor logits = Tensor::matrix({{0.0, 0.0}, {std::log(3.0), 0.0}});
  ClassWeights cw{{2.0, 2.0 / 3.0}};
  Var loss = ce_loss(tape.leaf(logits), {0, 1}, cw);
  CHECK(loss.item() == doctest::Approx(0.8664339756999316).epsilon(1e-12));

  CHECK_THROWS_AS(ce_loss(tape.leaf(logits), {0, 2}, cw), InputError);
  CHECK_THROWS_AS(ce_loss(tape.leaf(logits), {0}, cw), InputError);
  CHECK_THROWS_AS(ce_loss(tape.leaf(logits), {0, 1}, ClassWeights{{1.0}}), InputError);
}

TEST_CASE("classification loss gradients pass finite differences") {
  Rng rng(103);
  Param raw("raw_logits", Tensor::uniform({4, 3}, -2, 2, rng));
  std::vector<Param*> params = {&raw};
  ClassWeights cw{{1.5, 0.7, 1.0}};
  std::vector<int> labels = {0, 2, 1, 1};

  auto loss_fn = [&](bool with_grad) {
    Tape t;
    ParamBinding bd(t);
    Var loss = ce_loss(bd.use(raw), labels, cw);
    if (with_grad) {
      t.backward(loss);
      bd.accumulate_grads();
    }
    return loss.item();
  };
  auto rep = finite_diff_check(params, loss_fn, 1e-5, 1e-4);
  CHECK_MESSAGE(rep.pass, rep.describe());
}

TEST_CASE("joint loss mixes components by their weights") {
  LossWeights preset;
  preset.lambda1 = 0.8;
  preset.lambda2 = 0.1;
  preset.lambda3 = 0.1;
  preset.validate();
  CHECK(joint_loss_value(1.0, 0.5, 0.7, preset) == doctest::Approx(0.92).epsilon(1e-15));

  Tape tape;
  Var ce = tape.leaf(Tensor::scalar(1.0));
  Var itc = tape.leaf(Tensor::scalar(0.5));
  Var itm = tape.leaf(Tensor::scalar(0.7));
  Var mixed = joint_loss(ce, itc, itm, preset, tape);
  CHECK(mixed.item() == doctest::Approx(0.92).epsilon(1e-15));

  // Classification-only weights reproduce the plain loss bit for bit, even
  // when the auxiliary terms are on the tape.
  LossWeights ce_only;
  Var alone = joint_loss(ce, itc, itm, ce_only, tape);
  CHECK(alone.item() == ce.item());

  Var empty = joint_loss(std::nullopt, std::nullopt, std::nullopt, preset, tape);
  CHECK(empty.item() == 0.0);

  LossWeights bad;
  bad.lambda2 = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  LossWeights no_ce;
  no_ce.lambda1 = 0.0;
  CHECK_THROWS_AS(no_ce.validate(), ConfigError);
}

TEST_CASE("joint loss backpropagates lambda-scaled gradients") {
  Tape tape;
  ParamBinding bind(tape);
  Param a("a", Tensor::scalar(2.0));
  Param b("b", Tensor::scalar(-1.0));
  LossWeights w;
  w.lambda1 = 0.9;
  w.lambda2 = 0.1;
  Var loss = joint_loss(bind.use(a), bind.use(b), std::nullopt, w, tape);
  tape.backward(loss);
  bind.accumulate_grads();
  CHECK(a.grad.data[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(b.grad.data[0] == doctest::Approx(0.1).epsilon(1e-15));
}
