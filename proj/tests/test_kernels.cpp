#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atn/autodiff.hpp"
#include "atn/bilstm.hpp"
#include "atn/gradcheck.hpp"
#include "atn/params.hpp"
#include "testutil.hpp"

using namespace atn;
using testutil::random_simplex;
using testutil::random_tensor;

TEST_CASE("tensor basics") {
  Tensor t({2, 3});
  REQUIRE(t.numel() == 6);
  t(1, 2) = 5.0;
  REQUIRE(t.v[5] == 5.0);
  REQUIRE(t.all_finite());
  t(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_FALSE(t.all_finite());
  REQUIRE_THROWS_AS(Tensor({2, 2}, {1.0}), ArgumentError);
}

TEST_CASE("rng determinism and uniform range") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 1000; ++i) {
    double x = a.uniform();
    REQUIRE(x == b.uniform());
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
  REQUIRE(a.position() == 1000);
  bool diverged = false;
  for (int i = 0; i < 10; ++i) diverged |= (a.uniform() != c.uniform());
  REQUIRE(diverged);
}

TEST_CASE("embed_lookup gathers rows; identity fixture") {
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  Var table = leaf(eye, false);
  Var out = embed_lookup(table, {2});
  REQUIRE(out->val.rows() == 1);
  REQUIRE(out->val(0, 0) == 0.0);
  REQUIRE(out->val(0, 1) == 0.0);
  REQUIRE(out->val(0, 2) == 1.0);
  REQUIRE_THROWS_AS(embed_lookup(table, {3}), ArgumentError);
  REQUIRE_THROWS_AS(embed_lookup(table, {-1}), ArgumentError);
}

TEST_CASE("embed_lookup on a frozen table accumulates no gradient") {
  Rng rng(7);
  Var frozen = leaf(random_tensor({4, 3}, rng), false);
  Var out = embed_lookup(frozen, {1, 1, 2});
  Var loss = inner_const(out, random_tensor({3, 3}, rng));
  backward(loss);
  REQUIRE_FALSE(frozen->has_grad());
}

TEST_CASE("embed_lookup gradient check with repeated ids") {
  Rng rng(11);
  ParamStore store;
  Var table = store.add("table", random_tensor({5, 4}, rng));
  Tensor coeff = random_tensor({3, 4}, rng);
  auto report = grad_check(
      [&]() { return inner_const(embed_lookup(table, {0, 3, 0}), coeff); }, store);
  REQUIRE(report.max_rel_err < 1e-6);
}

TEST_CASE("bilinear_score closed forms") {
  Var w_eye = constant(Tensor({2, 2}, {1, 0, 0, 1}));
  Var h = constant(Tensor::vec({1, 0}));
  Var q = constant(Tensor::vec({1, 0}));
  Var zero = constant(Tensor::scalar(0.0));
  REQUIRE(bilinear_score(h, w_eye, q, zero)->val.item() == 1.0);

  Var w_zero = constant(Tensor({2, 2}));
  Var bias = constant(Tensor::scalar(2.5));
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Var hr = constant(random_tensor({2}, rng));
    Var qr = constant(random_tensor({2}, rng));
    REQUIRE(bilinear_score(hr, w_zero, qr, bias)->val.item() == 2.5);
  }
}

TEST_CASE("bilinear_score matches a naive triple loop") {
  Rng rng(5);
  std::size_t d = 4;
  Tensor ht = random_tensor({d}, rng), wt = random_tensor({d, d}, rng),
         qt = random_tensor({d}, rng);
  double b = rng.uniform(-1, 1);
  double expect = b;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) expect += ht(i) * wt(i, j) * qt(j);
  Var got = bilinear_score(constant(ht), constant(wt), constant(qt),
                           constant(Tensor::scalar(b)));
  REQUIRE_THAT(got->val.item(), Catch::Matchers::WithinAbs(expect, 1e-12));

  ParamStore store;
  Var hv = store.add("h", ht), wv = store.add("w", wt), qv = store.add("q", qt),
      bv = store.add("b", Tensor::scalar(b));
  auto report =
      grad_check([&]() { return bilinear_score(hv, wv, qv, bv); }, store);
  REQUIRE(report.max_rel_err < 1e-6);
}

TEST_CASE("softmax equal scores, frozen two-point value, shift invariance") {
  Var out = softmax(constant(Tensor::vec({3.0, 3.0, 3.0, 3.0})));
  for (double p : out->val.v) REQUIRE_THAT(p, Catch::Matchers::WithinAbs(0.25, 1e-15));

  // Long-double recomputation of softmax([0.4, 0.6]).
  long double e1 = expl(0.4L), e2 = expl(0.6L);
  double p1 = static_cast<double>(e1 / (e1 + e2));
  double p2 = static_cast<double>(e2 / (e1 + e2));
  Var two = softmax(constant(Tensor::vec({0.4, 0.6})));
  REQUIRE_THAT(two->val(0), Catch::Matchers::WithinAbs(p1, 1e-14));
  REQUIRE_THAT(two->val(1), Catch::Matchers::WithinAbs(p2, 1e-14));
  REQUIRE_THAT(two->val(0), Catch::Matchers::WithinAbs(0.45017, 1e-4));
  REQUIRE_THAT(two->val(1), Catch::Matchers::WithinAbs(0.54983, 1e-4));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s = random_tensor({5}, rng, -3, 3);
    Tensor shifted = s;
    for (double& x : shifted.v) x += 17.5;
    Tensor a = softmax(constant(s))->val;
    Tensor b = softmax(constant(shifted))->val;
    REQUIRE(testutil::max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("softmax outputs are a distribution and gradients check out") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng.below(6);
    Tensor s = random_tensor({n}, rng, -30, 30);
    Tensor p = softmax(constant(s))->val;
    double sum = 0.0;
    for (double x : p.v) {
      REQUIRE(x > 0.0);
      sum += x;
    }
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  ParamStore store;
  Var s = store.add("s", random_tensor({5}, rng, -2, 2));
  Tensor coeff = random_tensor({5}, rng);
  auto report =
      grad_check([&]() { return inner_const(softmax(s), coeff); }, store);
  REQUIRE(report.max_rel_err < 1e-6);
}

TEST_CASE("weighted_sum selects, averages, and matches the naive oracle") {
  Rng rng(17);
  Tensor h = random_tensor({4, 3}, rng);
  Var hv = constant(h);

  Tensor onehot({4});
  onehot(2) = 1.0;
  Tensor picked = weighted_sum(hv, constant(onehot))->val;
  for (std::size_t c = 0; c < 3; ++c) REQUIRE(picked(c) == h(2, c));

  Tensor uniform = Tensor::full({4}, 0.25);
  Tensor mean = weighted_sum(hv, constant(uniform))->val;
  for (std::size_t c = 0; c < 3; ++c) {
    double expect = (h(0, c) + h(1, c) + h(2, c) + h(3, c)) / 4.0;
    REQUIRE_THAT(mean(c), Catch::Matchers::WithinAbs(expect, 1e-12));
  }

  Tensor w = random_simplex(4, rng);
  Tensor got = weighted_sum(hv, constant(w))->val;
  for (std::size_t c = 0; c < 3; ++c) {
    double expect = 0.0;
    for (std::size_t i = 0; i < 4; ++i) expect += w(i) * h(i, c);
    REQUIRE_THAT(got(c), Catch::Matchers::WithinAbs(expect, 1e-12));
  }

  ParamStore store;
  Var hp = store.add("h", h), wp = store.add("w", w);
  Tensor coeff = random_tensor({3}, rng);
  auto report =
      grad_check([&]() { return inner_const(weighted_sum(hp, wp), coeff); }, store);
  REQUIRE(report.max_rel_err < 1e-6);
  REQUIRE_THROWS_AS(weighted_sum(hv, constant(Tensor({3}))), ArgumentError);
}

TEST_CASE("classify degenerate heads") {
  Var w0 = constant(Tensor({3, 4}));
  Var b0 = constant(Tensor({3}));
  Rng rng(19);
  Var r = constant(random_tensor({4}, rng));
  Tensor p = classify(r, w0, b0)->val;
  for (double x : p.v) REQUIRE_THAT(x, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));

  Var biased = constant(Tensor::vec({10, 0, 0}));
  Tensor q = classify(r, w0, biased)->val;
  REQUIRE(q(0) > q(1));
  REQUIRE(q(0) > q(2));
}

TEST_CASE("cross_entropy values and softmax composite gradient") {
  Var sure = constant(Tensor::vec({1.0, 0.0, 0.0}));
  REQUIRE(cross_entropy(sure, 0)->val.item() == 0.0);

  Var flat = constant(Tensor::full({3}, 1.0 / 3.0));
  for (std::size_t gold = 0; gold < 3; ++gold)
    REQUIRE_THAT(cross_entropy(flat, gold)->val.item(),
                 Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));

  Rng rng(23);
  ParamStore store;
  Var w = store.add("w", random_tensor({3, 4}, rng));
  Var b = store.add("b", random_tensor({3}, rng));
  Var r = store.add("r", random_tensor({4}, rng));
  auto report =
      grad_check([&]() { return cross_entropy(classify(r, w, b), 1); }, store);
  REQUIRE(report.max_rel_err < 1e-6);
}

TEST_CASE("guidance_loss closed forms and Gibbs bound") {
  Tensor uniform4 = Tensor::full({4}, 0.25);
  double at_ref = guidance_loss(uniform4, constant(uniform4))->val.item();
  REQUIRE_THAT(at_ref, Catch::Matchers::WithinAbs(std::log(4.0), 1e-12));

  Tensor ref = Tensor::vec({0.5, 0.5});
  double v = guidance_loss(ref, constant(Tensor::vec({0.9, 0.1})))->val.item();
  double oracle = -0.5 * std::log(0.9) - 0.5 * std::log(0.1);
  REQUIRE_THAT(v, Catch::Matchers::WithinAbs(oracle, 1e-12));
  REQUIRE_THAT(v, Catch::Matchers::WithinAbs(1.20397, 1e-5));

  Rng rng(29);
  Tensor delta = random_simplex(6, rng);
  double floor = guidance_loss(delta, constant(delta))->val.item();
  for (int trial = 0; trial < 100; ++trial) {
    Tensor beta = random_simplex(6, rng);
    REQUIRE(guidance_loss(delta, constant(beta))->val.item() >= floor - 1e-12);
  }
}

TEST_CASE("guidance_loss minus entropy is a nonnegative divergence") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.below(6);
    Tensor delta = random_simplex(n, rng);
    Tensor beta = random_simplex(n, rng);
    double ce = guidance_loss(delta, constant(beta))->val.item();
    double entropy = 0.0, kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      entropy -= delta(i) * std::log(delta(i));
      kl += delta(i) * std::log(delta(i) / beta(i));
    }
    REQUIRE_THAT(ce - entropy, Catch::Matchers::WithinAbs(kl, 1e-10));
    REQUIRE(ce - entropy >= -1e-12);
  }
}

TEST_CASE("guidance_loss sends no gradient into the reference") {
  Rng rng(37);
  Tensor delta = random_simplex(4, rng);
  ParamStore store;
  Var beta_scores = store.add("scores", random_tensor({4}, rng));
  auto report = grad_check(
      [&]() { return guidance_loss(delta, softmax(beta_scores)); }, store);
  REQUIRE(report.max_rel_err < 1e-6);
}

TEST_CASE("dropout identity cases and survivor fraction") {
  Rng rng(41);
  Var x = constant(Tensor::full({100}, 2.0));
  REQUIRE(dropout(x, 0.0, rng, true).get() == x.get());
  REQUIRE(dropout(x, 0.7, rng, false).get() == x.get());

  Var big = constant(Tensor::full({10000}, 1.0));
  Tensor dropped = dropout(big, 0.5, rng, true)->val;
  std::size_t survivors = 0;
  for (double v : dropped.v) {
    if (v != 0.0) {
      REQUIRE_THAT(v, Catch::Matchers::WithinAbs(2.0, 1e-12));
      ++survivors;
    }
  }
  double fraction = static_cast<double>(survivors) / 10000.0;
  REQUIRE_THAT(fraction, Catch::Matchers::WithinAbs(0.5, 0.02));
  REQUIRE_THROWS_AS(dropout(x, 1.0, rng, true), ArgumentError);
}

TEST_CASE("sgd_momentum_step update rules") {
  SECTION("mu=0 is plain SGD") {
    ParamStore store;
    Var p = store.add("p", Tensor::vec({1.0, 2.0}));
    p->g() = Tensor::vec({0.5, -1.0});
    sgd_momentum_step(store, 0.1, 0.0);
    REQUIRE_THAT(p->val(0), Catch::Matchers::WithinAbs(0.95, 1e-15));
    REQUIRE_THAT(p->val(1), Catch::Matchers::WithinAbs(2.10, 1e-15));
    REQUIRE_FALSE((p->has_grad() && p->grad(0) != 0.0));
  }
  SECTION("zero gradient twice leaves parameters unchanged") {
    ParamStore store;
    Var p = store.add("p", Tensor::vec({3.0}));
    p->g() = Tensor::vec({0.0});
    sgd_momentum_step(store, 0.1, 0.9);
    p->g() = Tensor::vec({0.0});
    sgd_momentum_step(store, 0.1, 0.9);
    REQUIRE(p->val(0) == 3.0);
  }
  SECTION("two steps of constant gradient displace by lr*g*(2+mu)") {
    double lr = 0.05, mu = 0.9, g = 0.7;
    ParamStore store;
    Var p = store.add("p", Tensor::vec({1.0}));
    p->g() = Tensor::vec({g});
    sgd_momentum_step(store, lr, mu);
    p->g() = Tensor::vec({g});
    sgd_momentum_step(store, lr, mu);
    REQUIRE_THAT(1.0 - p->val(0),
                 Catch::Matchers::WithinAbs(lr * g * (2.0 + mu), 1e-12));
  }
  SECTION("frozen parameters receive zero updates") {
    ParamStore store;
    Var p = store.add("p", Tensor::vec({1.0}), false);
    p->grad = Tensor::vec({5.0});  // even with a planted gradient
    sgd_momentum_step(store, 0.1, 0.9);
    REQUIRE(p->val(0) == 1.0);
  }
}

TEST_CASE("sgd with momentum monotonically decreases a convex quadratic") {
  Rng rng(43);
  ParamStore store;
  Var x = store.add("x", random_tensor({5}, rng));
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step < 10; ++step) {
    Var loss = dot(x, x);
    double value = loss->val.item();
    REQUIRE(value < prev);
    prev = value;
    backward(loss);
    sgd_momentum_step(store, 0.01, 0.9);
  }
}

TEST_CASE("grad_check on a quadratic is tight and catches corruption") {
  Rng rng(47);
  ParamStore store;
  Var x = store.add("x", random_tensor({6}, rng));
  auto report = grad_check([&]() { return dot(x, x); }, store);
  REQUIRE(report.max_rel_err < 1e-9);

  // y = sum(x^2) with a deliberately wrong backward rule (3x instead of 2x).
  auto corrupted = [&]() {
    double s = 0.0;
    for (double v : x->val.v) s += v * v;
    return detail::make_node(Tensor::scalar(s), {x}, [](Node& self) {
      Node* p = self.parents[0].get();
      for (std::size_t i = 0; i < p->val.numel(); ++i)
        p->g().v[i] += 3.0 * p->val.v[i] * self.grad(0);
    });
  };
  auto bad = grad_check(corrupted, store);
  REQUIRE(bad.max_rel_err > 1e-2);
}

TEST_CASE("bilstm with zero parameters emits zeros") {
  ParamStore store;
  Rng rng(53);
  BiLstmParams p = make_bilstm(store, "enc", 3, 2, rng);
  for (auto& [name, e] : store) e.var->val.fill(0.0);
  Var x = constant(random_tensor({4, 3}, rng));
  Tensor h = bilstm_forward(p, x)->val;
  REQUIRE(h.rows() == 4);
  REQUIRE(h.cols() == 4);
  for (double v : h.v) REQUIRE(v == 0.0);
}

TEST_CASE("bilstm on a single step concatenates both directions") {
  ParamStore store;
  Rng rng(59);
  BiLstmParams p = make_bilstm(store, "enc", 3, 2, rng);
  Var x = constant(random_tensor({1, 3}, rng));
  Tensor h = bilstm_forward(p, x)->val;
  REQUIRE(h.rows() == 1);
  REQUIRE(h.cols() == 4);

  // Each direction sees the same single input, so running the model with the
  // directions swapped must swap the two halves of the output.
  BiLstmParams swapped{p.bwd, p.fwd, p.in_dim, p.hidden};
  Tensor h2 = bilstm_forward(swapped, x)->val;
  for (std::size_t c = 0; c < 2; ++c) {
    REQUIRE(h2(0, c) == h(0, c + 2));
    REQUIRE(h2(0, c + 2) == h(0, c));
  }
}

TEST_CASE("bilstm direction symmetry on reversed input") {
  ParamStore store;
  Rng rng(61);
  std::size_t n = 5, d = 3, hidden = 2;
  BiLstmParams p = make_bilstm(store, "enc", d, hidden, rng);
  Tensor x = random_tensor({n, d}, rng);
  Tensor xrev({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) xrev(i, c) = x(n - 1 - i, c);

  Tensor h = bilstm_forward(p, constant(x))->val;
  BiLstmParams swapped{p.bwd, p.fwd, p.in_dim, p.hidden};
  Tensor hrev = bilstm_forward(swapped, constant(xrev))->val;

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < hidden; ++c) {
      REQUIRE(hrev(i, c) == h(n - 1 - i, c + hidden));
      REQUIRE(hrev(i, c + hidden) == h(n - 1 - i, c));
    }
}

TEST_CASE("bilstm full gradient check") {
  ParamStore store;
  Rng rng(67);
  BiLstmParams p = make_bilstm(store, "enc", 4, 3, rng);
  Var x = store.add("x", random_tensor({4, 4}, rng));
  Tensor coeff = random_tensor({4, 6}, rng);
  auto report = grad_check(
      [&]() { return inner_const(bilstm_forward(p, x), coeff); }, store);
  INFO("worst " << report.worst_param << "[" << report.worst_index << "]");
  REQUIRE(report.max_rel_err < 1e-4);
}

TEST_CASE("structural ops gradient check") {
  Rng rng(71);
  ParamStore store;
  Var m = store.add("m", random_tensor({4, 3}, rng));
  Var a = store.add("a", random_tensor({4}, rng));
  Var b = store.add("b", random_tensor({4}, rng));
  Tensor c3 = random_tensor({3}, rng);
  Tensor c8 = random_tensor({8}, rng);
  Tensor cp = random_tensor({4, 2}, rng);

  auto all = [&]() {
    Var r = inner_const(row(m, 2), c3);
    r = add(r, inner_const(mean_rows(m, 1, 3), c3));
    r = add(r, inner_const(concat(a, b), c8));
    r = add(r, inner_const(colpair(a, b), cp));
    r = add(r, pick(mul(a, b), 1));
    r = add(r, inner_const(slice(concat(a, b), 2, 3), random_tensor({3}, rng)));
    return r;
  };
  // slice coefficients must be stable across evaluations for the check
  Tensor cs = random_tensor({3}, rng);
  auto fixed = [&]() {
    Var r = inner_const(row(m, 2), c3);
    r = add(r, inner_const(mean_rows(m, 1, 3), c3));
    r = add(r, inner_const(concat(a, b), c8));
    r = add(r, inner_const(colpair(a, b), cp));
    r = add(r, pick(mul(a, b), 1));
    r = add(r, inner_const(slice(concat(a, b), 2, 3), cs));
    r = add(r, inner_const(tanh_act(sigmoid(a)), random_simplex(4, rng)));
    return r;
  };
  (void)all;
  Tensor ct = random_tensor({4}, rng);
  auto fixed2 = [&]() {
    Var r = inner_const(row(m, 2), c3);
    r = add(r, inner_const(mean_rows(m, 1, 3), c3));
    r = add(r, inner_const(concat(a, b), c8));
    r = add(r, inner_const(colpair(a, b), cp));
    r = add(r, pick(mul(a, b), 1));
    r = add(r, inner_const(slice(concat(a, b), 2, 3), cs));
    r = add(r, inner_const(tanh_act(sigmoid(a)), ct));
    r = add(r, inner_const(sub(a, b), ct));
    return r;
  };
  (void)fixed;
  auto report = grad_check(fixed2, store);
  REQUIRE(report.max_rel_err < 1e-6);
}

TEST_CASE("matmul family gradient check") {
  Rng rng(73);
  ParamStore store;
  Var a = store.add("a", random_tensor({3, 4}, rng));
  Var b = store.add("b", random_tensor({4, 2}, rng));
  Var c = store.add("c", random_tensor({5, 4}, rng));
  Var x = store.add("x", random_tensor({4}, rng));
  Tensor c1 = random_tensor({3, 2}, rng);
  Tensor c2 = random_tensor({3, 5}, rng);
  Tensor c3 = random_tensor({3}, rng);
  auto report = grad_check(
      [&]() {
        Var r = inner_const(matmul(a, b), c1);
        r = add(r, inner_const(matmul_nt(a, c), c2));
        r = add(r, inner_const(matvec(a, x), c3));
        return r;
      },
      store);
  REQUIRE(report.max_rel_err < 1e-6);
}
