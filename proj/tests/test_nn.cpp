#include <doctest.h>

#include <cmath>

#include "grad_check.hpp"
#include "moonshine/error.hpp"
#include "moonshine/nn/layers.hpp"

using namespace moonshine;
using namespace moonshine::nn;
using moonshine::testing::grad_error;
using moonshine::testing::project;
using moonshine::testing::random_input;
using moonshine::testing::random_leaf;
using moonshine::testing::random_mat;

namespace {
constexpr double kTol = 1e-2;
}

TEST_SUITE("nn") {

TEST_CASE("dense with identity weights is the identity") {
  Rng rng(1);
  auto x = constant<double>(random_mat(5, 3, rng));
  auto w = constant<double>(Mat<double>::Identity(5, 5));
  auto y = dense<double>(x, w, nullptr);
  CHECK((y->value - x->value).norm() == doctest::Approx(0.0));
}

TEST_CASE("conv3x3 with a sum-one kernel keeps a constant field constant inside") {
  Mat<double> x = Mat<double>::Constant(2, 2 * 6 * 6, 3.5);
  auto in = constant<double>(x, Layout{2, 6, 6});
  Mat<double> w = Mat<double>::Constant(1, 18, 1.0 / 18.0);
  auto out = conv3x3<double>(in, constant<double>(w), nullptr);
  for (int n = 0; n < 2; ++n) {
    for (int y = 1; y < 5; ++y) {
      for (int xx = 1; xx < 5; ++xx) CHECK(out->value(0, n * 36 + y * 6 + xx) == doctest::Approx(3.5));
    }
  }
  // Corner sees only 4 of 9 taps per channel.
  CHECK(out->value(0, 0) == doctest::Approx(3.5 * 4.0 / 9.0));
}

TEST_CASE("conv3x3 matches a direct loop oracle") {
  Rng rng(2);
  const Layout l{2, 4, 5};
  auto x = random_input(3, l, rng);
  auto w = random_leaf(2, 27, rng);
  auto b = random_leaf(2, 1, rng);
  auto out = conv3x3<double>(x, w, b);
  for (int co = 0; co < 2; ++co) {
    for (int n = 0; n < 2; ++n) {
      for (int y = 0; y < 4; ++y) {
        for (int xx = 0; xx < 5; ++xx) {
          double acc = b->value(co, 0);
          for (int ci = 0; ci < 3; ++ci) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = xx + kx - 1;
                if (sy < 0 || sy >= 4 || sx < 0 || sx >= 5) continue;
                acc += w->value(co, ci * 9 + ky * 3 + kx) * x->value(ci, n * 20 + sy * 5 + sx);
              }
            }
          }
          CHECK(out->value(co, n * 20 + y * 5 + xx) == doctest::Approx(acc).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("mse_loss values and gradient") {
  Mat<double> t = Mat<double>::Constant(3, 4, 0.25);
  auto same = parameter<double>(t);
  CHECK(mse_loss<double>(same, t)->value(0, 0) == doctest::Approx(0.0));
  auto shifted = parameter<double>((t.array() + 1.0).matrix());
  auto loss = mse_loss<double>(shifted, t);
  CHECK(loss->value(0, 0) == doctest::Approx(1.0));
  backward(loss);
  // 2 (pred - target) / N
  CHECK(shifted->grad(1, 2) == doctest::Approx(2.0 / 12.0));
}

TEST_CASE("gradients match central differences for every op") {
  Rng rng(3);
  const Layout l{2, 4, 4};

  SUBCASE("dense") {
    auto x = random_leaf(5, 3, rng);
    auto w = random_leaf(4, 5, rng);
    auto b = random_leaf(4, 1, rng);
    CHECK(grad_error({x, w, b}, [&] { return project(dense<double>(x, w, b)); }) < kTol);
  }
  SUBCASE("conv3x3") {
    auto x = random_input(3, l, rng);
    auto w = random_leaf(4, 27, rng);
    auto b = random_leaf(4, 1, rng);
    CHECK(grad_error({x, w, b}, [&] { return project(conv3x3<double>(x, w, b)); }) < kTol);
  }
  SUBCASE("group_norm") {
    auto x = random_input(8, l, rng);
    auto g = random_leaf(8, 1, rng);
    auto b = random_leaf(8, 1, rng);
    CHECK(grad_error({x, g, b}, [&] { return project(group_norm<double>(x, 4, g, b)); }) < kTol);
  }
  SUBCASE("silu") {
    auto x = random_input(3, l, rng);
    CHECK(grad_error({x}, [&] { return project(silu<double>(x)); }) < kTol);
  }
  SUBCASE("upsample_nearest2") {
    auto x = random_input(3, l, rng);
    CHECK(grad_error({x}, [&] { return project(upsample_nearest2<double>(x)); }) < kTol);
  }
  SUBCASE("avg_pool2") {
    auto x = random_input(3, l, rng);
    CHECK(grad_error({x}, [&] { return project(avg_pool2<double>(x)); }) < kTol);
  }
  SUBCASE("add and add_per_sample") {
    auto a = random_input(3, l, rng);
    auto b = random_input(3, l, rng);
    auto v = random_leaf(3, 2, rng);
    CHECK(grad_error({a, b, v}, [&] { return project(add_per_sample<double>(add<double>(a, b), v)); }) < kTol);
  }
  SUBCASE("concat_channels") {
    auto a = random_input(3, l, rng);
    auto b = random_input(2, l, rng);
    CHECK(grad_error({a, b}, [&] { return project(concat_channels<double>(a, b)); }) < kTol);
  }
  SUBCASE("unflatten and flatten") {
    auto x = random_leaf(3 * 2 * 2, 2, rng);
    auto y = random_input(3, Layout{2, 2, 2}, rng);
    CHECK(grad_error({x}, [&] { return project(unflatten<double>(x, 3, 2, 2)); }) < kTol);
    CHECK(grad_error({y}, [&] { return project(flatten<double>(y)); }) < kTol);
    auto round = flatten<double>(unflatten<double>(x, 3, 2, 2));
    CHECK((round->value - x->value).norm() == doctest::Approx(0.0));
  }
  SUBCASE("softmax_channels") {
    auto x = random_input(5, l, rng);
    CHECK(grad_error({x}, [&] { return project(softmax_channels<double>(x)); }) < kTol);
  }
  SUBCASE("cross_entropy_channels") {
    auto x = random_input(5, l, rng);
    Mat<double> target = Mat<double>::Zero(5, l.columns());
    for (int j = 0; j < l.columns(); ++j) target(j % 5, j) = 1.0;
    CHECK(grad_error({x}, [&] { return cross_entropy_channels<double>(x, target); }) < kTol);
  }
  SUBCASE("mse_loss") {
    auto x = random_input(3, l, rng);
    const Mat<double> target = random_mat(3, l.columns(), rng);
    CHECK(grad_error({x}, [&] { return mse_loss<double>(x, target); }) < kTol);
  }
  SUBCASE("attention with one and two tokens") {
    for (int tokens : {1, 2}) {
      auto q = random_input(4, l, rng);
      auto k = random_leaf(4, 2 * tokens, rng);
      auto v = random_leaf(4, 2 * tokens, rng);
      CHECK(grad_error({q, k, v}, [&] { return project(attention<double>(q, k, v, tokens)); }) < kTol);
    }
  }
  SUBCASE("l2_normalize_columns") {
    auto x = random_leaf(4, 3, rng);
    CHECK(grad_error({x}, [&] { return project(l2_normalize_columns<double>(x)); }) < kTol);
  }
  SUBCASE("matmul_tn and scale_by_exp") {
    auto a = random_leaf(4, 3, rng);
    auto b = random_leaf(4, 3, rng);
    auto s = random_leaf(1, 1, rng, 0.3);
    CHECK(grad_error({a, b, s}, [&] { return project(scale_by_exp<double>(matmul_tn<double>(a, b), s)); }) < kTol);
  }
  SUBCASE("symmetric_info_nce") {
    auto z = random_leaf(4, 4, rng);
    CHECK(grad_error({z}, [&] { return symmetric_info_nce<double>(z); }) < kTol);
  }
}

TEST_CASE("composite layers pass gradient checks") {
  Rng rng(4);
  const Layout l{2, 4, 4};
  ParamStore<double> ps;
  declare_resblock(ps, "res", 4, 8, 6, rng);
  declare_cross_attention(ps, "attn", 8, 5, rng);
  declare_time_mlp(ps, "time", 6, rng);
  auto x = random_input(4, l, rng);
  auto ctx = random_leaf(5, 2, rng);
  std::vector<Var<double>> inputs{x, ctx};
  for (auto& e : ps.entries()) inputs.push_back(e.var);
  auto loss = [&] {
    auto temb = apply_time_mlp(ps, "time", {3, 17});
    auto h = apply_resblock(ps, "res", x, temb);
    return project(apply_cross_attention(ps, "attn", h, ctx, 1));
  };
  CHECK(grad_error(inputs, loss) < kTol);
}

TEST_CASE("single-token attention returns the value for every query") {
  Rng rng(5);
  auto q = random_input(3, Layout{1, 2, 2}, rng);
  auto k = random_leaf(3, 1, rng);
  auto v = random_leaf(3, 1, rng);
  auto out = attention<double>(q, k, v, 1);
  for (int j = 0; j < 4; ++j) CHECK((out->value.col(j) - v->value.col(0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("adam first step moves a scalar by about lr") {
  ParamStore<double> ps;
  auto p = ps.add("p", Mat<double>::Constant(1, 1, 2.0));
  auto q = ps.add("q", Mat<double>::Constant(1, 1, 5.0));
  p->grad = Mat<double>::Constant(1, 1, 1.0);
  q->grad = Mat<double>::Zero(1, 1);
  adam_step(ps, AdamConfig{0.1});
  // m_hat = 1, v_hat = 1 -> step = lr * 1 / (1 + eps)
  CHECK(p->value(0, 0) == doctest::Approx(2.0 - 0.1).epsilon(1e-6));
  CHECK(q->value(0, 0) == 5.0);
  CHECK(ps.step() == 1);
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(6);
  auto x = random_leaf(3, 2, rng);
  auto w = random_leaf(4, 5, rng);
  CHECK_THROWS_AS(dense<double>(x, w, nullptr), UsageError);
  auto img = random_input(3, Layout{1, 3, 3}, rng);
  CHECK_THROWS_AS(avg_pool2<double>(img), UsageError);
  CHECK_THROWS_AS(group_norm<double>(img, 4, random_leaf(3, 1, rng), random_leaf(3, 1, rng)), UsageError);
}

TEST_CASE("no-grad mode records nothing") {
  Rng rng(7);
  auto x = random_leaf(3, 2, rng);
  NoGradGuard guard;
  auto y = silu<double>(x);
  CHECK_FALSE(y->requires_grad);
  CHECK(y->parents.empty());
}

TEST_CASE("rng normal stream statistics") {
  Rng rng(2024);
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.03);
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

}  // TEST_SUITE
