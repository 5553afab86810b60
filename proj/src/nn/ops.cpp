#include "moonshine/nn/ops.hpp"

#include <cmath>
#include <string>

#include "moonshine/error.hpp"

namespace moonshine::nn {

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw UsageError(op + ": " + detail);
}

template <typename Scalar>
void im2col3x3(const Mat<Scalar>& x, const Layout& l, Mat<Scalar>& cols) {
  const int cin = static_cast<int>(x.rows());
  const int H = l.height, W = l.width, HW = l.spatial();
  cols.setZero(static_cast<Eigen::Index>(cin) * 9, l.columns());
  for (int ci = 0; ci < cin; ++ci) {
    const Scalar* src = x.row(ci).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        Scalar* dst = cols.row(ci * 9 + ky * 3 + kx).data();
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = dx < 0 ? 1 : 0, x1 = dx > 0 ? W - 1 : W;
        for (int n = 0; n < l.batch; ++n) {
          for (int y = 0; y < H; ++y) {
            const int sy = y + dy;
            if (sy < 0 || sy >= H) continue;
            const Scalar* s = src + n * HW + sy * W + dx;
            Scalar* d = dst + n * HW + y * W;
            for (int xx = x0; xx < x1; ++xx) d[xx] = s[xx];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im3x3(const Mat<Scalar>& cols, const Layout& l, Mat<Scalar>& dx_out) {
  const int cin = static_cast<int>(dx_out.rows());
  const int H = l.height, W = l.width, HW = l.spatial();
  for (int ci = 0; ci < cin; ++ci) {
    Scalar* dst = dx_out.row(ci).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Scalar* src = cols.row(ci * 9 + ky * 3 + kx).data();
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = dx < 0 ? 1 : 0, x1 = dx > 0 ? W - 1 : W;
        for (int n = 0; n < l.batch; ++n) {
          for (int y = 0; y < H; ++y) {
            const int sy = y + dy;
            if (sy < 0 || sy >= H) continue;
            Scalar* d = dst + n * HW + sy * W + dx;
            const Scalar* s = src + n * HW + y * W;
            for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> dense(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b) {
  if (w->value.cols() != x->value.rows()) {
    shape_error("dense", "weight expects " + std::to_string(w->value.cols()) + " inputs, got " +
                             std::to_string(x->value.rows()));
  }
  if (b && (b->value.rows() != w->value.rows() || b->value.cols() != 1)) shape_error("dense", "bad bias shape");
  Mat<Scalar> out;
  out.noalias() = w->value * x->value;
  if (b) out.colwise() += b->value.col(0);
  std::vector<Var<Scalar>> parents{x, w};
  if (b) parents.push_back(b);
  return make_result<Scalar>(std::move(out), x->layout, std::move(parents), [](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    auto& w = *self.parents[1];
    if (w.requires_grad) w.accumulate((self.grad * x.value.transpose()).eval());
    if (x.requires_grad) x.accumulate((w.value.transpose() * self.grad).eval());
    if (self.parents.size() > 2) self.parents[2]->accumulate(self.grad.rowwise().sum().eval());
  });
}

template <typename Scalar>
Var<Scalar> conv3x3(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b) {
  if (w->value.cols() != x->value.rows() * 9) shape_error("conv3x3", "weight/input channel mismatch");
  if (b && (b->value.rows() != w->value.rows() || b->value.cols() != 1)) shape_error("conv3x3", "bad bias shape");
  auto cols = std::make_shared<Mat<Scalar>>();
  im2col3x3(x->value, x->layout, *cols);
  Mat<Scalar> out;
  out.noalias() = w->value * (*cols);
  if (b) out.colwise() += b->value.col(0);
  std::vector<Var<Scalar>> parents{x, w};
  if (b) parents.push_back(b);
  if (!grad_enabled()) cols.reset();
  return make_result<Scalar>(std::move(out), x->layout, std::move(parents), [cols](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    auto& w = *self.parents[1];
    if (w.requires_grad) w.accumulate((self.grad * cols->transpose()).eval());
    if (x.requires_grad) {
      Mat<Scalar> dcols;
      dcols.noalias() = w.value.transpose() * self.grad;
      Mat<Scalar> dx = Mat<Scalar>::Zero(x.value.rows(), x.value.cols());
      col2im3x3(dcols, x.layout, dx);
      x.accumulate(dx);
    }
    if (self.parents.size() > 2) self.parents[2]->accumulate(self.grad.rowwise().sum().eval());
  });
}

template <typename Scalar>
Var<Scalar> group_norm(const Var<Scalar>& x, int groups, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Scalar eps) {
  const int C = x->channels();
  if (groups <= 0 || C % groups != 0) shape_error("group_norm", "channels not divisible by groups");
  if (gamma->value.rows() != C || beta->value.rows() != C) shape_error("group_norm", "affine size mismatch");
  const Layout l = x->layout;
  const int cg = C / groups, HW = l.spatial();
  const double count = static_cast<double>(cg) * HW;
  auto xhat = std::make_shared<Mat<Scalar>>(x->value.rows(), x->value.cols());
  auto inv_std = std::make_shared<std::vector<Scalar>>(static_cast<std::size_t>(l.batch * groups));
  Mat<Scalar> out(x->value.rows(), x->value.cols());
  for (int n = 0; n < l.batch; ++n) {
    for (int g = 0; g < groups; ++g) {
      double sum = 0, sq = 0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const auto seg = x->value.row(c).segment(n * HW, HW);
        sum += seg.template cast<double>().sum();
        sq += seg.template cast<double>().squaredNorm();
      }
      const double mean = sum / count;
      const double var = std::max(sq / count - mean * mean, 0.0);
      const auto is = static_cast<Scalar>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      (*inv_std)[static_cast<std::size_t>(n * groups + g)] = is;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        auto xh = xhat->row(c).segment(n * HW, HW);
        xh = (x->value.row(c).segment(n * HW, HW).array() - static_cast<Scalar>(mean)) * is;
        out.row(c).segment(n * HW, HW) = xh.array() * gamma->value(c, 0) + beta->value(c, 0);
      }
    }
  }
  return make_result<Scalar>(
      std::move(out), l, {x, gamma, beta}, [xhat, inv_std, groups, cg, HW](Node<Scalar>& self) {
        auto& x = *self.parents[0];
        auto& gamma = *self.parents[1];
        auto& beta = *self.parents[2];
        const int C = x.channels();
        const int batch = x.layout.batch;
        if (gamma.requires_grad) {
          Mat<Scalar> dg(C, 1);
          for (int c = 0; c < C; ++c) dg(c, 0) = (self.grad.row(c).array() * xhat->row(c).array()).sum();
          gamma.accumulate(dg);
        }
        if (beta.requires_grad) beta.accumulate(self.grad.rowwise().sum().eval());
        if (!x.requires_grad) return;
        Mat<Scalar> dx(x.value.rows(), x.value.cols());
        const double count = static_cast<double>(cg) * HW;
        for (int n = 0; n < batch; ++n) {
          for (int g = 0; g < groups; ++g) {
            double m1 = 0, m2 = 0;
            for (int c = g * cg; c < (g + 1) * cg; ++c) {
              const auto dxh = self.grad.row(c).segment(n * HW, HW).array() * gamma.value(c, 0);
              m1 += dxh.template cast<double>().sum();
              m2 += (dxh * xhat->row(c).segment(n * HW, HW).array()).template cast<double>().sum();
            }
            const auto a = static_cast<Scalar>(m1 / count);
            const auto b = static_cast<Scalar>(m2 / count);
            const Scalar is = (*inv_std)[static_cast<std::size_t>(n * groups + g)];
            for (int c = g * cg; c < (g + 1) * cg; ++c) {
              const auto xh = xhat->row(c).segment(n * HW, HW).array();
              dx.row(c).segment(n * HW, HW) =
                  is * (self.grad.row(c).segment(n * HW, HW).array() * gamma.value(c, 0) - a - xh * b);
            }
          }
        }
        x.accumulate(dx);
      });
}

template <typename Scalar>
Var<Scalar> silu(const Var<Scalar>& x) {
  const auto& v = x->value.array();
  Mat<Scalar> sig = (Scalar(1) / (Scalar(1) + (-v).exp())).matrix();
  Mat<Scalar> out = (v * sig.array()).matrix();
  return make_result<Scalar>(std::move(out), x->layout, {x}, [sig = std::move(sig)](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    const auto s = sig.array();
    x.accumulate((self.grad.array() * s * (Scalar(1) + x.value.array() * (Scalar(1) - s))).matrix());
  });
}

template <typename Scalar>
Var<Scalar> upsample_nearest2(const Var<Scalar>& x) {
  const Layout l = x->layout;
  const Layout o{l.batch, l.height * 2, l.width * 2};
  Mat<Scalar> out(x->value.rows(), o.columns());
  for (Eigen::Index c = 0; c < out.rows(); ++c) {
    const Scalar* s = x->value.row(c).data();
    Scalar* d = out.row(c).data();
    for (int n = 0; n < l.batch; ++n) {
      for (int y = 0; y < o.height; ++y) {
        const Scalar* sr = s + n * l.spatial() + (y / 2) * l.width;
        Scalar* dr = d + n * o.spatial() + y * o.width;
        for (int xx = 0; xx < o.width; ++xx) dr[xx] = sr[xx / 2];
      }
    }
  }
  return make_result<Scalar>(std::move(out), o, {x}, [l, o](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    Mat<Scalar> dx = Mat<Scalar>::Zero(x.value.rows(), x.value.cols());
    for (Eigen::Index c = 0; c < dx.rows(); ++c) {
      const Scalar* s = self.grad.row(c).data();
      Scalar* d = dx.row(c).data();
      for (int n = 0; n < l.batch; ++n) {
        for (int y = 0; y < o.height; ++y) {
          const Scalar* sr = s + n * o.spatial() + y * o.width;
          Scalar* dr = d + n * l.spatial() + (y / 2) * l.width;
          for (int xx = 0; xx < o.width; ++xx) dr[xx / 2] += sr[xx];
        }
      }
    }
    x.accumulate(dx);
  });
}

template <typename Scalar>
Var<Scalar> avg_pool2(const Var<Scalar>& x) {
  const Layout l = x->layout;
  if (l.height % 2 != 0 || l.width % 2 != 0) shape_error("avg_pool2", "odd spatial size");
  const Layout o{l.batch, l.height / 2, l.width / 2};
  Mat<Scalar> out = Mat<Scalar>::Zero(x->value.rows(), o.columns());
  for (Eigen::Index c = 0; c < out.rows(); ++c) {
    const Scalar* s = x->value.row(c).data();
    Scalar* d = out.row(c).data();
    for (int n = 0; n < l.batch; ++n) {
      for (int y = 0; y < l.height; ++y) {
        const Scalar* sr = s + n * l.spatial() + y * l.width;
        Scalar* dr = d + n * o.spatial() + (y / 2) * o.width;
        for (int xx = 0; xx < l.width; ++xx) dr[xx / 2] += Scalar(0.25) * sr[xx];
      }
    }
  }
  return make_result<Scalar>(std::move(out), o, {x}, [l, o](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    Mat<Scalar> dx(x.value.rows(), x.value.cols());
    for (Eigen::Index c = 0; c < dx.rows(); ++c) {
      const Scalar* s = self.grad.row(c).data();
      Scalar* d = dx.row(c).data();
      for (int n = 0; n < l.batch; ++n) {
        for (int y = 0; y < l.height; ++y) {
          const Scalar* sr = s + n * o.spatial() + (y / 2) * o.width;
          Scalar* dr = d + n * l.spatial() + y * l.width;
          for (int xx = 0; xx < l.width; ++xx) dr[xx] = Scalar(0.25) * sr[xx / 2];
        }
      }
    }
    x.accumulate(dx);
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) shape_error("add", "shape mismatch");
  Mat<Scalar> out = a->value + b->value;
  return make_result<Scalar>(std::move(out), a->layout, {a, b}, [](Node<Scalar>& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(self.grad);
  });
}

template <typename Scalar>
Var<Scalar> add_per_sample(const Var<Scalar>& x, const Var<Scalar>& v) {
  const Layout l = x->layout;
  if (v->value.rows() != x->value.rows() || v->value.cols() != l.batch) shape_error("add_per_sample", "shape mismatch");
  const int HW = l.spatial();
  Mat<Scalar> out = x->value;
  for (int n = 0; n < l.batch; ++n) out.middleCols(n * HW, HW).colwise() += v->value.col(n);
  return make_result<Scalar>(std::move(out), l, {x, v}, [HW](Node<Scalar>& self) {
    self.parents[0]->accumulate(self.grad);
    auto& v = *self.parents[1];
    if (!v.requires_grad) return;
    Mat<Scalar> dv(v.value.rows(), v.value.cols());
    for (Eigen::Index n = 0; n < dv.cols(); ++n) dv.col(n) = self.grad.middleCols(n * HW, HW).rowwise().sum();
    v.accumulate(dv);
  });
}

template <typename Scalar>
Var<Scalar> concat_channels(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (!(a->layout == b->layout)) shape_error("concat_channels", "layout mismatch");
  Mat<Scalar> out(a->value.rows() + b->value.rows(), a->value.cols());
  out.topRows(a->value.rows()) = a->value;
  out.bottomRows(b->value.rows()) = b->value;
  return make_result<Scalar>(std::move(out), a->layout, {a, b}, [](Node<Scalar>& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    a.accumulate(self.grad.topRows(a.value.rows()));
    b.accumulate(self.grad.bottomRows(b.value.rows()));
  });
}

template <typename Scalar>
Var<Scalar> unflatten(const Var<Scalar>& x, int channels, int height, int width) {
  const int hw = height * width;
  if (x->value.rows() != static_cast<Eigen::Index>(channels) * hw || x->layout.spatial() != 1) {
    shape_error("unflatten", "feature count mismatch");
  }
  const int batch = static_cast<int>(x->value.cols());
  Mat<Scalar> out(channels, static_cast<Eigen::Index>(batch) * hw);
  for (int c = 0; c < channels; ++c) {
    for (int n = 0; n < batch; ++n) out.row(c).segment(n * hw, hw) = x->value.col(n).segment(c * hw, hw).transpose();
  }
  return make_result<Scalar>(std::move(out), Layout{batch, height, width}, {x}, [hw](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    Mat<Scalar> dx(x.value.rows(), x.value.cols());
    for (Eigen::Index c = 0; c < self.grad.rows(); ++c) {
      for (Eigen::Index n = 0; n < dx.cols(); ++n) dx.col(n).segment(c * hw, hw) = self.grad.row(c).segment(n * hw, hw).transpose();
    }
    x.accumulate(dx);
  });
}

template <typename Scalar>
Var<Scalar> flatten(const Var<Scalar>& x) {
  const Layout l = x->layout;
  const int hw = l.spatial();
  const auto C = x->value.rows();
  Mat<Scalar> out(C * hw, l.batch);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (int n = 0; n < l.batch; ++n) out.col(n).segment(c * hw, hw) = x->value.row(c).segment(n * hw, hw).transpose();
  }
  return make_result<Scalar>(std::move(out), Layout{l.batch, 1, 1}, {x}, [hw](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    Mat<Scalar> dx(x.value.rows(), x.value.cols());
    for (Eigen::Index c = 0; c < dx.rows(); ++c) {
      for (Eigen::Index n = 0; n < self.grad.cols(); ++n) dx.row(c).segment(n * hw, hw) = self.grad.col(n).segment(c * hw, hw).transpose();
    }
    x.accumulate(dx);
  });
}

template <typename Scalar>
Var<Scalar> softmax_channels(const Var<Scalar>& x) {
  Mat<Scalar> out = (x->value.rowwise() - x->value.colwise().maxCoeff()).array().exp().matrix();
  out.array().rowwise() /= out.colwise().sum().array();
  auto y = std::make_shared<Mat<Scalar>>(out);
  return make_result<Scalar>(std::move(out), x->layout, {x}, [y](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> dot = (self.grad.array() * y->array()).colwise().sum();
    x.accumulate((y->array() * (self.grad.array().rowwise() - dot)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> mse_loss(const Var<Scalar>& pred, const Mat<Scalar>& target) {
  if (pred->value.rows() != target.rows() || pred->value.cols() != target.cols()) shape_error("mse_loss", "shape mismatch");
  Mat<Scalar> diff = pred->value - target;
  const auto count = static_cast<Scalar>(diff.size());
  Mat<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(diff.template cast<double>().squaredNorm() / static_cast<double>(diff.size()));
  return make_result<Scalar>(std::move(out), Layout{}, {pred}, [diff = std::move(diff), count](Node<Scalar>& self) {
    self.parents[0]->accumulate((diff * (Scalar(2) * self.grad(0, 0) / count)).eval());
  });
}

template <typename Scalar>
Var<Scalar> cross_entropy_channels(const Var<Scalar>& logits, const Mat<Scalar>& target) {
  const auto& z = logits->value;
  if (z.rows() != target.rows() || z.cols() != target.cols()) shape_error("cross_entropy_channels", "shape mismatch");
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> mx = z.colwise().maxCoeff();
  Mat<Scalar> p = (z.array().rowwise() - mx).exp().matrix();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum = p.colwise().sum();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> lse = mx + sum.log();
  p.array().rowwise() /= sum;
  double loss = 0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    loss -= (target.col(j).array() * (z.col(j).array() - lse(j))).template cast<double>().sum();
  }
  const auto cols = static_cast<Scalar>(z.cols());
  Mat<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(loss / static_cast<double>(z.cols()));
  // Gradient assumes each target column sums to one.
  Mat<Scalar> g = p - target;
  return make_result<Scalar>(std::move(out), Layout{}, {logits}, [g = std::move(g), cols](Node<Scalar>& self) {
    self.parents[0]->accumulate((g * (self.grad(0, 0) / cols)).eval());
  });
}

template <typename Scalar>
Var<Scalar> attention(const Var<Scalar>& q, const Var<Scalar>& k, const Var<Scalar>& v, int tokens) {
  const Layout l = q->layout;
  const int HW = l.spatial(), d = static_cast<int>(q->value.rows());
  if (tokens < 1 || k->value.cols() != static_cast<Eigen::Index>(l.batch) * tokens || v->value.cols() != k->value.cols() ||
      k->value.rows() != d || v->value.rows() != d) {
    shape_error("attention", "query/key/value shape mismatch");
  }
  const Scalar inv = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
  auto probs = std::make_shared<std::vector<Mat<Scalar>>>(static_cast<std::size_t>(l.batch));
  Mat<Scalar> out(d, l.columns());
  for (int n = 0; n < l.batch; ++n) {
    const auto Q = q->value.middleCols(n * HW, HW);
    const auto K = k->value.middleCols(n * tokens, tokens);
    const auto V = v->value.middleCols(n * tokens, tokens);
    Mat<Scalar> S = (K.transpose() * Q) * inv;
    S = (S.rowwise() - S.colwise().maxCoeff()).array().exp().matrix();
    S.array().rowwise() /= S.colwise().sum().array();
    out.middleCols(n * HW, HW).noalias() = V * S;
    (*probs)[static_cast<std::size_t>(n)] = std::move(S);
  }
  return make_result<Scalar>(std::move(out), l, {q, k, v}, [probs, tokens, HW, inv](Node<Scalar>& self) {
    auto& q = *self.parents[0];
    auto& k = *self.parents[1];
    auto& v = *self.parents[2];
    Mat<Scalar> dq = Mat<Scalar>::Zero(q.value.rows(), q.value.cols());
    Mat<Scalar> dk = Mat<Scalar>::Zero(k.value.rows(), k.value.cols());
    Mat<Scalar> dv = Mat<Scalar>::Zero(v.value.rows(), v.value.cols());
    for (std::size_t n = 0; n < probs->size(); ++n) {
      const int ni = static_cast<int>(n);
      const Mat<Scalar>& A = (*probs)[n];
      const auto dO = self.grad.middleCols(ni * HW, HW);
      const auto Q = q.value.middleCols(ni * HW, HW);
      const auto K = k.value.middleCols(ni * tokens, tokens);
      const auto V = v.value.middleCols(ni * tokens, tokens);
      dv.middleCols(ni * tokens, tokens).noalias() = dO * A.transpose();
      const Mat<Scalar> dA = V.transpose() * dO;
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> dot = (dA.array() * A.array()).colwise().sum();
      const Mat<Scalar> dS = (A.array() * (dA.array().rowwise() - dot)).matrix() * inv;
      dk.middleCols(ni * tokens, tokens).noalias() = Q * dS.transpose();
      dq.middleCols(ni * HW, HW).noalias() = K * dS;
    }
    q.accumulate(dq);
    k.accumulate(dk);
    v.accumulate(dv);
  });
}

template <typename Scalar>
Var<Scalar> l2_normalize_columns(const Var<Scalar>& x) {
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> norms = x->value.colwise().norm().array().max(Scalar(1e-12));
  Mat<Scalar> out = (x->value.array().rowwise() / norms).matrix();
  auto y = std::make_shared<Mat<Scalar>>(out);
  return make_result<Scalar>(std::move(out), x->layout, {x}, [y, norms](Node<Scalar>& self) {
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> dot = (self.grad.array() * y->array()).colwise().sum();
    const Mat<Scalar> g = ((self.grad.array() - y->array().rowwise() * dot).rowwise() / norms).matrix();
    self.parents[0]->accumulate(g);
  });
}

template <typename Scalar>
Var<Scalar> matmul_tn(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a->value.rows() != b->value.rows()) shape_error("matmul_tn", "inner dimension mismatch");
  Mat<Scalar> out = a->value.transpose() * b->value;
  const Layout l{static_cast<int>(out.cols()), 1, 1};
  return make_result<Scalar>(std::move(out), l, {a, b}, [](Node<Scalar>& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) a.accumulate((b.value * self.grad.transpose()).eval());
    if (b.requires_grad) b.accumulate((a.value * self.grad).eval());
  });
}

template <typename Scalar>
Var<Scalar> scale_by_exp(const Var<Scalar>& x, const Var<Scalar>& s) {
  if (s->value.size() != 1) shape_error("scale_by_exp", "scale must be 1x1");
  const Scalar e = std::exp(s->value(0, 0));
  Mat<Scalar> out = x->value * e;
  return make_result<Scalar>(std::move(out), x->layout, {x, s}, [e](Node<Scalar>& self) {
    auto& x = *self.parents[0];
    auto& s = *self.parents[1];
    x.accumulate((self.grad * e).eval());
    if (s.requires_grad) {
      Mat<Scalar> ds(1, 1);
      ds(0, 0) = e * (self.grad.array() * x.value.array()).sum();
      s.accumulate(ds);
    }
  });
}

template <typename Scalar>
Var<Scalar> symmetric_info_nce(const Var<Scalar>& logits) {
  const auto& z = logits->value;
  if (z.rows() != z.cols() || z.rows() < 1) shape_error("symmetric_info_nce", "logits must be square");
  const auto B = z.rows();
  // Row softmax (text given map) and column softmax (map given text).
  Mat<Scalar> pr = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> rsum = pr.rowwise().sum();
  Mat<Scalar> pc = (z.rowwise() - z.colwise().maxCoeff()).array().exp().matrix();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> csum = pc.colwise().sum();
  double loss = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    loss -= std::log(static_cast<double>(pr(i, i) / rsum(i)));
    loss -= std::log(static_cast<double>(pc(i, i) / csum(i)));
  }
  pr.array().colwise() /= rsum;
  pc.array().rowwise() /= csum;
  Mat<Scalar> g = pr + pc - Scalar(2) * Mat<Scalar>::Identity(B, B);
  g *= Scalar(0.5) / static_cast<Scalar>(B);
  Mat<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(0.5 * loss / static_cast<double>(B));
  return make_result<Scalar>(std::move(out), Layout{}, {logits}, [g = std::move(g)](Node<Scalar>& self) {
    self.parents[0]->accumulate((g * self.grad(0, 0)).eval());
  });
}

template <typename Scalar>
Mat<Scalar> sinusoidal_embedding(const std::vector<int>& timesteps, int dim) {
  if (dim < 2 || dim % 2 != 0) throw UsageError("sinusoidal_embedding: dim must be even");
  const int half = dim / 2;
  Mat<Scalar> out(dim, static_cast<Eigen::Index>(timesteps.size()));
  for (std::size_t n = 0; n < timesteps.size(); ++n) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / half);
      const double arg = timesteps[n] * freq;
      out(i, static_cast<Eigen::Index>(n)) = static_cast<Scalar>(std::sin(arg));
      out(half + i, static_cast<Eigen::Index>(n)) = static_cast<Scalar>(std::cos(arg));
    }
  }
  return out;
}

#define MOONSHINE_INSTANTIATE(S)                                                                    \
  template Var<S> dense<S>(const Var<S>&, const Var<S>&, const Var<S>&);                            \
  template Var<S> conv3x3<S>(const Var<S>&, const Var<S>&, const Var<S>&);                          \
  template Var<S> group_norm<S>(const Var<S>&, int, const Var<S>&, const Var<S>&, S);               \
  template Var<S> silu<S>(const Var<S>&);                                                           \
  template Var<S> upsample_nearest2<S>(const Var<S>&);                                              \
  template Var<S> avg_pool2<S>(const Var<S>&);                                                      \
  template Var<S> add<S>(const Var<S>&, const Var<S>&);                                             \
  template Var<S> add_per_sample<S>(const Var<S>&, const Var<S>&);                                  \
  template Var<S> concat_channels<S>(const Var<S>&, const Var<S>&);                                 \
  template Var<S> unflatten<S>(const Var<S>&, int, int, int);                                       \
  template Var<S> flatten<S>(const Var<S>&);                                                        \
  template Var<S> softmax_channels<S>(const Var<S>&);                                               \
  template Var<S> mse_loss<S>(const Var<S>&, const Mat<S>&);                                        \
  template Var<S> cross_entropy_channels<S>(const Var<S>&, const Mat<S>&);                          \
  template Var<S> attention<S>(const Var<S>&, const Var<S>&, const Var<S>&, int);                   \
  template Var<S> l2_normalize_columns<S>(const Var<S>&);                                           \
  template Var<S> matmul_tn<S>(const Var<S>&, const Var<S>&);                                       \
  template Var<S> scale_by_exp<S>(const Var<S>&, const Var<S>&);                                    \
  template Var<S> symmetric_info_nce<S>(const Var<S>&);                                             \
  template Mat<S> sinusoidal_embedding<S>(const std::vector<int>&, int);

MOONSHINE_INSTANTIATE(float)
MOONSHINE_INSTANTIATE(double)
#undef MOONSHINE_INSTANTIATE

}  // namespace moonshine::nn
