#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace moonshine::nn {

// Activations are stored channel-major: rows = channels, columns = batch * height * width
// with the spatial index fastest. A plain feature vector batch is (features x batch, h = w = 1).
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Layout {
  int batch = 1;
  int height = 1;
  int width = 1;

  int spatial() const { return height * width; }
  int columns() const { return batch * height * width; }
  friend bool operator==(const Layout&, const Layout&) = default;
};

template <typename Scalar>
struct Node {
  Mat<Scalar> value;
  Mat<Scalar> grad;  // empty until something flows back
  Layout layout;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  int channels() const { return static_cast<int>(value.rows()); }

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

// Graph recording switch (per thread). Inference paths disable it to drop intermediates early.
bool grad_enabled();

// Flushes denormal floats to zero on the calling thread (no-op off x86).
void enable_flush_to_zero();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename Scalar>
Var<Scalar> constant(Mat<Scalar> value, Layout layout);

template <typename Scalar>
Var<Scalar> constant(Mat<Scalar> value);  // layout batch = cols

// Trainable leaf.
template <typename Scalar>
Var<Scalar> parameter(Mat<Scalar> value);

// Internal: builds an op result, recording parents only when gradients are needed.
template <typename Scalar>
Var<Scalar> make_result(Mat<Scalar> value, Layout layout, std::vector<Var<Scalar>> parents,
                        std::function<void(Node<Scalar>&)> backward_fn);

// Reverse pass from a 1x1 output. Gradients accumulate into every reachable node.
template <typename Scalar>
void backward(const Var<Scalar>& loss);

}  // namespace moonshine::nn
