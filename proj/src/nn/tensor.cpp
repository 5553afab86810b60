#include "moonshine/nn/tensor.hpp"

#include <unordered_set>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "moonshine/error.hpp"

namespace moonshine::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

void enable_flush_to_zero() {
#if defined(__SSE__)
  _mm_setcsr(_mm_getcsr() | 0x8040);
#endif
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename Scalar>
Var<Scalar> constant(Mat<Scalar> value, Layout layout) {
  if (layout.columns() != value.cols()) throw UsageError("constant: layout does not match column count");
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  node->layout = layout;
  return node;
}

template <typename Scalar>
Var<Scalar> constant(Mat<Scalar> value) {
  const Layout layout{static_cast<int>(value.cols()), 1, 1};
  return constant<Scalar>(std::move(value), layout);
}

template <typename Scalar>
Var<Scalar> parameter(Mat<Scalar> value) {
  auto node = constant<Scalar>(std::move(value));
  node->requires_grad = true;
  return node;
}

template <typename Scalar>
Var<Scalar> make_result(Mat<Scalar> value, Layout layout, std::vector<Var<Scalar>> parents,
                        std::function<void(Node<Scalar>&)> backward_fn) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  node->layout = layout;
  if (g_grad_enabled) {
    for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
    if (node->requires_grad) {
      node->parents = std::move(parents);
      node->backward_fn = std::move(backward_fn);
    }
  }
  return node;
}

template <typename Scalar>
void backward(const Var<Scalar>& loss) {
  if (loss->value.size() != 1) throw UsageError("backward expects a scalar output");
  if (!loss->requires_grad) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node<Scalar>*> order;
  std::unordered_set<Node<Scalar>*> seen;
  std::vector<std::pair<Node<Scalar>*, std::size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Scalar>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->accumulate(Mat<Scalar>::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Scalar>* node = *it;
    if (node->backward_fn && node->grad.size() != 0) node->backward_fn(*node);
  }
}

#define MOONSHINE_INSTANTIATE(S)                                                             \
  template Var<S> constant<S>(Mat<S>, Layout);                                               \
  template Var<S> constant<S>(Mat<S>);                                                       \
  template Var<S> parameter<S>(Mat<S>);                                                      \
  template Var<S> make_result<S>(Mat<S>, Layout, std::vector<Var<S>>, std::function<void(Node<S>&)>); \
  template void backward<S>(const Var<S>&);

MOONSHINE_INSTANTIATE(float)
MOONSHINE_INSTANTIATE(double)
#undef MOONSHINE_INSTANTIATE

}  // namespace moonshine::nn
