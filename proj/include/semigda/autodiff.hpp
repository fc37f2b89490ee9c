#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "semigda/tensor.hpp"

namespace semigda::ad {

// Reverse-mode autodiff over Tensor values. Graphs are built define-by-run;
// every op returns a new node holding its forward value and a closure that
// scatters the node's gradient into its parents. Single-threaded and fully
// deterministic: node processing order in backward() is the reverse of a
// depth-first postorder that follows parents in construction order.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand during backward
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& grad_buffer() {
        if (!grad.defined()) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

Var make_leaf(Tensor value, bool requires_grad = false);
Var detach(const Var& v);  // same value, gradient barrier

// Backpropagate from a scalar root (numel == 1).
void backward(const Var& root);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);
Var exp_op(const Var& a);
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var silu(const Var& a);
Var relu(const Var& a);
Var square(const Var& a);
Var clamp(const Var& a, double lo, double hi);

// ---- shape ----
Var reshape(const Var& a, std::vector<int64_t> shape);
// (A,B,C,D) -> (A,C,B,D), copying.
Var permute_0213(const Var& a);
// (...,M,N) -> (...,N,M), copying.
Var transpose_last2(const Var& a);
// rows [start, start+len) along dim 0, copying.
Var narrow0(const Var& a, int64_t start, int64_t len);

// ---- reductions ----
Var sum_all(const Var& a);
Var mean_all(const Var& a);
// (...,K) -> (...,1)
Var sum_lastdim(const Var& a);

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);           // (M,K)x(K,N)
Var bmm(const Var& a, const Var& b);              // (B,M,K)x(B,K,N)
Var add_bias_row(const Var& x, const Var& bias);  // (M,N) + (N,)
Var softmax_lastdim(const Var& a);

// ---- conv / vision ----
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv2d_nobias(const Var& x, const Var& w, int stride, int pad);
Var upsample_nearest2(const Var& x);

// ---- normalization ----
// Per-(sample, group) standardization of (N,C,H,W); no affine part.
Var group_normalize(const Var& x, int groups, double eps);
// Channelwise y = x * gamma[c] + beta[c] on (N,C,H,W).
Var scale_bias_channels(const Var& x, const Var& gamma, const Var& beta);
// Last-dim layer norm with affine, x viewed as (M,D).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps);

// Convenience: mean squared error, reduced over all elements.
Var mse(const Var& a, const Var& b);

}  // namespace semigda::ad
