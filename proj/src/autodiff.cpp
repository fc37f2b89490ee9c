#include "semigda/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "semigda/common.hpp"

namespace semigda::ad {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

namespace {

Var make_node(Tensor value, std::vector<Var> parents) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    return n;
}

int64_t last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Var make_leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Var detach(const Var& v) { return make_leaf(v->value, false); }

void backward(const Var& root) {
    if (root->value.numel() != 1) throw ShapeError("backward: root must be scalar");
    if (!root->requires_grad) return;

    // Iterative DFS postorder over the requires_grad subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad_buffer().fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.defined()) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a->value, b->value, "add");
    Tensor out = a->value.clone();
    out.add_(b->value);
    Var n = make_node(std::move(out), {a, b});
    if (n->requires_grad)
        n->backward_fn = [a, b](Node& self) {
            if (a->requires_grad) a->grad_buffer().add_(self.grad);
            if (b->requires_grad) b->grad_buffer().add_(self.grad);
        };
    return n;
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a->value, b->value, "sub");
    Tensor out = a->value.clone();
    out.add_(b->value, -1.0);
    Var n = make_node(std::move(out), {a, b});
    if (n->requires_grad)
        n->backward_fn = [a, b](Node& self) {
            if (a->requires_grad) a->grad_buffer().add_(self.grad);
            if (b->requires_grad) b->grad_buffer().add_(self.grad, -1.0);
        };
    return n;
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a->value, b->value, "mul");
    Tensor out(a->value.shape());
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    double* po = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
    Var n = make_node(std::move(out), {a, b});
    if (n->requires_grad)
        n->backward_fn = [a, b](Node& self) {
            const double* g = self.grad.data();
            const int64_t m = self.grad.numel();
            if (a->requires_grad) {
                double* da = a->grad_buffer().data();
                const double* vb = b->value.data();
                for (int64_t i = 0; i < m; ++i) da[i] += g[i] * vb[i];
            }
            if (b->requires_grad) {
                double* db = b->grad_buffer().data();
                const double* va = a->value.data();
                for (int64_t i = 0; i < m; ++i) db[i] += g[i] * va[i];
            }
        };
    return n;
}

Var div(const Var& a, const Var& b) {
    check_same_shape(a->value, b->value, "div");
    Tensor out(a->value.shape());
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    double* po = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] / pb[i];
    Var n = make_node(std::move(out), {a, b});
    if (n->requires_grad)
        n->backward_fn = [a, b](Node& self) {
            const double* g = self.grad.data();
            const double* va = a->value.data();
            const double* vb = b->value.data();
            const int64_t m = self.grad.numel();
            if (a->requires_grad) {
                double* da = a->grad_buffer().data();
                for (int64_t i = 0; i < m; ++i) da[i] += g[i] / vb[i];
            }
            if (b->requires_grad) {
                double* db = b->grad_buffer().data();
                for (int64_t i = 0; i < m; ++i) db[i] -= g[i] * va[i] / (vb[i] * vb[i]);
            }
        };
    return n;
}

Var neg(const Var& a) { return mul_scalar(a, -1.0); }

Var add_scalar(const Var& a, double s) {
    Tensor out = a->value.clone();
    double* p = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) p[i] += s;
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a](Node& self) { a->grad_buffer().add_(self.grad); };
    return n;
}

Var mul_scalar(const Var& a, double s) {
    Tensor out = a->value.clone();
    out.mul_(s);
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, s](Node& self) { a->grad_buffer().add_(self.grad, s); };
    return n;
}

namespace {
template <typename FwdFn, typename BwdFn>
Var unary_op(const Var& a, FwdFn fwd, BwdFn bwd_from_out_and_in) {
    Tensor out(a->value.shape());
    const double* pa = a->value.data();
    double* po = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) po[i] = fwd(pa[i]);
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, bwd_from_out_and_in](Node& self) {
            const double* g = self.grad.data();
            const double* y = self.value.data();
            const double* x = a->value.data();
            double* da = a->grad_buffer().data();
            for (int64_t i = 0; i < self.grad.numel(); ++i)
                da[i] += g[i] * bwd_from_out_and_in(y[i], x[i]);
        };
    return n;
}
}  // namespace

Var exp_op(const Var& a) {
    return unary_op(
        a, [](double x) { return std::exp(x); }, [](double y, double) { return y; });
}

Var tanh_op(const Var& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); }, [](double y, double) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double y, double) { return y * (1.0 - y); });
}

Var silu(const Var& a) {
    return unary_op(
        a,
        [](double x) { return x / (1.0 + std::exp(-x)); },
        [](double, double x) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        });
}

Var relu(const Var& a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var square(const Var& a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double, double x) { return 2.0 * x; });
}

Var clamp(const Var& a, double lo, double hi) {
    return unary_op(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double, double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// shape
// ---------------------------------------------------------------------------

Var reshape(const Var& a, std::vector<int64_t> shape) {
    Var n = make_node(a->value.reshaped(std::move(shape)), {a});
    if (n->requires_grad)
        n->backward_fn = [a](Node& self) {
            a->grad_buffer().add_(self.grad.reshaped(a->value.shape()));
        };
    return n;
}

namespace {
void permute_0213_into(const Tensor& in, Tensor& out, int64_t A, int64_t B, int64_t C, int64_t D) {
    const double* p = in.data();
    double* q = out.data();
    for (int64_t a = 0; a < A; ++a)
        for (int64_t b = 0; b < B; ++b)
            for (int64_t c = 0; c < C; ++c) {
                const double* src = p + ((a * B + b) * C + c) * D;
                double* dst = q + ((a * C + c) * B + b) * D;
                std::copy(src, src + D, dst);
            }
}
}  // namespace

Var permute_0213(const Var& a) {
    const auto& s = a->value.shape();
    if (s.size() != 4) throw ShapeError("permute_0213: expected 4-d tensor");
    const int64_t A = s[0], B = s[1], C = s[2], D = s[3];
    Tensor out({A, C, B, D});
    permute_0213_into(a->value, out, A, B, C, D);
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, A, B, C, D](Node& self) {
            Tensor gin({A, B, C, D});
            permute_0213_into(self.grad, gin, A, C, B, D);  // inverse is the same swap
            a->grad_buffer().add_(gin);
        };
    return n;
}

namespace {
void transpose_batch(const double* p, double* q, int64_t batch, int64_t M, int64_t N) {
    for (int64_t b = 0; b < batch; ++b) {
        const double* src = p + b * M * N;
        double* dst = q + b * M * N;
        for (int64_t i = 0; i < M; ++i)
            for (int64_t j = 0; j < N; ++j) dst[j * M + i] = src[i * N + j];
    }
}
}  // namespace

Var transpose_last2(const Var& a) {
    const auto& s = a->value.shape();
    if (s.size() < 2) throw ShapeError("transpose_last2: tensor rank < 2");
    const int64_t N = s[s.size() - 1], M = s[s.size() - 2];
    const int64_t batch = a->value.numel() / (M * N);
    std::vector<int64_t> os(s);
    os[s.size() - 2] = N;
    os[s.size() - 1] = M;
    Tensor out(os);
    transpose_batch(a->value.data(), out.data(), batch, M, N);
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, batch, M, N](Node& self) {
            Tensor gin(a->value.shape());
            transpose_batch(self.grad.data(), gin.data(), batch, N, M);
            a->grad_buffer().add_(gin);
        };
    return n;
}

Var narrow0(const Var& a, int64_t start, int64_t len) {
    const auto& s = a->value.shape();
    if (s.empty() || start < 0 || len <= 0 || start + len > s[0])
        throw ShapeError("narrow0: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") invalid for " + a->value.shape_str());
    const int64_t row = a->value.numel() / s[0];
    std::vector<int64_t> os(s);
    os[0] = len;
    Tensor out(os);
    std::copy(a->value.data() + start * row, a->value.data() + (start + len) * row, out.data());
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, start, len, row](Node& self) {
            const double* g = self.grad.data();
            double* da = a->grad_buffer().data() + start * row;
            for (int64_t i = 0; i < len * row; ++i) da[i] += g[i];
        };
    return n;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum_all(const Var& a) {
    double s = 0.0;
    const double* p = a->value.data();
    for (int64_t i = 0; i < a->value.numel(); ++i) s += p[i];
    Var n = make_node(Tensor::scalar(s), {a});
    if (n->requires_grad)
        n->backward_fn = [a](Node& self) {
            const double g = self.grad[0];
            double* da = a->grad_buffer().data();
            for (int64_t i = 0; i < a->value.numel(); ++i) da[i] += g;
        };
    return n;
}

Var mean_all(const Var& a) { return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->value.numel())); }

Var sum_lastdim(const Var& a) {
    const int64_t K = last_dim(a->value);
    const int64_t rows = a->value.numel() / K;
    std::vector<int64_t> os(a->value.shape());
    os.back() = 1;
    Tensor out(os);
    const double* p = a->value.data();
    double* q = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int64_t k = 0; k < K; ++k) s += p[r * K + k];
        q[r] = s;
    }
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, rows, K](Node& self) {
            const double* g = self.grad.data();
            double* da = a->grad_buffer().data();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t k = 0; k < K; ++k) da[r * K + k] += g[r];
        };
    return n;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    const auto& sa = a->value.shape();
    const auto& sb = b->value.shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
        throw ShapeError("matmul: incompatible shapes " + a->value.shape_str() + " x " +
                         b->value.shape_str());
    const int64_t M = sa[0], K = sa[1], N = sb[1];
    Tensor out({M, N});
    MapM(out.data(), M, N).noalias() =
        MapCM(a->value.data(), M, K) * MapCM(b->value.data(), K, N);
    Var n = make_node(std::move(out), {a, b});
    if (n->requires_grad)
        n->backward_fn = [a, b, M, K, N](Node& self) {
            MapCM g(self.grad.data(), M, N);
            if (a->requires_grad)
                MapM(a->grad_buffer().data(), M, K).noalias() +=
                    g * MapCM(b->value.data(), K, N).transpose();
            if (b->requires_grad)
                MapM(b->grad_buffer().data(), K, N).noalias() +=
                    MapCM(a->value.data(), M, K).transpose() * g;
        };
    return n;
}

Var bmm(const Var& a, const Var& b) {
    const auto& sa = a->value.shape();
    const auto& sb = b->value.shape();
    if (sa.size() != 3 || sb.size() != 3 || sa[0] != sb[0] || sa[2] != sb[1])
        throw ShapeError("bmm: incompatible shapes " + a->value.shape_str() + " x " +
                         b->value.shape_str());
    const int64_t B = sa[0], M = sa[1], K = sa[2], N = sb[2];
    Tensor out({B, M, N});
    for (int64_t i = 0; i < B; ++i)
        MapM(out.data() + i * M * N, M, N).noalias() =
            MapCM(a->value.data() + i * M * K, M, K) * MapCM(b->value.data() + i * K * N, K, N);
    Var n = make_node(std::move(out), {a, b});
    if (n->requires_grad)
        n->backward_fn = [a, b, B, M, K, N](Node& self) {
            for (int64_t i = 0; i < B; ++i) {
                MapCM g(self.grad.data() + i * M * N, M, N);
                if (a->requires_grad)
                    MapM(a->grad_buffer().data() + i * M * K, M, K).noalias() +=
                        g * MapCM(b->value.data() + i * K * N, K, N).transpose();
                if (b->requires_grad)
                    MapM(b->grad_buffer().data() + i * K * N, K, N).noalias() +=
                        MapCM(a->value.data() + i * M * K, M, K).transpose() * g;
            }
        };
    return n;
}

Var add_bias_row(const Var& x, const Var& bias) {
    const int64_t N = bias->value.numel();
    if (last_dim(x->value) != N)
        throw ShapeError("add_bias_row: bias size " + std::to_string(N) + " vs last dim " +
                         std::to_string(last_dim(x->value)));
    const int64_t M = x->value.numel() / N;
    Tensor out = x->value.clone();
    double* p = out.data();
    const double* b = bias->value.data();
    for (int64_t r = 0; r < M; ++r)
        for (int64_t j = 0; j < N; ++j) p[r * N + j] += b[j];
    Var n = make_node(std::move(out), {x, bias});
    if (n->requires_grad)
        n->backward_fn = [x, bias, M, N](Node& self) {
            const double* g = self.grad.data();
            if (x->requires_grad) x->grad_buffer().add_(self.grad.reshaped(x->value.shape()));
            if (bias->requires_grad) {
                double* db = bias->grad_buffer().data();
                for (int64_t r = 0; r < M; ++r)
                    for (int64_t j = 0; j < N; ++j) db[j] += g[r * N + j];
            }
        };
    return n;
}

Var softmax_lastdim(const Var& a) {
    const int64_t K = last_dim(a->value);
    const int64_t rows = a->value.numel() / K;
    Tensor out(a->value.shape());
    const double* p = a->value.data();
    double* q = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = p + r * K;
        double* yr = q + r * K;
        double mx = xr[0];
        for (int64_t k = 1; k < K; ++k) mx = std::max(mx, xr[k]);
        double s = 0.0;
        for (int64_t k = 0; k < K; ++k) {
            yr[k] = std::exp(xr[k] - mx);
            s += yr[k];
        }
        const double inv = 1.0 / s;
        for (int64_t k = 0; k < K; ++k) yr[k] *= inv;
    }
    Var n = make_node(std::move(out), {a});
    if (n->requires_grad)
        n->backward_fn = [a, rows, K](Node& self) {
            const double* g = self.grad.data();
            const double* y = self.value.data();
            double* da = a->grad_buffer().data();
            for (int64_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (int64_t k = 0; k < K; ++k) dot += g[r * K + k] * y[r * K + k];
                for (int64_t k = 0; k < K; ++k)
                    da[r * K + k] += y[r * K + k] * (g[r * K + k] - dot);
            }
        };
    return n;
}

// ---------------------------------------------------------------------------
// conv / vision
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
    int64_t N, Cin, H, W, Cout, kh, kw, Ho, Wo;
    int stride, pad;
    bool is_pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
    const auto& sx = x.shape();
    const auto& sw = w.shape();
    if (sx.size() != 4 || sw.size() != 4)
        throw ShapeError("conv2d: expected 4-d input and weight");
    if (sx[1] != sw[1])
        throw ShapeError("conv2d: channel mismatch, input " + x.shape_str() + " weight " +
                         w.shape_str());
    ConvDims d;
    d.N = sx[0]; d.Cin = sx[1]; d.H = sx[2]; d.W = sx[3];
    d.Cout = sw[0]; d.kh = sw[2]; d.kw = sw[3];
    d.stride = stride; d.pad = pad;
    d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
    d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
    if (d.Ho <= 0 || d.Wo <= 0) throw ShapeError("conv2d: output would be empty");
    return d;
}

// cols has shape (Cin*kh*kw, Ho*Wo).
void im2col(const double* x, const ConvDims& d, double* cols) {
    const int64_t HW = d.Ho * d.Wo;
    for (int64_t c = 0; c < d.Cin; ++c) {
        for (int64_t ki = 0; ki < d.kh; ++ki) {
            for (int64_t kj = 0; kj < d.kw; ++kj) {
                double* row = cols + ((c * d.kh + ki) * d.kw + kj) * HW;
                for (int64_t ho = 0; ho < d.Ho; ++ho) {
                    const int64_t h = ho * d.stride - d.pad + ki;
                    double* dst = row + ho * d.Wo;
                    if (h < 0 || h >= d.H) {
                        std::fill(dst, dst + d.Wo, 0.0);
                        continue;
                    }
                    const double* src = x + (c * d.H + h) * d.W;
                    for (int64_t wo = 0; wo < d.Wo; ++wo) {
                        const int64_t ww = wo * d.stride - d.pad + kj;
                        dst[wo] = (ww >= 0 && ww < d.W) ? src[ww] : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-add of cols gradient back into the input gradient.
void col2im(const double* cols, const ConvDims& d, double* dx) {
    const int64_t HW = d.Ho * d.Wo;
    for (int64_t c = 0; c < d.Cin; ++c) {
        for (int64_t ki = 0; ki < d.kh; ++ki) {
            for (int64_t kj = 0; kj < d.kw; ++kj) {
                const double* row = cols + ((c * d.kh + ki) * d.kw + kj) * HW;
                for (int64_t ho = 0; ho < d.Ho; ++ho) {
                    const int64_t h = ho * d.stride - d.pad + ki;
                    if (h < 0 || h >= d.H) continue;
                    double* dst = dx + (c * d.H + h) * d.W;
                    const double* src = row + ho * d.Wo;
                    for (int64_t wo = 0; wo < d.Wo; ++wo) {
                        const int64_t ww = wo * d.stride - d.pad + kj;
                        if (ww >= 0 && ww < d.W) dst[ww] += src[wo];
                    }
                }
            }
        }
    }
}

Var conv2d_impl(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const ConvDims d = conv_dims(x->value, w->value, stride, pad);
    const int64_t HW = d.Ho * d.Wo;
    const int64_t CK = d.Cin * d.kh * d.kw;
    Tensor out({d.N, d.Cout, d.Ho, d.Wo});

    MapCM wm(w->value.data(), d.Cout, CK);
    Tensor cols;
    if (!d.is_pointwise()) cols = Tensor({CK, HW});
    for (int64_t n = 0; n < d.N; ++n) {
        const double* xn = x->value.data() + n * d.Cin * d.H * d.W;
        MapM yn(out.data() + n * d.Cout * HW, d.Cout, HW);
        if (d.is_pointwise()) {
            yn.noalias() = wm * MapCM(xn, d.Cin, HW);
        } else {
            im2col(xn, d, cols.data());
            yn.noalias() = wm * MapCM(cols.data(), CK, HW);
        }
    }
    if (b) {
        if (b->value.numel() != d.Cout) throw ShapeError("conv2d: bias size mismatch");
        double* p = out.data();
        const double* bb = b->value.data();
        for (int64_t n = 0; n < d.N; ++n)
            for (int64_t c = 0; c < d.Cout; ++c) {
                double* row = p + (n * d.Cout + c) * HW;
                for (int64_t i = 0; i < HW; ++i) row[i] += bb[c];
            }
    }

    std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    Var n = make_node(std::move(out), std::move(parents));
    if (n->requires_grad)
        n->backward_fn = [x, w, b, d, HW, CK](Node& self) {
            MapCM wm(w->value.data(), d.Cout, CK);
            Tensor cols, dcols;
            if (!d.is_pointwise()) {
                cols = Tensor({CK, HW});
                dcols = Tensor({CK, HW});
            }
            for (int64_t nn = 0; nn < d.N; ++nn) {
                MapCM gy(self.grad.data() + nn * d.Cout * HW, d.Cout, HW);
                const double* xn = x->value.data() + nn * d.Cin * d.H * d.W;
                if (d.is_pointwise()) {
                    if (w->requires_grad)
                        MapM(w->grad_buffer().data(), d.Cout, CK).noalias() +=
                            gy * MapCM(xn, d.Cin, HW).transpose();
                    if (x->requires_grad)
                        MapM(x->grad_buffer().data() + nn * d.Cin * d.H * d.W, d.Cin, HW)
                            .noalias() += wm.transpose() * gy;
                } else {
                    if (w->requires_grad || x->requires_grad) im2col(xn, d, cols.data());
                    if (w->requires_grad)
                        MapM(w->grad_buffer().data(), d.Cout, CK).noalias() +=
                            gy * MapCM(cols.data(), CK, HW).transpose();
                    if (x->requires_grad) {
                        MapM(dcols.data(), CK, HW).noalias() = wm.transpose() * gy;
                        col2im(dcols.data(), d, x->grad_buffer().data() + nn * d.Cin * d.H * d.W);
                    }
                }
                if (b && b->requires_grad) {
                    double* db = b->grad_buffer().data();
                    const double* g = self.grad.data() + nn * d.Cout * HW;
                    for (int64_t c = 0; c < d.Cout; ++c) {
                        double s = 0.0;
                        for (int64_t i = 0; i < HW; ++i) s += g[c * HW + i];
                        db[c] += s;
                    }
                }
            }
        };
    return n;
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    return conv2d_impl(x, w, b, stride, pad);
}

Var conv2d_nobias(const Var& x, const Var& w, int stride, int pad) {
    return conv2d_impl(x, w, nullptr, stride, pad);
}

Var upsample_nearest2(const Var& x) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw ShapeError("upsample_nearest2: expected 4-d tensor");
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    Tensor out({N, C, 2 * H, 2 * W});
    const double* p = x->value.data();
    double* q = out.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const double* src = p + nc * H * W;
        double* dst = q + nc * 4 * H * W;
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                const double v = src[h * W + w];
                double* d0 = dst + (2 * h) * 2 * W + 2 * w;
                double* d1 = dst + (2 * h + 1) * 2 * W + 2 * w;
                d0[0] = v; d0[1] = v; d1[0] = v; d1[1] = v;
            }
    }
    Var n = make_node(std::move(out), {x});
    if (n->requires_grad)
        n->backward_fn = [x, N, C, H, W](Node& self) {
            const double* g = self.grad.data();
            double* dx = x->grad_buffer().data();
            for (int64_t nc = 0; nc < N * C; ++nc) {
                const double* gs = g + nc * 4 * H * W;
                double* dd = dx + nc * H * W;
                for (int64_t h = 0; h < H; ++h)
                    for (int64_t w = 0; w < W; ++w) {
                        const double* g0 = gs + (2 * h) * 2 * W + 2 * w;
                        const double* g1 = gs + (2 * h + 1) * 2 * W + 2 * w;
                        dd[h * W + w] += g0[0] + g0[1] + g1[0] + g1[1];
                    }
            }
        };
    return n;
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

Var group_normalize(const Var& x, int groups, double eps) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw ShapeError("group_normalize: expected 4-d tensor");
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    if (C % groups != 0) throw ShapeError("group_normalize: channels not divisible by groups");
    const int64_t m = (C / groups) * H * W;  // elements per group, contiguous in memory
    const int64_t NG = N * groups;
    Tensor out(s);
    Tensor inv({NG});
    const double* p = x->value.data();
    double* q = out.data();
    for (int64_t g = 0; g < NG; ++g) {
        const double* xa = p + g * m;
        double mu = 0.0;
        for (int64_t i = 0; i < m; ++i) mu += xa[i];
        mu /= static_cast<double>(m);
        double var = 0.0;
        for (int64_t i = 0; i < m; ++i) {
            const double d = xa[i] - mu;
            var += d * d;
        }
        var /= static_cast<double>(m);
        const double iv = 1.0 / std::sqrt(var + eps);
        inv[g] = iv;
        double* ya = q + g * m;
        for (int64_t i = 0; i < m; ++i) ya[i] = (xa[i] - mu) * iv;
    }
    Var n = make_node(std::move(out), {x});
    if (n->requires_grad)
        n->backward_fn = [x, inv, NG, m](Node& self) {
            const double* g = self.grad.data();
            const double* xh = self.value.data();
            double* dx = x->grad_buffer().data();
            for (int64_t gg = 0; gg < NG; ++gg) {
                const double* ga = g + gg * m;
                const double* xa = xh + gg * m;
                double mg = 0.0, mgx = 0.0;
                for (int64_t i = 0; i < m; ++i) {
                    mg += ga[i];
                    mgx += ga[i] * xa[i];
                }
                mg /= static_cast<double>(m);
                mgx /= static_cast<double>(m);
                const double iv = inv[gg];
                double* da = dx + gg * m;
                for (int64_t i = 0; i < m; ++i) da[i] += iv * (ga[i] - mg - xa[i] * mgx);
            }
        };
    return n;
}

Var scale_bias_channels(const Var& x, const Var& gamma, const Var& beta) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw ShapeError("scale_bias_channels: expected 4-d tensor");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    if (gamma->value.numel() != C || beta->value.numel() != C)
        throw ShapeError("scale_bias_channels: affine size mismatch");
    Tensor out(s);
    const double* p = x->value.data();
    const double* gm = gamma->value.data();
    const double* bt = beta->value.data();
    double* q = out.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const double* src = p + (n * C + c) * HW;
            double* dst = q + (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) dst[i] = src[i] * gm[c] + bt[c];
        }
    Var n = make_node(std::move(out), {x, gamma, beta});
    if (n->requires_grad)
        n->backward_fn = [x, gamma, beta, N, C, HW](Node& self) {
            const double* g = self.grad.data();
            const double* xv = x->value.data();
            const double* gm = gamma->value.data();
            for (int64_t nn = 0; nn < N; ++nn)
                for (int64_t c = 0; c < C; ++c) {
                    const double* ga = g + (nn * C + c) * HW;
                    if (x->requires_grad) {
                        double* dx = x->grad_buffer().data() + (nn * C + c) * HW;
                        for (int64_t i = 0; i < HW; ++i) dx[i] += ga[i] * gm[c];
                    }
                    if (gamma->requires_grad) {
                        const double* xa = xv + (nn * C + c) * HW;
                        double sg = 0.0;
                        for (int64_t i = 0; i < HW; ++i) sg += ga[i] * xa[i];
                        gamma->grad_buffer()[c] += sg;
                    }
                    if (beta->requires_grad) {
                        double sb = 0.0;
                        for (int64_t i = 0; i < HW; ++i) sb += ga[i];
                        beta->grad_buffer()[c] += sb;
                    }
                }
        };
    return n;
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const int64_t D = last_dim(x->value);
    if (gamma->value.numel() != D || beta->value.numel() != D)
        throw ShapeError("layer_norm: affine size mismatch");
    const int64_t M = x->value.numel() / D;
    Tensor out(x->value.shape());
    Tensor inv({M});
    Tensor xhat({M, D});
    const double* p = x->value.data();
    const double* gm = gamma->value.data();
    const double* bt = beta->value.data();
    double* q = out.data();
    double* xh = xhat.data();
    for (int64_t r = 0; r < M; ++r) {
        const double* xr = p + r * D;
        double mu = 0.0;
        for (int64_t k = 0; k < D; ++k) mu += xr[k];
        mu /= static_cast<double>(D);
        double var = 0.0;
        for (int64_t k = 0; k < D; ++k) {
            const double d = xr[k] - mu;
            var += d * d;
        }
        var /= static_cast<double>(D);
        const double iv = 1.0 / std::sqrt(var + eps);
        inv[r] = iv;
        for (int64_t k = 0; k < D; ++k) {
            const double h = (xr[k] - mu) * iv;
            xh[r * D + k] = h;
            q[r * D + k] = h * gm[k] + bt[k];
        }
    }
    Var n = make_node(std::move(out), {x, gamma, beta});
    if (n->requires_grad)
        n->backward_fn = [x, gamma, beta, inv, xhat, M, D](Node& self) {
            const double* g = self.grad.data();
            const double* gm = gamma->value.data();
            const double* xh = xhat.data();
            for (int64_t r = 0; r < M; ++r) {
                const double* gr = g + r * D;
                const double* hr = xh + r * D;
                if (x->requires_grad) {
                    double mh = 0.0, mhx = 0.0;
                    for (int64_t k = 0; k < D; ++k) {
                        const double hk = gr[k] * gm[k];
                        mh += hk;
                        mhx += hk * hr[k];
                    }
                    mh /= static_cast<double>(D);
                    mhx /= static_cast<double>(D);
                    double* dx = x->grad_buffer().data() + r * D;
                    const double iv = inv[r];
                    for (int64_t k = 0; k < D; ++k)
                        dx[k] += iv * (gr[k] * gm[k] - mh - hr[k] * mhx);
                }
                if (gamma->requires_grad) {
                    double* dg = gamma->grad_buffer().data();
                    for (int64_t k = 0; k < D; ++k) dg[k] += gr[k] * hr[k];
                }
                if (beta->requires_grad) {
                    double* db = beta->grad_buffer().data();
                    for (int64_t k = 0; k < D; ++k) db[k] += gr[k];
                }
            }
        };
    return n;
}

Var mse(const Var& a, const Var& b) { return mean_all(square(sub(a, b))); }

}  // namespace semigda::ad
