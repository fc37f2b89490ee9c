#include "semigda/nn.hpp"

#include <cmath>

#include "semigda/common.hpp"
#include "semigda/hash.hpp"

namespace semigda::nn {

Param make_param(std::string name, Tensor value, bool trainable) {
    Param p;
    p.name = std::move(name);
    p.grad = Tensor::zeros(value.shape());
    p.value = std::move(value);
    p.trainable = trainable;
    return p;
}

Tensor init_tensor(std::vector<int64_t> shape, int64_t fan_in, Init init, Rng& rng) {
    if (init == Init::Zero) return Tensor::zeros(std::move(shape));
    const double scale = (init == Init::He) ? 2.0 : 1.0;
    const double std = std::sqrt(scale / static_cast<double>(fan_in));
    return Tensor::randn(std::move(shape), rng, std);
}

ad::Var Session::use(Param& p) {
    auto it = cache_.find(&p);
    if (it != cache_.end()) return it->second;
    ad::Var v = ad::make_leaf(p.value, p.trainable);
    cache_.emplace(&p, v);
    order_.push_back(&p);
    return v;
}

void Session::backward(const ad::Var& loss) {
    ad::backward(loss);
    for (Param* p : order_) {
        if (!p->trainable) continue;
        const ad::Var& v = cache_.at(p);
        p->grad.zero_();
        if (v->grad.defined()) p->grad.add_(v->grad);
    }
}

// ---- layers -------------------------------------------------------------

Conv2d::Conv2d(const std::string& name, int cin, int cout, int k, int stride_, int pad_, Rng& rng,
               bool bias, Init init)
    : stride(stride_), pad(pad_), has_bias(bias) {
    const int64_t fan_in = static_cast<int64_t>(cin) * k * k;
    w = make_param(name + ".w", init_tensor({cout, cin, k, k}, fan_in, init, rng));
    if (has_bias) b = make_param(name + ".b", Tensor::zeros({cout}));
}

ad::Var Conv2d::forward(Session& s, const ad::Var& x) {
    if (has_bias) return ad::conv2d(x, s.use(w), s.use(b), stride, pad);
    return ad::conv2d_nobias(x, s.use(w), stride, pad);
}

void Conv2d::collect(std::vector<Param*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
}

Linear::Linear(const std::string& name, int din, int dout, Rng& rng, bool bias, Init init)
    : has_bias(bias) {
    w = make_param(name + ".w", init_tensor({din, dout}, din, init, rng));
    if (has_bias) b = make_param(name + ".b", Tensor::zeros({dout}));
}

ad::Var Linear::forward(Session& s, const ad::Var& x) {
    ad::Var y = ad::matmul(x, s.use(w));
    if (has_bias) y = ad::add_bias_row(y, s.use(b));
    return y;
}

void Linear::collect(std::vector<Param*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
}

GroupNorm::GroupNorm(const std::string& name, int channels, int groups_, double eps_)
    : groups(groups_), eps(eps_) {
    gamma = make_param(name + ".gamma", Tensor::full({channels}, 1.0));
    beta = make_param(name + ".beta", Tensor::zeros({channels}));
}

ad::Var GroupNorm::forward(Session& s, const ad::Var& x) {
    return ad::scale_bias_channels(ad::group_normalize(x, groups, eps), s.use(gamma), s.use(beta));
}

void GroupNorm::collect(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

LayerNorm::LayerNorm(const std::string& name, int dim, double eps_) : eps(eps_) {
    gamma = make_param(name + ".gamma", Tensor::full({dim}, 1.0));
    beta = make_param(name + ".beta", Tensor::zeros({dim}));
}

ad::Var LayerNorm::forward(Session& s, const ad::Var& x) {
    return ad::layer_norm(x, s.use(gamma), s.use(beta), eps);
}

void LayerNorm::collect(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

// ---- optimizer ----------------------------------------------------------

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param* p : params_) {
        m_.push_back(Tensor::zeros(p->value.shape()));
        v_.push_back(Tensor::zeros(p->value.shape()));
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->grad.zero_();
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param* p = params_[i];
        if (!p->trainable) continue;
        double* mv = m_[i].data();
        double* vv = v_[i].data();
        double* pv = p->value.data();
        const double* g = p->grad.data();
        for (int64_t k = 0; k < p->value.numel(); ++k) {
            mv[k] = beta1_ * mv[k] + (1.0 - beta1_) * g[k];
            vv[k] = beta2_ * vv[k] + (1.0 - beta2_) * g[k] * g[k];
            const double mhat = mv[k] / bc1;
            const double vhat = vv[k] / bc2;
            pv[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void zero_grads(const std::vector<Param*>& params) {
    for (Param* p : params) p->grad.zero_();
}

std::string params_digest(const std::vector<Param*>& params) {
    Fnv1a64 h;
    for (const Param* p : params) {
        h.update(p->name);
        h.update(p->value.data(), static_cast<std::size_t>(p->value.numel()) * sizeof(double));
    }
    return h.hex();
}

int64_t param_count(const std::vector<Param*>& params) {
    int64_t n = 0;
    for (const Param* p : params) n += p->value.numel();
    return n;
}

}  // namespace semigda::nn
