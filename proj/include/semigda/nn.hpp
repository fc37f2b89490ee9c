#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "semigda/autodiff.hpp"
#include "semigda/rng.hpp"
#include "semigda/tensor.hpp"

namespace semigda::nn {

// A named, owned weight tensor. `grad` always has the same shape as `value`
// and is filled in by Session::backward. Non-trainable params never receive
// gradients and are skipped by optimizers.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

Param make_param(std::string name, Tensor value, bool trainable = true);

enum class Init { He, Lecun, Zero };

Tensor init_tensor(std::vector<int64_t> shape, int64_t fan_in, Init init, Rng& rng);

// Builds the autodiff graph for one training step. Each Param is wrapped in
// a leaf node at most once per session, so multiple uses of the same weight
// share gradient accumulation. backward() runs autodiff from the loss and
// writes the resulting gradients into Param::grad (overwriting).
class Session {
public:
    ad::Var use(Param& p);
    void backward(const ad::Var& loss);

private:
    std::unordered_map<Param*, ad::Var> cache_;
    std::vector<Param*> order_;
};

// ---- layers -------------------------------------------------------------

struct Conv2d {
    Param w, b;
    int stride = 1, pad = 0;
    bool has_bias = true;

    Conv2d() = default;
    Conv2d(const std::string& name, int cin, int cout, int k, int stride, int pad, Rng& rng,
           bool bias = true, Init init = Init::He);
    ad::Var forward(Session& s, const ad::Var& x);
    void collect(std::vector<Param*>& out);
};

struct Linear {
    Param w, b;  // w is (din, dout)
    bool has_bias = true;

    Linear() = default;
    Linear(const std::string& name, int din, int dout, Rng& rng, bool bias = true,
           Init init = Init::Lecun);
    ad::Var forward(Session& s, const ad::Var& x);  // (M, din) -> (M, dout)
    void collect(std::vector<Param*>& out);
};

struct GroupNorm {
    Param gamma, beta;
    int groups = 1;
    double eps = 1e-5;

    GroupNorm() = default;
    GroupNorm(const std::string& name, int channels, int groups, double eps = 1e-5);
    ad::Var forward(Session& s, const ad::Var& x);
    void collect(std::vector<Param*>& out);
};

struct LayerNorm {
    Param gamma, beta;
    double eps = 1e-5;

    LayerNorm() = default;
    LayerNorm(const std::string& name, int dim, double eps = 1e-5);
    ad::Var forward(Session& s, const ad::Var& x);
    void collect(std::vector<Param*>& out);
};

// ---- optimizer ----------------------------------------------------------

// Standard Adam with bias correction. Each instance owns first/second moment
// buffers for its parameter group; groups are kept separate so that updating
// one group can never disturb another's state.
class Adam {
public:
    Adam() = default;
    Adam(std::vector<Param*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    void zero_grad();
    void step();

    const std::vector<Param*>& params() const { return params_; }
    std::size_t size() const { return params_.size(); }
    Tensor& moment1(std::size_t i) { return m_[i]; }
    Tensor& moment2(std::size_t i) { return v_[i]; }
    int64_t& step_count() { return t_; }
    double lr() const { return lr_; }

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    int64_t t_ = 0;
    double lr_ = 1e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

// Helpers shared by checkpointing and the freeze-invariance checks.
void zero_grads(const std::vector<Param*>& params);
std::string params_digest(const std::vector<Param*>& params);  // fnv1a-64 hex of raw bytes
int64_t param_count(const std::vector<Param*>& params);

}  // namespace semigda::nn
