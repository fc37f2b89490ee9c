#include "semigda/tensor.hpp"

#include <cmath>
#include <sstream>

#include "semigda/common.hpp"

namespace semigda {

namespace {
int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d < 0) throw ShapeError("negative dimension in shape");
        n *= d;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)),
      numel_(shape_numel(shape_)),
      data_(std::make_shared<TensorStorage>(static_cast<std::size_t>(numel_), 0.0)) {}

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

Tensor Tensor::from_vector(std::vector<int64_t> shape, std::vector<double> v) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.numel_ = shape_numel(t.shape_);
    if (t.numel_ != static_cast<int64_t>(v.size()))
        throw ShapeError("from_vector: data size does not match shape");
    t.data_ = std::make_shared<TensorStorage>(v.begin(), v.end());
    return t;
}

Tensor Tensor::randn(std::vector<int64_t> shape, Rng& rng, double std) {
    Tensor t(std::move(shape));
    double* p = t.data();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = std * rng.normal();
    return t;
}

Tensor Tensor::uniform(std::vector<int64_t> shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    double* p = t.data();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = rng.uniform(lo, hi);
    return t;
}

double Tensor::item() const {
    if (numel_ != 1) throw ShapeError("item() on tensor with numel " + std::to_string(numel_));
    return (*data_)[0];
}

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
    int64_t known = 1;
    int infer = -1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] == -1) {
            if (infer >= 0) throw ShapeError("reshaped: more than one -1 dimension");
            infer = static_cast<int>(i);
        } else {
            known *= shape[i];
        }
    }
    if (infer >= 0) {
        if (known == 0 || numel_ % known != 0) throw ShapeError("reshaped: cannot infer dimension");
        shape[static_cast<std::size_t>(infer)] = numel_ / known;
        known = numel_;
    }
    if (known != numel_)
        throw ShapeError("reshaped: numel mismatch (" + std::to_string(known) + " vs " +
                         std::to_string(numel_) + ")");
    Tensor t;
    t.shape_ = std::move(shape);
    t.numel_ = numel_;
    t.data_ = data_;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.numel_ = numel_;
    t.data_ = std::make_shared<TensorStorage>(*data_);
    return t;
}

void Tensor::fill(double v) {
    double* p = data();
    for (int64_t i = 0; i < numel_; ++i) p[i] = v;
}

void Tensor::add_(const Tensor& o, double scale) {
    check_same_shape(*this, o, "add_");
    double* p = data();
    const double* q = o.data();
    for (int64_t i = 0; i < numel_; ++i) p[i] += scale * q[i];
}

void Tensor::mul_(double s) {
    double* p = data();
    for (int64_t i = 0; i < numel_; ++i) p[i] *= s;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << ")";
    return os.str();
}

bool Tensor::all_finite() const {
    const double* p = data();
    for (int64_t i = 0; i < numel_; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

double Tensor::max_abs_diff(const Tensor& o) const {
    check_same_shape(*this, o, "max_abs_diff");
    const double* p = data();
    const double* q = o.data();
    double m = 0.0;
    for (int64_t i = 0; i < numel_; ++i) m = std::max(m, std::fabs(p[i] - q[i]));
    return m;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

}  // namespace semigda
