#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "semigda/rng.hpp"

namespace semigda {

namespace detail {

// Cache-line-aligned buffers keep every tensor's address residue constant, so
// alignment-peeled SIMD loops reduce in the same order on every run; with the
// default 16-byte heap alignment, wide-vector builds lose bitwise
// run-to-run reproducibility.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{alignment}));
    }
    void deallocate(T* p, std::size_t n) noexcept {
        ::operator delete(p, n * sizeof(T), std::align_val_t{alignment});
    }
    bool operator==(const AlignedAllocator&) const noexcept { return true; }
};

}  // namespace detail

using TensorStorage = std::vector<double, detail::AlignedAllocator<double>>;

// Dense row-major tensor of doubles. Copies are shallow (shared storage);
// use clone() for a deep copy. Double precision throughout: the gradient
// checks and resume-equality contracts need it, and the models are small
// enough that the cost is acceptable.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);

    static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int64_t> shape, double v);
    static Tensor from_vector(std::vector<int64_t> shape, std::vector<double> v);
    static Tensor randn(std::vector<int64_t> shape, Rng& rng, double std = 1.0);
    static Tensor uniform(std::vector<int64_t> shape, Rng& rng, double lo, double hi);
    static Tensor scalar(double v) { return full({1}, v); }

    bool defined() const { return data_ != nullptr; }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t ndim() const { return shape_.size(); }
    int64_t numel() const { return numel_; }

    double* data() { return data_->data(); }
    const double* data() const { return data_->data(); }
    double& operator[](int64_t i) { return (*data_)[static_cast<std::size_t>(i)]; }
    double operator[](int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }
    double item() const;  // requires numel() == 1

    // Shares storage; product of the new shape must match numel().
    // One dimension may be -1 and is inferred.
    Tensor reshaped(std::vector<int64_t> shape) const;
    Tensor clone() const;

    void fill(double v);
    void zero_() { fill(0.0); }
    void add_(const Tensor& o, double scale = 1.0);  // this += scale * o
    void mul_(double s);

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    bool all_finite() const;
    double max_abs_diff(const Tensor& o) const;

private:
    std::vector<int64_t> shape_;
    int64_t numel_ = 0;
    std::shared_ptr<TensorStorage> data_;
};

// Throws ShapeError with a composed message when shapes differ.
void check_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace semigda
