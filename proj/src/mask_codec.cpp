#include "semigda/mask_codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "semigda/common.hpp"

namespace semigda {

namespace {
void check_classes(int num_classes) {
    if (num_classes < 2)
        throw std::domain_error("mask codec: class count must be >= 2, got " +
                                std::to_string(num_classes));
}
}  // namespace

Tensor mask_to_continuous(const Tensor& mask, int num_classes) {
    check_classes(num_classes);
    const double k = static_cast<double>(num_classes);
    Tensor out(mask.shape());
    const double* p = mask.data();
    double* q = out.data();
    for (int64_t i = 0; i < mask.numel(); ++i) {
        const double g = p[i];
        if (g < 0.0 || g >= k || g != std::floor(g))
            throw std::domain_error("mask codec: value " + std::to_string(g) +
                                    " outside integer range [0," + std::to_string(num_classes) +
                                    ")");
        q[i] = 2.0 * (g / k) - 1.0;
    }
    return out;
}

Tensor continuous_to_mask(const Tensor& cont, int num_classes) {
    check_classes(num_classes);
    const double k = static_cast<double>(num_classes);
    Tensor out(cont.shape());
    const double* p = cont.data();
    double* q = out.data();
    const double top = k - 1.0;
    for (int64_t i = 0; i < cont.numel(); ++i) {
        const double r = static_cast<double>(std::llround((p[i] + 1.0) * k / 2.0));
        q[i] = std::min(std::max(r, 0.0), top);
    }
    return out;
}

Tensor soft_foreground(const Tensor& cont, int num_classes) {
    check_classes(num_classes);
    const double half_k = static_cast<double>(num_classes) / 2.0;
    Tensor out(cont.shape());
    const double* p = cont.data();
    double* q = out.data();
    for (int64_t i = 0; i < cont.numel(); ++i)
        q[i] = std::min(std::max((p[i] + 1.0) * half_k, 0.0), 1.0);
    return out;
}

ad::Var soft_foreground(const ad::Var& cont, int num_classes) {
    check_classes(num_classes);
    const double half_k = static_cast<double>(num_classes) / 2.0;
    return ad::clamp(ad::mul_scalar(ad::add_scalar(cont, 1.0), half_k), 0.0, 1.0);
}

Tensor foreground_indicator(const Tensor& mask, int num_classes) {
    check_classes(num_classes);
    const double fg = static_cast<double>(num_classes - 1);
    Tensor out(mask.shape());
    const double* p = mask.data();
    double* q = out.data();
    for (int64_t i = 0; i < mask.numel(); ++i) q[i] = (p[i] == fg) ? 1.0 : 0.0;
    return out;
}

Tensor replicate3(const Tensor& x) {
    const auto& s = x.shape();
    if (s.size() != 4 || s[1] != 1) throw ShapeError("replicate3: expected (N,1,H,W)");
    const int64_t n = s[0], hw = s[2] * s[3];
    Tensor out({n, 3, s[2], s[3]});
    const double* p = x.data();
    double* q = out.data();
    for (int64_t i = 0; i < n; ++i)
        for (int64_t c = 0; c < 3; ++c)
            std::copy(p + i * hw, p + (i + 1) * hw, q + (i * 3 + c) * hw);
    return out;
}

}  // namespace semigda
