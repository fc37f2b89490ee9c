#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "semigda/common.hpp"
#include "semigda/mask_codec.hpp"
#include "semigda/rng.hpp"

using namespace semigda;

namespace {
Tensor random_mask(Rng& rng, int64_t h, int64_t w, int k) {
    Tensor m({h, w});
    for (int64_t i = 0; i < m.numel(); ++i)
        m.data()[i] = static_cast<double>(rng.below(k));
    return m;
}
}  // namespace

TEST_CASE("conversion hits the documented anchor values") {
    Tensor m({2, 2});
    m.data()[0] = 0.0;
    m.data()[1] = 1.0;
    m.data()[2] = 1.0;
    m.data()[3] = 0.0;
    Tensor c = mask_to_continuous(m, 2);
    CHECK(c.data()[0] == -1.0);
    CHECK(c.data()[1] == 0.0);

    Tensor m4 = Tensor::full({1}, 3.0);
    CHECK(mask_to_continuous(m4, 4).data()[0] == 0.5);

    Tensor zeros = Tensor::zeros({3, 3});
    Tensor cz = mask_to_continuous(zeros, 5);
    for (int64_t i = 0; i < cz.numel(); ++i) CHECK(cz.data()[i] == -1.0);
}

TEST_CASE("conversion output stays in [-1, 1-2/K]") {
    Rng rng(11);
    for (int k : {2, 3, 5, 7}) {
        Tensor m = random_mask(rng, 8, 8, k);
        Tensor c = mask_to_continuous(m, k);
        for (int64_t i = 0; i < c.numel(); ++i) {
            CHECK(c.data()[i] >= -1.0);
            CHECK(c.data()[i] <= 1.0 - 2.0 / k + 1e-15);
        }
    }
}

TEST_CASE("round-trip is exact for K in {2,3,5}") {
    Rng rng(12);
    for (int k : {2, 3, 5}) {
        for (int trial = 0; trial < 50; ++trial) {
            Tensor m = random_mask(rng, 16, 16, k);
            Tensor back = continuous_to_mask(mask_to_continuous(m, k), k);
            for (int64_t i = 0; i < m.numel(); ++i) CHECK(back.data()[i] == m.data()[i]);
        }
    }
}

TEST_CASE("reversion is total: overshoots clamp, nearest rounding applies") {
    Tensor c({4});
    c.data()[0] = 1.7;    // above range -> top class
    c.data()[1] = -3.0;   // below range -> class 0
    c.data()[2] = -0.49;  // (0.51*1) rounds to 1
    c.data()[3] = -0.51;  // rounds to 0
    Tensor m = continuous_to_mask(c, 2);
    CHECK(m.data()[0] == 1.0);
    CHECK(m.data()[1] == 0.0);
    CHECK(m.data()[2] == 1.0);
    CHECK(m.data()[3] == 0.0);
}

TEST_CASE("invalid mask values are rejected") {
    CHECK_THROWS_AS((void)mask_to_continuous(Tensor::full({1}, 2.0), 2), std::domain_error);
    CHECK_THROWS_AS((void)mask_to_continuous(Tensor::full({1}, -1.0), 2), std::domain_error);
    CHECK_THROWS_AS((void)mask_to_continuous(Tensor::full({1}, 0.5), 2), std::domain_error);
    CHECK_THROWS_AS((void)mask_to_continuous(Tensor::full({1}, 0.0), 1), std::domain_error);
}

TEST_CASE("soft foreground anchors and monotonicity") {
    Tensor c({3});
    c.data()[0] = 0.0;
    c.data()[1] = -1.0;
    c.data()[2] = -0.5;
    Tensor s = soft_foreground(c, 2);
    CHECK(s.data()[0] == 1.0);
    CHECK(s.data()[1] == 0.0);
    CHECK(s.data()[2] == 0.5);

    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double x = -1.2 + 1.6 * i / 40.0;
        const double v = soft_foreground(Tensor::full({1}, x), 2).data()[0];
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("thresholded soft foreground equals reversion for K=2") {
    Rng rng(13);
    for (int trial = 0; trial < 500; ++trial) {
        const double x = rng.uniform(-1.5, 1.5);
        Tensor c = Tensor::full({1}, x);
        const double via_soft = soft_foreground(c, 2).data()[0] >= 0.5 ? 1.0 : 0.0;
        CHECK(via_soft == continuous_to_mask(c, 2).data()[0]);
    }
}

TEST_CASE("differentiable soft foreground matches the tensor version") {
    Rng rng(14);
    Tensor c = Tensor::uniform({4, 4}, rng, -1.4, 1.4);
    ad::Var v = soft_foreground(ad::make_leaf(c, false), 2);
    Tensor plain = soft_foreground(c, 2);
    CHECK(v->value.max_abs_diff(plain) == 0.0);
}

TEST_CASE("foreground indicator and channel replication") {
    Tensor m({2, 2});
    m.data()[0] = 0.0;
    m.data()[1] = 1.0;
    m.data()[2] = 1.0;
    m.data()[3] = 0.0;
    Tensor fg = foreground_indicator(m, 2);
    CHECK(fg.data()[0] == 0.0);
    CHECK(fg.data()[1] == 1.0);

    Tensor single({1, 1, 2, 2});
    for (int64_t i = 0; i < 4; ++i) single.data()[i] = double(i);
    Tensor three = replicate3(single);
    CHECK(three.dim(1) == 3);
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t i = 0; i < 4; ++i) CHECK(three.data()[c * 4 + i] == double(i));
    CHECK_THROWS_AS((void)replicate3(Tensor::zeros({1, 2, 2, 2})), ShapeError);
}
