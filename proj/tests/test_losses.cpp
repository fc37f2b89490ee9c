#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fd_check.hpp"
#include "semigda/common.hpp"
#include "semigda/losses.hpp"
#include "semigda/mask_codec.hpp"
#include "semigda/rng.hpp"

using namespace semigda;
using semigda::testutil::fd_check;

TEST_CASE("warm-up schedule endpoints and monotonicity") {
    CHECK(std::abs(lambda_schedule(0, 1000, 0.1) - 0.1 * std::exp(-5.0)) < 1e-9);
    CHECK(std::abs(lambda_schedule(1000, 1000, 0.1) - 0.1) < 1e-12);
    CHECK(lambda_schedule(500, 1000, 0.1) == doctest::Approx(0.1 * std::exp(-1.25)).epsilon(1e-12));

    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double v = lambda_schedule(i * 10, 1000, 0.1);
        CHECK(v > prev);  // strictly increasing
        prev = v;
    }
    CHECK_THROWS_AS((void)lambda_schedule(0, 0, 0.1), ConfigError);
    CHECK_THROWS_AS((void)lambda_schedule(-1, 10, 0.1), ConfigError);
    CHECK_THROWS_AS((void)lambda_schedule(11, 10, 0.1), ConfigError);
}

TEST_CASE("dice loss closed-form anchors") {
    Tensor ones = Tensor::full({4, 4}, 1.0);
    CHECK(dice_loss_value(ones, ones, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

    Tensor left = Tensor::zeros({2, 2});
    left.data()[0] = 1.0;
    Tensor right = Tensor::zeros({2, 2});
    right.data()[3] = 1.0;
    CHECK(dice_loss_value(left, right, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

    // 2 px and 2 px with 1 shared -> 1 - 2/4
    Tensor p = Tensor::zeros({2, 2});
    p.data()[0] = 1.0;
    p.data()[1] = 1.0;
    Tensor g = Tensor::zeros({2, 2});
    g.data()[1] = 1.0;
    g.data()[2] = 1.0;
    CHECK(dice_loss_value(p, g, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

    // smooth keeps empty-vs-empty at 0
    Tensor empty = Tensor::zeros({2, 2});
    CHECK(dice_loss_value(empty, empty, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

    // range: random soft maps stay within [0,1]
    Rng rng(41);
    for (int i = 0; i < 50; ++i) {
        Tensor a = Tensor::uniform({5, 5}, rng, 0.0, 1.0);
        Tensor b = Tensor::uniform({5, 5}, rng, 0.0, 1.0);
        const double v = dice_loss_value(a, b, 1.0);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("prior losses: zero case, unit offset, symmetry") {
    Rng rng(42);
    Tensor z = Tensor::uniform({1, 4, 2, 2}, rng, -1.0, 1.0);
    auto leaf = [](const Tensor& t) { return ad::make_leaf(t, false); };

    CHECK(losses::prior_sup(leaf(z), leaf(z), leaf(z))->value.item() == 0.0);

    Tensor z1 = z.clone();
    for (int64_t i = 0; i < z1.numel(); ++i) z1.data()[i] += 1.0;
    CHECK(losses::prior_sup(leaf(z1), leaf(z), leaf(z))->value.item() ==
          doctest::Approx(1.0).epsilon(1e-12));

    Tensor w = Tensor::uniform({1, 4, 2, 2}, rng, -1.0, 1.0);
    CHECK(losses::prior_unsup(leaf(z), leaf(w))->value.item() ==
          doctest::Approx(losses::prior_unsup(leaf(w), leaf(z))->value.item()).epsilon(1e-14));

    Tensor zc = z.clone();
    for (int64_t i = 0; i < zc.numel(); ++i) zc.data()[i] += 0.3;
    CHECK(losses::prior_unsup(leaf(zc), leaf(z))->value.item() ==
          doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("loss gradients agree with finite differences on 8x8 inputs") {
    Rng rng(43);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor a = Tensor::uniform({8, 8}, rng, 0.05, 0.95);
        Tensor b = Tensor::uniform({8, 8}, rng, 0.05, 0.95);
        fd_check([](const std::vector<ad::Var>& v) {
            return losses::dice_loss(v[0], v[1], 1.0);
        }, {a, b}, 1e-6);

        Tensor zv = Tensor::uniform({1, 4, 2, 2}, rng, -1.0, 1.0);
        Tensor zr = Tensor::uniform({1, 4, 2, 2}, rng, -1.0, 1.0);
        Tensor zg = Tensor::uniform({1, 4, 2, 2}, rng, -1.0, 1.0);
        fd_check([](const std::vector<ad::Var>& v) {
            return losses::prior_sup(v[0], v[1], v[2]);
        }, {zv, zr, zg}, 1e-6);
        fd_check([](const std::vector<ad::Var>& v) {
            return losses::prior_unsup(v[0], v[1]);
        }, {zv, zr}, 1e-6);

        // predictions in (-1,1) value space but away from the soft-map kinks
        Tensor yv = Tensor::uniform({2, 1, 8, 8}, rng, -0.95, -0.05);
        Tensor yr = Tensor::uniform({2, 1, 8, 8}, rng, -0.95, -0.05);
        Tensor fg({2, 1, 8, 8});
        for (int64_t i = 0; i < fg.numel(); ++i) fg.data()[i] = rng.below(2);
        fd_check([&](const std::vector<ad::Var>& v) {
            return losses::seg_sup(v[0], v[1], fg, 2, 1.0);
        }, {yv, yr}, 1e-6);
        // without stop-gradient the full derivative is well defined, so FD applies;
        // the detached form is pinned separately against a constant-target graph
        fd_check([&](const std::vector<ad::Var>& v) {
            return losses::seg_unsup(v[0], v[1], 2, 1.0, false);
        }, {yv, yr}, 1e-6);
    }
}

TEST_CASE("supervised segmentation loss anchors") {
    // predictions that decode exactly to the mask -> loss 0 at smooth=0
    Tensor y({1, 1, 2, 2});
    y.data()[0] = 1.0;
    y.data()[1] = 0.0;
    y.data()[2] = 0.0;
    y.data()[3] = 1.0;
    Tensor perfect({1, 1, 2, 2});
    for (int64_t i = 0; i < 4; ++i) perfect.data()[i] = y.data()[i] == 1.0 ? 0.0 : -1.0;
    Tensor wrong({1, 1, 2, 2});
    for (int64_t i = 0; i < 4; ++i) wrong.data()[i] = y.data()[i] == 1.0 ? -1.0 : 0.0;

    auto leaf = [](const Tensor& t) { return ad::make_leaf(t, false); };
    CHECK(losses::seg_sup(leaf(perfect), leaf(perfect), y, 2, 0.0)->value.item() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(losses::seg_sup(leaf(perfect), leaf(wrong), y, 2, 0.0)->value.item() ==
          doctest::Approx(1.0).epsilon(1e-12));

    // gradient reaches both branch predictions
    auto lv = ad::make_leaf(perfect.clone(), true);
    auto lr = ad::make_leaf(wrong.clone(), true);
    ad::backward(losses::seg_sup(lv, lr, y, 2, 1.0));
    CHECK(lv->grad.defined());
    CHECK(lr->grad.defined());
    CHECK(lv->grad.max_abs_diff(Tensor::zeros({1, 1, 2, 2})) > 0.0);
    CHECK(lr->grad.max_abs_diff(Tensor::zeros({1, 1, 2, 2})) > 0.0);
}

TEST_CASE("cross-branch loss: value symmetry, stop-gradient isolation") {
    Rng rng(44);
    Tensor yv = Tensor::uniform({1, 1, 6, 6}, rng, -0.9, -0.1);
    Tensor yr = Tensor::uniform({1, 1, 6, 6}, rng, -0.9, -0.1);
    auto leaf = [](const Tensor& t) { return ad::make_leaf(t, false); };

    const double v_sg = losses::seg_unsup(leaf(yv), leaf(yr), 2, 1.0, true)->value.item();
    const double v_full = losses::seg_unsup(leaf(yv), leaf(yr), 2, 1.0, false)->value.item();
    CHECK(v_sg == doctest::Approx(v_full).epsilon(1e-14));  // detach changes gradients only
    CHECK(v_sg ==
          doctest::Approx(losses::seg_unsup(leaf(yr), leaf(yv), 2, 1.0, true)->value.item())
              .epsilon(1e-14));
    // agreement is only exact when the soft maps are already binary
    Tensor ybin({1, 1, 6, 6});
    for (int64_t i = 0; i < ybin.numel(); ++i) ybin.data()[i] = (i % 3 == 0) ? 0.0 : -1.0;
    CHECK(losses::seg_unsup(leaf(ybin), leaf(ybin), 2, 0.0, true)->value.item() ==
          doctest::Approx(0.0).epsilon(1e-12));

    // with stop-gradient, d/d yhat_v comes only from the first dice term
    auto lv = ad::make_leaf(yv.clone(), true);
    auto lr = ad::make_leaf(yr.clone(), true);
    ad::backward(losses::seg_unsup(lv, lr, 2, 1.0, true));

    auto lv2 = ad::make_leaf(yv.clone(), true);
    ad::Var pv = soft_foreground(lv2, 2);
    ad::Var pr_const = soft_foreground(leaf(yr), 2);
    ad::backward(losses::dice_loss(pv, pr_const, 1.0));
    CHECK(lv->grad.max_abs_diff(lv2->grad) < 1e-15);
}

TEST_CASE("total loss assembly, bookkeeping identity, NaN guard") {
    auto s = [](double v) { return ad::make_leaf(Tensor::scalar(v), false); };
    TotalLoss tl = total_loss(s(0.5), s(0.25), s(0.125), s(0.0625), 30, 100, 0.1);
    const double lambda = lambda_schedule(30, 100, 0.1);
    CHECK(tl.report.lambda_u == lambda);
    const double recomputed = tl.report.sup_prior + tl.report.sup_seg +
                              tl.report.lambda_u * (tl.report.unsup_prior + tl.report.unsup_seg);
    CHECK(std::abs(tl.report.total - recomputed) < 1e-12);
    CHECK(tl.value->value.item() == tl.report.total);

    // no unsupervised components: total equals the supervised sum exactly
    TotalLoss sup_only = total_loss(s(0.5), s(0.25), nullptr, nullptr, 0, 100, 0.1);
    CHECK(sup_only.report.total == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(sup_only.report.unsup_prior == 0.0);
    CHECK(sup_only.report.unsup_seg == 0.0);

    CHECK_THROWS_AS(
        (void)total_loss(s(std::nan("")), s(0.0), nullptr, nullptr, 0, 100, 0.1), TrainingError);
    CHECK_THROWS_AS((void)total_loss(nullptr, nullptr, nullptr, nullptr, 0, 100, 0.1),
                    TrainingError);
}
