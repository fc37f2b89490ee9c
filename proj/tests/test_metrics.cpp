#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "hd95_oracle.hpp"
#include "json.hpp"
#include "semigda/common.hpp"
#include "semigda/metrics.hpp"
#include "semigda/rng.hpp"

using namespace semigda;

namespace {
Tensor random_binary(Rng& rng, int64_t h, int64_t w, double p_fg) {
    Tensor m({h, w});
    for (int64_t i = 0; i < m.numel(); ++i) m.data()[i] = rng.uniform() < p_fg ? 1.0 : 0.0;
    return m;
}

Tensor blob_mask(int64_t h, int64_t w, int64_t cy, int64_t cx, int64_t r) {
    Tensor m = Tensor::zeros({h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.data()[y * w + x] = 1.0;
    return m;
}
}  // namespace

TEST_CASE("dice and iou hit the documented anchors") {
    Tensor a = blob_mask(16, 16, 8, 8, 4);
    CHECK(dice_score(a, a) == 100.0);
    CHECK(iou_score(a, a) == 100.0);

    Tensor left = Tensor::zeros({4, 4});
    left.data()[0] = 1.0;
    Tensor right = Tensor::zeros({4, 4});
    right.data()[15] = 1.0;
    CHECK(dice_score(left, right) == 0.0);
    CHECK(iou_score(left, right) == 0.0);

    // two pixels each, one shared
    Tensor p = Tensor::zeros({3, 3});
    p.data()[0] = 1.0;
    p.data()[1] = 1.0;
    Tensor g = Tensor::zeros({3, 3});
    g.data()[1] = 1.0;
    g.data()[2] = 1.0;
    CHECK(dice_score(p, g) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(iou_score(p, g) == doctest::Approx(100.0 / 3.0).epsilon(1e-12));

    Tensor empty = Tensor::zeros({4, 4});
    CHECK(dice_score(empty, empty) == 100.0);
    CHECK(iou_score(empty, empty) == 100.0);

    CHECK_THROWS_AS((void)dice_score(Tensor::full({4, 4}, 0.5), empty), std::domain_error);
    CHECK_THROWS_AS((void)dice_score(Tensor::zeros({2, 3}), empty), ShapeError);
}

TEST_CASE("hd95 anchors and conventions") {
    Tensor a = blob_mask(16, 16, 8, 8, 4);
    CHECK(hd95(a, a) == 0.0);

    Tensor p = Tensor::zeros({8, 8});
    p.data()[2 * 8 + 2] = 1.0;
    Tensor g = Tensor::zeros({8, 8});
    g.data()[2 * 8 + 5] = 1.0;
    CHECK(hd95(p, g) == 3.0);

    Tensor empty = Tensor::zeros({16, 16});
    CHECK(hd95(empty, empty) == 0.0);
    CHECK(hd95(a, empty) == std::sqrt(16.0 * 16.0 + 16.0 * 16.0));
    CHECK(hd95(empty, a) == std::sqrt(16.0 * 16.0 + 16.0 * 16.0));
}

TEST_CASE("hd95 symmetry and translation invariance") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor a = random_binary(rng, 20, 20, 0.3);
        Tensor b = random_binary(rng, 20, 20, 0.3);
        CHECK(hd95(a, b) == hd95(b, a));
        CHECK(dice_score(a, b) == dice_score(b, a));
        CHECK(iou_score(a, b) == iou_score(b, a));
    }

    Tensor a = blob_mask(24, 24, 8, 8, 3);
    Tensor b = blob_mask(24, 24, 10, 9, 4);
    Tensor a2 = blob_mask(24, 24, 8 + 5, 8 + 6, 3);
    Tensor b2 = blob_mask(24, 24, 10 + 5, 9 + 6, 4);
    CHECK(hd95(a, b) == hd95(a2, b2));
}

TEST_CASE("hd95 equals the all-pairs oracle bitwise") {
    Rng rng(32);
    for (int trial = 0; trial < 300; ++trial) {
        const int64_t h = 4 + static_cast<int64_t>(rng.below(29));  // up to 32
        const int64_t w = 4 + static_cast<int64_t>(rng.below(29));
        const double pa = rng.uniform(0.0, 0.6);
        const double pb = rng.uniform(0.0, 0.6);
        Tensor a = random_binary(rng, h, w, pa);
        Tensor b = random_binary(rng, h, w, pb);
        const double fast = hd95(a, b);
        const double slow = testutil::hd95_bruteforce(a, b);
        CHECK(fast == slow);  // exact equality, not approximate
    }
}

TEST_CASE("iou never exceeds dice") {
    Rng rng(33);
    for (int trial = 0; trial < 300; ++trial) {
        Tensor a = random_binary(rng, 12, 12, rng.uniform(0.0, 0.8));
        Tensor b = random_binary(rng, 12, 12, rng.uniform(0.0, 0.8));
        CHECK(iou_score(a, b) <= dice_score(a, b) + 1e-12);
    }
}

TEST_CASE("percentile uses linear interpolation") {
    CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 50.0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 100.0) == 4.0);
    CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 0.0) == 1.0);
    CHECK(percentile({5.0}, 95.0) == 5.0);
    // 95% of 21 values 0..20: rank 19.0 exactly
    std::vector<double> v;
    for (int i = 0; i <= 20; ++i) v.push_back(double(i));
    CHECK(percentile(v, 95.0) == 19.0);
    CHECK_THROWS_AS((void)percentile({}, 95.0), ConfigError);
}

TEST_CASE("aggregation and report files") {
    std::vector<SampleMetrics> rows = {{"a", 80.0, 70.0, 2.0}, {"b", 90.0, 85.0, 4.0}};
    MetricsReport rep = aggregate_metrics(rows);
    CHECK(rep.dice_pct == doctest::Approx(85.0).epsilon(1e-12));
    CHECK(rep.iou_pct == doctest::Approx(77.5).epsilon(1e-12));
    CHECK(rep.hd95 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(rep.per_sample.size() == 2);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "semigda_metrics_test";
    fs::create_directories(dir);
    write_metrics_csv((dir / "m.csv").string(), rep);
    write_metrics_json((dir / "m.json").string(), rep);

    std::ifstream jf(dir / "m.json");
    nlohmann::json j;
    jf >> j;
    CHECK(j["dice_pct"].get<double>() == doctest::Approx(85.0));
    CHECK(j["per_sample"].size() == 2);

    std::ifstream cf(dir / "m.csv");
    std::string line;
    std::getline(cf, line);
    CHECK(line == "id,dice,iou,hd95");
    fs::remove_all(dir);

    CHECK_THROWS_AS((void)aggregate_metrics({}), ConfigError);
}
