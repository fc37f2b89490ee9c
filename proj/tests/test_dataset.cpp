#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "semigda/common.hpp"
#include "semigda/dataset.hpp"
#include "semigda/png_io.hpp"

using namespace semigda;
namespace fs = std::filesystem;

namespace {
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("semigda_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

SyntheticConfig small_cfg(int n = 12, std::uint64_t seed = 7) {
    SyntheticConfig cfg;
    cfg.num_samples = n;
    cfg.image_size = 32;
    cfg.seed = seed;
    cfg.downsample_factor = 8;
    return cfg;
}
}  // namespace

TEST_CASE("synthetic corpus is deterministic and well-formed") {
    auto a = generate_synthetic_corpus(small_cfg());
    auto b = generate_synthetic_corpus(small_cfg());
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].image.max_abs_diff(b[i].image) == 0.0);
        CHECK(a[i].mask.max_abs_diff(b[i].mask) == 0.0);
        CHECK(a[i].labeled);

        int64_t fg = 0;
        for (int64_t k = 0; k < a[i].mask.numel(); ++k) {
            const double v = a[i].mask.data()[k];
            CHECK((v == 0.0 || v == 1.0));
            fg += v == 1.0;
        }
        CHECK(fg > 0);  // masks never empty
        for (int64_t k = 0; k < a[i].image.numel(); ++k) {
            CHECK(a[i].image.data()[k] >= 0.0);
            CHECK(a[i].image.data()[k] <= 1.0);
        }
    }
    auto c = generate_synthetic_corpus(small_cfg(12, 8));
    CHECK(a[0].image.max_abs_diff(c[0].image) > 0.0);  // seed matters
}

TEST_CASE("foreground fraction stays in the expected band") {
    auto cfg = small_cfg(200, 21);
    cfg.image_size = 64;
    auto corpus = generate_synthetic_corpus(cfg);
    double frac = 0.0;
    for (const auto& s : corpus) {
        int64_t fg = 0;
        for (int64_t k = 0; k < s.mask.numel(); ++k) fg += s.mask.data()[k] == 1.0;
        frac += double(fg) / double(s.mask.numel());
    }
    frac /= double(corpus.size());
    CHECK(frac > 0.05);
    CHECK(frac < 0.40);
}

TEST_CASE("config validation") {
    auto cfg = small_cfg();
    cfg.image_size = 60;  // not divisible by 8
    CHECK_THROWS_AS((void)generate_synthetic_corpus(cfg), ConfigError);
    cfg = small_cfg(0);
    CHECK_THROWS_AS((void)generate_synthetic_corpus(cfg), ConfigError);
    cfg = small_cfg();
    cfg.texture = "paisley";
    CHECK_THROWS_AS((void)generate_synthetic_corpus(cfg), ConfigError);
}

TEST_CASE("save and load round-trip through png files") {
    TempDir dir;
    auto corpus = generate_synthetic_corpus(small_cfg(3));
    corpus[2].mask = Tensor();  // make one sample unlabeled on disk
    corpus[2].labeled = false;
    save_corpus(corpus, dir.path.string());

    auto loaded = load_corpus(dir.path.string());
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].labeled);
    CHECK(loaded[1].labeled);
    CHECK_FALSE(loaded[2].labeled);
    CHECK_FALSE(loaded[2].mask.defined());

    CHECK(loaded[0].mask.max_abs_diff(corpus[0].mask) == 0.0);
    // images go through 8-bit quantization: half a step of tolerance
    CHECK(loaded[0].image.max_abs_diff(corpus[0].image) < 0.51 / 255.0);
}

TEST_CASE("loader rejects bad masks") {
    TempDir dir;
    auto corpus = generate_synthetic_corpus(small_cfg(1));
    save_corpus(corpus, dir.path.string());

    // mask with an out-of-range class id
    ImageU8 bad;
    bad.width = 32;
    bad.height = 32;
    bad.channels = 1;
    bad.pixels.assign(32 * 32, 7);
    write_png((dir.path / "masks" / (corpus[0].id + ".png")).string(), bad);
    CHECK_THROWS_AS((void)load_corpus(dir.path.string(), 2), IngestError);

    // mask sized differently from its image
    ImageU8 wrong;
    wrong.width = 16;
    wrong.height = 16;
    wrong.channels = 1;
    wrong.pixels.assign(16 * 16, 1);
    write_png((dir.path / "masks" / (corpus[0].id + ".png")).string(), wrong);
    CHECK_THROWS_AS((void)load_corpus(dir.path.string(), 2), IngestError);
}

TEST_CASE("semi split fractions, stripping, determinism") {
    auto corpus = generate_synthetic_corpus(small_cfg(100, 3));
    SemiSplit s = semi_split(corpus, 0.1, 5);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 20);
    CHECK(s.labeled.size() == 7);  // round(0.1 * 70)
    CHECK(s.unlabeled.size() == 63);
    for (const auto& u : s.unlabeled) {
        CHECK_FALSE(u.mask.defined());
        CHECK_FALSE(u.labeled);
    }
    for (const auto& l : s.labeled) CHECK(l.mask.defined());

    SemiSplit s2 = semi_split(corpus, 0.1, 5);
    for (std::size_t i = 0; i < s.labeled.size(); ++i) CHECK(s.labeled[i].id == s2.labeled[i].id);
    for (std::size_t i = 0; i < s.val.size(); ++i) CHECK(s.val[i].id == s2.val[i].id);

    // no sample appears in two partitions
    std::set<std::string> ids;
    for (const auto* part : {&s.labeled, &s.unlabeled, &s.val, &s.test})
        for (const auto& sample : *part) CHECK(ids.insert(sample.id).second);
    CHECK(ids.size() == 100);

    SemiSplit full = semi_split(corpus, 1.0, 5);
    CHECK(full.unlabeled.empty());
    CHECK(full.labeled.size() == 70);

    CHECK_THROWS_AS((void)semi_split(corpus, 0.001, 5), ConfigError);
    CHECK_THROWS_AS((void)semi_split(corpus, 0.0, 5), ConfigError);
    CHECK_THROWS_AS((void)semi_split(corpus, 1.5, 5), ConfigError);
}

TEST_CASE("batch iterator composition and statelessness") {
    auto corpus = generate_synthetic_corpus(small_cfg(100, 3));
    SemiSplit s = semi_split(corpus, 0.1, 5);  // 7 labeled, 63 unlabeled
    BatchIterator it(s, 2, 2, 99);
    CHECK(it.batches_per_epoch() == 4);  // ceil(7/2)

    Batch b0 = it.batch(0);
    REQUIRE(b0.labeled.size() == 2);
    REQUIRE(b0.unlabeled.size() == 2);
    for (const auto* x : b0.labeled) CHECK(x->mask.defined());
    for (const auto* x : b0.unlabeled) CHECK_FALSE(x->mask.defined());

    // the first labeled epoch (7 slots) covers every labeled sample once
    std::multiset<std::string> seen;
    for (int64_t t = 0; t < 4; ++t) {
        Batch b = it.batch(t);
        for (const auto* x : b.labeled) seen.insert(x->id);
    }
    CHECK(seen.size() == 8);
    std::set<std::string> unique(seen.begin(), seen.end());
    CHECK(unique.size() == 7);  // one wrap-around duplicate

    // pure in t: evaluation order cannot matter
    Batch b5 = it.batch(5);
    Batch b0_again = it.batch(0);
    for (std::size_t i = 0; i < 2; ++i) CHECK(b0.labeled[i]->id == b0_again.labeled[i]->id);
    BatchIterator it2(s, 2, 2, 99);
    Batch b5_again = it2.batch(5);
    for (std::size_t i = 0; i < 2; ++i) CHECK(b5.labeled[i]->id == b5_again.labeled[i]->id);

    BatchIterator sup_only(s, 2, 0, 99);
    CHECK(sup_only.batch(0).unlabeled.empty());

    SemiSplit all_labeled = semi_split(corpus, 1.0, 5);
    CHECK_THROWS_AS(BatchIterator(all_labeled, 2, 2, 99), ConfigError);
    SemiSplit none;
    none.labeled.clear();
    CHECK_THROWS_AS(BatchIterator(none, 2, 2, 99), ConfigError);
}
