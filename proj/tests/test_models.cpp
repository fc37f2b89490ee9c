#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "semigda/adapters.hpp"
#include "semigda/common.hpp"
#include "semigda/dataset.hpp"
#include "semigda/encoder.hpp"
#include "semigda/mapping.hpp"
#include "semigda/nn.hpp"
#include "semigda/vae.hpp"

using namespace semigda;

namespace {

// small widths keep the unit tests quick; training uses the defaults
VaeConfig small_vae() {
    VaeConfig c;
    c.stem_channels = 8;
    c.stage_channels = {12, 16, 24};
    return c;
}

ResEncoderConfig small_res() {
    ResEncoderConfig c;
    c.stem_channels = 8;
    c.stage_channels = {12, 20, 28};
    return c;
}

Tensor random_image(Rng& rng, int64_t n, int64_t h, int64_t w) {
    return Tensor::uniform({n, 3, h, w}, rng, -1.0, 1.0);
}

FeatureBank zero_bank_like(const VaeBackbone& vae, int64_t n, int64_t h, int64_t w) {
    FeatureBank bank;
    for (int i = 0; i < vae.config().num_levels(); ++i)
        bank.levels.push_back(ad::make_leaf(Tensor::zeros(vae.injection_shape(i, n, h, w)), false));
    return bank;
}

}  // namespace

TEST_CASE("generative backbone: encode shapes, feature bank, determinism") {
    Rng rng(7);
    VaeBackbone vae(small_vae(), rng);
    Tensor x = random_image(rng, 2, 32, 32);

    nn::Session s;
    FeatureBank bank;
    LatentGaussian z = vae.encode(s, ad::make_leaf(x, false), &bank);
    CHECK(z.mean->value.shape() == std::vector<int64_t>{2, 4, 4, 4});
    CHECK(z.log_std->value.shape() == std::vector<int64_t>{2, 4, 4, 4});

    REQUIRE(bank.levels.size() == 3);
    CHECK(bank.levels[0]->value.shape() == std::vector<int64_t>{2, 12, 16, 16});
    CHECK(bank.levels[1]->value.shape() == std::vector<int64_t>{2, 16, 8, 8});
    CHECK(bank.levels[2]->value.shape() == std::vector<int64_t>{2, 24, 4, 4});
    for (std::size_t i = 1; i < bank.levels.size(); ++i)
        CHECK(bank.levels[i]->value.dim(2) < bank.levels[i - 1]->value.dim(2));

    // purity: a second pass over the same input gives identical numbers
    nn::Session s2;
    LatentGaussian z2 = vae.encode(s2, ad::make_leaf(x, false), nullptr);
    CHECK(z.mean->value.max_abs_diff(z2.mean->value) == 0.0);
    CHECK(z.log_std->value.max_abs_diff(z2.log_std->value) == 0.0);

    // log_std respects the clamp
    for (int64_t i = 0; i < z.log_std->value.numel(); ++i) {
        CHECK(z.log_std->value.data()[i] >= -10.0);
        CHECK(z.log_std->value.data()[i] <= 4.0);
    }

    nn::Session s3;
    CHECK_THROWS_AS((void)vae.encode(s3, ad::make_leaf(Tensor::zeros({1, 3, 30, 30}), false)),
                    ShapeError);
    CHECK_THROWS_AS((void)vae.encode(s3, ad::make_leaf(Tensor::zeros({1, 1, 32, 32}), false)),
                    ShapeError);
}

TEST_CASE("generative backbone: decode range, skip identity, shape errors") {
    Rng rng(8);
    VaeBackbone vae(small_vae(), rng);
    Tensor zt = Tensor::uniform({2, 4, 4, 4}, rng, -2.0, 2.0);

    nn::Session s;
    ad::Var plain = vae.decode(s, ad::make_leaf(zt, false), nullptr);
    CHECK(plain->value.shape() == std::vector<int64_t>{2, 1, 32, 32});
    for (int64_t i = 0; i < plain->value.numel(); ++i) {
        CHECK(plain->value.data()[i] <= 1.0);
        CHECK(plain->value.data()[i] >= -1.0);
    }

    // all-zero injected skips change nothing
    FeatureBank zeros = zero_bank_like(vae, 2, 32, 32);
    nn::Session s2;
    ad::Var injected = vae.decode(s2, ad::make_leaf(zt, false), &zeros);
    CHECK(plain->value.max_abs_diff(injected->value) == 0.0);

    // non-square input round-trips through encode->decode
    nn::Session s3;
    Tensor wide = random_image(rng, 1, 32, 64);
    FeatureBank bank;
    LatentGaussian z = vae.encode(s3, ad::make_leaf(wide, false), &bank);
    CHECK(z.mean->value.shape() == std::vector<int64_t>{1, 4, 4, 8});
    ad::Var y = vae.decode(s3, z.mean, nullptr);
    CHECK(y->value.shape() == std::vector<int64_t>{1, 1, 32, 64});

    // a wrong skip shape is rejected and the message names the level
    FeatureBank bad = zero_bank_like(vae, 2, 32, 32);
    bad.levels[1] = ad::make_leaf(Tensor::zeros({2, 16, 4, 4}), false);
    nn::Session s4;
    try {
        (void)vae.decode(s4, ad::make_leaf(zt, false), &bad);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("level 1") != std::string::npos);
    }

    FeatureBank short_bank;
    short_bank.levels.push_back(ad::make_leaf(Tensor::zeros({2, 12, 16, 16}), false));
    nn::Session s5;
    CHECK_THROWS_AS((void)vae.decode(s5, ad::make_leaf(zt, false), &short_bank), ShapeError);
}

TEST_CASE("latent sampling: deterministic mean, reparameterized variance") {
    Rng rng(9);
    LatentGaussian dist;
    dist.mean = ad::make_leaf(Tensor::full({1, 4, 2, 2}, 0.3), false);
    dist.log_std = ad::make_leaf(Tensor::full({1, 4, 2, 2}, std::log(0.5)), false);

    Rng noise(10);
    ad::Var det = sample_latent(dist, true, noise);
    CHECK(det->value.max_abs_diff(dist.mean->value) == 0.0);

    // pooled over 1e4 draws x 16 cells the sample variance lands within 5%
    double sum = 0.0, sum_sq = 0.0;
    const int draws = 10000;
    const int64_t cells = dist.mean->value.numel();
    for (int d = 0; d < draws; ++d) {
        ad::Var s = sample_latent(dist, false, noise);
        for (int64_t i = 0; i < cells; ++i) {
            sum += s->value.data()[i];
            sum_sq += s->value.data()[i] * s->value.data()[i];
        }
    }
    const double n = static_cast<double>(draws) * static_cast<double>(cells);
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));
    CHECK(mean == doctest::Approx(0.3).epsilon(0.05));

    // KL is zero exactly at the standard normal and positive elsewhere
    LatentGaussian std_normal;
    std_normal.mean = ad::make_leaf(Tensor::zeros({1, 4, 2, 2}), false);
    std_normal.log_std = ad::make_leaf(Tensor::zeros({1, 4, 2, 2}), false);
    CHECK(kl_divergence(std_normal)->value.item() == 0.0);
    Rng r2(11);
    for (int trial = 0; trial < 20; ++trial) {
        LatentGaussian g;
        g.mean = ad::make_leaf(Tensor::uniform({1, 4, 2, 2}, r2, -2.0, 2.0), false);
        g.log_std = ad::make_leaf(Tensor::uniform({1, 4, 2, 2}, r2, -3.0, 1.0), false);
        CHECK(kl_divergence(g)->value.item() >= 0.0);
    }
}

TEST_CASE("freezing: digest constant through an optimizer step") {
    Rng rng(12);
    VaeBackbone vae(small_vae(), rng);
    vae.set_trainable(false);
    CHECK(vae.frozen());
    const std::string before = nn::params_digest(vae.params());

    nn::Adam optim(vae.params(), 1e-2);
    nn::Session s;
    Tensor x = random_image(rng, 1, 32, 32);
    LatentGaussian z = vae.encode(s, ad::make_leaf(x, false), nullptr);
    ad::Var y = vae.decode(s, z.mean, nullptr);
    optim.zero_grad();
    s.backward(ad::mean_all(ad::square(y)));
    optim.step();

    CHECK(nn::params_digest(vae.params()) == before);
}

TEST_CASE("pretraining: smoke run, kl sign, divergence guard") {
    Rng rng(13);
    SyntheticConfig cfg;
    cfg.num_samples = 6;
    cfg.image_size = 32;
    cfg.seed = 5;
    std::vector<ImageSample> corpus = generate_synthetic_corpus(cfg);

    VaeBackbone vae(small_vae(), rng);
    PretrainOptions opt;
    opt.epochs = 1;
    opt.batch_size = 4;
    opt.seed = 21;
    PretrainReport rep = pretrain_vae(vae, corpus, opt);
    REQUIRE(rep.recon.size() == 1);
    REQUIRE(rep.kl.size() == 1);
    CHECK(std::isfinite(rep.recon[0]));
    CHECK(rep.kl[0] >= 0.0);

    // poisoned input -> TrainingError, parameters rolled back untouched
    Rng rng2(14);
    VaeBackbone vae2(small_vae(), rng2);
    const std::string before = nn::params_digest(vae2.params());
    std::vector<ImageSample> poisoned = corpus;
    poisoned[0].image = corpus[0].image.clone();  // copies share storage otherwise
    poisoned[0].image.data()[0] = std::nan("");
    PretrainOptions opt2;
    opt2.epochs = 1;
    opt2.batch_size = 16;  // one batch covers everything
    CHECK_THROWS_AS((void)pretrain_vae(vae2, poisoned, opt2), TrainingError);
    CHECK(nn::params_digest(vae2.params()) == before);

    CHECK_THROWS_AS((void)pretrain_vae(vae, {}, opt), ConfigError);
}

TEST_CASE("trainable encoder: latent geometry matches the generative one") {
    Rng rng(15);
    VaeBackbone vae(small_vae(), rng);
    ResEncoder res(small_res(), rng);
    Tensor x = random_image(rng, 2, 32, 32);

    nn::Session s;
    FeatureBank bv, br;
    LatentGaussian zv = vae.encode(s, ad::make_leaf(x, false), &bv);
    LatentGaussian zr = res.encode(s, ad::make_leaf(x, false), &br);
    CHECK(zv.mean->value.shape() == zr.mean->value.shape());
    CHECK(zv.log_std->value.shape() == zr.log_std->value.shape());

    REQUIRE(br.levels.size() == 3);
    CHECK(br.levels[0]->value.shape() == std::vector<int64_t>{2, 12, 16, 16});
    CHECK(br.levels[1]->value.shape() == std::vector<int64_t>{2, 20, 8, 8});
    CHECK(br.levels[2]->value.shape() == std::vector<int64_t>{2, 28, 4, 4});

    for (int64_t i = 0; i < zr.log_std->value.numel(); ++i) {
        CHECK(zr.log_std->value.data()[i] >= -10.0);
        CHECK(zr.log_std->value.data()[i] <= 4.0);
    }

    // the two encoders are structurally different by construction
    CHECK(vae.architecture() != res.architecture());
    CHECK(vae.architecture().find("residual-blocks=0") != std::string::npos);
    CHECK(res.architecture().find("residual-blocks=6") != std::string::npos);

    nn::Session s2;
    CHECK_THROWS_AS((void)res.encode(s2, ad::make_leaf(Tensor::zeros({1, 3, 30, 30}), false)),
                    ShapeError);
}

TEST_CASE("latent mapper: identity at init, shape checks, position sensitivity") {
    Rng rng(16);
    MapperConfig mc;
    mc.grid_h = 4;
    mc.grid_w = 4;
    mc.d_model = 32;
    mc.heads = 4;
    LatentMapper mapper(mc, rng);

    Tensor mean = Tensor::uniform({2, 4, 4, 4}, rng, -1.5, 1.5);
    Tensor log_std = Tensor::uniform({2, 4, 4, 4}, rng, -3.0, 1.0);
    LatentGaussian z{ad::make_leaf(mean, false), ad::make_leaf(log_std, false)};

    nn::Session s;
    LatentGaussian out = mapper.map(s, z);
    CHECK(out.mean->value.shape() == mean.shape());
    CHECK(out.mean->value.max_abs_diff(mean) <= 1e-6);
    CHECK(out.log_std->value.max_abs_diff(log_std) <= 1e-6);

    // same input twice -> same output
    nn::Session s2;
    LatentGaussian out2 = mapper.map(s2, z);
    CHECK(out.mean->value.max_abs_diff(out2.mean->value) == 0.0);

    LatentGaussian bad{ad::make_leaf(Tensor::zeros({2, 4, 8, 8}), false),
                       ad::make_leaf(Tensor::zeros({2, 4, 8, 8}), false)};
    nn::Session s3;
    CHECK_THROWS_AS((void)mapper.map(s3, bad), ShapeError);

    // make the output head non-trivial, then spatial permutation must not
    // commute with the mapper (the positional embeddings break it)
    Rng perturb(17);
    for (nn::Param* p : mapper.params())
        if (p->name == "map.mean.w") {
            Tensor noise = Tensor::randn(p->value.shape(), perturb, 0.5);
            p->value.add_(noise);
        }

    // roll the 16 spatial cells by one position
    auto roll = [](const Tensor& t) {
        Tensor out = t.clone();
        const int64_t n = t.dim(0), c = t.dim(1), hw = t.dim(2) * t.dim(3);
        for (int64_t b = 0; b < n; ++b)
            for (int64_t ch = 0; ch < c; ++ch)
                for (int64_t p = 0; p < hw; ++p)
                    out.data()[(b * c + ch) * hw + (p + 1) % hw] =
                        t.data()[(b * c + ch) * hw + p];
        return out;
    };

    nn::Session s4;
    LatentGaussian mapped = mapper.map(s4, z);
    LatentGaussian rolled{ad::make_leaf(roll(mean), false), ad::make_leaf(roll(log_std), false)};
    nn::Session s5;
    LatentGaussian mapped_rolled = mapper.map(s5, rolled);
    // if the mapper ignored token positions these would coincide
    CHECK(roll(mapped.mean->value).max_abs_diff(mapped_rolled.mean->value) > 1e-4);
}

TEST_CASE("adapters: zero-init identity, gradient routing, role tags") {
    Rng rng(18);
    VaeBackbone vae(small_vae(), rng);
    vae.set_trainable(false);
    ResEncoder res(small_res(), rng);

    std::vector<AdapterLevelSpec> specs;
    for (int i = 0; i < 3; ++i)
        specs.push_back({res.config().stage_channels[i], vae.config().stage_channels[i]});
    AdapterBank mask_adapter(AdapterRole::Mask, "adapt.mask", specs, rng);
    CHECK(mask_adapter.num_levels() == 3);
    CHECK(std::string(adapter_role_name(mask_adapter.role())) == "mask");

    Tensor x = random_image(rng, 1, 32, 32);
    nn::Session s;
    FeatureBank bank;
    LatentGaussian zr = res.encode(s, ad::make_leaf(x, false), &bank);

    FeatureBank adapted = mask_adapter.adapt(s, bank);
    REQUIRE(adapted.levels.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(adapted.levels[i]->value.shape() == vae.injection_shape(i, 1, 32, 32));
        // zero-initialized projection -> contributes nothing yet
        CHECK(adapted.levels[i]->value.max_abs_diff(
                  Tensor::zeros(adapted.levels[i]->value.shape())) == 0.0);
    }

    ad::Var with_skips = decode_branch(s, vae, zr.mean, bank, mask_adapter, AdapterRole::Mask);
    nn::Session s2;
    ad::Var plain = vae.decode(s2, ad::make_leaf(zr.mean->value, false), nullptr);
    CHECK(with_skips->value.max_abs_diff(plain->value) == 0.0);

    // gradients reach the adapters (and the encoder) but not the frozen decoder
    s.backward(ad::mean_all(ad::square(with_skips)));
    bool adapter_grad = false;
    for (nn::Param* p : mask_adapter.params())
        if (p->grad.max_abs_diff(Tensor::zeros(p->grad.shape())) > 0.0) adapter_grad = true;
    CHECK(adapter_grad);
    bool encoder_grad = false;
    for (nn::Param* p : res.params())
        if (p->grad.max_abs_diff(Tensor::zeros(p->grad.shape())) > 0.0) encoder_grad = true;
    CHECK(encoder_grad);
    for (nn::Param* p : vae.params())
        CHECK(p->grad.max_abs_diff(Tensor::zeros(p->grad.shape())) == 0.0);

    // wiring mistakes are loud
    nn::Session s3;
    CHECK_THROWS_AS(
        (void)decode_branch(s3, vae, zr.mean, bank, mask_adapter, AdapterRole::Image),
        ConfigError);

    FeatureBank short_bank;
    short_bank.levels.push_back(bank.levels[0]);
    nn::Session s4;
    CHECK_THROWS_AS((void)mask_adapter.adapt(s4, short_bank), ShapeError);

    FeatureBank wrong_channels = bank;
    wrong_channels.levels[2] = bank.levels[1];
    nn::Session s5;
    try {
        (void)mask_adapter.adapt(s5, wrong_channels);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("level 2") != std::string::npos);
    }
}
