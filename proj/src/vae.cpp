#include "semigda/vae.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "semigda/common.hpp"
#include "semigda/mask_codec.hpp"

namespace semigda {

namespace {

std::string lvl(const std::string& base, int i) {
    return base + "." + std::to_string(i);
}

}  // namespace

ad::Var VaeBackbone::ResBlock::forward(nn::Session& s, const ad::Var& x) {
    ad::Var h = conv1.forward(s, ad::silu(gn1.forward(s, x)));
    h = conv2.forward(s, ad::silu(gn2.forward(s, h)));
    return ad::add(x, h);
}

void VaeBackbone::ResBlock::collect(std::vector<nn::Param*>& out) {
    gn1.collect(out);
    conv1.collect(out);
    gn2.collect(out);
    conv2.collect(out);
}

VaeBackbone::VaeBackbone(VaeConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    if (cfg_.stage_channels.empty()) throw ConfigError("vae: need at least one stage");
    const int g = cfg_.groups;

    stem_ = nn::Conv2d("vae.enc.stem", cfg_.in_channels, cfg_.stem_channels, 3, 1, 1, rng);
    stem_gn_ = nn::GroupNorm("vae.enc.stem_gn", cfg_.stem_channels, g);

    int prev = cfg_.stem_channels;
    for (std::size_t i = 0; i < cfg_.stage_channels.size(); ++i) {
        const int c = cfg_.stage_channels[i];
        DownStage st;
        st.down = nn::Conv2d(lvl("vae.enc.down", static_cast<int>(i)), prev, c, 3, 2, 1, rng);
        st.gn1 = nn::GroupNorm(lvl("vae.enc.gn1", static_cast<int>(i)), c, g);
        st.conv = nn::Conv2d(lvl("vae.enc.conv", static_cast<int>(i)), c, c, 3, 1, 1, rng);
        st.gn2 = nn::GroupNorm(lvl("vae.enc.gn2", static_cast<int>(i)), c, g);
        downs_.push_back(std::move(st));
        prev = c;
    }
    mean_head_ = nn::Conv2d("vae.enc.mean", prev, cfg_.latent_channels, 1, 1, 0, rng);
    log_std_head_ = nn::Conv2d("vae.enc.log_std", prev, cfg_.latent_channels, 1, 1, 0, rng);

    dec_in_ = nn::Conv2d("vae.dec.in", cfg_.latent_channels, prev, 3, 1, 1, rng);
    for (int i = static_cast<int>(cfg_.stage_channels.size()) - 1; i >= 0; --i) {
        const int c = cfg_.stage_channels[i];
        const int next = i > 0 ? cfg_.stage_channels[i - 1] : cfg_.stem_channels;
        UpStage up;
        up.block.gn1 = nn::GroupNorm(lvl("vae.dec.gn1", i), c, g);
        up.block.conv1 = nn::Conv2d(lvl("vae.dec.conv1", i), c, c, 3, 1, 1, rng);
        up.block.gn2 = nn::GroupNorm(lvl("vae.dec.gn2", i), c, g);
        up.block.conv2 = nn::Conv2d(lvl("vae.dec.conv2", i), c, c, 3, 1, 1, rng);
        up.shrink = nn::Conv2d(lvl("vae.dec.up", i), c, next, 3, 1, 1, rng);
        ups_.push_back(std::move(up));
    }
    out_gn_ = nn::GroupNorm("vae.dec.out_gn", cfg_.stem_channels, g);
    out_conv_ = nn::Conv2d("vae.dec.out", cfg_.stem_channels, 1, 3, 1, 1, rng);
}

LatentGaussian VaeBackbone::encode(nn::Session& s, const ad::Var& x, FeatureBank* bank) {
    const Tensor& v = x->value;
    if (v.ndim() != 4 || v.dim(1) != cfg_.in_channels)
        throw ShapeError("vae_encode: expected (N," + std::to_string(cfg_.in_channels) +
                         ",H,W), got " + v.shape_str());
    const int f = cfg_.downsample_factor();
    if (v.dim(2) % f != 0 || v.dim(3) % f != 0)
        throw ShapeError("vae_encode: spatial dims of " + v.shape_str() +
                         " not divisible by downsample factor " + std::to_string(f));

    ad::Var h = ad::silu(stem_gn_.forward(s, stem_.forward(s, x)));
    if (bank) bank->levels.clear();
    for (auto& st : downs_) {
        h = ad::silu(st.gn1.forward(s, st.down.forward(s, h)));
        h = ad::silu(st.gn2.forward(s, st.conv.forward(s, h)));
        if (bank) bank->levels.push_back(h);
    }
    LatentGaussian out;
    out.mean = mean_head_.forward(s, h);
    out.log_std = ad::clamp(log_std_head_.forward(s, h), kLogStdLo, kLogStdHi);
    return out;
}

std::vector<int64_t> VaeBackbone::injection_shape(int level, int64_t n, int64_t h,
                                                  int64_t w) const {
    if (level < 0 || level >= cfg_.num_levels())
        throw ConfigError("vae: no injection level " + std::to_string(level));
    const int64_t scale = int64_t{1} << (level + 1);
    return {n, cfg_.stage_channels[level], h / scale, w / scale};
}

ad::Var VaeBackbone::decode(nn::Session& s, const ad::Var& z, const FeatureBank* skips) {
    const Tensor& v = z->value;
    if (v.ndim() != 4 || v.dim(1) != cfg_.latent_channels)
        throw ShapeError("vae_decode: expected (N," + std::to_string(cfg_.latent_channels) +
                         ",Hz,Wz), got " + v.shape_str());
    const int levels = cfg_.num_levels();
    if (skips && static_cast<int>(skips->levels.size()) != levels)
        throw ShapeError("vae_decode: skip bank has " + std::to_string(skips->levels.size()) +
                         " levels, decoder expects " + std::to_string(levels));
    const int64_t n = v.dim(0);
    const int64_t h_out = v.dim(2) * cfg_.downsample_factor();
    const int64_t w_out = v.dim(3) * cfg_.downsample_factor();

    ad::Var h = dec_in_.forward(s, z);
    for (int i = levels - 1; i >= 0; --i) {
        if (skips) {
            const ad::Var& skip = skips->levels[i];
            const auto want = injection_shape(i, n, h_out, w_out);
            if (skip->value.shape() != want)
                throw ShapeError("vae_decode: skip level " + std::to_string(i) + " has shape " +
                                 skip->value.shape_str() + ", expected (" + std::to_string(want[0]) +
                                 "," + std::to_string(want[1]) + "," + std::to_string(want[2]) +
                                 "," + std::to_string(want[3]) + ")");
            h = ad::add(h, skip);
        }
        UpStage& up = ups_[static_cast<std::size_t>(levels - 1 - i)];
        h = up.block.forward(s, h);
        h = up.shrink.forward(s, ad::upsample_nearest2(h));
    }
    h = ad::silu(out_gn_.forward(s, h));
    return ad::tanh_op(out_conv_.forward(s, h));
}

void VaeBackbone::collect(std::vector<nn::Param*>& out) {
    stem_.collect(out);
    stem_gn_.collect(out);
    for (auto& st : downs_) {
        st.down.collect(out);
        st.gn1.collect(out);
        st.conv.collect(out);
        st.gn2.collect(out);
    }
    mean_head_.collect(out);
    log_std_head_.collect(out);
    dec_in_.collect(out);
    for (auto& up : ups_) {
        up.block.collect(out);
        up.shrink.collect(out);
    }
    out_gn_.collect(out);
    out_conv_.collect(out);
}

std::vector<nn::Param*> VaeBackbone::params() {
    std::vector<nn::Param*> out;
    collect(out);
    return out;
}

void VaeBackbone::set_trainable(bool trainable) {
    for (nn::Param* p : params()) p->trainable = trainable;
    frozen_ = !trainable;
}

std::string VaeBackbone::architecture() const {
    std::ostringstream os;
    os << "vae-encoder: plain-down stages=" << cfg_.num_levels() << " residual-blocks=0"
       << " channels=" << cfg_.stem_channels;
    for (int c : cfg_.stage_channels) os << "-" << c;
    os << " latent=" << cfg_.latent_channels << " f=" << cfg_.downsample_factor();
    return os.str();
}

ad::Var sample_latent(const LatentGaussian& dist, bool deterministic, Rng& rng) {
    if (deterministic) return dist.mean;
    Tensor eps = Tensor::randn(dist.mean->value.shape(), rng);
    return ad::add(dist.mean, ad::mul(ad::exp_op(dist.log_std), ad::make_leaf(eps, false)));
}

ad::Var kl_divergence(const LatentGaussian& dist) {
    ad::Var var = ad::exp_op(ad::mul_scalar(dist.log_std, 2.0));
    ad::Var inner = ad::add(ad::square(dist.mean), var);
    inner = ad::sub(inner, ad::mul_scalar(dist.log_std, 2.0));
    return ad::mul_scalar(ad::mean_all(ad::add_scalar(inner, -1.0)), 0.5);
}

namespace {

struct PretrainItem {
    Tensor input;   // (3, H, W) in [-1,1]
    Tensor target;  // (1, H, W) in [-1,1]
};

Tensor stack_batch(const std::vector<PretrainItem>& items, const std::vector<int64_t>& idx,
                   std::size_t begin, std::size_t end, bool input) {
    const Tensor& first = input ? items[0].input : items[0].target;
    const int64_t c = first.dim(0), h = first.dim(1), w = first.dim(2);
    const int64_t n = static_cast<int64_t>(end - begin);
    Tensor out({n, c, h, w});
    const int64_t per = c * h * w;
    for (int64_t i = 0; i < n; ++i) {
        const Tensor& src =
            input ? items[idx[begin + i]].input : items[idx[begin + i]].target;
        for (int64_t j = 0; j < per; ++j) out.data()[i * per + j] = src.data()[j];
    }
    return out;
}

std::vector<Tensor> snapshot(const std::vector<nn::Param*>& ps) {
    std::vector<Tensor> out;
    out.reserve(ps.size());
    for (auto* p : ps) out.push_back(p->value.clone());
    return out;
}

void restore(const std::vector<nn::Param*>& ps, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
        ps[i]->value.zero_();
        ps[i]->value.add_(snap[i]);
    }
}

}  // namespace

PretrainReport pretrain_vae(VaeBackbone& vae, const std::vector<ImageSample>& corpus,
                            const PretrainOptions& opt) {
    if (corpus.empty()) throw ConfigError("pretrain_vae: empty corpus");
    if (opt.epochs < 1) throw ConfigError("pretrain_vae: epochs must be >= 1");
    if (opt.batch_size < 1) throw ConfigError("pretrain_vae: batch_size must be >= 1");

    // Build the reconstruction set: every image (target = channel mean, since
    // the decoder emits one channel) plus every available converted mask.
    std::vector<PretrainItem> items;
    for (const auto& s : corpus) {
        const int64_t h = s.image.dim(1), w = s.image.dim(2);
        PretrainItem it;
        it.input = Tensor(std::vector<int64_t>{3, h, w});
        it.target = Tensor(std::vector<int64_t>{1, h, w});
        for (int64_t p = 0; p < h * w; ++p) {
            double m = 0.0;
            for (int64_t c = 0; c < 3; ++c) {
                const double v = s.image.data()[c * h * w + p] * 2.0 - 1.0;
                it.input.data()[c * h * w + p] = v;
                m += v;
            }
            it.target.data()[p] = m / 3.0;
        }
        items.push_back(std::move(it));
        if (s.mask.defined()) {
            Tensor cont = mask_to_continuous(s.mask, opt.num_classes);
            Tensor cont1 = cont.reshaped({1, 1, h, w});
            PretrainItem mt;
            mt.input = replicate3(cont1).reshaped({3, h, w});
            mt.target = cont.reshaped({1, h, w});
            items.push_back(std::move(mt));
        }
    }

    auto ps = vae.params();
    nn::Adam optim(ps, opt.lr);
    Rng order_rng(mix_seed(opt.seed, 0x7e11a9d5ULL));
    Rng latent_rng(mix_seed(opt.seed, 0x3b94cc02ULL));

    PretrainReport report;
    std::vector<Tensor> last_good = snapshot(ps);
    const int64_t n_items = static_cast<int64_t>(items.size());

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::vector<int64_t> idx = order_rng.permutation(n_items);
        double recon_sum = 0.0, kl_sum = 0.0;
        int64_t batches = 0;
        for (std::size_t pos = 0; pos < items.size(); pos += opt.batch_size) {
            const std::size_t end = std::min(items.size(), pos + opt.batch_size);
            Tensor xb = stack_batch(items, idx, pos, end, true);
            Tensor yb = stack_batch(items, idx, pos, end, false);

            nn::Session sess;
            FeatureBank bank;
            LatentGaussian dist = vae.encode(sess, ad::make_leaf(xb, false), &bank);
            ad::Var z = sample_latent(dist, false, latent_rng);
            ad::Var recon = vae.decode(sess, z, nullptr);
            ad::Var recon_loss = ad::mse(recon, ad::make_leaf(yb, false));
            ad::Var kl = kl_divergence(dist);
            ad::Var loss = ad::add(recon_loss, ad::mul_scalar(kl, opt.kl_weight));

            const double lv = loss->value.item();
            if (!std::isfinite(lv)) {
                restore(ps, last_good);
                throw TrainingError("pretrain_vae: non-finite loss at epoch " +
                                    std::to_string(epoch) + " (parameters restored to last " +
                                    "finite epoch)");
            }
            optim.zero_grad();
            sess.backward(loss);
            optim.step();

            recon_sum += recon_loss->value.item();
            kl_sum += kl->value.item();
            ++batches;
        }
        report.recon.push_back(recon_sum / static_cast<double>(batches));
        report.kl.push_back(kl_sum / static_cast<double>(batches));
        last_good = snapshot(ps);
    }
    return report;
}

}  // namespace semigda
