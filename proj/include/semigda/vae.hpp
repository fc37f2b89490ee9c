#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semigda/dataset.hpp"
#include "semigda/nn.hpp"
#include "semigda/rng.hpp"

namespace semigda {

// Gaussian over a latent grid; both fields are (N, C_z, H_z, W_z) graph nodes.
struct LatentGaussian {
    ad::Var mean;
    ad::Var log_std;
};

// Multi-scale features harvested at the encoder's downsampling points,
// ordered shallow-to-deep (resolutions strictly decreasing).
struct FeatureBank {
    std::vector<ad::Var> levels;
};

constexpr double kLogStdLo = -10.0;
constexpr double kLogStdHi = 4.0;

struct VaeConfig {
    int in_channels = 3;
    int latent_channels = 4;
    int stem_channels = 16;
    std::vector<int> stage_channels{24, 32, 48};  // one entry per 2x downsample
    int groups = 4;

    int downsample_factor() const { return 1 << static_cast<int>(stage_channels.size()); }
    int num_levels() const { return static_cast<int>(stage_channels.size()); }
};

// Small convolutional VAE. Pretrained on the synthetic corpus, then frozen;
// the decoder emits a single channel squashed to [-1,1] so its outputs live
// in the continuous mask value space. Skip features from a bank are injected
// into the decoder by addition, so an all-zero bank reproduces plain decoding.
class VaeBackbone {
public:
    VaeBackbone(VaeConfig cfg, Rng& rng);

    // x: (N, 3, H, W) in [-1,1], H and W divisible by the downsample factor.
    // When `bank` is non-null it receives one feature map per stage.
    LatentGaussian encode(nn::Session& s, const ad::Var& x, FeatureBank* bank = nullptr);

    // z: (N, C_z, H_z, W_z). `skips` may be null (no injection); otherwise its
    // levels must match the decoder's injection shapes exactly.
    ad::Var decode(nn::Session& s, const ad::Var& z, const FeatureBank* skips = nullptr);

    // Shape of the skip expected at level i for an (H, W) input.
    std::vector<int64_t> injection_shape(int level, int64_t n, int64_t h, int64_t w) const;

    void collect(std::vector<nn::Param*>& out);
    std::vector<nn::Param*> params();
    void set_trainable(bool trainable);
    bool frozen() const { return frozen_; }
    const VaeConfig& config() const { return cfg_; }
    std::string architecture() const;

private:
    struct DownStage {
        nn::Conv2d down;  // stride-2
        nn::GroupNorm gn1;
        nn::Conv2d conv;  // stride-1
        nn::GroupNorm gn2;
    };
    struct ResBlock {
        nn::GroupNorm gn1;
        nn::Conv2d conv1;
        nn::GroupNorm gn2;
        nn::Conv2d conv2;
        ad::Var forward(nn::Session& s, const ad::Var& x);
        void collect(std::vector<nn::Param*>& out);
    };
    struct UpStage {
        ResBlock block;      // at the injected resolution
        nn::Conv2d shrink;   // 3x3 after nearest-neighbour upsample
    };

    VaeConfig cfg_;
    bool frozen_ = false;

    nn::Conv2d stem_;
    nn::GroupNorm stem_gn_;
    std::vector<DownStage> downs_;
    nn::Conv2d mean_head_, log_std_head_;

    nn::Conv2d dec_in_;
    std::vector<UpStage> ups_;  // ordered deep-to-shallow
    nn::GroupNorm out_gn_;
    nn::Conv2d out_conv_;
};

// deterministic=true returns the mean; otherwise mean + exp(log_std) * eps
// with eps drawn from `rng`. The noise enters the graph as a constant leaf.
ad::Var sample_latent(const LatentGaussian& dist, bool deterministic, Rng& rng);

// 0.5 * mean(mu^2 + sigma^2 - 1 - 2*log_sigma); non-negative by construction.
ad::Var kl_divergence(const LatentGaussian& dist);

struct PretrainOptions {
    int epochs = 40;
    double lr = 2e-3;
    double kl_weight = 1e-4;
    int batch_size = 8;
    std::uint64_t seed = 0;
    int num_classes = 2;
};

struct PretrainReport {
    std::vector<double> recon;  // per-epoch mean reconstruction MSE
    std::vector<double> kl;     // per-epoch mean KL
};

// Trains reconstruction + kl_weight * KL on the corpus images and, for every
// labeled sample, on its converted mask (replicated to 3 channels) so the
// decoder's output manifold covers mask-like images. Images reconstruct their
// channel mean since the decoder is single-channel. Throws TrainingError on a
// non-finite loss after restoring the last finite epoch's parameters.
PretrainReport pretrain_vae(VaeBackbone& vae, const std::vector<ImageSample>& corpus,
                            const PretrainOptions& opt);

}  // namespace semigda
