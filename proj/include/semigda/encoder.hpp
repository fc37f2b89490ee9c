#pragma once

#include <string>
#include <vector>

#include "semigda/nn.hpp"
#include "semigda/rng.hpp"
#include "semigda/vae.hpp"

namespace semigda {

struct ResEncoderConfig {
    int in_channels = 3;
    int latent_channels = 4;
    int stem_channels = 16;
    std::vector<int> stage_channels{20, 28, 40};  // one entry per 2x downsample
    int blocks_per_stage = 2;
    int groups = 4;

    int downsample_factor() const { return 1 << static_cast<int>(stage_channels.size()); }
    int num_levels() const { return static_cast<int>(stage_channels.size()); }
};

// Trainable residual encoder producing a latent Gaussian with the same grid
// geometry as the generative backbone, plus a multi-scale feature bank. Built
// from residual blocks on purpose: it must be structurally unlike the plain
// down-convolution encoder it is trained to agree with.
class ResEncoder {
public:
    ResEncoder(ResEncoderConfig cfg, Rng& rng);

    // x: (N, 3, H, W) in [-1,1]; bank receives one feature map per stage.
    LatentGaussian encode(nn::Session& s, const ad::Var& x, FeatureBank* bank = nullptr);

    void collect(std::vector<nn::Param*>& out);
    std::vector<nn::Param*> params();
    const ResEncoderConfig& config() const { return cfg_; }
    std::string architecture() const;

private:
    struct Block {
        nn::GroupNorm gn1;
        nn::Conv2d conv1;
        nn::GroupNorm gn2;
        nn::Conv2d conv2;
    };
    struct Stage {
        nn::Conv2d down;  // stride-2
        nn::GroupNorm down_gn;
        std::vector<Block> blocks;
    };

    ResEncoderConfig cfg_;
    nn::Conv2d stem_;
    nn::GroupNorm stem_gn_;
    std::vector<Stage> stages_;
    nn::Conv2d mean_head_, log_std_head_;
};

}  // namespace semigda
