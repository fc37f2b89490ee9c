#pragma once

#include <string>
#include <vector>

#include "semigda/nn.hpp"
#include "semigda/rng.hpp"
#include "semigda/vae.hpp"

namespace semigda {

struct MapperConfig {
    int latent_channels = 4;
    int grid_h = 8;
    int grid_w = 8;
    int d_model = 128;
    int blocks = 2;
    int heads = 4;
    int mlp_ratio = 2;

    int tokens() const { return grid_h * grid_w; }
};

// Translates an image-derived latent Gaussian towards the mask manifold with
// a small pre-norm transformer over the H_z*W_z latent grid tokens. The
// output heads are zero-initialized and added residually to the input, so a
// freshly constructed mapper is the identity map; training then learns the
// correction. The attention path reads the mean grid; log_std is carried
// through its own residual correction and re-clamped.
class LatentMapper {
public:
    LatentMapper(MapperConfig cfg, Rng& rng);

    LatentGaussian map(nn::Session& s, const LatentGaussian& z);

    void collect(std::vector<nn::Param*>& out);
    std::vector<nn::Param*> params();
    const MapperConfig& config() const { return cfg_; }

private:
    struct Block {
        nn::LayerNorm ln1;
        nn::Linear q, k, v, proj;
        nn::LayerNorm ln2;
        nn::Linear fc1, fc2;
    };

    ad::Var tokens_from_grid(const ad::Var& grid) const;       // (N,C,H,W) -> (N*T, C)
    ad::Var grid_from_tokens(const ad::Var& tok, int64_t n) const;  // (N*T, C) -> (N,C,H,W)

    MapperConfig cfg_;
    nn::Linear embed_;
    nn::Param pos_;  // (T * d_model) positional embedding, added per sample
    std::vector<Block> blocks_;
    nn::LayerNorm final_ln_;
    nn::Linear mean_head_, log_std_head_;  // zero-initialized residual heads
};

}  // namespace semigda
