#include "semigda/mapping.hpp"

#include <cmath>
#include <utility>

#include "semigda/common.hpp"

namespace semigda {

LatentMapper::LatentMapper(MapperConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    if (cfg_.d_model % cfg_.heads != 0)
        throw ConfigError("mapper: d_model must be divisible by heads");
    const int d = cfg_.d_model;

    embed_ = nn::Linear("map.embed", cfg_.latent_channels, d, rng);
    pos_ = nn::make_param("map.pos",
                          Tensor::randn({static_cast<int64_t>(cfg_.tokens()) * d}, rng, 0.02));
    for (int i = 0; i < cfg_.blocks; ++i) {
        const std::string base = "map.b" + std::to_string(i);
        Block b;
        b.ln1 = nn::LayerNorm(base + ".ln1", d);
        b.q = nn::Linear(base + ".q", d, d, rng);
        b.k = nn::Linear(base + ".k", d, d, rng);
        b.v = nn::Linear(base + ".v", d, d, rng);
        b.proj = nn::Linear(base + ".proj", d, d, rng);
        b.ln2 = nn::LayerNorm(base + ".ln2", d);
        b.fc1 = nn::Linear(base + ".fc1", d, d * cfg_.mlp_ratio, rng);
        b.fc2 = nn::Linear(base + ".fc2", d * cfg_.mlp_ratio, d, rng);
        blocks_.push_back(std::move(b));
    }
    final_ln_ = nn::LayerNorm("map.final_ln", d);
    mean_head_ = nn::Linear("map.mean", d, cfg_.latent_channels, rng, true, nn::Init::Zero);
    log_std_head_ =
        nn::Linear("map.log_std", d, cfg_.latent_channels, rng, true, nn::Init::Zero);
}

ad::Var LatentMapper::tokens_from_grid(const ad::Var& grid) const {
    const int64_t n = grid->value.dim(0);
    const int64_t c = cfg_.latent_channels, t = cfg_.tokens();
    ad::Var x = ad::reshape(grid, {n, c, t, 1});
    x = ad::permute_0213(x);  // (N, T, C, 1)
    return ad::reshape(x, {n * t, c});
}

ad::Var LatentMapper::grid_from_tokens(const ad::Var& tok, int64_t n) const {
    const int64_t c = cfg_.latent_channels, t = cfg_.tokens();
    ad::Var x = ad::reshape(tok, {n, t, c, 1});
    x = ad::permute_0213(x);  // (N, C, T, 1)
    return ad::reshape(x, {n, c, cfg_.grid_h, cfg_.grid_w});
}

LatentGaussian LatentMapper::map(nn::Session& s, const LatentGaussian& z) {
    const Tensor& mv = z.mean->value;
    if (mv.ndim() != 4 || mv.dim(1) != cfg_.latent_channels || mv.dim(2) != cfg_.grid_h ||
        mv.dim(3) != cfg_.grid_w)
        throw ShapeError("mapper: latent shape " + mv.shape_str() + " does not match (N," +
                         std::to_string(cfg_.latent_channels) + "," +
                         std::to_string(cfg_.grid_h) + "," + std::to_string(cfg_.grid_w) + ")");
    check_same_shape(z.mean->value, z.log_std->value, "mapper latent");

    const int64_t n = mv.dim(0);
    const int64_t t = cfg_.tokens();
    const int64_t d = cfg_.d_model;
    const int64_t heads = cfg_.heads;
    const int64_t dh = d / heads;

    ad::Var x = embed_.forward(s, tokens_from_grid(z.mean));  // (N*T, d)
    x = ad::reshape(x, {n, t * d});
    x = ad::add_bias_row(x, s.use(pos_));
    x = ad::reshape(x, {n * t, d});

    auto split_heads = [&](const ad::Var& v) {
        return ad::reshape(ad::permute_0213(ad::reshape(v, {n, t, heads, dh})),
                           {n * heads, t, dh});
    };

    for (auto& b : blocks_) {
        ad::Var h = b.ln1.forward(s, x);
        ad::Var q = split_heads(b.q.forward(s, h));
        ad::Var k = split_heads(b.k.forward(s, h));
        ad::Var v = split_heads(b.v.forward(s, h));
        ad::Var scores =
            ad::bmm(ad::mul_scalar(q, 1.0 / std::sqrt(static_cast<double>(dh))),
                    ad::transpose_last2(k));               // (N*H, T, T)
        ad::Var ctx = ad::bmm(ad::softmax_lastdim(scores), v);  // (N*H, T, dh)
        ctx = ad::reshape(ad::permute_0213(ad::reshape(ctx, {n, heads, t, dh})), {n * t, d});
        x = ad::add(x, b.proj.forward(s, ctx));

        ad::Var m = b.ln2.forward(s, x);
        m = b.fc2.forward(s, ad::silu(b.fc1.forward(s, m)));
        x = ad::add(x, m);
    }

    ad::Var hf = final_ln_.forward(s, x);
    LatentGaussian out;
    out.mean = ad::add(z.mean, grid_from_tokens(mean_head_.forward(s, hf), n));
    out.log_std = ad::clamp(ad::add(z.log_std, grid_from_tokens(log_std_head_.forward(s, hf), n)),
                            kLogStdLo, kLogStdHi);
    return out;
}

void LatentMapper::collect(std::vector<nn::Param*>& out) {
    embed_.collect(out);
    out.push_back(&pos_);
    for (auto& b : blocks_) {
        b.ln1.collect(out);
        b.q.collect(out);
        b.k.collect(out);
        b.v.collect(out);
        b.proj.collect(out);
        b.ln2.collect(out);
        b.fc1.collect(out);
        b.fc2.collect(out);
    }
    final_ln_.collect(out);
    mean_head_.collect(out);
    log_std_head_.collect(out);
}

std::vector<nn::Param*> LatentMapper::params() {
    std::vector<nn::Param*> out;
    collect(out);
    return out;
}

}  // namespace semigda
