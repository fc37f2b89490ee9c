#include "semigda/encoder.hpp"

#include <sstream>
#include <utility>

#include "semigda/common.hpp"

namespace semigda {

ResEncoder::ResEncoder(ResEncoderConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    if (cfg_.stage_channels.empty()) throw ConfigError("res_encoder: need at least one stage");
    const int g = cfg_.groups;

    stem_ = nn::Conv2d("res.stem", cfg_.in_channels, cfg_.stem_channels, 3, 1, 1, rng);
    stem_gn_ = nn::GroupNorm("res.stem_gn", cfg_.stem_channels, g);

    int prev = cfg_.stem_channels;
    for (std::size_t i = 0; i < cfg_.stage_channels.size(); ++i) {
        const int c = cfg_.stage_channels[i];
        const std::string base = "res.s" + std::to_string(i);
        Stage st;
        st.down = nn::Conv2d(base + ".down", prev, c, 3, 2, 1, rng);
        st.down_gn = nn::GroupNorm(base + ".down_gn", c, g);
        for (int b = 0; b < cfg_.blocks_per_stage; ++b) {
            const std::string bb = base + ".b" + std::to_string(b);
            Block blk;
            blk.gn1 = nn::GroupNorm(bb + ".gn1", c, g);
            blk.conv1 = nn::Conv2d(bb + ".conv1", c, c, 3, 1, 1, rng);
            blk.gn2 = nn::GroupNorm(bb + ".gn2", c, g);
            blk.conv2 = nn::Conv2d(bb + ".conv2", c, c, 3, 1, 1, rng);
            st.blocks.push_back(std::move(blk));
        }
        stages_.push_back(std::move(st));
        prev = c;
    }
    mean_head_ = nn::Conv2d("res.mean", prev, cfg_.latent_channels, 1, 1, 0, rng);
    log_std_head_ = nn::Conv2d("res.log_std", prev, cfg_.latent_channels, 1, 1, 0, rng);
}

LatentGaussian ResEncoder::encode(nn::Session& s, const ad::Var& x, FeatureBank* bank) {
    const Tensor& v = x->value;
    if (v.ndim() != 4 || v.dim(1) != cfg_.in_channels)
        throw ShapeError("res_encoder: expected (N," + std::to_string(cfg_.in_channels) +
                         ",H,W), got " + v.shape_str());
    const int f = cfg_.downsample_factor();
    if (v.dim(2) % f != 0 || v.dim(3) % f != 0)
        throw ShapeError("res_encoder: spatial dims of " + v.shape_str() +
                         " not divisible by downsample factor " + std::to_string(f));

    ad::Var h = ad::relu(stem_gn_.forward(s, stem_.forward(s, x)));
    if (bank) bank->levels.clear();
    for (auto& st : stages_) {
        h = ad::relu(st.down_gn.forward(s, st.down.forward(s, h)));
        for (auto& blk : st.blocks) {
            ad::Var r = blk.conv1.forward(s, ad::relu(blk.gn1.forward(s, h)));
            r = blk.conv2.forward(s, ad::relu(blk.gn2.forward(s, r)));
            h = ad::add(h, r);
        }
        if (bank) bank->levels.push_back(h);
    }
    LatentGaussian out;
    out.mean = mean_head_.forward(s, h);
    out.log_std = ad::clamp(log_std_head_.forward(s, h), kLogStdLo, kLogStdHi);
    return out;
}

void ResEncoder::collect(std::vector<nn::Param*>& out) {
    stem_.collect(out);
    stem_gn_.collect(out);
    for (auto& st : stages_) {
        st.down.collect(out);
        st.down_gn.collect(out);
        for (auto& blk : st.blocks) {
            blk.gn1.collect(out);
            blk.conv1.collect(out);
            blk.gn2.collect(out);
            blk.conv2.collect(out);
        }
    }
    mean_head_.collect(out);
    log_std_head_.collect(out);
}

std::vector<nn::Param*> ResEncoder::params() {
    std::vector<nn::Param*> out;
    collect(out);
    return out;
}

std::string ResEncoder::architecture() const {
    std::ostringstream os;
    os << "res-encoder: residual stages=" << cfg_.num_levels()
       << " residual-blocks=" << cfg_.num_levels() * cfg_.blocks_per_stage
       << " channels=" << cfg_.stem_channels;
    for (int c : cfg_.stage_channels) os << "-" << c;
    os << " latent=" << cfg_.latent_channels << " f=" << cfg_.downsample_factor();
    return os.str();
}

}  // namespace semigda
