#include "semigda/adapters.hpp"

#include "semigda/common.hpp"

namespace semigda {

const char* adapter_role_name(AdapterRole role) {
    return role == AdapterRole::Image ? "image" : "mask";
}

AdapterBank::AdapterBank(AdapterRole role, const std::string& name,
                         const std::vector<AdapterLevelSpec>& levels, Rng& rng)
    : role_(role), name_(name) {
    if (levels.empty()) throw ConfigError("adapter bank '" + name + "': no levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const std::string base = name + ".l" + std::to_string(i);
        Level lv;
        lv.mix = nn::Conv2d(base + ".mix", levels[i].in_channels, levels[i].in_channels, 3, 1, 1,
                            rng);
        lv.proj = nn::Conv2d(base + ".proj", levels[i].in_channels, levels[i].out_channels, 1, 1,
                             0, rng, true, nn::Init::Zero);
        levels_.push_back(std::move(lv));
    }
}

FeatureBank AdapterBank::adapt(nn::Session& s, const FeatureBank& features) {
    if (features.levels.size() != levels_.size())
        throw ShapeError("adapter bank '" + name_ + "': got " +
                         std::to_string(features.levels.size()) + " levels, expected " +
                         std::to_string(levels_.size()));
    FeatureBank out;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        const ad::Var& f = features.levels[i];
        const int64_t want = levels_[i].mix.w.value.dim(1);
        if (f->value.ndim() != 4 || f->value.dim(1) != want)
            throw ShapeError("adapter bank '" + name_ + "': level " + std::to_string(i) +
                             " has shape " + f->value.shape_str() + ", expected " +
                             std::to_string(want) + " channels");
        ad::Var h = ad::silu(levels_[i].mix.forward(s, f));
        out.levels.push_back(levels_[i].proj.forward(s, h));
    }
    return out;
}

void AdapterBank::collect(std::vector<nn::Param*>& out) {
    for (auto& lv : levels_) {
        lv.mix.collect(out);
        lv.proj.collect(out);
    }
}

std::vector<nn::Param*> AdapterBank::params() {
    std::vector<nn::Param*> out;
    collect(out);
    return out;
}

ad::Var decode_branch(nn::Session& s, VaeBackbone& vae, const ad::Var& latent,
                      const FeatureBank& features, AdapterBank& adapter,
                      AdapterRole expected_role) {
    if (adapter.role() != expected_role)
        throw ConfigError(std::string("decode_branch: ") + adapter_role_name(expected_role) +
                          " branch wired to " + adapter_role_name(adapter.role()) +
                          " adapters");
    FeatureBank adapted = adapter.adapt(s, features);
    return vae.decode(s, latent, &adapted);
}

}  // namespace semigda
