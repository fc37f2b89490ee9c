#pragma once

#include <string>
#include <vector>

#include "semigda/nn.hpp"
#include "semigda/rng.hpp"
#include "semigda/vae.hpp"

namespace semigda {

// Which encoder's features a bank of adapters is wired to. The trainer
// asserts the pairing at every call site: image-latent features go through
// the image adapters, mask-aligned encoder features through the mask ones.
enum class AdapterRole { Image, Mask };

const char* adapter_role_name(AdapterRole role);

struct AdapterLevelSpec {
    int in_channels = 0;
    int out_channels = 0;
};

// One lightweight adapter per skip level: 3x3 conv, SiLU, then a 1x1
// projection onto the decoder's injection width. The projection starts at
// zero so an untrained adapter contributes nothing and decoding matches the
// adapter-free baseline exactly.
class AdapterBank {
public:
    AdapterBank(AdapterRole role, const std::string& name,
                const std::vector<AdapterLevelSpec>& levels, Rng& rng);

    FeatureBank adapt(nn::Session& s, const FeatureBank& features);

    AdapterRole role() const { return role_; }
    int num_levels() const { return static_cast<int>(levels_.size()); }
    void collect(std::vector<nn::Param*>& out);
    std::vector<nn::Param*> params();

private:
    struct Level {
        nn::Conv2d mix;   // 3x3, He init
        nn::Conv2d proj;  // 1x1, zero init
    };

    AdapterRole role_;
    std::string name_;
    std::vector<Level> levels_;
};

// Adapt a feature bank and decode the latent through the generative decoder
// with the adapted skips injected. `expected_role` documents + enforces the
// branch wiring at the call site.
ad::Var decode_branch(nn::Session& s, VaeBackbone& vae, const ad::Var& latent,
                      const FeatureBank& features, AdapterBank& adapter,
                      AdapterRole expected_role);

}  // namespace semigda
