#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "semigda/adapters.hpp"
#include "semigda/checkpoint.hpp"
#include "semigda/dataset.hpp"
#include "semigda/encoder.hpp"
#include "semigda/losses.hpp"
#include "semigda/mapping.hpp"
#include "semigda/metrics.hpp"
#include "semigda/vae.hpp"

namespace semigda {

struct AblationFlags {
    bool no_unsup_prior = false;
    bool no_unsup_seg = false;
    bool no_image_adapter = false;
    bool no_mask_adapter = false;
    bool supervised_only = false;
};

struct TrainConfig {
    int image_size = 64;
    int num_classes = 2;
    int batch_labeled = 2;
    int batch_unlabeled = 2;
    int stage1_epochs = 6;
    int stage2_epochs = 16;
    double beta = 0.1;
    double lr = 1e-4;
    double smooth = 1.0;
    std::uint64_t seed = 0;
    bool stop_gradient = true;    // detach the target branch in the consistency loss
    bool sample_latents = false;  // decode sampled latents instead of means while training
    AblationFlags ablate;

    // supervised_only implies both no_unsup flags; returns the closed form.
    TrainConfig normalized() const;
    void validate() const;
};

struct ModelConfig {
    VaeConfig vae;
    ResEncoderConfig encoder;
    int mapper_d_model = 128;
    int mapper_blocks = 2;
    int mapper_heads = 4;
    int mapper_mlp_ratio = 2;
    int image_size = 64;

    void validate() const;
};

void to_json(nlohmann::json& j, const AblationFlags& v);
void from_json(const nlohmann::json& j, AblationFlags& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);
void to_json(nlohmann::json& j, const VaeConfig& v);
void from_json(const nlohmann::json& j, VaeConfig& v);
void to_json(nlohmann::json& j, const ResEncoderConfig& v);
void from_json(const nlohmann::json& j, ResEncoderConfig& v);
void to_json(nlohmann::json& j, const ModelConfig& v);
void from_json(const nlohmann::json& j, ModelConfig& v);

// The full model: frozen generative backbone, trainable encoder, latent
// mapper and the two adapter banks. Parameter groups carry stable names so
// checkpoints are self-describing.
struct SemiGdaModel {
    ModelConfig cfg;
    VaeBackbone vae;
    ResEncoder encoder;
    LatentMapper mapper;
    AdapterBank image_adapter;
    AdapterBank mask_adapter;

    SemiGdaModel(const ModelConfig& cfg, std::uint64_t init_seed);
    std::vector<CheckpointGroup> groups();
};

struct InferResult {
    Tensor soft;  // (H,W) in [0,1]: averaged branch foreground probabilities
    Tensor hard;  // (H,W) in {0,1}: soft thresholded at 0.5, ties foreground
};

struct TrainResult {
    double best_val_dice = 0.0;
    double final_val_dice = 0.0;
    std::int64_t total_steps = 0;
    std::string best_checkpoint;
    std::string final_checkpoint;
    std::string loss_log;
};

// Branch-averaged prediction from the frozen-decoder model; deterministic
// (latent means, no sampling). image01 is (3,H,W) in [0,1].
InferResult infer_sample(SemiGdaModel& model, const Tensor& image01, const AblationFlags& flags,
                         int num_classes);

// Per-sample dice/iou/hd95 against the ground-truth foreground, aggregated.
MetricsReport evaluate_model(SemiGdaModel& model, const std::vector<ImageSample>& samples,
                             const AblationFlags& flags, int num_classes);

class Trainer {
public:
    Trainer(SemiGdaModel& model, const TrainConfig& cfg);

    // One optimization step. `t_stage`/`t_stage_max` drive the warm-up
    // schedule; `step_rng` is only consulted when sample_latents is on.
    LossReport train_step(const Batch& batch, int stage, std::int64_t t_stage,
                          std::int64_t t_stage_max, Rng& step_rng);

    // Two-stage loop with per-epoch validation in stage 2, JSONL loss log and
    // best/final checkpoints under run_dir. `resume_from` continues a saved
    // run; the result is step-for-step identical to an uninterrupted one.
    TrainResult run(const SemiSplit& split, const std::string& run_dir,
                    const std::string& resume_from = "");

    InferResult infer(const Tensor& image01) {
        return infer_sample(model_, image01, cfg_.ablate, cfg_.num_classes);
    }
    MetricsReport evaluate(const std::vector<ImageSample>& samples) {
        return evaluate_model(model_, samples, cfg_.ablate, cfg_.num_classes);
    }

    void save_state(const std::string& path, std::int64_t t_global, double best_val_dice);
    std::int64_t load_state(const std::string& path);  // returns stored t_global

    const TrainConfig& config() const { return cfg_; }
    std::vector<CheckpointOptimizer> optimizers();

private:
    SemiGdaModel& model_;
    TrainConfig cfg_;
    nn::Adam opt_encoder_, opt_mapper_, opt_image_adapter_, opt_mask_adapter_;
    double loaded_best_ = 0.0;
    // split provenance, recorded in checkpoints so eval can rebuild the split
    double split_ratio_ = 0.0;
    std::uint64_t split_seed_ = 0;
};

}  // namespace semigda
