#include "semigda/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <utility>

#include "semigda/common.hpp"
#include "semigda/mask_codec.hpp"

namespace semigda {

// ---- config plumbing ------------------------------------------------------
// Strict round-trips: from_json uses at() so missing fields fail loudly.

void to_json(nlohmann::json& j, const AblationFlags& v) {
    j = {{"no_unsup_prior", v.no_unsup_prior},
         {"no_unsup_seg", v.no_unsup_seg},
         {"no_image_adapter", v.no_image_adapter},
         {"no_mask_adapter", v.no_mask_adapter},
         {"supervised_only", v.supervised_only}};
}

void from_json(const nlohmann::json& j, AblationFlags& v) {
    j.at("no_unsup_prior").get_to(v.no_unsup_prior);
    j.at("no_unsup_seg").get_to(v.no_unsup_seg);
    j.at("no_image_adapter").get_to(v.no_image_adapter);
    j.at("no_mask_adapter").get_to(v.no_mask_adapter);
    j.at("supervised_only").get_to(v.supervised_only);
}

void to_json(nlohmann::json& j, const VaeConfig& v) {
    j = {{"in_channels", v.in_channels},
         {"latent_channels", v.latent_channels},
         {"stem_channels", v.stem_channels},
         {"stage_channels", v.stage_channels},
         {"groups", v.groups}};
}

void from_json(const nlohmann::json& j, VaeConfig& v) {
    j.at("in_channels").get_to(v.in_channels);
    j.at("latent_channels").get_to(v.latent_channels);
    j.at("stem_channels").get_to(v.stem_channels);
    j.at("stage_channels").get_to(v.stage_channels);
    j.at("groups").get_to(v.groups);
}

void to_json(nlohmann::json& j, const ResEncoderConfig& v) {
    j = {{"in_channels", v.in_channels},
         {"latent_channels", v.latent_channels},
         {"stem_channels", v.stem_channels},
         {"stage_channels", v.stage_channels},
         {"blocks_per_stage", v.blocks_per_stage},
         {"groups", v.groups}};
}

void from_json(const nlohmann::json& j, ResEncoderConfig& v) {
    j.at("in_channels").get_to(v.in_channels);
    j.at("latent_channels").get_to(v.latent_channels);
    j.at("stem_channels").get_to(v.stem_channels);
    j.at("stage_channels").get_to(v.stage_channels);
    j.at("blocks_per_stage").get_to(v.blocks_per_stage);
    j.at("groups").get_to(v.groups);
}

void to_json(nlohmann::json& j, const TrainConfig& v) {
    j = {{"image_size", v.image_size},
         {"num_classes", v.num_classes},
         {"batch_labeled", v.batch_labeled},
         {"batch_unlabeled", v.batch_unlabeled},
         {"stage1_epochs", v.stage1_epochs},
         {"stage2_epochs", v.stage2_epochs},
         {"beta", v.beta},
         {"lr", v.lr},
         {"smooth", v.smooth},
         {"seed", v.seed},
         {"stop_gradient", v.stop_gradient},
         {"sample_latents", v.sample_latents},
         {"ablate", v.ablate}};
}

void from_json(const nlohmann::json& j, TrainConfig& v) {
    j.at("image_size").get_to(v.image_size);
    j.at("num_classes").get_to(v.num_classes);
    j.at("batch_labeled").get_to(v.batch_labeled);
    j.at("batch_unlabeled").get_to(v.batch_unlabeled);
    j.at("stage1_epochs").get_to(v.stage1_epochs);
    j.at("stage2_epochs").get_to(v.stage2_epochs);
    j.at("beta").get_to(v.beta);
    j.at("lr").get_to(v.lr);
    j.at("smooth").get_to(v.smooth);
    j.at("seed").get_to(v.seed);
    j.at("stop_gradient").get_to(v.stop_gradient);
    j.at("sample_latents").get_to(v.sample_latents);
    j.at("ablate").get_to(v.ablate);
}

void to_json(nlohmann::json& j, const ModelConfig& v) {
    j = {{"vae", v.vae},
         {"encoder", v.encoder},
         {"mapper_d_model", v.mapper_d_model},
         {"mapper_blocks", v.mapper_blocks},
         {"mapper_heads", v.mapper_heads},
         {"mapper_mlp_ratio", v.mapper_mlp_ratio},
         {"image_size", v.image_size}};
}

void from_json(const nlohmann::json& j, ModelConfig& v) {
    j.at("vae").get_to(v.vae);
    j.at("encoder").get_to(v.encoder);
    j.at("mapper_d_model").get_to(v.mapper_d_model);
    j.at("mapper_blocks").get_to(v.mapper_blocks);
    j.at("mapper_heads").get_to(v.mapper_heads);
    j.at("mapper_mlp_ratio").get_to(v.mapper_mlp_ratio);
    j.at("image_size").get_to(v.image_size);
}

TrainConfig TrainConfig::normalized() const {
    TrainConfig c = *this;
    if (c.ablate.supervised_only) {
        c.ablate.no_unsup_prior = true;
        c.ablate.no_unsup_seg = true;
    }
    return c;
}

void TrainConfig::validate() const {
    if (beta <= 0.0) throw ConfigError("train config: beta must be > 0");
    if (stage1_epochs < 1 || stage2_epochs < 1)
        throw ConfigError("train config: epochs must be >= 1 in both stages");
    if (batch_labeled < 1) throw ConfigError("train config: batch_labeled must be >= 1");
    if (batch_unlabeled < 0) throw ConfigError("train config: batch_unlabeled must be >= 0");
    if (num_classes < 2) throw ConfigError("train config: num_classes must be >= 2");
    if (lr <= 0.0) throw ConfigError("train config: lr must be > 0");
    if (smooth < 0.0) throw ConfigError("train config: smooth must be >= 0");
    if (image_size < 1) throw ConfigError("train config: image_size must be >= 1");
    if (ablate.supervised_only && (!ablate.no_unsup_prior || !ablate.no_unsup_seg))
        throw ConfigError("train config: supervised_only implies both no_unsup flags");
}

void ModelConfig::validate() const {
    if (encoder.num_levels() != vae.num_levels())
        throw ConfigError("model config: encoder and backbone stage counts differ");
    if (encoder.latent_channels != vae.latent_channels)
        throw ConfigError("model config: encoder and backbone latent widths differ");
    if (image_size % vae.downsample_factor() != 0)
        throw ConfigError("model config: image_size " + std::to_string(image_size) +
                          " not divisible by downsample factor " +
                          std::to_string(vae.downsample_factor()));
    if (mapper_d_model % mapper_heads != 0)
        throw ConfigError("model config: mapper width not divisible by head count");
}

// ---- model assembly -------------------------------------------------------

namespace {

constexpr std::uint64_t kVaeInitTag = 0x76616531;
constexpr std::uint64_t kResInitTag = 0x72657331;
constexpr std::uint64_t kMapInitTag = 0x6d617031;
constexpr std::uint64_t kAdaptImageTag = 0x61696d67;
constexpr std::uint64_t kAdaptMaskTag = 0x616d736b;
constexpr std::uint64_t kBatchStreamTag = 0xb4c7e2f1;
constexpr std::uint64_t kStepRngTag = 0x57e9a003;

const ModelConfig& validated(const ModelConfig& mc) {
    mc.validate();
    return mc;
}

VaeBackbone build_vae(const VaeConfig& c, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kVaeInitTag));
    return VaeBackbone(c, rng);
}

ResEncoder build_encoder(const ResEncoderConfig& c, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kResInitTag));
    return ResEncoder(c, rng);
}

MapperConfig mapper_config(const ModelConfig& mc) {
    MapperConfig c;
    c.latent_channels = mc.vae.latent_channels;
    c.grid_h = mc.image_size / mc.vae.downsample_factor();
    c.grid_w = c.grid_h;
    c.d_model = mc.mapper_d_model;
    c.blocks = mc.mapper_blocks;
    c.heads = mc.mapper_heads;
    c.mlp_ratio = mc.mapper_mlp_ratio;
    return c;
}

LatentMapper build_mapper(const ModelConfig& mc, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kMapInitTag));
    return LatentMapper(mapper_config(mc), rng);
}

AdapterBank build_adapter(AdapterRole role, const std::vector<int>& in_ch,
                          const std::vector<int>& out_ch, std::uint64_t seed,
                          std::uint64_t tag, const std::string& name) {
    std::vector<AdapterLevelSpec> specs;
    for (std::size_t i = 0; i < in_ch.size(); ++i) specs.push_back({in_ch[i], out_ch[i]});
    Rng rng(mix_seed(seed, tag));
    return AdapterBank(role, name, specs, rng);
}

}  // namespace

SemiGdaModel::SemiGdaModel(const ModelConfig& mc, std::uint64_t init_seed)
    : cfg(validated(mc)),
      vae(build_vae(cfg.vae, init_seed)),
      encoder(build_encoder(cfg.encoder, init_seed)),
      mapper(build_mapper(cfg, init_seed)),
      image_adapter(build_adapter(AdapterRole::Image, cfg.vae.stage_channels,
                                  cfg.vae.stage_channels, init_seed, kAdaptImageTag,
                                  "adapt.image")),
      mask_adapter(build_adapter(AdapterRole::Mask, cfg.encoder.stage_channels,
                                 cfg.vae.stage_channels, init_seed, kAdaptMaskTag,
                                 "adapt.mask")) {}

std::vector<CheckpointGroup> SemiGdaModel::groups() {
    return {{"vae", vae.params()},
            {"encoder", encoder.params()},
            {"mapping", mapper.params()},
            {"image_adapter", image_adapter.params()},
            {"mask_adapter", mask_adapter.params()}};
}

// ---- batch staging --------------------------------------------------------

namespace {

Tensor stack_images(const std::vector<const ImageSample*>& xs, int image_size) {
    const int64_t n = static_cast<int64_t>(xs.size());
    const int64_t h = image_size, w = image_size;
    Tensor out({n, 3, h, w});
    for (int64_t i = 0; i < n; ++i) {
        const Tensor& img = xs[i]->image;
        if (img.ndim() != 3 || img.dim(0) != 3 || img.dim(1) != h || img.dim(2) != w)
            throw ShapeError("train: sample '" + xs[i]->id + "' has image shape " +
                             img.shape_str() + ", expected (3," + std::to_string(h) + "," +
                             std::to_string(w) + ")");
        for (int64_t j = 0; j < 3 * h * w; ++j)
            out.data()[i * 3 * h * w + j] = img.data()[j] * 2.0 - 1.0;
    }
    return out;
}

Tensor stack_masks(const std::vector<const ImageSample*>& xs, int image_size, int num_classes,
                   bool as_foreground) {
    const int64_t n = static_cast<int64_t>(xs.size());
    const int64_t h = image_size, w = image_size;
    Tensor out({n, 1, h, w});
    for (int64_t i = 0; i < n; ++i) {
        Tensor plane = as_foreground ? foreground_indicator(xs[i]->mask, num_classes)
                                     : mask_to_continuous(xs[i]->mask, num_classes);
        if (plane.dim(0) != h || plane.dim(1) != w)
            throw ShapeError("train: sample '" + xs[i]->id + "' has mask shape " +
                             plane.shape_str());
        for (int64_t j = 0; j < h * w; ++j) out.data()[i * h * w + j] = plane.data()[j];
    }
    return out;
}

}  // namespace

// ---- trainer --------------------------------------------------------------

Trainer::Trainer(SemiGdaModel& model, const TrainConfig& cfg)
    : model_(model), cfg_(cfg.normalized()) {
    cfg_.validate();
    if (cfg_.image_size != model_.cfg.image_size)
        throw ConfigError("train config: image_size differs from the model's");
    opt_encoder_ = nn::Adam(model_.encoder.params(), cfg_.lr);
    opt_mapper_ = nn::Adam(model_.mapper.params(), cfg_.lr);
    opt_image_adapter_ = nn::Adam(model_.image_adapter.params(), cfg_.lr);
    opt_mask_adapter_ = nn::Adam(model_.mask_adapter.params(), cfg_.lr);
}

std::vector<CheckpointOptimizer> Trainer::optimizers() {
    return {{"encoder", &opt_encoder_},
            {"mapping", &opt_mapper_},
            {"image_adapter", &opt_image_adapter_},
            {"mask_adapter", &opt_mask_adapter_}};
}

LossReport Trainer::train_step(const Batch& batch, int stage, std::int64_t t_stage,
                               std::int64_t t_stage_max, Rng& step_rng) {
    if (stage != 1 && stage != 2) throw ConfigError("train_step: stage must be 1 or 2");
    if (batch.labeled.empty()) throw TrainingError("train_step: batch has no labeled samples");
    const int k = cfg_.num_classes;
    nn::Session s;

    for (const ImageSample* smp : batch.labeled)
        if (!smp->mask.defined())
            throw TrainingError("train_step: labeled sample '" + smp->id + "' has no mask");

    Tensor xl = stack_images(batch.labeled, cfg_.image_size);
    Tensor cont = stack_masks(batch.labeled, cfg_.image_size, k, false);
    Tensor fg = stack_masks(batch.labeled, cfg_.image_size, k, true);

    ad::Var xl_leaf = ad::make_leaf(xl, false);
    const bool need_banks = stage == 2;
    FeatureBank sv, sr;
    LatentGaussian zv = model_.vae.encode(s, xl_leaf, need_banks ? &sv : nullptr);
    LatentGaussian ztv = model_.mapper.map(s, zv);
    LatentGaussian zr = model_.encoder.encode(s, xl_leaf, need_banks ? &sr : nullptr);
    LatentGaussian zg =
        model_.vae.encode(s, ad::make_leaf(replicate3(cont), false), nullptr);

    ad::Var sup_prior = losses::prior_sup(ztv.mean, zr.mean, zg.mean);
    ad::Var sup_seg, unsup_prior, unsup_seg;

    if (stage == 2) {
        ad::Var lat_v = cfg_.sample_latents ? sample_latent(ztv, false, step_rng) : ztv.mean;
        ad::Var lat_r = cfg_.sample_latents ? sample_latent(zr, false, step_rng) : zr.mean;
        ad::Var yv = cfg_.ablate.no_image_adapter
                         ? model_.vae.decode(s, lat_v, nullptr)
                         : decode_branch(s, model_.vae, lat_v, sv, model_.image_adapter,
                                         AdapterRole::Image);
        ad::Var yr = cfg_.ablate.no_mask_adapter
                         ? model_.vae.decode(s, lat_r, nullptr)
                         : decode_branch(s, model_.vae, lat_r, sr, model_.mask_adapter,
                                         AdapterRole::Mask);
        sup_seg = losses::seg_sup(yv, yr, fg, k, cfg_.smooth);
    }

    const bool want_unsup_prior = !cfg_.ablate.no_unsup_prior;
    const bool want_unsup_seg = stage == 2 && !cfg_.ablate.no_unsup_seg;
    if (!batch.unlabeled.empty() && (want_unsup_prior || want_unsup_seg)) {
        for (const ImageSample* smp : batch.unlabeled)
            if (smp->mask.defined())
                throw TrainingError("train_step: unlabeled sample '" + smp->id +
                                    "' unexpectedly carries a mask");
        Tensor xu = stack_images(batch.unlabeled, cfg_.image_size);
        ad::Var xu_leaf = ad::make_leaf(xu, false);
        FeatureBank svu, sru;
        LatentGaussian zvu = model_.vae.encode(s, xu_leaf, want_unsup_seg ? &svu : nullptr);
        LatentGaussian ztvu = model_.mapper.map(s, zvu);
        LatentGaussian zru = model_.encoder.encode(s, xu_leaf, want_unsup_seg ? &sru : nullptr);
        if (want_unsup_prior) unsup_prior = losses::prior_unsup(ztvu.mean, zru.mean);
        if (want_unsup_seg) {
            ad::Var lat_v = cfg_.sample_latents ? sample_latent(ztvu, false, step_rng) : ztvu.mean;
            ad::Var lat_r = cfg_.sample_latents ? sample_latent(zru, false, step_rng) : zru.mean;
            ad::Var yvu = cfg_.ablate.no_image_adapter
                              ? model_.vae.decode(s, lat_v, nullptr)
                              : decode_branch(s, model_.vae, lat_v, svu, model_.image_adapter,
                                              AdapterRole::Image);
            ad::Var yru = cfg_.ablate.no_mask_adapter
                              ? model_.vae.decode(s, lat_r, nullptr)
                              : decode_branch(s, model_.vae, lat_r, sru, model_.mask_adapter,
                                              AdapterRole::Mask);
            unsup_seg = losses::seg_unsup(yvu, yru, k, cfg_.smooth, cfg_.stop_gradient);
        }
    }

    TotalLoss total =
        total_loss(sup_prior, sup_seg, unsup_prior, unsup_seg, t_stage, t_stage_max, cfg_.beta);

    std::vector<nn::Adam*> active = {&opt_encoder_, &opt_mapper_};
    if (stage == 2) {
        if (!cfg_.ablate.no_image_adapter) active.push_back(&opt_image_adapter_);
        if (!cfg_.ablate.no_mask_adapter) active.push_back(&opt_mask_adapter_);
    }
    for (nn::Adam* o : active) o->zero_grad();
    s.backward(total.value);
    for (nn::Adam* o : active) o->step();
    return total.report;
}

TrainResult Trainer::run(const SemiSplit& split, const std::string& run_dir,
                         const std::string& resume_from) {
    if (!model_.vae.frozen())
        throw TrainingError(
            "train: the generative backbone must be pretrained and frozen before training");
    if (split.labeled.empty()) throw ConfigError("train: split has no labeled samples");
    split_ratio_ = split.labeled_ratio;
    split_seed_ = split.seed;
    std::filesystem::create_directories(run_dir);

    const int b_u =
        (cfg_.ablate.supervised_only || split.unlabeled.empty()) ? 0 : cfg_.batch_unlabeled;
    BatchIterator it(split, cfg_.batch_labeled, b_u, mix_seed(cfg_.seed, kBatchStreamTag));
    const std::int64_t bpe = it.batches_per_epoch();
    const std::int64_t t1_max = static_cast<std::int64_t>(cfg_.stage1_epochs) * bpe;
    const std::int64_t t2_max = static_cast<std::int64_t>(cfg_.stage2_epochs) * bpe;
    const std::int64_t total_steps = t1_max + t2_max;

    std::int64_t start_t = 0;
    double best = -1.0;
    if (!resume_from.empty()) {
        start_t = load_state(resume_from);
        best = loaded_best_;
    }

    TrainResult res;
    res.loss_log = run_dir + "/loss_log.jsonl";
    res.best_checkpoint = run_dir + "/best.ckpt";
    res.final_checkpoint = run_dir + "/final.ckpt";
    res.total_steps = total_steps;

    std::ofstream log(res.loss_log, start_t > 0 ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("train: cannot open " + res.loss_log);

    double last_val = -1.0;
    for (std::int64_t t = start_t; t < total_steps; ++t) {
        const int stage = t < t1_max ? 1 : 2;
        const std::int64_t t_stage = stage == 1 ? t : t - t1_max;
        const std::int64_t t_stage_max = stage == 1 ? t1_max : t2_max;
        Rng step_rng(mix_seed(cfg_.seed, kStepRngTag, static_cast<std::uint64_t>(t)));
        Batch b = it.batch(t);
        LossReport rep = train_step(b, stage, t_stage, t_stage_max, step_rng);

        nlohmann::json line{{"t", t},
                            {"stage", stage},
                            {"sup_prior", rep.sup_prior},
                            {"sup_seg", rep.sup_seg},
                            {"unsup_prior", rep.unsup_prior},
                            {"unsup_seg", rep.unsup_seg},
                            {"lambda_u", rep.lambda_u},
                            {"total", rep.total}};
        log << line.dump() << "\n";

        if (stage == 2 && (t_stage + 1) % bpe == 0 && !split.val.empty()) {
            last_val = evaluate(split.val).dice_pct;
            if (last_val > best) {
                best = last_val;
                save_state(res.best_checkpoint, t + 1, best);
            }
        }
    }
    log.flush();
    if (!log) throw IoError("train: failed writing " + res.loss_log);

    save_state(res.final_checkpoint, total_steps, best < 0.0 ? 0.0 : best);
    if (best < 0.0) {
        // no validation happened; keep the contract that best.ckpt exists
        std::filesystem::copy_file(res.final_checkpoint, res.best_checkpoint,
                                   std::filesystem::copy_options::overwrite_existing);
        best = last_val;
    }
    res.best_val_dice = best < 0.0 ? 0.0 : best;
    res.final_val_dice = last_val < 0.0 ? 0.0 : last_val;
    return res;
}

void Trainer::save_state(const std::string& path, std::int64_t t_global, double best_val_dice) {
    nlohmann::json meta;
    meta["kind"] = "semigda-train";
    meta["model"] = model_.cfg;
    meta["train"] = cfg_;
    meta["t"] = t_global;
    meta["best_val_dice"] = best_val_dice;
    meta["vae_frozen"] = model_.vae.frozen();
    meta["split_ratio"] = split_ratio_;
    meta["split_seed"] = split_seed_;
    save_checkpoint(path, meta, model_.groups(), optimizers());
}

std::int64_t Trainer::load_state(const std::string& path) {
    auto optims = optimizers();
    auto groups = model_.groups();
    nlohmann::json meta = load_checkpoint(path, groups, optims);
    if (meta.value("kind", std::string()) != "semigda-train")
        throw IoError("checkpoint " + path + " is not a training state");
    if (nlohmann::json(meta.at("model")) != nlohmann::json(model_.cfg))
        throw IoError("checkpoint " + path + " was produced with a different model configuration");
    TrainConfig stored = meta.at("train").get<TrainConfig>();
    if (nlohmann::json(stored) != nlohmann::json(cfg_))
        throw IoError("checkpoint " + path + " was produced with a different train configuration");
    if (meta.value("vae_frozen", false)) model_.vae.set_trainable(false);
    loaded_best_ = meta.value("best_val_dice", 0.0);
    split_ratio_ = meta.value("split_ratio", 0.0);
    split_seed_ = meta.value("split_seed", std::uint64_t(0));
    return meta.at("t").get<std::int64_t>();
}

// ---- inference & evaluation -----------------------------------------------

InferResult infer_sample(SemiGdaModel& model, const Tensor& image01, const AblationFlags& flags,
                         int num_classes) {
    if (image01.ndim() != 3 || image01.dim(0) != 3)
        throw ShapeError("infer: expected a (3,H,W) image, got " + image01.shape_str());
    const int64_t h = image01.dim(1), w = image01.dim(2);
    Tensor x({1, 3, h, w});
    for (int64_t j = 0; j < image01.numel(); ++j) x.data()[j] = image01.data()[j] * 2.0 - 1.0;

    nn::Session s;
    ad::Var leaf = ad::make_leaf(x, false);
    FeatureBank sv, sr;
    LatentGaussian zv = model.vae.encode(s, leaf, &sv);
    LatentGaussian ztv = model.mapper.map(s, zv);
    LatentGaussian zr = model.encoder.encode(s, leaf, &sr);
    ad::Var yv = flags.no_image_adapter
                     ? model.vae.decode(s, ztv.mean, nullptr)
                     : decode_branch(s, model.vae, ztv.mean, sv, model.image_adapter,
                                     AdapterRole::Image);
    ad::Var yr = flags.no_mask_adapter
                     ? model.vae.decode(s, zr.mean, nullptr)
                     : decode_branch(s, model.vae, zr.mean, sr, model.mask_adapter,
                                     AdapterRole::Mask);

    Tensor pv = soft_foreground(yv->value.reshaped({h, w}), num_classes);
    Tensor pr = soft_foreground(yr->value.reshaped({h, w}), num_classes);
    InferResult out;
    out.soft = Tensor({h, w});
    out.hard = Tensor({h, w});
    for (int64_t j = 0; j < h * w; ++j) {
        const double p = 0.5 * (pv.data()[j] + pr.data()[j]);
        out.soft.data()[j] = p;
        out.hard.data()[j] = p >= 0.5 ? 1.0 : 0.0;  // ties go to foreground
    }
    return out;
}

MetricsReport evaluate_model(SemiGdaModel& model, const std::vector<ImageSample>& samples,
                             const AblationFlags& flags, int num_classes) {
    if (samples.empty()) throw ConfigError("evaluate: empty evaluation set");
    std::vector<SampleMetrics> per;
    per.reserve(samples.size());
    for (const ImageSample& smp : samples) {
        if (!smp.mask.defined())
            throw ConfigError("evaluate: sample '" + smp.id + "' has no ground truth");
        InferResult r = infer_sample(model, smp.image, flags, num_classes);
        Tensor gt = foreground_indicator(smp.mask, num_classes);
        SampleMetrics m;
        m.id = smp.id;
        m.dice = dice_score(r.hard, gt);
        m.iou = iou_score(r.hard, gt);
        m.hd95 = hd95(r.hard, gt);
        per.push_back(std::move(m));
    }
    return aggregate_metrics(std::move(per));
}

}  // namespace semigda
