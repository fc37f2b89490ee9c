// semigda command-line front end. Every command is a thin wrapper over the
// library; the only logic here is argument plumbing and manifest writing.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "semigda/common.hpp"
#include "semigda/hash.hpp"
#include "semigda/png_io.hpp"
#include "semigda/trainer.hpp"

using namespace semigda;
namespace fs = std::filesystem;

namespace semigda {

// manifest serialization for the CLI-facing option structs
void to_json(nlohmann::json& j, const SyntheticConfig& c) {
    j = {{"num_samples", c.num_samples}, {"image_size", c.image_size},
         {"min_shapes", c.min_shapes},   {"max_shapes", c.max_shapes},
         {"noise_std", c.noise_std},     {"texture", c.texture},
         {"seed", c.seed},               {"downsample_factor", c.downsample_factor}};
}

void to_json(nlohmann::json& j, const PretrainOptions& o) {
    j = {{"epochs", o.epochs},       {"lr", o.lr},
         {"kl_weight", o.kl_weight}, {"batch_size", o.batch_size},
         {"seed", o.seed},           {"num_classes", o.num_classes}};
}

}  // namespace semigda

namespace {

std::string iso_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One manifest per run, written next to the outputs. The config snapshot is
// verbatim; the hash covers the resolved option values, not the file text.
class RunManifest {
public:
    RunManifest(std::string command, std::uint64_t seed, std::string config_text,
                nlohmann::json config)
        : started_(iso_now()) {
        j_["command"] = std::move(command);
        j_["seed"] = seed;
        j_["config_text"] = std::move(config_text);
        j_["config"] = std::move(config);
        j_["config_hash"] = fnv1a64_hex(j_["config"].dump());
        j_["outputs"] = nlohmann::json::array();
    }

    void add_output(const std::string& path) { j_["outputs"].push_back(path); }
    void extra(const std::string& key, const nlohmann::json& v) { j_[key] = v; }

    void write(const std::string& dir) {
        j_["started"] = started_;
        j_["finished"] = iso_now();
        fs::create_directories(dir);
        const std::string path = (fs::path(dir) / "run_manifest.json").string();
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + path);
        out << j_.dump(2) << "\n";
    }

private:
    nlohmann::json j_;
    std::string started_;
};

void prepare_out_dir(const std::string& out, bool force) {
    if (fs::exists(out) && !fs::is_empty(out)) {
        if (!force)
            throw IoError("output directory '" + out + "' is not empty (pass --force to replace it)");
        fs::remove_all(out);
    }
    fs::create_directories(out);
}

AblationFlags parse_ablations(const std::vector<std::string>& names) {
    AblationFlags f;
    for (const std::string& n : names) {
        if (n == "supervised_only") f.supervised_only = true;
        else if (n == "no_unsup_prior") f.no_unsup_prior = true;
        else if (n == "no_unsup_seg") f.no_unsup_seg = true;
        else if (n == "no_image_adapter") f.no_image_adapter = true;
        else if (n == "no_mask_adapter") f.no_mask_adapter = true;
        else
            throw ConfigError("unknown ablation '" + n +
                              "' (valid: supervised_only, no_unsup_prior, no_unsup_seg, "
                              "no_image_adapter, no_mask_adapter)");
    }
    return f;
}

nlohmann::json require_vae_meta(const std::string& path) {
    if (!fs::exists(path))
        throw TrainingError("generative backbone checkpoint '" + path +
                            "' not found; run `semigda pretrain-vae` first");
    nlohmann::json meta = read_checkpoint_manifest(path).at("meta");
    if (meta.value("kind", std::string()) != "semigda-vae")
        throw ConfigError("'" + path + "' is not a pretrained backbone checkpoint");
    return meta;
}

struct Restored {
    std::unique_ptr<SemiGdaModel> model;
    std::unique_ptr<Trainer> trainer;
    nlohmann::json meta;
};

Restored restore_trainer(const std::string& ckpt) {
    if (!fs::exists(ckpt)) throw IoError("checkpoint '" + ckpt + "' not found");
    nlohmann::json meta = read_checkpoint_manifest(ckpt).at("meta");
    if (meta.value("kind", std::string()) != "semigda-train")
        throw ConfigError("'" + ckpt + "' is not a training checkpoint");
    Restored r;
    r.meta = meta;
    ModelConfig mc = meta.at("model").get<ModelConfig>();
    TrainConfig tc = meta.at("train").get<TrainConfig>();
    r.model = std::make_unique<SemiGdaModel>(mc, 0);
    r.trainer = std::make_unique<Trainer>(*r.model, tc);
    r.trainer->load_state(ckpt);
    return r;
}

int image_edge(const std::vector<ImageSample>& corpus) {
    if (corpus.empty()) throw ConfigError("corpus is empty");
    const Tensor& img = corpus.front().image;
    if (img.dim(1) != img.dim(2)) throw ConfigError("corpus images must be square");
    return static_cast<int>(img.dim(1));
}

// (1,C,h,w) feature level -> one grayscale grid of all channels, jointly
// normalized so relative magnitudes stay comparable across channels.
ImageU8 feature_grid(const Tensor& level) {
    const int64_t c = level.dim(1), h = level.dim(2), w = level.dim(3);
    const int64_t cols = static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(c))));
    const int64_t rows = (c + cols - 1) / cols;
    double lo = level.data()[0], hi = level.data()[0];
    for (int64_t i = 0; i < level.numel(); ++i) {
        lo = std::min(lo, level.data()[i]);
        hi = std::max(hi, level.data()[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    Tensor grid({rows * h, cols * w});
    for (int64_t ch = 0; ch < c; ++ch) {
        const int64_t r0 = (ch / cols) * h, c0 = (ch % cols) * w;
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                grid.data()[(r0 + y) * cols * w + c0 + x] =
                    (level.data()[ch * h * w + y * w + x] - lo) / span;
    }
    return tensor_to_mask(grid, 255.0);
}

std::string config_snapshot(const CLI::App& app) {
    const CLI::Option* opt = app.get_config_ptr();
    if (!opt || opt->count() == 0) return {};
    const std::string path = opt->as<std::string>();
    return path.empty() ? std::string() : read_text_file(path);
}

// ---- commands -------------------------------------------------------------

int cmd_gen_data(const SyntheticConfig& sc, const std::string& out, bool force,
                 const std::string& cfg_text) {
    prepare_out_dir(out, force);
    auto corpus = generate_synthetic_corpus(sc);
    save_corpus(corpus, out);
    RunManifest man("gen-data", sc.seed, cfg_text, nlohmann::json(sc));
    man.add_output((fs::path(out) / "images").string());
    man.add_output((fs::path(out) / "masks").string());
    man.write(out);
    std::cout << "wrote " << corpus.size() << " samples to " << out << "\n";
    return 0;
}

int cmd_pretrain_vae(const std::string& data, const std::string& out, VaeConfig vc,
                     const PretrainOptions& po, const std::string& cfg_text) {
    auto corpus = load_corpus(data, po.num_classes);
    const int edge = image_edge(corpus);
    if (edge % vc.downsample_factor() != 0)
        throw ConfigError("corpus images of size " + std::to_string(edge) +
                          " are not divisible by the downsample factor " +
                          std::to_string(vc.downsample_factor()));

    Rng rng(mix_seed(po.seed, 0x7a3f00d1));
    VaeBackbone vae(vc, rng);
    PretrainReport rep = pretrain_vae(vae, corpus, po);
    vae.set_trainable(false);

    for (std::size_t e = 0; e < rep.recon.size(); ++e)
        std::cout << "epoch " << e << ": recon " << rep.recon[e] << " kl " << rep.kl[e] << "\n";

    const std::string hash = nn::params_digest(vae.params());
    fs::create_directories(out);
    const std::string ckpt = (fs::path(out) / "vae.ckpt").string();
    nlohmann::json meta;
    meta["kind"] = "semigda-vae";
    meta["vae"] = vc;
    meta["frozen"] = true;
    meta["params_hash"] = hash;
    meta["final_recon"] = rep.recon.empty() ? 0.0 : rep.recon.back();
    meta["final_kl"] = rep.kl.empty() ? 0.0 : rep.kl.back();
    save_checkpoint(ckpt, meta, {{"vae", vae.params()}});

    std::cout << "backbone parameter hash: " << hash << "\n";
    std::cout << "saved " << ckpt << "\n";

    RunManifest man("pretrain-vae", po.seed, cfg_text,
                    nlohmann::json{{"data", data}, {"vae", vc}, {"pretrain", po}});
    man.add_output(ckpt);
    man.extra("params_hash", hash);
    man.extra("recon", rep.recon);
    man.extra("kl", rep.kl);
    man.write(out);
    return 0;
}

int cmd_train(const std::string& data, const std::string& vae_ckpt, const std::string& out,
              double ratio, TrainConfig tc, const std::vector<std::string>& ablate,
              const std::string& resume, const std::string& cfg_text) {
    nlohmann::json vmeta = require_vae_meta(vae_ckpt);

    auto corpus = load_corpus(data, tc.num_classes);
    const int edge = image_edge(corpus);
    tc.image_size = edge;
    tc.ablate = parse_ablations(ablate);

    ModelConfig mc;
    mc.vae = vmeta.at("vae").get<VaeConfig>();
    mc.image_size = edge;
    if (mc.encoder.stage_channels.size() > static_cast<std::size_t>(mc.vae.num_levels()))
        mc.encoder.stage_channels.resize(static_cast<std::size_t>(mc.vae.num_levels()));
    mc.validate();

    SemiSplit split = semi_split(corpus, ratio, tc.seed);
    SemiGdaModel model(mc, mix_seed(tc.seed, 0x5eed1217));
    auto vae_group = std::vector<CheckpointGroup>{{"vae", model.vae.params()}};
    load_checkpoint(vae_ckpt, vae_group);
    model.vae.set_trainable(false);

    Trainer trainer(model, tc);
    TrainResult res = trainer.run(split, out, resume);
    std::cout << "trained " << res.total_steps << " steps; best val dice " << res.best_val_dice
              << ", final val dice " << res.final_val_dice << "\n";

    RunManifest man("train", tc.seed, cfg_text,
                    nlohmann::json{{"data", data},
                                   {"vae_checkpoint", vae_ckpt},
                                   {"labeled_ratio", ratio},
                                   {"model", mc},
                                   {"train", trainer.config()}});
    man.add_output(res.loss_log);
    man.add_output(res.best_checkpoint);
    man.add_output(res.final_checkpoint);
    man.extra("best_val_dice", res.best_val_dice);
    man.extra("final_val_dice", res.final_val_dice);

    if (!split.test.empty()) {
        trainer.load_state(res.best_checkpoint);  // report test metrics at the best val state
        MetricsReport rep = trainer.evaluate(split.test);
        const std::string mjson = (fs::path(out) / "metrics_test.json").string();
        const std::string mcsv = (fs::path(out) / "metrics_test.csv").string();
        write_metrics_json(mjson, rep);
        write_metrics_csv(mcsv, rep);
        man.add_output(mjson);
        man.add_output(mcsv);
        man.extra("test_dice", rep.dice_pct);
        std::cout << "test (best checkpoint): dice " << rep.dice_pct << " iou " << rep.iou_pct
                  << " hd95 " << rep.hd95 << "\n";
    }
    man.write(out);
    return 0;
}

int cmd_eval(const std::string& data, const std::string& ckpt, const std::string& which,
             const std::string& out, std::uint64_t seed, const std::string& cfg_text) {
    Restored r = restore_trainer(ckpt);
    auto corpus = load_corpus(data, r.trainer->config().num_classes);
    const double ratio = r.meta.value("split_ratio", 0.0);
    const std::uint64_t split_seed = r.meta.value("split_seed", std::uint64_t(0));
    if (ratio <= 0.0)
        throw ConfigError("checkpoint carries no split provenance; evaluate through `train`");
    SemiSplit split = semi_split(corpus, ratio, split_seed);

    const std::vector<ImageSample>* subset = nullptr;
    if (which == "test") subset = &split.test;
    else if (which == "val") subset = &split.val;
    else if (which == "labeled") subset = &split.labeled;
    else throw ConfigError("unknown split '" + which + "' (valid: test, val, labeled)");

    MetricsReport rep = r.trainer->evaluate(*subset);
    fs::create_directories(out);
    const std::string mjson = (fs::path(out) / ("metrics_" + which + ".json")).string();
    const std::string mcsv = (fs::path(out) / ("metrics_" + which + ".csv")).string();
    write_metrics_json(mjson, rep);
    write_metrics_csv(mcsv, rep);
    std::cout << which << ": dice " << rep.dice_pct << " iou " << rep.iou_pct << " hd95 "
              << rep.hd95 << " over " << rep.per_sample.size() << " samples\n";

    RunManifest man("eval", seed, cfg_text,
                    nlohmann::json{{"data", data}, {"checkpoint", ckpt}, {"split", which}});
    man.add_output(mjson);
    man.add_output(mcsv);
    man.extra("dice", rep.dice_pct);
    man.extra("iou", rep.iou_pct);
    man.extra("hd95", rep.hd95);
    man.write(out);
    return 0;
}

int cmd_infer(const std::string& ckpt, const std::vector<std::string>& images,
              const std::string& out, std::uint64_t seed, const std::string& cfg_text) {
    Restored r = restore_trainer(ckpt);
    const int edge = r.model->cfg.image_size;
    fs::create_directories(out);
    RunManifest man("infer", seed, cfg_text,
                    nlohmann::json{{"checkpoint", ckpt}, {"images", images}});
    for (const std::string& path : images) {
        Tensor img = image_to_tensor(read_png(path));
        if (img.dim(1) != edge || img.dim(2) != edge)
            throw ShapeError("infer: image '" + path + "' is " + std::to_string(img.dim(2)) +
                             "x" + std::to_string(img.dim(1)) + ", model expects " +
                             std::to_string(edge) + "x" + std::to_string(edge));
        InferResult pred = r.trainer->infer(img);
        const std::string dst =
            (fs::path(out) / (fs::path(path).stem().string() + "_mask.png")).string();
        write_png(dst, tensor_to_mask(pred.hard, 255.0));
        man.add_output(dst);
        std::cout << path << " -> " << dst << "\n";
    }
    man.write(out);
    return 0;
}

int cmd_dump_features(const std::string& ckpt, const std::string& branch,
                      const std::vector<std::string>& images, const std::string& out,
                      std::uint64_t seed, const std::string& cfg_text) {
    if (branch != "image" && branch != "mask")
        throw ConfigError("unknown branch '" + branch + "' (valid: image, mask)");
    if (!fs::exists(ckpt)) throw IoError("checkpoint '" + ckpt + "' not found");

    // either a pretrained backbone (image branch only) or a full training state
    nlohmann::json meta = read_checkpoint_manifest(ckpt).at("meta");
    const std::string kind = meta.value("kind", std::string());
    std::unique_ptr<VaeBackbone> vae_only;
    Restored full;
    if (kind == "semigda-vae") {
        if (branch != "image")
            throw ConfigError("a backbone checkpoint has no mask branch; use a training checkpoint");
        VaeConfig vc = meta.at("vae").get<VaeConfig>();
        Rng rng(0);
        vae_only = std::make_unique<VaeBackbone>(vc, rng);
        auto group = std::vector<CheckpointGroup>{{"vae", vae_only->params()}};
        load_checkpoint(ckpt, group);
    } else if (kind == "semigda-train") {
        full = restore_trainer(ckpt);
    } else {
        throw ConfigError("'" + ckpt + "' is not a usable checkpoint");
    }

    fs::create_directories(out);
    RunManifest man("dump-features", seed, cfg_text,
                    nlohmann::json{{"checkpoint", ckpt}, {"branch", branch}, {"images", images}});
    for (const std::string& path : images) {
        Tensor img01 = image_to_tensor(read_png(path));
        Tensor x({1, 3, img01.dim(1), img01.dim(2)});
        for (int64_t i = 0; i < img01.numel(); ++i) x.data()[i] = img01.data()[i] * 2.0 - 1.0;

        nn::Session s;
        FeatureBank bank;
        ad::Var leaf = ad::make_leaf(x, false);
        if (vae_only) (void)vae_only->encode(s, leaf, &bank);
        else if (branch == "image") (void)full.model->vae.encode(s, leaf, &bank);
        else (void)full.model->encoder.encode(s, leaf, &bank);

        const std::string stem = fs::path(path).stem().string();
        for (std::size_t lv = 0; lv < bank.levels.size(); ++lv) {
            const std::string dst =
                (fs::path(out) /
                 (stem + "_" + branch + "_level" + std::to_string(lv) + ".png"))
                    .string();
            write_png(dst, feature_grid(bank.levels[lv]->value));
            man.add_output(dst);
        }
        std::cout << path << ": " << bank.levels.size() << " level grids\n";
    }
    man.write(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semigda: semi-supervised binary segmentation with a frozen generative backbone"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key-value config file; snapshotted verbatim into the manifest");

    // gen-data ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "write a deterministic synthetic corpus");
    SyntheticConfig sc;
    std::string gen_out;
    bool gen_force = false;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--n", sc.num_samples, "number of samples");
    gen->add_option("--size", sc.image_size, "square image size");
    gen->add_option("--min-shapes", sc.min_shapes, "minimum blobs per image");
    gen->add_option("--max-shapes", sc.max_shapes, "maximum blobs per image");
    gen->add_option("--noise", sc.noise_std, "additive noise sigma");
    gen->add_option("--texture", sc.texture, "background texture: flat|gradient|blotchy");
    gen->add_option("--seed", sc.seed, "corpus seed");
    gen->add_option("--factor", sc.downsample_factor, "backbone downsample factor to honor");
    gen->add_flag("--force", gen_force, "replace an existing non-empty output directory");

    // pretrain-vae -----------------------------------------------------------
    auto* pre = app.add_subcommand("pretrain-vae", "pretrain and freeze the generative backbone");
    std::string pre_data, pre_out;
    PretrainOptions po;
    int pre_factor = 8;
    pre->add_option("--data", pre_data, "corpus directory")
        ->envname("SEMIGDA_DATA_ROOT")
        ->required();
    pre->add_option("--out", pre_out, "output directory")->required();
    pre->add_option("--epochs", po.epochs, "pretraining epochs");
    pre->add_option("--lr", po.lr, "learning rate");
    pre->add_option("--kl-weight", po.kl_weight, "weight of the KL term");
    pre->add_option("--batch", po.batch_size, "batch size");
    pre->add_option("--seed", po.seed, "pretraining seed");
    pre->add_option("--classes", po.num_classes, "number of mask classes");
    pre->add_option("--factor", pre_factor, "downsample factor: 8 or 4");

    // train -------------------------------------------------------------------
    auto* trn = app.add_subcommand("train", "two-stage semi-supervised training");
    std::string trn_data, trn_vae, trn_out, trn_resume;
    double trn_ratio = 0.1;
    bool trn_det = true;
    std::vector<std::string> trn_ablate;
    TrainConfig tc;
    trn->add_option("--data", trn_data, "corpus directory")
        ->envname("SEMIGDA_DATA_ROOT")
        ->required();
    trn->add_option("--vae", trn_vae, "pretrained backbone checkpoint")->required();
    trn->add_option("--out", trn_out, "run directory")->required();
    trn->add_option("--labeled-ratio", trn_ratio, "fraction of train samples with labels");
    trn->add_option("--seed", tc.seed, "training seed");
    trn->add_option("--epochs1", tc.stage1_epochs, "stage-1 epochs");
    trn->add_option("--epochs2", tc.stage2_epochs, "stage-2 epochs");
    trn->add_option("--batch-labeled", tc.batch_labeled, "labeled batch size");
    trn->add_option("--batch-unlabeled", tc.batch_unlabeled, "unlabeled batch size");
    trn->add_option("--beta", tc.beta, "warm-up ceiling for the unsupervised weight");
    trn->add_option("--lr", tc.lr, "learning rate");
    trn->add_option("--smooth", tc.smooth, "dice smoothing constant");
    trn->add_option("--classes", tc.num_classes, "number of mask classes");
    trn->add_option("--ablate", trn_ablate,
                    "ablations: supervised_only no_unsup_prior no_unsup_seg "
                    "no_image_adapter no_mask_adapter");
    trn->add_option("--resume", trn_resume, "checkpoint to resume from");
    trn->add_flag("--deterministic,!--no-deterministic", trn_det,
                  "decode latent means during training (default) instead of sampling");

    // eval --------------------------------------------------------------------
    auto* evl = app.add_subcommand("eval", "evaluate a training checkpoint on a split");
    std::string evl_data, evl_ckpt, evl_split = "test", evl_out;
    std::uint64_t evl_seed = 0;
    evl->add_option("--data", evl_data, "corpus directory")
        ->envname("SEMIGDA_DATA_ROOT")
        ->required();
    evl->add_option("--ckpt", evl_ckpt, "training checkpoint")->required();
    evl->add_option("--split", evl_split, "test|val|labeled");
    evl->add_option("--out", evl_out, "output directory")->required();
    evl->add_option("--seed", evl_seed, "recorded in the manifest only");

    // infer -------------------------------------------------------------------
    auto* inf = app.add_subcommand("infer", "predict binary masks for images");
    std::string inf_ckpt, inf_out;
    std::vector<std::string> inf_images;
    std::uint64_t inf_seed = 0;
    inf->add_option("--ckpt", inf_ckpt, "training checkpoint")->required();
    inf->add_option("--images", inf_images, "input PNG files")->required()->expected(-1);
    inf->add_option("--out", inf_out, "output directory")->required();
    inf->add_option("--seed", inf_seed, "recorded in the manifest only");

    // dump-features -----------------------------------------------------------
    auto* dmp = app.add_subcommand("dump-features", "write per-level feature grids");
    std::string dmp_ckpt, dmp_out, dmp_branch = "image";
    std::vector<std::string> dmp_images;
    std::uint64_t dmp_seed = 0;
    dmp->add_option("--ckpt", dmp_ckpt, "backbone or training checkpoint")->required();
    dmp->add_option("--branch", dmp_branch, "image|mask feature bank");
    dmp->add_option("--images", dmp_images, "input PNG files")->required()->expected(-1);
    dmp->add_option("--out", dmp_out, "output directory")->required();
    dmp->add_option("--seed", dmp_seed, "recorded in the manifest only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const std::string cfg_text = config_snapshot(app);
        if (gen->parsed()) return cmd_gen_data(sc, gen_out, gen_force, cfg_text);
        if (pre->parsed()) {
            VaeConfig vc;
            if (pre_factor == 4) vc.stage_channels = {24, 32};
            else if (pre_factor != 8)
                throw ConfigError("--factor must be 8 or 4");
            return cmd_pretrain_vae(pre_data, pre_out, vc, po, cfg_text);
        }
        if (trn->parsed()) {
            tc.sample_latents = !trn_det;
            return cmd_train(trn_data, trn_vae, trn_out, trn_ratio, tc, trn_ablate, trn_resume,
                             cfg_text);
        }
        if (evl->parsed())
            return cmd_eval(evl_data, evl_ckpt, evl_split, evl_out, evl_seed, cfg_text);
        if (inf->parsed()) return cmd_infer(inf_ckpt, inf_images, inf_out, inf_seed, cfg_text);
        if (dmp->parsed())
            return cmd_dump_features(dmp_ckpt, dmp_branch, dmp_images, dmp_out, dmp_seed,
                                     cfg_text);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
