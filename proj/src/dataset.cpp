#include "semigda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "semigda/common.hpp"
#include "semigda/png_io.hpp"
#include "semigda/rng.hpp"

namespace fs = std::filesystem;

namespace semigda {

namespace {
constexpr std::uint64_t kSampleTag = 0x5a3c6f21;
constexpr std::uint64_t kSplitTag = 0x9e127d43;
constexpr std::uint64_t kLabeledStream = 0x11;
constexpr std::uint64_t kUnlabeledStream = 0x22;
}  // namespace

std::vector<ImageSample> generate_synthetic_corpus(const SyntheticConfig& cfg) {
    if (cfg.num_samples <= 0) throw ConfigError("synthetic corpus: num_samples must be > 0");
    if (cfg.image_size <= 0 || cfg.image_size % cfg.downsample_factor != 0)
        throw ConfigError("synthetic corpus: image_size " + std::to_string(cfg.image_size) +
                          " not divisible by downsample factor " +
                          std::to_string(cfg.downsample_factor));
    if (cfg.min_shapes < 1 || cfg.max_shapes < cfg.min_shapes)
        throw ConfigError("synthetic corpus: invalid shape count range");
    if (cfg.texture != "flat" && cfg.texture != "gradient" && cfg.texture != "blotchy")
        throw ConfigError("synthetic corpus: unknown texture '" + cfg.texture + "'");

    const int64_t s = cfg.image_size;
    std::vector<ImageSample> corpus;
    corpus.reserve(static_cast<std::size_t>(cfg.num_samples));

    for (int i = 0; i < cfg.num_samples; ++i) {
        Rng rng(mix_seed(cfg.seed, kSampleTag, static_cast<std::uint64_t>(i)));

        // background: per-channel base + optional linear ramp + optional blobs
        const double base = rng.uniform(0.25, 0.50);
        double base_c[3], tint_c[3];
        for (int c = 0; c < 3; ++c) base_c[c] = base + rng.uniform(-0.05, 0.05);
        double grad_amp = 0.0, grad_cos = 1.0, grad_sin = 0.0;
        if (cfg.texture != "flat") {
            const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            grad_amp = rng.uniform(0.05, 0.20);
            grad_cos = std::cos(phi);
            grad_sin = std::sin(phi);
        }
        struct Blob { double cx, cy, sigma, amp; };
        std::vector<Blob> blobs;
        if (cfg.texture == "blotchy") {
            // broad washes plus compact impostors whose brightness overlaps a
            // weak foreground tint, so pointwise intensity cannot decide and
            // the sharp ellipse boundary has to
            for (int b = 0; b < 3; ++b)
                blobs.push_back({rng.uniform(0.0, double(s)), rng.uniform(0.0, double(s)),
                                 rng.uniform(0.25, 0.60) * double(s), rng.uniform(-0.08, 0.08)});
            const int n_imp = 2 + static_cast<int>(rng.below(3));
            for (int b = 0; b < n_imp; ++b)
                blobs.push_back({rng.uniform(0.0, double(s)), rng.uniform(0.0, double(s)),
                                 rng.uniform(0.06, 0.14) * double(s),
                                 (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.12, 0.30)});
        }

        // foreground ellipses
        struct Ellipse { double cx, cy, ra, rb, ct, st; };
        const int n_shapes = cfg.min_shapes +
                             static_cast<int>(rng.below(
                                 static_cast<std::uint64_t>(cfg.max_shapes - cfg.min_shapes + 1)));
        std::vector<Ellipse> shapes;
        for (int k = 0; k < n_shapes; ++k) {
            Ellipse e;
            e.cx = rng.uniform(0.2, 0.8) * double(s);
            e.cy = rng.uniform(0.2, 0.8) * double(s);
            e.ra = rng.uniform(0.09, 0.22) * double(s);
            e.rb = rng.uniform(0.09, 0.22) * double(s);
            const double th = rng.uniform(0.0, 3.14159265358979323846);
            e.ct = std::cos(th);
            e.st = std::sin(th);
            shapes.push_back(e);
        }
        const double offset = rng.uniform(0.12, 0.38);
        for (int c = 0; c < 3; ++c) tint_c[c] = offset + rng.uniform(-0.04, 0.04);

        ImageSample sample;
        sample.id = "s" + std::string(5 - std::min<std::size_t>(5, std::to_string(i).size()), '0') +
                    std::to_string(i);
        sample.labeled = true;
        sample.mask = Tensor({s, s});
        sample.image = Tensor({3, s, s});

        double* m = sample.mask.data();
        for (int64_t y = 0; y < s; ++y)
            for (int64_t x = 0; x < s; ++x) {
                bool fg = false;
                for (const auto& e : shapes) {
                    const double dx = double(x) - e.cx, dy = double(y) - e.cy;
                    const double u = (dx * e.ct + dy * e.st) / e.ra;
                    const double v = (-dx * e.st + dy * e.ct) / e.rb;
                    if (u * u + v * v <= 1.0) { fg = true; break; }
                }
                m[y * s + x] = fg ? 1.0 : 0.0;
            }

        double* img = sample.image.data();
        for (int64_t y = 0; y < s; ++y)
            for (int64_t x = 0; x < s; ++x) {
                double shade = 0.0;
                if (grad_amp > 0.0)
                    shade += grad_amp * ((double(x) * grad_cos + double(y) * grad_sin) / double(s) -
                                         0.5);
                for (const auto& b : blobs) {
                    const double dx = double(x) - b.cx, dy = double(y) - b.cy;
                    shade += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
                }
                const bool fg = m[y * s + x] > 0.5;
                for (int c = 0; c < 3; ++c) {
                    double v = base_c[c] + shade + (fg ? tint_c[c] : 0.0) +
                               rng.normal() * cfg.noise_std;
                    img[(c * s + y) * s + x] = std::min(std::max(v, 0.0), 1.0);
                }
            }
        corpus.push_back(std::move(sample));
    }
    return corpus;
}

void save_corpus(const std::vector<ImageSample>& corpus, const std::string& root) {
    fs::create_directories(fs::path(root) / "images");
    fs::create_directories(fs::path(root) / "masks");
    for (const auto& sample : corpus) {
        write_png((fs::path(root) / "images" / (sample.id + ".png")).string(),
                  tensor_to_image(sample.image));
        if (sample.mask.defined())
            write_png((fs::path(root) / "masks" / (sample.id + ".png")).string(),
                      tensor_to_mask(sample.mask));
    }
}

std::vector<ImageSample> load_corpus(const std::string& root, int num_classes) {
    const fs::path images = fs::path(root) / "images";
    const fs::path masks = fs::path(root) / "masks";
    if (!fs::is_directory(images))
        throw IngestError("corpus root has no images/ directory: " + root);

    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(images))
        if (entry.path().extension() == ".png") stems.push_back(entry.path().stem().string());
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw IngestError("no .png images under " + images.string());

    std::vector<ImageSample> corpus;
    corpus.reserve(stems.size());
    for (const auto& stem : stems) {
        ImageSample sample;
        sample.id = stem;
        sample.image = image_to_tensor(read_png((images / (stem + ".png")).string()));
        const fs::path mask_path = masks / (stem + ".png");
        if (fs::exists(mask_path)) {
            const ImageU8 mask_img = read_png(mask_path.string());
            if (mask_img.width != static_cast<int>(sample.image.dim(2)) ||
                mask_img.height != static_cast<int>(sample.image.dim(1)))
                throw IngestError("mask size mismatch for " + mask_path.string());
            sample.mask = mask_to_tensor(mask_img);
            for (int64_t i = 0; i < sample.mask.numel(); ++i)
                if (sample.mask.data()[i] >= num_classes)
                    throw IngestError("mask value >= class count in " + mask_path.string());
            sample.labeled = true;
        }
        corpus.push_back(std::move(sample));
    }
    return corpus;
}

SemiSplit semi_split(const std::vector<ImageSample>& corpus, double labeled_ratio,
                     std::uint64_t seed) {
    if (!(labeled_ratio > 0.0) || labeled_ratio > 1.0)
        throw ConfigError("labeled_ratio must be in (0,1]");
    const int64_t n = static_cast<int64_t>(corpus.size());
    const int64_t n_val = std::llround(0.1 * double(n));
    const int64_t n_test = std::llround(0.2 * double(n));
    const int64_t n_train = n - n_val - n_test;
    if (n_train <= 0) throw ConfigError("corpus too small to split");

    // masked samples can serve any role; maskless ones are unlabeled by nature
    std::vector<std::size_t> with_mask, without_mask;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        (corpus[i].mask.defined() ? with_mask : without_mask).push_back(i);

    Rng rng(mix_seed(seed, kSplitTag));
    rng.shuffle(with_mask);
    rng.shuffle(without_mask);

    if (static_cast<int64_t>(with_mask.size()) < n_val + n_test)
        throw ConfigError("not enough annotated samples for val/test splits");

    SemiSplit split;
    split.labeled_ratio = labeled_ratio;
    split.seed = seed;
    std::size_t cursor = 0;
    for (int64_t i = 0; i < n_val; ++i) split.val.push_back(corpus[with_mask[cursor++]]);
    for (int64_t i = 0; i < n_test; ++i) split.test.push_back(corpus[with_mask[cursor++]]);

    const int64_t n_labeled = std::llround(labeled_ratio * double(n_train));
    if (n_labeled < 1) throw ConfigError("labeled_ratio yields zero labeled samples");
    if (static_cast<int64_t>(with_mask.size() - cursor) < n_labeled)
        throw ConfigError("not enough annotated samples for the labeled split");

    for (int64_t i = 0; i < n_labeled; ++i) split.labeled.push_back(corpus[with_mask[cursor++]]);
    auto strip = [](ImageSample s) {
        s.mask = Tensor();
        s.labeled = false;
        return s;
    };
    while (cursor < with_mask.size()) split.unlabeled.push_back(strip(corpus[with_mask[cursor++]]));
    for (std::size_t i : without_mask) split.unlabeled.push_back(strip(corpus[i]));
    return split;
}

BatchIterator::BatchIterator(const SemiSplit& split, int batch_labeled, int batch_unlabeled,
                             std::uint64_t seed)
    : split_(&split), batch_labeled_(batch_labeled), batch_unlabeled_(batch_unlabeled),
      seed_(seed) {
    if (split.labeled.empty()) throw ConfigError("batch iterator: labeled set is empty");
    if (batch_labeled < 1) throw ConfigError("batch iterator: labeled batch size must be >= 1");
    if (batch_unlabeled < 0) throw ConfigError("batch iterator: negative unlabeled batch size");
    if (batch_unlabeled > 0 && split.unlabeled.empty())
        throw ConfigError("batch iterator: unlabeled batch requested but unlabeled set is empty");
    batches_per_epoch_ =
        (static_cast<std::int64_t>(split.labeled.size()) + batch_labeled - 1) / batch_labeled;
}

const ImageSample* BatchIterator::stream_item(const std::vector<ImageSample>& set,
                                              std::uint64_t tag, std::int64_t pos) const {
    const std::int64_t n = static_cast<std::int64_t>(set.size());
    const std::int64_t epoch = pos / n;
    Rng rng(mix_seed(seed_, tag, static_cast<std::uint64_t>(epoch)));
    const auto perm = rng.permutation(n);
    return &set[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos % n)])];
}

Batch BatchIterator::batch(std::int64_t t) const {
    Batch b;
    for (int i = 0; i < batch_labeled_; ++i)
        b.labeled.push_back(stream_item(split_->labeled, kLabeledStream,
                                        t * batch_labeled_ + i));
    for (int i = 0; i < batch_unlabeled_; ++i)
        b.unlabeled.push_back(stream_item(split_->unlabeled, kUnlabeledStream,
                                          t * batch_unlabeled_ + i));
    return b;
}

}  // namespace semigda
