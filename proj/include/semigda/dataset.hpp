#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semigda/tensor.hpp"

namespace semigda {

// One training/eval sample. `image` is (3,H,W) in [0,1]; `mask` is (H,W)
// integer class ids and is only defined when the sample carries annotation.
struct ImageSample {
    std::string id;
    Tensor image;
    Tensor mask;
    bool labeled = false;
};

struct SyntheticConfig {
    int num_samples = 100;
    int image_size = 64;
    int min_shapes = 1;
    int max_shapes = 3;
    double noise_std = 0.06;
    std::string texture = "gradient";  // flat | gradient | blotchy
    std::uint64_t seed = 0;
    int downsample_factor = 8;  // image_size must divide by this
};

// Deterministic ellipse-on-textured-background corpus. Foreground is class 1,
// background class 0; every mask is non-empty. Image intensity correlates
// with the mask but per-image brightness, tint, gradient and noise keep plain
// thresholding from solving the task.
std::vector<ImageSample> generate_synthetic_corpus(const SyntheticConfig& cfg);

// On-disk layout: <root>/images/<stem>.png (rgb), <root>/masks/<stem>.png
// (single-channel, pixel value = class id). A missing mask file makes the
// sample unlabeled.
void save_corpus(const std::vector<ImageSample>& corpus, const std::string& root);
std::vector<ImageSample> load_corpus(const std::string& root, int num_classes = 2);

struct SemiSplit {
    std::vector<ImageSample> labeled;
    std::vector<ImageSample> unlabeled;  // masks stripped
    std::vector<ImageSample> val;
    std::vector<ImageSample> test;
    double labeled_ratio = 0.0;
    std::uint64_t seed = 0;
};

// Deterministic split: 10% val, 20% test (rounded), remainder train;
// round(ratio * train) labeled. Unlabeled samples have their masks removed
// so no downstream code can peek at them.
SemiSplit semi_split(const std::vector<ImageSample>& corpus, double labeled_ratio,
                     std::uint64_t seed);

struct Batch {
    std::vector<const ImageSample*> labeled;
    std::vector<const ImageSample*> unlabeled;
};

// Stateless batch stream: batch t is a pure function of (seed, t), so an
// interrupted run resumes with exactly the batches the uninterrupted run
// would have seen. Each set is cycled as an infinite stream of reshuffled
// epochs; epoch length is defined by the labeled set (ceil(N_l / batch_l)).
class BatchIterator {
public:
    BatchIterator(const SemiSplit& split, int batch_labeled, int batch_unlabeled,
                  std::uint64_t seed);
    Batch batch(std::int64_t t) const;
    std::int64_t batches_per_epoch() const { return batches_per_epoch_; }

private:
    const ImageSample* stream_item(const std::vector<ImageSample>& set, std::uint64_t tag,
                                   std::int64_t pos) const;

    const SemiSplit* split_;
    int batch_labeled_, batch_unlabeled_;
    std::uint64_t seed_;
    std::int64_t batches_per_epoch_;
};

}  // namespace semigda
