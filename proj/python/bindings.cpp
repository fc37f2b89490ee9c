// Python surface: the numeric primitives (mask codec, metrics, schedule,
// dice loss) plus synthetic corpus generation. Training runs through the CLI.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "semigda/dataset.hpp"
#include "semigda/losses.hpp"
#include "semigda/mask_codec.hpp"
#include "semigda/metrics.hpp"
#include "semigda/tensor.hpp"

namespace py = pybind11;
using namespace semigda;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor2d(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Tensor t({a.shape(0), a.shape(1)});
    std::memcpy(t.data(), a.data(), sizeof(double) * static_cast<std::size_t>(t.numel()));
    return t;
}

py::array_t<double> numpy2d(const Tensor& t) {
    py::array_t<double> out({t.dim(0), t.dim(1)});
    std::memcpy(out.mutable_data(), t.data(),
                sizeof(double) * static_cast<std::size_t>(t.numel()));
    return out;
}

py::array_t<std::int64_t> numpy2d_int(const Tensor& t) {
    py::array_t<std::int64_t> out({t.dim(0), t.dim(1)});
    auto* dst = out.mutable_data();
    for (int64_t i = 0; i < t.numel(); ++i) dst[i] = static_cast<std::int64_t>(t.data()[i]);
    return out;
}

}  // namespace

PYBIND11_MODULE(_semigda, m) {
    m.doc() = "semi-supervised binary segmentation core";
    m.attr("__version__") = "0.1.0";

    m.def(
        "convert_mask",
        [](const Array& mask, int num_classes) {
            return numpy2d(mask_to_continuous(tensor2d(mask), num_classes));
        },
        py::arg("mask"), py::arg("num_classes") = 2,
        "Map integer class ids to the generator's continuous [-1,1] code.");

    m.def(
        "revert_mask",
        [](const Array& cont, int num_classes) {
            return numpy2d_int(continuous_to_mask(tensor2d(cont), num_classes));
        },
        py::arg("cont"), py::arg("num_classes") = 2,
        "Round a continuous code back to integer class ids (exact inverse on valid masks).");

    m.def(
        "soft_foreground",
        [](const Array& cont, int num_classes) {
            return numpy2d(soft_foreground(tensor2d(cont), num_classes));
        },
        py::arg("cont"), py::arg("num_classes") = 2,
        "Differentiable foreground probability of a continuous code.");

    m.def(
        "dice_score",
        [](const Array& pred, const Array& gt) { return dice_score(tensor2d(pred), tensor2d(gt)); },
        py::arg("pred"), py::arg("gt"), "Dice percentage between binary masks (both empty = 100).");

    m.def(
        "iou_score",
        [](const Array& pred, const Array& gt) { return iou_score(tensor2d(pred), tensor2d(gt)); },
        py::arg("pred"), py::arg("gt"), "IoU percentage between binary masks (both empty = 100).");

    m.def(
        "hd95", [](const Array& pred, const Array& gt) { return hd95(tensor2d(pred), tensor2d(gt)); },
        py::arg("pred"), py::arg("gt"),
        "95th-percentile symmetric boundary distance between binary masks.");

    m.def(
        "dice_loss",
        [](const Array& pred, const Array& target, double smooth) {
            return dice_loss_value(tensor2d(pred), tensor2d(target), smooth);
        },
        py::arg("pred"), py::arg("target"), py::arg("smooth") = 1.0,
        "Smoothed soft-Dice loss value between probability maps.");

    m.def("lambda_schedule", &lambda_schedule, py::arg("t"), py::arg("t_max"), py::arg("beta"),
          "Gaussian warm-up weight for the unsupervised terms.");

    m.def(
        "generate_corpus",
        [](const std::string& out_dir, int n, int size, std::uint64_t seed,
           const std::string& texture, double noise_std, int downsample_factor) {
            SyntheticConfig sc;
            sc.num_samples = n;
            sc.image_size = size;
            sc.seed = seed;
            sc.texture = texture;
            sc.noise_std = noise_std;
            sc.downsample_factor = downsample_factor;
            auto corpus = generate_synthetic_corpus(sc);
            save_corpus(corpus, out_dir);
            return static_cast<int>(corpus.size());
        },
        py::arg("out_dir"), py::arg("n") = 100, py::arg("size") = 64, py::arg("seed") = 0,
        py::arg("texture") = "gradient", py::arg("noise_std") = 0.06,
        py::arg("downsample_factor") = 8,
        "Write a deterministic synthetic corpus (images/ and masks/ PNG trees).");
}
