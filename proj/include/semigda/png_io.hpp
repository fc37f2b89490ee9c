#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semigda/tensor.hpp"

namespace semigda {

// Interleaved 8-bit image; channels is 1 (gray) or 3 (rgb).
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;  // row-major, size width*height*channels
};

// Reads any 8/16-bit gray/palette/rgb/rgba PNG, normalized to gray or rgb 8-bit
// (alpha stripped, 16-bit narrowed). Throws IoError on failure.
ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

// Float tensor bridges. Images are (3,H,W) in [0,1]; masks are (H,W) with the
// raw pixel value as the class id.
Tensor image_to_tensor(const ImageU8& img);               // gray input replicated to 3 channels
ImageU8 tensor_to_image(const Tensor& chw);               // clamps to [0,1]
Tensor mask_to_tensor(const ImageU8& img);                // requires 1 channel
ImageU8 tensor_to_mask(const Tensor& hw, double scale = 1.0);  // pixel = round(value*scale)

}  // namespace semigda
