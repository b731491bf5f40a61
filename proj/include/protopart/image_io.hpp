#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "protopart/tensor.hpp"

namespace protopart {

// 8-bit PNG/JPEG codecs. Images are exchanged as [3,H,W] double tensors with
// values in [0,1], RGB channel order.

Tensor read_image_rgb(const std::string& path);
void write_image_rgb(const std::string& path, const Tensor& chw);

// Grayscale mask: pixels >= 128 are true.
std::vector<uint8_t> read_mask_png(const std::string& path, int64_t* height, int64_t* width);
void write_mask_png(const std::string& path, const std::vector<uint8_t>& mask, int64_t height,
                    int64_t width);

}  // namespace protopart
