#pragma once

#include "protopart/tensor.hpp"

namespace protopart {

// Catmull-Rom bicubic kernel (a = -0.5). Fixed here so resampling is
// reproducible across implementations:
//   w(t) = (a+2)|t|^3 - (a+3)|t|^2 + 1          for |t| <= 1
//   w(t) = a|t|^3 - 5a|t|^2 + 8a|t| - 4a        for 1 < |t| < 2
//   w(t) = 0                                     otherwise
// Source coordinate of output pixel i: (i + 0.5) * in/out - 0.5, with
// clamped border indices.
double cubic_kernel(double t);

// [H,W] -> [oh,ow]
Tensor bicubic_resize_hw(const Tensor& hw, int64_t oh, int64_t ow);
// [C,H,W] -> [C,oh,ow], each channel independently
Tensor bicubic_resize_chw(const Tensor& chw, int64_t oh, int64_t ow);

}  // namespace protopart
