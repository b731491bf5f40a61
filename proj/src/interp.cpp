#include "protopart/interp.hpp"

#include <algorithm>
#include <cmath>

namespace protopart {

double cubic_kernel(double t) {
    constexpr double a = -0.5;
    double x = std::abs(t);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

inline int64_t clamp_idx(int64_t i, int64_t n) { return std::clamp<int64_t>(i, 0, n - 1); }

void resize_plane(const double* src, int64_t ih, int64_t iw, double* dst, int64_t oh, int64_t ow) {
    const double sy = static_cast<double>(ih) / static_cast<double>(oh);
    const double sx = static_cast<double>(iw) / static_cast<double>(ow);
    for (int64_t y = 0; y < oh; ++y) {
        double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        int64_t y0 = static_cast<int64_t>(std::floor(fy));
        double wy[4];
        for (int k = 0; k < 4; ++k) wy[k] = cubic_kernel(fy - static_cast<double>(y0 - 1 + k));
        for (int64_t x = 0; x < ow; ++x) {
            double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            int64_t x0 = static_cast<int64_t>(std::floor(fx));
            double wx[4];
            for (int k = 0; k < 4; ++k) wx[k] = cubic_kernel(fx - static_cast<double>(x0 - 1 + k));
            double acc = 0.0;
            for (int ky = 0; ky < 4; ++ky) {
                int64_t yy = clamp_idx(y0 - 1 + ky, ih);
                double row = 0.0;
                for (int kx = 0; kx < 4; ++kx) {
                    int64_t xx = clamp_idx(x0 - 1 + kx, iw);
                    row += wx[kx] * src[yy * iw + xx];
                }
                acc += wy[ky] * row;
            }
            dst[y * ow + x] = acc;
        }
    }
}

}  // namespace

Tensor bicubic_resize_hw(const Tensor& hw, int64_t oh, int64_t ow) {
    if (hw.ndim() != 2) throw ShapeMismatch("bicubic_resize_hw expects a [H,W] tensor");
    Tensor out({oh, ow});
    resize_plane(hw.data(), hw.dim(0), hw.dim(1), out.data(), oh, ow);
    return out;
}

Tensor bicubic_resize_chw(const Tensor& chw, int64_t oh, int64_t ow) {
    if (chw.ndim() != 3) throw ShapeMismatch("bicubic_resize_chw expects a [C,H,W] tensor");
    int64_t c = chw.dim(0), ih = chw.dim(1), iw = chw.dim(2);
    Tensor out({c, oh, ow});
    for (int64_t ch = 0; ch < c; ++ch)
        resize_plane(chw.data() + ch * ih * iw, ih, iw, out.data() + ch * oh * ow, oh, ow);
    return out;
}

}  // namespace protopart
