#include "protopart/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "protopart/errors.hpp"

namespace protopart {

void accumulate_grad(GradStore& grads, const std::string& name, const Tensor& g) {
    auto it = grads.find(name);
    if (it == grads.end()) {
        grads.emplace(name, g);
        return;
    }
    if (!it->second.same_shape(g)) throw ShapeMismatch("gradient shape changed for " + name);
    double* dst = it->second.data();
    const double* src = g.data();
    for (int64_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t ksize, bool bias,
               RngStream* init)
    : Layer(std::move(name)),
      weight({out_c, in_c, ksize, ksize}),
      has_bias(bias),
      in_c_(in_c),
      out_c_(out_c),
      ksize_(ksize) {
    if (ksize % 2 == 0) throw ShapeMismatch("conv kernel size must be odd");
    if (bias) this->bias = Tensor({out_c});
    if (init) {
        double sigma = std::sqrt(2.0 / static_cast<double>(in_c * ksize * ksize));
        for (double& v : weight.vec()) v = init->next_normal(0.0, sigma);
    }
}

std::vector<std::pair<std::string, Tensor*>> Conv2d::params() {
    std::vector<std::pair<std::string, Tensor*>> out = {{name_ + ".weight", &weight}};
    if (has_bias) out.emplace_back(name_ + ".bias", &bias);
    return out;
}

Tensor Conv2d::forward(const Tensor& x, LayerCache* cache) const {
    if (x.ndim() != 4 || x.dim(1) != in_c_)
        throw ShapeMismatch("conv " + name_ + ": expected [N," + std::to_string(in_c_) + ",H,W]");
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t pad = padding();
    Tensor y({n, out_c_, h, w});
    for (int64_t b = 0; b < n; ++b) {
        for (int64_t oc = 0; oc < out_c_; ++oc) {
            double* out_plane = y.data() + ((b * out_c_ + oc) * h) * w;
            double b0 = has_bias ? bias[oc] : 0.0;
            std::fill(out_plane, out_plane + h * w, b0);
            for (int64_t ic = 0; ic < in_c_; ++ic) {
                const double* in_plane = x.data() + ((b * in_c_ + ic) * h) * w;
                for (int64_t ky = 0; ky < ksize_; ++ky) {
                    int64_t dy = ky - pad;
                    int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
                    for (int64_t kx = 0; kx < ksize_; ++kx) {
                        int64_t dx = kx - pad;
                        int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
                        double wv = weight.at(oc, ic, ky, kx);
                        if (wv == 0.0) continue;
                        for (int64_t yy = y0; yy < y1; ++yy) {
                            double* orow = out_plane + yy * w;
                            const double* irow = in_plane + (yy + dy) * w + dx;
                            for (int64_t xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
                        }
                    }
                }
            }
        }
    }
    if (cache) cache->input = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, const LayerCache& cache, GradStore* grads) const {
    const Tensor& x = cache.input;
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t pad = padding();
    Tensor gx({n, in_c_, h, w});
    Tensor gw({out_c_, in_c_, ksize_, ksize_});
    Tensor gb({out_c_});
    for (int64_t b = 0; b < n; ++b) {
        for (int64_t oc = 0; oc < out_c_; ++oc) {
            const double* go_plane = grad_out.data() + ((b * out_c_ + oc) * h) * w;
            if (has_bias) {
                double acc = 0.0;
                for (int64_t i = 0; i < h * w; ++i) acc += go_plane[i];
                gb[oc] += acc;
            }
            for (int64_t ic = 0; ic < in_c_; ++ic) {
                const double* in_plane = x.data() + ((b * in_c_ + ic) * h) * w;
                double* gx_plane = gx.data() + ((b * in_c_ + ic) * h) * w;
                for (int64_t ky = 0; ky < ksize_; ++ky) {
                    int64_t dy = ky - pad;
                    int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
                    for (int64_t kx = 0; kx < ksize_; ++kx) {
                        int64_t dx = kx - pad;
                        int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
                        double wv = weight.at(oc, ic, ky, kx);
                        double wacc = 0.0;
                        for (int64_t yy = y0; yy < y1; ++yy) {
                            const double* gorow = go_plane + yy * w;
                            const double* irow = in_plane + (yy + dy) * w + dx;
                            double* gxrow = gx_plane + (yy + dy) * w + dx;
                            for (int64_t xx = x0; xx < x1; ++xx) {
                                wacc += gorow[xx] * irow[xx];
                                gxrow[xx] += wv * gorow[xx];
                            }
                        }
                        gw.at(oc, ic, ky, kx) += wacc;
                    }
                }
            }
        }
    }
    if (grads) {
        accumulate_grad(*grads, name_ + ".weight", gw);
        if (has_bias) accumulate_grad(*grads, name_ + ".bias", gb);
    }
    return gx;
}

Tensor Conv2d::lrp(const Tensor& rel_out, const LayerCache& cache) const {
    const Tensor& x = cache.input;
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t pad = padding();
    constexpr double stab = 1e-9;

    // denominators: forward pass with positive weights only, no bias
    Tensor denom({n, out_c_, h, w});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t oc = 0; oc < out_c_; ++oc) {
            double* out_plane = denom.data() + ((b * out_c_ + oc) * h) * w;
            for (int64_t ic = 0; ic < in_c_; ++ic) {
                const double* in_plane = x.data() + ((b * in_c_ + ic) * h) * w;
                for (int64_t ky = 0; ky < ksize_; ++ky) {
                    int64_t dy = ky - pad;
                    int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
                    for (int64_t kx = 0; kx < ksize_; ++kx) {
                        int64_t dx = kx - pad;
                        int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
                        double wv = std::max(weight.at(oc, ic, ky, kx), 0.0);
                        if (wv == 0.0) continue;
                        for (int64_t yy = y0; yy < y1; ++yy) {
                            double* orow = out_plane + yy * w;
                            const double* irow = in_plane + (yy + dy) * w + dx;
                            for (int64_t xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
                        }
                    }
                }
            }
        }

    // coefficient per output cell, sign-stabilized
    Tensor coeff({n, out_c_, h, w});
    for (int64_t i = 0; i < denom.numel(); ++i) {
        double z = denom[i];
        double stabilized = z >= 0.0 ? z + stab : z - stab;
        coeff[i] = rel_out[i] / stabilized;
    }

    // redistribute: R_in = x * (W+ convolved-transpose coeff)
    Tensor rel_in({n, in_c_, h, w});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t oc = 0; oc < out_c_; ++oc) {
            const double* co_plane = coeff.data() + ((b * out_c_ + oc) * h) * w;
            for (int64_t ic = 0; ic < in_c_; ++ic) {
                double* ri_plane = rel_in.data() + ((b * in_c_ + ic) * h) * w;
                for (int64_t ky = 0; ky < ksize_; ++ky) {
                    int64_t dy = ky - pad;
                    int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
                    for (int64_t kx = 0; kx < ksize_; ++kx) {
                        int64_t dx = kx - pad;
                        int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
                        double wv = std::max(weight.at(oc, ic, ky, kx), 0.0);
                        if (wv == 0.0) continue;
                        for (int64_t yy = y0; yy < y1; ++yy) {
                            const double* corow = co_plane + yy * w;
                            double* rirow = ri_plane + (yy + dy) * w + dx;
                            for (int64_t xx = x0; xx < x1; ++xx) rirow[xx] += wv * corow[xx];
                        }
                    }
                }
            }
        }
    for (int64_t i = 0; i < rel_in.numel(); ++i) rel_in[i] *= x[i];
    return rel_in;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x, LayerCache* cache) const {
    Tensor y = x;
    for (double& v : y.vec()) v = std::max(v, 0.0);
    if (cache) cache->input = x;
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out, const LayerCache& cache, GradStore*) const {
    Tensor gx = grad_out;
    const Tensor& x = cache.input;
    for (int64_t i = 0; i < gx.numel(); ++i)
        if (x[i] <= 0.0) gx[i] = 0.0;
    return gx;
}

Tensor ReLU::lrp(const Tensor& rel_out, const LayerCache&) const { return rel_out; }

// ---------------------------------------------------------------------------
// Sigmoid

Tensor Sigmoid::forward(const Tensor& x, LayerCache* cache) const {
    Tensor y = x;
    for (double& v : y.vec()) v = 1.0 / (1.0 + std::exp(-v));
    if (cache) cache->input = x;
    return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out, const LayerCache& cache, GradStore*) const {
    Tensor gx = grad_out;
    const Tensor& x = cache.input;
    for (int64_t i = 0; i < gx.numel(); ++i) {
        double y = 1.0 / (1.0 + std::exp(-x[i]));
        gx[i] *= y * (1.0 - y);
    }
    return gx;
}

Tensor Sigmoid::lrp(const Tensor& rel_out, const LayerCache&) const { return rel_out; }

// ---------------------------------------------------------------------------
// MaxPool2

Tensor MaxPool2::forward(const Tensor& x, LayerCache* cache) const {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t oh = h / 2, ow = w / 2;
    Tensor y({n, c, oh, ow});
    std::vector<int64_t> argmax(static_cast<size_t>(n * c * oh * ow));
    int64_t out_idx = 0;
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double* in_plane = x.data() + ((b * c + ch) * h) * w;
            for (int64_t yy = 0; yy < oh; ++yy)
                for (int64_t xx = 0; xx < ow; ++xx) {
                    double best = -std::numeric_limits<double>::infinity();
                    int64_t best_off = 0;
                    // scan order (h,w) with strict > keeps the lowest index on ties
                    for (int64_t dy = 0; dy < 2; ++dy)
                        for (int64_t dx = 0; dx < 2; ++dx) {
                            int64_t off = (2 * yy + dy) * w + (2 * xx + dx);
                            if (in_plane[off] > best) {
                                best = in_plane[off];
                                best_off = off;
                            }
                        }
                    y[out_idx] = best;
                    argmax[static_cast<size_t>(out_idx)] = best_off;
                    ++out_idx;
                }
        }
    if (cache) {
        cache->input = x;
        cache->argmax = std::move(argmax);
    }
    return y;
}

Tensor MaxPool2::backward(const Tensor& grad_out, const LayerCache& cache, GradStore*) const {
    const Tensor& x = cache.input;
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t oh = h / 2, ow = w / 2;
    Tensor gx({n, c, h, w});
    int64_t out_idx = 0;
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            double* gx_plane = gx.data() + ((b * c + ch) * h) * w;
            for (int64_t i = 0; i < oh * ow; ++i, ++out_idx)
                gx_plane[cache.argmax[static_cast<size_t>(out_idx)]] += grad_out[out_idx];
        }
    return gx;
}

Tensor MaxPool2::lrp(const Tensor& rel_out, const LayerCache& cache) const {
    // winner takes all, mirrors the forward tie-break
    return backward(rel_out, cache, nullptr);
}

}  // namespace protopart
