#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "protopart/rng.hpp"
#include "protopart/tensor.hpp"

namespace protopart {

// Parameter gradients accumulated by name during backward passes.
using GradStore = std::map<std::string, Tensor>;

struct LayerCache {
    Tensor input;
    std::vector<int64_t> argmax;  // maxpool winners, flat offset per output cell
};

// Inference never mutates a layer; per-call state lives in LayerCache so
// concurrent read-only forward passes stay safe.
class Layer {
public:
    virtual ~Layer() = default;

    const std::string& name() const { return name_; }
    virtual std::string kind() const = 0;
    virtual int64_t out_channels(int64_t in_channels) const { return in_channels; }

    // spatial geometry, used for receptive-field arithmetic
    virtual int64_t kernel_size() const { return 1; }
    virtual int64_t padding() const { return 0; }
    virtual int64_t stride() const { return 1; }

    virtual Tensor forward(const Tensor& x, LayerCache* cache) const = 0;
    // returns grad w.r.t. input; parameter grads accumulate into *grads
    virtual Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                            GradStore* grads) const = 0;
    // relevance propagation: z+ for convolutions, winner-takes-all for
    // pooling, identity for elementwise activations
    virtual Tensor lrp(const Tensor& rel_out, const LayerCache& cache) const = 0;

    virtual std::vector<std::pair<std::string, Tensor*>> params() { return {}; }

protected:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    std::string name_;
};

class Conv2d final : public Layer {
public:
    // ksize odd, stride 1, zero padding (ksize-1)/2 keeps spatial dims.
    // init == nullptr leaves weights at zero. Weights draw from the stream
    // as N(0, sqrt(2/fan_in)) in row-major order; bias starts at zero.
    Conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t ksize, bool bias,
           RngStream* init);

    std::string kind() const override { return ksize_ == 1 ? "conv1x1" : "conv"; }
    int64_t out_channels(int64_t) const override { return out_c_; }
    int64_t kernel_size() const override { return ksize_; }
    int64_t padding() const override { return (ksize_ - 1) / 2; }

    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    GradStore* grads) const override;
    Tensor lrp(const Tensor& rel_out, const LayerCache& cache) const override;

    std::vector<std::pair<std::string, Tensor*>> params() override;

    Tensor weight;  // [out_c, in_c, k, k]
    Tensor bias;    // [out_c] when has_bias
    bool has_bias;

private:
    int64_t in_c_, out_c_, ksize_;
};

class ReLU final : public Layer {
public:
    explicit ReLU(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "relu"; }
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    GradStore* grads) const override;
    Tensor lrp(const Tensor& rel_out, const LayerCache& cache) const override;
};

class Sigmoid final : public Layer {
public:
    explicit Sigmoid(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "sigmoid"; }
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    GradStore* grads) const override;
    Tensor lrp(const Tensor& rel_out, const LayerCache& cache) const override;
};

class MaxPool2 final : public Layer {
public:
    explicit MaxPool2(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "maxpool2"; }
    int64_t kernel_size() const override { return 2; }
    int64_t stride() const override { return 2; }
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    GradStore* grads) const override;
    Tensor lrp(const Tensor& rel_out, const LayerCache& cache) const override;
};

void accumulate_grad(GradStore& grads, const std::string& name, const Tensor& g);

}  // namespace protopart
