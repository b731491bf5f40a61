#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "protopart/config.hpp"
#include "protopart/rng.hpp"
#include "protopart/tensor.hpp"

namespace protopart {

struct BoolMask {
    int64_t height = 0, width = 0;
    std::vector<uint8_t> data;  // row-major, 0/1

    bool at(int64_t h, int64_t w) const { return data[static_cast<size_t>(h * width + w)] != 0; }
    int64_t count() const;
    double fraction() const;
};

struct DatasetItem {
    Tensor image;  // [3,H,W], values in [0,1]
    int64_t label = 0;
    std::optional<BoolMask> mask;  // ground-truth object support
    std::string image_id;
};

struct Dataset {
    std::vector<DatasetItem> items;
    std::vector<std::string> class_names;

    int64_t size() const { return static_cast<int64_t>(items.size()); }
};

// Synthetic shapes: one colored shape per image (class decides shape and
// base color) on a textured background, with the exact pixel support as
// ground-truth mask. Per-image mask fractions stay within [0.02, 0.4] by
// construction of the scale range. The generator draws from a private
// stream derived as derive_seed(seed, "synth_data"), so the data depends
// only on its own seed.
Dataset synth_shapes(int64_t n, int64_t num_classes, int64_t image_size, uint64_t seed);

// Directory layout: root[/split]/<class_name>/<image files>. Labels follow
// sorted class directory names. image_id = "<class>/<file stem>"; optional
// masks live at root[/split]/masks/<image_id>.png (white = object).
Dataset load_image_folder(const std::string& root, const std::string& split);

using DatasetLoader = std::function<Dataset(const DataSpec&)>;
void register_dataset(const std::string& name, DatasetLoader loader);

// Dispatches on spec.train_set_name; throws UnknownDataset for names with
// no registered loader. Item order is sorted by image_id.
Dataset load_dataset(const DataSpec& spec);

// Preprocessing pipeline compiled from DataSpec.transform. Stochastic ops
// (random_hflip) consume the given stream; passing nullptr runs the
// deterministic subset only, which is what evaluation uses.
class TransformPipeline {
public:
    TransformPipeline() = default;
    explicit TransformPipeline(std::vector<TransformOp> ops) : ops_(std::move(ops)) {}

    Tensor apply(const Tensor& chw, RngStream* augment) const;
    const std::vector<TransformOp>& ops() const { return ops_; }

private:
    std::vector<TransformOp> ops_;
};

struct ImageBatch {
    Tensor data;                   // [N,C,H,W]
    std::vector<int64_t> labels;   // [N]
    std::vector<int64_t> indices;  // dataset positions, for provenance
};

// Shuffle order comes from the given stream; the final partial batch is
// kept. shuffle=false preserves dataset order and leaves the stream alone.
std::vector<ImageBatch> make_batches(const Dataset& dataset, const TransformPipeline& pipeline,
                                     int64_t batch_size, bool shuffle, RngStream* shuffle_rng,
                                     RngStream* augment_rng);

}  // namespace protopart
