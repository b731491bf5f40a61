#include "protopart/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>

#include "protopart/errors.hpp"
#include "protopart/image_io.hpp"
#include "protopart/interp.hpp"

namespace fs = std::filesystem;

namespace protopart {

int64_t BoolMask::count() const {
    int64_t c = 0;
    for (uint8_t v : data) c += v != 0;
    return c;
}

double BoolMask::fraction() const {
    return static_cast<double>(count()) / static_cast<double>(height * width);
}

namespace {

constexpr const char* kShapeNames[5] = {"circle", "square", "triangle", "cross", "star"};

// class base colors, RGB
constexpr double kPalette[5][3] = {
    {0.85, 0.15, 0.15},  // circle: red
    {0.15, 0.80, 0.20},  // square: green
    {0.20, 0.30, 0.90},  // triangle: blue
    {0.90, 0.85, 0.20},  // cross: yellow
    {0.85, 0.20, 0.80},  // star: magenta
};

bool shape_member(int shape, double dx, double dy) {
    switch (shape) {
        case 0:  // circle
            return dx * dx + dy * dy <= 1.0;
        case 1:  // square
            return std::abs(dx) <= 0.9 && std::abs(dy) <= 0.9;
        case 2: {  // triangle, apex up
            if (dy < -0.9 || dy > 0.9) return false;
            double half_width = 0.9 * (dy + 0.9) / 1.8;
            return std::abs(dx) <= half_width;
        }
        case 3:  // cross
            return (std::abs(dx) <= 0.3 && std::abs(dy) <= 0.95) ||
                   (std::abs(dy) <= 0.3 && std::abs(dx) <= 0.95);
        case 4: {  // five-point star
            double rr = std::sqrt(dx * dx + dy * dy);
            if (rr > 1.0) return false;
            double theta = std::atan2(dy, dx) + std::numbers::pi / 2.0;  // point up
            double t = theta * 5.0 / (2.0 * std::numbers::pi);
            t -= std::floor(t);
            double spike = std::abs(2.0 * t - 1.0);
            double boundary = 0.45 + 0.55 * spike;
            return rr <= boundary;
        }
        default:
            return false;
    }
}

}  // namespace

Dataset synth_shapes(int64_t n, int64_t num_classes, int64_t image_size, uint64_t seed) {
    if (num_classes < 2 || num_classes > 5)
        throw ValueOutOfRange("synthetic_shapes supports 2..5 classes, got " +
                              std::to_string(num_classes));
    if (n < num_classes)
        throw ValueOutOfRange("synthetic_shapes needs n >= num_classes");
    if (image_size < 16) throw ValueOutOfRange("synthetic_shapes needs image_size >= 16");

    RngStream rng(derive_seed(seed, "synth_data"));
    const int64_t s = image_size;
    Dataset ds;
    for (int64_t c = 0; c < num_classes; ++c) ds.class_names.emplace_back(kShapeNames[c]);

    for (int64_t i = 0; i < n; ++i) {
        DatasetItem item;
        item.label = i % num_classes;
        char id[32];
        std::snprintf(id, sizeof(id), "synth_%06lld", static_cast<long long>(i));
        item.image_id = id;

        // background: per-channel base + one sinusoid + gray speckle
        double base[3], phase[3];
        for (int ch = 0; ch < 3; ++ch) base[ch] = 0.10 + 0.35 * rng.next_double();
        double amp = 0.03 + 0.07 * rng.next_double();
        double fx = 0.2 + 0.6 * rng.next_double();
        double fy = 0.2 + 0.6 * rng.next_double();
        for (int ch = 0; ch < 3; ++ch) phase[ch] = 2.0 * std::numbers::pi * rng.next_double();

        item.image = Tensor({3, s, s});
        for (int64_t y = 0; y < s; ++y)
            for (int64_t x = 0; x < s; ++x) {
                double speckle = 0.04 * (2.0 * rng.next_double() - 1.0);
                for (int ch = 0; ch < 3; ++ch) {
                    double v = base[ch] +
                               amp * std::sin(fx * static_cast<double>(x) +
                                              fy * static_cast<double>(y) + phase[ch]) +
                               speckle;
                    item.image.at(ch, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }

        // shape color: class base with a small jitter
        int shape = static_cast<int>(item.label % 5);
        double color[3];
        for (int ch = 0; ch < 3; ++ch) {
            double jitter = 0.08 * (2.0 * rng.next_double() - 1.0);
            color[ch] = std::clamp(kPalette[shape][ch] + jitter, 0.0, 1.0);
        }

        // geometry: scale in [0.18, 0.33] * image_size keeps the mask
        // fraction inside [0.02, 0.4] for every shape kind
        double radius = (0.18 + 0.15 * rng.next_double()) * static_cast<double>(s);
        double lo = radius, hi = static_cast<double>(s - 1) - radius;
        double cx = lo + (hi - lo) * rng.next_double();
        double cy = lo + (hi - lo) * rng.next_double();

        BoolMask mask;
        mask.height = s;
        mask.width = s;
        mask.data.assign(static_cast<size_t>(s * s), 0);
        for (int64_t y = 0; y < s; ++y)
            for (int64_t x = 0; x < s; ++x) {
                double dx = (static_cast<double>(x) - cx) / radius;
                double dy = (static_cast<double>(y) - cy) / radius;
                if (shape_member(shape, dx, dy)) {
                    mask.data[static_cast<size_t>(y * s + x)] = 1;
                    for (int ch = 0; ch < 3; ++ch) item.image.at(ch, y, x) = color[ch];
                }
            }
        item.mask = std::move(mask);
        ds.items.push_back(std::move(item));
    }
    return ds;
}

Dataset load_image_folder(const std::string& root, const std::string& split) {
    fs::path base = fs::path(root);
    if (!split.empty()) base /= split;
    if (!fs::is_directory(base)) throw IoError("image_folder root not found: " + base.string());

    std::vector<std::string> class_dirs;
    for (const auto& entry : fs::directory_iterator(base)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        if (name == "masks") continue;
        class_dirs.push_back(name);
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw IoError("image_folder has no class directories: " + base.string());

    auto is_image_file = [](const fs::path& p) {
        std::string ext = p.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
    };

    Dataset ds;
    ds.class_names = class_dirs;
    std::set<std::string> seen_ids;
    for (size_t label = 0; label < class_dirs.size(); ++label) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(base / class_dirs[label]))
            if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            DatasetItem item;
            item.label = static_cast<int64_t>(label);
            item.image_id = class_dirs[label] + "/" + file.stem().string();
            if (!seen_ids.insert(item.image_id).second)
                throw IoError("duplicate image id: " + item.image_id);
            item.image = read_image_rgb(file.string());
            fs::path mask_path = base / "masks" / (item.image_id + ".png");
            if (fs::exists(mask_path)) {
                BoolMask mask;
                mask.data = read_mask_png(mask_path.string(), &mask.height, &mask.width);
                if (mask.height != item.image.dim(1) || mask.width != item.image.dim(2))
                    throw ShapeMismatch("mask dims differ from image: " + item.image_id);
                item.mask = std::move(mask);
            }
            ds.items.push_back(std::move(item));
        }
    }
    std::sort(ds.items.begin(), ds.items.end(),
              [](const DatasetItem& a, const DatasetItem& b) { return a.image_id < b.image_id; });
    return ds;
}

namespace {

std::map<std::string, DatasetLoader>& dataset_registry() {
    static std::map<std::string, DatasetLoader> reg;
    return reg;
}

int64_t param_int(const DataSpec& spec, const char* key, int64_t def) {
    auto it = spec.train_set_params.find(key);
    if (it == spec.train_set_params.end()) return def;
    return std::get<int64_t>(it->second);
}

std::string param_str(const DataSpec& spec, const char* key) {
    auto it = spec.train_set_params.find(key);
    if (it == spec.train_set_params.end()) return {};
    return std::get<std::string>(it->second);
}

}  // namespace

void register_dataset(const std::string& name, DatasetLoader loader) {
    dataset_registry()[name] = std::move(loader);
}

Dataset load_dataset(const DataSpec& spec) {
    if (spec.train_set_name == "synthetic_shapes")
        return synth_shapes(param_int(spec, "n", 300), spec.num_classes,
                            param_int(spec, "image_size", 32),
                            static_cast<uint64_t>(param_int(spec, "seed", 7)));
    if (spec.train_set_name == "image_folder")
        return load_image_folder(param_str(spec, "root"), param_str(spec, "split"));
    auto it = dataset_registry().find(spec.train_set_name);
    if (it == dataset_registry().end())
        throw UnknownDataset("no dataset registered under '" + spec.train_set_name + "'");
    return it->second(spec);
}

Tensor TransformPipeline::apply(const Tensor& chw, RngStream* augment) const {
    Tensor img = chw;
    for (const auto& op : ops_) {
        if (op.op == "resize") {
            img = bicubic_resize_chw(img, op.size, op.size);
        } else if (op.op == "normalize") {
            int64_t c = img.dim(0), hw = img.dim(1) * img.dim(2);
            for (int64_t ch = 0; ch < c; ++ch) {
                double m = op.mean[static_cast<size_t>(ch)];
                double s = op.std_dev[static_cast<size_t>(ch)];
                double* p = img.data() + ch * hw;
                for (int64_t i = 0; i < hw; ++i) p[i] = (p[i] - m) / s;
            }
        } else if (op.op == "random_hflip") {
            if (!augment) continue;
            if (augment->next_double() < op.prob) {
                int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
                for (int64_t ch = 0; ch < c; ++ch)
                    for (int64_t y = 0; y < h; ++y)
                        for (int64_t x = 0; x < w / 2; ++x)
                            std::swap(img.at(ch, y, x), img.at(ch, y, w - 1 - x));
            }
        }
    }
    return img;
}

std::vector<ImageBatch> make_batches(const Dataset& dataset, const TransformPipeline& pipeline,
                                     int64_t batch_size, bool shuffle, RngStream* shuffle_rng,
                                     RngStream* augment_rng) {
    if (batch_size < 1) throw ValueOutOfRange("batch_size must be >= 1");
    std::vector<int64_t> order(dataset.items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
    if (shuffle) {
        if (!shuffle_rng) throw ValueOutOfRange("shuffle requested without a stream");
        protopart::shuffle(order, *shuffle_rng);
    }

    std::vector<ImageBatch> batches;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
        size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
        ImageBatch batch;
        batch.indices.assign(order.begin() + static_cast<int64_t>(start),
                             order.begin() + static_cast<int64_t>(end));
        std::vector<Tensor> transformed;
        transformed.reserve(batch.indices.size());
        for (int64_t idx : batch.indices) {
            const DatasetItem& item = dataset.items[static_cast<size_t>(idx)];
            transformed.push_back(pipeline.apply(item.image, augment_rng));
            batch.labels.push_back(item.label);
        }
        const Tensor& first = transformed.front();
        int64_t n = static_cast<int64_t>(transformed.size());
        batch.data = Tensor({n, first.dim(0), first.dim(1), first.dim(2)});
        int64_t stride = first.numel();
        for (int64_t i = 0; i < n; ++i) {
            if (!transformed[static_cast<size_t>(i)].same_shape(first))
                throw ShapeMismatch("images in a batch must share dimensions");
            std::copy(transformed[static_cast<size_t>(i)].vec().begin(),
                      transformed[static_cast<size_t>(i)].vec().end(),
                      batch.data.data() + i * stride);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace protopart
