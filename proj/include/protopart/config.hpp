#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace protopart {

// Scalar value inside a dataset parameter map. Strings that look like
// numbers are quoted in canonical form so the type survives a round trip.
using ParamValue = std::variant<int64_t, double, bool, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

struct AddOnLayer {
    std::string kind;          // conv1x1 | sigmoid | relu
    int64_t out_channels = 0;  // conv1x1 only
    bool operator==(const AddOnLayer&) const = default;
};

struct ModelSpec {
    struct Backbone {
        std::string arch = "tiny_cnn";
        std::string layer = "conv4";
        std::optional<std::string> pretrained_weights;
        bool operator==(const Backbone&) const = default;
    };
    struct Classifier {
        std::string kind = "protopnet";  // protopnet | prototree
        int64_t num_prototypes_per_class = 2;  // protopnet
        int64_t depth = 4;                     // prototree
        bool operator==(const Classifier&) const = default;
    };
    struct Similarity {
        std::string kind;  // protopnet_log | exp_neg_l2 (default depends on classifier)
        double epsilon = 1e-4;
        bool operator==(const Similarity&) const = default;
    };

    Backbone backbone;
    std::vector<AddOnLayer> add_on;
    Classifier classifier;
    Similarity similarity;
    bool compatibility_mode = false;
    int64_t prototype_dim = 32;

    bool operator==(const ModelSpec&) const = default;
};

struct TransformOp {
    std::string op;  // resize | normalize | random_hflip
    int64_t size = 0;                       // resize
    std::vector<double> mean, std_dev;      // normalize
    double prob = 0.5;                      // random_hflip
    bool operator==(const TransformOp&) const = default;
};

struct DataSpec {
    std::string train_set_name = "synthetic_shapes";
    ParamMap train_set_params;
    std::vector<TransformOp> transform;
    int64_t batch_size = 32;
    int64_t eval_batch_size = 64;
    int64_t num_classes = 3;

    bool operator==(const DataSpec&) const = default;
};

struct FreezeEntry {
    int64_t from = 0, to = 0;          // epoch range [from, to)
    std::vector<std::string> groups;   // subset of backbone/add_on/prototypes/decision
    bool operator==(const FreezeEntry&) const = default;
};

struct TrainSpec {
    int64_t num_epochs = 20;
    struct Optimizer {
        std::string kind = "sgd";  // sgd | adam
        double momentum = 0.9;
        double weight_decay = 0.0;
        double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;  // adam
        std::map<std::string, double> learning_rates;       // per parameter group
        bool operator==(const Optimizer&) const = default;
    };
    Optimizer optimizer;
    std::vector<FreezeEntry> freeze_schedule;
    std::map<std::string, double> loss;  // head-specific coefficients
    int64_t seed = 42;
    int64_t projection_epoch = -1;  // < 0 disables the mid-training projection
    struct Pruning {
        bool enabled = false;
        double weight_threshold = 1e-3;  // protopnet
        double leaf_threshold = 0.01;    // prototree
        bool operator==(const Pruning&) const = default;
    };
    Pruning pruning;
    int64_t checkpoint_every = 0;  // 0 writes only the final checkpoint

    bool operator==(const TrainSpec&) const = default;
};

struct VizSpec {
    struct Attribution {
        std::string type = "upsampling";  // upsampling | smoothgrad | backprop | prp | randgrads
        int64_t num_samples = 10;  // smoothgrad
        double noise_ratio = 0.2;  // smoothgrad
        int64_t seed = 0;          // randgrads
        bool operator==(const Attribution&) const = default;
    };
    struct View {
        std::string type = "bbox";  // bbox | crop | heatmap
        double percentile = 95.0;
        bool operator==(const View&) const = default;
    };
    Attribution attribution;
    View view;

    bool operator==(const VizSpec&) const = default;
};

enum class ConfigKind { Model, Data, Train, Viz };

// Parsing: full default fill plus validation. Throws ConfigSyntaxError on
// malformed YAML and SchemaError (with the dotted key path) on unknown keys,
// wrong types, or violated invariants.
ModelSpec parse_model_spec(const std::string& yaml_text);
DataSpec parse_data_spec(const std::string& yaml_text);
TrainSpec parse_train_spec(const std::string& yaml_text);
VizSpec parse_viz_spec(const std::string& yaml_text);

ModelSpec load_model_spec(const std::string& path);
DataSpec load_data_spec(const std::string& path);
TrainSpec load_train_spec(const std::string& path);
VizSpec load_viz_spec(const std::string& path);

// Canonical form: YAML with sorted keys, two-space indent, explicit
// defaults, block-style lists. The hash is the SHA-256 of the canonical
// bytes, hex encoded.
struct CanonicalConfig {
    std::string text;
    std::string sha256;
};

CanonicalConfig canonicalize(const ModelSpec&);
CanonicalConfig canonicalize(const DataSpec&);
CanonicalConfig canonicalize(const TrainSpec&);
CanonicalConfig canonicalize(const VizSpec&);

std::string sha256_hex(const std::string& bytes);

// Fixed snapshot filenames inside a training directory.
inline constexpr const char* kModelConfigFile = "model.yml";
inline constexpr const char* kDataConfigFile = "data.yml";
inline constexpr const char* kTrainConfigFile = "training.yml";
inline constexpr const char* kVizConfigFile = "visualization.yml";

void snapshot_configs(const ModelSpec&, const DataSpec&, const TrainSpec&, const VizSpec&,
                      const std::string& out_dir);

}  // namespace protopart
