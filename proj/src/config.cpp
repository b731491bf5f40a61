#include "protopart/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "protopart/errors.hpp"

namespace protopart {
namespace {

const std::set<std::string> kParamGroups = {"backbone", "add_on", "prototypes", "decision"};

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw SchemaError(path.empty() ? "(root)" : path, msg);
}

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

YAML::Node load_root(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigSyntaxError(std::string("YAML parse error: ") + e.what());
    }
    if (!root.IsDefined() || root.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) fail("", "expected a mapping at document root");
    return root;
}

void check_keys(const YAML::Node& map, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& kv : map) {
        std::string key = kv.first.as<std::string>();
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) fail(join(path, key), "unknown key");
    }
}

bool is_present(const YAML::Node& n) { return n.IsDefined() && !n.IsNull(); }

int64_t as_int(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path, "expected an integer");
    try {
        return n.as<int64_t>();
    } catch (const YAML::Exception&) {
        fail(path, "expected an integer, got '" + n.Scalar() + "'");
    }
}

double as_dbl(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path, "expected a number");
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        fail(path, "expected a number, got '" + n.Scalar() + "'");
    }
}

bool as_bool(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path, "expected true or false");
    const std::string& s = n.Scalar();
    if (s == "true") return true;
    if (s == "false") return false;
    fail(path, "expected true or false, got '" + s + "'");
}

std::string as_str(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path, "expected a string");
    return n.Scalar();
}

int64_t get_int(const YAML::Node& map, const char* key, const std::string& path, int64_t def) {
    YAML::Node n = map[key];
    return is_present(n) ? as_int(n, join(path, key)) : def;
}

double get_dbl(const YAML::Node& map, const char* key, const std::string& path, double def) {
    YAML::Node n = map[key];
    return is_present(n) ? as_dbl(n, join(path, key)) : def;
}

bool get_bool(const YAML::Node& map, const char* key, const std::string& path, bool def) {
    YAML::Node n = map[key];
    return is_present(n) ? as_bool(n, join(path, key)) : def;
}

std::string get_str(const YAML::Node& map, const char* key, const std::string& path,
                    const std::string& def) {
    YAML::Node n = map[key];
    return is_present(n) ? as_str(n, join(path, key)) : def;
}

void require_positive(int64_t v, const std::string& path) {
    if (v < 1) fail(path, "must be a positive integer");
}

void require_finite(double v, const std::string& path) {
    if (!std::isfinite(v)) fail(path, "must be finite");
}

std::string one_of_msg(std::initializer_list<const char*> allowed) {
    std::string msg = "must be one of {";
    bool first = true;
    for (const char* a : allowed) {
        if (!first) msg += ", ";
        msg += a;
        first = false;
    }
    return msg + "}";
}

void require_one_of(const std::string& v, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (v == a) return;
    fail(path, one_of_msg(allowed) + ", got '" + v + "'");
}

ParamValue sniff_param(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path, "expected a scalar value");
    if (n.Tag() == "!") return n.Scalar();  // quoted: keep as string
    const std::string& s = n.Scalar();
    if (s == "true") return true;
    if (s == "false") return false;
    try {
        return n.as<int64_t>();
    } catch (const YAML::Exception&) {
    }
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
    }
    return s;
}

// ---------------------------------------------------------------------------
// canonical emission

std::string fmt_int(int64_t v) { return std::to_string(v); }

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

bool needs_quoting(const std::string& s) {
    if (s.empty()) return true;
    if (s == "true" || s == "false" || s == "null") return true;
    for (char c : s) {
        bool plain = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
                     c == '/' || c == '-' || c == '+';
        if (!plain) return true;
    }
    // anything that would re-parse as a number must be quoted
    {
        int64_t iv;
        auto r = std::from_chars(s.data(), s.data() + s.size(), iv);
        if (r.ec == std::errc() && r.ptr == s.data() + s.size()) return true;
    }
    {
        double dv;
        auto r = std::from_chars(s.data(), s.data() + s.size(), dv);
        if (r.ec == std::errc() && r.ptr == s.data() + s.size()) return true;
    }
    return false;
}

std::string fmt_string(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "'";
    for (char c : s) {
        out += c;
        if (c == '\'') out += '\'';
    }
    return out + "'";
}

std::string fmt_param(const ParamValue& v) {
    if (std::holds_alternative<int64_t>(v)) return fmt_int(std::get<int64_t>(v));
    if (std::holds_alternative<double>(v)) return fmt_double(std::get<double>(v));
    if (std::holds_alternative<bool>(v)) return fmt_bool(std::get<bool>(v));
    return fmt_string(std::get<std::string>(v));
}

// Minimal document tree for emission. Keys are sorted at every level; lists
// keep their order because it is semantic.
struct CNode {
    enum class Kind { Scalar, Map, List } kind = Kind::Scalar;
    std::string scalar;
    std::vector<std::pair<std::string, CNode>> map;
    std::vector<CNode> list;

    static CNode S(std::string s) {
        CNode n;
        n.kind = Kind::Scalar;
        n.scalar = std::move(s);
        return n;
    }
    static CNode M() {
        CNode n;
        n.kind = Kind::Map;
        return n;
    }
    static CNode L() {
        CNode n;
        n.kind = Kind::List;
        return n;
    }
    CNode& put(const std::string& key, CNode child) {
        map.emplace_back(key, std::move(child));
        return *this;
    }
};

void emit(const CNode& n, int indent, std::string& out);

void emit_map_entries(std::vector<std::pair<std::string, CNode>> entries, int indent,
                      std::string& out, bool first_inline) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    bool first = true;
    for (const auto& [key, child] : entries) {
        if (!(first && first_inline)) out.append(indent, ' ');
        first = false;
        out += key;
        out += ':';
        if (child.kind == CNode::Kind::Scalar) {
            out += ' ';
            out += child.scalar;
            out += '\n';
        } else if ((child.kind == CNode::Kind::Map && child.map.empty()) ||
                   (child.kind == CNode::Kind::List && child.list.empty())) {
            out += child.kind == CNode::Kind::Map ? " {}\n" : " []\n";
        } else {
            out += '\n';
            emit(child, indent + 2, out);
        }
    }
}

void emit(const CNode& n, int indent, std::string& out) {
    switch (n.kind) {
        case CNode::Kind::Scalar:
            out.append(indent, ' ');
            out += n.scalar;
            out += '\n';
            break;
        case CNode::Kind::Map:
            emit_map_entries(n.map, indent, out, false);
            break;
        case CNode::Kind::List:
            for (const CNode& item : n.list) {
                out.append(indent, ' ');
                out += "- ";
                if (item.kind == CNode::Kind::Scalar) {
                    out += item.scalar;
                    out += '\n';
                } else if (item.kind == CNode::Kind::Map) {
                    emit_map_entries(item.map, indent + 2, out, true);
                } else {
                    out += '\n';
                    emit(item, indent + 2, out);
                }
            }
            break;
    }
}

std::string emit_document(const CNode& root) {
    std::string out;
    emit(root, 0, out);
    return out;
}

CNode dbl_list(const std::vector<double>& v) {
    CNode n = CNode::L();
    for (double d : v) n.list.push_back(CNode::S(fmt_double(d)));
    return n;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

// ---------------------------------------------------------------------------
// ModelSpec

ModelSpec parse_model_spec(const std::string& yaml_text) {
    YAML::Node root = load_root(yaml_text);
    check_keys(root, "",
               {"extractor", "classifier", "similarity", "compatibility_mode", "prototype_dim"});
    ModelSpec s;

    s.prototype_dim = get_int(root, "prototype_dim", "", 32);
    require_positive(s.prototype_dim, "prototype_dim");
    s.compatibility_mode = get_bool(root, "compatibility_mode", "", false);

    if (YAML::Node cls = root["classifier"]; is_present(cls)) {
        if (!cls.IsMap()) fail("classifier", "expected a mapping");
        check_keys(cls, "classifier", {"kind", "params"});
        s.classifier.kind = get_str(cls, "kind", "classifier", "protopnet");
        require_one_of(s.classifier.kind, "classifier.kind", {"protopnet", "prototree"});
        if (YAML::Node p = cls["params"]; is_present(p)) {
            if (!p.IsMap()) fail("classifier.params", "expected a mapping");
            if (s.classifier.kind == "protopnet") {
                check_keys(p, "classifier.params", {"num_prototypes_per_class"});
                s.classifier.num_prototypes_per_class =
                    get_int(p, "num_prototypes_per_class", "classifier.params", 2);
            } else {
                check_keys(p, "classifier.params", {"depth"});
                s.classifier.depth = get_int(p, "depth", "classifier.params", 4);
            }
        }
    }
    require_positive(s.classifier.num_prototypes_per_class,
                     "classifier.params.num_prototypes_per_class");
    require_positive(s.classifier.depth, "classifier.params.depth");

    if (YAML::Node ex = root["extractor"]; is_present(ex)) {
        if (!ex.IsMap()) fail("extractor", "expected a mapping");
        check_keys(ex, "extractor", {"backbone", "add_on"});
        if (YAML::Node bb = ex["backbone"]; is_present(bb)) {
            if (!bb.IsMap()) fail("extractor.backbone", "expected a mapping");
            check_keys(bb, "extractor.backbone", {"arch", "layer", "pretrained_weights"});
            s.backbone.arch = get_str(bb, "arch", "extractor.backbone", "tiny_cnn");
            s.backbone.layer = get_str(bb, "layer", "extractor.backbone", "conv4");
            if (YAML::Node pw = bb["pretrained_weights"]; is_present(pw))
                s.backbone.pretrained_weights = as_str(pw, "extractor.backbone.pretrained_weights");
        }
        if (YAML::Node ao = ex["add_on"]; is_present(ao)) {
            if (!ao.IsSequence()) fail("extractor.add_on", "expected a list");
            int i = 0;
            for (const auto& item : ao) {
                std::string path = "extractor.add_on[" + std::to_string(i++) + "]";
                if (!item.IsMap()) fail(path, "expected a mapping");
                check_keys(item, path, {"kind", "out_channels"});
                AddOnLayer layer;
                layer.kind = get_str(item, "kind", path, "");
                require_one_of(layer.kind, join(path, "kind"), {"conv1x1", "sigmoid", "relu"});
                if (layer.kind == "conv1x1") {
                    layer.out_channels = get_int(item, "out_channels", path, s.prototype_dim);
                    require_positive(layer.out_channels, join(path, "out_channels"));
                } else if (is_present(item["out_channels"])) {
                    fail(join(path, "out_channels"), "only valid for conv1x1 layers");
                }
                s.add_on.push_back(layer);
            }
        }
    }
    if (s.add_on.empty())
        s.add_on = {{"conv1x1", s.prototype_dim}, {"sigmoid", 0}};

    // the add-on chain must end up with prototype_dim channels
    const AddOnLayer* last_conv = nullptr;
    int last_conv_idx = -1;
    for (size_t i = 0; i < s.add_on.size(); ++i)
        if (s.add_on[i].kind == "conv1x1") {
            last_conv = &s.add_on[i];
            last_conv_idx = static_cast<int>(i);
        }
    if (last_conv && last_conv->out_channels != s.prototype_dim)
        fail("extractor.add_on[" + std::to_string(last_conv_idx) + "].out_channels",
             "must equal prototype_dim (" + std::to_string(s.prototype_dim) + ")");

    if (YAML::Node sim = root["similarity"]; is_present(sim)) {
        if (!sim.IsMap()) fail("similarity", "expected a mapping");
        check_keys(sim, "similarity", {"kind", "epsilon"});
        s.similarity.kind = get_str(sim, "kind", "similarity", "");
        s.similarity.epsilon = get_dbl(sim, "epsilon", "similarity", 1e-4);
    }
    if (s.similarity.kind.empty())
        s.similarity.kind = s.classifier.kind == "prototree" ? "exp_neg_l2" : "protopnet_log";
    require_one_of(s.similarity.kind, "similarity.kind", {"protopnet_log", "exp_neg_l2"});
    require_finite(s.similarity.epsilon, "similarity.epsilon");
    if (s.similarity.epsilon <= 0 || s.similarity.epsilon >= 1)
        fail("similarity.epsilon", "must be in (0,1)");

    return s;
}

CanonicalConfig canonicalize(const ModelSpec& s) {
    CNode root = CNode::M();
    CNode cls = CNode::M();
    cls.put("kind", CNode::S(s.classifier.kind));
    CNode params = CNode::M();
    if (s.classifier.kind == "protopnet")
        params.put("num_prototypes_per_class", CNode::S(fmt_int(s.classifier.num_prototypes_per_class)));
    else
        params.put("depth", CNode::S(fmt_int(s.classifier.depth)));
    cls.put("params", std::move(params));
    root.put("classifier", std::move(cls));
    root.put("compatibility_mode", CNode::S(fmt_bool(s.compatibility_mode)));

    CNode ex = CNode::M();
    CNode bb = CNode::M();
    bb.put("arch", CNode::S(fmt_string(s.backbone.arch)));
    bb.put("layer", CNode::S(fmt_string(s.backbone.layer)));
    bb.put("pretrained_weights", CNode::S(s.backbone.pretrained_weights
                                              ? fmt_string(*s.backbone.pretrained_weights)
                                              : "null"));
    ex.put("backbone", std::move(bb));
    CNode ao = CNode::L();
    for (const auto& layer : s.add_on) {
        CNode item = CNode::M();
        item.put("kind", CNode::S(layer.kind));
        if (layer.kind == "conv1x1") item.put("out_channels", CNode::S(fmt_int(layer.out_channels)));
        ao.list.push_back(std::move(item));
    }
    ex.put("add_on", std::move(ao));
    root.put("extractor", std::move(ex));

    root.put("prototype_dim", CNode::S(fmt_int(s.prototype_dim)));
    CNode sim = CNode::M();
    sim.put("epsilon", CNode::S(fmt_double(s.similarity.epsilon)));
    sim.put("kind", CNode::S(s.similarity.kind));
    root.put("similarity", std::move(sim));

    CanonicalConfig out;
    out.text = emit_document(root);
    out.sha256 = sha256_hex(out.text);
    return out;
}

// ---------------------------------------------------------------------------
// DataSpec

namespace {

void validate_transform_op(TransformOp& op, const YAML::Node& item, const std::string& path,
                           int64_t channels) {
    op.op = get_str(item, "op", path, "");
    require_one_of(op.op, join(path, "op"), {"resize", "normalize", "random_hflip"});
    if (op.op == "resize") {
        check_keys(item, path, {"op", "size"});
        op.size = get_int(item, "size", path, 0);
        require_positive(op.size, join(path, "size"));
    } else if (op.op == "normalize") {
        check_keys(item, path, {"op", "mean", "std"});
        auto read_list = [&](const char* key, std::vector<double>& dst, double def) {
            YAML::Node n = item[key];
            if (!is_present(n)) {
                dst.assign(channels, def);
                return;
            }
            if (!n.IsSequence()) fail(join(path, key), "expected a list of numbers");
            int j = 0;
            for (const auto& v : n)
                dst.push_back(as_dbl(v, join(path, key) + "[" + std::to_string(j++) + "]"));
            if (static_cast<int64_t>(dst.size()) != channels)
                fail(join(path, key), "expected " + std::to_string(channels) + " entries");
        };
        read_list("mean", op.mean, 0.0);
        read_list("std", op.std_dev, 1.0);
        for (size_t j = 0; j < op.std_dev.size(); ++j) {
            require_finite(op.std_dev[j], join(path, "std") + "[" + std::to_string(j) + "]");
            if (op.std_dev[j] == 0.0)
                fail(join(path, "std") + "[" + std::to_string(j) + "]", "must be nonzero");
        }
        for (size_t j = 0; j < op.mean.size(); ++j)
            require_finite(op.mean[j], join(path, "mean") + "[" + std::to_string(j) + "]");
    } else {  // random_hflip
        check_keys(item, path, {"op", "prob"});
        op.prob = get_dbl(item, "prob", path, 0.5);
        if (!(op.prob >= 0.0 && op.prob <= 1.0)) fail(join(path, "prob"), "must be in [0,1]");
    }
}

}  // namespace

DataSpec parse_data_spec(const std::string& yaml_text) {
    YAML::Node root = load_root(yaml_text);
    check_keys(root, "",
               {"train_set", "transform", "batch_size", "eval_batch_size", "num_classes"});
    DataSpec s;
    s.batch_size = get_int(root, "batch_size", "", 32);
    require_positive(s.batch_size, "batch_size");
    s.eval_batch_size = get_int(root, "eval_batch_size", "", 64);
    require_positive(s.eval_batch_size, "eval_batch_size");
    s.num_classes = get_int(root, "num_classes", "", 3);
    require_positive(s.num_classes, "num_classes");

    if (YAML::Node ts = root["train_set"]; is_present(ts)) {
        if (!ts.IsMap()) fail("train_set", "expected a mapping");
        check_keys(ts, "train_set", {"name", "params"});
        s.train_set_name = get_str(ts, "name", "train_set", "synthetic_shapes");
        if (YAML::Node p = ts["params"]; is_present(p)) {
            if (!p.IsMap()) fail("train_set.params", "expected a mapping");
            for (const auto& kv : p) {
                std::string key = kv.first.as<std::string>();
                s.train_set_params[key] = sniff_param(kv.second, join("train_set.params", key));
            }
        }
    }

    auto param_int = [&](const char* key, int64_t def) {
        auto it = s.train_set_params.find(key);
        if (it == s.train_set_params.end()) {
            s.train_set_params[key] = def;
            return def;
        }
        if (!std::holds_alternative<int64_t>(it->second))
            fail(join("train_set.params", key), "expected an integer");
        return std::get<int64_t>(it->second);
    };
    if (s.train_set_name == "synthetic_shapes") {
        for (const auto& [key, v] : s.train_set_params)
            if (key != "n" && key != "image_size" && key != "seed")
                fail(join("train_set.params", key), "unknown key");
        require_positive(param_int("n", 300), "train_set.params.n");
        int64_t sz = param_int("image_size", 32);
        if (sz < 16) fail("train_set.params.image_size", "must be at least 16");
        if (param_int("seed", 7) < 0) fail("train_set.params.seed", "must be nonnegative");
    } else if (s.train_set_name == "image_folder") {
        for (const auto& [key, v] : s.train_set_params)
            if (key != "root" && key != "split")
                fail(join("train_set.params", key), "unknown key");
        auto it = s.train_set_params.find("root");
        if (it == s.train_set_params.end() || !std::holds_alternative<std::string>(it->second))
            fail("train_set.params.root", "required string for image_folder");
        if (!s.train_set_params.count("split")) s.train_set_params["split"] = std::string();
    }

    if (YAML::Node tr = root["transform"]; is_present(tr)) {
        if (!tr.IsSequence()) fail("transform", "expected a list");
        int i = 0;
        for (const auto& item : tr) {
            std::string path = "transform[" + std::to_string(i++) + "]";
            if (!item.IsMap()) fail(path, "expected a mapping");
            TransformOp op;
            validate_transform_op(op, item, path, 3);
            s.transform.push_back(std::move(op));
        }
        if (s.transform.empty()) fail("transform", "must contain at least one op");
        if (s.transform.back().op != "normalize")
            fail("transform", "must end with a normalize op");
    } else {
        TransformOp norm;
        norm.op = "normalize";
        norm.mean.assign(3, 0.0);
        norm.std_dev.assign(3, 1.0);
        s.transform.push_back(std::move(norm));
    }
    return s;
}

CanonicalConfig canonicalize(const DataSpec& s) {
    CNode root = CNode::M();
    root.put("batch_size", CNode::S(fmt_int(s.batch_size)));
    root.put("eval_batch_size", CNode::S(fmt_int(s.eval_batch_size)));
    root.put("num_classes", CNode::S(fmt_int(s.num_classes)));

    CNode ts = CNode::M();
    ts.put("name", CNode::S(fmt_string(s.train_set_name)));
    CNode params = CNode::M();
    for (const auto& [key, v] : s.train_set_params) params.put(key, CNode::S(fmt_param(v)));
    ts.put("params", std::move(params));
    root.put("train_set", std::move(ts));

    CNode tr = CNode::L();
    for (const auto& op : s.transform) {
        CNode item = CNode::M();
        item.put("op", CNode::S(op.op));
        if (op.op == "resize") item.put("size", CNode::S(fmt_int(op.size)));
        if (op.op == "normalize") {
            item.put("mean", dbl_list(op.mean));
            item.put("std", dbl_list(op.std_dev));
        }
        if (op.op == "random_hflip") item.put("prob", CNode::S(fmt_double(op.prob)));
        tr.list.push_back(std::move(item));
    }
    root.put("transform", std::move(tr));

    CanonicalConfig out;
    out.text = emit_document(root);
    out.sha256 = sha256_hex(out.text);
    return out;
}

// ---------------------------------------------------------------------------
// TrainSpec

TrainSpec parse_train_spec(const std::string& yaml_text) {
    YAML::Node root = load_root(yaml_text);
    check_keys(root, "",
               {"num_epochs", "optimizer", "freeze_schedule", "loss", "seed", "projection_epoch",
                "pruning", "checkpoint_every"});
    TrainSpec s;
    s.num_epochs = get_int(root, "num_epochs", "", 20);
    if (s.num_epochs < 0) fail("num_epochs", "must be nonnegative");
    s.seed = get_int(root, "seed", "", 42);
    if (s.seed < 0) fail("seed", "must be nonnegative");
    s.projection_epoch = get_int(root, "projection_epoch", "", -1);
    if (s.projection_epoch >= s.num_epochs)
        fail("projection_epoch", "must be less than num_epochs");
    s.checkpoint_every = get_int(root, "checkpoint_every", "", 0);
    if (s.checkpoint_every < 0) fail("checkpoint_every", "must be nonnegative");

    if (YAML::Node opt = root["optimizer"]; is_present(opt)) {
        if (!opt.IsMap()) fail("optimizer", "expected a mapping");
        check_keys(opt, "optimizer",
                   {"kind", "momentum", "weight_decay", "beta1", "beta2", "epsilon",
                    "learning_rates"});
        s.optimizer.kind = get_str(opt, "kind", "optimizer", "sgd");
        require_one_of(s.optimizer.kind, "optimizer.kind", {"sgd", "adam"});
        s.optimizer.momentum = get_dbl(opt, "momentum", "optimizer", 0.9);
        if (!(s.optimizer.momentum >= 0.0 && s.optimizer.momentum < 1.0))
            fail("optimizer.momentum", "must be in [0,1)");
        s.optimizer.weight_decay = get_dbl(opt, "weight_decay", "optimizer", 0.0);
        if (s.optimizer.weight_decay < 0.0) fail("optimizer.weight_decay", "must be nonnegative");
        s.optimizer.beta1 = get_dbl(opt, "beta1", "optimizer", 0.9);
        s.optimizer.beta2 = get_dbl(opt, "beta2", "optimizer", 0.999);
        s.optimizer.epsilon = get_dbl(opt, "epsilon", "optimizer", 1e-8);
        if (!(s.optimizer.beta1 > 0 && s.optimizer.beta1 < 1)) fail("optimizer.beta1", "must be in (0,1)");
        if (!(s.optimizer.beta2 > 0 && s.optimizer.beta2 < 1)) fail("optimizer.beta2", "must be in (0,1)");
        if (!(s.optimizer.epsilon > 0)) fail("optimizer.epsilon", "must be positive");
        if (YAML::Node lr = opt["learning_rates"]; is_present(lr)) {
            if (!lr.IsMap()) fail("optimizer.learning_rates", "expected a mapping");
            for (const auto& kv : lr) {
                std::string key = kv.first.as<std::string>();
                if (!kParamGroups.count(key)) fail(join("optimizer.learning_rates", key), "unknown key");
                double v = as_dbl(kv.second, join("optimizer.learning_rates", key));
                if (v < 0) fail(join("optimizer.learning_rates", key), "must be nonnegative");
                s.optimizer.learning_rates[key] = v;
            }
        }
    }
    auto default_lr = [&](const char* group, double def) {
        if (!s.optimizer.learning_rates.count(group)) s.optimizer.learning_rates[group] = def;
    };
    default_lr("backbone", 0.05);
    default_lr("add_on", 0.05);
    default_lr("prototypes", 0.05);
    default_lr("decision", 0.02);

    if (YAML::Node fs = root["freeze_schedule"]; is_present(fs)) {
        if (!fs.IsSequence()) fail("freeze_schedule", "expected a list");
        int i = 0;
        for (const auto& item : fs) {
            std::string path = "freeze_schedule[" + std::to_string(i++) + "]";
            if (!item.IsMap()) fail(path, "expected a mapping");
            check_keys(item, path, {"from", "to", "groups"});
            FreezeEntry e;
            e.from = get_int(item, "from", path, -1);
            e.to = get_int(item, "to", path, -1);
            if (e.from < 0 || e.to < 0) fail(path, "from and to are required");
            if (e.from >= e.to) fail(path, "from must be less than to");
            if (e.to > s.num_epochs) fail(join(path, "to"), "exceeds num_epochs");
            YAML::Node g = item["groups"];
            if (!is_present(g) || !g.IsSequence()) fail(join(path, "groups"), "expected a list");
            std::set<std::string> seen;
            for (const auto& gn : g) {
                std::string name = as_str(gn, join(path, "groups"));
                if (!kParamGroups.count(name))
                    fail(join(path, "groups"), "unknown parameter group '" + name + "'");
                if (!seen.insert(name).second)
                    fail(join(path, "groups"), "duplicate group '" + name + "'");
                e.groups.push_back(name);
            }
            if (e.groups.empty()) fail(join(path, "groups"), "at least one group required");
            std::sort(e.groups.begin(), e.groups.end());
            s.freeze_schedule.push_back(std::move(e));
        }
    } else if (s.num_epochs > 0) {
        FreezeEntry e;
        e.from = 0;
        e.to = s.num_epochs;
        e.groups = {"add_on", "backbone", "decision", "prototypes"};
        s.freeze_schedule.push_back(std::move(e));
    }
    // entries must tile [0, num_epochs) exactly
    std::sort(s.freeze_schedule.begin(), s.freeze_schedule.end(),
              [](const FreezeEntry& a, const FreezeEntry& b) { return a.from < b.from; });
    int64_t cursor = 0;
    for (const auto& e : s.freeze_schedule) {
        if (e.from != cursor)
            fail("freeze_schedule", "epoch ranges must cover [0, num_epochs) without gaps or overlap");
        cursor = e.to;
    }
    if (cursor != s.num_epochs)
        fail("freeze_schedule", "epoch ranges must cover [0, num_epochs) without gaps or overlap");

    if (YAML::Node loss = root["loss"]; is_present(loss)) {
        if (!loss.IsMap()) fail("loss", "expected a mapping");
        for (const auto& kv : loss) {
            std::string key = kv.first.as<std::string>();
            if (key != "lambda_cluster" && key != "lambda_separation")
                fail(join("loss", key), "unknown key");
            double v = as_dbl(kv.second, join("loss", key));
            require_finite(v, join("loss", key));
            s.loss[key] = v;
        }
    }
    if (!s.loss.count("lambda_cluster")) s.loss["lambda_cluster"] = 0.8;
    if (!s.loss.count("lambda_separation")) s.loss["lambda_separation"] = 0.08;

    if (YAML::Node pr = root["pruning"]; is_present(pr)) {
        if (!pr.IsMap()) fail("pruning", "expected a mapping");
        check_keys(pr, "pruning", {"enabled", "weight_threshold", "leaf_threshold"});
        s.pruning.enabled = get_bool(pr, "enabled", "pruning", false);
        s.pruning.weight_threshold = get_dbl(pr, "weight_threshold", "pruning", 1e-3);
        if (s.pruning.weight_threshold < 0) fail("pruning.weight_threshold", "must be nonnegative");
        s.pruning.leaf_threshold = get_dbl(pr, "leaf_threshold", "pruning", 0.01);
        if (!(s.pruning.leaf_threshold >= 0 && s.pruning.leaf_threshold < 1))
            fail("pruning.leaf_threshold", "must be in [0,1)");
    }
    return s;
}

CanonicalConfig canonicalize(const TrainSpec& s) {
    CNode root = CNode::M();
    root.put("checkpoint_every", CNode::S(fmt_int(s.checkpoint_every)));
    CNode fs = CNode::L();
    for (const auto& e : s.freeze_schedule) {
        CNode item = CNode::M();
        item.put("from", CNode::S(fmt_int(e.from)));
        item.put("to", CNode::S(fmt_int(e.to)));
        CNode g = CNode::L();
        for (const auto& name : e.groups) g.list.push_back(CNode::S(name));
        item.put("groups", std::move(g));
        fs.list.push_back(std::move(item));
    }
    root.put("freeze_schedule", std::move(fs));
    CNode loss = CNode::M();
    for (const auto& [k, v] : s.loss) loss.put(k, CNode::S(fmt_double(v)));
    root.put("loss", std::move(loss));
    root.put("num_epochs", CNode::S(fmt_int(s.num_epochs)));

    CNode opt = CNode::M();
    opt.put("kind", CNode::S(s.optimizer.kind));
    opt.put("momentum", CNode::S(fmt_double(s.optimizer.momentum)));
    opt.put("weight_decay", CNode::S(fmt_double(s.optimizer.weight_decay)));
    opt.put("beta1", CNode::S(fmt_double(s.optimizer.beta1)));
    opt.put("beta2", CNode::S(fmt_double(s.optimizer.beta2)));
    opt.put("epsilon", CNode::S(fmt_double(s.optimizer.epsilon)));
    CNode lr = CNode::M();
    for (const auto& [k, v] : s.optimizer.learning_rates) lr.put(k, CNode::S(fmt_double(v)));
    opt.put("learning_rates", std::move(lr));
    root.put("optimizer", std::move(opt));

    root.put("projection_epoch", CNode::S(fmt_int(s.projection_epoch)));
    CNode pr = CNode::M();
    pr.put("enabled", CNode::S(fmt_bool(s.pruning.enabled)));
    pr.put("weight_threshold", CNode::S(fmt_double(s.pruning.weight_threshold)));
    pr.put("leaf_threshold", CNode::S(fmt_double(s.pruning.leaf_threshold)));
    root.put("pruning", std::move(pr));
    root.put("seed", CNode::S(fmt_int(s.seed)));

    CanonicalConfig out;
    out.text = emit_document(root);
    out.sha256 = sha256_hex(out.text);
    return out;
}

// ---------------------------------------------------------------------------
// VizSpec

VizSpec parse_viz_spec(const std::string& yaml_text) {
    YAML::Node root = load_root(yaml_text);
    check_keys(root, "", {"attribution", "view"});
    VizSpec s;
    if (YAML::Node at = root["attribution"]; is_present(at)) {
        if (!at.IsMap()) fail("attribution", "expected a mapping");
        check_keys(at, "attribution", {"type", "params"});
        s.attribution.type = get_str(at, "type", "attribution", "upsampling");
        require_one_of(s.attribution.type, "attribution.type",
                       {"upsampling", "smoothgrad", "backprop", "prp", "randgrads"});
        if (YAML::Node p = at["params"]; is_present(p)) {
            if (!p.IsMap()) fail("attribution.params", "expected a mapping");
            if (s.attribution.type == "smoothgrad") {
                check_keys(p, "attribution.params", {"num_samples", "noise_ratio"});
                s.attribution.num_samples = get_int(p, "num_samples", "attribution.params", 10);
                require_positive(s.attribution.num_samples, "attribution.params.num_samples");
                s.attribution.noise_ratio = get_dbl(p, "noise_ratio", "attribution.params", 0.2);
                if (s.attribution.noise_ratio < 0)
                    fail("attribution.params.noise_ratio", "must be nonnegative");
            } else if (s.attribution.type == "randgrads") {
                check_keys(p, "attribution.params", {"seed"});
                s.attribution.seed = get_int(p, "seed", "attribution.params", 0);
                if (s.attribution.seed < 0) fail("attribution.params.seed", "must be nonnegative");
            } else {
                check_keys(p, "attribution.params", {});
            }
        }
    }
    if (YAML::Node vw = root["view"]; is_present(vw)) {
        if (!vw.IsMap()) fail("view", "expected a mapping");
        check_keys(vw, "view", {"type", "params"});
        s.view.type = get_str(vw, "type", "view", "bbox");
        require_one_of(s.view.type, "view.type", {"bbox", "crop", "heatmap"});
        if (YAML::Node p = vw["params"]; is_present(p)) {
            if (!p.IsMap()) fail("view.params", "expected a mapping");
            check_keys(p, "view.params", {"percentile"});
            s.view.percentile = get_dbl(p, "percentile", "view.params", 95.0);
            if (!(s.view.percentile > 0 && s.view.percentile <= 100))
                fail("view.params.percentile", "must be in (0,100]");
        }
    }
    return s;
}

CanonicalConfig canonicalize(const VizSpec& s) {
    CNode root = CNode::M();
    CNode at = CNode::M();
    at.put("type", CNode::S(s.attribution.type));
    CNode params = CNode::M();
    if (s.attribution.type == "smoothgrad") {
        params.put("num_samples", CNode::S(fmt_int(s.attribution.num_samples)));
        params.put("noise_ratio", CNode::S(fmt_double(s.attribution.noise_ratio)));
    } else if (s.attribution.type == "randgrads") {
        params.put("seed", CNode::S(fmt_int(s.attribution.seed)));
    }
    at.put("params", std::move(params));
    root.put("attribution", std::move(at));
    CNode vw = CNode::M();
    vw.put("type", CNode::S(s.view.type));
    CNode vp = CNode::M();
    vp.put("percentile", CNode::S(fmt_double(s.view.percentile)));
    vw.put("params", std::move(vp));
    root.put("view", std::move(vw));

    CanonicalConfig out;
    out.text = emit_document(root);
    out.sha256 = sha256_hex(out.text);
    return out;
}

// ---------------------------------------------------------------------------
// file helpers

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

ModelSpec load_model_spec(const std::string& path) { return parse_model_spec(read_file(path)); }
DataSpec load_data_spec(const std::string& path) { return parse_data_spec(read_file(path)); }
TrainSpec load_train_spec(const std::string& path) { return parse_train_spec(read_file(path)); }
VizSpec load_viz_spec(const std::string& path) { return parse_viz_spec(read_file(path)); }

void snapshot_configs(const ModelSpec& m, const DataSpec& d, const TrainSpec& t, const VizSpec& v,
                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    write_file((fs::path(out_dir) / kModelConfigFile).string(), canonicalize(m).text);
    write_file((fs::path(out_dir) / kDataConfigFile).string(), canonicalize(d).text);
    write_file((fs::path(out_dir) / kTrainConfigFile).string(), canonicalize(t).text);
    write_file((fs::path(out_dir) / kVizConfigFile).string(), canonicalize(v).text);
}

}  // namespace protopart
