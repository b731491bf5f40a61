#pragma once

#include <stdexcept>
#include <string>

namespace protopart {

// Config parsing errors. SchemaError carries the dotted path of the
// offending key so callers can pinpoint the bad entry.
struct ConfigSyntaxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
    SchemaError(std::string path_, const std::string& what_)
        : std::runtime_error(path_ + ": " + what_), path(std::move(path_)) {}
    std::string path;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model construction / execution
struct UnknownBackbone : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValueOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data
struct UnknownDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyProjectionSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AllPruned : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Attribution
struct InactivePrototype : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedLayer : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metrics
struct UnknownKind : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingMask : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// RNG snapshots
struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Persistence
struct VersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HashMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownFormat : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace protopart
