#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgtn/data.hpp"
#include "rgtn/model.hpp"
#include "rgtn/train.hpp"

namespace rgtn {

/// Invalid or unreadable run configuration; the message names the field
/// (for example "model.tau: expected an integer >= 1").
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DataSource { synthetic, csv };

struct DataConfig {
    Task task = Task::regression;
    DataSource source = DataSource::synthetic;
    LinearDynamicsConfig linear;
    ClassificationConfig classification;
    std::string csv_path;  // resolved against the config file's directory
    CsvSchema schema;
    Index horizon = 1;
    Index target_feature = 0;
    std::optional<NormMethod> normalization = NormMethod::zscore;
    std::array<double, 3> split{0.7, 0.15, 0.15};
    std::uint64_t split_seed = 1;
};

struct OutputConfig {
    std::string directory = "rgtn_out";
    std::string format = "text";  // text | json
};

/// Model section with everything the data does not determine. The physical
/// and feature extents, and the default head output shape, come from the
/// dataset at run time.
struct ModelConfig {
    ModelSpec spec;
    std::optional<std::vector<Index>> head_out_shape;
};

struct RunConfig {
    ModelConfig model;
    DataConfig data;
    TrainConfig training;
    OutputConfig output;
    /// Models compared by `bench`; empty when the section is absent.
    std::vector<ModelConfig> bench;
    /// Snapshot with paths resolved and overrides applied.
    nlohmann::json snapshot;
};

/// Parses a JSON run config. `base_dir` anchors relative paths.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
/// Sets training.seed and the snapshot accordingly.
void override_seed(RunConfig& config, std::uint64_t seed);

/// Windows, splits and (unless disabled) normalizes the configured data.
WindowedDataset prepare_dataset(const DataConfig& data, Index tau);
/// Same, but with given normalization statistics instead of fitted ones.
WindowedDataset prepare_dataset(const DataConfig& data, Index tau,
                                const std::optional<Normalization>& norm);

/// Completes a model section for a dataset. The default head output is one
/// value per physical index for regression and one logit per class for
/// classification.
ModelSpec resolve_model(const ModelConfig& model, const WindowedDataset& ds);

}  // namespace rgtn
