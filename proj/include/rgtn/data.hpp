#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgtn/tensor.hpp"

namespace rgtn {

/// Raised for malformed CSV input; `line` is 1-based (0 when not tied to a line).
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class MissingPolicy { drop_row, forward_fill };
MissingPolicy parse_missing_policy(const std::string& name);

/// Column-to-mode mapping for CSV ingestion. A header row is required.
struct CsvSchema {
    std::string time_column;
    /// Optional long-format key (site, city, sensor, ...). Every timestamp
    /// must then carry one row per key.
    std::optional<std::string> physical_column;
    std::vector<std::string> feature_columns;
    /// Optional integer class label per timestamp.
    std::optional<std::string> label_column;
    MissingPolicy missing = MissingPolicy::drop_row;
};

/// Time-sorted multi-way series: values has shape (T, physical, features).
struct SeriesTable {
    std::vector<double> timestamps;
    std::vector<std::string> physical_keys;
    std::vector<std::string> feature_names;
    Tensor values;
    std::vector<int> labels;  // empty unless a label column was declared

    Index length() const { return timestamps.size(); }
    Index physical() const { return values.shape()[1]; }
    Index features() const { return values.shape()[2]; }
};

/// Timestamps are numbers or ISO-8601 dates ("YYYY-MM-DD", optionally
/// followed by "[T ]HH:MM[:SS]"), converted to seconds since 1970-01-01.
double parse_timestamp(const std::string& text);

SeriesTable load_csv(const std::string& path, const CsvSchema& schema);
SeriesTable parse_csv(std::istream& in, const CsvSchema& schema);

enum class Task { regression, classification };
Task parse_task(const std::string& name);
std::string to_string(Task t);

enum class NormMethod { zscore, minmax };
NormMethod parse_norm_method(const std::string& name);
std::string to_string(NormMethod m);

/// Per-channel affine map: normalized = (raw - offset) / scale, with
/// offset and scale of shape (physical, features).
struct Normalization {
    NormMethod method = NormMethod::zscore;
    Tensor offset;
    Tensor scale;
};

enum class Split { train, validation, test };
std::string to_string(Split s);

struct WindowedDataset {
    Task task = Task::regression;
    Index tau = 1;
    Index horizon = 1;
    Index target_feature = 0;
    Tensor inputs;   // (samples, tau, physical, features)
    Tensor targets;  // (samples, physical), regression only
    std::vector<int> labels;  // classification only
    Index classes = 0;
    /// Timestamp of each window's last input step and of its target.
    std::vector<double> window_end_times;
    std::vector<double> target_times;
    std::vector<Index> train, validation, test;
    std::optional<Normalization> normalization;
    std::vector<std::string> warnings;

    Index samples() const { return inputs.shape()[0]; }
    Index physical() const { return inputs.shape()[2]; }
    Index features() const { return inputs.shape()[3]; }
    const std::vector<Index>& indices(Split s) const;
    /// Outputs per sample: physical for regression, classes otherwise.
    Index output_size() const;
};

struct WindowOptions {
    Index tau = 6;
    Index horizon = 1;
    Task task = Task::regression;
    /// Regression target: this feature at every physical index.
    Index target_feature = 0;
};

/// Stride-1 windows. Regression window i covers steps i..i+tau-1 and targets
/// step i+tau+horizon-1, giving T - tau - horizon + 1 samples. Classification
/// windows take the label of their last step, giving T - tau + 1 samples.
WindowedDataset window(const SeriesTable& table, const WindowOptions& options);

/// Contiguous chronological split (fractions of train, validation, test).
void split_chronological(WindowedDataset& ds, std::array<double, 3> fractions = {0.7, 0.15, 0.15});
/// Per-class shuffled split; each class is divided by the fractions.
void split_stratified(WindowedDataset& ds, std::array<double, 3> fractions, std::uint64_t seed);

/// Normalizes inputs (and regression targets) with per-channel statistics
/// fitted on the training windows only. A channel with zero spread keeps
/// offset 0 and scale 1 and adds a warning.
WindowedDataset normalize(WindowedDataset ds, NormMethod method);

/// The statistics normalize() would fit; zero-spread warnings are appended
/// to `warnings` when given.
Normalization fit_normalization(const WindowedDataset& ds, NormMethod method,
                                std::vector<std::string>* warnings = nullptr);
/// Applies previously fitted statistics (for example from a checkpoint).
WindowedDataset apply_normalization(WindowedDataset ds, Normalization norm);

/// Maps normalized regression outputs (samples, physical) back to raw units.
Tensor denormalize_targets(const WindowedDataset& ds, const Tensor& values);
/// Maps normalized input windows back to raw units.
Tensor denormalize_inputs(const WindowedDataset& ds, const Tensor& values);

/// Batch of windows (B, tau, physical, features) for the given samples.
Tensor gather_inputs(const WindowedDataset& ds, std::span<const Index> samples);
Tensor gather_targets(const WindowedDataset& ds, std::span<const Index> samples);
std::vector<int> gather_labels(const WindowedDataset& ds, std::span<const Index> samples);

/// Multi-way linear dynamics Z(t+1) = F_phys Z(t) F_feat^T + E(t), where Z(t)
/// is (physical x features), F_phys and F_feat are scaled random orthogonal
/// matrices and E has i.i.d. N(0, noise^2) entries. The one-step Bayes
/// predictor is linear with mean absolute error noise * sqrt(2/pi).
struct LinearDynamicsConfig {
    Index physical = 4;
    Index features = 3;
    Index length = 3000;
    double noise = 0.1;
    double contraction = 0.9;  // scale of each orthogonal factor
    std::uint64_t seed = 1;
};
SeriesTable synth_linear_dynamics(const LinearDynamicsConfig& config);

/// Two classes, each a multi-way linear dynamical system with its own
/// factors, started from a shared mean state. At zero noise the two
/// trajectories are distinct points, so the classes are separable.
struct ClassificationConfig {
    Index tau = 24;
    Index physical = 3;
    Index features = 3;
    Index samples = 2000;
    double noise = 0.1;
    std::uint64_t seed = 1;
};
/// Labeled windows, unsplit and unnormalized.
WindowedDataset synth_classification(const ClassificationConfig& config);

}  // namespace rgtn
