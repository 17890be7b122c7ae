#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rgtn/data.hpp"
#include "rgtn/model.hpp"
#include "rgtn/param_store.hpp"

namespace rgtn {

enum class LossKind { mae, mse, cross_entropy };
LossKind parse_loss(const std::string& name);
std::string to_string(LossKind k);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    Index epochs = 100;
    Index batch_size = 32;
    std::uint64_t seed = 1;
    LossKind loss = LossKind::mae;
    /// Global-norm clipping threshold; off when empty.
    std::optional<double> clip_norm;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// One Adam update with bias correction. Parameters whose gradient was not
/// reached by the last backward() are left untouched, state included.
/// Throws std::runtime_error naming the parameter on a non-finite gradient.
void adam_step(ParamStore& store, const TrainConfig& config);

/// Rescales all gradients so their joint 2-norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_gradients(ParamStore& store, double max_norm);

/// Loss of a forward pass against the batch targets.
ad::Var batch_loss(const ad::Var& outputs, const WindowedDataset& ds,
                   std::span<const Index> samples, LossKind loss);

struct EpochRecord {
    Index epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;    // NaN without a validation split
    double val_metric = 0.0;  // MAE in raw units or accuracy
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, std::vector<EpochRecord> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<EpochRecord>& trace() const { return trace_; }

private:
    std::vector<EpochRecord> trace_;
};

struct TrainResult {
    std::vector<EpochRecord> trace;
    Index steps = 0;
    /// Shuffling generator state after the last epoch.
    std::string rng_state;
};

/// Mini-batch Adam over ds.train, reshuffled each epoch by a generator
/// seeded with config.seed. Deterministic given model seed, config and data.
TrainResult train(Model& model, const WindowedDataset& ds, const TrainConfig& config);

struct Metrics {
    Task task = Task::regression;
    Split split = Split::test;
    Index samples = 0;
    double loss = 0.0;  // in normalized units, as optimized
    double mae = 0.0;   // regression, raw units
    double rmse = 0.0;  // regression, raw units
    double accuracy = 0.0;  // classification, fraction in [0, 1]
    Index parameters = 0;
    double wall_time_s = 0.0;
};

/// Model outputs for every sample of a split, (samples, output_size).
Tensor predict_split(const Model& model, const WindowedDataset& ds, Split split);

/// One read-only pass over a split. Throws on an empty split.
Metrics evaluate(const Model& model, const WindowedDataset& ds, Split split, LossKind loss);

/// MAE and accuracy from saved predictions, shared with evaluate().
double mean_absolute_error(const Tensor& pred, const Tensor& target);
double accuracy(const Tensor& logits, const std::vector<int>& labels);

/// Tab-separated trace: header `epoch train_loss val_loss val_metric`, then
/// one line per epoch.
void write_trace(std::ostream& out, const std::vector<EpochRecord>& trace);
std::vector<EpochRecord> read_trace(std::istream& in);

/// `key: value` summary lines in the given order.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
void write_key_values(std::ostream& out, const KeyValues& kv);
KeyValues read_key_values(std::istream& in);
/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Fixed-order metric keys: variant, task, split, samples, loss, then mae and
/// rmse (regression) or accuracy (classification), parameters, wall_time_s.
KeyValues metrics_key_values(const Metrics& m, ModelVariant variant);

}  // namespace rgtn
