#include "rgtn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rgtn/random.hpp"

namespace rgtn {

LossKind parse_loss(const std::string& name) {
    if (name == "mae") return LossKind::mae;
    if (name == "mse") return LossKind::mse;
    if (name == "cross_entropy") return LossKind::cross_entropy;
    throw std::invalid_argument("unknown loss '" + name + "' (mae | mse | cross_entropy)");
}

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::mae: return "mae";
        case LossKind::mse: return "mse";
        case LossKind::cross_entropy: return "cross_entropy";
    }
    return "mae";
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("training." + msg); };
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        fail("learning_rate must be finite and >= 0");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (clip_norm && !(*clip_norm > 0.0)) fail("clip_norm must be > 0");
}

void adam_step(ParamStore& store, const TrainConfig& config) {
    for (auto& p : store.entries()) {
        if (!p.var.has_grad()) continue;
        const Tensor& g = p.var.grad();
        for (double v : g.values())
            if (!std::isfinite(v)) {
                throw std::runtime_error("non-finite gradient in parameter '" + p.name + "'");
            }
    }
    for (auto& p : store.entries()) {
        if (!p.var.has_grad()) continue;
        const auto g = p.var.grad().data();
        auto theta = p.var.mutable_value().data();
        auto m = p.state.first_moment.data();
        auto v = p.state.second_moment.data();
        p.state.steps += 1;
        const double t = static_cast<double>(p.state.steps);
        const double c1 = 1.0 - std::pow(config.beta1, t);
        const double c2 = 1.0 - std::pow(config.beta2, t);
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

double clip_gradients(ParamStore& store, double max_norm) {
    double sq = 0.0;
    for (auto& p : store.entries())
        if (p.var.has_grad())
            for (double v : p.var.grad().values()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (auto& p : store.entries())
            if (p.var.has_grad())
                for (double& v : p.var.node()->grad.data()) v *= factor;
    }
    return norm;
}

ad::Var batch_loss(const ad::Var& outputs, const WindowedDataset& ds,
                   std::span<const Index> samples, LossKind loss) {
    if (ds.task == Task::classification) {
        if (loss != LossKind::cross_entropy) {
            throw std::invalid_argument("classification needs the cross_entropy loss");
        }
        return ad::cross_entropy_loss(outputs, gather_labels(ds, samples));
    }
    if (loss == LossKind::cross_entropy) {
        throw std::invalid_argument("regression needs the mae or mse loss");
    }
    const Tensor target = gather_targets(ds, samples);
    return loss == LossKind::mae ? ad::mae_loss(outputs, target) : ad::mse_loss(outputs, target);
}

namespace {

void check_compatible(const Model& model, const WindowedDataset& ds) {
    const auto& spec = model.spec();
    if (spec.tau != ds.tau || spec.physical != ds.physical() || spec.features != ds.features()) {
        throw ShapeError("model expects windows (tau " + std::to_string(spec.tau) + ", physical " +
                         std::to_string(spec.physical) + ", features " +
                         std::to_string(spec.features) + ") but the data has (tau " +
                         std::to_string(ds.tau) + ", physical " + std::to_string(ds.physical()) +
                         ", features " + std::to_string(ds.features()) + ")");
    }
    if (spec.output_size() != ds.output_size()) {
        throw ShapeError("model produces " + std::to_string(spec.output_size()) +
                         " outputs per sample but the task needs " +
                         std::to_string(ds.output_size()));
    }
}

constexpr Index kEvalBatch = 512;

}  // namespace

TrainResult train(Model& model, const WindowedDataset& ds, const TrainConfig& config) {
    config.validate();
    check_compatible(model, ds);
    if (ds.train.empty()) throw std::invalid_argument("training split is empty");
    TrainResult result;
    Rng rng(config.seed);
    std::vector<Index> order = ds.train;
    auto& params = model.params();
    for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
        for (Index i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double loss_sum = 0.0;
        for (Index start = 0; start < order.size(); start += config.batch_size) {
            const Index stop = std::min<Index>(order.size(), start + config.batch_size);
            const std::span<const Index> batch(order.data() + start, stop - start);
            const ad::Var loss =
                batch_loss(model.forward(gather_inputs(ds, batch)), ds, batch, config.loss);
            const double value = loss.value().item();
            if (!std::isfinite(value)) {
                throw TrainingDiverged("training diverged: non-finite loss in epoch " +
                                           std::to_string(epoch),
                                       result.trace);
            }
            loss_sum += value * static_cast<double>(batch.size());
            params.zero_grad();
            ad::backward(loss);
            if (config.clip_norm) clip_gradients(params, *config.clip_norm);
            adam_step(params, config);
            ++result.steps;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_loss = std::numeric_limits<double>::quiet_NaN();
        rec.val_metric = std::numeric_limits<double>::quiet_NaN();
        if (!ds.validation.empty()) {
            const Metrics m = evaluate(model, ds, Split::validation, config.loss);
            rec.val_loss = m.loss;
            rec.val_metric = ds.task == Task::regression ? m.mae : m.accuracy;
        }
        result.trace.push_back(rec);
    }
    params.zero_grad();
    result.rng_state = rng.state();
    return result;
}

Tensor predict_split(const Model& model, const WindowedDataset& ds, Split split) {
    check_compatible(model, ds);
    const auto& idx = ds.indices(split);
    const Index S = idx.size();
    const Index out_size = model.spec().output_size();
    Tensor out(Shape{S, out_size});
    for (Index start = 0; start < S; start += kEvalBatch) {
        const Index stop = std::min(S, start + kEvalBatch);
        const std::span<const Index> batch(idx.data() + start, stop - start);
        const Tensor y = model.predict(gather_inputs(ds, batch));
        const Index B = batch.size();
        for (Index o = 0; o < out_size; ++o)
            for (Index b = 0; b < B; ++b) out[(start + b) + S * o] = y[b + B * o];
    }
    return out;
}

double mean_absolute_error(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("mean_absolute_error: " + pred.shape().str() + " vs " +
                         target.shape().str());
    }
    if (pred.size() == 0) throw std::invalid_argument("mean_absolute_error: empty input");
    double s = 0.0;
    for (Index i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.order() != 2 || logits.shape()[0] != labels.size()) {
        throw ShapeError("accuracy: logits " + logits.shape().str() + " for " +
                         std::to_string(labels.size()) + " labels");
    }
    const Index B = labels.size(), C = logits.shape()[1];
    if (B == 0) throw std::invalid_argument("accuracy: empty input");
    Index hits = 0;
    for (Index b = 0; b < B; ++b) {
        Index best = 0;
        for (Index c = 1; c < C; ++c)
            if (logits[b + B * c] > logits[b + B * best]) best = c;
        hits += static_cast<Index>(best) == static_cast<Index>(labels[b]);
    }
    return static_cast<double>(hits) / static_cast<double>(B);
}

Metrics evaluate(const Model& model, const WindowedDataset& ds, Split split, LossKind loss) {
    const auto start = std::chrono::steady_clock::now();
    const auto& idx = ds.indices(split);
    if (idx.empty()) throw std::invalid_argument(to_string(split) + " split is empty");
    Metrics m;
    m.task = ds.task;
    m.split = split;
    m.samples = idx.size();
    m.parameters = model.params().scalar_count();
    const Tensor pred = predict_split(model, ds, split);
    const ad::Var l = batch_loss(ad::constant(pred), ds, idx, loss);
    m.loss = l.value().item();
    if (ds.task == Task::regression) {
        const Tensor raw_pred = denormalize_targets(ds, pred);
        const Tensor raw_target = denormalize_targets(ds, gather_targets(ds, idx));
        m.mae = mean_absolute_error(raw_pred, raw_target);
        double sq = 0.0;
        for (Index i = 0; i < raw_pred.size(); ++i) {
            const double d = raw_pred[i] - raw_target[i];
            sq += d * d;
        }
        m.rmse = std::sqrt(sq / static_cast<double>(raw_pred.size()));
    } else {
        m.accuracy = accuracy(pred, gather_labels(ds, idx));
    }
    m.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return m;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace(std::ostream& out, const std::vector<EpochRecord>& trace) {
    out << "epoch\ttrain_loss\tval_loss\tval_metric\n";
    for (const auto& r : trace) {
        out << r.epoch << '\t' << format_double(r.train_loss) << '\t' << format_double(r.val_loss)
            << '\t' << format_double(r.val_metric) << '\n';
    }
}

std::vector<EpochRecord> read_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "epoch\ttrain_loss\tval_loss\tval_metric") {
        throw std::runtime_error("trace: missing header");
    }
    std::vector<EpochRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string epoch, a, b, c;
        if (!std::getline(ss, epoch, '\t') || !std::getline(ss, a, '\t') ||
            !std::getline(ss, b, '\t') || !std::getline(ss, c, '\t')) {
            throw std::runtime_error("trace: malformed line '" + line + "'");
        }
        out.push_back({std::stoull(epoch), std::stod(a), std::stod(b), std::stod(c)});
    }
    return out;
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
    for (const auto& [k, v] : kv) out << k << ": " << v << '\n';
}

KeyValues read_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) throw std::runtime_error("malformed summary line '" + line + "'");
        kv.emplace_back(line.substr(0, colon), line.substr(colon + 2));
    }
    return kv;
}

KeyValues metrics_key_values(const Metrics& m, ModelVariant variant) {
    KeyValues kv{{"variant", to_string(variant)},
                 {"task", to_string(m.task)},
                 {"split", to_string(m.split)},
                 {"samples", std::to_string(m.samples)},
                 {"loss", format_double(m.loss)}};
    if (m.task == Task::regression) {
        kv.emplace_back("mae", format_double(m.mae));
        kv.emplace_back("rmse", format_double(m.rmse));
    } else {
        kv.emplace_back("accuracy", format_double(m.accuracy));
    }
    kv.emplace_back("parameters", std::to_string(m.parameters));
    kv.emplace_back("wall_time_s", format_double(m.wall_time_s));
    return kv;
}

}  // namespace rgtn
