#include "rgtn/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace rgtn {

using nlohmann::json;

namespace {

// Typed access to one JSON object with field-qualified errors and a check
// for unknown keys.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
        throw ConfigError(field + ": " + msg);
    }

    std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        if (!has(key)) fail(field(key), "required field is missing");
        return j_.at(key);
    }

    Section section(const std::string& key) { return Section(raw(key), field(key)); }

    std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
        if (!has(key)) {
            if (def) return *def;
            fail(field(key), "required field is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_string()) fail(field(key), "expected a string");
        return v.get<std::string>();
    }

    double number(const std::string& key, std::optional<double> def = std::nullopt) {
        if (!has(key)) {
            if (def) return *def;
            fail(field(key), "required field is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number()) fail(field(key), "expected a number");
        return v.get<double>();
    }

    std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> def,
                          std::uint64_t min = 0) {
        if (!has(key)) {
            if (def) return *def;
            fail(field(key), "required field is missing");
        }
        return as_integer(j_.at(key), field(key), min);
    }

    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<Index> index_list(const std::string& key, std::uint64_t min) {
        const json& v = raw(key);
        if (!v.is_array()) fail(field(key), "expected an array of integers");
        std::vector<Index> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(as_integer(v[i], field(key) + "[" + std::to_string(i) + "]", min));
        return out;
    }

    std::vector<std::string> string_list(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) fail(field(key), "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail(field(key), "expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    template <class F>
    auto parsed(const std::string& key, const std::string& def, F parse) {
        const std::string text = str(key, def);
        try {
            return parse(text);
        } catch (const std::invalid_argument& e) {
            fail(field(key), e.what());
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(field(it.key()), "unknown field");
    }

    static std::uint64_t as_integer(const json& v, const std::string& field, std::uint64_t min) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                       v.get<std::int64_t>() < 0)) {
            fail(field, "expected a nonnegative integer");
        }
        const auto n = v.get<std::uint64_t>();
        if (n < min) fail(field, "must be >= " + std::to_string(min));
        return n;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

ModelConfig parse_model(const json& j, const std::string& path) {
    Section s(j, path);
    ModelConfig mc;
    ModelSpec& spec = mc.spec;
    spec.variant = s.parsed("variant", "grgtn", parse_variant);
    spec.tau = s.integer("tau", std::nullopt, 1);
    spec.hidden = s.integer("hidden", std::nullopt, 1);
    spec.c = s.number("c", 0.5);
    spec.activation = s.parsed("activation", "tanh", parse_activation);
    spec.hidden_bias = s.boolean("hidden_bias", true);
    const bool rnn = spec.variant == ModelVariant::rnn;
    spec.head = rnn ? HeadKind::dense : HeadKind::tt;
    if (s.has("head")) {
        Section h = s.section("head");
        spec.head = h.parsed("kind", to_string(spec.head), parse_head);
        if (h.has("out_shape")) mc.head_out_shape = h.index_list("out_shape", 1);
        if (h.has("ranks")) spec.head_ranks = h.index_list("ranks", 1);
        spec.head_bias = h.boolean("bias", true);
        h.finish();
    }
    if (spec.head == HeadKind::tt && spec.head_ranks.size() != 2) {
        Section::fail(s.field("head.ranks"), "needs 2 interior ranks for the (tau, physical, M) "
                                             "hidden tensor");
    }
    if (spec.head == HeadKind::tt && mc.head_out_shape && mc.head_out_shape->size() != 3) {
        Section::fail(s.field("head.out_shape"), "needs 3 extents (tau, physical, M)");
    }
    s.finish();
    // Data-dependent extents are checked later; validate the rest now.
    ModelSpec probe = spec;
    probe.physical = probe.features = 1;
    if (mc.head_out_shape) probe.head_out_shape = *mc.head_out_shape;
    else if (probe.head == HeadKind::dense) probe.head_out_shape = {1};
    try {
        probe.validate();
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        if (msg.rfind("model.", 0) == 0) msg = msg.substr(6);
        throw ConfigError(path + "." + msg);
    }
    return mc;
}

DataConfig parse_data(const json& j, const std::string& base_dir) {
    Section s(j, "data");
    DataConfig d;
    d.task = s.parsed("task", "regression", parse_task);
    const std::string source = s.str("source");
    if (source == "synthetic") {
        d.source = DataSource::synthetic;
        Section g = s.section("synthetic");
        if (d.task == Task::regression) {
            auto& l = d.linear;
            l.physical = g.integer("physical", l.physical, 1);
            l.features = g.integer("features", l.features, 1);
            l.length = g.integer("length", l.length, 2);
            l.noise = g.number("noise", l.noise);
            l.contraction = g.number("contraction", l.contraction);
            l.seed = g.integer("seed", l.seed);
            if (l.noise < 0.0) Section::fail("data.synthetic.noise", "must be >= 0");
            if (!(l.contraction > 0.0 && l.contraction < 1.0)) {
                Section::fail("data.synthetic.contraction", "must lie in (0, 1)");
            }
        } else {
            auto& c = d.classification;
            c.physical = g.integer("physical", c.physical, 1);
            c.features = g.integer("features", c.features, 1);
            c.samples = g.integer("samples", c.samples, 2);
            c.noise = g.number("noise", c.noise);
            c.seed = g.integer("seed", c.seed);
            if (c.noise < 0.0) Section::fail("data.synthetic.noise", "must be >= 0");
        }
        g.finish();
    } else if (source == "csv") {
        d.source = DataSource::csv;
        Section c = s.section("csv");
        namespace fs = std::filesystem;
        fs::path p = c.str("path");
        if (p.is_relative()) p = fs::path(base_dir) / p;
        if (!fs::is_regular_file(p)) {
            Section::fail("data.csv.path", "file '" + p.string() + "' does not exist");
        }
        d.csv_path = fs::absolute(p).lexically_normal().string();
        d.schema.time_column = c.str("time_column");
        if (c.has("physical_column")) d.schema.physical_column = c.str("physical_column");
        d.schema.feature_columns = c.string_list("feature_columns");
        if (d.schema.feature_columns.empty()) {
            Section::fail("data.csv.feature_columns", "must name at least one column");
        }
        if (c.has("label_column")) d.schema.label_column = c.str("label_column");
        d.schema.missing = c.parsed("missing", "drop_row", parse_missing_policy);
        if (d.task == Task::classification && !d.schema.label_column) {
            Section::fail("data.csv.label_column", "required for classification");
        }
        c.finish();
    } else {
        Section::fail("data.source", "expected 'synthetic' or 'csv'");
    }
    d.horizon = s.integer("horizon", 1, 1);
    d.target_feature = s.integer("target_feature", 0);
    const std::string norm = s.str("normalization", "zscore");
    if (norm == "none") {
        d.normalization.reset();
    } else {
        try {
            d.normalization = parse_norm_method(norm);
        } catch (const std::invalid_argument&) {
            Section::fail("data.normalization", "expected 'zscore', 'minmax' or 'none'");
        }
    }
    if (s.has("split")) {
        const json& sp = s.raw("split");
        if (!sp.is_array() || sp.size() != 3) {
            Section::fail("data.split", "expected [train, validation, test] fractions");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (!sp[i].is_number()) Section::fail("data.split", "fractions must be numbers");
            d.split[i] = sp[i].get<double>();
        }
        const double total = d.split[0] + d.split[1] + d.split[2];
        if (d.split[0] <= 0.0 || d.split[1] < 0.0 || d.split[2] < 0.0 ||
            std::abs(total - 1.0) > 1e-9) {
            Section::fail("data.split", "fractions must be nonnegative, sum to 1, train > 0");
        }
    }
    d.split_seed = s.integer("split_seed", 1);
    s.finish();
    return d;
}

TrainConfig parse_training(const json& j) {
    Section s(j, "training");
    TrainConfig t;
    t.learning_rate = s.number("learning_rate", t.learning_rate);
    t.beta1 = s.number("beta1", t.beta1);
    t.beta2 = s.number("beta2", t.beta2);
    t.epsilon = s.number("epsilon", t.epsilon);
    t.epochs = s.integer("epochs", t.epochs);
    t.batch_size = s.integer("batch_size", t.batch_size, 1);
    t.seed = s.integer("seed", t.seed);
    t.loss = s.parsed("loss", "", [&](const std::string& name) {
        return name.empty() ? t.loss : parse_loss(name);
    });
    if (s.has("clip_norm")) t.clip_norm = s.number("clip_norm");
    s.finish();
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return t;
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::string& base_dir) {
    Section root(j, "");
    RunConfig rc;
    rc.model = parse_model(root.raw("model"), "model");
    rc.data = parse_data(root.raw("data"), base_dir);
    json training = root.has("training") ? root.raw("training") : json::object();
    const bool loss_given = training.is_object() && training.contains("loss");
    rc.training = parse_training(training);
    if (!loss_given) {
        rc.training.loss =
            rc.data.task == Task::classification ? LossKind::cross_entropy : LossKind::mae;
    }
    if ((rc.data.task == Task::classification) != (rc.training.loss == LossKind::cross_entropy)) {
        throw ConfigError("training.loss: '" + to_string(rc.training.loss) +
                          "' does not fit the " + to_string(rc.data.task) + " task");
    }
    if (root.has("output")) {
        Section o = root.section("output");
        rc.output.directory = o.str("directory", rc.output.directory);
        rc.output.format = o.str("format", rc.output.format);
        if (rc.output.format != "text" && rc.output.format != "json") {
            Section::fail("output.format", "expected 'text' or 'json'");
        }
        o.finish();
    }
    if (root.has("bench")) {
        Section b = root.section("bench");
        const json& list = b.raw("variants");
        if (!list.is_array()) Section::fail("bench.variants", "expected an array");
        if (list.size() < 2) Section::fail("bench.variants", "needs at least two models to compare");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string field = "bench.variants[" + std::to_string(i) + "]";
            json merged = root.raw("model");
            if (list[i].is_string()) {
                merged["variant"] = list[i];
                // The RNN baseline cannot use the TT head of the base model.
                if (list[i] == "rnn") merged.erase("head");
            } else if (list[i].is_object()) {
                for (const char* shared : {"tau", "hidden"}) {
                    if (list[i].contains(shared)) {
                        Section::fail(field + "." + shared, "must be shared by all variants");
                    }
                }
                if (list[i].value("variant", "") == "rnn" && !list[i].contains("head")) {
                    merged.erase("head");
                }
                for (auto it = list[i].begin(); it != list[i].end(); ++it) merged[it.key()] = it.value();
            } else {
                Section::fail(field, "expected a variant name or an object");
            }
            rc.bench.push_back(parse_model(merged, field));
        }
        b.finish();
    }
    root.finish();

    rc.snapshot = j;
    if (rc.data.source == DataSource::csv) rc.snapshot["data"]["csv"]["path"] = rc.data.csv_path;
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_run_config(j, dir.empty() ? "." : dir.string());
}

void override_seed(RunConfig& config, std::uint64_t seed) {
    config.training.seed = seed;
    config.snapshot["training"]["seed"] = seed;
}

WindowedDataset prepare_dataset(const DataConfig& data, Index tau) {
    return prepare_dataset(data, tau, std::nullopt);
}

WindowedDataset prepare_dataset(const DataConfig& data, Index tau,
                                const std::optional<Normalization>& norm) {
    WindowedDataset ds;
    if (data.source == DataSource::synthetic && data.task == Task::classification) {
        ClassificationConfig cc = data.classification;
        cc.tau = tau;
        ds = synth_classification(cc);
    } else {
        const SeriesTable table = data.source == DataSource::synthetic
                                      ? synth_linear_dynamics(data.linear)
                                      : load_csv(data.csv_path, data.schema);
        if (data.task == Task::regression && data.target_feature >= table.features()) {
            throw ConfigError("data.target_feature: index " + std::to_string(data.target_feature) +
                              " but the table has " + std::to_string(table.features()) +
                              " features");
        }
        ds = window(table, {tau, data.horizon, data.task, data.target_feature});
    }
    if (data.task == Task::regression) split_chronological(ds, data.split);
    else split_stratified(ds, data.split, data.split_seed);
    if (norm) return apply_normalization(std::move(ds), *norm);
    if (data.normalization) return normalize(std::move(ds), *data.normalization);
    return ds;
}

ModelSpec resolve_model(const ModelConfig& model, const WindowedDataset& ds) {
    ModelSpec spec = model.spec;
    spec.physical = ds.physical();
    spec.features = ds.features();
    if (model.head_out_shape) {
        spec.head_out_shape = *model.head_out_shape;
    } else if (spec.head == HeadKind::tt) {
        spec.head_out_shape = ds.task == Task::regression ? std::vector<Index>{1, ds.physical(), 1}
                                                          : std::vector<Index>{1, 1, ds.classes};
    } else {
        spec.head_out_shape = {ds.output_size()};
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (spec.output_size() != ds.output_size()) {
        throw ConfigError("model.head.out_shape: produces " + std::to_string(spec.output_size()) +
                          " outputs but the " + to_string(ds.task) + " task needs " +
                          std::to_string(ds.output_size()));
    }
    return spec;
}

}  // namespace rgtn
