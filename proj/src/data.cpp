#include "rgtn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/QR>

#include "rgtn/random.hpp"

namespace rgtn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    fields.push_back(field);
    return fields;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NaN" || s == "nan" || s == "NA" || s == "null";
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

}  // namespace

MissingPolicy parse_missing_policy(const std::string& name) {
    if (name == "drop_row" || name == "drop") return MissingPolicy::drop_row;
    if (name == "forward_fill" || name == "ffill") return MissingPolicy::forward_fill;
    throw std::invalid_argument("unknown missing-value policy '" + name +
                                "' (drop_row | forward_fill)");
}

Task parse_task(const std::string& name) {
    if (name == "regression") return Task::regression;
    if (name == "classification") return Task::classification;
    throw std::invalid_argument("unknown task '" + name + "' (regression | classification)");
}

std::string to_string(Task t) { return t == Task::regression ? "regression" : "classification"; }

NormMethod parse_norm_method(const std::string& name) {
    if (name == "zscore") return NormMethod::zscore;
    if (name == "minmax") return NormMethod::minmax;
    throw std::invalid_argument("unknown normalization '" + name + "' (zscore | minmax)");
}

std::string to_string(NormMethod m) { return m == NormMethod::zscore ? "zscore" : "minmax"; }

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "test";
}

double parse_timestamp(const std::string& text) {
    double value = 0.0;
    if (parse_double(text, value)) return value;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    int consumed = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%d%n", &y, &mo, &d, &consumed);
    if (n != 3 || mo < 1 || mo > 12 || d < 1 || d > 31) {
        throw std::invalid_argument("unparseable timestamp '" + text + "'");
    }
    std::string rest = text.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty()) {
        int used = 0;
        const int k = std::sscanf(rest.c_str(), "%c%d:%d%n", &sep, &h, &mi, &used);
        if (k != 3 || (sep != 'T' && sep != ' ')) {
            throw std::invalid_argument("unparseable timestamp '" + text + "'");
        }
        rest = rest.substr(static_cast<std::size_t>(used));
        if (!rest.empty()) {
            int used_s = 0;
            if (std::sscanf(rest.c_str(), ":%d%n", &s, &used_s) != 1 ||
                static_cast<std::size_t>(used_s) != rest.size()) {
                throw std::invalid_argument("unparseable timestamp '" + text + "'");
            }
        }
    }
    const long long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return static_cast<double>(days * 86400LL + h * 3600LL + mi * 60LL + s);
}

SeriesTable load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file '" + path + "'");
    return parse_csv(in, schema);
}

SeriesTable parse_csv(std::istream& in, const CsvSchema& schema) {
    if (schema.feature_columns.empty()) throw DataError("schema declares no feature columns");
    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV input is empty (header row required)");
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError("schema column '" + name + "' not found in header", 1);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t time_col = column(schema.time_column);
    const std::optional<std::size_t> key_col =
        schema.physical_column ? std::optional(column(*schema.physical_column)) : std::nullopt;
    const std::optional<std::size_t> label_col =
        schema.label_column ? std::optional(column(*schema.label_column)) : std::nullopt;
    std::vector<std::size_t> feature_cols;
    for (const auto& f : schema.feature_columns) feature_cols.push_back(column(f));

    struct Row {
        double time;
        Index key;
        std::vector<double> values;
        int label;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::vector<std::string> keys;
    std::map<std::string, Index> key_index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()),
                            line_no);
        }
        for (auto& f : fields) f = trim(f);
        Row row{0.0, 0, {}, 0, line_no};
        try {
            row.time = parse_timestamp(fields[time_col]);
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what(), line_no);
        }
        if (key_col) {
            const auto& k = fields[*key_col];
            auto [it, inserted] = key_index.emplace(k, keys.size());
            if (inserted) keys.push_back(k);
            row.key = it->second;
        }
        for (std::size_t c : feature_cols) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!is_missing(fields[c]) && !parse_double(fields[c], v)) {
                throw DataError("malformed number '" + fields[c] + "' in column '" + header[c] + "'",
                                line_no);
            }
            row.values.push_back(v);
        }
        if (label_col) {
            double v = 0.0;
            if (!parse_double(fields[*label_col], v) || v != std::floor(v) || v < 0) {
                throw DataError("malformed label '" + fields[*label_col] + "'", line_no);
            }
            row.label = static_cast<int>(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("CSV input has no data rows");
    if (keys.empty()) keys.push_back("all");

    std::vector<double> times;
    for (const auto& r : rows) times.push_back(r.time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const Index t_count = times.size(), p_count = keys.size(), f_count = feature_cols.size();
    std::vector<double> grid(t_count * p_count * f_count, 0.0);
    std::vector<std::size_t> seen(t_count * p_count, 0);
    std::vector<int> labels(t_count, -1);
    for (const auto& r : rows) {
        const Index t = static_cast<Index>(std::lower_bound(times.begin(), times.end(), r.time) -
                                           times.begin());
        if (seen[t + t_count * r.key]) {
            throw DataError("timestamps not strictly increasing: duplicate time for key '" +
                                keys[r.key] + "' (first seen on line " +
                                std::to_string(seen[t + t_count * r.key]) + ")",
                            r.line);
        }
        seen[t + t_count * r.key] = r.line;
        for (Index f = 0; f < f_count; ++f) grid[t + t_count * (r.key + p_count * f)] = r.values[f];
        if (label_col) {
            if (labels[t] >= 0 && labels[t] != r.label) {
                throw DataError("conflicting labels for one timestamp", r.line);
            }
            labels[t] = r.label;
        }
    }
    for (Index t = 0; t < t_count; ++t)
        for (Index p = 0; p < p_count; ++p)
            if (!seen[t + t_count * p]) {
                throw DataError("table is not rectangular: key '" + keys[p] +
                                "' has no row for timestamp " + std::to_string(times[t]));
            }

    // Missing values.
    std::vector<bool> keep(t_count, true);
    for (Index p = 0; p < p_count; ++p) {
        for (Index f = 0; f < f_count; ++f) {
            for (Index t = 0; t < t_count; ++t) {
                double& v = grid[t + t_count * (p + p_count * f)];
                if (!std::isnan(v)) continue;
                if (schema.missing == MissingPolicy::drop_row) {
                    keep[t] = false;
                } else if (t == 0) {
                    throw DataError("cannot forward-fill a missing value at the first timestamp");
                } else {
                    v = grid[(t - 1) + t_count * (p + p_count * f)];
                }
            }
        }
    }

    SeriesTable table;
    table.physical_keys = keys;
    table.feature_names = schema.feature_columns;
    std::vector<Index> kept;
    for (Index t = 0; t < t_count; ++t)
        if (keep[t]) kept.push_back(t);
    if (kept.empty()) throw DataError("every row was dropped for missing values");
    const Index n = kept.size();
    table.values = Tensor(Shape{n, p_count, f_count});
    for (Index i = 0; i < n; ++i) {
        const Index t = kept[i];
        table.timestamps.push_back(times[t]);
        for (Index p = 0; p < p_count; ++p)
            for (Index f = 0; f < f_count; ++f)
                table.values[i + n * (p + p_count * f)] = grid[t + t_count * (p + p_count * f)];
        if (label_col) table.labels.push_back(labels[t]);
    }
    return table;
}

const std::vector<Index>& WindowedDataset::indices(Split s) const {
    switch (s) {
        case Split::train: return train;
        case Split::validation: return validation;
        case Split::test: return test;
    }
    return test;
}

Index WindowedDataset::output_size() const {
    return task == Task::regression ? physical() : classes;
}

WindowedDataset window(const SeriesTable& table, const WindowOptions& options) {
    const Index T = table.length();
    const Index tau = options.tau;
    if (tau < 1) throw std::invalid_argument("window: tau must be >= 1");
    if (options.task == Task::regression && options.horizon < 1) {
        throw std::invalid_argument("window: horizon must be >= 1");
    }
    const Index P = table.physical(), F = table.features();

    WindowedDataset ds;
    ds.task = options.task;
    ds.tau = tau;
    ds.horizon = options.horizon;
    ds.target_feature = options.target_feature;

    Index samples = 0;
    if (options.task == Task::regression) {
        if (T <= tau + options.horizon) {
            throw std::invalid_argument("series too short: " + std::to_string(T) +
                                        " steps for tau = " + std::to_string(tau) +
                                        " and horizon = " + std::to_string(options.horizon));
        }
        if (options.target_feature >= F) {
            throw std::invalid_argument("window: target feature index out of range");
        }
        samples = T - tau - options.horizon + 1;
    } else {
        if (table.labels.size() != T) {
            throw std::invalid_argument("classification windows need a label column");
        }
        if (T < tau) throw std::invalid_argument("series too short for tau = " + std::to_string(tau));
        samples = T - tau + 1;
    }

    ds.inputs = Tensor(Shape{samples, tau, P, F});
    for (Index f = 0; f < F; ++f)
        for (Index p = 0; p < P; ++p)
            for (Index t = 0; t < tau; ++t)
                for (Index s = 0; s < samples; ++s)
                    ds.inputs[s + samples * (t + tau * (p + P * f))] =
                        table.values[(s + t) + T * (p + P * f)];

    for (Index s = 0; s < samples; ++s) ds.window_end_times.push_back(table.timestamps[s + tau - 1]);
    if (options.task == Task::regression) {
        ds.targets = Tensor(Shape{samples, P});
        for (Index s = 0; s < samples; ++s) {
            const Index row = s + tau - 1 + options.horizon;
            ds.target_times.push_back(table.timestamps[row]);
            for (Index p = 0; p < P; ++p)
                ds.targets[s + samples * p] = table.values[row + T * (p + P * options.target_feature)];
        }
    } else {
        int max_label = 0;
        for (Index s = 0; s < samples; ++s) {
            ds.labels.push_back(table.labels[s + tau - 1]);
            max_label = std::max(max_label, ds.labels.back());
        }
        ds.classes = static_cast<Index>(max_label) + 1;
        ds.target_times = ds.window_end_times;
    }
    return ds;
}

namespace {

void check_fractions(const std::array<double, 3>& fr) {
    const double total = fr[0] + fr[1] + fr[2];
    if (fr[0] <= 0.0 || fr[1] < 0.0 || fr[2] < 0.0 || std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must be nonnegative, sum to 1, train > 0");
    }
}

}  // namespace

void split_chronological(WindowedDataset& ds, std::array<double, 3> fractions) {
    check_fractions(fractions);
    const Index n = ds.samples();
    const auto n_train = static_cast<Index>(std::floor(fractions[0] * static_cast<double>(n)));
    const auto n_val = static_cast<Index>(std::floor(fractions[1] * static_cast<double>(n)));
    if (n_train == 0) throw std::invalid_argument("training split is empty");
    ds.train.clear();
    ds.validation.clear();
    ds.test.clear();
    for (Index i = 0; i < n; ++i) {
        if (i < n_train) ds.train.push_back(i);
        else if (i < n_train + n_val) ds.validation.push_back(i);
        else ds.test.push_back(i);
    }
}

void split_stratified(WindowedDataset& ds, std::array<double, 3> fractions, std::uint64_t seed) {
    check_fractions(fractions);
    if (ds.task != Task::classification) {
        throw std::invalid_argument("stratified split needs a classification dataset");
    }
    Rng rng(seed);
    ds.train.clear();
    ds.validation.clear();
    ds.test.clear();
    for (Index c = 0; c < ds.classes; ++c) {
        std::vector<Index> members;
        for (Index i = 0; i < ds.labels.size(); ++i)
            if (static_cast<Index>(ds.labels[i]) == c) members.push_back(i);
        for (Index i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
        const auto n = static_cast<double>(members.size());
        const auto n_train = static_cast<Index>(std::floor(fractions[0] * n));
        const auto n_val = static_cast<Index>(std::floor(fractions[1] * n));
        for (Index i = 0; i < members.size(); ++i) {
            if (i < n_train) ds.train.push_back(members[i]);
            else if (i < n_train + n_val) ds.validation.push_back(members[i]);
            else ds.test.push_back(members[i]);
        }
    }
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.validation.begin(), ds.validation.end());
    std::sort(ds.test.begin(), ds.test.end());
    if (ds.train.empty()) throw std::invalid_argument("training split is empty");
}

Normalization fit_normalization(const WindowedDataset& ds, NormMethod method,
                                std::vector<std::string>* warnings) {
    if (ds.train.empty()) throw std::invalid_argument("normalize needs a training split");
    const Index S = ds.samples(), tau = ds.tau, P = ds.physical(), F = ds.features();
    Normalization norm{method, Tensor(Shape{P, F}), Tensor::filled(Shape{P, F}, 1.0)};
    for (Index f = 0; f < F; ++f) {
        for (Index p = 0; p < P; ++p) {
            double sum = 0.0, lo = INFINITY, hi = -INFINITY;
            Index count = 0;
            for (Index t = 0; t < tau; ++t)
                for (Index s : ds.train) {
                    const double v = ds.inputs[s + S * (t + tau * (p + P * f))];
                    sum += v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                    ++count;
                }
            const double mean = sum / static_cast<double>(count);
            double offset = 0.0, spread = 0.0;
            if (method == NormMethod::zscore) {
                double sq = 0.0;
                for (Index t = 0; t < tau; ++t)
                    for (Index s : ds.train) {
                        const double d = ds.inputs[s + S * (t + tau * (p + P * f))] - mean;
                        sq += d * d;
                    }
                offset = mean;
                spread = std::sqrt(sq / static_cast<double>(count));
            } else {
                offset = lo;
                spread = hi - lo;
            }
            if (!(spread > 1e-12 * std::max(1.0, std::abs(offset)))) {
                if (warnings) {
                    warnings->push_back("channel (physical " + std::to_string(p) + ", feature " +
                                        std::to_string(f) +
                                        ") has zero spread on the training split; left unscaled");
                }
                continue;
            }
            norm.offset(p, f) = offset;
            norm.scale(p, f) = spread;
        }
    }
    return norm;
}

WindowedDataset apply_normalization(WindowedDataset ds, Normalization norm) {
    if (ds.normalization) throw std::invalid_argument("dataset is already normalized");
    const Index S = ds.samples(), tau = ds.tau, P = ds.physical(), F = ds.features();
    if (norm.offset.shape() != Shape{P, F} || norm.scale.shape() != Shape{P, F}) {
        throw ShapeError("normalization statistics " + norm.offset.shape().str() +
                         " do not match (physical, features) = " + Shape{P, F}.str());
    }
    for (Index f = 0; f < F; ++f)
        for (Index p = 0; p < P; ++p)
            for (Index t = 0; t < tau; ++t)
                for (Index s = 0; s < S; ++s) {
                    double& v = ds.inputs[s + S * (t + tau * (p + P * f))];
                    v = (v - norm.offset(p, f)) / norm.scale(p, f);
                }
    if (ds.task == Task::regression) {
        for (Index p = 0; p < P; ++p)
            for (Index s = 0; s < S; ++s) {
                double& v = ds.targets[s + S * p];
                v = (v - norm.offset(p, ds.target_feature)) / norm.scale(p, ds.target_feature);
            }
    }
    ds.normalization = std::move(norm);
    return ds;
}

WindowedDataset normalize(WindowedDataset ds, NormMethod method) {
    if (ds.normalization) throw std::invalid_argument("dataset is already normalized");
    Normalization norm = fit_normalization(ds, method, &ds.warnings);
    return apply_normalization(std::move(ds), std::move(norm));
}

Tensor denormalize_targets(const WindowedDataset& ds, const Tensor& values) {
    if (values.order() != 2 || values.shape()[1] != ds.physical()) {
        throw ShapeError("denormalize_targets: expected (samples, " +
                         std::to_string(ds.physical()) + "), got " + values.shape().str());
    }
    Tensor out = values;
    if (!ds.normalization) return out;
    const auto& n = *ds.normalization;
    const Index S = values.shape()[0];
    for (Index p = 0; p < ds.physical(); ++p)
        for (Index s = 0; s < S; ++s) {
            double& v = out[s + S * p];
            v = v * n.scale(p, ds.target_feature) + n.offset(p, ds.target_feature);
        }
    return out;
}

Tensor denormalize_inputs(const WindowedDataset& ds, const Tensor& values) {
    if (values.order() != 4 || values.shape()[2] != ds.physical() ||
        values.shape()[3] != ds.features()) {
        throw ShapeError("denormalize_inputs: unexpected shape " + values.shape().str());
    }
    Tensor out = values;
    if (!ds.normalization) return out;
    const auto& n = *ds.normalization;
    const Index lead = values.shape()[0] * values.shape()[1];
    for (Index f = 0; f < ds.features(); ++f)
        for (Index p = 0; p < ds.physical(); ++p)
            for (Index i = 0; i < lead; ++i) {
                double& v = out[i + lead * (p + ds.physical() * f)];
                v = v * n.scale(p, f) + n.offset(p, f);
            }
    return out;
}

Tensor gather_inputs(const WindowedDataset& ds, std::span<const Index> samples) {
    const Index S = ds.samples();
    const Index B = samples.size();
    const Index rest = ds.inputs.size() / S;
    Tensor out(Shape{B, ds.tau, ds.physical(), ds.features()});
    for (Index r = 0; r < rest; ++r)
        for (Index b = 0; b < B; ++b) out[b + B * r] = ds.inputs[samples[b] + S * r];
    return out;
}

Tensor gather_targets(const WindowedDataset& ds, std::span<const Index> samples) {
    const Index S = ds.samples();
    const Index B = samples.size();
    const Index P = ds.physical();
    Tensor out(Shape{B, P});
    for (Index p = 0; p < P; ++p)
        for (Index b = 0; b < B; ++b) out[b + B * p] = ds.targets[samples[b] + S * p];
    return out;
}

std::vector<int> gather_labels(const WindowedDataset& ds, std::span<const Index> samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (Index s : samples) out.push_back(ds.labels[s]);
    return out;
}

namespace {

Eigen::MatrixXd random_orthogonal(Rng& rng, Index n) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

// One step Z <- F_phys Z F_feat^T + noise * E.
Eigen::MatrixXd step(const Eigen::MatrixXd& z, const Eigen::MatrixXd& f_phys,
                     const Eigen::MatrixXd& f_feat, double noise, Rng& rng) {
    Eigen::MatrixXd next = f_phys * z * f_feat.transpose();
    for (Eigen::Index j = 0; j < next.cols(); ++j)
        for (Eigen::Index i = 0; i < next.rows(); ++i) next(i, j) += noise * rng.normal();
    return next;
}

}  // namespace

SeriesTable synth_linear_dynamics(const LinearDynamicsConfig& config) {
    if (config.physical < 1 || config.features < 1 || config.length < 1) {
        throw std::invalid_argument("synthetic dynamics need positive sizes");
    }
    if (!(config.contraction > 0.0 && config.contraction < 1.0)) {
        throw std::invalid_argument("synthetic dynamics contraction must lie in (0, 1)");
    }
    Rng rng(config.seed);
    const Eigen::MatrixXd f_phys = config.contraction * random_orthogonal(rng, config.physical);
    const Eigen::MatrixXd f_feat = config.contraction * random_orthogonal(rng, config.features);
    const Index P = config.physical, F = config.features, T = config.length;

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P),
                                              static_cast<Eigen::Index>(F));
    // Burn-in towards the stationary regime.
    for (int i = 0; i < 200; ++i) z = step(z, f_phys, f_feat, config.noise, rng);

    SeriesTable table;
    for (Index p = 0; p < P; ++p) table.physical_keys.push_back("p" + std::to_string(p));
    for (Index f = 0; f < F; ++f) table.feature_names.push_back("f" + std::to_string(f));
    table.values = Tensor(Shape{T, P, F});
    for (Index t = 0; t < T; ++t) {
        table.timestamps.push_back(static_cast<double>(t));
        for (Index f = 0; f < F; ++f)
            for (Index p = 0; p < P; ++p)
                table.values[t + T * (p + P * f)] =
                    z(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(f));
        z = step(z, f_phys, f_feat, config.noise, rng);
    }
    return table;
}

WindowedDataset synth_classification(const ClassificationConfig& config) {
    if (config.tau < 2 || config.physical < 1 || config.features < 1 || config.samples < 2) {
        throw std::invalid_argument("synthetic classification needs tau >= 2 and positive sizes");
    }
    Rng rng(config.seed);
    const Index P = config.physical, F = config.features, tau = config.tau, S = config.samples;
    std::array<Eigen::MatrixXd, 2> f_phys, f_feat;
    for (int k = 0; k < 2; ++k) {
        f_phys[k] = 0.95 * random_orthogonal(rng, P);
        f_feat[k] = 0.95 * random_orthogonal(rng, F);
    }
    Eigen::MatrixXd start(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(F));
    for (Eigen::Index j = 0; j < start.cols(); ++j)
        for (Eigen::Index i = 0; i < start.rows(); ++i) start(i, j) = rng.normal();

    WindowedDataset ds;
    ds.task = Task::classification;
    ds.tau = tau;
    ds.horizon = 0;
    ds.classes = 2;
    ds.inputs = Tensor(Shape{S, tau, P, F});
    for (Index s = 0; s < S; ++s) {
        const int label = static_cast<int>(s % 2);
        ds.labels.push_back(label);
        ds.window_end_times.push_back(static_cast<double>(s));
        ds.target_times.push_back(static_cast<double>(s));
        Eigen::MatrixXd z = start;
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) += config.noise * rng.normal();
        for (Index t = 0; t < tau; ++t) {
            for (Index f = 0; f < F; ++f)
                for (Index p = 0; p < P; ++p)
                    ds.inputs[s + S * (t + tau * (p + P * f))] =
                        z(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(f));
            z = step(z, f_phys[label], f_feat[label], config.noise, rng);
        }
    }
    return ds;
}

}  // namespace rgtn
