#include "rgtn/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "rgtn/archive.hpp"
#include "rgtn/config.hpp"
#include "rgtn/layers.hpp"
#include "rgtn/tensor_train.hpp"
#include "rgtn/train.hpp"

namespace rgtn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.rgtn";

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    return f;
}

void write_summary_file(const fs::path& base, const std::string& format, const KeyValues& kv) {
    if (format == "json") {
        nlohmann::ordered_json j;
        for (const auto& [k, v] : kv) {
            std::size_t used = 0;
            double num = 0.0;
            try {
                num = std::stod(v, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == v.size() && !v.empty()) {
                if (v.find_first_not_of("0123456789") == std::string::npos) {
                    j[k] = std::stoull(v);
                } else {
                    j[k] = num;
                }
            } else {
                j[k] = v;
            }
        }
        open_out(base.string() + ".json") << j.dump(2) << '\n';
    } else {
        auto f = open_out(base.string() + ".txt");
        write_key_values(f, kv);
    }
}

Archive make_checkpoint(const RunConfig& cfg, const Model& model, const WindowedDataset& ds,
                        const std::string& rng_state) {
    Archive a;
    a.kind = "checkpoint";
    a.meta.emplace_back("variant", to_string(model.spec().variant));
    a.meta.emplace_back("task", to_string(ds.task));
    a.meta.emplace_back("seed", std::to_string(cfg.training.seed));
    a.meta.emplace_back("rng_state", rng_state);
    a.meta.emplace_back("config", cfg.snapshot.dump());
    for (const auto& p : model.params().entries()) a.tensors.emplace_back(p.name, p.var.value());
    if (ds.normalization) {
        a.meta.emplace_back("normalization", to_string(ds.normalization->method));
        a.tensors.emplace_back("norm.offset", ds.normalization->offset);
        a.tensors.emplace_back("norm.scale", ds.normalization->scale);
    }
    return a;
}

struct LoadedCheckpoint {
    Archive archive;
    RunConfig config;
    std::optional<Normalization> normalization;
};

LoadedCheckpoint load_checkpoint(const std::string& path) {
    LoadedCheckpoint lc;
    lc.archive = load_archive(path);
    if (lc.archive.kind != "checkpoint") {
        throw ArchiveError("'" + path + "' holds a '" + lc.archive.kind + "' archive, not a checkpoint");
    }
    const auto cfg_text = lc.archive.meta_value("config");
    if (!cfg_text) throw ArchiveError("checkpoint has no config snapshot");
    json j;
    try {
        j = json::parse(*cfg_text);
    } catch (const json::parse_error& e) {
        throw ArchiveError(std::string("checkpoint config snapshot is corrupt: ") + e.what());
    }
    lc.config = parse_run_config(j);
    const Tensor* offset = lc.archive.find("norm.offset");
    const Tensor* scale = lc.archive.find("norm.scale");
    if (offset && scale) {
        lc.normalization = Normalization{
            parse_norm_method(lc.archive.meta_value("normalization").value_or("zscore")), *offset,
            *scale};
    }
    return lc;
}

std::vector<std::pair<std::string, Tensor>> model_tensors(const Archive& a) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& [name, t] : a.tensors)
        if (name.rfind("norm.", 0) != 0) out.emplace_back(name, t);
    return out;
}

void print_warnings(const WindowedDataset& ds, std::ostream& err) {
    for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
}

void write_predictions(const fs::path& path, const Model& model, const WindowedDataset& ds,
                       Split split) {
    const auto& idx = ds.indices(split);
    const Tensor pred = predict_split(model, ds, split);
    const Index S = idx.size(), K = pred.shape()[1];
    auto f = open_out(path);
    f << "sample\ttarget_time";
    if (ds.task == Task::regression) {
        const Tensor raw_pred = denormalize_targets(ds, pred);
        const Tensor raw_target = denormalize_targets(ds, gather_targets(ds, idx));
        for (Index k = 0; k < K; ++k) f << "\tpred_" << k;
        for (Index k = 0; k < K; ++k) f << "\ttarget_" << k;
        f << '\n';
        for (Index s = 0; s < S; ++s) {
            f << idx[s] << '\t' << format_double(ds.target_times[idx[s]]);
            for (Index k = 0; k < K; ++k) f << '\t' << format_double(raw_pred[s + S * k]);
            for (Index k = 0; k < K; ++k) f << '\t' << format_double(raw_target[s + S * k]);
            f << '\n';
        }
    } else {
        f << "\tlabel";
        for (Index k = 0; k < K; ++k) f << "\tlogit_" << k;
        f << '\n';
        for (Index s = 0; s < S; ++s) {
            f << idx[s] << '\t' << format_double(ds.target_times[idx[s]]) << '\t'
              << ds.labels[idx[s]];
            for (Index k = 0; k < K; ++k) f << '\t' << format_double(pred[s + S * k]);
            f << '\n';
        }
    }
}

struct Options {
    std::string config;
    std::string checkpoint;
    std::string out;
    std::string input;
    std::string split = "test";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t max_rank = 0;
    bool max_rank_given = false;
    double tol = 1e-12;
};

RunConfig config_with_overrides(const Options& o) {
    RunConfig cfg = load_run_config(o.config);
    if (o.seed_given) override_seed(cfg, o.seed);
    return cfg;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = config_with_overrides(o);
    const fs::path dir = ensure_dir(o.out.empty() ? cfg.output.directory : o.out);
    const WindowedDataset ds = prepare_dataset(cfg.data, cfg.model.spec.tau);
    print_warnings(ds, err);
    Model model(resolve_model(cfg.model, ds), cfg.training.seed);

    TrainResult result;
    try {
        result = train(model, ds, cfg.training);
    } catch (const TrainingDiverged& e) {
        auto f = open_out(dir / "trace.tsv");
        write_trace(f, e.trace());
        throw;
    }
    {
        auto f = open_out(dir / "trace.tsv");
        write_trace(f, result.trace);
    }
    save_archive((dir / kCheckpointFile).string(), make_checkpoint(cfg, model, ds, result.rng_state));

    Metrics m = evaluate(model, ds, Split::test, cfg.training.loss);
    m.wall_time_s = seconds_since(t0);
    const KeyValues kv = metrics_key_values(m, model.spec().variant);
    write_summary_file(dir / "summary", cfg.output.format, kv);
    write_key_values(out, kv);
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedCheckpoint lc = load_checkpoint(o.checkpoint);
    const RunConfig cfg = o.config.empty() ? lc.config : config_with_overrides(o);
    Split split = Split::test;
    if (o.split == "train") split = Split::train;
    else if (o.split == "validation") split = Split::validation;

    const WindowedDataset ds = prepare_dataset(cfg.data, cfg.model.spec.tau, lc.normalization);
    print_warnings(ds, err);
    Model model(resolve_model(cfg.model, ds), cfg.training.seed);
    model.load_parameters(model_tensors(lc.archive));

    Metrics m = evaluate(model, ds, split, cfg.training.loss);
    m.wall_time_s = seconds_since(t0);
    const KeyValues kv = metrics_key_values(m, model.spec().variant);
    std::string out_dir = o.out;
    if (out_dir.empty()) out_dir = fs::path(o.checkpoint).parent_path().string();
    const fs::path dir = ensure_dir(out_dir.empty() ? "." : out_dir);
    write_summary_file(dir / "eval_metrics", cfg.output.format, kv);
    write_predictions(dir / "predictions.tsv", model, ds, split);
    write_key_values(out, kv);
    return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = config_with_overrides(o);
    if (cfg.bench.empty()) {
        throw ConfigError("bench.variants: required (list at least two models to compare)");
    }
    const fs::path dir = ensure_dir(o.out.empty() ? cfg.output.directory : o.out);
    const WindowedDataset ds = prepare_dataset(cfg.data, cfg.model.spec.tau);
    print_warnings(ds, err);
    const std::string metric = ds.task == Task::regression ? "test_mae" : "test_accuracy";

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cfg.bench.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Model model(resolve_model(cfg.bench[i], ds), cfg.training.seed);
        const TrainResult result = train(model, ds, cfg.training);
        const Metrics m = evaluate(model, ds, Split::test, cfg.training.loss);
        const double wall = seconds_since(t0);
        const std::string name = to_string(model.spec().variant);
        {
            auto f = open_out(dir / ("trace_" + std::to_string(i + 1) + "_" + name + ".tsv"));
            write_trace(f, result.trace);
        }
        rows.push_back({name, format_double(ds.task == Task::regression ? m.mae : m.accuracy),
                        std::to_string(m.parameters), format_double(wall)});
    }

    const std::vector<std::string> header{"variant", metric, "parameters", "wall_time_s"};
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    auto print_row = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) out << " | ";
            if (c + 1 == r.size()) out << r[c];
            else out << std::left << std::setw(static_cast<int>(width[c])) << r[c];
        }
        out << '\n';
    };
    print_row(header);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << "-+-";
        out << std::string(width[c], '-');
    }
    out << '\n';
    for (const auto& r : rows) print_row(r);

    auto f = open_out(dir / "bench.tsv");
    for (std::size_t c = 0; c < header.size(); ++c) f << (c ? "\t" : "") << header[c];
    f << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) f << (c ? "\t" : "") << r[c];
        f << '\n';
    }
    return kExitOk;
}

std::string join(const std::vector<Index>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

int cmd_decompose(const Options& o, std::ostream& out, std::ostream&) {
    Tensor x;
    if (is_archive_file(o.input)) {
        const Archive a = load_archive(o.input);
        if (a.tensors.size() != 1) {
            throw std::runtime_error("archive '" + o.input + "' must hold exactly one tensor, found " +
                                     std::to_string(a.tensors.size()));
        }
        x = a.tensors.front().second;
    } else {
        std::ifstream in(o.input);
        if (!in) throw std::runtime_error("cannot open tensor file '" + o.input + "'");
        x = read_text_tensor(in);
    }
    if (x.order() < 1) throw std::runtime_error("decompose needs a tensor of order >= 1");

    TTSvdOptions opts;
    opts.rel_tolerance = o.tol;
    if (o.max_rank_given) opts.max_rank = o.max_rank;
    const TTNetwork tt = tt_svd(x, opts);
    const double error = relative_error(tt_reconstruct(tt), x);
    const Index dense = dense_param_count(x.shape());
    const Index compact = tt_param_count(tt);

    KeyValues kv{{"order", std::to_string(x.order())},
                 {"shape", join(x.shape().dims())},
                 {"ranks", join(tt.ranks())},
                 {"dense_parameters", std::to_string(dense)},
                 {"tt_parameters", std::to_string(compact)},
                 {"compression_ratio",
                  format_double(static_cast<double>(dense) / static_cast<double>(compact))},
                 {"relative_error", format_double(error)},
                 {"tolerance", format_double(o.tol)},
                 {"max_rank", o.max_rank_given ? std::to_string(o.max_rank) : "none"}};
    if (!o.out.empty()) {
        const fs::path dir = ensure_dir(o.out);
        Archive a;
        a.kind = "tt";
        a.meta.emplace_back("shape", join(x.shape().dims()));
        a.meta.emplace_back("ranks", join(tt.ranks()));
        for (std::size_t k = 0; k < tt.cores.size(); ++k)
            a.tensors.emplace_back("core" + std::to_string(k + 1), tt.cores[k]);
        save_archive((dir / "tt_cores.rgtn").string(), a);
        auto f = open_out(dir / "decompose_report.txt");
        write_key_values(f, kv);
    }
    write_key_values(out, kv);
    return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out, std::ostream&) {
    const Archive a = load_archive(o.checkpoint);
    out << "kind: " << a.kind << '\n';
    out << "format_version: " << Archive::kVersion << '\n';
    for (const auto& [k, v] : a.meta)
        if (k != "config" && k != "rng_state") out << k << ": " << v << '\n';

    Index total = 0, head = 0;
    std::vector<Index> tt_ranks;
    for (const auto& [name, t] : a.tensors) {
        out << "tensor " << name << ": " << t.shape().str() << " " << t.size() << '\n';
        if (name.rfind("norm.", 0) == 0) continue;
        total += t.size();
        if (name.rfind("head.", 0) == 0) head += t.size();
        const bool head_core = name.rfind("head.core", 0) == 0;
        if ((head_core || (a.kind == "tt" && name.rfind("core", 0) == 0)) && t.order() == 3) {
            if (tt_ranks.empty()) tt_ranks.push_back(t.shape()[0]);
            tt_ranks.push_back(t.shape()[2]);
        }
    }
    if (a.kind == "checkpoint") {
        out << "parameters: " << total << '\n';
        out << "filter_parameters: " << total - head << '\n';
        out << "head_parameters: " << head << '\n';
        if (const Tensor* w = a.find("filter.W_r")) {
            out << "w_r_idempotency_residual: " << format_double(idempotency_residual(*w)) << '\n';
        }
    } else {
        out << "entries: " << total << '\n';
    }
    if (!tt_ranks.empty()) out << "tt_ranks: " << join(tt_ranks) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Recurrent graph tensor network toolkit", "rgtn"};
    app.require_subcommand(1);
    Options o;

    auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
    train_cmd->add_option("--config", o.config, "Run config (JSON)")->required();
    train_cmd->add_option("--out", o.out, "Output directory (overrides output.directory)");
    auto* train_seed = train_cmd->add_option("--seed", o.seed, "Training seed (overrides config)");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint archive")->required();
    eval_cmd->add_option("--config", o.config, "Run config for data and model (default: snapshot)");
    eval_cmd->add_option("--out", o.out, "Output directory (default: checkpoint directory)");
    eval_cmd->add_option("--split", o.split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "validation", "test"}));
    auto* eval_seed = eval_cmd->add_option("--seed", o.seed, "Seed (overrides config)");

    auto* bench_cmd = app.add_subcommand("bench", "Train and compare the models of a bench config");
    bench_cmd->add_option("--config", o.config, "Run config with a bench section")->required();
    bench_cmd->add_option("--out", o.out, "Output directory");
    auto* bench_seed = bench_cmd->add_option("--seed", o.seed, "Training seed (overrides config)");

    auto* dec_cmd = app.add_subcommand("decompose", "TT-SVD of a tensor file");
    dec_cmd->add_option("--input", o.input, "Text tensor file or single-tensor archive")->required();
    auto* max_rank = dec_cmd->add_option("--max-rank", o.max_rank, "Cap on every TT rank")
                         ->check(CLI::PositiveNumber);
    dec_cmd->add_option("--tol", o.tol, "Relative Frobenius tolerance")
        ->check(CLI::NonNegativeNumber);
    dec_cmd->add_option("--out", o.out, "Directory for the cores and report");

    auto* ins_cmd = app.add_subcommand("inspect", "Describe a checkpoint or TT archive");
    ins_cmd->add_option("--checkpoint", o.checkpoint, "Archive to inspect")->required();

    std::vector<std::string> argv_store{"rgtn"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    o.seed_given = train_seed->count() + eval_seed->count() + bench_seed->count() > 0;
    o.max_rank_given = max_rank->count() > 0;

    try {
        if (train_cmd->parsed()) return cmd_train(o, out, err);
        if (eval_cmd->parsed()) return cmd_eval(o, out, err);
        if (bench_cmd->parsed()) return cmd_bench(o, out, err);
        if (dec_cmd->parsed()) return cmd_decompose(o, out, err);
        if (ins_cmd->parsed()) return cmd_inspect(o, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ShapeError& e) {
        err << "shape error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace rgtn
