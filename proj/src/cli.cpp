#include "mlgcn/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mlgcn/architectures.hpp"
#include "mlgcn/baselines.hpp"
#include "mlgcn/config.hpp"
#include "mlgcn/dataset_io.hpp"
#include "mlgcn/error.hpp"
#include "mlgcn/fem.hpp"
#include "mlgcn/interpret.hpp"
#include "mlgcn/microgen.hpp"
#include "mlgcn/train.hpp"

namespace mlgcn {

namespace {

// Flag name -> config key.
struct FlagSpec {
    std::string flag;
    std::string key;
    std::string help;
};

// Every flag writes the configuration key of the same meaning.
const std::vector<FlagSpec> kFlags = {
    {"--count", "count", "number of samples to generate"},
    {"--seed", "seed", "dataset seed (generate) or parameter initialization seed (train)"},
    {"--out", "out", "output directory or file"},
    {"--dataset", "dataset", "dataset directory holding manifest.txt"},
    {"--run", "run", "run directory written by train"},
    {"--sample", "sample", "dataset index of the sample to export"},
    {"--variant", "variant", "original, full, reduced, down or vee"},
    {"--filters", "filters", "filters per convolution layer"},
    {"--features", "features", "channels entering the pooled feature vector"},
    {"--conv", "conv", "number of convolution stages"},
    {"--dense", "dense", "number of dense layers in the head"},
    {"--lr", "lr", "Adam learning rate"},
    {"--batch", "batch", "mini-batch size"},
    {"--patience", "patience", "epochs without test improvement before stopping"},
    {"--max-epochs", "max_epochs", "epoch budget"},
    {"--split-seed", "split_seed", "seed of the train/test/validation split"},
};

void require(const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw InputError(std::string("missing required setting: ") + what);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_rho(const std::optional<double>& rho) { return rho ? format_real(*rho) : "degenerate"; }

void require_labels(const Dataset& d) {
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        if (!d.samples[i].label) {
            throw InputError("sample " + (d.directory / d.manifest.entries[i].path).string() +
                             " has no label; run 'solve' first");
        }
    }
}

std::vector<GraphSample> prepare_all(const Dataset& d) {
    std::vector<GraphSample> out;
    out.reserve(d.samples.size());
    for (const auto& m : d.samples) out.push_back(prepare_sample(m));
    return out;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
    require(cfg.out, "--out");
    const Manifest m = generate_dataset(cfg.count, cfg.generator, cfg.seed, cfg.out);
    out << "wrote " << m.entries.size() << " samples to " << cfg.out.string() << '\n';
    return kExitSuccess;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
    require(cfg.dataset, "--dataset");
    Dataset d = load_dataset(cfg.dataset);
    for (auto& m : d.samples) m.label = label_sample(m);
    save_dataset(d);
    out << "labeled " << d.samples.size() << " samples in " << cfg.dataset.string() << '\n';
    return kExitSuccess;
}

std::string baseline_table(const Dataset& d) {
    std::ostringstream t;
    t << "sample kappa_eff arithmetic harmonic hill mean_orientation\n";
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& m = d.samples[i];
        const MixtureEstimates est = sample_mixtures(m);
        t << i << ' ' << format_real(*m.label) << ' ' << format_real(est.arithmetic) << ' '
          << format_real(est.harmonic) << ' ' << format_real(est.hill) << ' ' << format_real(mean_orientation(m))
          << '\n';
    }
    return t.str();
}

int cmd_baseline(const RunConfig& cfg, std::ostream& out) {
    require(cfg.dataset, "--dataset");
    const Dataset d = load_dataset(cfg.dataset);
    require_labels(d);
    const std::string table = baseline_table(d);
    if (cfg.out.empty()) {
        out << table;
    } else {
        write_text(cfg.out, table);
        out << "wrote baseline table to " << cfg.out.string() << '\n';
    }
    return kExitSuccess;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    require(cfg.dataset, "--dataset");
    require(cfg.out, "--out");
    const Dataset d = load_dataset(cfg.dataset);
    require_labels(d);
    std::vector<GraphSample> samples = prepare_all(d);
    const DatasetSplit split = split_dataset(samples.size(), cfg.train.ratios, cfg.train.split_seed);
    const NormalizationStats stats = normalize(samples, split.train);
    Model model = build_model(cfg.model, default_input_schema());
    initialize_parameters(model, cfg.train.init_seed);
    const TrainReport report = fit(model, samples, split, cfg.train);
    RunConfig snapshot = cfg;
    snapshot.run = cfg.out;
    write_run_directory(cfg.out, snapshot.snapshot(), model, stats, report);
    out << "best epoch " << report.best_epoch << " (" << to_string(report.reason) << "), validation rmse "
        << format_real(report.validation.rmse) << ", rho " << format_rho(report.validation.rho) << '\n';
    return kExitSuccess;
}

struct LoadedRun {
    RunConfig config;
    Model model;
    NormalizationStats stats;
};

LoadedRun load_run(const std::filesystem::path& dir) {
    LoadedRun r{RunConfig{}, read_checkpoint(dir / "checkpoint.bin"),
                parse_normalization(read_text(dir / "normalization.txt"))};
    r.config.load_file(dir / "config.txt");
    return r;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    require(cfg.dataset, "--dataset");
    require(cfg.run, "--run");
    const LoadedRun run = load_run(cfg.run);
    const Dataset d = load_dataset(cfg.dataset);
    require_labels(d);
    std::vector<GraphSample> samples = prepare_all(d);
    for (auto& s : samples) run.stats.apply(s);
    const DatasetSplit split = split_dataset(samples.size(), run.config.train.ratios, run.config.train.split_seed);
    const Metrics model_metrics = evaluate(run.model, samples, split.validation);

    std::vector<double> labels, arithmetic, harmonic, hill;
    for (std::size_t i : split.validation) {
        const MixtureEstimates est = sample_mixtures(d.samples[i]);
        labels.push_back(*d.samples[i].label);
        arithmetic.push_back(est.arithmetic);
        harmonic.push_back(est.harmonic);
        hill.push_back(est.hill);
    }
    std::ostringstream rec;
    rec << "variant = " << to_string(run.model.spec().variant) << '\n';
    rec << format_metrics(model_metrics);
    for (const auto& [name, series] : {std::pair{"arithmetic", &arithmetic}, std::pair{"harmonic", &harmonic},
                                       std::pair{"hill", &hill}}) {
        const Metrics m = score(*series, labels);
        rec << name << "_rmse = " << format_real(m.rmse) << '\n';
        rec << name << "_rho = " << format_rho(m.rho) << '\n';
    }
    const auto path = cfg.out.empty() ? cfg.run / "evaluation.txt" : cfg.out;
    write_text(path, rec.str());
    out << rec.str();
    return kExitSuccess;
}

int cmd_interpret(const RunConfig& cfg, std::ostream& out) {
    require(cfg.dataset, "--dataset");
    require(cfg.run, "--run");
    require(cfg.out, "--out");
    const LoadedRun run = load_run(cfg.run);
    const Dataset d = load_dataset(cfg.dataset);
    require_labels(d);
    std::vector<GraphSample> samples = prepare_all(d);
    for (auto& s : samples) run.stats.apply(s);
    const DatasetSplit split = split_dataset(samples.size(), run.config.train.ratios, run.config.train.split_seed);

    if (split.validation.size() < 2) {
        throw InputError("validation split has " + std::to_string(split.validation.size()) +
                         " sample(s); interpretation needs at least 2");
    }
    std::vector<ForwardTrace> traces;
    std::vector<double> labels;
    for (std::size_t i : split.validation) {
        traces.push_back(forward(run.model, samples[i]));
        labels.push_back(*samples[i].label);
    }
    const auto rho = feature_output_correlation(traces, labels);
    const auto activation = filter_activation_stats(traces);

    std::ostringstream rec;
    for (std::size_t a = 0; a < rho.size(); ++a) rec << "rho_F" << a << " = " << format_rho(rho[a]) << '\n';
    for (const auto& layer : activation) {
        for (std::size_t f = 0; f < layer.fraction.size(); ++f)
            rec << "active_" << layer.layer << "_f" << f << " = " << format_real(layer.fraction[f]) << '\n';
    }
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create directory " + cfg.out.string() + ": " + ec.message());
    write_text(cfg.out / "interpretation.txt", rec.str());

    if (cfg.sample >= samples.size()) throw InputError("--sample " + std::to_string(cfg.sample) + " out of range");
    const ExportSummary summary =
        export_artifacts(d.samples[cfg.sample], samples[cfg.sample], forward(run.model, samples[cfg.sample]), cfg.out);
    out << rec.str();
    out << "exported " << summary.files.size() << " artifact files for sample " << cfg.sample << " to "
        << cfg.out.string() << '\n';
    return kExitSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-level graph convolutional homogenization of polycrystal conductivity", "mlgcn"};
    app.require_subcommand(1);

    struct Sub {
        std::string name;
        std::string help;
        std::vector<std::string> flags;
    };
    const std::vector<Sub> subs = {
        {"generate", "generate synthetic polycrystal samples", {"--count", "--seed", "--out"}},
        {"solve", "label samples with the FEM conductivity oracle", {"--dataset"}},
        {"baseline", "tabulate mixture-rule estimates", {"--dataset", "--out"}},
        {"train", "train a model and write a run directory",
         {"--dataset", "--out", "--seed", "--variant", "--filters", "--features", "--conv", "--dense", "--lr",
          "--batch", "--patience", "--max-epochs", "--split-seed"}},
        {"evaluate", "score a trained run on the validation split", {"--dataset", "--run", "--out"}},
        {"interpret", "export correlations, activations and filter maps", {"--dataset", "--run", "--out", "--sample"}},
    };

    std::map<std::string, std::string> flag_values;
    std::map<std::string, std::string> config_paths;
    std::vector<std::pair<CLI::App*, std::vector<std::pair<CLI::Option*, std::string>>>> registered;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        std::vector<std::pair<CLI::Option*, std::string>> opts;
        for (const auto& flag : s.flags) {
            const auto spec = std::find_if(kFlags.begin(), kFlags.end(), [&](const auto& f) { return f.flag == flag; });
            opts.emplace_back(sub->add_option(flag, flag_values[s.name + flag], spec->help), spec->key);
        }
        sub->add_option("--config", config_paths[s.name], "flat key = value configuration file");
        registered.emplace_back(sub, std::move(opts));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        for (auto& [sub, opts] : registered) {
            if (!sub->parsed()) continue;
            const std::string name = sub->get_name();
            RunConfig cfg;
            if (!config_paths[name].empty()) cfg.load_file(config_paths[name]);
            for (auto& [opt, key] : opts) {
                if (opt->count() > 0) cfg.set(key, opt->as<std::string>());
            }
            if (name == "generate") return cmd_generate(cfg, out);
            if (name == "solve") return cmd_solve(cfg, out);
            if (name == "baseline") return cmd_baseline(cfg, out);
            if (name == "train") return cmd_train(cfg, out);
            if (name == "evaluate") return cmd_evaluate(cfg, out);
            if (name == "interpret") return cmd_interpret(cfg, out);
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace mlgcn
