// mtcbench - generate MTC traffic traces and benchmark traffic predictors.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "mtc/campaign.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string profile = "desk";
    bool profile_set = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir;
};

mtc::ExperimentConfig load_config(const CommonOpts& opts) {
    std::string profile = opts.profile;
    mtc::KvConfig kv;
    if (!opts.config_path.empty()) {
        kv = mtc::KvConfig::parse_file(opts.config_path);
        if (!opts.profile_set && kv.has("campaign", "profile"))
            profile = *kv.get("campaign", "profile");
    }
    auto cfg = mtc::ExperimentConfig::from_profile(profile);
    if (!opts.config_path.empty()) cfg.apply(kv);
    if (opts.seed) cfg.master_seed = *opts.seed;
    if (opts.workers) cfg.workers = *opts.workers;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_out = true) {
    cmd->add_option("--config", opts.config_path, "key=value config file with [section] headers");
    cmd->add_option("--profile", opts.profile, "parameter profile: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->each([&opts](const std::string&) { opts.profile_set = true; });
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config file)");
    cmd->add_option("--workers", opts.workers, "concurrent Monte Carlo runs");
    auto* out = cmd->add_option("--out", opts.out_dir, "output directory");
    if (need_out) out->required();
}

int cmd_generate(const CommonOpts& opts) {
    const auto cfg = load_config(opts);
    fs::create_directories(opts.out_dir);
    const mtc::Deployment dep = mtc::make_deployment(
        cfg.deployment, mtc::derive_seed(cfg.master_seed, "deploy"));
    mtc::save_deployment(dep, (fs::path(opts.out_dir) / "deployment.csv").string());
    const mtc::TrafficTrace trace = cfg.make_trace(mtc::derive_seed(cfg.master_seed, "trace"));
    mtc::save_trace(trace, (fs::path(opts.out_dir) / "trace.csv").string());
    const mtc::SupervisedDataset ds = mtc::make_dataset(trace, cfg.window, cfg.split);
    mtc::save_dataset_meta(ds, (fs::path(opts.out_dir) / "dataset_meta.txt").string());
    for (const auto& w : trace.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote deployment.csv, trace.csv, dataset_meta.txt to " << opts.out_dir << "\n";
    return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& trace_path) {
    const auto cfg = load_config(opts);
    fs::create_directories(opts.out_dir);
    const mtc::TrafficTrace trace = mtc::load_trace(trace_path);
    const mtc::SupervisedDataset ds = mtc::make_dataset(trace, cfg.window, cfg.split);
    for (mtc::ModelKind kind : cfg.kinds) {
        if (kind == mtc::ModelKind::arima) continue; // fitted at evaluation time
        mtc::TrainConfig tc = cfg.train_cfg;
        tc.seed = mtc::derive_seed(cfg.master_seed, "train-" + mtc::to_string(kind));
        const mtc::TrainedModel tm = mtc::train(cfg.spec_for(kind), tc, ds);
        const std::string name = mtc::to_string(kind);
        mtc::save_model(tm, (fs::path(opts.out_dir) / ("model_" + name + ".bin")).string());
        mtc::save_loss_curve(tm, (fs::path(opts.out_dir) / ("loss_" + name + ".csv")).string());
        std::cout << name << ": " << tm.param_count << " params, best epoch "
                  << (tm.best_epoch + 1) << ", train time " << tm.train_seconds << " s\n";
    }
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& trace_path,
                 const std::string& models_dir) {
    const auto cfg = load_config(opts);
    fs::create_directories(opts.out_dir);
    const mtc::TrafficTrace trace = mtc::load_trace(trace_path);
    const mtc::SupervisedDataset ds = mtc::make_dataset(trace, cfg.window, cfg.split);
    std::vector<mtc::ModelEvalOutput> outputs;
    for (mtc::ModelKind kind : cfg.kinds) {
        if (kind == mtc::ModelKind::arima) {
            outputs.push_back(mtc::evaluate_arima(cfg.arima, ds, trace));
        } else {
            const std::string path =
                (fs::path(models_dir) / ("model_" + mtc::to_string(kind) + ".bin")).string();
            outputs.push_back(mtc::evaluate_model(mtc::load_model(path), ds));
        }
    }
    mtc::RunResult run;
    run.seed = cfg.master_seed;
    mtc::detail::write_run_files(fs::path(opts.out_dir), run, outputs);
    for (const auto& out : outputs) {
        std::cout << out.report.model << ": accuracy " << out.report.accuracy;
        if (out.report.auc_defined) std::cout << ", auc " << out.report.auc;
        if (out.report.r_defined) std::cout << ", R " << out.report.r_metric;
        std::cout << "\n";
    }
    return 0;
}

int cmd_campaign(const CommonOpts& opts) {
    const auto cfg = load_config(opts);
    const mtc::AggregateReport agg = mtc::run_campaign(cfg, fs::path(opts.out_dir));
    std::cout << agg.runs_succeeded << "/" << agg.runs_configured << " runs succeeded; report in "
              << opts.out_dir << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    const auto cfg = load_config(opts);
    mtc::sweep_complexity(cfg, cfg.sweep_c, fs::path(opts.out_dir));
    std::cout << "sweep written to " << opts.out_dir << "/sweep.csv\n";
    return 0;
}

int cmd_report(const CommonOpts& opts) {
    const mtc::AggregateReport agg = mtc::aggregate_from_dir(fs::path(opts.out_dir));
    mtc::write_report(agg, fs::path(opts.out_dir));
    std::cout << "report rebuilt from " << agg.runs_succeeded << " run(s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MTC traffic trace generator and predictor benchmark"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, eval_opts, camp_opts, sweep_opts, report_opts;
    std::string trace_path, models_dir;

    auto* gen = app.add_subcommand("generate", "generate a deployment and traffic trace");
    add_common(gen, gen_opts);

    auto* tr = app.add_subcommand("train", "train the configured predictors on a trace");
    add_common(tr, train_opts);
    tr->add_option("--trace", trace_path, "trace file produced by generate")->required();

    auto* ev = app.add_subcommand("evaluate", "evaluate trained predictors on a trace");
    add_common(ev, eval_opts);
    ev->add_option("--trace", trace_path, "trace file produced by generate")->required();
    ev->add_option("--models", models_dir, "directory with model_<kind>.bin files")->required();

    auto* camp = app.add_subcommand("campaign", "run a full Monte Carlo benchmark campaign");
    add_common(camp, camp_opts);

    auto* sw = app.add_subcommand("sweep", "run matched-complexity campaigns over [sweep] c_values");
    add_common(sw, sweep_opts);

    auto* rep = app.add_subcommand("report", "re-aggregate a campaign directory");
    add_common(rep, report_opts);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(gen_opts);
        if (tr->parsed()) return cmd_train(train_opts, trace_path);
        if (ev->parsed()) return cmd_evaluate(eval_opts, trace_path, models_dir);
        if (camp->parsed()) return cmd_campaign(camp_opts);
        if (sw->parsed()) return cmd_sweep(sweep_opts);
        if (rep->parsed()) return cmd_report(report_opts);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const mtc::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
