#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mtc/config.hpp"
#include "mtc/eval_runner.hpp"
#include "mtc/geometry.hpp"

namespace mtc {

namespace fs = std::filesystem;

/// One reproducible benchmark campaign: traffic model, predictor set, train
/// settings, Monte Carlo size and the master seed.
struct ExperimentConfig {
    std::string profile = "desk"; // desk | paper
    int runs = 10;
    int workers = 2;
    std::uint64_t master_seed = 1;
    SplitFractions split;

    std::string traffic_model = "quasiperiodic"; // quasiperiodic | poisson
    PoissonTrafficConfig poisson;
    QuasiPeriodicConfig quasi;
    DeploymentConfig deployment;

    std::vector<ModelKind> kinds{ModelKind::rnn, ModelKind::lstm, ModelKind::gru,
                                 ModelKind::tcn, ModelKind::arima};
    int hidden = 48;
    int tcn_filters = 8;
    int tcn_layers = 3;
    int tcn_kernel = 2;
    double tcn_dropout = 0.05;
    int window = 8;
    ArimaEvalConfig arima;

    TrainConfig train_cfg;
    std::vector<std::int64_t> sweep_c{64, 128, 256};

    static ExperimentConfig desk() {
        ExperimentConfig c;
        c.profile = "desk";
        c.runs = 10;
        c.train_cfg.epochs = 10;
        c.hidden = 48;
        c.tcn_filters = 16;
        // transfer intervals short enough that part of the fleet has its
        // period visible inside the 8-slot window, with a ~9% duty cycle
        c.quasi.t_min_ms = 4.0;
        c.quasi.t_max_ms = 40.0;
        c.quasi.p_active_min = 1.0;
        c.quasi.p_active_max = 1.0;
        c.quasi.q = 0.3;
        c.quasi.n_devices = 40;
        c.quasi.n_slots = 520;
        c.poisson.lambda_t = 0.05;
        c.poisson.q = 0.5;
        c.poisson.n_devices = 40;
        c.poisson.n_slots = 520;
        c.sweep_c = {64, 128, 256};
        return c;
    }

    static ExperimentConfig paper() {
        ExperimentConfig c;
        c.profile = "paper";
        c.runs = 150;
        c.train_cfg.epochs = 50;
        c.hidden = 256;
        c.tcn_filters = 32;
        c.quasi.t_min_ms = 50.0;
        c.quasi.t_max_ms = 1000.0;
        c.quasi.q = 0.3;
        c.quasi.n_devices = 70;
        c.quasi.n_slots = 1428; // ~9.8e4 supervised samples
        c.poisson.lambda_t = 0.05;
        c.poisson.q = 0.5;
        c.poisson.n_devices = 70;
        c.poisson.n_slots = 1428;
        c.sweep_c = {128, 256, 512, 1024};
        return c;
    }

    static ExperimentConfig from_profile(const std::string& name) {
        if (name == "desk") return desk();
        if (name == "paper") return paper();
        throw ConfigError("unknown profile: " + name + " (expected desk or paper)");
    }

    /// Applies file overrides on top of the profile defaults.
    void apply(const KvConfig& kv) {
        runs = static_cast<int>(kv.get_int("campaign", "runs", runs));
        workers = static_cast<int>(kv.get_int("campaign", "workers", workers));
        master_seed = kv.get_u64("campaign", "master_seed", master_seed);
        if (kv.has("campaign", "split")) {
            const auto parts = kv.get_list("campaign", "split");
            if (parts.size() != 3) throw ConfigError("campaign.split needs three fractions");
            split = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
        }
        traffic_model = kv.get_or("traffic", "model", traffic_model);
        if (traffic_model != "quasiperiodic" && traffic_model != "poisson")
            throw ConfigError("traffic.model must be quasiperiodic or poisson");
        poisson.lambda_t = kv.get_double("traffic", "lambda_t", poisson.lambda_t);
        poisson.q = kv.get_double("traffic", "q", poisson.q);
        quasi.q = kv.get_double("traffic", "q", quasi.q);
        quasi.t_min_ms = kv.get_double("traffic", "t_min_ms", quasi.t_min_ms);
        quasi.t_max_ms = kv.get_double("traffic", "t_max_ms", quasi.t_max_ms);
        quasi.jitter_fraction = kv.get_double("traffic", "jitter", quasi.jitter_fraction);
        quasi.p_active_min = kv.get_double("traffic", "p_active_min", quasi.p_active_min);
        quasi.p_active_max = kv.get_double("traffic", "p_active_max", quasi.p_active_max);
        const int n_devices = static_cast<int>(kv.get_int("traffic", "n_devices", quasi.n_devices));
        const std::int64_t n_slots = kv.get_int("traffic", "n_slots", quasi.n_slots);
        quasi.n_devices = poisson.n_devices = n_devices;
        quasi.n_slots = poisson.n_slots = n_slots;
        deployment.lambda_m = kv.get_double("deployment", "lambda_m", deployment.lambda_m);
        deployment.lambda_e = kv.get_double("deployment", "lambda_e", deployment.lambda_e);
        deployment.region_radius = kv.get_double("deployment", "region_radius", deployment.region_radius);
        if (kv.has("models", "kinds")) {
            kinds.clear();
            for (const auto& name : kv.get_list("models", "kinds"))
                kinds.push_back(model_kind_from_string(name));
            if (kinds.empty()) throw ConfigError("models.kinds is empty");
        }
        hidden = static_cast<int>(kv.get_int("models", "hidden", hidden));
        tcn_filters = static_cast<int>(kv.get_int("models", "tcn_filters", tcn_filters));
        tcn_layers = static_cast<int>(kv.get_int("models", "tcn_layers", tcn_layers));
        tcn_kernel = static_cast<int>(kv.get_int("models", "tcn_kernel", tcn_kernel));
        tcn_dropout = kv.get_double("models", "tcn_dropout", tcn_dropout);
        window = static_cast<int>(kv.get_int("models", "window", window));
        arima.order.p = static_cast<int>(kv.get_int("models", "arima_p", arima.order.p));
        arima.order.d = static_cast<int>(kv.get_int("models", "arima_d", arima.order.d));
        arima.order.q = static_cast<int>(kv.get_int("models", "arima_q", arima.order.q));
        arima.auto_order = kv.get_int("models", "arima_auto", arima.auto_order ? 1 : 0) != 0;
        train_cfg.epochs = static_cast<int>(kv.get_int("train", "epochs", train_cfg.epochs));
        train_cfg.batch = static_cast<int>(kv.get_int("train", "batch", train_cfg.batch));
        train_cfg.lr = kv.get_double("train", "lr", train_cfg.lr);
        if (kv.has("sweep", "c_values")) {
            sweep_c.clear();
            for (const auto& v : kv.get_list("sweep", "c_values")) sweep_c.push_back(std::stoll(v));
        }
        validate();
    }

    void validate() const {
        if (runs < 1) throw ConfigError("campaign: runs must be >= 1");
        if (workers < 1) throw ConfigError("campaign: workers must be >= 1");
        split.validate();
        poisson.validate();
        quasi.validate();
        deployment.validate();
        if (window < 1) throw ConfigError("campaign: window must be >= 1");
        if (hidden < 1 || tcn_filters < 1) throw ConfigError("campaign: model widths must be >= 1");
        train_cfg.validate();
    }

    ModelSpec spec_for(ModelKind kind) const {
        ModelSpec spec;
        spec.kind = kind;
        spec.hidden = {hidden};
        spec.tcn_layers = tcn_layers;
        spec.tcn_filters = tcn_filters;
        spec.tcn_kernel = tcn_kernel;
        spec.tcn_dropout = tcn_dropout;
        spec.window = window;
        spec.arima = arima.order;
        return spec;
    }

    TrafficTrace make_trace(std::uint64_t seed) const {
        if (traffic_model == "poisson") return gen_poisson_trace(poisson, seed);
        return gen_quasiperiodic_trace(quasi, seed);
    }

    void echo(std::ostream& out) const {
        out << "[campaign]\n"
            << "profile=" << profile << "\n"
            << "runs=" << runs << "\n"
            << "workers=" << workers << "\n"
            << "master_seed=" << master_seed << "\n"
            << "split=" << split.train << ',' << split.val << ',' << split.test << "\n"
            << "[traffic]\n"
            << "model=" << traffic_model << "\n"
            << "n_devices=" << quasi.n_devices << "\n"
            << "n_slots=" << quasi.n_slots << "\n"
            << "lambda_t=" << poisson.lambda_t << "\n"
            << "q=" << (traffic_model == "poisson" ? poisson.q : quasi.q) << "\n"
            << "t_min_ms=" << quasi.t_min_ms << "\n"
            << "t_max_ms=" << quasi.t_max_ms << "\n"
            << "jitter=" << quasi.jitter_fraction << "\n"
            << "p_active_min=" << quasi.p_active_min << "\n"
            << "p_active_max=" << quasi.p_active_max << "\n"
            << "[models]\n"
            << "kinds=";
        for (std::size_t i = 0; i < kinds.size(); ++i) out << (i ? "," : "") << to_string(kinds[i]);
        out << "\n"
            << "hidden=" << hidden << "\n"
            << "tcn_filters=" << tcn_filters << "\n"
            << "window=" << window << "\n"
            << "arima_order=" << arima.order.p << ',' << arima.order.d << ',' << arima.order.q << "\n"
            << "[train]\n"
            << "epochs=" << train_cfg.epochs << "\n"
            << "batch=" << train_cfg.batch << "\n"
            << "lr=" << train_cfg.lr << "\n";
    }
};

struct RunResult {
    int index = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::vector<EvalReport> reports;
};

struct MetricStat {
    double mean = 0.0;
    double stddev = 0.0;
    int n = 0;
};

struct ModelAggregate {
    std::string model;
    std::map<std::string, MetricStat> metrics;
    CostTriple mean_costs;
    int cost_n = 0;
    RocCurve pooled_roc;
    bool roc_defined = false;
};

struct AggregateReport {
    std::uint64_t master_seed = 0;
    int runs_configured = 0;
    int runs_succeeded = 0;
    std::vector<std::string> failures;
    std::vector<ModelAggregate> models;

    const ModelAggregate* find(const std::string& name) const {
        for (const auto& m : models)
            if (m.model == name) return &m;
        return nullptr;
    }
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string opt_fmt(const std::optional<double>& v) {
    return v ? fmt(*v) : "undefined";
}

inline std::string run_dir_name(int index) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "run_%03d", index);
    return buf;
}

inline void write_run_files(const fs::path& dir, const RunResult& run,
                            const std::vector<ModelEvalOutput>& outputs) {
    std::ofstream metrics(dir / "metrics.csv");
    metrics << "# seed=" << run.seed << "\n";
    metrics << "model,r_metric,r_clamped,tpr,tnr,accuracy,auc\n";
    for (const auto& out : outputs) {
        const EvalReport& r = out.report;
        metrics << r.model << ',' << (r.r_defined ? fmt(r.r_metric) : "undefined") << ','
                << (r.r_clamped ? 1 : 0) << ',' << opt_fmt(r.tpr) << ',' << opt_fmt(r.tnr) << ','
                << fmt(r.accuracy) << ',' << (r.auc_defined ? fmt(r.auc) : "undefined") << "\n";
    }
    metrics.close();

    std::ofstream costs(dir / "costs.csv");
    costs << "# seed=" << run.seed << "\n";
    costs << "model,training_seconds,inference_seconds,size_bytes\n";
    for (const auto& out : outputs) {
        const EvalReport& r = out.report;
        costs << r.model << ',' << fmt(r.costs.training_seconds) << ','
              << fmt(r.costs.inference_seconds) << ',' << fmt(r.costs.size_bytes) << "\n";
    }
    costs.close();

    for (const auto& out : outputs) {
        std::ofstream sc(dir / ("scores_" + out.report.model + ".csv"));
        sc << "# seed=" << run.seed << "\n";
        sc << "label,score\n";
        for (std::size_t i = 0; i < out.test_scores.size(); ++i)
            sc << static_cast<int>(out.test_labels[i]) << ',' << fmt(out.test_scores[i]) << "\n";
    }
}

} // namespace detail

/// One Monte Carlo run: deploy, generate, split, train every model, evaluate.
inline RunResult execute_run(const ExperimentConfig& config, int index, const fs::path& dir) {
    RunResult run;
    run.index = index;
    run.seed = derive_seed(config.master_seed, "run", static_cast<std::uint64_t>(index));
    try {
        fs::create_directories(dir);
        const Deployment dep = make_deployment(config.deployment, derive_seed(run.seed, "deploy"));
        save_deployment(dep, (dir / "deployment.csv").string());

        const TrafficTrace trace = config.make_trace(derive_seed(run.seed, "trace"));
        save_trace(trace, (dir / "trace.csv").string());
        const SupervisedDataset ds = make_dataset(trace, config.window, config.split);
        save_dataset_meta(ds, (dir / "dataset_meta.txt").string());

        std::vector<ModelEvalOutput> outputs;
        for (ModelKind kind : config.kinds) {
            if (kind == ModelKind::arima) {
                outputs.push_back(evaluate_arima(config.arima, ds, trace));
            } else {
                TrainConfig tc = config.train_cfg;
                tc.seed = derive_seed(run.seed, "train-" + to_string(kind));
                const TrainedModel tm = train(config.spec_for(kind), tc, ds);
                save_loss_curve(tm, (dir / ("loss_" + to_string(kind) + ".csv")).string());
                outputs.push_back(evaluate_model(tm, ds));
            }
            run.reports.push_back(outputs.back().report);
        }
        detail::write_run_files(dir, run, outputs);
    } catch (const std::exception& e) {
        run.failed = true;
        run.error = e.what();
        std::ofstream fail(dir / "failure.txt");
        fail << e.what() << "\n";
    }
    return run;
}

/// Re-aggregates a campaign directory from its per-run files. Deleting a run
/// directory simply drops that run from the statistics.
inline AggregateReport aggregate_from_dir(const fs::path& out_dir) {
    AggregateReport agg;
    {
        std::ifstream echo(out_dir / "config_echo.txt");
        std::string line;
        while (std::getline(echo, line)) {
            if (line.rfind("master_seed=", 0) == 0) agg.master_seed = std::stoull(line.substr(12));
            if (line.rfind("runs=", 0) == 0) agg.runs_configured = std::stoi(line.substr(5));
        }
    }
    std::vector<fs::path> run_dirs;
    const fs::path runs_root = out_dir / "runs";
    if (fs::exists(runs_root)) {
        for (const auto& entry : fs::directory_iterator(runs_root))
            if (entry.is_directory()) run_dirs.push_back(entry.path());
    }
    std::sort(run_dirs.begin(), run_dirs.end());

    std::map<std::string, std::map<std::string, std::vector<double>>> metric_values;
    std::map<std::string, std::vector<CostTriple>> cost_values;
    std::map<std::string, std::pair<std::vector<double>, std::vector<std::uint8_t>>> pooled;
    std::vector<std::string> model_order;

    auto note_model = [&](const std::string& m) {
        for (const auto& existing : model_order)
            if (existing == m) return;
        model_order.push_back(m);
    };

    for (const auto& dir : run_dirs) {
        if (fs::exists(dir / "failure.txt")) {
            std::ifstream f(dir / "failure.txt");
            std::string msg((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
            agg.failures.push_back(dir.filename().string() + ": " + msg);
            continue;
        }
        std::ifstream metrics(dir / "metrics.csv");
        if (!metrics) continue;
        ++agg.runs_succeeded;
        std::string line;
        std::getline(metrics, line); // seed comment
        std::getline(metrics, line); // header
        while (std::getline(metrics, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string model, r, rc, tpr, tnr, acc, auc;
            std::getline(ss, model, ',');
            std::getline(ss, r, ',');
            std::getline(ss, rc, ',');
            std::getline(ss, tpr, ',');
            std::getline(ss, tnr, ',');
            std::getline(ss, acc, ',');
            std::getline(ss, auc, ',');
            note_model(model);
            auto push = [&](const std::string& key, const std::string& text) {
                if (text != "undefined" && !text.empty())
                    metric_values[model][key].push_back(std::stod(text));
            };
            push("r_metric", r);
            push("tpr", tpr);
            push("tnr", tnr);
            push("accuracy", acc);
            push("auc", auc);
        }
        std::ifstream costs(dir / "costs.csv");
        std::getline(costs, line);
        std::getline(costs, line);
        while (std::getline(costs, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string model, tr, inf, size;
            std::getline(ss, model, ',');
            std::getline(ss, tr, ',');
            std::getline(ss, inf, ',');
            std::getline(ss, size, ',');
            cost_values[model].push_back({std::stod(inf), std::stod(tr), std::stod(size)});
        }
        for (const auto& model : model_order) {
            std::ifstream sc(dir / ("scores_" + model + ".csv"));
            if (!sc) continue;
            std::getline(sc, line);
            std::getline(sc, line);
            while (std::getline(sc, line)) {
                if (line.empty()) continue;
                const auto comma = line.find(',');
                pooled[model].second.push_back(static_cast<std::uint8_t>(std::stoi(line.substr(0, comma))));
                pooled[model].first.push_back(std::stod(line.substr(comma + 1)));
            }
        }
    }

    for (const auto& model : model_order) {
        ModelAggregate ma;
        ma.model = model;
        for (const auto& [key, values] : metric_values[model]) {
            MetricStat st;
            st.n = static_cast<int>(values.size());
            if (st.n > 0) {
                double sum = 0.0;
                for (double v : values) sum += v;
                st.mean = sum / st.n;
                if (st.n > 1) {
                    double sq = 0.0;
                    for (double v : values) sq += (v - st.mean) * (v - st.mean);
                    st.stddev = std::sqrt(sq / (st.n - 1));
                }
            }
            ma.metrics[key] = st;
        }
        const auto& costs = cost_values[model];
        for (const auto& c : costs) {
            ma.mean_costs.inference_seconds += c.inference_seconds;
            ma.mean_costs.training_seconds += c.training_seconds;
            ma.mean_costs.size_bytes += c.size_bytes;
        }
        if (!costs.empty()) {
            ma.cost_n = static_cast<int>(costs.size());
            ma.mean_costs.inference_seconds /= ma.cost_n;
            ma.mean_costs.training_seconds /= ma.cost_n;
            ma.mean_costs.size_bytes /= ma.cost_n;
        }
        auto& [scores, labels] = pooled[model];
        bool has_pos = false, has_neg = false;
        for (std::uint8_t l : labels) (l ? has_pos : has_neg) = true;
        if (has_pos && has_neg) {
            ma.pooled_roc = roc(scores, labels);
            ma.roc_defined = true;
        }
        agg.models.push_back(std::move(ma));
    }
    return agg;
}

/// Renders the aggregate tables. metrics_table.csv and the roc files are
/// byte-deterministic for a fixed (config, seed); costs_table.csv and
/// summary.txt carry wall-clock figures.
inline void write_report(const AggregateReport& agg, const fs::path& out_dir) {
    if (agg.models.empty()) throw std::runtime_error("write_report: empty aggregate");
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "metrics_table.csv");
        out << "# seed=" << agg.master_seed << ",runs=" << agg.runs_succeeded << "\n";
        out << "model,metric,mean,std,n\n";
        for (const auto& m : agg.models) {
            for (const char* key : {"r_metric", "tpr", "tnr", "accuracy", "auc"}) {
                const auto it = m.metrics.find(key);
                if (it == m.metrics.end() || it->second.n == 0) {
                    out << m.model << ',' << key << ",undefined,undefined,0\n";
                } else {
                    out << m.model << ',' << key << ',' << detail::fmt(it->second.mean) << ','
                        << detail::fmt(it->second.stddev) << ',' << it->second.n << "\n";
                }
            }
        }
    }
    {
        std::ofstream out(out_dir / "costs_table.csv");
        out << "# seed=" << agg.master_seed
            << " (wall-clock based; excluded from determinism checks)\n";
        std::vector<const ModelAggregate*> neural;
        for (const auto& m : agg.models)
            if (m.model != "arima" && m.cost_n > 0) neural.push_back(&m);
        if (neural.size() >= 2) {
            std::vector<CostTriple> raw;
            raw.reserve(neural.size());
            for (const auto* m : neural) raw.push_back(m->mean_costs);
            const auto norm = cost_report(raw);
            out << "model,inference,training,size\n";
            for (std::size_t i = 0; i < neural.size(); ++i) {
                out << neural[i]->model << ',' << detail::fmt(norm[i].inference_seconds) << ','
                    << detail::fmt(norm[i].training_seconds) << ','
                    << detail::fmt(norm[i].size_bytes) << "\n";
            }
        }
        out << "# raw means\n";
        out << "model,inference_seconds,training_seconds,size_bytes\n";
        for (const auto& m : agg.models) {
            if (m.cost_n == 0) continue;
            out << m.model << ',' << detail::fmt(m.mean_costs.inference_seconds) << ','
                << detail::fmt(m.mean_costs.training_seconds) << ','
                << detail::fmt(m.mean_costs.size_bytes) << "\n";
        }
    }
    for (const auto& m : agg.models) {
        if (m.roc_defined) save_roc(m.pooled_roc, (out_dir / ("roc_" + m.model + ".csv")).string());
    }
    {
        std::ofstream out(out_dir / "summary.txt");
        out << "campaign summary (seed " << agg.master_seed << ")\n";
        out << agg.runs_succeeded << "/" << agg.runs_configured << " runs succeeded\n\n";
        for (const auto& m : agg.models) {
            out << m.model << ":\n";
            for (const char* key : {"r_metric", "tpr", "tnr", "accuracy", "auc"}) {
                const auto it = m.metrics.find(key);
                if (it == m.metrics.end() || it->second.n == 0) {
                    out << "  " << key << ": undefined\n";
                } else {
                    out << "  " << key << ": " << detail::fmt(it->second.mean) << " +- "
                        << detail::fmt(it->second.stddev) << " (n=" << it->second.n << ")\n";
                }
            }
            if (m.cost_n > 0) {
                out << "  costs: train " << detail::fmt(m.mean_costs.training_seconds)
                    << " s, infer " << detail::fmt(m.mean_costs.inference_seconds)
                    << " s/sample, size " << detail::fmt(m.mean_costs.size_bytes) << " B\n";
            }
        }
        if (!agg.failures.empty()) {
            out << "\nfailed runs:\n";
            for (const auto& f : agg.failures) out << "  " << f << "\n";
        }
    }
}

/// Runs the full campaign. Individual run failures are recorded and skipped;
/// the campaign itself fails when more than 20% of runs fail.
inline AggregateReport run_campaign(const ExperimentConfig& config, const fs::path& out_dir) {
    config.validate();
    fs::create_directories(out_dir);
    {
        std::ofstream echo(out_dir / "config_echo.txt");
        echo << "# seed=" << config.master_seed << "\n";
        config.echo(echo);
    }
    std::vector<RunResult> results(static_cast<std::size_t>(config.runs));
    std::atomic<int> next{0};
    const int workers = std::max(1, std::min(config.workers, config.runs));
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= config.runs) break;
            results[static_cast<std::size_t>(i)] =
                execute_run(config, i, out_dir / "runs" / detail::run_dir_name(i));
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    int failed = 0;
    for (const auto& r : results)
        if (r.failed) ++failed;
    AggregateReport agg = aggregate_from_dir(out_dir);
    agg.runs_configured = config.runs;
    write_report(agg, out_dir);
    if (failed * 5 > config.runs) {
        throw std::runtime_error("campaign failed: " + std::to_string(failed) + "/" +
                                 std::to_string(config.runs) + " runs failed");
    }
    return agg;
}

/// Matched-complexity sweep: one campaign per (kind, C) pair, each model
/// resized by complexity_budget. Emits long-format rows into sweep.csv.
inline void sweep_complexity(const ExperimentConfig& base, const std::vector<std::int64_t>& c_values,
                             const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "sweep.csv");
    out << "# seed=" << base.master_seed << "\n";
    out << "kind,C,metric,mean,std\n";
    std::ofstream errors(out_dir / "sweep_errors.txt");
    for (ModelKind kind : base.kinds) {
        for (std::int64_t c : c_values) {
            ModelSpec spec;
            try {
                spec = complexity_budget(c, kind);
            } catch (const std::exception& e) {
                errors << to_string(kind) << ",C=" << c << ": " << e.what() << "\n";
                continue;
            }
            ExperimentConfig cfg = base;
            cfg.kinds = {kind};
            cfg.hidden = spec.hidden.empty() ? cfg.hidden : spec.hidden[0];
            cfg.tcn_filters = spec.kind == ModelKind::tcn ? spec.tcn_filters : cfg.tcn_filters;
            cfg.master_seed = derive_seed(base.master_seed, "sweep-" + to_string(kind),
                                          static_cast<std::uint64_t>(c));
            const fs::path sub = out_dir / (to_string(kind) + "_c" + std::to_string(c));
            try {
                const AggregateReport agg = run_campaign(cfg, sub);
                for (const auto& m : agg.models) {
                    for (const char* key : {"r_metric", "tpr", "tnr", "accuracy", "auc"}) {
                        const auto it = m.metrics.find(key);
                        if (it == m.metrics.end() || it->second.n == 0) {
                            out << m.model << ',' << c << ',' << key << ",undefined,undefined\n";
                        } else {
                            out << m.model << ',' << c << ',' << key << ','
                                << detail::fmt(it->second.mean) << ','
                                << detail::fmt(it->second.stddev) << "\n";
                        }
                    }
                }
            } catch (const std::exception& e) {
                errors << to_string(kind) << ",C=" << c << ": " << e.what() << "\n";
            }
        }
    }
}

} // namespace mtc
