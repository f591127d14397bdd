// ppfilter: simulate, fit, cross-validate, TIC-scan and benchmark
// nonparametric linear-filter point-process models.

#include "cli_io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>

using namespace ppfilter;
using ppcli::json;
using ppcli::UsageError;

namespace {

enum class Kind { text, number, count, number_list, count_list, text_list, flag };

struct Flag {
    std::string name;  // without leading dashes
    std::string key;   // key in the merged run configuration
    Kind kind;
    std::string help;
};

// Raw flag values, merged over the JSON config after parsing.
struct FlagSet {
    std::vector<Flag> flags;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> switches;
    std::map<std::string, CLI::Option*> options;

    void add(CLI::App* app, Flag flag) {
        const std::string opt = "--" + flag.name;
        if (flag.kind == Kind::flag) {
            options[flag.key] = app->add_flag(opt, switches[flag.key], flag.help);
        } else {
            options[flag.key] = app->add_option(opt, values[flag.key], flag.help);
        }
        flags.push_back(std::move(flag));
    }

    [[nodiscard]] json merged(const std::string& config_key) const {
        json run = json::object();
        if (const auto it = options.find(config_key); it != options.end() && it->second->count() > 0) {
            run = ppcli::read_json_file(values.at(config_key));
            if (!run.is_object()) throw UsageError("config file must hold a JSON object");
        }
        for (const auto& f : flags) {
            if (f.key == config_key || options.at(f.key)->count() == 0) continue;
            if (f.kind == Kind::flag) {
                run[f.key] = switches.at(f.key);
                continue;
            }
            const std::string& raw = values.at(f.key);
            switch (f.kind) {
            case Kind::text: run[f.key] = raw; break;
            case Kind::number: run[f.key] = ppcli::number_to_json(ppcli::parse_number(raw)); break;
            case Kind::count: run[f.key] = parse_count(f.name, raw); break;
            case Kind::number_list: {
                json list = json::array();
                for (const double v : ppcli::parse_number_list(raw)) list.push_back(ppcli::number_to_json(v));
                run[f.key] = std::move(list);
                break;
            }
            case Kind::count_list: {
                json list = json::array();
                for (const auto& item : ppcli::split_list(raw)) list.push_back(parse_count(f.name, item));
                run[f.key] = std::move(list);
                break;
            }
            case Kind::text_list: run[f.key] = ppcli::split_list(raw); break;
            case Kind::flag: break;
            }
        }
        return run;
    }

    static std::uint64_t parse_count(const std::string& name, const std::string& raw) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(raw, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != raw.size() || raw.front() == '-') {
            throw UsageError("--" + name + " expects a nonnegative integer, got '" + raw + "'");
        }
        return v;
    }
};

void add_model_flags(CLI::App* app, FlagSet& fs) {
    fs.add(app, {"config", "config", Kind::text, "JSON file with run settings (flags win)"});
    fs.add(app, {"data", "data", Kind::text, "event file (.csv or .json)"});
    fs.add(app, {"target", "target", Kind::text, "target channel"});
    fs.add(app, {"inputs", "inputs", Kind::text_list, "comma separated input channels (default: all)"});
    fs.add(app, {"support", "support", Kind::number, "filter support A in seconds"});
    fs.add(app, {"grid-n", "grid_n", Kind::count, "base grid intervals per trial"});
    fs.add(app, {"validation-grid-n", "validation_grid_n", Kind::count, "grid used to score held-out trials"});
    fs.add(app, {"delta-n", "delta_n", Kind::count, "lag grid size N"});
    fs.add(app, {"basis-q", "basis_q", Kind::count, "number of B-spline basis functions (basis mode)"});
    fs.add(app, {"rank", "rank", Kind::count, "kept eigenpairs in direct mode (0: threshold rule)"});
    fs.add(app, {"threshold", "threshold", Kind::number, "relative eigenvalue cutoff in direct mode"});
    fs.add(app, {"mode", "mode", Kind::text, "direct or basis"});
    fs.add(app, {"family", "family", Kind::text, "log, identity, root:c or logaffine:c"});
    fs.add(app, {"kernel", "kernel", Kind::text, "sobolev2 or gaussian:<bandwidth>"});
    fs.add(app, {"inner-product", "inner_product", Kind::text, "second_derivative or sobolev2 (basis mode)"});
    fs.add(app, {"z-direct", "z_direct", Kind::flag, "evaluate basis functions at exact lags"});
    fs.add(app, {"lambda", "lambda", Kind::number_list, "penalty weight (a list for tic-scan)"});
    fs.add(app, {"max-iter", "max_iter", Kind::count, "optimizer iteration limit"});
    fs.add(app, {"grad-tol", "grad_tol", Kind::number, "gradient sup-norm tolerance"});
    fs.add(app, {"seed", "seed", Kind::count, "accepted for interface symmetry; fits are deterministic"});
    fs.add(app, {"out", "out", Kind::text, "output directory"});
}

std::filesystem::path out_dir(const json& run) {
    return run.value("out", std::string("."));
}

EventData load_data(const json& run) {
    if (!run.contains("data")) throw UsageError("--data is required");
    const std::filesystem::path path = run["data"].get<std::string>();
    if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
    return load_events(path);
}

std::vector<double> lambda_grid(const json& run) {
    if (!run.contains("lambda")) return {0.0};
    return ppcli::json_number_list(run["lambda"]);
}

int cmd_fit(const json& run) {
    const auto data = load_data(run);
    const auto cfg = ppcli::fit_config_from_json(run, data);
    if (lambda_grid(run).size() > 1) throw UsageError("fit takes a single lambda; use tic-scan for a grid");
    const auto fit = fit_model(data, cfg);
    const auto dir = out_dir(run);
    ppcli::write_text(dir / "fit.json", ppcli::fit_to_json(fit, cfg, data).dump(2) + "\n");
    for (std::size_t i = 0; i < fit.inputs.size(); ++i) {
        ppcli::write_text(dir / ("filters_" + fit.inputs[i] + ".csv"), ppcli::band_csv(filter_bands(fit, i)));
    }
    std::cout << "fit " << (fit.optim.converged ? "converged" : "did not converge") << " ("
              << fit.optim.message << "): nll " << ppcli::format_number(fit.nll) << ", TIC "
              << ppcli::format_number(fit.tic.tic) << "\n";
    return fit.optim.converged ? 0 : 2;
}

int cmd_cv(const json& run) {
    const auto data = load_data(run);
    const auto cfg = ppcli::fit_config_from_json(run, data);
    if (lambda_grid(run).size() > 1) throw UsageError("cv takes a single lambda");
    if (data.num_trials() < 2) throw DataError("cross-validation needs at least two trials");
    const auto cv = cross_validate(data, cfg);
    ppcli::write_text(out_dir(run) / "cv.csv", ppcli::cv_csv(cv));
    std::cout << "cv: mean held-out nll " << ppcli::format_number(cv.mean_nll) << " over " << cv.used_folds << " of "
              << cv.folds.size() << " folds\n";
    return cv.used_folds == cv.folds.size() ? 0 : 2;
}

int cmd_tic_scan(const json& run) {
    const auto data = load_data(run);
    const auto cfg = ppcli::fit_config_from_json(run, data);
    const auto lambdas = lambda_grid(run);
    ScanResult scan;
    std::string family;
    if (run.contains("c_grid")) {
        scan = model_scan(data, cfg, ppcli::json_number_list(run["c_grid"]), lambdas);
        family = "logaffine";
    } else {
        scan = lambda_scan(make_context(data, cfg), lambdas, cfg.optim);
        family = cfg.link.describe();
    }
    ppcli::write_text(out_dir(run) / "tic_table.csv", ppcli::tic_csv(scan, family));
    if (!scan.argmin) {
        std::cout << "tic-scan: every cell failed\n";
        return 2;
    }
    const auto& best = scan.rows[*scan.argmin];
    std::cout << "tic-scan: selected c " << ppcli::format_number(best.c) << ", lambda "
              << ppcli::format_number(best.lambda) << " (TIC " << ppcli::format_number(best.tic.tic) << ")\n";
    return 0;
}

int cmd_simulate(const json& run) {
    if (!run.contains("config")) throw UsageError("--config with a simulation model is required");
    json doc = ppcli::read_json_file(run["config"].get<std::string>());
    if (run.contains("seed")) doc["seed"] = run["seed"];
    if (run.contains("trials")) doc["trials"] = run["trials"];
    const auto plan = ppcli::simulation_from_json(doc);
    const auto data = simulate_trials(plan.config, plan.trials);
    const std::string format = run.value("format", std::string("csv"));
    if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
    const auto path = out_dir(run) / ("events." + format);
    ppcli::write_text(path, format == "csv" ? format_events_csv(data) : format_events_json(data));
    std::cout << "simulated " << data.num_trials() << " trials to " << path.string() << "\n";
    return 0;
}

int cmd_bench(const json& run) {
    const auto counts = [&run](const char* key, std::vector<std::size_t> fallback) {
        if (!run.contains(key)) return fallback;
        const json& v = run[key];
        if (!v.is_array()) return std::vector<std::size_t>{v.get<std::size_t>()};
        return v.get<std::vector<std::size_t>>();
    };
    const auto ns = counts("grid_n", {5'000, 10'000, 20'000, 40'000});
    const auto big_ns = counts("delta_n", {400});
    const auto qs = counts("basis_q", {33, 100});
    std::vector<std::string> modes{"direct", "basis"};
    if (run.contains("mode")) {
        modes = run["mode"].is_array() ? run["mode"].get<std::vector<std::string>>()
                                       : ppcli::split_list(run["mode"].get<std::string>());
    }
    const auto p = run.value("p", std::size_t{3});
    const double horizon = run.contains("horizon") ? ppcli::json_number(run["horizon"]) : 100.0;
    const double rate = run.contains("rate") ? ppcli::json_number(run["rate"]) : 1.0;
    const auto reps = run.value("reps", std::size_t{20});
    const auto seed = run.value("seed", std::uint64_t{1});
    const double support = run.contains("support") ? ppcli::json_number(run["support"]) : 0.4;
    if (p < 1 || reps < 1) throw UsageError("bench needs p >= 1 and reps >= 1");

    const auto data = hawkes_bench_data(p, horizon, rate, seed);
    std::vector<BenchRow> rows;
    for (const auto& mode_name : modes) {
        const FilterMode mode = parse_mode(mode_name);
        for (const auto n : ns) {
            for (const auto big_n : big_ns) {
                BenchCase bc;
                bc.mode = mode;
                bc.n = n;
                bc.delta_n = big_n;
                bc.support = support;
                if (mode == FilterMode::direct) {
                    rows.push_back(run_bench_case(data, bc, reps, seed));
                    continue;
                }
                for (const auto q : qs) {
                    bc.q = q;
                    rows.push_back(run_bench_case(data, bc, reps, seed));
                }
            }
        }
    }
    ppcli::write_text(out_dir(run) / "bench.csv", ppcli::bench_csv(rows));
    std::cout << "bench: " << rows.size() << " configurations\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalized likelihood fits of linear-filter point-process models"};
    app.require_subcommand(1);

    FlagSet fit_flags;
    FlagSet cv_flags;
    FlagSet scan_flags;
    FlagSet sim_flags;
    FlagSet bench_flags;

    auto* fit = app.add_subcommand("fit", "fit one model and write fit.json and filter bands");
    add_model_flags(fit, fit_flags);
    auto* cv = app.add_subcommand("cv", "leave-one-trial-out cross-validation, writes cv.csv");
    add_model_flags(cv, cv_flags);
    auto* scan = app.add_subcommand("tic-scan", "TIC over a lambda grid (and c grid), writes tic_table.csv");
    add_model_flags(scan, scan_flags);
    scan_flags.add(scan, {"c-grid", "c_grid", Kind::number_list, "logaffine c values (inf: log link)"});

    auto* sim = app.add_subcommand("simulate", "simulate event data from a JSON model");
    sim_flags.add(sim, {"config", "config", Kind::text, "simulation model (JSON)"});
    sim_flags.add(sim, {"seed", "seed", Kind::count, "overrides the model seed"});
    sim_flags.add(sim, {"trials", "trials", Kind::count, "overrides the number of trials"});
    sim_flags.add(sim, {"format", "format", Kind::text, "csv (default) or json"});
    sim_flags.add(sim, {"out", "out", Kind::text, "output directory"});

    auto* bench = app.add_subcommand("bench", "memory and timing of the sparse design matrices, writes bench.csv");
    bench_flags.add(bench, {"config", "config", Kind::text, "JSON file with bench settings (flags win)"});
    bench_flags.add(bench, {"grid-n", "grid_n", Kind::count_list, "base grid sizes n"});
    bench_flags.add(bench, {"delta-n", "delta_n", Kind::count_list, "lag grid sizes N"});
    bench_flags.add(bench, {"basis-q", "basis_q", Kind::count_list, "basis sizes q"});
    bench_flags.add(bench, {"mode", "mode", Kind::text_list, "direct, basis or both"});
    bench_flags.add(bench, {"p", "p", Kind::count, "number of channels"});
    bench_flags.add(bench, {"horizon", "horizon", Kind::number, "simulated seconds"});
    bench_flags.add(bench, {"rate", "rate", Kind::number, "events per second per channel"});
    bench_flags.add(bench, {"reps", "reps", Kind::count, "timed repetitions per configuration"});
    bench_flags.add(bench, {"support", "support", Kind::number, "filter support A"});
    bench_flags.add(bench, {"seed", "seed", Kind::count, "simulation and parameter seed"});
    bench_flags.add(bench, {"out", "out", Kind::text, "output directory"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*fit) return cmd_fit(fit_flags.merged("config"));
        if (*cv) return cmd_cv(cv_flags.merged("config"));
        if (*scan) return cmd_tic_scan(scan_flags.merged("config"));
        if (*sim) return cmd_simulate(sim_flags.merged(""));
        if (*bench) return cmd_bench(bench_flags.merged("config"));
    } catch (const ExplosionError& e) {
        std::cerr << "explosion: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
