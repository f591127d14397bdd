#include "cli_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ppcli {

using namespace ppfilter;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

std::vector<std::string> string_list(const json& value) {
    if (value.is_string()) return split_list(value.get<std::string>());
    if (!value.is_array()) throw UsageError("expected a list of names");
    std::vector<std::string> out;
    for (const auto& v : value) out.push_back(v.get<std::string>());
    return out;
}

template <typename T>
T get_or(const json& run, const char* key, T fallback) {
    if (!run.contains(key) || run[key].is_null()) return fallback;
    return run[key].get<T>();
}

std::size_t channel_index(const std::vector<std::string>& channels, const std::string& name) {
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i] == name) return i;
    }
    throw UsageError("unknown channel '" + name + "' in simulation filters");
}

} // namespace

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) continue;
        out.push_back(item.substr(first, last - first + 1));
    }
    return out;
}

double parse_number(const std::string& text) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) throw UsageError("not a number: '" + text + "'");
    return v;
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number(item));
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

double json_number(const json& value) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) return parse_number(value.get<std::string>());
    throw UsageError("expected a number, got " + value.dump());
}

std::vector<double> json_number_list(const json& value) {
    if (!value.is_array()) return {json_number(value)};
    std::vector<double> out;
    for (const auto& v : value) out.push_back(json_number(v));
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

json number_to_json(double value) {
    if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
    return value;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

FitConfig fit_config_from_json(const json& run, const EventData& data) {
    FitConfig cfg;
    cfg.target = get_or<std::string>(run, "target", "");
    if (cfg.target.empty()) throw UsageError("a target channel is required");
    cfg.inputs = run.contains("inputs") ? string_list(run["inputs"]) : data.channels();
    cfg.support = run.contains("support") ? json_number(run["support"]) : cfg.support;
    cfg.base_n = get_or<std::size_t>(run, "grid_n", cfg.base_n);
    cfg.validation_base_n = get_or<std::size_t>(run, "validation_grid_n", 0);
    cfg.delta_n = get_or<std::size_t>(run, "delta_n", cfg.delta_n);
    cfg.mode = parse_mode(get_or<std::string>(run, "mode", "direct"));
    if (cfg.mode == FilterMode::basis) {
        cfg.q = get_or<std::size_t>(run, "basis_q", 33);
    } else {
        cfg.q = get_or<std::size_t>(run, "rank", 0);
    }
    if (run.contains("threshold")) cfg.threshold = json_number(run["threshold"]);
    cfg.kernel = get_or<std::string>(run, "kernel", cfg.kernel);
    cfg.inner_product = parse_inner_product(get_or<std::string>(run, "inner_product", "second_derivative"));
    cfg.z_direct = get_or<bool>(run, "z_direct", false);
    cfg.link = LinkFunction::parse(get_or<std::string>(run, "family", "log"));
    if (run.contains("lambda")) {
        const auto lambdas = json_number_list(run["lambda"]);
        cfg.lambda = lambdas.front();
    }
    cfg.optim.max_iter = get_or<std::size_t>(run, "max_iter", cfg.optim.max_iter);
    if (run.contains("grad_tol")) cfg.optim.grad_tol = json_number(run["grad_tol"]);
    cfg.validate();
    for (const auto& ch : cfg.inputs) {
        if (!data.has_channel(ch)) throw DataError("input channel '" + ch + "' is not in the data");
    }
    if (!data.has_channel(cfg.target)) throw DataError("target channel '" + cfg.target + "' is not in the data");
    return cfg;
}

SimulationPlan simulation_from_json(const json& doc) {
    SimulationPlan plan;
    auto& cfg = plan.config;
    if (!doc.contains("channels")) throw UsageError("simulation config needs 'channels'");
    cfg.channels = string_list(doc["channels"]);
    const std::size_t p = cfg.channels.size();
    if (p == 0) throw UsageError("simulation config needs at least one channel");
    if (!doc.contains("horizon")) throw UsageError("simulation config needs 'horizon'");
    cfg.horizon = json_number(doc["horizon"]);
    plan.trials = get_or<std::size_t>(doc, "trials", 1);
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    cfg.max_events = get_or<std::size_t>(doc, "max_events", cfg.max_events);

    const json links = doc.value("links", json("log"));
    if (links.is_string()) {
        cfg.links.assign(p, LinkFunction::parse(links.get<std::string>()));
    } else {
        for (const auto& l : links) cfg.links.push_back(LinkFunction::parse(l.get<std::string>()));
    }
    const json baselines = doc.value("baselines", json(0.0));
    if (baselines.is_array()) {
        for (const auto& b : baselines) cfg.baselines.push_back(json_number(b));
    } else {
        cfg.baselines.assign(p, json_number(baselines));
    }

    cfg.filters.assign(p, std::vector<FilterFunction>(p));
    for (const auto& f : doc.value("filters", json::array())) {
        const auto i = channel_index(cfg.channels, f.at("target").get<std::string>());
        const auto j = channel_index(cfg.channels, f.at("source").get<std::string>());
        const auto type = f.value("type", std::string("exponential"));
        if (type == "exponential") {
            cfg.filters[i][j] = ExpFilter{json_number(f.at("alpha")), json_number(f.at("beta"))};
        } else if (type == "tabulated") {
            TabulatedFilter tab;
            tab.support = json_number(f.at("support"));
            for (const auto& v : f.at("values")) tab.values.push_back(json_number(v));
            cfg.filters[i][j] = std::move(tab);
        } else {
            throw UsageError("unknown filter type '" + type + "'");
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (plan.trials < 1) throw UsageError("simulation needs at least one trial");
    return plan;
}

json fit_to_json(const FitResult& fit, const FitConfig& config, const EventData& data) {
    const auto& spec = *fit.spec;
    json doc;
    doc["target"] = config.target;
    doc["inputs"] = fit.inputs;
    doc["mode"] = to_string(spec.mode);
    doc["family"] = fit.link.describe();
    doc["lambda"] = fit.lambda;
    doc["support"] = config.support;
    doc["grid_n"] = config.base_n;
    doc["delta_n"] = config.delta_n;
    doc["q"] = spec.q();
    doc["converged"] = fit.optim.converged;
    doc["message"] = fit.optim.message;
    doc["iterations"] = fit.optim.iterations;
    doc["grad_norm"] = fit.optim.grad_norm;
    doc["beta0"] = fit.coef.beta0;
    doc["beta"] = std::vector<double>(fit.coef.beta.data(), fit.coef.beta.data() + fit.coef.beta.size());
    doc["nll"] = fit.nll;
    doc["penalized_nll"] = fit.penalized_nll;
    doc["tic"] = {{"nll", fit.tic.nll}, {"trace", fit.tic.trace}, {"tic", fit.tic.tic}};
    doc["baseline_rate"] = phi(fit.link, fit.coef.beta0).value;
    doc["empirical_rate"] = static_cast<double>(data.total_count(config.target)) / data.total_time();
    doc["multiple_hits"] = fit.multiple_hits;
    doc["k_hat"] = matrix_to_json(fit.k_hat);
    doc["j_hat"] = matrix_to_json(fit.j_hat);
    doc["sandwich"] = matrix_to_json(fit.sandwich);
    return doc;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (const char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, res.ptr};
}

std::string band_csv(const FilterBand& band) {
    std::ostringstream out;
    out << "lag,estimate,lower,upper\n";
    for (std::size_t k = 0; k < band.lags.size(); ++k) {
        out << format_number(band.lags[k]) << ',' << format_number(band.estimate[k]) << ','
            << format_number(band.lower[k]) << ',' << format_number(band.upper[k]) << '\n';
    }
    return out.str();
}

std::string cv_csv(const CvResult& cv) {
    std::ostringstream out;
    out << "fold,trial_id,nll,status\n";
    for (const auto& f : cv.folds) {
        out << f.holdout << ',' << f.trial_id << ',' << (f.converged ? format_number(f.nll) : "") << ','
            << csv_field(f.converged ? "ok" : "failed: " + f.message) << '\n';
    }
    out << "mean,," << (cv.used_folds > 0 ? format_number(cv.mean_nll) : "") << ','
        << csv_field("mean over " + std::to_string(cv.used_folds) + " of " + std::to_string(cv.folds.size()) +
                     " folds")
        << '\n';
    return out.str();
}

std::string tic_csv(const ScanResult& scan, const std::string& family) {
    std::ostringstream out;
    out << "family,c,lambda,nll,trace,tic,converged,selected,message\n";
    for (std::size_t r = 0; r < scan.rows.size(); ++r) {
        const auto& row = scan.rows[r];
        const bool finite = std::isfinite(row.tic.tic);
        out << family << ',' << format_number(row.c) << ',' << format_number(row.lambda) << ','
            << (finite ? format_number(row.tic.nll) : "") << ',' << (finite ? format_number(row.tic.trace) : "")
            << ',' << (finite ? format_number(row.tic.tic) : "") << ',' << (row.converged ? 1 : 0) << ','
            << (scan.argmin && *scan.argmin == r ? 1 : 0) << ',' << csv_field(row.message) << '\n';
    }
    return out.str();
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "mode,n,N,q,p,sparse_bytes,dense_bytes,nll_ms,grad_ms\n";
    for (const auto& r : rows) {
        out << to_string(r.config.mode) << ',' << r.config.n << ',' << r.config.delta_n << ',';
        if (r.config.mode == FilterMode::basis) out << r.config.q;
        out << ',' << r.p << ',' << r.sparse_bytes << ',' << r.dense_bytes << ',' << format_number(r.nll_ms) << ','
            << format_number(r.grad_ms) << '\n';
    }
    return out.str();
}

} // namespace ppcli
