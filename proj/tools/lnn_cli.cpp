// Command-line front end for the localized neural network estimators.

#include "lnn/lnn.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using lnn::Json;

struct Globals {
    std::string config_path;
    std::uint64_t seed = 1;
    unsigned threads = lnn::default_threads();
    std::string out;
};

struct DataArgs {
    std::string path;
    std::string y = "y";
    std::vector<std::string> x;
    bool normalize = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool required)
{
    auto* opt = cmd->add_option("--data", a.path, "training CSV file");
    if (required)
        opt->required();
    cmd->add_option("--y", a.y, "response column")->capture_default_str();
    cmd->add_option("--x", a.x, "regressor columns (default: all other columns)")->delimiter(',');
}

Json read_config(const Globals& g)
{
    if (g.config_path.empty())
        return Json::object();
    const std::string text = lnn::read_text(g.config_path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw lnn::ArgumentError("config '" + g.config_path + "': " + e.what());
    }
}

lnn::BootstrapOptions bootstrap_options(const Json& cfg, const Globals& g)
{
    lnn::BootstrapOptions opt;
    opt.R = lnn::detail::get_or<std::size_t>(cfg, "R", opt.R);
    opt.level = lnn::detail::get_or(cfg, "level", opt.level);
    opt.seed = g.seed;
    opt.threads = g.threads;
    return opt;
}

void emit(const Globals& g, const std::string& text)
{
    if (g.out.empty() || g.out == "-")
        std::cout << text;
    else
        lnn::write_text(g.out, text);
}

std::ostringstream number_stream()
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    return os;
}

void put(std::ostream& os, double v)
{
    if (!std::isnan(v))
        os << v;
}

//! Data set with the model's recorded normalization applied.
lnn::Dataset load_for_model(const DataArgs& a, const lnn::ModelMeta& meta)
{
    std::vector<std::string> xs = a.x.empty() ? meta.x_names : a.x;
    lnn::Dataset ds = lnn::load_csv(a.path, a.y.empty() ? meta.y_name : a.y, xs, false);
    ds.X = lnn::apply_normalization(ds.X, meta.x_norm);
    if (!meta.y_norm.empty()) {
        Eigen::MatrixXd ycol = ds.y;
        ds.y = lnn::apply_normalization(ycol, meta.y_norm).col(0);
    }
    ds.x_norm = meta.x_norm;
    ds.y_norm = meta.y_norm;
    return ds;
}

double y_scale(const lnn::ModelMeta& m) { return m.y_norm.empty() ? 1.0 : m.y_norm.sd[0]; }
double y_shift(const lnn::ModelMeta& m) { return m.y_norm.empty() ? 0.0 : m.y_norm.mean[0]; }

std::vector<std::string> point_columns(const std::string& path, const lnn::ModelMeta& meta, int d)
{
    const auto header = lnn::csv_header(path);
    auto has = [&](const std::string& c) {
        return std::find(header.begin(), header.end(), c) != header.end();
    };
    if (static_cast<int>(meta.x_names.size()) == d &&
        std::all_of(meta.x_names.begin(), meta.x_names.end(), has))
        return meta.x_names;
    std::vector<std::string> cols;
    for (int k = 0; k < d; ++k)
        cols.push_back("x" + std::to_string(k + 1));
    return cols;
}

std::string header_line(const std::vector<std::string>& xcols, bool prob)
{
    std::string h;
    for (const auto& c : xcols)
        h += c + ",";
    h += prob ? "ghat,prob,lo,hi,flag\n" : "ghat,lo,hi,flag\n";
    return h;
}

//! Points for bootstrap output: a CSV file if given, else the L^d grid.
Eigen::MatrixXd eval_points(const std::string& points_path, const Json& cfg, const lnn::Architecture& arch,
                            const lnn::ModelMeta& meta, std::vector<std::string>& cols)
{
    if (!points_path.empty()) {
        cols = point_columns(points_path, meta, arch.d());
        return lnn::load_points(points_path, cols);
    }
    cols.clear();
    for (int k = 0; k < arch.d(); ++k)
        cols.push_back(static_cast<int>(meta.x_names.size()) == arch.d() ? meta.x_names[static_cast<std::size_t>(k)]
                                                                       : "x" + std::to_string(k + 1));
    const int L = lnn::detail::get_or(cfg, "L", 20);
    return lnn::test_grid(arch.config.a, L, arch.d());
}

std::string bands_csv(const std::vector<lnn::BootstrapBand>& bands, const Eigen::MatrixXd& raw_points,
                      const std::vector<std::string>& cols, const lnn::ModelMeta& meta,
                      const lnn::FittedBinary* bin)
{
    auto os = number_stream();
    os << header_line(cols, bin != nullptr);
    const double sc = bin ? 1.0 : y_scale(meta), sh = bin ? 0.0 : y_shift(meta);
    for (std::size_t e = 0; e < bands.size(); ++e) {
        for (Eigen::Index k = 0; k < raw_points.cols(); ++k)
            os << raw_points(static_cast<Eigen::Index>(e), k) << ',';
        const auto& b = bands[e];
        put(os, sh + sc * b.ghat);
        os << ',';
        if (bin) {
            put(os, std::isnan(b.ghat) ? b.ghat : bin->link.cdf(b.ghat));
            os << ',';
        }
        put(os, sh + sc * b.lo);
        os << ',';
        put(os, sh + sc * b.hi);
        os << ',' << lnn::to_string(b.status) << '\n';
    }
    return os.str();
}

int cmd_fit(const Globals& g, const DataArgs& a, bool binary)
{
    const Json cj = read_config(g);
    lnn::LnnConfig cfg = lnn::config_from_json(cj);
    lnn::Dataset ds = lnn::load_csv(a.path, a.y, a.x, false);
    if (a.normalize) {
        ds.x_norm = lnn::normalize_columns(ds.X);
        if (!binary) {
            Eigen::MatrixXd ycol = ds.y;
            ds.y_norm = lnn::normalize_columns(ycol);
            ds.y = ycol.col(0);
        }
    }
    cfg.d = ds.d();
    const lnn::Architecture arch = lnn::build_architecture_for_sample(cfg, ds.T());
    Json out;
    if (binary) {
        lnn::NewtonOptions nopt;
        nopt.threads = g.threads;
        out = lnn::model_json(lnn::fit_binary(ds, arch, cfg.link, nopt), lnn::meta_of(ds));
    } else {
        out = lnn::model_json(lnn::fit_regression(ds, arch, g.threads), lnn::meta_of(ds));
    }
    emit(g, out.dump(2) + "\n");
    return 0;
}

int cmd_predict(const Globals& g, const std::string& model_path, const std::string& points_path,
                const DataArgs& a, const std::string& mode)
{
    const Json cj = read_config(g);
    const lnn::LoadedModel lm = lnn::model_from_json(Json::parse(lnn::read_text(model_path)));
    const lnn::Architecture& arch = lm.arch();
    const auto cols = point_columns(points_path, lm.meta, arch.d());
    const Eigen::MatrixXd raw = lnn::load_points(points_path, cols);
    const Eigen::MatrixXd P = lnn::apply_normalization(raw, lm.meta.x_norm);
    const auto* bin = std::get_if<lnn::FittedBinary>(&lm.model);

    if (mode == "local") {
        if (a.path.empty())
            throw lnn::ArgumentError("predict --mode local needs --data");
        if (bin)
            throw lnn::ArgumentError("local mode is available for regression models only");
        const lnn::Dataset ds = load_for_model(a, lm.meta);
        // windows are only defined for points inside the domain
        std::vector<Eigen::Index> inside;
        for (Eigen::Index e = 0; e < P.rows(); ++e)
            if (lnn::cube_index(P.row(e).transpose(), arch.partition) != lnn::outside_domain)
                inside.push_back(e);
        Eigen::MatrixXd Pin(static_cast<Eigen::Index>(inside.size()), P.cols());
        for (std::size_t i = 0; i < inside.size(); ++i)
            Pin.row(static_cast<Eigen::Index>(i)) = P.row(inside[i]);
        const auto fits = lnn::fit_local_many(ds, Pin, arch.partition.h, arch.config, g.threads);
        auto os = number_stream();
        os << header_line(cols, false);
        std::size_t next = 0;
        for (Eigen::Index e = 0; e < P.rows(); ++e) {
            for (Eigen::Index k = 0; k < raw.cols(); ++k)
                os << raw(e, k) << ',';
            if (next < inside.size() && inside[next] == e) {
                const auto& f = fits[next++];
                put(os, y_shift(lm.meta) + y_scale(lm.meta) * f.ghat);
                os << ",,," << (f.flagged ? "flagged" : "ok") << '\n';
            } else {
                os << ",,,outside\n";
            }
        }
        emit(g, os.str());
        return 0;
    }
    if (mode != "global")
        throw lnn::ArgumentError("--mode must be global or local");

    if (!a.path.empty()) {
        const lnn::Dataset ds = load_for_model(a, lm.meta);
        const lnn::BootstrapOptions opt = bootstrap_options(cj, g);
        const auto bands = bin ? lnn::score_bootstrap(*bin, ds, opt, P)
                               : lnn::wild_bootstrap_reg(std::get<lnn::FittedRegression>(lm.model), ds, opt, P);
        emit(g, bands_csv(bands, raw, cols, lm.meta, bin));
        return 0;
    }
    std::vector<lnn::BootstrapBand> bands(static_cast<std::size_t>(P.rows()));
    for (std::size_t e = 0; e < bands.size(); ++e) {
        const Eigen::VectorXd x = P.row(static_cast<Eigen::Index>(e)).transpose();
        const lnn::Prediction p = bin ? lnn::predict_index(*bin, x)
                                      : lnn::predict(std::get<lnn::FittedRegression>(lm.model), x);
        bands[e].ghat = p.value;
        bands[e].status = p.status;
    }
    emit(g, bands_csv(bands, raw, cols, lm.meta, bin));
    return 0;
}

int cmd_bootstrap(const Globals& g, const DataArgs& a, const std::string& kind,
                  const std::string& points_path)
{
    const Json cj = read_config(g);
    lnn::LnnConfig cfg = lnn::config_from_json(cj);
    const bool binary = kind == "bin";
    if (!binary && kind != "reg")
        throw lnn::ArgumentError("--model must be reg or bin");
    lnn::Dataset ds = lnn::load_csv(a.path, a.y, a.x, false);
    if (a.normalize)
        ds.x_norm = lnn::normalize_columns(ds.X);
    cfg.d = ds.d();
    const lnn::Architecture arch = lnn::build_architecture_for_sample(cfg, ds.T());
    const lnn::ModelMeta meta = lnn::meta_of(ds);
    std::vector<std::string> cols;
    const Eigen::MatrixXd raw = eval_points(points_path, cj, arch, meta, cols);
    const Eigen::MatrixXd P = points_path.empty() ? raw : lnn::apply_normalization(raw, meta.x_norm);
    const lnn::BootstrapOptions opt = bootstrap_options(cj, g);
    if (binary) {
        lnn::NewtonOptions nopt;
        nopt.threads = g.threads;
        const lnn::FittedBinary fit = lnn::fit_binary(ds, arch, cfg.link, nopt);
        emit(g, bands_csv(lnn::score_bootstrap(fit, ds, opt, P), raw, cols, meta, &fit));
    } else {
        const lnn::FittedRegression fit = lnn::fit_regression(ds, arch, g.threads);
        emit(g, bands_csv(lnn::wild_bootstrap_reg(fit, ds, opt, P), raw, cols, meta, nullptr));
    }
    return 0;
}

int cmd_fit_local(const Globals& g, const DataArgs& a, const std::string& points_path,
                  std::optional<double> h)
{
    const Json cj = read_config(g);
    lnn::LnnConfig cfg = lnn::config_from_json(cj);
    lnn::Dataset ds = lnn::load_csv(a.path, a.y, a.x, false);
    cfg.d = ds.d();
    const double bw = h ? *h : lnn::build_architecture_for_sample(cfg, ds.T()).partition.h;
    const auto cols = point_columns(points_path, lnn::meta_of(ds), cfg.d);
    const Eigen::MatrixXd P = lnn::load_points(points_path, cols);
    const auto fits = lnn::fit_local_many(ds, P, bw, cfg, g.threads);
    auto os = number_stream();
    for (const auto& c : cols)
        os << c << ',';
    os << "ghat,count,flag";
    for (std::size_t j = 0; j < (fits.empty() ? 0 : static_cast<std::size_t>(fits[0].theta.size())); ++j)
        os << ",theta" << (j + 1);
    os << '\n';
    for (std::size_t e = 0; e < fits.size(); ++e) {
        for (Eigen::Index k = 0; k < P.cols(); ++k)
            os << P(static_cast<Eigen::Index>(e), k) << ',';
        os << fits[e].ghat << ',' << fits[e].count << ',' << (fits[e].flagged ? "flagged" : "ok");
        for (Eigen::Index j = 0; j < fits[e].theta.size(); ++j)
            os << ',' << fits[e].theta(j);
        os << '\n';
    }
    emit(g, os.str());
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& json_path, const std::string& points_path,
                 bool timing, std::optional<int> n)
{
    const Json cj = read_config(g);
    lnn::ExperimentSpec spec = lnn::experiment_from_json(cj);
    spec.threads = g.threads;
    spec.timing = timing;
    spec.keep_points = spec.keep_points || !points_path.empty();
    if (n)
        spec.n = *n;
    const lnn::SimReport rep = lnn::run_experiment(spec, g.seed);
    emit(g, lnn::to_csv(rep));
    if (!json_path.empty())
        lnn::write_text(json_path, lnn::to_json(rep).dump(2) + "\n");
    if (!points_path.empty())
        lnn::write_text(points_path, lnn::points_csv(rep));
    return 0;
}

int cmd_bench_kernel(const Globals& g)
{
    const Json cj = read_config(g);
    lnn::KernelBenchSpec spec = lnn::kernel_bench_from_json(cj);
    spec.threads = g.threads;
    emit(g, lnn::to_csv(lnn::run_kernel_benchmark(spec, g.seed)));
    return 0;
}

int cmd_inspect(const Globals& g, std::optional<std::size_t> T)
{
    const Json cj = read_config(g);
    const lnn::LnnConfig cfg = lnn::config_from_json(cj);
    if (cfg.bandwidth.mode == lnn::BandwidthChoice::Mode::rule && !T)
        throw lnn::ArgumentError("inspect-arch with the bandwidth rule needs --T");
    const lnn::Architecture arch = lnn::build_architecture_for_sample(cfg, T ? *T : 2);
    Json j;
    j["config"] = lnn::to_json(cfg);
    j["d_q"] = arch.dq();
    j["cubes"] = arch.num_cubes();
    j["neurons_per_cube"] = arch.net.neurons_per_cube();
    j["architecture"] = lnn::architecture_json(arch);
    j["basis_condition"] = arch.net.rotation.cond;
    emit(g, j.dump(2) + "\n");
    std::cerr << "neurons: " << arch.neuron_count() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Localized neural network estimation"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--seed", g.seed, "master random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output file (default: stdout)");
    app.fallthrough();

    DataArgs fit_args;
    auto* fit_reg = app.add_subcommand("fit-reg", "fit the regression model and print it as JSON");
    add_data_options(fit_reg, fit_args, true);
    fit_reg->add_flag("--normalize", fit_args.normalize, "z-normalize columns before fitting");
    auto* fit_bin = app.add_subcommand("fit-bin", "fit the binary-outcome model and print it as JSON");
    add_data_options(fit_bin, fit_args, true);
    fit_bin->add_flag("--normalize", fit_args.normalize, "z-normalize regressors before fitting");

    std::string model_path, points_path, mode = "global";
    DataArgs pred_args;
    pred_args.y.clear();
    auto* predict = app.add_subcommand("predict", "evaluate a saved model at points");
    predict->add_option("--model", model_path, "model JSON")->required();
    predict->add_option("--points", points_path, "CSV of evaluation points")->required();
    predict->add_option("--mode", mode, "global or local")->capture_default_str();
    add_data_options(predict, pred_args, false);

    DataArgs boot_args;
    std::string boot_kind = "reg", boot_points;
    auto* boot = app.add_subcommand("bootstrap", "fit and compute bootstrap bands");
    add_data_options(boot, boot_args, true);
    boot->add_option("--model", boot_kind, "reg or bin")->capture_default_str();
    boot->add_option("--points", boot_points, "CSV of evaluation points (default: L^d grid)");
    boot->add_flag("--normalize", boot_args.normalize, "z-normalize regressors");

    DataArgs local_args;
    std::string local_points;
    std::optional<double> local_h;
    auto* local = app.add_subcommand("fit-local", "per-point local fits");
    add_data_options(local, local_args, true);
    local->add_option("--points", local_points, "CSV of evaluation points")->required();
    local->add_option("--half-width", local_h, "window half-width (default: rule bandwidth)");

    std::string sim_json, sim_points;
    bool sim_timing = false;
    std::optional<int> sim_n;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo experiment");
    sim->add_option("--json", sim_json, "also write the report as JSON");
    sim->add_option("--points", sim_points, "write plot-ready per-point CSV");
    sim->add_option("--n", sim_n, "override the number of replications");
    sim->add_flag("--timing", sim_timing, "record wall time per row");

    app.add_subcommand("bench-kernel", "LNN versus kernel-regression coverage");

    std::optional<std::size_t> inspect_T;
    auto* inspect = app.add_subcommand("inspect-arch", "print the predetermined architecture");
    inspect->add_option("--T", inspect_T, "sample size for the bandwidth rule");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "fit-reg")
            return cmd_fit(g, fit_args, false);
        if (name == "fit-bin")
            return cmd_fit(g, fit_args, true);
        if (name == "predict")
            return cmd_predict(g, model_path, points_path, pred_args, mode);
        if (name == "bootstrap")
            return cmd_bootstrap(g, boot_args, boot_kind, boot_points);
        if (name == "fit-local")
            return cmd_fit_local(g, local_args, local_points, local_h);
        if (name == "simulate")
            return cmd_simulate(g, sim_json, sim_points, sim_timing, sim_n);
        if (name == "bench-kernel")
            return cmd_bench_kernel(g);
        if (name == "inspect-arch")
            return cmd_inspect(g, inspect_T);
    } catch (const lnn::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const lnn::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const lnn::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
