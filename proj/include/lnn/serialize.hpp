#pragma once

#include "lnn/architecture.hpp"
#include "lnn/binary.hpp"
#include "lnn/config.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/kernelbase.hpp"
#include "lnn/regress.hpp"
#include "lnn/simlab.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace lnn {

using Json = nlohmann::ordered_json;

inline constexpr int model_format_version = 1;

namespace detail {

inline Json to_json(const VectorXd& v)
{
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        j.push_back(v(i));
    return j;
}

inline Json to_json(const MatrixXd& A)
{
    Json j = Json::array();
    for (Eigen::Index r = 0; r < A.rows(); ++r)
        j.push_back(to_json(VectorXd(A.row(r).transpose())));
    return j;
}

inline VectorXd vector_from_json(const Json& j)
{
    if (!j.is_array())
        throw DataError("expected a JSON array of numbers");
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

inline MatrixXd matrix_from_json(const Json& j, Eigen::Index cols_if_empty = 0)
{
    if (!j.is_array())
        throw DataError("expected a JSON array of rows");
    if (j.empty())
        return MatrixXd(0, cols_if_empty);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    MatrixXd A(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols)
            throw DataError("ragged matrix in JSON");
        A.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r]).transpose();
    }
    return A;
}

inline Json to_json(const Normalization& n)
{
    if (n.empty())
        return nullptr;
    return Json{{"mean", n.mean}, {"sd", n.sd}};
}

inline Normalization normalization_from_json(const Json& j)
{
    Normalization n;
    if (j.is_null())
        return n;
    n.mean = j.at("mean").get<std::vector<double>>();
    n.sd = j.at("sd").get<std::vector<double>>();
    return n;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace detail

//! Model hyperparameters from a config document. Unknown keys are ignored
//! so one file can also carry run settings (R, level, L, ...).
inline LnnConfig config_from_json(const Json& j)
{
    try {
        LnnConfig c;
        c.a = detail::get_or(j, "a", c.a);
        c.d = detail::get_or(j, "d", c.d);
        c.q = detail::get_or(j, "q", c.q);
        c.s = detail::get_or(j, "s", c.s);
        c.u_sigma = detail::get_or(j, "u_sigma", c.u_sigma);
        if (j.contains("activation"))
            c.activation = activation_from_string(j.at("activation").get<std::string>());
        if (j.contains("bandwidth")) {
            const Json& b = j.at("bandwidth");
            if (b.is_string()) {
                c.bandwidth.mode = bandwidth_mode_from_string(b.get<std::string>());
            } else {
                c.bandwidth.mode = bandwidth_mode_from_string(b.at("mode").get<std::string>());
                c.bandwidth.value = detail::get_or(b, "value", 0.0);
            }
        }
        if (j.contains("weight_matrix") && !j.at("weight_matrix").is_null())
            c.weight_matrix = detail::matrix_from_json(j.at("weight_matrix"));
        if (j.contains("link"))
            c.link = link_from_string(j.at("link").get<std::string>());
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("config: ") + e.what());
    }
}

inline Json to_json(const LnnConfig& c)
{
    Json j;
    j["a"] = c.a;
    j["d"] = c.d;
    j["q"] = c.q;
    j["s"] = c.s;
    j["u_sigma"] = c.u_sigma;
    j["activation"] = std::string(to_string(c.activation));
    j["bandwidth"] = Json{{"mode", std::string(to_string(c.bandwidth.mode))},
                          {"value", c.bandwidth.value}};
    j["weight_matrix"] = c.weight_matrix ? detail::to_json(*c.weight_matrix) : Json(nullptr);
    j["link"] = std::string(to_string(c.link));
    return j;
}

inline Json architecture_json(const Architecture& arch)
{
    Json j;
    j["gamma"] = detail::to_json(arch.net.gamma);
    j["beta"] = detail::to_json(arch.net.beta);
    j["W"] = detail::to_json(arch.net.W);
    j["M"] = arch.partition.M;
    j["h"] = arch.partition.h;
    j["D"] = detail::to_json(arch.net.rotation.D);
    j["index_order"] = "graded-lex";
    Json idx = Json::array();
    for (const auto& n : arch.net.idx.indices())
        idx.push_back(n);
    j["indices"] = idx;
    j["neurons"] = arch.neuron_count();
    return j;
}

//! Data-related metadata carried with a model so that predictions can
//! accept raw (unnormalized) inputs.
struct ModelMeta {
    std::string y_name = "y";
    std::vector<std::string> x_names;
    Normalization y_norm;
    Normalization x_norm;
};

inline ModelMeta meta_of(const Dataset& d)
{
    return {d.y_name, d.x_names, d.y_norm, d.x_norm};
}

using AnyModel = std::variant<FittedRegression, FittedBinary>;

struct LoadedModel {
    AnyModel model;
    ModelMeta meta;

    const Architecture& arch() const
    {
        return std::visit([](const auto& m) -> const Architecture& { return m.arch; }, model);
    }
    bool is_binary() const { return std::holds_alternative<FittedBinary>(model); }
};

namespace detail {

inline Json common_model_json(const char* kind, const Architecture& arch, const MatrixXd& thetas,
                              const std::vector<std::size_t>& counts,
                              const std::vector<bool>& flagged, const ModelMeta& meta)
{
    Json j;
    j["format"] = "lnn-model";
    j["version"] = model_format_version;
    j["kind"] = kind;
    j["config"] = to_json(arch.config);
    j["architecture"] = architecture_json(arch);
    j["thetas"] = to_json(thetas);
    j["counts"] = counts;
    std::vector<int> f(flagged.begin(), flagged.end());
    j["flags"] = f;
    j["data"] = Json{{"y_name", meta.y_name},
                     {"x_names", meta.x_names},
                     {"y_norm", to_json(meta.y_norm)},
                     {"x_norm", to_json(meta.x_norm)}};
    return j;
}

} // namespace detail

inline Json model_json(const FittedRegression& m, const ModelMeta& meta = {})
{
    Json j = detail::common_model_json("regression", m.arch, m.thetas, m.counts, m.flagged, meta);
    j["sigma_eps2"] = m.sigma_eps2;
    return j;
}

inline Json model_json(const FittedBinary& m, const ModelMeta& meta = {})
{
    Json j = detail::common_model_json("binary", m.arch, m.thetas, m.counts, m.flagged, meta);
    j["link"] = std::string(to_string(m.link.kind));
    Json conv = Json::array();
    for (const auto& r : m.records)
        conv.push_back(Json{{"status", std::string(to_string(r.status))},
                            {"iterations", r.iterations},
                            {"grad_norm", r.grad_norm},
                            {"clamped", r.clamped}});
    j["convergence"] = conv;
    return j;
}

//! Rebuilds the architecture from the stored config and cube count and
//! checks it against the stored matrices.
inline LoadedModel model_from_json(const Json& j)
{
    try {
        if (j.at("format").get<std::string>() != "lnn-model")
            throw DataError("not an lnn-model document");
        if (j.at("version").get<int>() != model_format_version)
            throw DataError("unsupported model version");
        const LnnConfig cfg = config_from_json(j.at("config"));
        const Json& aj = j.at("architecture");
        if (aj.at("index_order").get<std::string>() != "graded-lex")
            throw DataError("unsupported index order");
        Architecture arch = build_architecture(cfg, aj.at("M").get<int>());
        const MatrixXd D = detail::matrix_from_json(aj.at("D"));
        const VectorXd gamma = detail::vector_from_json(aj.at("gamma"));
        if (D.rows() != arch.net.rotation.D.rows() || D.cols() != arch.net.rotation.D.cols() ||
            gamma.size() != arch.net.gamma.size() ||
            (D - arch.net.rotation.D).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + D.cwiseAbs().maxCoeff()) ||
            (gamma - arch.net.gamma).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + gamma.cwiseAbs().maxCoeff()))
            throw DataError("stored architecture does not match its config");

        const MatrixXd thetas =
            detail::matrix_from_json(j.at("thetas"), static_cast<Eigen::Index>(arch.dq()));
        const auto counts = j.at("counts").get<std::vector<std::size_t>>();
        const auto flags = j.at("flags").get<std::vector<int>>();
        if (static_cast<std::size_t>(thetas.rows()) != arch.num_cubes() ||
            static_cast<std::size_t>(thetas.cols()) != arch.dq() || counts.size() != arch.num_cubes() ||
            flags.size() != arch.num_cubes())
            throw DataError("model coefficient block has the wrong shape");

        LoadedModel out;
        const Json& dj = j.at("data");
        out.meta.y_name = dj.at("y_name").get<std::string>();
        out.meta.x_names = dj.at("x_names").get<std::vector<std::string>>();
        out.meta.y_norm = detail::normalization_from_json(dj.at("y_norm"));
        out.meta.x_norm = detail::normalization_from_json(dj.at("x_norm"));

        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "regression") {
            FittedRegression m;
            m.arch = std::move(arch);
            m.thetas = thetas;
            m.counts = counts;
            m.flagged.assign(flags.begin(), flags.end());
            m.sigma_eps2 = j.at("sigma_eps2").get<double>();
            out.model = std::move(m);
        } else if (kind == "binary") {
            FittedBinary m;
            m.arch = std::move(arch);
            m.link = make_link(link_from_string(j.at("link").get<std::string>()));
            m.thetas = thetas;
            m.counts = counts;
            m.flagged.assign(flags.begin(), flags.end());
            for (const Json& r : j.at("convergence")) {
                ConvergenceRecord rec;
                rec.status = fit_status_from_string(r.at("status").get<std::string>());
                rec.iterations = r.at("iterations").get<int>();
                rec.grad_norm = r.at("grad_norm").get<double>();
                rec.clamped = r.at("clamped").get<std::size_t>();
                m.records.push_back(rec);
            }
            out.model = std::move(m);
        } else {
            throw DataError("unknown model kind '" + kind + "'");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model document: ") + e.what());
    }
}

//! Simulation matrix from a config document; scalar T/d/q/u_sigma are
//! accepted as one-element lists.
inline ExperimentSpec experiment_from_json(const Json& j)
{
    try {
        ExperimentSpec s;
        auto list = [&](const char* plural, const char* single, auto& dst) {
            using V = typename std::decay_t<decltype(dst)>::value_type;
            const char* key = j.contains(plural) ? plural : (j.contains(single) ? single : nullptr);
            if (!key)
                return;
            const Json& v = j.at(key);
            dst.clear();
            if (v.is_array())
                for (const Json& e : v)
                    dst.push_back(e.get<V>());
            else
                dst.push_back(v.get<V>());
        };
        if (j.contains("model"))
            s.model = sim_model_from_string(j.at("model").get<std::string>());
        list("Ts", "T", s.Ts);
        list("ds", "d", s.ds);
        list("qs", "q", s.qs);
        list("u_sigmas", "u_sigma", s.u_sigmas);
        s.n = detail::get_or(j, "n", s.n);
        s.R = detail::get_or(j, "R", s.R);
        s.level = detail::get_or(j, "level", s.level);
        s.a = detail::get_or(j, "a", s.a);
        s.L = detail::get_or(j, "L", s.L);
        s.s = detail::get_or(j, "s", s.s);
        s.phi = detail::get_or(j, "phi", s.phi);
        s.innov_var = detail::get_or(j, "innov_var", s.innov_var);
        Json rest = j;
        for (const char* k : {"T", "Ts", "d", "ds", "q", "qs", "u_sigma", "u_sigmas"})
            rest.erase(k);
        const LnnConfig c = config_from_json(rest);
        s.activation = c.activation;
        s.link = c.link;
        s.bandwidth = c.bandwidth;
        s.keep_points = detail::get_or(j, "points", s.keep_points);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("config: ") + e.what());
    }
}

inline KernelBenchSpec kernel_bench_from_json(const Json& j)
{
    try {
        KernelBenchSpec s;
        if (j.contains("T")) {
            s.Ts.clear();
            if (j.at("T").is_array())
                s.Ts = j.at("T").get<std::vector<std::size_t>>();
            else
                s.Ts.push_back(j.at("T").get<std::size_t>());
        }
        s.d = detail::get_or(j, "d", s.d);
        s.q = detail::get_or(j, "q", s.q);
        s.u_sigma = detail::get_or(j, "u_sigma", s.u_sigma);
        s.n = detail::get_or(j, "n", s.n);
        s.R = detail::get_or(j, "R", s.R);
        s.level = detail::get_or(j, "level", s.level);
        s.a = detail::get_or(j, "a", s.a);
        s.s = detail::get_or(j, "s", s.s);
        s.phi = detail::get_or(j, "phi", s.phi);
        s.innov_var = detail::get_or(j, "innov_var", s.innov_var);
        if (j.contains("kernels")) {
            s.kernels.clear();
            for (const Json& k : j.at("kernels"))
                s.kernels.push_back(kernel_from_string(k.get<std::string>()));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("config: ") + e.what());
    }
}

inline Json to_json(const SimReport& rep)
{
    Json rows = Json::array();
    for (const SimRow& r : rep.rows) {
        Json j;
        j["model"] = std::string(to_string(r.model));
        j["T"] = r.T;
        j["d"] = r.d;
        j["q"] = r.q;
        j["u_sigma"] = r.u_sigma;
        j["n_reps"] = r.n_reps;
        j["n_failed"] = r.n_failed;
        j["excluded_cubes"] = r.excluded_cubes;
        j["R"] = r.R;
        j["M"] = r.M;
        j["h"] = r.h;
        j["RMSE_g"] = std::isnan(r.rmse) ? Json(nullptr) : Json(r.rmse);
        j["RMSE_g_star"] = r.rmse_star && !std::isnan(*r.rmse_star) ? Json(*r.rmse_star) : Json(nullptr);
        j["CR_g"] = std::isnan(r.cr) ? Json(nullptr) : Json(r.cr);
        if (r.wall_time)
            j["wall_time"] = *r.wall_time;
        rows.push_back(j);
    }
    return Json{{"format", "lnn-simreport"}, {"rows", rows}};
}

} // namespace lnn
