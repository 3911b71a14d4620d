#pragma once

#include "plsshrink/csv.hpp"
#include "plsshrink/simulate.hpp"
#include "plsshrink/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

namespace plsshrink {

/// Invalid or inconsistent run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;  // factors | fit | simulate | cv
    std::string input_path;
    std::string gram_path;   // matrix-level input, factors only
    std::string cross_path;  // goes with gram_path
    int example_id = 0;      // 1..3, 0 = none
    std::string target_column = "y";
    std::vector<Method> methods{Method::Pls, Method::Bound};
    Index m_lo = 1;
    Index m_hi = 0;  // 0: up to p
    std::vector<double> stnr_levels{1.0, 4.0, 16.0};
    int replications = 200;
    Index folds = 10;
    std::uint64_t seed = 1;
    double ridge_penalty = 1.0;
    MseTarget mse_target = MseTarget::Beta;
    bool empirical_stnr = false;
    std::string out_dir = "out";
};

namespace detail {

inline std::string methods_string(const std::vector<Method>& ms) {
    std::string s;
    for (size_t i = 0; i < ms.size(); ++i) s += (i ? "," : "") + method_name(ms[i]);
    return s;
}

inline std::string stnr_string(const std::vector<double>& levels) {
    std::string s;
    for (size_t i = 0; i < levels.size(); ++i) s += (i ? "," : "") + format_sig(levels[i]);
    return s;
}

inline std::string config_echo(const RunConfig& cfg) {
    std::ostringstream os;
    os << "command=" << cfg.command;
    if (!cfg.input_path.empty()) os << " input=" << cfg.input_path;
    if (!cfg.gram_path.empty()) os << " gram=" << cfg.gram_path << " cross=" << cfg.cross_path;
    if (cfg.example_id > 0) os << " example=" << cfg.example_id;
    os << " target=" << cfg.target_column << " methods=" << methods_string(cfg.methods)
       << " m-range=" << cfg.m_lo << ".." << (cfg.m_hi > 0 ? std::to_string(cfg.m_hi) : "auto")
       << " stnr=" << stnr_string(cfg.stnr_levels) << " K=" << cfg.replications
       << " folds=" << cfg.folds << " seed=" << cfg.seed << " penalty=" << format_sig(cfg.ridge_penalty)
       << " mse-target=" << mse_target_name(cfg.mse_target)
       << " empirical-stnr=" << (cfg.empirical_stnr ? 1 : 0) << " out=" << cfg.out_dir;
    return os.str();
}

inline std::vector<std::pair<std::string, std::string>> report_meta(const RunConfig& cfg) {
    return {{"tool", std::string("plsshrink ") + kVersion},
            {"command", cfg.command},
            {"seed", std::to_string(cfg.seed)},
            {"config", config_echo(cfg)}};
}

inline std::string run_tag(const RunConfig& cfg) {
    if (cfg.example_id > 0) return "example" + std::to_string(cfg.example_id);
    if (!cfg.input_path.empty()) return std::filesystem::path(cfg.input_path).stem().string();
    if (!cfg.gram_path.empty()) return "gram";
    return "run";
}

inline void write_manifest(const RunConfig& cfg, const std::vector<std::string>& files,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
    nlohmann::json j;
    j["tool"] = "plsshrink";
    j["version"] = kVersion;
    j["command"] = cfg.command;
    j["seed"] = std::to_string(cfg.seed);
    j["config"] = config_echo(cfg);
    j["files"] = files;
    for (const auto& [k, v] : extra) j[k] = v;
    const std::string path = (std::filesystem::path(cfg.out_dir) / "manifest.json").string();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

/// Materializes the configured data source as a standardized regression
/// problem (synthetic examples get a seeded response at the first stnr level).
inline RegressionData load_regression_data(const RunConfig& cfg) {
    if (!cfg.input_path.empty()) {
        const Dataset data = ingest_csv(cfg.input_path, cfg.target_column);
        try {
            return RegressionData::standardize(data.x, data.y);
        } catch (const std::invalid_argument& e) {
            throw DataError("'" + cfg.input_path + "': " + e.what());
        }
    }
    const DesignSpec spec = DesignSpec::example(cfg.example_id, cfg.seed);
    const Design design = generate_design(spec);
    const double sigma = calibrate_sigma(spec.covariance, design.beta, cfg.stnr_levels.front());
    const Vector y = draw_response(design.x, design.beta, sigma, derive_seed(cfg.seed, 0xda7a));
    return RegressionData::standardize(design.x, y);
}

inline Index resolved_m_hi(const RunConfig& cfg, Index p) {
    const Index hi = cfg.m_hi > 0 ? cfg.m_hi : p;
    if (cfg.m_lo < 1 || hi < cfg.m_lo || hi > p)
        throw ConfigError("m-range " + std::to_string(cfg.m_lo) + ".." + std::to_string(hi) +
                          " out of bounds for p = " + std::to_string(p));
    return hi;
}

inline void run_factors(const RunConfig& cfg) {
    SymMatrix a;
    Vector b;
    EigenSystem eig;
    if (!cfg.gram_path.empty()) {
        a = SymMatrix::symmetrized(read_matrix_csv(cfg.gram_path));
        Matrix bm = read_matrix_csv(cfg.cross_path);
        if (bm.cols() != 1 && bm.rows() != 1)
            throw DataError("'" + cfg.cross_path + "': expected a vector");
        b = bm.cols() == 1 ? Vector(bm.col(0)) : Vector(bm.row(0).transpose());
        if (b.size() != a.order()) throw DataError("gram and cross sizes do not match");
        eig = sym_eigen(a);
    } else {
        const RegressionData data = load_regression_data(cfg);
        a = data.gram();
        b = data.cross();
        eig = data.eigensystem();
    }

    const Index p = a.order();
    const Index m_hi = resolved_m_hi(cfg, p);
    const KrylovState state = lanczos(a, b, m_hi);
    const Index m_top = std::min(m_hi, state.steps());

    std::vector<std::vector<double>> factor_rows, ritz_rows;
    std::cout << "step table (full precision in the CSV):\n";
    for (Index m = cfg.m_lo; m <= m_top; ++m) {
        const ShrinkageProfile prof = shrinkage_factors(state, eig, m);
        const Vector clipped = clip_to_unit(prof.factors);
        int nclipped = 0;
        double fmax = 0.0;
        for (Index i = 0; i < prof.lambdas.size(); ++i) {
            if (!prof.lambda_retained[static_cast<size_t>(i)]) continue;
            factor_rows.push_back({static_cast<double>(m), static_cast<double>(i + 1),
                                   prof.lambdas(i), prof.factors(i), clipped(i)});
            fmax = std::max(fmax, std::abs(prof.factors(i)));
            if (std::abs(prof.factors(i)) > 1.0) ++nclipped;
        }
        for (Index i = 0; i < prof.ritz.size(); ++i)
            ritz_rows.push_back({static_cast<double>(m), static_cast<double>(i + 1), prof.ritz(i),
                                 prof.ritz_nonzero[static_cast<size_t>(i)] ? 1.0 : 0.0});
        std::cout << "  m=" << m << ": max|f|=" << format_sig(fmax) << ", clipped " << nclipped
                  << " of " << p << "\n";
    }

    const std::string tag = run_tag(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const auto meta = report_meta(cfg);
    const std::string f1 =
        (std::filesystem::path(cfg.out_dir) / ("factors_" + tag + ".csv")).string();
    const std::string f2 = (std::filesystem::path(cfg.out_dir) / ("ritz_" + tag + ".csv")).string();
    write_report_csv(f1, meta, {"m", "index", "lambda", "factor", "factor_clipped"}, factor_rows);
    write_report_csv(f2, meta, {"m", "index", "ritz", "nonzero"}, ritz_rows);
    write_manifest(cfg, {f1, f2}, {{"m_star", state.m_star ? std::to_string(*state.m_star) : "n/a"}});
}

inline void run_fit(const RunConfig& cfg) {
    const RegressionData data = load_regression_data(cfg);
    const Index p = data.p();
    const Index m_hi = resolved_m_hi(cfg, p);

    std::vector<EstimatorResult> fits;
    for (Method method : cfg.methods) {
        switch (method) {
            case Method::Ols:
                fits.push_back(ols(data));
                break;
            case Method::Ridge:
                fits.push_back(ridge(data, cfg.ridge_penalty));
                break;
            case Method::Pcr:
                for (Index k = cfg.m_lo; k <= std::min(m_hi, data.rank()); ++k)
                    fits.push_back(pcr(data, k));
                break;
            case Method::Pls:
                for (Index m = cfg.m_lo; m <= m_hi; ++m) fits.push_back(pls_krylov(data, m));
                break;
            case Method::PlsShrink:
                for (Index m = cfg.m_lo; m <= m_hi; ++m) fits.push_back(pls_shrinkage_route(data, m));
                break;
            case Method::Bound:
                for (Index m = cfg.m_lo; m <= m_hi; ++m) fits.push_back(bound_estimator(data, m));
                break;
        }
    }

    std::vector<std::vector<double>> summary_rows, beta_rows;
    std::cout << "method      hyper   |beta|     residual\n";
    for (size_t i = 0; i < fits.size(); ++i) {
        const EstimatorResult& r = fits[i];
        const double bnorm = r.beta.norm();
        const double resid = (data.response() - r.fitted).norm();
        summary_rows.push_back({static_cast<double>(i + 1), static_cast<double>(r.method), r.hyper,
                                bnorm, resid});
        for (Index j = 0; j < r.beta.size(); ++j)
            beta_rows.push_back({static_cast<double>(i + 1), static_cast<double>(r.method), r.hyper,
                                 static_cast<double>(j + 1), r.beta(j)});
        std::cout << method_name(r.method) << (std::string(11 - std::min<size_t>(10, method_name(r.method).size()), ' '))
                  << format_sig(r.hyper) << "\t" << format_sig(bnorm) << "\t" << format_sig(resid);
        if (!r.note.empty()) std::cout << "\t(" << r.note << ")";
        std::cout << "\n";
    }

    const std::string tag = run_tag(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const auto meta = report_meta(cfg);
    const std::string f1 =
        (std::filesystem::path(cfg.out_dir) / ("fit_summary_" + tag + ".csv")).string();
    const std::string f2 =
        (std::filesystem::path(cfg.out_dir) / ("fit_beta_" + tag + ".csv")).string();
    write_report_csv(f1, meta, {"fit", "method", "hyper", "beta_norm", "residual_norm"},
                     summary_rows);
    write_report_csv(f2, meta, {"fit", "method", "hyper", "index", "beta"}, beta_rows);
    write_manifest(cfg, {f1, f2}, {});
}

inline void run_simulate(const RunConfig& cfg) {
    const DesignSpec spec = DesignSpec::example(cfg.example_id, cfg.seed);
    MseOptions opts;
    opts.target = cfg.mse_target;
    opts.empirical_stnr = cfg.empirical_stnr;
    opts.ridge_penalty = cfg.ridge_penalty;
    const SimulationReport report =
        estimate_mse(spec, cfg.stnr_levels, cfg.replications, cfg.methods, opts);
    if (!report.note.empty()) std::cout << "note: " << report.note << "\n";

    const std::string tag = run_tag(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<std::string> files;
    auto meta = report_meta(cfg);
    meta.push_back({"target", mse_target_name(report.target)});

    std::vector<std::string> columns{"m"};
    for (Method m : report.methods) columns.push_back(method_name(m));
    for (size_t s = 0; s < report.stnr_levels.size(); ++s) {
        auto level_meta = meta;
        level_meta.push_back({"stnr", format_full(report.stnr_levels[s])});
        level_meta.push_back({"sigma", format_full(report.sigmas[s])});
        std::vector<std::vector<double>> rows;
        for (Index m = 1; m <= report.p; ++m) {
            std::vector<double> row{static_cast<double>(m)};
            for (size_t mi = 0; mi < report.methods.size(); ++mi)
                row.push_back(report.mse[s][mi][static_cast<size_t>(m - 1)]);
            rows.push_back(std::move(row));
        }
        const std::string fname = "simulate_" + tag + "_stnr" + format_sig(report.stnr_levels[s]) +
                                  ".csv";
        const std::string path = (std::filesystem::path(cfg.out_dir) / fname).string();
        write_report_csv(path, level_meta, columns, rows);
        files.push_back(path);

        std::cout << "stnr=" << format_sig(report.stnr_levels[s])
                  << " (sigma=" << format_sig(report.sigmas[s]) << "):\n";
        for (size_t mi = 0; mi < report.methods.size(); ++mi) {
            size_t best = 0;
            for (size_t k = 1; k < report.mse[s][mi].size(); ++k)
                if (report.mse[s][mi][k] < report.mse[s][mi][best]) best = k;  // ties keep smaller m
            std::cout << "  " << method_name(report.methods[mi]) << ": best m=" << (best + 1)
                      << " with MSE=" << format_sig(report.mse[s][mi][best]) << "\n";
        }
    }
    write_manifest(cfg, files, {{"target", mse_target_name(report.target)}, {"note", report.note}});
}

inline void run_cv(const RunConfig& cfg) {
    Matrix x;
    Vector y;
    if (!cfg.input_path.empty()) {
        const Dataset data = ingest_csv(cfg.input_path, cfg.target_column);
        x = data.x;
        y = data.y;
    } else {
        const DesignSpec spec = DesignSpec::example(cfg.example_id, cfg.seed);
        const Design design = generate_design(spec);
        const double sigma = calibrate_sigma(spec.covariance, design.beta, cfg.stnr_levels.front());
        x = design.x;
        y = draw_response(design.x, design.beta, sigma, derive_seed(cfg.seed, 0xda7a));
    }
    const Index p = x.cols();
    const Index m_hi = resolved_m_hi(cfg, p);

    std::vector<CvCurve> curves;
    for (Method method : cfg.methods)
        curves.push_back(
            kfold_cv(x, y, method, cfg.m_lo, m_hi, cfg.folds, cfg.seed, cfg.ridge_penalty));

    std::vector<std::string> columns{"m"};
    for (Method m : cfg.methods) columns.push_back(method_name(m) + "_cv");
    for (Method m : cfg.methods) columns.push_back(method_name(m) + "_clip_events");
    std::vector<std::vector<double>> rows;
    for (Index m = cfg.m_lo; m <= m_hi; ++m) {
        std::vector<double> row{static_cast<double>(m)};
        for (const CvCurve& c : curves) row.push_back(c.errors[static_cast<size_t>(m - cfg.m_lo)]);
        for (const CvCurve& c : curves)
            row.push_back(static_cast<double>(c.clip_events[static_cast<size_t>(m - cfg.m_lo)]));
        rows.push_back(std::move(row));
    }

    const std::string tag = run_tag(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path =
        (std::filesystem::path(cfg.out_dir) / ("cv_" + tag + ".csv")).string();
    write_report_csv(path, report_meta(cfg), columns, rows);
    write_manifest(cfg, {path}, {});

    for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        size_t best = 0;
        for (size_t k = 1; k < curves[mi].errors.size(); ++k)
            if (curves[mi].errors[k] < curves[mi].errors[best]) best = k;
        std::cout << method_name(cfg.methods[mi]) << ": best m="
                  << (cfg.m_lo + static_cast<Index>(best))
                  << " with cv error=" << format_sig(curves[mi].errors[best]) << "\n";
    }
}

}  // namespace detail

inline void validate(const RunConfig& cfg) {
    if (cfg.command != "factors" && cfg.command != "fit" && cfg.command != "simulate" &&
        cfg.command != "cv")
        throw ConfigError("unknown command '" + cfg.command + "'");
    const int sources = (!cfg.input_path.empty() ? 1 : 0) + (cfg.example_id > 0 ? 1 : 0) +
                        (!cfg.gram_path.empty() ? 1 : 0);
    if (sources != 1)
        throw ConfigError("exactly one data source required (--input, --example or --gram/--cross)");
    if (!cfg.gram_path.empty() && cfg.command != "factors")
        throw ConfigError("--gram/--cross input is only available for the factors command");
    if (!cfg.gram_path.empty() && cfg.cross_path.empty())
        throw ConfigError("--gram requires --cross");
    if (cfg.command == "simulate" && cfg.example_id == 0)
        throw ConfigError("simulate requires --example (the true coefficients must be known)");
    if (cfg.example_id < 0 || cfg.example_id > 3)
        throw ConfigError("example id must be 1, 2 or 3");
    if (cfg.m_lo < 1 || (cfg.m_hi != 0 && cfg.m_hi < cfg.m_lo))
        throw ConfigError("invalid m-range");
    if (cfg.replications < 2) throw ConfigError("K must be at least 2");
    if (cfg.folds < 2) throw ConfigError("folds must be at least 2");
    if (cfg.methods.empty()) throw ConfigError("no methods selected");
    if (cfg.stnr_levels.empty()) throw ConfigError("no stnr levels");
    for (double s : cfg.stnr_levels)
        if (s <= 0.0) throw ConfigError("stnr levels must be positive");
    if (cfg.ridge_penalty <= 0.0) throw ConfigError("penalty must be positive");
    if (cfg.out_dir.empty()) throw ConfigError("output directory must not be empty");
}

inline void run(const RunConfig& cfg) {
    validate(cfg);
    if (cfg.command == "factors")
        detail::run_factors(cfg);
    else if (cfg.command == "fit")
        detail::run_fit(cfg);
    else if (cfg.command == "simulate")
        detail::run_simulate(cfg);
    else
        detail::run_cv(cfg);
}

/// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
/// failure.
inline int run_main(int argc, const char* const* argv) {
    RunConfig cfg;
    std::string m_range = "1..auto";
    std::vector<std::string> methods_raw;
    std::string target_raw = "beta";

    CLI::App app{"Krylov-space PLS workbench: shrinkage factors, clipped estimators and MSE experiments"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config");
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--example", cfg.example_id, "synthetic example id (1, 2 or 3)")
            ->check(CLI::Range(1, 3));
        sub->add_option("--input", cfg.input_path, "dataset CSV with a header row");
        sub->add_option("--target", cfg.target_column, "response column name (default y)");
        sub->add_option("--methods", methods_raw, "comma list of pls,bound,ols,pcr,ridge")
            ->delimiter(',');
        sub->add_option("--m-range", m_range, "step range A..B (default 1..p)");
        sub->add_option("--stnr", cfg.stnr_levels, "signal-to-noise levels")->delimiter(',');
        sub->add_option("--K", cfg.replications, "Monte-Carlo replications");
        sub->add_option("--folds", cfg.folds, "cross-validation folds");
        sub->add_option("--seed", cfg.seed, "random seed (reports echo it)");
        sub->add_option("--penalty", cfg.ridge_penalty, "ridge penalty");
        sub->add_option("--out", cfg.out_dir, "output directory");
    };

    CLI::App* factors = app.add_subcommand("factors", "per-step shrinkage factor tables");
    add_common(factors);
    factors->add_option("--gram", cfg.gram_path, "headerless CSV with the gram matrix A");
    factors->add_option("--cross", cfg.cross_path, "headerless CSV with the vector b");

    CLI::App* fit = app.add_subcommand("fit", "estimator summaries on one dataset");
    add_common(fit);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo MSE curves per step");
    add_common(simulate);
    simulate->add_option("--mse-target", target_raw, "beta or xbeta");
    simulate->add_flag("--empirical-stnr", cfg.empirical_stnr,
                       "calibrate sigma from the realized X*beta");

    CLI::App* cv = app.add_subcommand("cv", "k-fold cross-validation error curves");
    add_common(cv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (factors->parsed()) cfg.command = "factors";
        if (fit->parsed()) cfg.command = "fit";
        if (simulate->parsed()) cfg.command = "simulate";
        if (cv->parsed()) cfg.command = "cv";

        if (!methods_raw.empty()) {
            cfg.methods.clear();
            for (const std::string& s : methods_raw) cfg.methods.push_back(method_from_string(s));
        }
        if (target_raw == "beta")
            cfg.mse_target = MseTarget::Beta;
        else if (target_raw == "xbeta")
            cfg.mse_target = MseTarget::XBeta;
        else
            throw ConfigError("mse-target must be beta or xbeta");

        if (m_range != "1..auto") {
            const auto dots = m_range.find("..");
            try {
                if (dots == std::string::npos) {
                    cfg.m_lo = cfg.m_hi = std::stol(m_range);
                } else {
                    cfg.m_lo = std::stol(m_range.substr(0, dots));
                    cfg.m_hi = std::stol(m_range.substr(dots + 2));
                }
            } catch (const std::exception&) {
                throw ConfigError("cannot parse m-range '" + m_range + "' (expected A..B)");
            }
        }

        run(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

}  // namespace plsshrink
