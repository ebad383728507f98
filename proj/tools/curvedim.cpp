#include "curvedim/csv.hpp"
#include "curvedim/density.hpp"
#include "curvedim/dimension.hpp"
#include "curvedim/error.hpp"
#include "curvedim/report.hpp"
#include "curvedim/simulation.hpp"
#include "curvedim/ts_models.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

using namespace curvedim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    fs::path output_dir = ".";
};

template <typename T>
std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>)
        return format_double(static_cast<double>(v));
    else if constexpr (std::is_integral_v<T>)
        return std::to_string(v);
    else
        return std::string(v);
}

template <typename... T>
void csv_row(std::ostream& out, const T&... values) {
    bool first = true;
    ((out << (first ? "" : ",") << cell(values), first = false), ...);
    out << '\n';
}

// Files written by one command, recorded in its manifest.
class OutputSet {
public:
    OutputSet(const GlobalOptions& global, std::string command) : global_(global), command_(std::move(command)) {
        std::error_code ec;
        fs::create_directories(global_.output_dir, ec);
        if (ec) fail(ErrorKind::Io, "cannot create output directory " + global_.output_dir.string());
    }

    template <typename Fn>
    void write(const std::string& name, Fn&& fn) {
        const fs::path path = global_.output_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
        fn(out);
        out.flush();
        if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
        files_.push_back(name);
    }

    void record(std::string name) { files_.push_back(std::move(name)); }

    void write_json(const std::string& name, const json& doc) {
        write(name, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    }

    void finish(json config) {
        json manifest{{"tool", "curvedim"},
                      {"version", std::string(kArtifactVersion)},
                      {"command", command_},
                      {"seed", global_.seed},
                      {"threads", global_.threads},
                      {"config", std::move(config)},
                      {"outputs", files_}};
        const fs::path path = global_.output_dir / "manifest.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
        out << manifest.dump(2) << '\n';
    }

private:
    const GlobalOptions& global_;
    std::string command_;
    std::vector<std::string> files_;
};

const std::map<std::string, EpsilonRule> kEpsilonRules{
    {"covariance", EpsilonRule::Covariance}, {"cubic", EpsilonRule::Cubic}, {"fixed", EpsilonRule::Fixed}};
const std::map<std::string, EigenRoute> kRoutes{
    {"auto", EigenRoute::Auto}, {"dual", EigenRoute::Dual}, {"grid", EigenRoute::Grid}};

struct DimensionFlags {
    std::size_t p = kDefaultLagBudget;
    std::size_t d_max = 5;
    std::size_t B = 200;
    double alpha = 0.05;
    EpsilonRule epsilon_rule = EpsilonRule::Covariance;
    double epsilon = 0.0;
    bool no_bootstrap = false;
    EigenRoute route = EigenRoute::Auto;

    void add(CLI::App& cmd) {
        cmd.add_option("--p", p, "Lag budget p")->capture_default_str();
        cmd.add_option("--d-max", d_max, "Largest hypothesis index tested by the bootstrap")->capture_default_str();
        cmd.add_option("--B", B, "Bootstrap replicates")->capture_default_str();
        cmd.add_option("--alpha", alpha, "Significance level")->capture_default_str();
        cmd.add_option("--epsilon-rule", epsilon_rule, "Threshold rule for the eigenvalue cut-off")
            ->transform(CLI::CheckedTransformer(kEpsilonRules, CLI::ignore_case));
        cmd.add_option("--epsilon", epsilon, "Threshold used with --epsilon-rule fixed");
        cmd.add_flag("--no-bootstrap", no_bootstrap, "Skip the bootstrap tests");
        cmd.add_option("--route", route, "Eigenproblem route")
            ->transform(CLI::CheckedTransformer(kRoutes, CLI::ignore_case));
    }

    DimensionOptions options(const GlobalOptions& g) const {
        DimensionOptions o;
        o.p = p;
        o.d_max = d_max;
        o.bootstrap.B = B;
        o.bootstrap.alpha = alpha;
        o.bootstrap.seed = g.seed;
        o.bootstrap.threads = g.threads;
        o.epsilon_rule = epsilon_rule;
        o.epsilon = epsilon;
        o.run_bootstrap = !no_bootstrap;
        o.route = route;
        return o;
    }

    json config() const {
        return {{"p", p},
                {"d_max", d_max},
                {"B", B},
                {"alpha", alpha},
                {"epsilon_rule", std::string(epsilon_rule_name(epsilon_rule))},
                {"epsilon", epsilon},
                {"bootstrap", !no_bootstrap},
                {"route", std::string(route_name(route))}};
    }
};

std::vector<std::string> numbered(const std::string& prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t j = 1; j <= count; ++j) out.push_back(prefix + std::to_string(j));
    return out;
}

std::vector<double> column(const Matrix& m, std::size_t j) {
    const Vector c = m.col(static_cast<Eigen::Index>(j));
    return {c.data(), c.data() + c.size()};
}

// ---- identify --------------------------------------------------------------

struct IdentifyCommand {
    fs::path panel_path;
    DimensionFlags dim;
    std::optional<std::size_t> functions;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("identify", "Estimate the dimension, eigenfunctions and loadings of a panel");
        cmd->add_option("--panel", panel_path, "Panel CSV: grid row, then one curve per row")->required();
        dim.add(*cmd);
        cmd->add_option("--functions", functions, "Eigenfunctions to export (default: the estimated dimension)");
    }

    void run(const GlobalOptions& g) const {
        const CurvePanel panel = read_panel_csv(panel_path);
        const DimensionReport report = select_dimension(panel, dim.options(g));
        IdentifyOptions io;
        io.p = dim.p;
        io.route = dim.route;
        io.max_functions = functions.value_or(report.d_hat);
        const EigenDecomposition dec = identify(panel, io);
        const LoadingsSeries eta = loadings(panel, dec.eigenfunctions);

        OutputSet out(g, "identify");
        out.write("eigenvalues.csv", [&](std::ostream& s) {
            csv_row(s, "index", "theta");
            for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i)
                csv_row(s, static_cast<std::size_t>(i + 1), report.eigenvalues[i]);
        });
        if (report.bootstrap_ran)
            out.write("pvalues.csv", [&](std::ostream& s) {
                csv_row(s, "hypothesis", "pvalue");
                for (const auto& [h, p] : report.pvalues) csv_row(s, h, p);
            });
        out.write("eigenfunctions.csv", [&](std::ostream& s) { write_curves_csv(s, panel.grid(), dec.eigenfunctions); });
        out.write("loadings.csv",
                  [&](std::ostream& s) { write_matrix_csv(s, numbered("eta", dec.eigenfunctions.size()), eta.values); });
        const json doc{{"dimension", to_json(report)}, {"decomposition", to_json(dec)}};
        out.write_json("report.json", doc);
        json config = dim.config();
        config["panel"] = panel_path.string();
        config["functions"] = io.max_functions;
        out.finish(config);
        std::cout << to_json(report).dump() << '\n';
    }
};

// ---- test-dim --------------------------------------------------------------

struct TestDimCommand {
    fs::path panel_path;
    std::size_t d0 = 0;
    DimensionFlags dim;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("test-dim", "Bootstrap test of H0: theta_{d0+1} = 0");
        cmd->add_option("--panel", panel_path, "Panel CSV")->required();
        cmd->add_option("--d0", d0, "Dimension under the null")->required();
        cmd->add_option("--p", dim.p, "Lag budget p")->capture_default_str();
        cmd->add_option("--B", dim.B, "Bootstrap replicates")->capture_default_str();
        cmd->add_option("--alpha", dim.alpha, "Significance level")->capture_default_str();
        cmd->add_option("--route", dim.route, "Eigenproblem route")
            ->transform(CLI::CheckedTransformer(kRoutes, CLI::ignore_case));
    }

    void run(const GlobalOptions& g) const {
        const CurvePanel panel = read_panel_csv(panel_path);
        const BootstrapConfig cfg = dim.options(g).bootstrap;
        const BootstrapResult r = bootstrap_test(panel, d0, dim.p, cfg, dim.route);
        OutputSet out(g, "test-dim");
        out.write("bootstrap_statistics.csv", [&](std::ostream& s) {
            csv_row(s, "replicate", "theta_star");
            for (std::size_t b = 0; b < r.theta_star.size(); ++b) csv_row(s, b + 1, r.theta_star[b]);
        });
        const json doc{{"d0", d0},
                       {"hypothesis", d0 + 1},
                       {"theta_hat", r.theta_hat},
                       {"exceedances", r.exceedances},
                       {"B", r.theta_star.size()},
                       {"pvalue", r.pvalue},
                       {"rejected", r.rejected}};
        out.write_json("test_dim.json", doc);
        out.finish({{"panel", panel_path.string()},
                    {"d0", d0},
                    {"p", dim.p},
                    {"B", dim.B},
                    {"alpha", dim.alpha},
                    {"route", std::string(route_name(dim.route))}});
        std::cout << doc.dump() << '\n';
    }
};

// ---- var-fit ---------------------------------------------------------------

struct VarReport {
    AicSelection selection;
    VarFit fit;
    std::vector<PortmanteauResult> portmanteau;
};

VarReport fit_var(const Matrix& series, std::size_t max_order, std::optional<std::size_t> order,
                  const std::vector<std::size_t>& lags) {
    VarReport r;
    r.selection = aic_select(series, max_order);
    r.fit = order ? var_fit_yule_walker(series, *order) : r.selection.fit;
    r.fit.aic_table = r.selection.centered;
    const Matrix res = var_residuals(series, r.fit);
    for (std::size_t q : lags) r.portmanteau.push_back(multivariate_portmanteau(res, q, r.fit.order));
    return r;
}

void write_aic_rows(std::ostream& s, const std::string& label, const AicSelection& sel) {
    for (const auto& [tau, v] : sel.centered) csv_row(s, label, tau, v, sel.raw.at(tau));
}

void write_coefficient_rows(std::ostream& s, const std::string& label, const VarFit& fit) {
    for (std::size_t k = 0; k < fit.coefficients.size(); ++k) {
        const Matrix& a = fit.coefficients[k];
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                csv_row(s, label, k + 1, static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1), a(i, j));
    }
}

void write_portmanteau_rows(std::ostream& s, const std::string& label, const std::vector<PortmanteauResult>& rs) {
    for (const auto& r : rs) csv_row(s, label, r.lags, r.statistic, r.dof, r.pvalue);
}

json var_json(const VarReport& r) {
    json pm = json::array();
    for (const auto& p : r.portmanteau) pm.push_back(to_json(p));
    json doc = to_json(r.fit);
    doc["aic_order"] = r.selection.order;
    doc["companion_spectral_radius"] = r.fit.order ? companion_spectral_radius(r.fit) : 0.0;
    doc["portmanteau"] = pm;
    return doc;
}

struct VarFitCommand {
    fs::path series_path;
    std::size_t max_order = 5;
    std::optional<std::size_t> order;
    std::vector<std::size_t> lags{1, 3, 5};

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("var-fit", "Fit a VAR model by Yule-Walker with AIC order selection");
        cmd->add_option("--series", series_path, "CSV with a header row and one column per component")->required();
        cmd->add_option("--max-order", max_order, "Largest order in the AIC table")->capture_default_str();
        cmd->add_option("--order", order, "Fit this order instead of the AIC choice");
        cmd->add_option("--lags", lags, "Portmanteau and Ljung-Box lags")->delimiter(',')->capture_default_str();
    }

    void run(const GlobalOptions& g) const {
        const Table table = read_table_csv(series_path);
        const VarReport r = fit_var(table.values, max_order, order, lags);
        OutputSet out(g, "var-fit");
        out.write("aic.csv", [&](std::ostream& s) {
            csv_row(s, "series", "tau", "aic_centered", "aic");
            write_aic_rows(s, "input", r.selection);
        });
        out.write("var_coefficients.csv", [&](std::ostream& s) {
            csv_row(s, "series", "k", "i", "j", "a");
            write_coefficient_rows(s, "input", r.fit);
        });
        out.write("portmanteau.csv", [&](std::ostream& s) {
            csv_row(s, "series", "lags", "statistic", "dof", "pvalue");
            write_portmanteau_rows(s, "input", r.portmanteau);
        });
        out.write("ljung_box.csv", [&](std::ostream& s) {
            csv_row(s, "column", "q", "statistic", "pvalue");
            for (std::size_t j = 0; j < table.header.size(); ++j)
                for (std::size_t q : lags) {
                    const PortmanteauResult lb = ljung_box(column(table.values, j), q);
                    csv_row(s, table.header[j], q, lb.statistic, lb.pvalue);
                }
        });
        const json doc = var_json(r);
        out.write_json("var_fit.json", doc);
        out.finish({{"series", series_path.string()},
                    {"max_order", max_order},
                    {"order", order ? json(*order) : json(nullptr)},
                    {"lags", lags}});
        std::cout << json{{"order", r.fit.order}, {"aic_order", r.selection.order}}.dump() << '\n';
    }
};

// ---- simulate --------------------------------------------------------------

struct SimulateCommand {
    std::string study;
    std::optional<std::vector<std::size_t>> ds;
    std::optional<std::vector<std::size_t>> ns;
    std::optional<std::size_t> reps;
    std::size_t p = kDefaultLagBudget;
    std::size_t grid_points = 101;
    std::size_t B = 200;
    double alpha = 0.05;
    double noise_scale = 1.0;
    double ar = 0.5;
    std::size_t rate_p = 1;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("simulate", "Run a Monte Carlo study and write its figure data");
        cmd->add_option("study", study, "eigen-gap | bootstrap-power | subspace-error | rate")
            ->required()
            ->check(CLI::IsMember({"eigen-gap", "bootstrap-power", "subspace-error", "rate"}));
        cmd->add_option("--d", ds, "Factor dimensions")->delimiter(',');
        cmd->add_option("--n", ns, "Sample sizes")->delimiter(',');
        cmd->add_option("--reps", reps, "Replications per design point");
        cmd->add_option("--p", p, "Lag budget p")->capture_default_str();
        cmd->add_option("--grid-points", grid_points, "Grid points on [0, 1]")->capture_default_str();
        cmd->add_option("--B", B, "Bootstrap replicates (bootstrap-power)")->capture_default_str();
        cmd->add_option("--alpha", alpha, "Level for rejection rates (bootstrap-power)")->capture_default_str();
        cmd->add_option("--noise-scale", noise_scale, "Noise multiplier (eigen-gap)")->capture_default_str();
        cmd->add_option("--ar", ar, "AR(1) coefficient (rate)")->capture_default_str();
        cmd->add_option("--rate-p", rate_p, "Lag budget for the rate study")->capture_default_str();
    }

    StudyCommon common(const GlobalOptions& g, std::size_t default_reps) const {
        StudyCommon c;
        c.replications = reps.value_or(default_reps);
        c.p = p;
        c.grid_points = grid_points;
        c.seed = g.seed;
        c.threads = g.threads;
        return c;
    }

    void run(const GlobalOptions& g) const {
        OutputSet out(g, "simulate " + study);
        json config{{"study", study}, {"p", p}, {"grid_points", grid_points}};
        const std::vector<std::size_t> default_ns{100, 300, 600};
        if (study == "eigen-gap") {
            const StudyCommon c = common(g, 100);
            const auto rows = eigen_gap_study(ds.value_or(std::vector<std::size_t>{2, 4, 6}), ns.value_or(default_ns),
                                              c, noise_scale);
            out.write("figure1_eigenvalues.csv", [&](std::ostream& s) { write_eigen_gap_csv(s, rows); });
            config["d"] = ds.value_or(std::vector<std::size_t>{2, 4, 6});
            config["n"] = ns.value_or(default_ns);
            config["replications"] = c.replications;
            config["noise_scale"] = noise_scale;
        } else if (study == "bootstrap-power") {
            const auto d_list = ds.value_or(std::vector<std::size_t>{2});
            require(d_list.size() == 1, ErrorKind::InvalidArgument, "bootstrap-power takes a single --d");
            BootstrapPowerConfig cfg;
            cfg.d = d_list.front();
            cfg.ns = ns.value_or(default_ns);
            cfg.common = common(g, 50);
            cfg.B = B;
            const auto rows = bootstrap_power_study(cfg);
            out.write("figure2_pvalues.csv", [&](std::ostream& s) { write_bootstrap_power_csv(s, cfg.d, rows); });
            out.write("figure2_rejection_rates.csv", [&](std::ostream& s) {
                csv_row(s, "d", "n", "hypothesis", "alpha", "rejection_rate");
                for (const auto& r : rows) {
                    csv_row(s, cfg.d, r.n, cfg.d, alpha, rejection_rate(r.pvalues_dim, alpha));
                    csv_row(s, cfg.d, r.n, cfg.d + 1, alpha, rejection_rate(r.pvalues_next, alpha));
                }
            });
            config["d"] = cfg.d;
            config["n"] = cfg.ns;
            config["replications"] = cfg.common.replications;
            config["B"] = B;
            config["alpha"] = alpha;
        } else if (study == "subspace-error") {
            const StudyCommon c = common(g, 100);
            const auto d_list = ds.value_or(std::vector<std::size_t>{2, 4, 6});
            const auto n_list = ns.value_or(default_ns);
            const auto rows = subspace_error_study(d_list, n_list, c);
            out.write("figure3_dtilde.csv", [&](std::ostream& s) { write_subspace_error_csv(s, rows); });
            out.write("figure3_summary.csv", [&](std::ostream& s) {
                csv_row(s, "d", "n", "q25", "median", "q75", "share_d_hat_correct");
                for (std::size_t d : d_list)
                    for (std::size_t n : n_list) {
                        std::vector<double> v;
                        std::size_t hits = 0;
                        for (const auto& r : rows)
                            if (r.d == d && r.n == n) {
                                v.push_back(r.dtilde);
                                hits += r.d_hat == d;
                            }
                        csv_row(s, d, n, quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75),
                                static_cast<double>(hits) / static_cast<double>(v.size()));
                    }
            });
            config["d"] = d_list;
            config["n"] = n_list;
            config["replications"] = c.replications;
        } else {
            RateStudySpec spec;
            spec.ar_coefficient = ar;
            spec.p = rate_p;
            if (ns) spec.sample_sizes = *ns;
            spec.replications = reps.value_or(spec.replications);
            spec.grid_points = grid_points;
            spec.seed = g.seed;
            spec.threads = g.threads;
            const RateStudyResult res = rate_study(spec);
            const RateSummary sum = summarize(res, spec.sample_sizes);
            out.write("rate_study.csv", [&](std::ostream& s) { write_rate_csv(s, res); });
            out.write("rate_summary.csv", [&](std::ostream& s) {
                csv_row(s, "n", "mean_abs_error_theta1", "mean_theta2");
                for (std::size_t i = 0; i < sum.ns.size(); ++i)
                    csv_row(s, sum.ns[i], sum.mean_abs_err1[i], sum.mean_theta2[i]);
            });
            const std::vector<double> x(sum.ns.begin(), sum.ns.end());
            json doc{{"theta_ref", res.theta_ref}, {"theta_analytic", res.theta_analytic}};
            if (x.size() >= 2) {
                doc["slope_abs_error_theta1"] = log_log_slope(x, sum.mean_abs_err1);
                doc["slope_theta2"] = log_log_slope(x, sum.mean_theta2);
            }
            out.write_json("rate_summary.json", doc);
            config["ar"] = ar;
            config["p"] = rate_p;
            config["n"] = spec.sample_sizes;
            config["replications"] = spec.replications;
        }
        out.finish(config);
    }
};

// ---- density ---------------------------------------------------------------

double parse_clock(const std::string& text) {
    int h = 0, m = 0, s = 0;
    char tail = 0;
    const int got = std::sscanf(text.c_str(), "%d:%d:%d%c", &h, &m, &s, &tail);
    if ((got != 2 && got != 3) || h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 59)
        fail(ErrorKind::InvalidArgument, "expected a clock time HH:MM or HH:MM:SS, got '" + text + "'");
    return h * 3600.0 + m * 60.0 + s;
}

std::string multiplier_tag(double c) { return "c" + format_double(c); }

struct MultiplierResult {
    double multiplier = 1.0;
    DimensionReport report;
    EigenDecomposition dec;
    LoadingsSeries eta;
    std::vector<PortmanteauResult> ljung_box;  // by loading, then lag
    std::optional<VarReport> var;
};

struct DensityCommand {
    std::optional<fs::path> manifest;
    std::optional<std::size_t> synthetic_days;
    bool write_ticks = false;
    std::string open = "09:30";
    std::string close = "16:00";
    double interval = 5.0;
    double support_lo = -0.002;
    double support_hi = 0.002;
    std::size_t grid_points = 201;
    std::vector<double> multipliers{1.0};
    bool skip_bad_days = false;

    bool chain_identify = false;
    bool chain_var = false;
    DimensionFlags dim;
    std::size_t lb_loadings = 5;
    std::vector<std::size_t> lb_lags{1, 3, 5};
    std::size_t max_order = 5;
    std::optional<std::size_t> var_dim;
    std::vector<std::size_t> portmanteau_lags{1, 3, 5};
    std::size_t compare = 2;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("density", "Build daily return densities from tick data");
        auto* src = cmd->add_option("--manifest", manifest, "Manifest JSON listing the tick files");
        auto* syn = cmd->add_option("--synthetic-days", synthetic_days, "Use synthetic tick data for this many days");
        src->excludes(syn);
        cmd->add_flag("--write-ticks", write_ticks, "Export the synthetic ticks and their manifest under ticks/");
        cmd->add_option("--open", open, "Session open HH:MM")->capture_default_str();
        cmd->add_option("--close", close, "Session close HH:MM")->capture_default_str();
        cmd->add_option("--interval", interval, "Sampling interval in minutes")->capture_default_str();
        cmd->add_option("--support-lo", support_lo, "Lower end of the density support")->capture_default_str();
        cmd->add_option("--support-hi", support_hi, "Upper end of the density support")->capture_default_str();
        cmd->add_option("--grid-points", grid_points, "Density grid points")->capture_default_str();
        cmd->add_option("--bandwidth-multipliers", multipliers, "Multiples of the Silverman bandwidth")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_flag("--skip-bad-days", skip_bad_days, "Skip days that fail instead of aborting");
        cmd->add_flag("--identify", chain_identify, "Chain into dimension estimation and loadings diagnostics");
        cmd->add_flag("--var-fit", chain_var, "Also fit a VAR model to the loadings (implies --identify)");
        dim.add(*cmd);
        cmd->add_option("--lb-loadings", lb_loadings, "Loadings checked with Ljung-Box")->capture_default_str();
        cmd->add_option("--lb-lags", lb_lags, "Ljung-Box lags")->delimiter(',')->capture_default_str();
        cmd->add_option("--max-order", max_order, "Largest VAR order in the AIC table")->capture_default_str();
        cmd->add_option("--var-dim", var_dim, "Loadings in the VAR model (default: the estimated dimension)");
        cmd->add_option("--portmanteau-lags", portmanteau_lags, "Residual portmanteau lags")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_option("--compare", compare, "Eigenfunctions compared across bandwidth multipliers")
            ->capture_default_str();
    }

    DensityConfig density_config(double multiplier) const {
        DensityConfig cfg;
        cfg.session_open = parse_clock(open);
        cfg.session_close = parse_clock(close);
        cfg.interval_minutes = interval;
        cfg.support_lo = support_lo;
        cfg.support_hi = support_hi;
        cfg.bandwidth_multiplier = multiplier;
        cfg.grid_points = grid_points;
        validate(cfg);
        return cfg;
    }

    std::vector<TickDay> load_days(const GlobalOptions& g, OutputSet& out) const {
        if (manifest) return load_manifest_days(*manifest);
        require(synthetic_days.has_value(), ErrorKind::InvalidArgument,
                "density needs --manifest or --synthetic-days");
        SyntheticTickSpec spec;
        spec.days = *synthetic_days;
        spec.seed = g.seed;
        auto days = synthetic_tick_days(spec, density_config(1.0));
        if (write_ticks) {
            const fs::path dir = g.output_dir / "ticks";
            fs::create_directories(dir);
            std::vector<ManifestEntry> entries;
            // 2006-01-03 00:00 UTC, then one calendar day per trading day
            constexpr double kFirstDay = 1136246400.0;
            for (std::size_t i = 0; i < days.size(); ++i) {
                const double start = kFirstDay + 86400.0 * static_cast<double>(i);
                const std::string file = days[i].day_id + ".csv";
                write_tick_csv(dir / file, days[i], start);
                entries.push_back({days[i].day_id, file, start});
            }
            write_manifest(dir / "manifest.json", entries);
            out.record("ticks/manifest.json");
        }
        return days;
    }

    MultiplierResult analyse(const CurvePanel& panel, double c, const GlobalOptions& g) const {
        MultiplierResult r;
        r.multiplier = c;
        r.report = select_dimension(panel, dim.options(g));
        IdentifyOptions io;
        io.p = dim.p;
        io.route = dim.route;
        const std::size_t k_var = chain_var ? var_dim.value_or(r.report.d_hat) : 0;
        io.max_functions = std::max({lb_loadings, compare, k_var});
        r.dec = identify(panel, io);
        r.eta = loadings(panel, r.dec.eigenfunctions);
        const std::size_t n_lb = std::min(lb_loadings, r.dec.count);
        for (std::size_t j = 0; j < n_lb; ++j)
            for (std::size_t q : lb_lags) r.ljung_box.push_back(ljung_box(column(r.eta.values, j), q));
        if (chain_var && k_var > 0) {
            require(k_var <= r.dec.count, ErrorKind::InvalidArgument,
                    "VAR dimension exceeds the number of nonzero eigenvalues");
            r.var = fit_var(r.eta.values.leftCols(static_cast<Eigen::Index>(k_var)), max_order, std::nullopt,
                            portmanteau_lags);
        }
        return r;
    }

    void run(const GlobalOptions& g) const {
        require(!multipliers.empty(), ErrorKind::InvalidArgument, "need at least one bandwidth multiplier");
        OutputSet out(g, "density");
        const std::vector<TickDay> days = load_days(g, out);
        json summary = json::array();
        std::vector<MultiplierResult> results;
        for (double c : multipliers) {
            const DensityConfig cfg = density_config(c);
            const DensityPanel dp = build_density_panel(days, cfg, skip_bad_days, g.threads);
            const std::string tag = multiplier_tag(c);
            out.write("density_panel_" + tag + ".csv", [&](std::ostream& s) { write_panel_csv(s, dp.panel); });
            json meta = to_json(dp, cfg);
            meta["multiplier"] = c;
            out.write_json("density_metadata_" + tag + ".json", meta);
            json entry{{"multiplier", c}, {"days", dp.panel.size()}, {"skipped", dp.skipped.size()}};
            if (chain_identify || chain_var) {
                results.push_back(analyse(dp.panel, c, g));
                const MultiplierResult& r = results.back();
                out.write("loadings_" + tag + ".csv", [&](std::ostream& s) {
                    write_matrix_csv(s, numbered("eta", r.dec.count), r.eta.values);
                });
                entry["dimension"] = to_json(r.report);
                if (r.var) entry["var"] = var_json(*r.var);
            }
            summary.push_back(std::move(entry));
        }
        if (!results.empty()) write_tables(out, results);
        out.write_json("density_report.json", json{{"multipliers", summary}});

        json config{{"session", {open, close}},
                    {"interval_minutes", interval},
                    {"support", {support_lo, support_hi}},
                    {"grid_points", grid_points},
                    {"bandwidth_multipliers", multipliers},
                    {"skip_bad_days", skip_bad_days},
                    {"identify", chain_identify || chain_var},
                    {"var_fit", chain_var}};
        if (manifest) config["manifest"] = manifest->string();
        if (synthetic_days) config["synthetic_days"] = *synthetic_days;
        if (chain_identify || chain_var) {
            config["dimension"] = dim.config();
            config["lb_loadings"] = lb_loadings;
            config["lb_lags"] = lb_lags;
            config["compare"] = compare;
        }
        if (chain_var) {
            config["max_order"] = max_order;
            config["var_dim"] = var_dim ? json(*var_dim) : json(nullptr);
            config["portmanteau_lags"] = portmanteau_lags;
        }
        out.finish(config);
        std::cout << json{{"multipliers", summary.size()}, {"days", days.size()}}.dump() << '\n';
    }

    void write_tables(OutputSet& out, const std::vector<MultiplierResult>& results) const {
        out.write("eigenvalues.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "index", "theta");
            for (const auto& r : results)
                for (Eigen::Index i = 0; i < r.report.eigenvalues.size() && i < 10; ++i)
                    csv_row(s, r.multiplier, static_cast<std::size_t>(i + 1), r.report.eigenvalues[i]);
        });
        out.write("table2_bootstrap_pvalues.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "hypothesis", "pvalue");
            for (const auto& r : results)
                for (const auto& [h, p] : r.report.pvalues) csv_row(s, r.multiplier, h, p);
        });
        out.write("table3_ljung_box.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "loading", "q", "statistic", "pvalue");
            for (const auto& r : results)
                for (std::size_t i = 0; i < r.ljung_box.size(); ++i) {
                    const auto& lb = r.ljung_box[i];
                    csv_row(s, r.multiplier, i / lb_lags.size() + 1, lb.lags, lb.statistic, lb.pvalue);
                }
        });
        out.write("eigenfunctions.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "function", "u", "psi");
            for (const auto& r : results)
                for (std::size_t j = 0; j < r.dec.count; ++j) {
                    const Curve& f = r.dec.eigenfunctions[j];
                    for (Eigen::Index i = 0; i < f.values.size(); ++i)
                        csv_row(s, r.multiplier, j + 1, f.grid.points()[i], f.values[i]);
                }
        });
        if (results.size() > 1)
            out.write("eigenfunction_similarity.csv", [&](std::ostream& s) {
                csv_row(s, "function", "multiplier_a", "multiplier_b", "abs_cosine");
                for (std::size_t j = 0; j < compare; ++j)
                    for (std::size_t a = 0; a < results.size(); ++a)
                        for (std::size_t b = a + 1; b < results.size(); ++b) {
                            if (j >= results[a].dec.count || j >= results[b].dec.count) continue;
                            const double cosine =
                                inner_product(results[a].dec.eigenfunctions[j], results[b].dec.eigenfunctions[j]);
                            csv_row(s, j + 1, results[a].multiplier, results[b].multiplier, std::abs(cosine));
                        }
            });
        if (!chain_var) return;
        out.write("table4_aic.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "tau", "aic_centered", "aic");
            for (const auto& r : results)
                if (r.var) write_aic_rows(s, format_double(r.multiplier), r.var->selection);
        });
        out.write("table5_var_coefficients.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "k", "i", "j", "a");
            for (const auto& r : results)
                if (r.var) write_coefficient_rows(s, format_double(r.multiplier), r.var->fit);
        });
        out.write("portmanteau.csv", [&](std::ostream& s) {
            csv_row(s, "multiplier", "lags", "statistic", "dof", "pvalue");
            for (const auto& r : results)
                if (r.var) write_portmanteau_rows(s, format_double(r.multiplier), r.var->portmanteau);
        });
    }
};

int exit_code(ErrorKind kind) {
    return kind == ErrorKind::NumericalFailure || kind == ErrorKind::Conditioning ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dimension estimation for curve time series"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions global;
    app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", global.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--output-dir", global.output_dir, "Directory for outputs")->capture_default_str();

    IdentifyCommand identify_cmd;
    TestDimCommand test_dim_cmd;
    VarFitCommand var_fit_cmd;
    SimulateCommand simulate_cmd;
    DensityCommand density_cmd;
    identify_cmd.add(app);
    test_dim_cmd.add(app);
    var_fit_cmd.add(app);
    simulate_cmd.add(app);
    density_cmd.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << failing->help();
        return 1;
    }

    const std::map<std::string, std::function<void()>> commands{
        {"identify", [&] { identify_cmd.run(global); }},
        {"test-dim", [&] { test_dim_cmd.run(global); }},
        {"var-fit", [&] { var_fit_cmd.run(global); }},
        {"simulate", [&] { simulate_cmd.run(global); }},
        {"density", [&] { density_cmd.run(global); }},
    };
    try {
        commands.at(app.get_subcommands().front()->get_name())();
        return 0;
    } catch (const Error& e) {
        std::cerr << error_json(e).dump() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    }
}
