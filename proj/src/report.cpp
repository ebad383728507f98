#include "curvedim/report.hpp"

#include <string>

namespace curvedim {

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

nlohmann::json eigenvalues_json(const Vector& eigenvalues) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) out.push_back(eigenvalues[i]);
    return out;
}

nlohmann::json to_json(const EigenDecomposition& dec) {
    return {{"eigenvalues", eigenvalues_json(dec.eigenvalues)},
            {"count", dec.count},
            {"p", dec.p},
            {"route", std::string(route_name(dec.route))}};
}

nlohmann::json to_json(const DimensionReport& report) {
    nlohmann::json pv = nlohmann::json::object();
    for (const auto& [h, p] : report.pvalues) pv["theta_" + std::to_string(h)] = p;
    return {{"d_hat", report.d_hat},
            {"threshold_d", report.threshold_d},
            {"epsilon", report.epsilon_used},
            {"pvalues", pv},
            {"bootstrap_ran", report.bootstrap_ran},
            {"n", report.n},
            {"p", report.p},
            {"eigenvalues", eigenvalues_json(report.eigenvalues)}};
}

nlohmann::json to_json(const PortmanteauResult& result) {
    return {{"statistic", result.statistic}, {"lags", result.lags}, {"dof", result.dof}, {"pvalue", result.pvalue}};
}

nlohmann::json to_json(const VarFit& fit) {
    nlohmann::json coefs = nlohmann::json::object();
    for (std::size_t k = 0; k < fit.coefficients.size(); ++k)
        coefs["A" + std::to_string(k + 1)] = matrix_json(fit.coefficients[k]);
    nlohmann::json aic = nlohmann::json::object();
    for (const auto& [tau, v] : fit.aic_table) aic[std::to_string(tau)] = v;
    return {{"order", fit.order},
            {"coefficients", coefs},
            {"innovation_covariance", matrix_json(fit.innovation_covariance)},
            {"aic_centered", aic}};
}

nlohmann::json to_json(const DensityPanel& panel, const DensityConfig& cfg) {
    nlohmann::json days = nlohmann::json::array();
    for (const auto& d : panel.days)
        days.push_back({{"id", d.day_id},
                        {"ticks", d.tick_count},
                        {"returns", d.return_count},
                        {"sigma", d.sigma},
                        {"bandwidth", d.bandwidth}});
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : panel.skipped)
        skipped.push_back({{"id", s.day_id}, {"kind", std::string(error_kind_name(s.kind))}, {"message", s.message}});
    return {{"days", days},
            {"skipped", skipped},
            {"config",
             {{"session_open", cfg.session_open},
              {"session_close", cfg.session_close},
              {"interval_minutes", cfg.interval_minutes},
              {"support", {cfg.support_lo, cfg.support_hi}},
              {"bandwidth_multiplier", cfg.bandwidth_multiplier},
              {"grid_points", cfg.grid_points}}}};
}

nlohmann::json error_json(const Error& error) {
    return {{"error", {{"kind", std::string(error.kind_name())}, {"message", error.what()}}}};
}

}  // namespace curvedim
