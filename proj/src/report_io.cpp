#include "bloch/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace bloch {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file '" + path + "'");
    return out;
}

double finite_or(double v, double fallback) {
    return std::isfinite(v) ? v : fallback;
}

}  // namespace

void write_spectrum_csv(const std::string& path, const SpectrumSampling& s,
                        const std::vector<Branch>& branches) {
    auto out = open_out(path);
    out << "xi,branch_id,re_lambda,im_lambda,crossing_flag\n";
    for (int m = 0; m < s.grid.count(); ++m)
        for (const auto& b : branches)
            out << format_double(s.grid.value(m)) << ',' << b.id << ','
                << format_double(b.lambda[m].real()) << ','
                << format_double(b.lambda[m].imag()) << ','
                << (b.crossing_suspect[m] ? 1 : 0) << '\n';
}

void write_masses_csv(const std::string& path, const SpectrumSampling& s,
                      const std::vector<Branch>& branches,
                      const Eigen::MatrixXd& masses) {
    auto out = open_out(path);
    out << "xi,branch_id,re_lambda,im_lambda,mass\n";
    for (int m = 0; m < s.grid.count(); ++m)
        for (const auto& b : branches)
            out << format_double(s.grid.value(m)) << ',' << b.id << ','
                << format_double(b.lambda[m].real()) << ','
                << format_double(b.lambda[m].imag()) << ','
                << format_double(masses(m, b.eigen_index[m])) << '\n';
}

void write_partition_csv(const std::string& path, const SpectrumSampling& s,
                         const EigencountPartition& part) {
    auto out = open_out(path);
    out << "xi,count,marginal\n";
    for (const auto& iv : part.intervals)
        for (int m = iv.first_xi; m <= iv.last_xi; ++m)
            out << format_double(s.grid.value(m)) << ',' << iv.count << ','
                << (iv.marginal ? 1 : 0) << '\n';
}

void write_bloch_norms_csv(const std::string& path, const BlochField& field) {
    auto out = open_out(path);
    out << "xi,slice_norm\n";
    for (int r = 0; r < field.xi_count(); ++r)
        out << format_double(field.xi(r)) << ',' << format_double(field.slice_norm(r))
            << '\n';
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<double>& rho) {
    auto out = open_out(path);
    out << "t,l2,h1,h2,rho\n";
    for (size_t k = 0; k < traj.times.size(); ++k)
        out << format_double(traj.times[k]) << ',' << format_double(traj.l2[k]) << ','
            << format_double(traj.h1[k]) << ',' << format_double(traj.h2[k]) << ','
            << format_double(k < rho.size() ? rho[k] : 0.0) << '\n';
}

void write_growth_csv(const std::string& path, const Trajectory& full,
                      const Trajectory& projected) {
    auto out = open_out(path);
    out << "t,norm,projected_norm\n";
    const size_t n = std::min(full.times.size(), projected.times.size());
    for (size_t k = 0; k < n; ++k)
        out << format_double(full.times[k]) << ',' << format_double(full.l2[k]) << ','
            << format_double(projected.l2[k]) << '\n';
}

json to_json(const ProjectionReport& rep) {
    json j;
    j["any_mass"] = rep.any_mass;
    j["activated"] = rep.activated;
    j["lambda_m"] = finite_or(rep.lambda_m, -1e300);
    j["lambda0"] = rep.lambda0;
    j["growth_floor"] = rep.growth_floor;
    j["tau_act"] = rep.tau_act;
    if (rep.any_mass) {
        j["xi_index"] = rep.xi_index;
        j["eigen_index"] = rep.eigen_index;
        j["branch_id"] = rep.branch_id;
        j["interval"] = {{"first_xi", rep.interval_first},
                         {"last_xi", rep.interval_last},
                         {"xi_lo", rep.interval_xi_lo},
                         {"xi_hi", rep.interval_xi_hi}};
        j["activation_mass_inf"] = rep.activation_mass_inf;
        j["projector_norm_sup"] = rep.projector_norm_sup;
        if (rep.contour.shape == Contour::Shape::circle)
            j["contour"] = {{"shape", "circle"},
                            {"center_re", rep.contour.center.real()},
                            {"center_im", rep.contour.center.imag()},
                            {"radius", rep.contour.radius},
                            {"nodes", rep.contour.nodes}};
    }
    j["warnings"] = rep.warnings;
    return j;
}

json to_json(const EigencountPartition& part) {
    json intervals = json::array();
    for (const auto& iv : part.intervals)
        intervals.push_back({{"xi_lo", iv.xi_lo},
                             {"xi_hi", iv.xi_hi},
                             {"count", iv.count},
                             {"marginal", iv.marginal}});
    json j;
    j["threshold"] = part.threshold;
    j["intervals"] = intervals;
    j["warnings"] = part.warnings;
    if (part.enclosed_any)
        j["contour"] = {{"shape", "rectangle"},
                        {"re_lo", part.rect_re_lo},
                        {"re_hi", part.rect_re_hi},
                        {"im_lo", part.rect_im_lo},
                        {"im_hi", part.rect_im_hi}};
    return j;
}

json to_json(const GrowthDiagnostics& diag) {
    return json{{"omega", diag.omega},
                {"lambda_m", diag.lambda_m},
                {"window", {diag.window_a, diag.window_b}},
                {"rate_projected", diag.rate_projected},
                {"rate_full", diag.rate_full},
                {"c_lower", diag.c_lower},
                {"c_upper", diag.c_upper},
                {"lower_ok", diag.lower_ok},
                {"upper_ok", diag.upper_ok}};
}

json to_json(const PolynomialBound& bound) {
    json j{{"a_coeff", bound.a_coeff},
           {"z_crit", bound.z_crit},
           {"value_at_crit", bound.value_at_crit},
           {"has_root", bound.has_root}};
    if (bound.has_root) j["root"] = bound.root;
    return j;
}

json to_json(const DissipativeBound& bound) {
    json j{{"comparison_level", bound.comparison_level},
           {"h_at_level", bound.h_at_level},
           {"root_certified", bound.root_certified},
           {"has_root", bound.has_root}};
    if (bound.has_root) j["root"] = bound.root;
    return j;
}

json to_json(const InstabilityVerdict& verdict) {
    json runs = json::array();
    for (const auto& r : verdict.runs)
        runs.push_back({{"delta", r.delta},
                        {"T", r.time_t},
                        {"norm_at_T", r.norm_at_t},
                        {"rho_max", r.rho_max},
                        {"z_at_T", r.z_at_t},
                        {"overflow", r.traj.overflow},
                        {"pass", r.pass}});
    json j;
    j["status"] = verdict.status == RunStatus::ok ? "completed" : "hypotheses_unmet";
    j["eta"] = verdict.eta;
    j["p"] = verdict.p;
    j["lambda_m"] = verdict.lambda_m;
    j["lambda0"] = verdict.lambda0;
    if (verdict.status == RunStatus::ok) {
        j["u0_norm"] = verdict.u0_norm;
        j["c_linear_min"] = verdict.c_linear_min;
        j["c_linear_max"] = verdict.c_linear_max;
        j["c_lower"] = verdict.c_lower;
        j["c_upper"] = verdict.c_upper;
        j["epsilon"] = verdict.epsilon;
        j["runs"] = runs;
        j["unstable"] = verdict.unstable;
        j["rho_bound"] = to_json(verdict.bound);
    }
    return j;
}

json to_json(const DampingFit& fit) {
    return json{{"ok", fit.ok},
                {"theta", fit.theta},
                {"c", fit.c},
                {"residual_max", fit.residual_max}};
}

void write_summary(const std::string& path, const json& config, const json& results) {
    auto out = open_out(path);
    json j;
    j["config"] = config;
    j["results"] = results;
    out << j.dump(2) << '\n';
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series, bool with_reference,
                    double ref_slope, double ref_intercept) {
    const int w = 720, h = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
        }
    if (!std::isfinite(x_lo) || x_hi == x_lo) {
        x_lo = 0;
        x_hi = 1;
    }
    if (!std::isfinite(y_lo) || y_hi == y_lo) {
        y_lo = 0;
        y_hi = 1;
    }
    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (w - ml - mr); };
    auto py = [&](double y) {
        return h - mb - (y - y_lo) / (y_hi - y_lo) * (h - mt - mb);
    };
    const char* colors[] = {"#1f6fb2", "#c23b22", "#3a8f3a", "#8656a2", "#b28b1f"};

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
        << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
        << "\" height=\"" << h - mt - mb
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x_lo + k * (x_hi - x_lo) / 4;
        const double yv = y_lo + k * (y_hi - y_lo) / 4;
        out << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(xv)
            << "</text>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(yv)
            << "</text>\n";
    }
    if (with_reference) {
        out << "<line x1=\"" << px(x_lo) << "\" y1=\"" << py(ref_intercept + ref_slope * x_lo)
            << "\" x2=\"" << px(x_hi) << "\" y2=\"" << py(ref_intercept + ref_slope * x_hi)
            << "\" stroke=\"#999\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
    }
    int ci = 0;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << colors[ci % 5]
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i])) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << w - mr - 8 << "\" y=\"" << mt + 18 + 16 * ci
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[ci % 5]
            << "\">" << s.label << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

}  // namespace bloch
