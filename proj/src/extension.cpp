#include "mmpt/extension.hpp"

#include "mmpt/infimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mmpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string point_msg(const char* what, PointId x) {
    std::ostringstream os;
    os << what << " at point " << x;
    return os.str();
}

} // namespace

void ExtensionProblem::validate(const MetricMeasureSpace& space) const {
    const std::size_t n = space.size();
    if (f.size() != n) throw Error(ErrorKind::Validation, "f has the wrong size");
    if (g_star.size() != n) throw Error(ErrorKind::Validation, "g_star has the wrong size");
    if (K.empty()) throw Error(ErrorKind::Validation, "K must be nonempty");
    if (x0 >= n) throw Error(ErrorKind::Validation, "x0 is outside the space");
    if (!(R > 0.0)) throw Error(ErrorKind::Validation, "R must be positive");
    if (!(eps > 0.0)) throw Error(ErrorKind::Validation, "eps must be positive");
    if (!(p >= 1.0)) throw Error(ErrorKind::Validation, "p must be at least 1");
    for (PointId x : K) {
        if (x >= n) throw Error(ErrorKind::Validation, "K references a point outside the space");
        if (!(space.dist(x0, x) < R)) throw Error(ErrorKind::Validation, point_msg("K leaves B(x0, R)", x));
    }
    for (PointId x = 0; x < n; ++x) {
        if (!std::isfinite(f[x])) throw Error(ErrorKind::Validation, point_msg("f is not finite", x));
        if (!(g_star[x] >= 0.0) || !std::isfinite(g_star[x])) {
            throw Error(ErrorKind::Validation, point_msg("g_star must be finite and nonnegative", x));
        }
        if (space.dist(x0, x) >= R) {
            if (f[x] != 0.0) throw Error(ErrorKind::Validation, point_msg("f is nonzero outside B(x0, R)", x));
            if (g_star[x] != 0.0) {
                throw Error(ErrorKind::Validation, point_msg("g_star is nonzero outside B(x0, R)", x));
            }
        }
    }
}

ExtensionProblem parse_extension_problem(const Json& doc, const MetricMeasureSpace& space) {
    if (!doc.is_object()) throw Error(ErrorKind::Schema, "extension problem must be a JSON object");
    for (const char* key : {"f", "g_star", "K", "x0", "R"}) {
        if (!doc.contains(key)) throw Error(ErrorKind::Schema, std::string("extension problem needs '") + key + "'");
    }
    ExtensionProblem pr;
    const std::size_t n = space.size();
    pr.f = parse_field(doc.at("f"), n, "f");
    pr.g_star = parse_field(doc.at("g_star"), n, "g_star");
    pr.K = parse_point_set(doc.at("K"), n, "K");
    if (!doc.at("x0").is_number_unsigned()) throw Error(ErrorKind::Schema, "x0 must be a point id");
    pr.x0 = doc.at("x0").get<PointId>();
    if (!doc.at("R").is_number()) throw Error(ErrorKind::Schema, "R must be a number");
    pr.R = doc.at("R").get<double>();
    if (doc.contains("eps")) pr.eps = doc.at("eps").get<double>();
    if (doc.contains("p")) pr.p = doc.at("p").get<double>();
    pr.validate(space);
    return pr;
}

bool ExtensionResult::pass() const {
    return std::all_of(diagnostics.begin(), diagnostics.end(), [](const PropertyCheck& c) { return c.pass; });
}

ExtensionResult whitney_extend(const ExtensionProblem& problem, const MetricMeasureSpace& space,
                               const ExtensionOptions& options) {
    problem.validate(space);
    const std::size_t n = space.size();
    ExtensionResult res;

    // Rescale so that d(K, X \ B(x0, R)) = 1.
    std::vector<PointId> outside_ids;
    for (PointId x = 0; x < n; ++x)
        if (space.dist(problem.x0, x) >= problem.R) outside_ids.push_back(x);
    const PointSet outside(outside_ids);
    if (!outside.empty()) res.scale = 1.0 / dist_between_sets(space, problem.K, outside);
    const MetricMeasureSpace unit = space.scaled(res.scale);
    const double r_unit = problem.R * res.scale;

    if (outside.empty()) {
        res.C = problem.K;
        res.V = PointSet::all(n);
    } else {
        std::vector<PointId> c(problem.K.members()), v;
        for (PointId x = 0; x < n; ++x) {
            const double d = unit.dist(problem.x0, x);
            if (d <= 2.0 * r_unit) v.push_back(x);
            if (d >= r_unit && d <= 2.0 * r_unit) c.push_back(x);
        }
        res.C = PointSet(std::move(c));
        res.V = PointSet(std::move(v));
    }

    for (PointId x : problem.K) res.M = std::max(res.M, std::abs(problem.f[x]));

    // Lower semicontinuous seed capped by S = sup_K g_star on K; the good
    // sequence spends eps 2^{-5} of energy.
    double s = 0.0;
    for (PointId x : problem.K) s = std::max(s, problem.g_star[x]);
    const auto in_k = problem.K.indicator(n);
    ScalarField g_eps(problem.g_star);
    for (PointId x = 0; x < n; ++x)
        if (in_k[x]) g_eps[x] = std::min(g_eps[x], s);
    // g_star is given in the original metric; gradients scale inversely with distance.
    for (double& v : g_eps) v /= res.scale;
    const double p = problem.p;
    const double budget = problem.eps * std::ldexp(1.0, -5) * std::pow(res.scale, -p);
    const double norm = lp_norm(unit, g_eps, p);
    const double norm_eps = std::min(0.5, budget / (p * std::pow(norm + 1.0, p - 1.0)));
    GoodSequence seq(unit, g_eps, norm_eps, p, problem.x0, problem.K);

    res.index_depth = required_index_depth(unit, problem.K, PointSet::all(n));
    auto sel = select_indices(unit, problem.f, seq, res.C, res.V, res.index_depth, options.index_cap, options.tol);
    res.index_slack = sel.worst_slack;
    res.aux = build_aux_triple(unit, problem.f, seq, problem.K, sel.indices);
    res.f_tilde = admissible_extension_value(unit, res.C, res.V, problem.K, problem.f, res.aux, res.M);

    // Property (1): sup |f~| <= M.
    {
        double worst = 0.0;
        for (double v : res.f_tilde) worst = std::max(worst, std::abs(v));
        res.diagnostics.push_back({"extension.bounded", worst <= res.M, res.M - worst, "sup |f~| vs M"});
    }
    // Property (2): f~ = f on K and f~ = 0 off B(x0, R).
    {
        double dev = 0.0;
        for (PointId x : problem.K) dev = std::max(dev, std::abs(res.f_tilde[x] - problem.f[x]));
        res.diagnostics.push_back({"extension.agrees_on_k", dev == 0.0, -dev, "max |f~ - f| on K"});
        double off = 0.0;
        for (PointId x : outside) off = std::max(off, std::abs(res.f_tilde[x]));
        res.diagnostics.push_back({"extension.vanishes_outside", off == 0.0, -off, "max |f~| off B(x0, R)"});
    }
    // Property (4): energy off K at the verification scale.
    {
        res.delta_cloud = options.delta_cloud ? *options.delta_cloud : connectivity_radius(space);
        const auto grad = local_lip_gradient(space, res.f_tilde, res.delta_cloud);
        std::vector<char> off_k(n);
        for (PointId x = 0; x < n; ++x) off_k[x] = in_k[x] ? 0 : 1;
        res.energy = lp_energy(space, grad, p, &off_k);
        res.energy_bound = lp_energy(space, problem.g_star, p, &off_k) + problem.eps;
        std::ostringstream os;
        os.precision(10);
        os << "energy " << res.energy << " vs bound " << res.energy_bound << " at delta " << res.delta_cloud;
        res.diagnostics.push_back(
            {"extension.energy", res.energy <= res.energy_bound, res.energy_bound - res.energy, os.str()});
    }
    for (auto& c : validate_aux_triple(unit, res.aux, seq, problem.K)) res.diagnostics.push_back(std::move(c));
    res.diagnostics.push_back(continuity_surrogate_check(res, problem, space, options.tol));
    return res;
}

PropertyCheck continuity_surrogate_check(const ExtensionResult& result, const ExtensionProblem& problem,
                                         const MetricMeasureSpace& space, double tol) {
    PropertyCheck out{"continuity.one_jump", true, kInf, ""};
    const auto& aux = result.aux;
    for (PointId x : problem.K) {
        for (PointId y : result.V) {
            const double d = space.dist(x, y) * result.scale;
            const double bound = problem.f[x] + aux.penalty(d) + aux.G[x] * d;
            const double slack = bound - result.f_tilde[y];
            if (slack < out.slack) {
                out.slack = slack;
                std::ostringstream os;
                os << "tightest at x = " << x << ", y = " << y;
                out.detail = os.str();
            }
            if (slack < -tol) out.pass = false;
        }
    }
    if (out.slack == kInf) out.slack = 0.0;
    return out;
}

Json to_json(const ExtensionResult& r) {
    Json diag = Json::object();
    for (const auto& c : r.diagnostics) diag[c.name] = {{"pass", c.pass}, {"slack", c.slack}, {"detail", c.detail}};
    return Json{{"f_tilde", r.f_tilde},
                {"aux", {{"indices", r.aux.indices}, {"M", r.aux.M}, {"D", r.aux.D}, {"G", r.aux.G}}},
                {"scale", r.scale},
                {"C", r.C.members()},
                {"V", r.V.members()},
                {"delta_cloud", r.delta_cloud},
                {"energy", r.energy},
                {"energy_bound", r.energy_bound},
                {"index_depth", r.index_depth},
                {"index_slack", r.index_slack},
                {"diagnostics", diag},
                {"pass", r.pass()}};
}

} // namespace mmpt
