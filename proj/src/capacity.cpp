#include "mmpt/capacity.hpp"

#include "barrier.hpp"
#include "mmpt/fields.hpp"
#include "mmpt/infimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace mmpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_mass(const MetricMeasureSpace& space) {
    double m = 0.0;
    for (double v : space.masses()) m = std::max(m, v);
    return m;
}

double power(double v, double p) {
    return p == 2.0 ? v * v : std::pow(v, p);
}

// A path constraint int_P rho >= 1 stored as left-endpoint coefficients.
struct PathRow {
    std::vector<PointId> nodes;
    std::vector<std::pair<PointId, double>> coeffs;
    double lambda = 0.0;
    int idle = 0;
};

PathRow make_row(const MetricMeasureSpace& space, std::vector<PointId> nodes) {
    PathRow row;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) row.coeffs.emplace_back(nodes[k], space.dist(nodes[k], nodes[k + 1]));
    row.nodes = std::move(nodes);
    return row;
}

double row_value(const PathRow& row, const ScalarField& rho) {
    double v = 0.0;
    for (const auto& [x, a] : row.coeffs) v += a * rho[x];
    return v;
}

// Dual coordinate ascent for  min sum mu rho^p  s.t.  a_P . rho >= 1, p > 1.
// With s = sum_P lambda_P a_P the primal is rho_x = (s_x / (p mu_x))^{1/(p-1)}.
class DualMaster {
public:
    DualMaster(const std::vector<double>& mu, double p) : mu_(mu), p_(p), s_(mu.size(), 0.0), rho_(mu.size(), 0.0) {}

    const ScalarField& rho() const { return rho_; }

    double rho_of(double s, PointId x) const {
        if (s <= 0.0) return 0.0;
        if (p_ == 2.0) return s / (2.0 * mu_[x]);
        return std::pow(s / (p_ * mu_[x]), 1.0 / (p_ - 1.0));
    }

    void remove(PathRow& row) {
        if (row.lambda == 0.0) return;
        for (const auto& [x, a] : row.coeffs) {
            s_[x] = std::max(0.0, s_[x] - row.lambda * a);
            rho_[x] = rho_of(s_[x], x);
        }
        row.lambda = 0.0;
    }

    // Exact maximisation of the dual over lambda_P.
    void update(PathRow& row) {
        const double old = row.lambda;
        for (const auto& [x, a] : row.coeffs) s_[x] = std::max(0.0, s_[x] - old * a);
        auto phi = [&](double lam) {
            double v = 0.0;
            for (const auto& [x, a] : row.coeffs) v += a * rho_of(s_[x] + lam * a, x);
            return v;
        };
        double lam = 0.0;
        const double phi0 = phi(0.0);
        if (phi0 < 1.0) {
            if (p_ == 2.0) {
                double b = 0.0;
                for (const auto& [x, a] : row.coeffs) b += a * a / (2.0 * mu_[x]);
                lam = (1.0 - phi0) / b;
            } else {
                lam = solve_root(row, phi, old);
            }
        }
        row.lambda = lam;
        for (const auto& [x, a] : row.coeffs) {
            s_[x] += lam * a;
            rho_[x] = rho_of(s_[x], x);
        }
    }

    double energy() const {
        double e = 0.0;
        for (PointId x = 0; x < mu_.size(); ++x)
            if (rho_[x] > 0.0) e += mu_[x] * power(rho_[x], p_);
        return e;
    }

    // q(lambda) = sum lambda - (1 - 1/p) sum_x s_x rho_x, a lower bound on the pool optimum.
    double dual(const std::vector<PathRow>& pool) const {
        double lam = 0.0;
        for (const auto& r : pool) lam += r.lambda;
        double sr = 0.0;
        for (PointId x = 0; x < mu_.size(); ++x) sr += s_[x] * rho_[x];
        return lam - (1.0 - 1.0 / p_) * sr;
    }

private:
    template <class Phi>
    double solve_root(const PathRow& row, Phi&& phi, double guess) const {
        double lo = 0.0;
        double hi = guess > 0.0 ? guess : 1.0;
        while (phi(hi) < 1.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) break;
        }
        double lam = std::clamp(guess, lo, hi);
        for (int it = 0; it < 200; ++it) {
            const double v = phi(lam) - 1.0;
            if (v == 0.0) return lam;
            if (v < 0.0) {
                lo = lam;
            } else {
                hi = lam;
            }
            double deriv = 0.0;
            for (const auto& [x, a] : row.coeffs) {
                const double s = s_[x] + lam * a;
                if (s <= 0.0) continue;
                deriv += a * a * rho_of(s, x) / ((p_ - 1.0) * s);
            }
            double next = deriv > 0.0 ? lam - v / deriv : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - lam) <= 1e-16 * std::max(1.0, lam) || hi - lo <= 1e-16 * hi) return next;
            lam = next;
        }
        return lam;
    }

    const std::vector<double>& mu_;
    double p_;
    ScalarField s_;
    ScalarField rho_;
};

// Barrier solve of  min sum mu rho^p  s.t.  rows, rho >= 0 over the nodes the rows touch.
struct PoolSolution {
    ScalarField rho;
    double value = 0.0;
    double lower = 0.0;
    bool converged = false;
    int steps = 0;
};

PoolSolution solve_pool_barrier(const std::vector<PathRow>& rows, const std::vector<double>& mu, double p,
                                double rel_gap, int max_newton) {
    const std::size_t n = mu.size();
    std::vector<int> var(n, -1);
    std::vector<PointId> ids;
    for (const auto& r : rows)
        for (const auto& [x, a] : r.coeffs)
            if (var[x] < 0) {
                var[x] = static_cast<int>(ids.size());
                ids.push_back(x);
            }
    detail::BarrierProblem pr;
    pr.num_vars = static_cast<int>(ids.size());
    pr.p = p;
    for (std::size_t j = 0; j < ids.size(); ++j) {
        pr.power.push_back({static_cast<int>(j), mu[ids[j]]});
        pr.constraints.push_back({{{static_cast<int>(j), 1.0}}, 0.0});
    }
    double min_len = kInf;
    for (const auto& r : rows) {
        detail::BarrierProblem::Constraint c;
        double len = 0.0;
        for (const auto& [x, a] : r.coeffs) {
            c.coeffs.emplace_back(var[x], a);
            len += a;
        }
        c.rhs = 1.0;
        min_len = std::min(min_len, len);
        pr.constraints.push_back(std::move(c));
    }
    PoolSolution out;
    out.rho.assign(n, 0.0);
    if (rows.empty()) {
        out.converged = true;
        return out;
    }
    std::vector<double> z0(ids.size(), 2.0 / min_len);
    detail::BarrierOptions opt;
    opt.rel_gap = rel_gap;
    opt.max_newton = max_newton;
    auto res = detail::solve_barrier(pr, z0, opt);
    for (std::size_t j = 0; j < ids.size(); ++j) out.rho[ids[j]] = res.z[j];
    out.value = res.objective;
    out.lower = res.objective - res.gap_bound;
    out.converged = res.converged;
    out.steps = res.newton_steps;
    return out;
}

struct Separation {
    double min_cost = kInf;
    std::vector<std::vector<PointId>> violated;
};

Separation separate(const Neighbors& nbrs, const CondenserSpec& spec, const ScalarField& rho,
                    const std::vector<char>& f_mask, double threshold) {
    std::vector<Seed> seeds;
    for (PointId e : spec.E) seeds.push_back({e, 0.0, e});
    DijkstraOptions opts;
    opts.terminal = &f_mask;
    auto sp = shortest_paths(nbrs, rho, seeds, opts);
    Separation out;
    for (PointId f : spec.F) {
        if (!sp.reached(f)) continue;
        out.min_cost = std::min(out.min_cost, sp.label[f]);
        if (sp.label[f] < threshold) out.violated.push_back(sp.walk_to(f));
    }
    return out;
}

} // namespace

void CondenserSpec::validate(const MetricMeasureSpace& space) const {
    if (E.empty() || F.empty()) throw Error(ErrorKind::Validation, "condenser sets E and F must be nonempty");
    for (PointId x : E)
        if (x >= space.size()) throw Error(ErrorKind::Validation, "E references a point outside the space");
    for (PointId x : F)
        if (x >= space.size()) throw Error(ErrorKind::Validation, "F references a point outside the space");
    auto common = set_intersection(E, F);
    if (!common.empty()) {
        throw Error(ErrorKind::Validation,
                    "E and F intersect (point " + std::to_string(common.members().front()) + ")");
    }
    if (!(p >= 1.0)) throw Error(ErrorKind::Validation, "p must be at least 1");
    if (!(delta > 0.0)) throw Error(ErrorKind::Validation, "delta must be positive");
}

Json to_json(const CapacityReport& r) {
    Json j;
    j["value"] = r.value;
    j["method"] = r.method;
    j["minimizer"] = r.minimizer;
    Json paths = Json::array();
    for (const auto& p : r.active_paths) paths.push_back(p.nodes());
    j["certificates"] = {{"active_paths", paths}};
    Json trace = Json::array();
    for (const auto& t : r.trace) {
        trace.push_back({{"iter", t.iter}, {"value", t.value}, {"residual", t.residual}, {"n_active", t.n_active}});
    }
    j["trace"] = trace;
    Json primal = Json::array();
    for (const auto& t : r.primal_trace) {
        primal.push_back({{"i", t.i}, {"mesh", t.mesh}, {"a_i", t.a_i}, {"energy_i", t.energy}, {"skipped", t.skipped}});
    }
    j["primal_trace"] = primal;
    j["iterations"] = r.iterations;
    j["residual"] = r.residual;
    j["lower"] = r.lower;
    j["upper"] = r.upper;
    j["converged"] = r.converged;
    j["notes"] = r.notes;
    return j;
}

std::string trace_csv(const CapacityReport& r) {
    std::ostringstream os;
    os.precision(17);
    if (!r.primal_trace.empty()) {
        os << "i,a_i,energy_i\n";
        for (const auto& t : r.primal_trace) os << t.i << ',' << t.a_i << ',' << t.energy << '\n';
    } else {
        os << "iter,value,residual,n_active\n";
        for (const auto& t : r.trace) os << t.iter << ',' << t.value << ',' << t.residual << ',' << t.n_active << '\n';
    }
    return os.str();
}

CapacityReport modulus_cg(const CondenserSpec& spec, const MetricMeasureSpace& space, const SolverOptions& options) {
    spec.validate(space);
    if (!(options.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
    const std::size_t n = space.size();
    const double p = spec.p;
    const double scale = max_mass(space);
    std::vector<double> mu(n);
    for (PointId x = 0; x < n; ++x) mu[x] = space.mass(x) / scale;

    CapacityReport rep;
    rep.method = "modulus-cg";
    rep.minimizer.assign(n, 0.0);
    const Neighbors nbrs = neighbor_lists(space, spec.delta);
    const auto f_mask = spec.F.indicator(n);
    const double tol = options.tol;
    const double master_tol = std::min(0.05 * tol, 1e-9);

    std::vector<PathRow> pool;
    std::set<std::vector<PointId>> known;
    DualMaster master(mu, p);
    ScalarField rho(n, 0.0);
    double pool_lower = 0.0;
    double pool_value = 0.0;
    if (p == 1.0) rep.notes.push_back("p = 1: master problem solved as a linear program by interior point");

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        rep.iterations = iter;
        auto sep = separate(nbrs, spec, rho, f_mask, 1.0 - tol);
        if (sep.min_cost == kInf) {
            rep.notes.push_back("no E -> F path with mesh <= delta; the path family is empty");
            rep.value = rep.lower = rep.upper = 0.0;
            rep.converged = true;
            rep.trace.push_back({iter, 0.0, 0.0, 0});
            return rep;
        }
        const double energy = (p == 1.0) ? pool_value : master.energy();
        const double upper = sep.min_cost > 0.0 ? energy / std::pow(sep.min_cost, p) : kInf;
        const double lower = (p == 1.0) ? pool_lower : master.dual(pool);
        std::size_t active = 0;
        for (const auto& r : pool) active += r.lambda > 0.0 ? 1 : 0;
        // Every dual value is a certified lower bound; the trace keeps the best so far.
        rep.lower = std::max(rep.lower, std::max(0.0, lower) * scale);
        rep.trace.push_back({iter, rep.lower, std::max(0.0, 1.0 - sep.min_cost), p == 1.0 ? pool.size() : active});
        rep.upper = upper * scale;
        rep.value = rep.upper;
        rep.residual = upper > 0.0 && std::isfinite(upper) ? (upper - lower) / upper : 1.0;
        if (sep.min_cost >= 1.0 - tol && std::isfinite(upper) && upper - lower <= tol * upper) {
            rep.converged = true;
            break;
        }

        for (auto& walk : sep.violated) {
            if (known.insert(walk).second) pool.push_back(make_row(space, std::move(walk)));
        }

        if (p == 1.0) {
            auto sol = solve_pool_barrier(pool, mu, 1.0, master_tol, options.max_iter * 100);
            rho = sol.rho;
            pool_value = sol.value;
            pool_lower = sol.lower;
            continue;
        }

        // Drop rows that have been slack and unused for 50 rounds.
        std::vector<PathRow> kept;
        kept.reserve(pool.size());
        for (auto& r : pool) {
            const bool slack = r.lambda == 0.0 && row_value(r, master.rho()) - 1.0 > 10.0 * tol;
            r.idle = slack ? r.idle + 1 : 0;
            if (r.idle >= 50) {
                known.erase(r.nodes);
                continue;
            }
            kept.push_back(std::move(r));
        }
        pool.swap(kept);

        // Inexact master: solve only as accurately as the current outer gap warrants.
        const double sweep_tol = std::max(master_tol, 0.1 * rep.residual);
        for (int sweep = 0; sweep < 20000; ++sweep) {
            for (auto& r : pool) master.update(r);
            if (sweep % 4 != 3) continue;
            double min_row = kInf;
            for (const auto& r : pool) min_row = std::min(min_row, row_value(r, master.rho()));
            const double e = master.energy();
            const double ub = min_row > 0.0 ? e / std::pow(min_row, p) : kInf;
            const double lb = master.dual(pool);
            if (ub - lb <= sweep_tol * ub) break;
        }
        rho = master.rho();
    }
    rep.minimizer = rho;
    for (const auto& r : pool) {
        if (p == 1.0 || r.lambda > 0.0) rep.active_paths.emplace_back(r.nodes);
    }
    if (p == 1.0 && !pool.empty()) {
        // Flat directions: re-solve with perturbed masses and compare minimisers.
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> mu2(mu);
        for (auto& m : mu2) m *= 1.0 + 1e-4 * u(rng);
        auto alt = solve_pool_barrier(pool, mu2, 1.0, master_tol, options.max_iter * 100);
        double diff = 0.0, mag = 0.0;
        for (PointId x = 0; x < n; ++x) {
            diff = std::max(diff, std::abs(alt.rho[x] - rho[x]));
            mag = std::max(mag, std::abs(rho[x]));
        }
        if (diff > 1e-3 * mag) rep.notes.push_back("p = 1: minimising density is not unique");
    }
    if (!rep.converged) rep.notes.push_back("iteration limit reached; value is the certified upper bound");
    return rep;
}

CapacityReport brute_force_modulus(const CondenserSpec& spec, const MetricMeasureSpace& space, std::size_t n_limit) {
    spec.validate(space);
    if (space.size() > n_limit) {
        throw Error(ErrorKind::InvalidArgument, "brute force is limited to " + std::to_string(n_limit) + " points");
    }
    const std::size_t n = space.size();
    const auto f_mask = spec.F.indicator(n);
    std::vector<PathRow> rows;
    std::vector<char> used(n, 0);
    std::vector<PointId> path;
    std::function<void()> extend = [&]() {
        const PointId last = path.back();
        if (f_mask[last]) {
            rows.push_back(make_row(space, path));
            return;
        }
        for (PointId y = 0; y < n; ++y) {
            if (used[y] || space.dist(last, y) > spec.delta) continue;
            used[y] = 1;
            path.push_back(y);
            extend();
            path.pop_back();
            used[y] = 0;
        }
    };
    for (PointId e : spec.E) {
        used[e] = 1;
        path.assign(1, e);
        extend();
        used[e] = 0;
    }

    CapacityReport rep;
    rep.method = "brute-force";
    rep.minimizer.assign(n, 0.0);
    rep.converged = true;
    if (rows.empty()) {
        rep.notes.push_back("no E -> F path with mesh <= delta; the path family is empty");
        return rep;
    }
    const double scale = max_mass(space);
    std::vector<double> mu(n);
    for (PointId x = 0; x < n; ++x) mu[x] = space.mass(x) / scale;
    auto sol = solve_pool_barrier(rows, mu, spec.p, 1e-12, 100000);
    rep.minimizer = sol.rho;
    rep.value = sol.value * scale;
    rep.upper = rep.value;
    rep.lower = sol.lower * scale;
    rep.iterations = sol.steps;
    rep.residual = sol.value > 0.0 ? (sol.value - sol.lower) / sol.value : 0.0;
    rep.converged = sol.converged;
    for (auto& r : rows) rep.active_paths.emplace_back(r.nodes);
    rep.notes.push_back("enumerated " + std::to_string(rows.size()) + " paths");
    return rep;
}

CapacityReport primal_sequence(const CondenserSpec& spec, const MetricMeasureSpace& space,
                               const PrimalOptions& options) {
    spec.validate(space);
    const std::size_t n = space.size();
    const double p = spec.p;
    CapacityReport rep;
    rep.method = "primal-seq";

    ScalarField seed;
    if (options.seed) {
        seed = *options.seed;
        if (seed.size() != n) throw Error(ErrorKind::InvalidArgument, "seed density has the wrong size");
        for (double v : seed)
            if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "seed must be finite and >= 0");
    } else {
        seed = modulus_cg(spec, space, options.seed_options).minimizer;
    }

    // The computed seed is normalised so that every delta-path from E to F carries at least 1.
    const Neighbors nbrs_delta = neighbor_lists(space, spec.delta);
    {
        auto sp = infimal_paths(nbrs_delta, spec.E, seed, ScalarField(n, 0.0));
        double min_cost = kInf;
        for (PointId f : spec.F) min_cost = std::min(min_cost, sp.label[f]);
        if (min_cost == kInf) {
            rep.notes.push_back("no E -> F path with mesh <= delta; capacity 0");
            rep.converged = true;
            rep.minimizer.assign(n, 0.0);
            return rep;
        }
        if (!options.seed) {
            if (!(min_cost > 0.0)) throw Error(ErrorKind::InvalidArgument, "seed density is not admissible");
            for (double& v : seed) v /= min_cost;
        }
    }

    const double diam = space.diameter();
    const MetricMeasureSpace unit = space.scaled(1.0 / diam);
    ScalarField g(n);
    for (PointId x = 0; x < n; ++x) g[x] = seed[x] * diam;
    const double delta_unit = spec.delta / diam;
    GoodSequence seq(unit, g, options.eps, p, spec.E.members().front());

    int i_max = options.i_max;
    if (i_max <= 0) {
        double lip = 0.0;
        for (PointId x = 0; x < n; ++x)
            for (PointId y = x + 1; y < n; ++y) lip = std::max(lip, std::abs(g[x] - g[y]) / unit.dist(x, y));
        i_max = static_cast<int>(std::ceil(std::max(lip, 1.0 / delta_unit))) + 1;
        rep.notes.push_back("i_max chosen as " + std::to_string(i_max));
    }

    std::map<double, Neighbors> graphs;
    const double energy_scale = std::pow(diam, -p);
    ScalarField last_u;
    double prev_a = 0.0;
    for (int i = 1; i <= i_max; ++i) {
        const double mesh_i = std::max(1.0 / i, delta_unit);
        auto it = graphs.find(mesh_i);
        if (it == graphs.end()) {
            graphs.clear();
            it = graphs.emplace(mesh_i, neighbor_lists(unit, mesh_i)).first;
        }
        const ScalarField& gi = seq.level(i);
        auto sp = infimal_paths(it->second, spec.E, gi, ScalarField(n, 0.0));
        ScalarField u(n);
        for (PointId x = 0; x < n; ++x) u[x] = std::min(sp.label[x], 1.0);
        double a = kInf;
        for (PointId f : spec.F) a = std::min(a, u[f]);
        PrimalTraceRow row;
        row.i = i;
        row.mesh = mesh_i * diam;
        row.a_i = a;
        if (!(a > 0.0)) {
            row.skipped = true;
            row.energy = kInf;
            rep.notes.push_back("level " + std::to_string(i) + " skipped: a_i = 0");
        } else {
            double e = 0.0;
            for (PointId x = 0; x < n; ++x) e += power(gi[x] / a, p) * space.mass(x);
            row.energy = e * energy_scale;
            rep.value = row.energy;
            last_u.assign(n, 0.0);
            for (PointId x = 0; x < n; ++x) last_u[x] = std::min(u[x] / a, 1.0);
        }
        if (a < prev_a) rep.notes.push_back("a_i decreased at level " + std::to_string(i));
        prev_a = std::max(prev_a, a);
        rep.primal_trace.push_back(row);
    }
    rep.iterations = i_max;
    rep.minimizer = last_u.empty() ? ScalarField(n, 0.0) : last_u;
    const double a_last = rep.primal_trace.back().a_i;
    rep.residual = 1.0 - a_last;
    rep.upper = rep.lower = rep.value;
    rep.converged = a_last > 0.0;
    return rep;
}

namespace {

struct LipBarrier {
    detail::BarrierProblem problem;
    std::vector<int> u_var;    // -1 for fixed points
    std::vector<int> tau_var;  // -1 for isolated points
    std::vector<double> z0;
};

// Epigraph form: tau_x >= +-(u_x - u_y) / d(x,y) for every delta-neighbour y.
LipBarrier build_lip_barrier(const Neighbors& nbrs, const std::vector<double>& mu, double p,
                             const std::vector<char>& fixed, const ScalarField& u_fixed, const ScalarField& u0,
                             bool u_power) {
    const std::size_t n = nbrs.size();
    LipBarrier lb;
    lb.problem.p = p;
    lb.u_var.assign(n, -1);
    lb.tau_var.assign(n, -1);
    int next = 0;
    for (PointId x = 0; x < n; ++x)
        if (!fixed[x]) lb.u_var[x] = next++;
    for (PointId x = 0; x < n; ++x)
        if (!nbrs[x].empty()) lb.tau_var[x] = next++;
    lb.problem.num_vars = next;
    lb.z0.assign(static_cast<std::size_t>(next), 0.0);
    ScalarField u(n);
    for (PointId x = 0; x < n; ++x) u[x] = fixed[x] ? u_fixed[x] : u0[x];
    for (PointId x = 0; x < n; ++x) {
        if (lb.u_var[x] >= 0) {
            lb.z0[static_cast<std::size_t>(lb.u_var[x])] = u[x];
            if (u_power) {
                lb.problem.power.push_back({lb.u_var[x], mu[x]});
                lb.problem.constraints.push_back({{{lb.u_var[x], 1.0}}, 0.0});
            }
        }
        if (lb.tau_var[x] < 0) continue;
        double g = 0.0;
        double dmin = kInf;
        for (const auto& [y, d] : nbrs[x]) {
            g = std::max(g, std::abs(u[x] - u[y]) / d);
            dmin = std::min(dmin, d);
        }
        lb.z0[static_cast<std::size_t>(lb.tau_var[x])] = g + 0.1 / dmin;
        lb.problem.power.push_back({lb.tau_var[x], mu[x]});
        for (const auto& [y, d] : nbrs[x]) {
            for (double sign : {1.0, -1.0}) {
                // tau_x - sign (u_x - u_y)/d > 0
                detail::BarrierProblem::Constraint c;
                c.coeffs.emplace_back(lb.tau_var[x], 1.0);
                double rhs = 0.0;
                if (lb.u_var[x] >= 0) {
                    c.coeffs.emplace_back(lb.u_var[x], -sign / d);
                } else {
                    rhs += sign * u_fixed[x] / d;
                }
                if (lb.u_var[y] >= 0) {
                    c.coeffs.emplace_back(lb.u_var[y], sign / d);
                } else {
                    rhs -= sign * u_fixed[y] / d;
                }
                c.rhs = rhs;
                lb.problem.constraints.push_back(std::move(c));
            }
        }
    }
    return lb;
}

} // namespace

CapacityReport function_min(const CondenserSpec& spec, const MetricMeasureSpace& space, const SolverOptions& options) {
    spec.validate(space);
    if (!(options.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
    const std::size_t n = space.size();
    const double scale = max_mass(space);
    std::vector<double> mu(n);
    for (PointId x = 0; x < n; ++x) mu[x] = space.mass(x) / scale;
    const Neighbors nbrs = neighbor_lists(space, spec.delta);

    std::vector<char> fixed(n, 0);
    ScalarField ufix(n, 0.0), u0(n, 0.0);
    for (PointId x : spec.E) fixed[x] = 1;
    for (PointId x : spec.F) {
        fixed[x] = 1;
        ufix[x] = 1.0;
    }
    for (PointId x = 0; x < n; ++x) {
        if (fixed[x]) continue;
        const double de = dist_to_set(space, x, spec.E);
        const double df = dist_to_set(space, x, spec.F);
        u0[x] = de / (de + df);
    }
    auto lb = build_lip_barrier(nbrs, mu, spec.p, fixed, ufix, u0, false);
    detail::BarrierOptions opt;
    opt.rel_gap = options.tol;
    opt.abs_gap = 1e-300;
    opt.max_newton = options.max_iter;
    auto res = detail::solve_barrier(lb.problem, lb.z0, opt);

    CapacityReport rep;
    rep.method = "function-min";
    ScalarField u(n);
    for (PointId x = 0; x < n; ++x) {
        u[x] = lb.u_var[x] >= 0 ? std::clamp(res.z[static_cast<std::size_t>(lb.u_var[x])], 0.0, 1.0) : ufix[x];
    }
    rep.value = lp_energy(space, local_lip_gradient(nbrs, u), spec.p);
    rep.minimizer = u;
    rep.iterations = res.newton_steps;
    rep.converged = res.converged;
    rep.residual = res.objective > 0.0 ? res.gap_bound / res.objective : res.gap_bound;
    rep.upper = rep.value;
    rep.lower = std::max(0.0, (res.objective - res.gap_bound) * scale);
    rep.trace.push_back({rep.iterations, rep.value, rep.residual, lb.problem.constraints.size()});
    if (!rep.converged) rep.notes.push_back("Newton step limit reached");
    return rep;
}

CapacityReport set_capacity(const PointSet& e, double p, double delta, const MetricMeasureSpace& space,
                            const SolverOptions& options) {
    if (e.empty()) throw Error(ErrorKind::Validation, "set capacity needs a nonempty set");
    if (!(p >= 1.0)) throw Error(ErrorKind::Validation, "p must be at least 1");
    if (!(delta > 0.0)) throw Error(ErrorKind::Validation, "delta must be positive");
    if (!(options.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
    const std::size_t n = space.size();
    for (PointId x : e)
        if (x >= n) throw Error(ErrorKind::Validation, "set references a point outside the space");
    const double scale = max_mass(space);
    std::vector<double> mu(n);
    for (PointId x = 0; x < n; ++x) mu[x] = space.mass(x) / scale;
    const Neighbors nbrs = neighbor_lists(space, delta);

    std::vector<char> fixed = e.indicator(n);
    ScalarField ufix(n, 0.0), u0(n, 0.5);
    for (PointId x : e) ufix[x] = 1.0;
    auto lb = build_lip_barrier(nbrs, mu, p, fixed, ufix, u0, true);
    detail::BarrierOptions opt;
    opt.rel_gap = options.tol;
    opt.max_newton = options.max_iter;
    auto res = detail::solve_barrier(lb.problem, lb.z0, opt);

    CapacityReport rep;
    rep.method = "set-capacity";
    ScalarField u(n);
    for (PointId x = 0; x < n; ++x) {
        u[x] = lb.u_var[x] >= 0 ? std::clamp(res.z[static_cast<std::size_t>(lb.u_var[x])], 0.0, 1.0) : 1.0;
    }
    rep.value = lp_energy(space, u, p) + lp_energy(space, local_lip_gradient(nbrs, u), p);
    rep.minimizer = u;
    rep.iterations = res.newton_steps;
    rep.converged = res.converged;
    double fixed_part = 0.0;
    for (PointId x : e) fixed_part += mu[x];
    const double obj = res.objective + fixed_part;
    rep.residual = obj > 0.0 ? res.gap_bound / obj : res.gap_bound;
    rep.upper = rep.value;
    rep.lower = std::max(0.0, (obj - res.gap_bound) * scale);
    rep.trace.push_back({rep.iterations, rep.value, rep.residual, lb.problem.constraints.size()});
    if (!rep.converged) rep.notes.push_back("Newton step limit reached");
    return rep;
}

OuterRegularity outer_regularity_gap(const PointSet& e, double p, double delta, const MetricMeasureSpace& space,
                                     int levels, const SolverOptions& options) {
    OuterRegularity out;
    out.cap_e = set_capacity(e, p, delta, space, options).value;
    std::vector<double> dists;
    for (PointId x = 0; x < space.size(); ++x) {
        const double d = dist_to_set(space, x, e);
        if (d > 0.0) dists.push_back(d);
    }
    std::sort(dists.begin(), dists.end());
    dists.erase(std::unique(dists.begin(), dists.end()), dists.end());
    // r -> 0+: the open neighbourhood is E itself.
    out.rows.push_back({0.0, e.size(), out.cap_e});
    out.inf_neighbourhood = out.cap_e;
    for (int k = 0; k < levels && k < static_cast<int>(dists.size()); ++k) {
        const double r = std::nextafter(dists[static_cast<std::size_t>(k)], kInf);
        std::vector<PointId> members;
        for (PointId x = 0; x < space.size(); ++x)
            if (dist_to_set(space, x, e) < r) members.push_back(x);
        PointSet nbhd(members);
        const double cap = set_capacity(nbhd, p, delta, space, options).value;
        out.rows.push_back({r, nbhd.size(), cap});
        out.inf_neighbourhood = std::min(out.inf_neighbourhood, cap);
    }
    out.gap = out.inf_neighbourhood - out.cap_e;
    return out;
}

ChoquetDiagnostics choquet_check(const std::vector<PointSet>& sets, ChainKind kind, double p, double delta,
                                 const MetricMeasureSpace& space, double tol,
                                 const std::vector<std::pair<PointSet, PointSet>>& pairs,
                                 const SolverOptions& options) {
    if (sets.empty()) throw Error(ErrorKind::InvalidArgument, "choquet check needs at least one set");
    for (std::size_t k = 1; k < sets.size(); ++k) {
        const bool nested = kind == ChainKind::Increasing ? is_subset(sets[k - 1], sets[k]) : is_subset(sets[k], sets[k - 1]);
        if (!nested) throw Error(ErrorKind::InvalidArgument, "sets are not nested as declared");
    }
    ChoquetDiagnostics out;
    if (p == 1.0) out.warnings.push_back("p = 1: the Choquet property is only established for p > 1");
    for (const auto& s : sets) out.capacities.push_back(set_capacity(s, p, delta, space, options).value);
    out.monotone_slack = kInf;
    for (std::size_t k = 1; k < sets.size(); ++k) {
        const double small = kind == ChainKind::Increasing ? out.capacities[k - 1] : out.capacities[k];
        const double large = kind == ChainKind::Increasing ? out.capacities[k] : out.capacities[k - 1];
        out.monotone_slack = std::min(out.monotone_slack, large - small);
    }
    if (sets.size() < 2) out.monotone_slack = 0.0;
    out.monotone = out.monotone_slack >= -tol;

    PointSet limit = sets.front();
    for (const auto& s : sets) limit = kind == ChainKind::Increasing ? set_union(limit, s) : set_intersection(limit, s);
    if (limit.empty()) {
        out.limit_capacity = 0.0;
    } else {
        out.limit_capacity = set_capacity(limit, p, delta, space, options).value;
    }
    out.continuity_error = std::abs(out.limit_capacity - out.capacities.back());
    out.continuity = out.continuity_error <= tol;

    for (const auto& [a, b] : pairs) {
        const double ca = a.empty() ? 0.0 : set_capacity(a, p, delta, space, options).value;
        const double cb = b.empty() ? 0.0 : set_capacity(b, p, delta, space, options).value;
        const PointSet ab = set_union(a, b);
        const double cab = ab.empty() ? 0.0 : set_capacity(ab, p, delta, space, options).value;
        out.subadditivity_slack.push_back(ca + cb - cab);
        if (ca + cb - cab < -tol) out.subadditive = false;
    }
    return out;
}

} // namespace mmpt
