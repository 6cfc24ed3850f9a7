#include "barrier.hpp"

#include "mmpt/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmpt::detail {

namespace {

constexpr std::size_t kDenseVars = 96;

double power_objective(const BarrierProblem& pr, const std::vector<double>& z) {
    double f = 0.0;
    for (const auto& t : pr.power) f += t.weight * std::pow(z[static_cast<std::size_t>(t.var)], pr.p);
    return f;
}

// Barrier value t f(z) - sum log(slack); +inf outside the domain.
double merit(const BarrierProblem& pr, const std::vector<double>& z, double t) {
    double phi = 0.0;
    for (const auto& term : pr.power) {
        const double v = z[static_cast<std::size_t>(term.var)];
        if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
        phi += t * term.weight * std::pow(v, pr.p);
    }
    for (const auto& c : pr.constraints) {
        double s = -c.rhs;
        for (const auto& [j, a] : c.coeffs) s += a * z[static_cast<std::size_t>(j)];
        if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
        phi -= std::log(s);
    }
    return phi;
}

} // namespace

BarrierResult solve_barrier(const BarrierProblem& pr, std::vector<double> z, const BarrierOptions& opt) {
    const int nv = pr.num_vars;
    const std::size_t n = static_cast<std::size_t>(nv);
    const double m = static_cast<double>(pr.constraints.size());
    BarrierResult res;
    if (nv == 0) {
        res.z = std::move(z);
        res.converged = true;
        return res;
    }
    if (!std::isfinite(merit(pr, z, 1.0))) {
        throw Error(ErrorKind::InvalidArgument, "barrier start point is not strictly feasible");
    }
    const double p = pr.p;
    double f0 = power_objective(pr, z);
    double t = m / std::max(f0, 1e-300);
    if (m == 0.0) t = 1.0;

    const bool dense = n <= kDenseVars;
    Eigen::VectorXd grad(nv);
    Eigen::MatrixXd hd;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::SparseMatrix<double> hs(nv, nv);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> sparse_solver;
    bool pattern_ready = false;
    std::vector<double> slack(pr.constraints.size());

    while (true) {
        // Centering by damped Newton.
        for (int inner = 0; inner < 200; ++inner) {
            if (res.newton_steps >= opt.max_newton) {
                res.z = z;
                res.objective = power_objective(pr, z);
                res.gap_bound = m / t;
                return res;
            }
            ++res.newton_steps;
            grad.setZero();
            if (dense) {
                hd.setZero(nv, nv);
            } else {
                trip.clear();
            }
            auto add_h = [&](int i, int j, double v) {
                if (dense) {
                    hd(i, j) += v;
                } else {
                    trip.emplace_back(i, j, v);
                }
            };
            for (const auto& term : pr.power) {
                const double v = z[static_cast<std::size_t>(term.var)];
                grad(term.var) += t * term.weight * p * std::pow(v, p - 1.0);
                const double h2 = t * term.weight * p * (p - 1.0) * std::pow(v, p - 2.0);
                add_h(term.var, term.var, h2);
            }
            for (std::size_t ci = 0; ci < pr.constraints.size(); ++ci) {
                const auto& c = pr.constraints[ci];
                double s = -c.rhs;
                for (const auto& [j, a] : c.coeffs) s += a * z[static_cast<std::size_t>(j)];
                slack[ci] = s;
                const double inv = 1.0 / s;
                const double inv2 = inv * inv;
                for (const auto& [j, a] : c.coeffs) {
                    grad(j) -= a * inv;
                    for (const auto& [k, b] : c.coeffs) add_h(j, k, a * b * inv2);
                }
            }
            Eigen::VectorXd step;
            if (dense) {
                // Small diagonal shift guards directions the objective leaves flat.
                for (int i = 0; i < nv; ++i) hd(i, i) += 1e-14 * (1.0 + std::abs(hd(i, i)));
                step = hd.ldlt().solve(-grad);
            } else {
                for (int i = 0; i < nv; ++i) trip.emplace_back(i, i, 1e-300);
                hs.setFromTriplets(trip.begin(), trip.end());
                for (int i = 0; i < nv; ++i) hs.coeffRef(i, i) += 1e-14 * (1.0 + std::abs(hs.coeff(i, i)));
                if (!pattern_ready) {
                    sparse_solver.analyzePattern(hs);
                    pattern_ready = true;
                }
                sparse_solver.factorize(hs);
                step = sparse_solver.solve(-grad);
            }
            const double decrement2 = -grad.dot(step);
            if (!(decrement2 >= 0.0) || !std::isfinite(decrement2)) break;
            if (decrement2 / 2.0 <= 1e-10) break;

            // Largest step keeping every slack and power variable positive.
            double alpha = 1.0;
            for (std::size_t ci = 0; ci < pr.constraints.size(); ++ci) {
                double ds = 0.0;
                for (const auto& [j, a] : pr.constraints[ci].coeffs) ds += a * step(j);
                if (ds < 0.0) alpha = std::min(alpha, -0.99 * slack[ci] / ds);
            }
            for (const auto& term : pr.power) {
                const double dv = step(term.var);
                if (dv < 0.0) alpha = std::min(alpha, -0.99 * z[static_cast<std::size_t>(term.var)] / dv);
            }
            const double phi0 = merit(pr, z, t);
            std::vector<double> trial(n);
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < n; ++i) trial[i] = z[i] + alpha * step(static_cast<int>(i));
                const double phi = merit(pr, trial, t);
                if (phi <= phi0 - 0.25 * alpha * decrement2) {
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
            z.swap(trial);
        }
        const double f = power_objective(pr, z);
        const double gap = m / t;
        if (gap <= opt.rel_gap * f || gap <= opt.abs_gap || m == 0.0) {
            res.z = z;
            res.objective = f;
            res.gap_bound = gap;
            res.converged = true;
            return res;
        }
        t *= opt.t_growth;
    }
}

} // namespace mmpt::detail
