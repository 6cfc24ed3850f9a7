#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace mmpt::detail {

/// minimize   sum_j w_j z_{v_j}^p
/// subject to a_c . z > r_c  for every constraint c,
/// by a primal log-barrier path-following Newton method.
struct BarrierProblem {
    struct Power {
        int var;
        double weight;
    };
    struct Constraint {
        std::vector<std::pair<int, double>> coeffs;
        double rhs = 0.0;
    };

    int num_vars = 0;
    double p = 2.0;
    std::vector<Power> power;
    std::vector<Constraint> constraints;
};

struct BarrierOptions {
    double rel_gap = 1e-10;
    double abs_gap = 1e-300;
    int max_newton = 10000;
    double t_growth = 16.0;
};

struct BarrierResult {
    std::vector<double> z;
    double objective = 0.0;
    double gap_bound = 0.0;
    int newton_steps = 0;
    bool converged = false;
};

/// `z0` must be strictly feasible and positive on every power variable.
BarrierResult solve_barrier(const BarrierProblem& problem, std::vector<double> z0, const BarrierOptions& options);

} // namespace mmpt::detail
