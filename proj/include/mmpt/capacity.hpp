#pragma once

#include "mmpt/io.hpp"
#include "mmpt/paths.hpp"
#include "mmpt/space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmpt {

/// Capacity problem Cap_p(E, F) over paths of mesh at most delta.
struct CondenserSpec {
    PointSet E;
    PointSet F;
    double p = 2.0;
    double delta = 1.0;

    /// Throws Validation if E or F is empty, they intersect, p < 1 or delta <= 0.
    void validate(const MetricMeasureSpace& space) const;
};

struct TraceRow {
    int iter = 0;
    double value = 0.0;  ///< modulus_cg: best certified lower bound so far
    double residual = 0.0;
    std::size_t n_active = 0;
};

struct PrimalTraceRow {
    int i = 0;
    double mesh = 0.0;
    double a_i = 0.0;
    double energy = 0.0;
    bool skipped = false;
};

struct CapacityReport {
    double value = 0.0;
    std::string method;
    ScalarField minimizer;
    std::vector<DiscretePath> active_paths;
    std::vector<TraceRow> trace;
    std::vector<PrimalTraceRow> primal_trace;
    int iterations = 0;
    double residual = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool converged = false;
    std::vector<std::string> notes;
};

Json to_json(const CapacityReport& report);
std::string trace_csv(const CapacityReport& report);

struct SolverOptions {
    double tol = 1e-6;
    int max_iter = 10000;
};

/// Minimise sum rho^p mu over rho with int_P rho >= 1 for every simple
/// E -> F path of mesh <= delta, by constraint generation.
CapacityReport modulus_cg(const CondenserSpec& spec, const MetricMeasureSpace& space, const SolverOptions& options = {});

/// Enumerates every simple E -> F path and solves the finite program directly.
CapacityReport brute_force_modulus(const CondenserSpec& spec, const MetricMeasureSpace& space,
                                   std::size_t n_limit = 10);

struct PrimalOptions {
    int i_max = 0;          ///< 0 picks the level at which the seed is reproduced exactly
    double eps = 0.1;
    std::optional<ScalarField> seed;  ///< admissible density; modulus_cg is run when absent
    SolverOptions seed_options{1e-4, 10000};
};

/// u_i = min(inf int_P g_i, 1) over paths from E of mesh <= max(diam/i, delta),
/// a_i = min_F u_i, energy_i = sum (g_i / a_i)^p mu.
CapacityReport primal_sequence(const CondenserSpec& spec, const MetricMeasureSpace& space,
                               const PrimalOptions& options = {});

/// Minimise sum g_u^p mu with g_u the local Lipschitz gradient at scale delta,
/// u = 0 on E and u = 1 on F.
CapacityReport function_min(const CondenserSpec& spec, const MetricMeasureSpace& space,
                            const SolverOptions& options = {});

/// Minimise sum (|u|^p + g_u^p) mu over u >= 1 on E.
CapacityReport set_capacity(const PointSet& e, double p, double delta, const MetricMeasureSpace& space,
                            const SolverOptions& options = {});

struct OuterRegularityRow {
    double radius = 0.0;
    std::size_t size = 0;
    double capacity = 0.0;
};

struct OuterRegularity {
    double cap_e = 0.0;
    double inf_neighbourhood = 0.0;
    double gap = 0.0;
    std::vector<OuterRegularityRow> rows;
};

/// Capacities of the neighbourhoods N_r(E) = {d(x,E) < r}, with r just above
/// each of the `levels` smallest positive values of d(x,E), and r -> 0+.
OuterRegularity outer_regularity_gap(const PointSet& e, double p, double delta, const MetricMeasureSpace& space,
                                     int levels = 6, const SolverOptions& options = {1e-9, 10000});

struct ChoquetDiagnostics {
    std::vector<double> capacities;
    bool monotone = true;
    double monotone_slack = 0.0;
    double limit_capacity = 0.0;   ///< capacity of the union / intersection
    double continuity_error = 0.0; ///< |cap(limit set) - lim cap(A_n)|
    bool continuity = true;
    std::vector<double> subadditivity_slack;
    bool subadditive = true;
    std::vector<std::string> warnings;
    bool pass() const { return monotone && continuity && subadditive; }
};

enum class ChainKind { Increasing, Decreasing };

ChoquetDiagnostics choquet_check(const std::vector<PointSet>& sets, ChainKind kind, double p, double delta,
                                 const MetricMeasureSpace& space, double tol = 1e-6,
                                 const std::vector<std::pair<PointSet, PointSet>>& pairs = {},
                                 const SolverOptions& options = {1e-10, 10000});

} // namespace mmpt
