#pragma once

#include "mmpt/fields.hpp"
#include "mmpt/io.hpp"
#include "mmpt/paths.hpp"
#include "mmpt/space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmpt {

/// Extension data: f known on K and vanishing outside B(x0, R), with an
/// upper-gradient seed g_star that also vanishes outside B(x0, R).
struct ExtensionProblem {
    ScalarField f;
    ScalarField g_star;
    PointSet K;
    PointId x0 = 0;
    double R = 1.0;
    double eps = 0.1;
    double p = 2.0;

    /// Throws Validation when sizes mismatch, K is empty or leaves B(x0, R),
    /// f or g_star is nonzero outside B(x0, R), g_star < 0, or R, eps <= 0.
    void validate(const MetricMeasureSpace& space) const;
};

ExtensionProblem parse_extension_problem(const Json& doc, const MetricMeasureSpace& space);

struct ExtensionOptions {
    int index_cap = 512;
    double tol = 1e-9;
    std::optional<double> delta_cloud;  ///< verification scale; connectivity radius when absent
};

struct ExtensionResult {
    ScalarField f_tilde;
    AuxTriple aux;           ///< expressed in the rescaled metric
    double scale = 1.0;      ///< metric factor applied before the construction
    PointSet C;
    PointSet V;
    double M = 0.0;
    double delta_cloud = 0.0;
    double energy = 0.0;        ///< sum over X \ K of g_{f~}^p mu
    double energy_bound = 0.0;  ///< sum over X \ K of g_star^p mu + eps
    int index_depth = 0;
    std::vector<double> index_slack;
    std::vector<PropertyCheck> diagnostics;

    bool pass() const;
};

/// Builds f~ = min(M, inf Phi(P)) over (x, D)-admissible paths on V and 0 off V,
/// and checks sup |f~| <= M, f~ = f on K, f~ = 0 off B(x0, R) and the energy bound.
ExtensionResult whitney_extend(const ExtensionProblem& problem, const MetricMeasureSpace& space,
                               const ExtensionOptions& options = {});

/// f~(y) <= f(x) + P(d(x,y)) + G(x) d(x,y) + tol for every x in K and y in V.
PropertyCheck continuity_surrogate_check(const ExtensionResult& result, const ExtensionProblem& problem,
                                         const MetricMeasureSpace& space, double tol = 1e-9);

Json to_json(const ExtensionResult& result);

} // namespace mmpt
