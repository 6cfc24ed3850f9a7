#pragma once

#include "mmpt/capacity.hpp"
#include "mmpt/io.hpp"
#include "mmpt/space.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmpt {

enum class GridDomain { Square, Annulus };

/// Regular grid instance. Annulus: spacing h = 2R/n, points x = (k h, l h)
/// kept when |x| <= R + 1.01 h; E = {|x| <= r}, F = {|x| >= R}.
/// Square: [0,1]^2 with spacing 1/n, E = left column, F = right column.
struct GridSpec {
    int n = 32;
    GridDomain domain = GridDomain::Annulus;
    double r = 0.5;
    double R = 1.0;
    int connectivity = 4;  ///< 4 or 8

    /// Throws Validation unless n >= 4, 0 < r < R and connectivity is 4 or 8.
    void validate() const;
};

struct GridInstance {
    MetricMeasureSpace space;
    CondenserSpec condenser;
    double spacing = 0.0;
};

/// Cell-area masses, delta = 1.01 h (4-neighbour) or 1.01 sqrt(2) h (8-neighbour).
GridInstance make_grid_condenser(const GridSpec& grid, double p = 2.0);

/// Seeded random condenser: n points uniform in the unit square with masses in
/// [0.5, 2], E and F of one or two points each, and delta between 1 and 1.8
/// times the connectivity radius.
GridInstance random_condenser(std::uint64_t seed, std::size_t n, double p = 2.0);

/// 2 pi / ln(R/r), the capacity of the planar ring r < |x| < R for p = 2.
double ring_capacity_oracle(double r, double R, double p = 2.0);

/// Dirichlet energy of the five-point finite-difference harmonic function on
/// the ring with spacing 2R/n (u = 0 on |x| <= r, u = 1 on |x| >= R).
double harmonic_ring_capacity(double r, double R, int n);

struct SweepRow {
    int resolution = 0;
    std::string solver;
    double p = 2.0;
    double delta = 0.0;
    double value = 0.0;
    double oracle = 0.0;  ///< NaN when no oracle applies
    double rel_error = 0.0;
    int iterations = 0;
    double runtime_s = 0.0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    Json report;
};

struct SweepReport {
    std::vector<SweepRow> rows;

    std::string csv() const;
    Json json() const;
};

struct SweepOptions {
    double p = 2.0;
    double tol = 1e-6;
    int max_iter = 10000;
    int workers = 1;
    std::uint64_t seed = 0;
    int i_max = 0;
};

/// Runs every solver ("modulus", "function", "primal", "brute") at every
/// resolution of the grid template. Failing cells are recorded and skipped.
SweepReport convergence_sweep(const std::vector<int>& resolutions, const std::vector<std::string>& solvers,
                              const GridSpec& grid, const SweepOptions& options = {});

struct QuasiLevel {
    int n = 0;
    PointSet set;             ///< E_{eps0,n} = {|f_n - f| >= eps0 / n}
    double capacity = 0.0;
    double test_bound = 0.0;  ///< Newtonian norm^p of u_n = n |f_n - f| / eps0
};

struct QuasiTail {
    int n = 0;
    PointSet set;              ///< E_N = union over n >= N of E_{eps0,n}
    double capacity = 0.0;
    double test_bound = 0.0;   ///< sum over n >= N of the level bounds
};

struct QuasiWitness {
    std::vector<QuasiLevel> levels;
    std::vector<QuasiTail> tails;
    bool monotone = true;      ///< capacity of E_N nonincreasing in N
    bool bounded = true;       ///< capacity of E_N <= test bound + tol
};

/// approximants[k] is f_{k+1}.
QuasiWitness quasicontinuity_witness(const ScalarField& f, const std::vector<ScalarField>& approximants, double eps0,
                                     double p, double delta, const MetricMeasureSpace& space, double tol = 1e-6);

Json to_json(const QuasiWitness& witness);

} // namespace mmpt
