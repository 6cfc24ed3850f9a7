#pragma once

#include "mmpt/fields.hpp"
#include "mmpt/paths.hpp"
#include "mmpt/space.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace mmpt {

inline constexpr PointId kNoPoint = std::numeric_limits<PointId>::max();

struct Seed {
    PointId node;
    double label;
    PointId origin;
};

struct DijkstraOptions {
    /// Nodes a path may visit; all when null.
    const std::vector<char>* allowed = nullptr;
    /// Per-node step bound: u -> v only if d(u,v) <= bound[u].
    const ScalarField* step_bound = nullptr;
    /// Nodes that are labelled but never expanded.
    const std::vector<char>* terminal = nullptr;
};

/// Labels of a multi-source shortest-path run with edge cost w(u) d(u,v).
struct ShortestPaths {
    ScalarField label;
    std::vector<PointId> parent;
    std::vector<PointId> origin;

    bool reached(PointId x) const { return label[x] < std::numeric_limits<double>::infinity(); }
    /// Node sequence from the seed to x (the seed's origin is not included).
    std::vector<PointId> walk_to(PointId x) const;
};

/// Binary-heap Dijkstra. Ties in the queue go to the lowest point id.
ShortestPaths shortest_paths(const Neighbors& nbrs, const ScalarField& weight, const std::vector<Seed>& seeds,
                             const DijkstraOptions& options = {});

/// f(y) = min( inf_P { h(p_0) + int_P g }, M ) over paths with p_0 in E,
/// p_n = y and Mesh(P) <= delta. Unreachable points get M.
ScalarField infimal_path_value(const MetricMeasureSpace& space, const PointSet& e, const ScalarField& g,
                               const ScalarField& h, double delta, double m);

/// Same, on a prebuilt delta-neighbour graph; also returns the optimal paths.
ShortestPaths infimal_paths(const Neighbors& nbrs, const PointSet& e, const ScalarField& g, const ScalarField& h);

/// f~(x) = min(M, inf Phi(P)) over (x,D)-admissible paths for x in V, 0 off V.
ScalarField admissible_extension_value(const MetricMeasureSpace& space, const PointSet& c, const PointSet& v,
                                       const PointSet& k, const ScalarField& f0, const AuxTriple& aux, double m);

struct UgCheck {
    bool pass = true;
    /// min over checked pairs of cost - |f(c') - f(c)|.
    double worst_slack = std::numeric_limits<double>::infinity();
    std::optional<DiscretePath> witness;
    std::size_t pairs_checked = 0;
};

/// For every c, c' in C with d(c,c') > Delta: the delta-mesh path cost inside V
/// from c to c' is at least |f(c') - f(c)| - tol.
UgCheck discrete_ug_check(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& g, double delta,
                          double big_delta, const PointSet& c, const PointSet& v, double tol = 1e-9);

struct IndexSelection {
    std::vector<int> indices;
    std::vector<double> worst_slack;
};

/// i_n = smallest index >= i_{n-1} + 1 such that g_{i_n} is an
/// (1/i_n, 2^{-n})-discrete upper gradient of f on (C,V). At most `cap`
/// candidates per level; throws CapExhausted otherwise.
IndexSelection select_indices(const MetricMeasureSpace& space, const ScalarField& f, GoodSequence& seq,
                              const PointSet& c, const PointSet& v, int n_max, int cap = 512, double tol = 1e-9);

} // namespace mmpt
