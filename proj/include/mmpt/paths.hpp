#pragma once

#include "mmpt/space.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mmpt {

/// A real value per point; +infinity allowed only where a role permits it.
using ScalarField = std::vector<double>;

/// Non-repeating sequence of point ids, at least one node.
class DiscretePath {
public:
    explicit DiscretePath(std::vector<PointId> nodes);

    std::size_t size() const noexcept { return nodes_.size(); }
    PointId front() const { return nodes_.front(); }
    PointId back() const { return nodes_.back(); }
    PointId operator[](std::size_t k) const { return nodes_[k]; }
    const std::vector<PointId>& nodes() const noexcept { return nodes_; }

    auto begin() const noexcept { return nodes_.begin(); }
    auto end() const noexcept { return nodes_.end(); }

    bool operator==(const DiscretePath& other) const { return nodes_ == other.nodes_; }

private:
    std::vector<PointId> nodes_;
};

double mesh(const MetricMeasureSpace& space, const DiscretePath& path);
double length(const MetricMeasureSpace& space, const DiscretePath& path);
double diameter(const MetricMeasureSpace& space, const DiscretePath& path);

/// Left-endpoint sum  sum_k g(p_k) d(p_k, p_{k+1}).
double discrete_integral(const MetricMeasureSpace& space, const DiscretePath& path, const ScalarField& g);

/// Joins `a` and `b` (b must start where a ends) and cuts the result at the
/// first repeated node.
DiscretePath concatenate(const DiscretePath& a, const DiscretePath& b);

/// Removes consecutive duplicates and loops, keeping the first visit order.
DiscretePath simplify_walk(const std::vector<PointId>& walk);

struct PolylineCurve {
    std::vector<std::vector<double>> breakpoints;
    std::vector<double> times;
    double speed = 0.0;

    double length() const { return speed; }
    std::vector<double> at(double t) const;
};

PolylineCurve interpolate(const MetricMeasureSpace& space, const DiscretePath& path);

using AmbientField = std::function<double(std::span<const double>)>;

/// Composite midpoint rule with `quad_n` panels per segment.
double curve_integral(const PolylineCurve& curve, const AmbientField& g, int quad_n);

struct RefinedPath {
    DiscretePath path;
    double max_snap_error = 0.0;
};

/// Subdivides every segment into `k` pieces and snaps each new vertex to the
/// nearest cloud point (lowest id on ties).
RefinedPath refine_along(const MetricMeasureSpace& space, const DiscretePath& path, int k);

} // namespace mmpt
