#pragma once

#include "mmpt/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mmpt {

enum class SetRole { Generic, E, F, K, C, V };

std::string to_string(SetRole role);

/// Sorted, duplicate-free set of point ids with a role tag.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::vector<PointId> members, SetRole role = SetRole::Generic);

    static PointSet all(std::size_t n, SetRole role = SetRole::Generic);

    bool contains(PointId x) const;
    bool empty() const noexcept { return members_.empty(); }
    std::size_t size() const noexcept { return members_.size(); }
    const std::vector<PointId>& members() const noexcept { return members_; }
    SetRole role() const noexcept { return role_; }
    PointSet with_role(SetRole role) const;

    auto begin() const noexcept { return members_.begin(); }
    auto end() const noexcept { return members_.end(); }

    /// Dense membership mask of length n.
    std::vector<char> indicator(std::size_t n) const;

    bool operator==(const PointSet& other) const { return members_ == other.members_; }

private:
    std::vector<PointId> members_;
    SetRole role_ = SetRole::Generic;
};

PointSet set_union(const PointSet& a, const PointSet& b);
PointSet set_intersection(const PointSet& a, const PointSet& b);
PointSet set_difference(const PointSet& a, const PointSet& b);
bool is_subset(const PointSet& a, const PointSet& b);

/// Finite metric measure space (X, d, mu).
///
/// Immutable after construction. Distances come either from an explicit
/// matrix (validated exactly) or from Euclidean coordinates. Coordinate
/// spaces up to kDenseCoordLimit points cache the full matrix; larger ones
/// evaluate distances on demand.
class MetricMeasureSpace {
public:
    static constexpr std::size_t kDenseLimit = 4096;
    static constexpr std::size_t kDenseCoordLimit = 1024;
    static constexpr std::size_t kTriangleCheckCoordLimit = 512;

    MetricMeasureSpace() = default;

    static MetricMeasureSpace from_coords(std::vector<std::vector<double>> coords,
                                          std::vector<double> mass,
                                          double triangle_rel_tol = 1e-9);
    static MetricMeasureSpace from_matrix(const std::vector<std::vector<double>>& dist,
                                          std::vector<double> mass);

    std::size_t size() const noexcept { return n_; }
    double dist(PointId a, PointId b) const;
    double mass(PointId x) const { return mass_[x]; }
    const std::vector<double>& masses() const noexcept { return mass_; }
    double total_mass() const;

    bool has_coords() const noexcept { return dim_ > 0; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> coord(PointId x) const;

    /// True when the distance matrix is held in memory.
    bool dense() const noexcept { return !dist_.empty(); }

    double diameter() const;
    double min_positive_distance() const;

    /// Same points and masses with every distance multiplied by `factor`.
    MetricMeasureSpace scaled(double factor) const;
    MetricMeasureSpace with_masses(std::vector<double> mass) const;

private:
    void check_id(PointId x) const;

    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<double> dist_;
    std::vector<double> mass_;
};

/// d(x, A); +infinity for an empty set.
double dist_to_set(const MetricMeasureSpace& space, PointId x, const PointSet& a);

/// d(A, B) = min over pairs; +infinity if either is empty.
double dist_between_sets(const MetricMeasureSpace& space, const PointSet& a, const PointSet& b);

/// Open ball {y : d(x0, y) < r}; closed variant {d <= r} when `closed`.
PointSet ball(const MetricMeasureSpace& space, PointId x0, double r, bool closed = false);

/// Nested sets E_1 ⊆ E_2 ⊆ ... with mu(B(x0, i+1) \ E_i) <= eps^p 2^{-4 p i}.
///
/// Each level takes the whole ball B(x0, i+1) together with the previous
/// level and K0, so the deficit is zero. The list ends at the first level
/// equal to the whole space.
std::vector<PointSet> exhaustion(const MetricMeasureSpace& space, PointId x0, double eps, double p,
                                 const std::optional<PointSet>& k0 = std::nullopt);

/// Mass-deficit budget eps^p 2^{-4 p i} of exhaustion level i (1-based).
double exhaustion_budget(double eps, double p, int level);

/// Uniform bucket grid over ambient coordinates for radius queries.
class SpatialIndex {
public:
    SpatialIndex(const MetricMeasureSpace& space, double cell);

    /// Calls fn(y, d(x,y)) for every y != x with d(x,y) <= r.
    template <class Fn>
    void for_each_within(PointId x, double r, Fn&& fn) const {
        auto c = space_->coord(x);
        std::vector<long long> lo(dim_), hi(dim_), cur(dim_);
        for (std::size_t k = 0; k < dim_; ++k) {
            lo[k] = std::max(cell_coord(c[k] - r, k), 0LL);
            hi[k] = std::min(cell_coord(c[k] + r, k), extent_[k] - 1);
            if (lo[k] > hi[k]) return;
            cur[k] = lo[k];
        }
        while (true) {
            std::size_t flat = 0;
            for (std::size_t k = dim_; k-- > 0;) flat = flat * static_cast<std::size_t>(extent_[k]) + static_cast<std::size_t>(cur[k]);
            for (std::size_t j = start_[flat]; j < start_[flat + 1]; ++j) {
                const PointId y = order_[j];
                if (y == x) continue;
                const double d = space_->dist(x, y);
                if (d <= r) fn(y, d);
            }
            std::size_t k = 0;
            while (k < dim_ && cur[k] == hi[k]) {
                cur[k] = lo[k];
                ++k;
            }
            if (k == dim_) break;
            ++cur[k];
        }
    }

private:
    long long cell_coord(double v, std::size_t k) const {
        const double q = std::floor((v - origin_[k]) / cell_);
        if (q < -1e15) return -1;
        if (q > 1e15) return extent_[k];
        return static_cast<long long>(q);
    }

    const MetricMeasureSpace* space_;
    std::size_t dim_;
    double cell_;
    std::vector<double> origin_;
    std::vector<long long> extent_;
    std::vector<std::size_t> start_;
    std::vector<PointId> order_;
};

/// For each point, the (neighbour, distance) pairs with 0 < d <= delta, sorted by id.
using Neighbors = std::vector<std::vector<std::pair<PointId, double>>>;
Neighbors neighbor_lists(const MetricMeasureSpace& space, double delta);

/// Smallest delta for which the delta-neighbourhood graph is connected
/// (bottleneck edge of a minimum spanning tree). Zero for n <= 1.
double connectivity_radius(const MetricMeasureSpace& space);

} // namespace mmpt
