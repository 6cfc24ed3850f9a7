#include "mmpt/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mmpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_masses(const std::vector<double>& mass, std::size_t n) {
    if (mass.size() != n) {
        std::ostringstream os;
        os << "mass array has " << mass.size() << " entries, expected " << n;
        throw Error(ErrorKind::Schema, os.str());
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(mass[i]) || mass[i] <= 0.0) {
            std::ostringstream os;
            os << "nonpositive mass at point " << i << " (" << mass[i] << ")";
            throw Error(ErrorKind::Validation, os.str());
        }
    }
}

} // namespace

std::string to_string(SetRole role) {
    switch (role) {
    case SetRole::E: return "E";
    case SetRole::F: return "F";
    case SetRole::K: return "K";
    case SetRole::C: return "C";
    case SetRole::V: return "V";
    case SetRole::Generic: break;
    }
    return "generic";
}

PointSet::PointSet(std::vector<PointId> members, SetRole role)
    : members_(std::move(members)), role_(role) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

PointSet PointSet::all(std::size_t n, SetRole role) {
    std::vector<PointId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    return PointSet(std::move(ids), role);
}

bool PointSet::contains(PointId x) const {
    return std::binary_search(members_.begin(), members_.end(), x);
}

PointSet PointSet::with_role(SetRole role) const {
    PointSet out = *this;
    out.role_ = role;
    return out;
}

std::vector<char> PointSet::indicator(std::size_t n) const {
    std::vector<char> mask(n, 0);
    for (PointId x : members_) {
        if (x < n) mask[x] = 1;
    }
    return mask;
}

PointSet set_union(const PointSet& a, const PointSet& b) {
    std::vector<PointId> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return PointSet(std::move(out), a.role());
}

PointSet set_intersection(const PointSet& a, const PointSet& b) {
    std::vector<PointId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return PointSet(std::move(out), a.role());
}

PointSet set_difference(const PointSet& a, const PointSet& b) {
    std::vector<PointId> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return PointSet(std::move(out), a.role());
}

bool is_subset(const PointSet& a, const PointSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

MetricMeasureSpace MetricMeasureSpace::from_coords(std::vector<std::vector<double>> coords,
                                                   std::vector<double> mass,
                                                   double triangle_rel_tol) {
    MetricMeasureSpace s;
    s.n_ = coords.size();
    if (s.n_ == 0) throw Error(ErrorKind::Schema, "space must contain at least one point");
    s.dim_ = coords.front().size();
    if (s.dim_ == 0) throw Error(ErrorKind::Schema, "coordinates must have positive dimension");
    validate_masses(mass, s.n_);
    s.coords_.reserve(s.n_ * s.dim_);
    for (std::size_t i = 0; i < s.n_; ++i) {
        if (coords[i].size() != s.dim_) {
            std::ostringstream os;
            os << "point " << i << " has dimension " << coords[i].size() << ", expected " << s.dim_;
            throw Error(ErrorKind::Schema, os.str());
        }
        for (double c : coords[i]) {
            if (!std::isfinite(c)) {
                std::ostringstream os;
                os << "non-finite coordinate at point " << i;
                throw Error(ErrorKind::Validation, os.str());
            }
            s.coords_.push_back(c);
        }
    }
    s.mass_ = std::move(mass);

    if (s.n_ <= kDenseCoordLimit) {
        s.dist_.assign(s.n_ * s.n_, 0.0);
        MetricMeasureSpace view = s;
        view.dist_.clear();
        for (std::size_t i = 0; i < s.n_; ++i) {
            for (std::size_t j = i + 1; j < s.n_; ++j) {
                const double d = view.dist(i, j);
                s.dist_[i * s.n_ + j] = d;
                s.dist_[j * s.n_ + i] = d;
            }
        }
    }

    // Coincident points break d(x, y) > 0 for x != y. Quadratic scan.
    for (std::size_t i = 0; i < s.n_; ++i) {
        for (std::size_t j = i + 1; j < s.n_; ++j) {
            if (!(s.dist(i, j) > 0.0)) {
                std::ostringstream os;
                os << "points " << i << " and " << j << " coincide";
                throw Error(ErrorKind::Validation, os.str());
            }
        }
    }

    if (s.n_ <= kTriangleCheckCoordLimit) {
        const double tol = triangle_rel_tol * s.diameter();
        for (std::size_t i = 0; i < s.n_; ++i)
            for (std::size_t j = 0; j < s.n_; ++j)
                for (std::size_t k = 0; k < s.n_; ++k)
                    if (s.dist(i, k) > s.dist(i, j) + s.dist(j, k) + tol) {
                        std::ostringstream os;
                        os << "triangle inequality violated at (" << i << "," << j << "," << k << ")";
                        throw Error(ErrorKind::Validation, os.str());
                    }
    }
    return s;
}

MetricMeasureSpace MetricMeasureSpace::from_matrix(const std::vector<std::vector<double>>& dist,
                                                   std::vector<double> mass) {
    MetricMeasureSpace s;
    s.n_ = dist.size();
    if (s.n_ == 0) throw Error(ErrorKind::Schema, "space must contain at least one point");
    if (s.n_ > kDenseLimit) {
        throw Error(ErrorKind::Schema, "explicit distance matrices are limited to 4096 points; supply coords");
    }
    validate_masses(mass, s.n_);
    s.dist_.assign(s.n_ * s.n_, 0.0);
    for (std::size_t i = 0; i < s.n_; ++i) {
        if (dist[i].size() != s.n_) {
            std::ostringstream os;
            os << "distance row " << i << " has " << dist[i].size() << " entries, expected " << s.n_;
            throw Error(ErrorKind::Schema, os.str());
        }
        for (std::size_t j = 0; j < s.n_; ++j) s.dist_[i * s.n_ + j] = dist[i][j];
    }
    for (std::size_t i = 0; i < s.n_; ++i) {
        if (s.dist_[i * s.n_ + i] != 0.0) {
            std::ostringstream os;
            os << "nonzero diagonal distance at " << i;
            throw Error(ErrorKind::Validation, os.str());
        }
        for (std::size_t j = i + 1; j < s.n_; ++j) {
            const double a = s.dist_[i * s.n_ + j];
            const double b = s.dist_[j * s.n_ + i];
            if (a != b) {
                std::ostringstream os;
                os << "asymmetric distance matrix at (" << i << "," << j << ")";
                throw Error(ErrorKind::Validation, os.str());
            }
            if (!std::isfinite(a) || a <= 0.0) {
                std::ostringstream os;
                os << "distance between distinct points " << i << " and " << j << " must be positive";
                throw Error(ErrorKind::Validation, os.str());
            }
        }
    }
    for (std::size_t i = 0; i < s.n_; ++i)
        for (std::size_t j = 0; j < s.n_; ++j)
            for (std::size_t k = 0; k < s.n_; ++k)
                if (s.dist_[i * s.n_ + k] > s.dist_[i * s.n_ + j] + s.dist_[j * s.n_ + k]) {
                    std::ostringstream os;
                    os << "triangle inequality violated at (" << i << "," << j << "," << k << ")";
                    throw Error(ErrorKind::Validation, os.str());
                }
    s.mass_ = std::move(mass);
    return s;
}

void MetricMeasureSpace::check_id(PointId x) const {
    if (x >= n_) {
        std::ostringstream os;
        os << "point id " << x << " out of range (n = " << n_ << ")";
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
}

double MetricMeasureSpace::dist(PointId a, PointId b) const {
    if (!dist_.empty()) return dist_[a * n_ + b];
    double acc = 0.0;
    const double* pa = coords_.data() + a * dim_;
    const double* pb = coords_.data() + b * dim_;
    for (std::size_t k = 0; k < dim_; ++k) {
        const double diff = pa[k] - pb[k];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

double MetricMeasureSpace::total_mass() const {
    double total = 0.0;
    for (double m : mass_) total += m;
    return total;
}

std::span<const double> MetricMeasureSpace::coord(PointId x) const {
    check_id(x);
    if (dim_ == 0) throw Error(ErrorKind::InvalidArgument, "space has no ambient coordinates");
    return {coords_.data() + x * dim_, dim_};
}

double MetricMeasureSpace::diameter() const {
    double best = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j) best = std::max(best, dist(i, j));
    return best;
}

double MetricMeasureSpace::min_positive_distance() const {
    double best = kInf;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j) best = std::min(best, dist(i, j));
    return best;
}

MetricMeasureSpace MetricMeasureSpace::scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw Error(ErrorKind::InvalidArgument, "scale factor must be positive and finite");
    }
    MetricMeasureSpace s = *this;
    for (double& c : s.coords_) c *= factor;
    for (double& d : s.dist_) d *= factor;
    return s;
}

MetricMeasureSpace MetricMeasureSpace::with_masses(std::vector<double> mass) const {
    validate_masses(mass, n_);
    MetricMeasureSpace s = *this;
    s.mass_ = std::move(mass);
    return s;
}

double dist_to_set(const MetricMeasureSpace& space, PointId x, const PointSet& a) {
    double best = kInf;
    for (PointId y : a) best = std::min(best, space.dist(x, y));
    return best;
}

double dist_between_sets(const MetricMeasureSpace& space, const PointSet& a, const PointSet& b) {
    double best = kInf;
    for (PointId x : a) best = std::min(best, dist_to_set(space, x, b));
    return best;
}

PointSet ball(const MetricMeasureSpace& space, PointId x0, double r, bool closed) {
    std::vector<PointId> out;
    for (PointId y = 0; y < space.size(); ++y) {
        const double d = space.dist(x0, y);
        if (d < r || (closed && d <= r)) out.push_back(y);
    }
    return PointSet(std::move(out));
}

double exhaustion_budget(double eps, double p, int level) {
    return std::pow(eps, p) * std::pow(2.0, -4.0 * p * level);
}

std::vector<PointSet> exhaustion(const MetricMeasureSpace& space, PointId x0, double eps, double p,
                                 const std::optional<PointSet>& k0) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "exhaustion requires eps > 0");
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "exhaustion requires p >= 1");
    if (x0 >= space.size()) throw Error(ErrorKind::InvalidArgument, "exhaustion centre out of range");

    std::vector<PointSet> levels;
    PointSet current = k0 ? *k0 : PointSet{};
    for (int i = 1;; ++i) {
        current = set_union(current, ball(space, x0, static_cast<double>(i) + 1.0));
        levels.push_back(current);
        if (current.size() == space.size()) break;
    }
    return levels;
}

SpatialIndex::SpatialIndex(const MetricMeasureSpace& space, double cell)
    : space_(&space), dim_(space.dim()), cell_(cell) {
    if (!space.has_coords()) throw Error(ErrorKind::Unsupported, "spatial index needs ambient coordinates");
    if (!(cell > 0.0)) throw Error(ErrorKind::InvalidArgument, "cell size must be positive");
    const std::size_t n = space.size();
    origin_.assign(dim_, kInf);
    std::vector<double> top(dim_, -kInf);
    for (PointId x = 0; x < n; ++x) {
        auto c = space.coord(x);
        for (std::size_t k = 0; k < dim_; ++k) {
            origin_[k] = std::min(origin_[k], c[k]);
            top[k] = std::max(top[k], c[k]);
        }
    }
    std::size_t cells = 1;
    extent_.resize(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
        extent_[k] = static_cast<long long>(std::floor((top[k] - origin_[k]) / cell_)) + 1;
        cells *= static_cast<std::size_t>(extent_[k]);
    }
    if (cells > 16 * n + 1024) throw Error(ErrorKind::InvalidArgument, "spatial index cell size too small");
    std::vector<std::size_t> bucket(n);
    start_.assign(cells + 1, 0);
    for (PointId x = 0; x < n; ++x) {
        auto c = space.coord(x);
        std::size_t flat = 0;
        for (std::size_t k = dim_; k-- > 0;) {
            const long long q = std::min(cell_coord(c[k], k), extent_[k] - 1);
            flat = flat * static_cast<std::size_t>(extent_[k]) + static_cast<std::size_t>(q);
        }
        bucket[x] = flat;
        ++start_[flat + 1];
    }
    for (std::size_t b = 0; b < cells; ++b) start_[b + 1] += start_[b];
    order_.resize(n);
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (PointId x = 0; x < n; ++x) order_[fill[bucket[x]]++] = x;
}

Neighbors neighbor_lists(const MetricMeasureSpace& space, double delta) {
    const std::size_t n = space.size();
    Neighbors out(n);
    if (space.has_coords() && n > 512 && delta > 0.0 && std::isfinite(delta)) {
        const double diam_guess = [&] {
            double span = 0.0;
            for (std::size_t k = 0; k < space.dim(); ++k) {
                double lo = kInf, hi = -kInf;
                for (PointId x = 0; x < n; ++x) {
                    lo = std::min(lo, space.coord(x)[k]);
                    hi = std::max(hi, space.coord(x)[k]);
                }
                span = std::max(span, hi - lo);
            }
            return span;
        }();
        // Cells no finer than the cloud allows; fall back to a scan otherwise.
        const double cell = std::max(delta, diam_guess / std::pow(static_cast<double>(n), 1.0 / space.dim()));
        if (diam_guess / cell < 4096.0) {
            SpatialIndex index(space, cell);
            for (PointId x = 0; x < n; ++x) {
                index.for_each_within(x, delta, [&](PointId y, double d) { out[x].emplace_back(y, d); });
                std::sort(out[x].begin(), out[x].end());
            }
            return out;
        }
    }
    for (PointId x = 0; x < n; ++x) {
        for (PointId y = x + 1; y < n; ++y) {
            const double d = space.dist(x, y);
            if (d <= delta) {
                out[x].emplace_back(y, d);
                out[y].emplace_back(x, d);
            }
        }
    }
    return out;
}

double connectivity_radius(const MetricMeasureSpace& space) {
    const std::size_t n = space.size();
    if (n <= 1) return 0.0;
    std::vector<double> best(n, kInf);
    std::vector<char> in_tree(n, 0);
    best[0] = 0.0;
    double bottleneck = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v)
            if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
        in_tree[u] = 1;
        bottleneck = std::max(bottleneck, best[u]);
        for (std::size_t v = 0; v < n; ++v)
            if (!in_tree[v]) best[v] = std::min(best[v], space.dist(u, v));
    }
    return bottleneck;
}

} // namespace mmpt
