#include "mmpt/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace mmpt {

DiscretePath::DiscretePath(std::vector<PointId> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "a path needs at least one node");
    std::unordered_set<PointId> seen;
    for (PointId x : nodes_) {
        if (!seen.insert(x).second) {
            throw Error(ErrorKind::InvalidArgument, "path repeats point " + std::to_string(x));
        }
    }
}

double mesh(const MetricMeasureSpace& space, const DiscretePath& path) {
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) m = std::max(m, space.dist(path[k], path[k + 1]));
    return m;
}

double length(const MetricMeasureSpace& space, const DiscretePath& path) {
    double len = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) len += space.dist(path[k], path[k + 1]);
    return len;
}

double diameter(const MetricMeasureSpace& space, const DiscretePath& path) {
    double d = 0.0;
    for (std::size_t a = 0; a < path.size(); ++a)
        for (std::size_t b = a + 1; b < path.size(); ++b) d = std::max(d, space.dist(path[a], path[b]));
    return d;
}

double discrete_integral(const MetricMeasureSpace& space, const DiscretePath& path, const ScalarField& g) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) sum += g[path[k]] * space.dist(path[k], path[k + 1]);
    return sum;
}

DiscretePath simplify_walk(const std::vector<PointId>& walk) {
    if (walk.empty()) throw Error(ErrorKind::InvalidArgument, "empty walk");
    std::vector<PointId> out;
    for (PointId x : walk) {
        auto it = std::find(out.begin(), out.end(), x);
        if (it != out.end()) {
            out.erase(it + 1, out.end());
        } else {
            out.push_back(x);
        }
    }
    return DiscretePath(std::move(out));
}

DiscretePath concatenate(const DiscretePath& a, const DiscretePath& b) {
    if (a.back() != b.front()) throw Error(ErrorKind::InvalidArgument, "paths do not share an endpoint");
    std::vector<PointId> out;
    std::unordered_set<PointId> seen;
    auto push = [&](PointId x) {
        if (!seen.insert(x).second) return false;
        out.push_back(x);
        return true;
    };
    for (PointId x : a) push(x);
    for (std::size_t k = 1; k < b.size(); ++k) {
        if (!push(b[k])) break;
    }
    return DiscretePath(std::move(out));
}

std::vector<double> PolylineCurve::at(double t) const {
    if (breakpoints.size() == 1 || t <= 0.0) return breakpoints.front();
    if (t >= 1.0) return breakpoints.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t l = static_cast<std::size_t>(it - times.begin()) - 1;
    l = std::min(l, times.size() - 2);
    const double span = times[l + 1] - times[l];
    const double s = span > 0.0 ? (t - times[l]) / span : 0.0;
    std::vector<double> out(breakpoints[l].size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = breakpoints[l][c] + s * (breakpoints[l + 1][c] - breakpoints[l][c]);
    }
    return out;
}

PolylineCurve interpolate(const MetricMeasureSpace& space, const DiscretePath& path) {
    if (!space.has_coords()) throw Error(ErrorKind::Unsupported, "interpolation needs ambient coordinates");
    PolylineCurve curve;
    for (PointId x : path) {
        auto c = space.coord(x);
        curve.breakpoints.emplace_back(c.begin(), c.end());
    }
    const double len = length(space, path);
    curve.speed = len;
    curve.times.assign(path.size(), 0.0);
    if (len > 0.0) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            acc += space.dist(path[k], path[k + 1]);
            curve.times[k + 1] = acc / len;
        }
        curve.times.back() = 1.0;
    }
    return curve;
}

double curve_integral(const PolylineCurve& curve, const AmbientField& g, int quad_n) {
    if (quad_n < 1) throw Error(ErrorKind::InvalidArgument, "quad_n must be at least 1");
    if (curve.speed <= 0.0) return 0.0;
    double total = 0.0;
    std::vector<double> pt;
    for (std::size_t l = 0; l + 1 < curve.breakpoints.size(); ++l) {
        const auto& a = curve.breakpoints[l];
        const auto& b = curve.breakpoints[l + 1];
        double seg = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) seg += (b[c] - a[c]) * (b[c] - a[c]);
        seg = std::sqrt(seg);
        if (seg == 0.0) continue;
        pt.resize(a.size());
        double acc = 0.0;
        for (int q = 0; q < quad_n; ++q) {
            const double s = (q + 0.5) / quad_n;
            for (std::size_t c = 0; c < a.size(); ++c) pt[c] = a[c] + s * (b[c] - a[c]);
            acc += g(pt);
        }
        total += acc * seg / quad_n;
    }
    return total;
}

namespace {

std::pair<PointId, double> nearest_point(const MetricMeasureSpace& space, const std::vector<double>& q) {
    PointId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (PointId x = 0; x < space.size(); ++x) {
        auto c = space.coord(x);
        double acc = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) acc += (c[i] - q[i]) * (c[i] - q[i]);
        if (acc < best_d) {
            best_d = acc;
            best = x;
        }
    }
    return {best, std::sqrt(best_d)};
}

} // namespace

RefinedPath refine_along(const MetricMeasureSpace& space, const DiscretePath& path, int k) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "subdivision count must be at least 1");
    if (!space.has_coords()) throw Error(ErrorKind::Unsupported, "refinement needs ambient coordinates");
    if (k == 1 || path.size() == 1) return {path, 0.0};
    std::vector<PointId> walk{path.front()};
    double snap = 0.0;
    for (std::size_t l = 0; l + 1 < path.size(); ++l) {
        auto a = space.coord(path[l]);
        auto b = space.coord(path[l + 1]);
        std::vector<double> q(a.size());
        for (int j = 1; j < k; ++j) {
            const double s = static_cast<double>(j) / k;
            for (std::size_t c = 0; c < a.size(); ++c) q[c] = a[c] + s * (b[c] - a[c]);
            auto [id, err] = nearest_point(space, q);
            snap = std::max(snap, err);
            if (id != walk.back()) walk.push_back(id);
        }
        if (path[l + 1] != walk.back()) walk.push_back(path[l + 1]);
    }
    return {simplify_walk(walk), snap};
}

} // namespace mmpt
