#include "mmpt/infimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

namespace mmpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using QueueItem = std::pair<double, PointId>;
using MinQueue = std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>;

void check_field(const MetricMeasureSpace& space, const ScalarField& f, const char* what) {
    if (f.size() != space.size()) {
        std::ostringstream os;
        os << what << " has " << f.size() << " values, expected " << space.size();
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
}

} // namespace

std::vector<PointId> ShortestPaths::walk_to(PointId x) const {
    std::vector<PointId> out;
    if (!reached(x)) return out;
    for (PointId cur = x; cur != kNoPoint; cur = parent[cur]) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
}

ShortestPaths shortest_paths(const Neighbors& nbrs, const ScalarField& weight, const std::vector<Seed>& seeds,
                             const DijkstraOptions& options) {
    const std::size_t n = nbrs.size();
    ShortestPaths sp;
    sp.label.assign(n, kInf);
    sp.parent.assign(n, kNoPoint);
    sp.origin.assign(n, kNoPoint);
    std::vector<char> settled(n, 0);
    MinQueue queue;

    auto allowed = [&](PointId x) { return !options.allowed || (*options.allowed)[x]; };
    for (const Seed& s : seeds) {
        if (!allowed(s.node)) continue;
        if (s.label < sp.label[s.node] || (s.label == sp.label[s.node] && s.origin < sp.origin[s.node])) {
            sp.label[s.node] = s.label;
            sp.origin[s.node] = s.origin;
            queue.emplace(s.label, s.node);
        }
    }
    while (!queue.empty()) {
        auto [lab, u] = queue.top();
        queue.pop();
        if (settled[u] || lab > sp.label[u]) continue;
        settled[u] = 1;
        if (options.terminal && (*options.terminal)[u]) continue;
        const double w = weight[u];
        if (!(w < kInf)) continue;
        const double bound = options.step_bound ? (*options.step_bound)[u] : kInf;
        for (const auto& [v, d] : nbrs[u]) {
            if (d > bound || settled[v] || !allowed(v)) continue;
            const double cand = lab + w * d;
            if (cand < sp.label[v]) {
                sp.label[v] = cand;
                sp.parent[v] = u;
                sp.origin[v] = sp.origin[u];
                queue.emplace(cand, v);
            }
        }
    }
    return sp;
}

ShortestPaths infimal_paths(const Neighbors& nbrs, const PointSet& e, const ScalarField& g, const ScalarField& h) {
    std::vector<Seed> seeds;
    seeds.reserve(e.size());
    for (PointId x : e) seeds.push_back({x, h[x], x});
    return shortest_paths(nbrs, g, seeds);
}

ScalarField infimal_path_value(const MetricMeasureSpace& space, const PointSet& e, const ScalarField& g,
                               const ScalarField& h, double delta, double m) {
    if (e.empty()) throw Error(ErrorKind::InvalidArgument, "source set must be nonempty");
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    check_field(space, g, "g");
    check_field(space, h, "h");
    for (double v : g) {
        if (!(v >= 0.0)) throw Error(ErrorKind::InvalidArgument, "g must be nonnegative");
    }
    auto sp = infimal_paths(neighbor_lists(space, delta), e, g, h);
    ScalarField f(space.size());
    for (PointId x = 0; x < space.size(); ++x) f[x] = std::min(sp.label[x], m);
    return f;
}

ScalarField admissible_extension_value(const MetricMeasureSpace& space, const PointSet& c, const PointSet& v,
                                       const PointSet& k, const ScalarField& f0, const AuxTriple& aux, double m) {
    check_field(space, f0, "f0");
    check_field(space, aux.D, "D");
    check_field(space, aux.G, "G");
    if (!is_subset(c, v)) throw Error(ErrorKind::InvalidArgument, "C must be contained in V");
    const std::size_t n = space.size();
    const auto vmask = v.indicator(n);

    double max_step = 0.0;
    for (PointId x : v) max_step = std::max(max_step, aux.D[x]);
    const Neighbors nbrs = max_step > 0.0 ? neighbor_lists(space, max_step) : Neighbors(n);
    DijkstraOptions opts;
    opts.step_bound = &aux.D;

    auto jump = [&](PointId from, PointId to) {
        const double d = space.dist(from, to);
        return f0[from] + aux.penalty(d) + aux.G[from] * d;
    };

    ScalarField best(n, kInf);
    for (PointId x : c) best[x] = f0[x];

    // Sources in K: D vanishes on K, so no admissible path returns to K after
    // its first jump and all K sources can share one run.
    if (!k.empty()) {
        std::vector<Seed> seeds;
        for (PointId y : v) {
            double lab = kInf;
            PointId from = kNoPoint;
            for (PointId x : k) {
                if (x == y || !c.contains(x)) continue;
                const double val = jump(x, y);
                if (val < lab) {
                    lab = val;
                    from = x;
                }
            }
            if (from != kNoPoint) seeds.push_back({y, lab, from});
        }
        opts.allowed = &vmask;
        auto sp = shortest_paths(nbrs, aux.G, seeds, opts);
        for (PointId y : v) best[y] = std::min(best[y], sp.label[y]);
    }

    // Remaining sources: one run each with the source removed, so paths stay simple.
    std::vector<char> mask = vmask;
    for (PointId x : c) {
        if (k.contains(x)) continue;
        std::vector<Seed> seeds;
        bool useful = false;
        for (PointId y : v) {
            if (y == x) continue;
            const double val = jump(x, y);
            if (val < m) useful = true;
            seeds.push_back({y, val, x});
        }
        if (!useful) continue;
        mask[x] = 0;
        opts.allowed = &mask;
        auto sp = shortest_paths(nbrs, aux.G, seeds, opts);
        mask[x] = 1;
        for (PointId y : v) best[y] = std::min(best[y], sp.label[y]);
    }

    ScalarField out(n, 0.0);
    for (PointId y : v) out[y] = std::min(m, best[y]);
    return out;
}

UgCheck discrete_ug_check(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& g, double delta,
                          double big_delta, const PointSet& c, const PointSet& v, double tol) {
    check_field(space, f, "f");
    check_field(space, g, "g");
    if (!is_subset(c, v)) throw Error(ErrorKind::InvalidArgument, "C must be contained in V");
    const auto vmask = v.indicator(space.size());
    const Neighbors nbrs = neighbor_lists(space, delta);
    DijkstraOptions opts;
    opts.allowed = &vmask;

    UgCheck out;
    for (PointId a : c) {
        auto sp = shortest_paths(nbrs, g, {{a, 0.0, a}}, opts);
        for (PointId b : c) {
            if (space.dist(a, b) <= big_delta) continue;
            ++out.pairs_checked;
            const double slack = sp.label[b] - std::abs(f[b] - f[a]);
            out.worst_slack = std::min(out.worst_slack, slack);
            if (slack < -tol) {
                out.pass = false;
                out.witness = DiscretePath(sp.walk_to(b));
                return out;
            }
        }
    }
    return out;
}

IndexSelection select_indices(const MetricMeasureSpace& space, const ScalarField& f, GoodSequence& seq,
                              const PointSet& c, const PointSet& v, int n_max, int cap, double tol) {
    if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be at least 1");
    if (cap < 1) throw Error(ErrorKind::InvalidArgument, "index cap must be at least 1");
    IndexSelection out;
    int prev = 0;
    for (int n = 1; n <= n_max; ++n) {
        const double big_delta = std::ldexp(1.0, -n);
        bool found = false;
        for (int i = prev + 1; i <= prev + cap; ++i) {
            auto check = discrete_ug_check(space, f, seq.level(i), 1.0 / i, big_delta, c, v, tol);
            if (check.pass) {
                out.indices.push_back(i);
                out.worst_slack.push_back(check.worst_slack);
                prev = i;
                found = true;
                break;
            }
        }
        if (!found) {
            std::ostringstream os;
            os << "index search cap exhausted at n = " << n << ", Delta = " << big_delta << " (tried "
               << prev + 1 << ".." << prev + cap << ")";
            throw Error(ErrorKind::CapExhausted, os.str());
        }
    }
    return out;
}

} // namespace mmpt
