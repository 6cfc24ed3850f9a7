#include "mmpt/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mmpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier-compensated running sum; keeps reductions reproducible to ~1 ulp.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            c_ += (sum_ - t) + v;
        } else {
            c_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

void check_size(const MetricMeasureSpace& space, const ScalarField& f, const char* what) {
    if (f.size() != space.size()) {
        std::ostringstream os;
        os << what << " has " << f.size() << " values, expected " << space.size();
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
}

} // namespace

double lp_energy(const MetricMeasureSpace& space, const ScalarField& g, double p, const std::vector<char>* mask) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
    check_size(space, g, "field");
    CompensatedSum sum;
    for (PointId x = 0; x < space.size(); ++x) {
        if (mask && !(*mask)[x]) continue;
        const double a = std::abs(g[x]);
        if (a == 0.0) continue;
        sum.add((p == 2.0 ? a * a : std::pow(a, p)) * space.mass(x));
    }
    return sum.value();
}

double lp_norm(const MetricMeasureSpace& space, const ScalarField& g, double p) {
    return std::pow(lp_energy(space, g, p), 1.0 / p);
}

ModulusOfContinuity::ModulusOfContinuity(const MetricMeasureSpace& space, const ScalarField& f, const PointSet& k) {
    if (k.empty()) throw Error(ErrorKind::InvalidArgument, "modulus of continuity needs a nonempty K");
    std::vector<std::pair<double, double>> pairs;
    const auto& ids = k.members();
    pairs.reserve(ids.size() * (ids.size() - 1) / 2);
    for (std::size_t a = 0; a < ids.size(); ++a)
        for (std::size_t b = a + 1; b < ids.size(); ++b)
            pairs.emplace_back(space.dist(ids[a], ids[b]), std::abs(f[ids[a]] - f[ids[b]]));
    std::sort(pairs.begin(), pairs.end());
    double running = 0.0;
    for (const auto& [d, v] : pairs) {
        running = std::max(running, v);
        if (!jumps_.empty() && jumps_.back() == d) {
            values_.back() = running;
        } else if (values_.empty() || running > values_.back()) {
            jumps_.push_back(d);
            values_.push_back(running);
        }
    }
}

double ModulusOfContinuity::operator()(double delta) const {
    auto it = std::upper_bound(jumps_.begin(), jumps_.end(), delta);
    if (it == jumps_.begin()) return 0.0;
    return values_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
}

ScalarField lipschitz_regularization(const MetricMeasureSpace& space, const ScalarField& g, double i) {
    check_size(space, g, "density");
    const std::size_t n = space.size();
    ScalarField out(g);
    const double gmin = n ? *std::min_element(g.begin(), g.end()) : 0.0;
    if (space.has_coords() && n > 512) {
        // Only points closer than (g(x) - min g) / i can improve on g(x).
        double span = 0.0;
        for (std::size_t k = 0; k < space.dim(); ++k) {
            double lo = kInf, hi = -kInf;
            for (PointId x = 0; x < n; ++x) {
                lo = std::min(lo, space.coord(x)[k]);
                hi = std::max(hi, space.coord(x)[k]);
            }
            span = std::max(span, hi - lo);
        }
        const double cell = std::max(span / std::pow(static_cast<double>(n), 1.0 / space.dim()), 1e-300);
        SpatialIndex index(space, cell);
        for (PointId x = 0; x < n; ++x) {
            const double r = (g[x] - gmin) / i;
            if (!(r > 0.0)) continue;
            double best = g[x];
            index.for_each_within(x, r, [&](PointId y, double d) { best = std::min(best, g[y] + i * d); });
            out[x] = best;
        }
        return out;
    }
    for (PointId x = 0; x < n; ++x) {
        double best = g[x];
        for (PointId y = 0; y < n; ++y) {
            if (y == x) continue;
            best = std::min(best, g[y] + i * space.dist(x, y));
        }
        out[x] = best;
    }
    return out;
}

GoodSequence::GoodSequence(const MetricMeasureSpace& space, ScalarField g, double eps, double p, PointId x0,
                           const std::optional<PointSet>& k)
    : space_(&space), g_(std::move(g)), eps_(eps), p_(p), x0_(x0) {
    check_size(space, g_, "density");
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::InvalidArgument, "good sequence needs eps in (0,1)");
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
    if (x0 >= space.size()) throw Error(ErrorKind::InvalidArgument, "centre out of range");
    for (double v : g_) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::InvalidArgument, "good sequence needs a finite nonnegative density");
        }
    }
    eps_internal_ = eps / (p * std::pow(lp_norm(space, g_, p) + 1.0, p - 1.0));
    levels_ = exhaustion(space, x0, eps, p, k);

    const std::size_t n = space.size();
    d0_.resize(n);
    double max_d0 = 0.0;
    for (PointId x = 0; x < n; ++x) {
        d0_[x] = space.dist(x0, x);
        max_d0 = std::max(max_d0, d0_[x]);
    }
    const int last_level = static_cast<int>(levels_.size());
    stable_from_ = std::max(last_level, static_cast<int>(std::ceil(max_d0))) + 1;

    for (const PointSet& e : levels_) {
        ScalarField d(n);
        for (PointId x = 0; x < n; ++x) d[x] = dist_to_set(space, x, e);
        dist_e_.push_back(std::move(d));
    }
    ball_mass_.assign(static_cast<std::size_t>(stable_from_) + 1, 0.0);
    for (int m = 1; m <= stable_from_; ++m) {
        CompensatedSum s;
        for (PointId x = 0; x < n; ++x)
            if (d0_[x] < m + 1.0) s.add(space.mass(x));
        ball_mass_[static_cast<std::size_t>(m)] = s.value();
    }

    added_.push_back(ScalarField(n, 0.0));
    for (int m = 1; m < stable_from_; ++m) {
        ScalarField next = added_.back();
        for (PointId x = 0; x < n; ++x) next[x] += term(m, x);
        added_.push_back(std::move(next));
    }
    // Beyond stable_from_ - 1 every term is the constant eps' 8^{-m} / (mu(X) + 1).
    const double tail = eps_internal_ * std::pow(8.0, -(stable_from_ - 1)) / 7.0 / (space.total_mass() + 1.0);
    limit_.resize(n);
    for (PointId x = 0; x < n; ++x) limit_[x] = g_[x] + added_.back()[x] + tail;
}

double GoodSequence::eta(int n) const {
    const double ball = n < stable_from_ ? ball_mass_[static_cast<std::size_t>(n)] : space_->total_mass();
    return eps_internal_ * std::pow(8.0, -n) / (ball + 1.0);
}

double GoodSequence::term(int n, PointId x) const {
    const double psi = std::max(0.0, std::min(n + 1.0 - d0_[x], 1.0));
    if (psi == 0.0) return 0.0;
    double gap = 0.0;
    if (n <= static_cast<int>(dist_e_.size())) gap = std::min(1.0, dist_e_[static_cast<std::size_t>(n - 1)][x]);
    return (n * gap + eta(n)) * psi;
}

const ScalarField& GoodSequence::level(int i) {
    if (i < 1) throw Error(ErrorKind::InvalidArgument, "good sequence levels start at 1");
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second;
    const std::size_t n = space_->size();
    while (static_cast<int>(added_.size()) <= i) {
        const int m = static_cast<int>(added_.size());
        ScalarField next = added_.back();
        for (PointId x = 0; x < n; ++x) next[x] += term(m, x);
        added_.push_back(std::move(next));
    }
    ScalarField out = lipschitz_regularization(*space_, g_, static_cast<double>(i));
    // The limit is summed in a different order; clamping removes ulp excesses.
    for (PointId x = 0; x < n; ++x) out[x] = std::min(out[x] + added_[static_cast<std::size_t>(i)][x], limit_[x]);
    return cache_.emplace(i, std::move(out)).first->second;
}

double GoodSequence::positivity_margin(const PointSet& a) const {
    double margin = kInf;
    for (PointId x : a) margin = std::min(margin, limit_[x] - g_[x]);
    return margin;
}

PenaltyFunction::PenaltyFunction(std::vector<int> indices, double m, ModulusOfContinuity omega)
    : indices_(std::move(indices)), m_(m), omega_(std::move(omega)) {
    if (indices_.size() < 3) throw Error(ErrorKind::InvalidArgument, "penalty needs at least three indices");
}

double PenaltyFunction::operator()(double r) const {
    if (r <= 0.0) return 0.0;
    const std::size_t count = indices_.size();
    auto inv = [&](std::size_t n) { return 1.0 / indices_[n - 1]; };
    if (r >= inv(3)) return 2.0 * m_;
    for (std::size_t n = 3; n < count; ++n) {
        if (r >= inv(n + 1)) return omega_(std::ldexp(1.0, 1 - static_cast<int>(n))) + omega_(r);
    }
    // Below the last selected threshold the deepest bracket is continued.
    return omega_(std::ldexp(1.0, 1 - static_cast<int>(count))) + omega_(r);
}

std::vector<double> PenaltyFunction::thresholds() const {
    std::vector<double> out;
    for (int i : indices_) out.push_back(1.0 / i);
    return out;
}

int dyadic_shell(double r) {
    if (r >= 0.5) return 0;
    int e = 0;
    std::frexp(r, &e);
    return -e;
}

int required_index_depth(const MetricMeasureSpace& space, const PointSet& k, const PointSet& where) {
    int depth = 3;
    for (PointId x : where) {
        if (k.contains(x)) continue;
        depth = std::max(depth, dyadic_shell(dist_to_set(space, x, k)) + 2);
    }
    return depth;
}

AuxTriple build_aux_triple(const MetricMeasureSpace& space, const ScalarField& f, GoodSequence& seq,
                           const PointSet& k, const std::vector<int>& indices) {
    if (k.empty()) throw Error(ErrorKind::InvalidArgument, "auxiliary functions need a nonempty K");
    check_size(space, f, "f");
    for (std::size_t n = 0; n < indices.size(); ++n) {
        if (indices[n] < 1 || (n > 0 && indices[n] <= indices[n - 1])) {
            throw Error(ErrorKind::InvalidArgument, "index sequence must be positive and strictly increasing");
        }
    }
    const int depth = required_index_depth(space, k, PointSet::all(space.size()));
    if (static_cast<int>(indices.size()) < depth) {
        std::ostringstream os;
        os << "index sequence has " << indices.size() << " entries; the populated shells need " << depth;
        throw Error(ErrorKind::InvalidArgument, os.str());
    }

    AuxTriple aux;
    aux.indices = indices;
    for (PointId x : k) aux.M = std::max(aux.M, std::abs(f[x]));
    aux.penalty = PenaltyFunction(indices, aux.M, ModulusOfContinuity(space, f, k));

    auto idx = [&](int n) { return indices[static_cast<std::size_t>(n - 1)]; };
    const std::size_t npts = space.size();
    aux.D.assign(npts, 0.0);
    aux.G.assign(npts, 0.0);
    aux.shell.assign(npts, -1);
    for (PointId x = 0; x < npts; ++x) {
        if (k.contains(x)) {
            aux.G[x] = seq.limit()[x];
            continue;
        }
        const double dk = dist_to_set(space, x, k);
        const int n = dyadic_shell(dk);
        aux.shell[x] = n;
        if (n == 0) {
            aux.D[x] = std::min(1.0 / idx(3), 0.125);
        } else {
            aux.D[x] = std::min(1.0 / idx(n + 2), std::ldexp(1.0, -n - 3));
        }
        aux.G[x] = seq.level(n < 3 ? idx(3) : idx(n))[x];
    }
    return aux;
}

std::vector<PropertyCheck> validate_aux_triple(const MetricMeasureSpace& space, const AuxTriple& aux,
                                               GoodSequence& seq, const PointSet& k) {
    const std::size_t npts = space.size();
    const int count = static_cast<int>(aux.indices.size());
    auto idx = [&](int n) { return aux.indices[static_cast<std::size_t>(n - 1)]; };
    std::vector<double> dk(npts);
    for (PointId x = 0; x < npts; ++x) dk[x] = k.contains(x) ? 0.0 : dist_to_set(space, x, k);

    std::vector<PropertyCheck> out;
    auto record = [&](const std::string& name, double slack, const std::string& detail = {}) {
        if (slack == kInf) slack = 0.0;
        out.push_back({name, slack >= 0.0, slack, slack >= 0.0 ? std::string{} : detail});
    };
    auto where = [](PointId x) { return "point " + std::to_string(x); };

    {
        double slack = kInf;
        std::string detail;
        for (PointId x = 0; x < npts; ++x) {
            const double s = dk[x] / 4.0 - aux.D[x];
            if (s < slack) {
                slack = s;
                detail = where(x);
            }
        }
        record("gap.quarter_distance", slack, detail);
    }
    {
        double slack = kInf;
        std::string detail;
        const double cap = 1.0 / idx(3);
        for (PointId x = 0; x < npts; ++x) {
            if (k.contains(x)) continue;
            const double s = aux.D[x] > 0.0 ? cap - aux.D[x] : -1.0;
            if (s < slack) {
                slack = s;
                detail = where(x);
            }
        }
        record("gap.positive_bounded", slack, detail);
    }
    {
        double slack = 0.0;
        std::string detail;
        for (PointId x = 0; x < npts; ++x) {
            if (k.contains(x) || dk[x] >= 0.5) continue;
            const int n = dyadic_shell(dk[x]);
            const double expect = std::min(1.0 / idx(n + 2), std::ldexp(1.0, -n - 3));
            if (aux.D[x] != expect) {
                slack = -std::abs(aux.D[x] - expect);
                detail = where(x);
            }
        }
        record("gap.dyadic_formula", slack, detail);
    }
    {
        double slack = kInf;
        std::string detail;
        const ScalarField& g3 = seq.level(idx(3));
        for (PointId x = 0; x < npts; ++x) {
            const double s = aux.G[x] - g3[x];
            if (s < slack) {
                slack = s;
                detail = where(x);
            }
        }
        record("gradient.above_i3", slack, detail);
    }
    {
        double lower = kInf;
        double upper = kInf;
        std::string dl;
        std::string du;
        for (int n = 3; n <= count; ++n) {
            const ScalarField& gn = seq.level(idx(n));
            const double outer = std::ldexp(1.0, -n);
            const double inner = std::ldexp(1.0, -n - 1);
            for (PointId x = 0; x < npts; ++x) {
                if (n > 3 && dk[x] <= outer && aux.G[x] - gn[x] < lower) {
                    lower = aux.G[x] - gn[x];
                    dl = where(x) + " level " + std::to_string(n);
                }
                if (dk[x] >= inner && gn[x] - aux.G[x] < upper) {
                    upper = gn[x] - aux.G[x];
                    du = where(x) + " level " + std::to_string(n);
                }
            }
        }
        record("gradient.near_levels", lower, dl);
        record("gradient.far_levels", upper, du);
    }
    {
        double slack = 0.0;
        std::string detail;
        for (PointId x : k) {
            if (aux.G[x] != seq.limit()[x]) {
                slack = -std::abs(aux.G[x] - seq.limit()[x]);
                detail = where(x);
            }
        }
        record("gradient.limit_on_k", slack, detail);
    }

    // Penalty clauses at every distance an extension can query, plus thresholds.
    std::vector<double> radii;
    for (PointId x = 0; x < npts; ++x)
        for (PointId y = x + 1; y < npts; ++y) radii.push_back(space.dist(x, y));
    for (int n = 1; n <= count; ++n) radii.push_back(1.0 / idx(n));
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    const PenaltyFunction& pen = aux.penalty;
    const ModulusOfContinuity& omega = pen.omega();
    {
        double plateau = kInf;
        double bracket = kInf;
        double dominate = kInf;
        std::string dp;
        std::string db;
        std::string dd;
        for (double r : radii) {
            const double v = pen(r);
            if (r >= 1.0 / idx(3) && v - 2.0 * aux.M < plateau) {
                plateau = v - 2.0 * aux.M;
                dp = "r = " + std::to_string(r);
            }
            for (int n = 3; n < count; ++n) {
                if (r >= 1.0 / idx(n + 1) && r < 1.0 / idx(n)) {
                    const double s = v - (omega(std::ldexp(1.0, 1 - n)) + omega(r));
                    if (s < bracket) {
                        bracket = s;
                        db = "r = " + std::to_string(r);
                    }
                }
            }
            if (v - omega(r) < dominate) {
                dominate = v - omega(r);
                dd = "r = " + std::to_string(r);
            }
        }
        record("penalty.plateau", plateau == kInf ? 0.0 : plateau, dp);
        record("penalty.bracket", bracket == kInf ? 0.0 : bracket, db);
        record("penalty.dominates_omega", dominate, dd);
        record("penalty.zero_at_origin", pen(0.0) == 0.0 ? 0.0 : -pen(0.0), "P(0) != 0");
    }
    return out;
}

PartitionOfUnity partition_of_unity(const MetricMeasureSpace& space, const PointSet& boundary, int levels) {
    if (levels < 0) throw Error(ErrorKind::InvalidArgument, "levels must be nonnegative");
    const std::size_t n = space.size();
    PartitionOfUnity out;
    out.psi.assign(static_cast<std::size_t>(levels) + 1, ScalarField(n, 0.0));
    out.covered.assign(n, 1);
    if (boundary.empty()) {
        std::fill(out.psi[0].begin(), out.psi[0].end(), 1.0);
        return out;
    }
    std::vector<double> db(n);
    for (PointId x = 0; x < n; ++x) db[x] = dist_to_set(space, x, boundary);
    for (PointId x = 0; x < n; ++x) out.covered[x] = db[x] >= std::ldexp(1.0, -levels) ? 1 : 0;

    std::vector<double> used(n, 0.0);
    for (int lvl = 0; lvl <= levels; ++lvl) {
        const double radius = std::ldexp(1.0, -(lvl + 1));
        std::vector<PointId> zone;
        for (PointId z = 0; z < n; ++z)
            if (db[z] < radius) zone.push_back(z);
        const double scale = std::ldexp(1.0, lvl + 1);
        for (PointId x = 0; x < n; ++x) {
            double dz = kInf;
            for (PointId z : zone) dz = std::min(dz, space.dist(x, z));
            const double factor = std::min(1.0, scale * dz);
            const double v = (1.0 - used[x]) * factor;
            out.psi[static_cast<std::size_t>(lvl)][x] = v;
        }
        for (PointId x = 0; x < n; ++x) used[x] += out.psi[static_cast<std::size_t>(lvl)][x];
    }
    return out;
}

ScalarField truncate_cutoff(const MetricMeasureSpace& space, const ScalarField& f, double m, PointId x0) {
    if (!(m > 0.0)) throw Error(ErrorKind::InvalidArgument, "truncation level must be positive");
    check_size(space, f, "f");
    ScalarField out(space.size());
    for (PointId x = 0; x < space.size(); ++x) {
        const double cut = std::max(std::min(2.0 - space.dist(x0, x) / m, 1.0), 0.0);
        out[x] = cut * std::min(std::max(f[x], -m), m);
    }
    return out;
}

ScalarField local_lip_gradient(const Neighbors& nbrs, const ScalarField& u) {
    ScalarField g(u.size(), 0.0);
    for (PointId x = 0; x < u.size(); ++x) {
        double best = 0.0;
        for (const auto& [y, d] : nbrs[x]) best = std::max(best, std::abs(u[x] - u[y]) / d);
        g[x] = best;
    }
    return g;
}

ScalarField local_lip_gradient(const MetricMeasureSpace& space, const ScalarField& u, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    check_size(space, u, "u");
    return local_lip_gradient(neighbor_lists(space, delta), u);
}

} // namespace mmpt
