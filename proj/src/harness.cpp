#include "mmpt/harness.hpp"

#include "mmpt/fields.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace mmpt {

void GridSpec::validate() const {
    if (n < 4) throw Error(ErrorKind::Validation, "grid resolution must be at least 4");
    if (connectivity != 4 && connectivity != 8) throw Error(ErrorKind::Validation, "connectivity must be 4 or 8");
    if (domain == GridDomain::Annulus && !(r > 0.0 && r < R)) {
        throw Error(ErrorKind::Validation, "annulus radii must satisfy 0 < r < R");
    }
}

GridInstance make_grid_condenser(const GridSpec& grid, double p) {
    grid.validate();
    std::vector<std::vector<double>> coords;
    std::vector<PointId> e, f;
    double h = 0.0;
    if (grid.domain == GridDomain::Square) {
        h = 1.0 / grid.n;
        for (int j = 0; j <= grid.n; ++j) {
            for (int i = 0; i <= grid.n; ++i) {
                if (i == 0) e.push_back(coords.size());
                if (i == grid.n) f.push_back(coords.size());
                coords.push_back({i * h, j * h});
            }
        }
    } else {
        h = 2.0 * grid.R / grid.n;
        const int k_max = grid.n / 2 + 1;
        for (int l = -k_max; l <= k_max; ++l) {
            for (int k = -k_max; k <= k_max; ++k) {
                const double x = k * h, y = l * h;
                const double rad = std::hypot(x, y);
                if (rad > grid.R + 1.01 * h) continue;
                if (rad <= grid.r) e.push_back(coords.size());
                if (rad >= grid.R) f.push_back(coords.size());
                coords.push_back({x, y});
            }
        }
    }
    if (e.empty() || f.empty()) throw Error(ErrorKind::Validation, "E or F is empty at this resolution");
    const std::size_t count = coords.size();
    GridInstance out{MetricMeasureSpace::from_coords(std::move(coords), std::vector<double>(count, h * h)), {}, h};
    out.condenser.E = PointSet(std::move(e), SetRole::E);
    out.condenser.F = PointSet(std::move(f), SetRole::F);
    out.condenser.p = p;
    out.condenser.delta = (grid.connectivity == 8 ? std::sqrt(2.0) : 1.0) * 1.01 * h;
    return out;
}

GridInstance random_condenser(std::uint64_t seed, std::size_t n, double p) {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "random condenser needs at least 2 points");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> coords;
    std::vector<double> mass;
    for (std::size_t i = 0; i < n; ++i) {
        coords.push_back({u(rng), u(rng)});
        mass.push_back(0.5 + 1.5 * u(rng));
    }
    GridInstance inst{MetricMeasureSpace::from_coords(coords, mass), {}, 0.0};
    std::vector<PointId> e{0}, f{n - 1};
    if (n >= 4 && u(rng) < 0.5) e.push_back(1);
    if (n >= 5 && u(rng) < 0.5) f.push_back(n - 2);
    inst.condenser.E = PointSet(e, SetRole::E);
    inst.condenser.F = PointSet(f, SetRole::F);
    inst.condenser.p = p;
    inst.condenser.delta = connectivity_radius(inst.space) * (1.0 + 0.8 * u(rng));
    inst.spacing = inst.space.min_positive_distance();
    return inst;
}

double ring_capacity_oracle(double r, double R, double p) {
    if (p != 2.0) throw Error(ErrorKind::Unsupported, "the ring oracle is only available for p = 2");
    if (!(r > 0.0 && r < R)) throw Error(ErrorKind::InvalidArgument, "ring radii must satisfy 0 < r < R");
    const double l = std::log(R / r);
    if (l < 1e-6) throw Error(ErrorKind::InvalidArgument, "ring is too thin: ln(R/r) < 1e-6");
    return 2.0 * std::numbers::pi / l;
}

double harmonic_ring_capacity(double r, double R, int n) {
    if (!(r > 0.0 && r < R)) throw Error(ErrorKind::InvalidArgument, "ring radii must satisfy 0 < r < R");
    if (n < 4) throw Error(ErrorKind::InvalidArgument, "resolution must be at least 4");
    const double h = 2.0 * R / n;
    const int k_max = n / 2 + 1;
    const int side = 2 * k_max + 1;
    auto at = [&](int k, int l) { return static_cast<std::size_t>((l + k_max) * side + (k + k_max)); };
    std::vector<double> value(static_cast<std::size_t>(side) * side, 0.0);
    std::vector<int> unknown(value.size(), -1);
    int m = 0;
    for (int l = -k_max; l <= k_max; ++l) {
        for (int k = -k_max; k <= k_max; ++k) {
            const double rad = std::hypot(k * h, l * h);
            if (rad >= R) {
                value[at(k, l)] = 1.0;
            } else if (rad > r) {
                unknown[at(k, l)] = m++;
            }
        }
    }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    const int dk[4] = {1, -1, 0, 0};
    const int dl[4] = {0, 0, 1, -1};
    for (int l = -k_max; l <= k_max; ++l) {
        for (int k = -k_max; k <= k_max; ++k) {
            const int row = unknown[at(k, l)];
            if (row < 0) continue;
            double diag = 0.0;
            for (int t = 0; t < 4; ++t) {
                const int k2 = k + dk[t], l2 = l + dl[t];
                if (std::abs(k2) > k_max || std::abs(l2) > k_max) continue;
                diag += 1.0;
                const int col = unknown[at(k2, l2)];
                if (col >= 0) {
                    trip.emplace_back(row, col, -1.0);
                } else {
                    rhs[row] += value[at(k2, l2)];
                }
            }
            trip.emplace_back(row, row, diag);
        }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(100 * m);
    cg.compute(a);
    Eigen::VectorXd u = cg.solve(rhs);
    for (int l = -k_max; l <= k_max; ++l)
        for (int k = -k_max; k <= k_max; ++k)
            if (unknown[at(k, l)] >= 0) value[at(k, l)] = u[unknown[at(k, l)]];
    // Edge energy sum (u_i - u_j)^2: the h^2 cell area cancels the 1/h^2 difference quotient.
    double energy = 0.0;
    for (int l = -k_max; l <= k_max; ++l) {
        for (int k = -k_max; k <= k_max; ++k) {
            if (k < k_max) energy += std::pow(value[at(k + 1, l)] - value[at(k, l)], 2);
            if (l < k_max) energy += std::pow(value[at(k, l + 1)] - value[at(k, l)], 2);
        }
    }
    return energy;
}

std::string SweepReport::csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "resolution,solver,p,delta,value,oracle,rel_error,iterations,runtime_s,seed\n";
    for (const auto& r : rows) {
        os << r.resolution << ',' << r.solver << ',' << r.p << ',' << r.delta << ',';
        if (r.ok) {
            os << r.value;
        } else {
            os << "nan";
        }
        os << ',' << r.oracle << ',' << r.rel_error << ',' << r.iterations << ',' << r.runtime_s << ',' << r.seed
           << '\n';
    }
    return os.str();
}

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace

Json SweepReport::json() const {
    Json rows_json = Json::array();
    for (const auto& r : rows) {
        Json j{{"resolution", r.resolution},
               {"solver", r.solver},
               {"p", r.p},
               {"delta", r.delta},
               {"value", r.ok ? finite_or_null(r.value) : Json(nullptr)},
               {"oracle", finite_or_null(r.oracle)},
               {"rel_error", finite_or_null(r.rel_error)},
               {"iterations", r.iterations},
               {"runtime_s", r.runtime_s},
               {"seed", r.seed},
               {"ok", r.ok}};
        if (!r.ok) j["error"] = r.error;
        if (!r.report.is_null()) j["report"] = r.report;
        rows_json.push_back(std::move(j));
    }
    return Json{{"rows", rows_json}};
}

SweepReport convergence_sweep(const std::vector<int>& resolutions, const std::vector<std::string>& solvers,
                              const GridSpec& grid, const SweepOptions& options) {
    SweepReport report;
    for (int res : resolutions)
        for (const auto& s : solvers) {
            SweepRow row;
            row.resolution = res;
            row.solver = s;
            row.p = options.p;
            row.seed = options.seed;
            report.rows.push_back(row);
        }
    if (report.rows.empty()) return report;

    auto run_cell = [&](SweepRow& row) {
        const auto start = std::chrono::steady_clock::now();
        try {
            GridSpec g = grid;
            g.n = row.resolution;
            const GridInstance inst = make_grid_condenser(g, options.p);
            row.delta = inst.condenser.delta;
            row.oracle = std::numeric_limits<double>::quiet_NaN();
            if (g.domain == GridDomain::Annulus && options.p == 2.0) row.oracle = ring_capacity_oracle(g.r, g.R);
            if (g.domain == GridDomain::Square) row.oracle = 1.0;
            SolverOptions so{options.tol, options.max_iter};
            CapacityReport rep;
            if (row.solver == "modulus") {
                rep = modulus_cg(inst.condenser, inst.space, so);
            } else if (row.solver == "function") {
                rep = function_min(inst.condenser, inst.space, so);
            } else if (row.solver == "primal") {
                PrimalOptions po;
                po.i_max = options.i_max;
                po.seed_options = so;
                rep = primal_sequence(inst.condenser, inst.space, po);
            } else if (row.solver == "brute") {
                rep = brute_force_modulus(inst.condenser, inst.space);
            } else {
                throw Error(ErrorKind::InvalidArgument, "unknown solver '" + row.solver + "'");
            }
            row.value = rep.value;
            row.iterations = rep.iterations;
            row.rel_error = std::isfinite(row.oracle) ? std::abs(rep.value - row.oracle) / row.oracle
                                                      : std::numeric_limits<double>::quiet_NaN();
            row.report = to_json(rep);
        } catch (const std::exception& ex) {
            row.ok = false;
            row.error = ex.what();
            row.rel_error = std::numeric_limits<double>::quiet_NaN();
        }
        row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(report.rows.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < report.rows.size(); k = next++) run_cell(report.rows[k]);
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return report;
}

QuasiWitness quasicontinuity_witness(const ScalarField& f, const std::vector<ScalarField>& approximants, double eps0,
                                     double p, double delta, const MetricMeasureSpace& space, double tol) {
    const std::size_t n = space.size();
    if (f.size() != n) throw Error(ErrorKind::InvalidArgument, "f has the wrong size");
    if (!(eps0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps0 must be positive");
    const Neighbors nbrs = neighbor_lists(space, delta);
    QuasiWitness out;
    for (std::size_t k = 0; k < approximants.size(); ++k) {
        const auto& fn = approximants[k];
        if (fn.size() != n) throw Error(ErrorKind::InvalidArgument, "approximant has the wrong size");
        QuasiLevel lvl;
        lvl.n = static_cast<int>(k + 1);
        const double threshold = eps0 / lvl.n;
        ScalarField u(n);
        std::vector<PointId> members;
        for (PointId x = 0; x < n; ++x) {
            const double diff = std::abs(fn[x] - f[x]);
            u[x] = diff * lvl.n / eps0;
            if (diff >= threshold) members.push_back(x);
        }
        lvl.set = PointSet(std::move(members));
        lvl.test_bound = lp_energy(space, u, p) + lp_energy(space, local_lip_gradient(nbrs, u), p);
        lvl.capacity = lvl.set.empty() ? 0.0 : set_capacity(lvl.set, p, delta, space).value;
        out.levels.push_back(std::move(lvl));
    }
    PointSet acc;
    double bound = 0.0;
    std::vector<QuasiTail> tails(out.levels.size());
    for (std::size_t k = out.levels.size(); k-- > 0;) {
        acc = set_union(acc, out.levels[k].set);
        bound += out.levels[k].test_bound;
        tails[k].n = out.levels[k].n;
        tails[k].set = acc;
        tails[k].test_bound = bound;
        tails[k].capacity = acc.empty() ? 0.0 : set_capacity(acc, p, delta, space).value;
    }
    for (std::size_t k = 0; k < tails.size(); ++k) {
        if (k > 0 && tails[k].capacity > tails[k - 1].capacity + tol) out.monotone = false;
        if (tails[k].capacity > tails[k].test_bound + tol) out.bounded = false;
    }
    out.tails = std::move(tails);
    return out;
}

Json to_json(const QuasiWitness& w) {
    Json levels = Json::array();
    for (const auto& l : w.levels) {
        levels.push_back({{"n", l.n}, {"set", l.set.members()}, {"capacity", l.capacity}, {"test_bound", l.test_bound}});
    }
    Json tails = Json::array();
    for (const auto& t : w.tails) {
        tails.push_back({{"N", t.n}, {"set", t.set.members()}, {"capacity", t.capacity}, {"test_bound", t.test_bound}});
    }
    return Json{{"levels", levels}, {"tails", tails}, {"monotone", w.monotone}, {"bounded", w.bounded}};
}

} // namespace mmpt
