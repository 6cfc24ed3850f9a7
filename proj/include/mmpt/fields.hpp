#pragma once

#include "mmpt/paths.hpp"
#include "mmpt/space.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmpt {

/// (sum_x |g(x)|^p mu_x)^{1/p}.
double lp_norm(const MetricMeasureSpace& space, const ScalarField& g, double p);

/// sum_x |g(x)|^p mu_x, optionally restricted to a mask.
double lp_energy(const MetricMeasureSpace& space, const ScalarField& g, double p,
                 const std::vector<char>* mask = nullptr);

/// Step function omega(delta) = max{|f(x)-f(y)| : x, y in K, d(x,y) <= delta}.
class ModulusOfContinuity {
public:
    ModulusOfContinuity() = default;
    ModulusOfContinuity(const MetricMeasureSpace& space, const ScalarField& f, const PointSet& k);

    double operator()(double delta) const;
    double sup() const { return values_.empty() ? 0.0 : values_.back(); }

    const std::vector<double>& jumps() const noexcept { return jumps_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> jumps_;
    std::vector<double> values_;
};

/// g_i(x) = min_y { g(y) + i d(x,y) }.
ScalarField lipschitz_regularization(const MetricMeasureSpace& space, const ScalarField& g, double i);

/// Increasing sequence of positive Lipschitz densities built from g.
///
///   tg_i(x) = g_i(x) + sum_{n=1}^{i} (n min(1, d(x,E_n)) + eta_n) psi_n(x)
///   eta_n   = eps' 8^{-n} / (mu(B(x0, n+1)) + 1)
///   psi_n   = max(0, min(n + 1 - d(x0,x), 1))
///
/// with eps' = eps / (p (|g|_p + 1)^{p-1}) and E_n from `exhaustion`.
/// Levels are generated lazily and cached.
class GoodSequence {
public:
    GoodSequence(const MetricMeasureSpace& space, ScalarField g, double eps, double p, PointId x0,
                 const std::optional<PointSet>& k = std::nullopt);

    const ScalarField& level(int i);
    const ScalarField& limit() const noexcept { return limit_; }
    const ScalarField& base() const noexcept { return g_; }

    double eps() const noexcept { return eps_; }
    double internal_eps() const noexcept { return eps_internal_; }
    double p() const noexcept { return p_; }
    double eta(int n) const;
    const std::vector<PointSet>& exhaustion_levels() const noexcept { return levels_; }

    /// min over A of (limit - base); positive for every nonempty A.
    double positivity_margin(const PointSet& a) const;

private:
    double term(int n, PointId x) const;

    const MetricMeasureSpace* space_;
    ScalarField g_;
    double eps_;
    double eps_internal_;
    double p_;
    PointId x0_;
    std::vector<PointSet> levels_;
    std::vector<double> d0_;
    std::vector<ScalarField> dist_e_;
    std::vector<double> ball_mass_;
    int stable_from_ = 1;
    ScalarField limit_;
    std::vector<ScalarField> added_;
    std::map<int, ScalarField> cache_;
};

/// Penalty r -> P(r) for the first jump of an admissible path.
class PenaltyFunction {
public:
    PenaltyFunction() = default;
    PenaltyFunction(std::vector<int> indices, double m, ModulusOfContinuity omega);

    double operator()(double r) const;
    double plateau() const noexcept { return 2.0 * m_; }
    /// Thresholds 1/i_n in decreasing order.
    std::vector<double> thresholds() const;
    const ModulusOfContinuity& omega() const noexcept { return omega_; }

private:
    std::vector<int> indices_;
    double m_ = 0.0;
    ModulusOfContinuity omega_;
};

struct AuxTriple {
    ScalarField D;
    ScalarField G;
    PenaltyFunction penalty;
    std::vector<int> indices;
    double M = 0.0;
    /// Dyadic shell of each point: -1 on K, 0 for d(x,K) >= 1/2, n for
    /// 2^{-n-1} <= d(x,K) < 2^{-n}.
    std::vector<int> shell;
};

/// Dyadic shell index of a positive distance to K (0 when r >= 1/2).
int dyadic_shell(double r);

/// Number of indices i_n a triple over the points of `where` needs.
int required_index_depth(const MetricMeasureSpace& space, const PointSet& k, const PointSet& where);

AuxTriple build_aux_triple(const MetricMeasureSpace& space, const ScalarField& f, GoodSequence& seq,
                           const PointSet& k, const std::vector<int>& indices);

struct PropertyCheck {
    std::string name;
    bool pass = true;
    double slack = 0.0;
    std::string detail;
};

/// Re-evaluates clauses (ii)-(iv) of the auxiliary-function lemma pointwise.
std::vector<PropertyCheck> validate_aux_triple(const MetricMeasureSpace& space, const AuxTriple& aux,
                                               GoodSequence& seq, const PointSet& k);

struct PartitionOfUnity {
    std::vector<ScalarField> psi;
    /// Points with d(x, boundary) >= 2^{-N}, where the sum is complete.
    std::vector<char> covered;
};

/// psi_0 = min{1, 2 d(x, Z_1)}, psi_n = (1 - sum_{k<n} psi_k) min{1, 2^{n+1} d(x, Z_{n+1})}
/// with Z_i the cloud points closer than 2^{-i} to `boundary`.
PartitionOfUnity partition_of_unity(const MetricMeasureSpace& space, const PointSet& boundary, int levels);

/// f_M = psi_M clamp(f, -M, M), psi_M(x) = max(min(2 - d(x0,x)/M, 1), 0).
ScalarField truncate_cutoff(const MetricMeasureSpace& space, const ScalarField& f, double m, PointId x0);

/// g_u(x) = max over 0 < d(x,y) <= delta of |u(x)-u(y)|/d(x,y); 0 without neighbours.
ScalarField local_lip_gradient(const MetricMeasureSpace& space, const ScalarField& u, double delta);
ScalarField local_lip_gradient(const Neighbors& nbrs, const ScalarField& u);

} // namespace mmpt
