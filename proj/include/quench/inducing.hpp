/*
   Copyright 2026 The quench Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "quench/birkhoff.hpp"
#include "quench/equivariant.hpp"
#include "quench/holder.hpp"

namespace quench {

/// Thresholds of the good set E.
struct ECriteria {
    double C0 = 1000.0;
    long L = 8;
    long N_check = 1024;    // variance floor checked for L <= n <= N_check
    long decay_steps = 30;  // horizon of the K-hat fit
    void validate() const;  // throws ConfigError
};

/// Decides sigma^i omega in E for indices i relative to a path.
class MembershipOracle {
public:
    virtual ~MembershipOracle() = default;
    virtual bool contains(long i) const = 0;
    virtual std::string kind() const = 0;
};

/// E depends only on the symbols at i, ..., i + pattern.size() - 1.
/// An empty pattern puts every index in E.
class SymbolWindowMembership final : public MembershipOracle {
public:
    SymbolWindowMembership(OmegaPath omega, std::vector<int> pattern);
    bool contains(long i) const override;
    std::string kind() const override { return "symbol-window"; }
    /// Product of the pattern probabilities.
    double probability() const;

private:
    OmegaPath omega_;
    std::vector<int> pattern_;
};

/// E given as an explicit index set.
class IndexSetMembership final : public MembershipOracle {
public:
    explicit IndexSetMembership(std::set<long> indices) : indices_(std::move(indices)) {}
    bool contains(long i) const override { return indices_.count(i) > 0; }
    std::string kind() const override { return "index-set"; }

private:
    std::set<long> indices_;
};

/// The computable quantities entering the definition of E at one index.
struct ESurrogates {
    double C = 0.0;           // 4 (1 + Q)
    double K_hat = 0.0;       // fitted decay constant (surrogate for K)
    double h_sup = 0.0;       // ||h||_inf
    double inv_h_norm = 0.0;  // ||1/h||_{alpha,xi}
    double inv_Q = 0.0;       // 1/Q
    double min_floor_ratio = 0.0;  // min over L <= n <= N_check of (1/n) E S_n^2 / Sigma^2
    bool instant_decay = false;

    double max_surrogate() const;
    bool variance_floor_ok() const { return min_floor_ratio >= 0.5; }
    bool in_E(double C0) const { return max_surrogate() <= C0 && variance_floor_ok(); }
};

/// Membership from the surrogate criteria. Needs a normalized stack covering
/// [i, i + max(N_check, decay_steps)] for every queried index i, and the
/// asymptotic variance estimate sigma2 (StateError when absent).
class SurrogateMembership final : public MembershipOracle {
public:
    SurrogateMembership(std::shared_ptr<const MeasureStack> stack, const Observable& psi, HolderParams holder,
                        ECriteria criteria, std::optional<double> sigma2, int workers = 1);
    bool contains(long i) const override { return evaluate(i).in_E(criteria_.C0); }
    std::string kind() const override { return "surrogate"; }
    ESurrogates evaluate(long i) const;
    const ECriteria& criteria() const noexcept { return criteria_; }

private:
    std::shared_ptr<const MeasureStack> stack_;
    HolderParams holder_;
    ECriteria criteria_;
    double sigma2_;
    CorrelationBand band_;
};

/// sigma^0 omega in E.
inline bool membership_E(const MembershipOracle& oracle) { return oracle.contains(0); }

/// Fraction of draws in E.
double empirical_P_E(const std::function<bool(long)>& member, long draws);

/// Return times 0 = m_0 < m_1 < m_2 < ... <= n_max of an index scan.
struct InducedSystem {
    std::vector<long> returns;  // m_1, m_2, ...
    long n_max = 0;
    bool start_in_E = false;
    bool truncated = false;     // no return at all up to n_max
    std::vector<std::string> warnings;

    long count() const noexcept { return static_cast<long>(returns.size()); }
    /// m_k with m_0 = 0.
    long m(long k) const;
    /// k_n = #{k >= 1 : m_k <= n}.
    long k(long n) const;
    /// Empirical frequency of E over the scanned indices 1..n_max.
    double frequency() const;
};

/// Scans indices 1..n_max. Records a warning when there is no return at all.
InducedSystem return_times(const MembershipOracle& oracle, long n_max);

/// True when no scanned index strictly between consecutive returns is in E.
bool return_structure_ok(const InducedSystem& sys, const MembershipOracle& oracle);

/// sup over x of sum_{j<len} psi_{a+j}(f^j x) on the fiber of sigma^a omega,
/// maximized over `grid` points.
double block_sup(const OmegaPath& omega, const Observable& psi, long a, long len, int grid = 1024);

/// Psi over the induced block k: the function x -> sum_{j=m_k}^{m_{k+1}-1}
/// psi_j(f^{j - m_k} x) on the fiber of sigma^{m_k} omega, and its sup.
struct InducedObservable {
    long start = 0;   // m_k
    long length = 0;  // m_{k+1} - m_k
    double A = 0.0;   // ||Psi||_inf from grid maximization
    double operator()(const OmegaPath& omega, const Observable& psi, double x) const;
};
InducedObservable induced_observable(const OmegaPath& omega, const Observable& psi, const InducedSystem& sys,
                                     long block, int grid = 1024);

/// A_l = sum_{j=m_l}^{m_{l+1}-1} psi_values[j] for l = 1..count.
std::vector<double> induced_increments(const InducedSystem& sys, std::span<const double> psi_values, long count);
/// A_0, ..., A_{count-1} where A_0 sums the prefix [0, m_1).
std::vector<double> induced_sequence(const InducedSystem& sys, std::span<const double> psi_values, long count);

struct KacReport {
    long n = 0;              // number of returns used
    double m_over_n = 0.0;   // m_n / n
    double inv_P = 0.0;      // 1 / P_hat
    double m_error = 0.0;    // |m_n/n - 1/P_hat| / (1/P_hat)
    double k_over_n = 0.0;   // k_{n_max} / n_max
    double k_error = 0.0;    // |k_n/n - P_hat|
    bool bracket_ok = true;  // m_{k_n} <= n < m_{k_n + 1} wherever defined
    bool ok = false;         // m_error <= 0.1
};
/// Throws PreconditionError with fewer than 100 returns.
KacReport kac_check(const InducedSystem& sys, double P_hat);

struct MomentReport {
    double p = 6.0;
    double moment = 0.0;               // mean of A^p over all samples
    std::vector<double> moment_by_doubling;  // same over the first N/8, N/4, N/2, N samples
    double growth_exponent = 0.0;      // log max_{k<=n} A_k vs log n
    double hill_tail_index = 0.0;      // Hill estimate over the top 10% (0 if degenerate)
};
/// Moments of a sample of A values (one per induced block).
MomentReport moment_check(std::span<const double> A, double p);

struct GoReport {
    std::vector<long> m_grid;
    std::vector<long> offsets;
    std::vector<std::vector<double>> var;  // var[offset][m] of sum_{j=k+1}^{k+m} A_j
    double u_hat = 0.0;          // min over the grid of var / m
    double growth_slope = 0.0;   // log var vs log m, pooled
    double sigma2 = 0.0;
    bool go1 = false;            // u_hat >= sigma2 / 4 and growth_slope >= 0.5
    double go2_exponent = 0.0;   // growth of max_{k<=n} ||A_k||_{L^p}
    bool go2 = false;            // go2_exponent <= 1/p + 0.1
};
/// Monte Carlo over an ensemble whose trajectories cover the needed returns.
GoReport go_conditions_check(const TrajectoryEnsemble& ensemble, const InducedSystem& sys,
                             const std::vector<long>& m_grid, const std::vector<long>& offsets, double sigma2,
                             double p, int workers = 1);

struct TailReport {
    std::vector<long> n_grid;
    std::vector<double> discrepancy;  // sup_x |S_n - sum_{j<k_n} Psi o F^j|
    std::vector<double> bound;        // ||Psi_{sigma^{m_{k_n}} omega}|| + ||Psi_{sigma^n omega}||
    double exponent = 0.0;            // running max of bound vs log n
    bool ok = false;                  // exponent <= 1/p + 0.1
};
TailReport tail_bound_check(const OmegaPath& omega, const Observable& psi, const InducedSystem& sys,
                            const std::vector<long>& n_grid, double p, int grid = 256);

/// Both sides of S_n - sum_{j<k_n} Psi o F^j
/// = Psi_{sigma^{m_{k_n}} omega} o f^{m_{k_n}} - Psi_{sigma^n omega} o f^n
/// at one point; the right side needs a return after n.
struct ResummationSides {
    double lhs = 0.0;
    double rhs = 0.0;
};
ResummationSides resummation_identity(const OmegaPath& omega, const Observable& psi, const InducedSystem& sys,
                                      double x, long n);

}  // namespace quench
