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

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "quench/driving.hpp"
#include "quench/holder.hpp"
#include "quench/observable.hpp"

namespace quench {

using cplx = std::complex<double>;

class MeasureStack;

/// Discretized twisted transfer operator L^{it}_{sigma^step omega} on the
/// M-point piecewise-linear grid.
///
/// Row r collects the d exact preimages y of x_r = r/M with weights
/// exp(phi(y) + i t psi(y)); g is read by linear interpolation between its
/// two neighboring grid values. Stored sparse (2d taps per row).
class TransferOperator {
public:
    int grid_size() const noexcept { return grid_size_; }
    int branches() const noexcept { return branches_; }
    bool twisted() const noexcept { return twisted_; }

    void apply(std::span<const double> in, std::span<double> out) const;
    void apply(std::span<const cplx> in, std::span<cplx> out) const;
    /// Row vector times matrix: out_k = sum_r in_r L_{rk}. Real operators only.
    void apply_adjoint(std::span<const double> in, std::span<double> out) const;

    HolderFunction apply(const HolderFunction& g) const;
    std::vector<cplx> apply(const std::vector<cplx>& g) const;

    /// Divides all weights by s (L -> L / lambda).
    void scale_by(double s);

    /// Dense export: M rows, each "re_0,im_0,...,re_{M-1},im_{M-1}".
    void write_csv(std::ostream& out) const;

    friend TransferOperator build_operator(const SymbolParams&, double, const Observable&, double, int, double);

private:
    int grid_size_ = 0;
    int branches_ = 0;
    bool twisted_ = false;
    std::vector<std::int32_t> cell_;
    std::vector<double> frac_;
    std::vector<double> weight_re_;
    std::vector<double> weight_im_;
};

/// Operator of a single symbol; psi_mean is subtracted inside the twist.
TransferOperator build_operator(const SymbolParams& s, double t, const Observable& psi, double psi_mean,
                                int grid_size, double lambda = 1.0);

/// L^{it}_{sigma^step omega} with potential -ln d + eps cos(2 pi x), divided by lambda.
/// Throws ArgumentError for |t| > 1.
TransferOperator build_operator(const OmegaPath& omega, long step, double t, const Observable& psi,
                                int grid_size, double lambda = 1.0);

/// L_omega^{tbar,n} = L^{it_{n-1}}_{sigma^{n-1} omega} o ... o L^{it_0}_omega.
class OperatorCocycle {
public:
    OperatorCocycle(OmegaPath omega, std::vector<double> twists, Observable psi, int grid_size);

    long length() const noexcept { return static_cast<long>(twists_.size()); }
    const std::vector<double>& twists() const noexcept { return twists_; }
    const TransferOperator& step(long j) const { return ops_[static_cast<std::size_t>(j)]; }

    std::vector<cplx> apply(std::span<const cplx> g) const;
    std::vector<cplx> apply(const HolderFunction& g) const;

private:
    OmegaPath omega_;
    std::vector<double> twists_;
    std::vector<TransferOperator> ops_;
};

/// Throws ArgumentError if twists.size() != n or any |t_j| > 1.
OperatorCocycle compose_cocycle(const OmegaPath& omega, const std::vector<double>& twists, long n,
                                const Observable& psi, int grid_size);

/// L_omega^n 1 for the untwisted, unnormalized cocycle.
std::vector<double> iterate_one(const OmegaPath& omega, long n, int grid_size);

struct LYReport {
    double lhs = 0.0;     // ||L^{tbar,n} g||_{alpha,xi}
    double rhs = 0.0;     // ||L^n 1|| (v(g) gamma^-alpha + (1 + 2Q)(1 + T) ||g||)
    double slack = 0.0;   // rhs - lhs
    bool satisfied = false;
};

/// Lasota-Yorke check for one (g, tbar). Twists must lie in [-T, T].
LYReport ly_check(const OmegaPath& omega, long n, double T, const std::vector<double>& twists,
                  const HolderFunction& g, const Observable& psi, const HolderParams& p);

/// Functions probed by operator-norm estimates: constants, low-order trig
/// modes and random trigonometric polynomials, each of unit (alpha,xi)-norm.
std::vector<HolderFunction> test_dictionary(int grid_size, const HolderParams& p, std::uint64_t seed,
                                            int random_count = 8);

struct NormBoundReport {
    double max_ratio = 0.0;   // max over dictionary of ||L g|| / ||g||
    double bound = 0.0;       // 4 (1 + Q_{sigma^n omega}) ||L^n 1||_inf
    double l1_norm = 0.0;     // ||L^n 1||_inf
    bool certified = false;
};

NormBoundReport norm_bound_check(const OmegaPath& omega, long n, const std::vector<double>& twists,
                                 const Observable& psi, const HolderParams& p,
                                 const std::vector<HolderFunction>& dictionary);

/// hat L^n g = L^n(g h_omega) / h_{sigma^n omega}, using the stack's
/// lambda-normalized operators at offsets first..first+n-1.
HolderFunction normalized_apply(const MeasureStack& stack, long first, const HolderFunction& g, long n);

struct DecayFit {
    double lambda_hat = 0.0;  // -slope of log ||hat L^n g||_inf
    double K_hat = 0.0;       // exp(intercept) / (max(1, 1/Q) ||g||_{alpha,xi})
    double r_squared = 0.0;
    bool instant_decay = false;  // fewer than two norms above the numerical-zero floor
    std::vector<double> norms;   // ||hat L^n g||_inf for n = 1..n_max
};

/// Throws PreconditionError if |mu_omega(g)| > 1e-9.
DecayFit decay_rate(const MeasureStack& stack, long first, const HolderFunction& g, long n_max,
                    const HolderParams& p);

}  // namespace quench
