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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "quench/equivariant.hpp"
#include "quench/observable.hpp"
#include "quench/parallel.hpp"

namespace quench {

/// psi with the mu-mean of every fiber in the stack window subtracted.
/// Means are computed from the raw observable, so centering is idempotent.
Observable center_observable(const Observable& psi, const MeasureStack& stack);

/// Largest |mu_i-mean| of a centered observable over the stack window.
double centering_residual(const Observable& psi, const MeasureStack& stack);

/// S_n^omega psi(x) = sum_{i<n} psi_{sigma^i omega}(f_omega^i x).
double birkhoff_sum(const OmegaPath& omega, const Observable& psi, double x, long n);

/// Orbits x_0, ..., x_{L-1} distributed as mu at offset `first`.
///
/// Each orbit is drawn backwards: x_L ~ mu_{first+L}, then each x_j is the
/// preimage of x_{j+1} on branch i with probability proportional to
/// e^{phi(y_i)} h(y_i), which is the law of (x_0, ..., x_L) under mu_first.
class TrajectoryEnsemble {
public:
    TrajectoryEnsemble(std::shared_ptr<const MeasureStack> stack, Observable psi, long first, long length,
                       long count, std::uint64_t seed);

    long first() const noexcept { return first_; }
    long length() const noexcept { return length_; }
    long count() const noexcept { return count_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Observable& observable() const noexcept { return psi_; }
    const MeasureStack& stack() const noexcept { return *stack_; }

    /// Fills psi_values[j] = psi_{first+j}(x_j) for path `index` and returns x_0.
    /// A pure function of (seed, index).
    double trajectory(long index, std::span<double> psi_values) const;

    /// fn(index, x0, psi_values) for every path, split over workers.
    template <class F>
    void for_each(int workers, F&& fn) const;

    /// sums[c][path] = S_{checkpoints[c]} along each path.
    std::vector<std::vector<double>> sums_at(const std::vector<long>& checkpoints, int workers = 1) const;

private:
    std::shared_ptr<const MeasureStack> stack_;
    Observable psi_;
    long first_, length_, count_;
    std::uint64_t seed_;
    std::vector<const SymbolParams*> symbol_;
    std::vector<double> mean_;
    DensitySampler end_sampler_;
};

/// (1/n) E[S_n^2] over an ensemble, with its Monte Carlo standard error.
struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
};
MCEstimate variance_mc(const TrajectoryEnsemble& ensemble, long n, int workers = 1);
MCEstimate variance_from_sums(std::span<const double> sums, long n);

/// E_mu[psi_j o f^j * psi_k o f^k] at offsets j <= k of the stack, through
/// the transfer-operator duality. Throws ArgumentError for j > k.
double pair_correlation(const MeasureStack& stack, const Observable& psi, long j, long k);

/// Banded correlations c(j, m) = E[psi_j o f^j psi_{j+m} o f^{j+m}] for
/// offsets j in [first, first + count). The band at j stops at the first lag
/// with ||hat L^m psi_j||_inf ||psi||_inf < cutoff; since hat L does not
/// increase sup norms, every omitted term is below the cutoff.
class CorrelationBand {
public:
    static CorrelationBand compute(const MeasureStack& stack, const Observable& psi, long first, long count,
                                   double cutoff = 1e-12, int workers = 1);

    long first() const noexcept { return first_; }
    long count() const noexcept { return static_cast<long>(rows_.size()); }
    long max_lag() const noexcept { return max_lag_; }
    double at(long j, long m) const;

    /// E[(S_n^{sigma^i omega})^2] for n = 1..n_max, relative to offset i.
    std::vector<double> second_moments(long i, long n_max) const;

private:
    long first_ = 0;
    long max_lag_ = 0;
    std::vector<std::vector<double>> rows_;
};

/// (1/n) E[S_n^2] from exact correlations.
double variance_operator(const MeasureStack& stack, const Observable& psi, long first, long n);

enum class Verdict { positive_variance, coboundary_suspected, inconclusive };
std::string to_string(Verdict v);

struct VarianceCheckpoint {
    long n = 0;
    double var = 0.0;      // (1/n) E[S_n^2]
    double std_error = 0.0;   // 0 for operator estimates
    double sigma_n = 0.0;  // sqrt(n var)
};

struct CoboundaryDiagnostics {
    Verdict verdict = Verdict::inconclusive;
    double slope = 0.0;        // log var vs log n, all checkpoints
    double upper_slope = 0.0;  // upper half of the grid
    double max_var = 0.0;
};

/// coboundary-suspected: every var < 1e-12, or log-log slope <= -0.8.
/// positive-variance: upper-half slope in [-0.2, 0.2] and the last var
/// >= 10 std_error (and > 1e-10). Anything else is inconclusive.
CoboundaryDiagnostics coboundary_test(const std::vector<VarianceCheckpoint>& checkpoints);

double sigma_n(double var, long n);

struct VarianceReport {
    double sigma2_mc = 0.0;
    double sigma2_op = 0.0;
    double std_error = 0.0;
    long n = 0;  // checkpoint the headline estimates refer to
    std::vector<VarianceCheckpoint> mc;
    std::vector<VarianceCheckpoint> op;
    CoboundaryDiagnostics diagnostics;
    long correlation_lag = 0;
};

struct VarianceOptions {
    std::vector<long> checkpoints;  // default 2^5..2^14
    long trajectories = 10000;
    std::uint64_t seed = 0;
    int workers = 1;
    bool monte_carlo = true;
};

/// Both estimators on the stack window starting at offset `first`.
VarianceReport variance_report(std::shared_ptr<const MeasureStack> stack, const Observable& psi, long first,
                               const VarianceOptions& opts);

std::vector<long> dyadic_grid(int lo, int hi);

// ---------------------------------------------------------------------------

template <class F>
void TrajectoryEnsemble::for_each(int workers, F&& fn) const {
    parallel_for(count_, workers, [&](long begin, long end) {
        std::vector<double> psi(static_cast<std::size_t>(length_));
        for (long k = begin; k < end; ++k) {
            const double x0 = trajectory(k, psi);
            fn(k, x0, std::span<const double>(psi));
        }
    });
}

}  // namespace quench
