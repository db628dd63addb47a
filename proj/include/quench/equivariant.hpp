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
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "quench/driving.hpp"
#include "quench/holder.hpp"
#include "quench/observable.hpp"
#include "quench/transfer.hpp"

namespace quench {

/// (lambda_omega, h_omega, nu_omega) on the grid.
///
/// nu holds grid weights summing to 1, so nu(g) = sum_k nu_k g(x_k); the
/// density of nu against the normalized grid measure is M * nu_k.
struct EquivariantTriplet {
    double lambda = 1.0;
    std::vector<double> h;
    std::vector<double> nu;
    double normalization_residual = 0.0;  // |nu(h) - 1|
    long n_relax = 0;
};

struct StackOptions {
    int grid_size = 1024;
    long relax = 40;
};

/// Triplets for every offset of a working window [first, last] of a path.
///
/// h is pulled forward from offset first - relax, nu is pushed back from
/// offset last + relax + 1. For potential-free alphabets the triplet is the
/// same (h = 1, nu uniform) at every offset and is stored once.
class MeasureStack {
public:
    static MeasureStack build(const OmegaPath& omega, long first, long last, const StackOptions& opts = {});

    const OmegaPath& path() const noexcept { return path_; }
    long first() const noexcept { return first_; }
    long last() const noexcept { return last_; }
    int grid_size() const noexcept { return grid_size_; }
    long relax() const noexcept { return relax_; }
    bool covers(long i) const noexcept { return i >= first_ && i <= last_; }
    bool shared() const noexcept { return triplets_.size() == 1; }
    bool lambda_normalized() const noexcept { return normalized_; }

    /// Throws StateError outside the window.
    const EquivariantTriplet& triplet(long i) const;
    std::span<const double> h(long i) const { return triplet(i).h; }
    std::span<const double> nu(long i) const { return triplet(i).nu; }
    double lambda(long i) const { return triplet(i).lambda; }

    /// L^{it}_{sigma^i omega}, divided by lambda_i once the stack is normalized.
    TransferOperator op(long i, double t = 0.0, const Observable& psi = Observable::zero()) const;

    /// mu_omega weights h_k nu_k (summing to 1).
    std::vector<double> mu_weights(long i) const;
    double integrate(long i, std::span<const double> g) const;

    /// ||L_i h_i - lambda_i h_{i+1}||_inf; requires i + 1 in the window.
    double eigen_residual(long i) const;

    friend MeasureStack normalize_lambda(MeasureStack stack);

private:
    OmegaPath path_ = OmegaPath::sample(0, {SymbolParams{}}, {1.0});
    long first_ = 0;
    long last_ = 0;
    long relax_ = 0;
    int grid_size_ = 0;
    bool normalized_ = false;
    std::vector<std::shared_ptr<const EquivariantTriplet>> triplets_;
};

/// Estimates the triplet at offset 0, doubling n_relax until successive h
/// estimates differ by < tol in sup norm. Throws ConvergenceError at the cap.
EquivariantTriplet estimate_triplet(const OmegaPath& omega, long n_relax, double tol, int grid_size,
                                    long relax_cap = 4096);

/// Switches the stack to L / lambda; h and nu are unchanged.
MeasureStack normalize_lambda(MeasureStack stack);

/// nu_{i+1}(op(i) 1): lambda_i for a raw stack, ~1 after normalization.
double reestimate_lambda(const MeasureStack& stack, long i);

/// |int g o f dmu_i - int g dmu_{i+1}| with g evaluated in closed form.
double equivariance_check(const MeasureStack& stack, long i, const std::function<double(double)>& g);

/// dmu/dm = h * (dnu/dm), normalized so its trapezoid integral is 1.
HolderFunction mu_density(const MeasureStack& stack, long i);

/// Inverse CDF of the periodic piecewise-linear density through M * mu_k.
class DensitySampler {
public:
    explicit DensitySampler(std::span<const double> mu_weights);
    /// Maps u in [0,1) to a point in [0,1).
    double operator()(double u) const;

private:
    std::vector<double> node_;        // density values at grid points
    std::vector<double> cumulative_;  // mass of cells [0, k)
};

/// Inverse-CDF samples of the piecewise-linear mu density at offset i.
std::vector<double> sample_mu(const MeasureStack& stack, long i, long count, std::uint64_t seed,
                              bool stratified = false);

/// Per-offset CSV: "offset,lambda,k,h,nu" rows.
void write_triplets_csv(std::ostream& out, const MeasureStack& stack);

}  // namespace quench
