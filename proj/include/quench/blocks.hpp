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
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quench/birkhoff.hpp"
#include "quench/equivariant.hpp"
#include "quench/inducing.hpp"

namespace quench {

/// Index of the lowest set bit, r(j) for j >= 1.
int lowest_set_bit(long j);

/// p / (2p - 2). Throws ArgumentError for p <= 2.
double default_beta(double p);
/// p / (4(p - 1)) + 1/p. Throws ArgumentError for p < 6 (out of scope).
double rate_exponent(double p);

struct RateParams {
    double p = 6.0;
    double delta = 0.05;
    double beta = 0.6;
    double eps = 0.1;   // block exponent epsilon
    double slack = 0.1;

    static RateParams from_p(double p);
    double a_p() const { return rate_exponent(p); }
    void validate() const;  // throws ConfigError
};

struct Tile {
    long start = 0;
    long length = 0;
    bool gap = false;
    long j = 0;  // index inside the window
};

/// Tiling of [2^n, 2^{n+1}) by J_{n,0}, I_{n,0}, J_{n,1}, I_{n,1}, ...
struct BlockScheme {
    int n = 0;
    double beta = 0.0;
    double eps = 0.0;
    int f = 0;
    long F = 0;
    int e = 0;                 // floor(eps n)
    long interval_length = 0;  // |I_{n,j}|
    std::vector<Tile> tiles;

    long gap_total() const;
    long interval_total() const;
    /// Disjoint, ordered, alternating, lengths as prescribed, summing to 2^n.
    bool exact() const;
};

/// Throws FeasibilityError when 2^{n-f} - (f+2) 2^{floor(eps n)-1} is not a positive integer.
BlockScheme block_decomposition(int n, double beta, double eps);
bool block_feasible(int n, double beta, double eps);

struct Segment {
    long start = 0;
    long length = 0;
    bool gap = false;
    int window = -1;  // -1 for the A_0 prefix
};

/// Segments of A-indices [0, 2^{top+1}): the A_0 prefix, then each window
/// n = 0..top tiled by its scheme or, when infeasible, as a single gap.
std::vector<Segment> segment_plan(int top, double beta, double eps);

struct GapCountReport {
    int n = 0;
    std::vector<long> cumulative;     // gap indices in [1, 2^{w+1}) for w = 0..n
    std::vector<bool> feasible;
    double exponent = 0.0;            // log count vs log 2^{w+1} over w in [n/2, n]
    double window_exponent = 0.0;     // log gap_total vs log 2^w over feasible w in [n/2, n]
    double bound_exponent = 0.0;      // beta + 1.5 eps
    bool ok = false;                  // exponent <= bound_exponent + 0.1
};
GapCountReport gap_cardinality_check(int n, double beta, double eps);

/// Per-path X_{n,j} and gap sums for one window.
struct BlockSums {
    std::vector<std::vector<double>> X;  // X[path][j]
    std::vector<double> gap_sum;         // per path
    std::vector<double> window_sum;      // per path, sum of A over [2^n, 2^{n+1})
};
BlockSums block_sums(const TrajectoryEnsemble& ensemble, const BlockScheme& scheme, const InducedSystem& sys,
                     int workers = 1);

/// E_{mu_a}[exp(i sum_j t_j psi_{a+j} o f^j)] through the twisted cocycle.
std::complex<double> characteristic(const MeasureStack& stack, const Observable& psi, long a,
                                    std::span<const double> twists);

struct HProbeOptions {
    std::vector<long> k_grid{1, 2, 4, 8, 16};
    std::vector<std::pair<long, long>> shapes{{8, 8}, {4, 16}, {16, 4}};  // induced lengths before/after the gap
    int t_vectors = 5;
    double eps0 = 1.0;
    double t_scale = 1.0;
    long start = 1;           // first induced index of the pre-gap block
    long mc_paths = 0;        // 0 disables the Monte Carlo cross-check
    std::uint64_t seed = 0;
    double floor = 1e-12;     // errors below are numerical zero
    int workers = 1;
};

/// t-vector `which` of the probe family on `length` entries, in [-1, 1].
std::vector<double> t_pattern(int which, long length, std::uint64_t seed);

struct HReport {
    std::vector<long> k_grid;
    std::vector<double> error;          // max over shapes and t-vectors, operator route
    std::vector<double> mc_error;       // same by Monte Carlo (empty if disabled)
    double mc_std_error = 0.0;
    bool mc_consistent = true;          // |mc - op| <= 4 stderr at every k
    bool widened = false;               // some operator error below the MC resolution
    double c_hat = 0.0;                 // -slope of log e(k)
    double r_squared = 0.0;
    long points_fitted = 0;
    bool pass = false;                  // slope < 0, R^2 >= 0.8, >= 3 points
};
/// psi must be centered. Block positions are induced indices mapped through sys.
HReport h_condition_probe(std::shared_ptr<const MeasureStack> stack, const Observable& psi, const InducedSystem& sys,
                          const HProbeOptions& opts);

/// KS distance of sums / sigma against N(0,1). Throws PreconditionError for sigma <= 0.
double clt_test(std::span<const double> sums, double sigma);

struct CLTPoint {
    long n = 0;
    double sigma_n = 0.0;
    double ks = 0.0;
};
struct CLTReport {
    std::vector<CLTPoint> points;
    bool suppressed = false;
    std::string flag;
    bool nonincreasing = false;  // ks[k+1] <= ks[k] + band
    double band = 0.01;
};
CLTReport clt_series(const TrajectoryEnsemble& ensemble, const std::vector<long>& checkpoints, bool coboundary,
                     int workers = 1);

struct ASIPOptions {
    int top_window = 13;      // A-indices [0, 2^{top+1})
    long fit_min_n = 64;      // envelope fit uses segment ends n >= fit_min_n
    std::uint64_t seed = 0;
    int workers = 1;
    bool coboundary = false;
};

struct ASIPCheckpoint {
    long n = 0;
    double ks = 0.0;
    double sigma_n = 0.0;
    double sigma_surrogate = 0.0;          // sqrt of the summed matched variances
    double sigma_surrogate_sampled = 0.0;  // same norm from the Gaussian draws
    double discrepancy = 0.0;
};

struct ASIPReport {
    RateParams rate;
    long paths = 0;
    std::vector<ASIPCheckpoint> checkpoints;   // n = 2^w
    std::vector<long> segment_ends;
    std::vector<double> envelope;              // running max of the batch-RMS discrepancy at segment ends
    int batches = 0;
    double discrepancy_exponent = 0.0;
    double envelope_r_squared = 0.0;
    double final_ratio = 0.0;                  // sigma_surr / sigma_n at the last segment end
    bool ratio_ok = false;                     // |ratio - 1| <= 0.05
    bool exponent_ok = false;                  // exponent <= a_p + delta + slack
    double max_abs_corr = 0.0;                 // adjacent surrogate blocks
    double corr_bound = 0.0;                   // 3 / sqrt(N)
    long pairs_over_bound = 0;
    long pairs = 0;
    bool suppressed = false;
    std::string label = "necessary consequences of the coupling; the coupling itself is not constructed";
};

/// Streams the ensemble through the segment plan, builds the independent
/// Gaussian surrogate with matched segment variances and compares norms.
ASIPReport asip_harness(const TrajectoryEnsemble& ensemble, const InducedSystem& sys, const RateParams& rate,
                        const ASIPOptions& opts);

}  // namespace quench
