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

#include "quench/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"

namespace quench {

namespace {

constexpr std::uint64_t kTrajectoryTag = 0x7A1EC7;

std::vector<double> raw_grid(const Observable& psi, const SymbolParams& s, int m) {
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) v[static_cast<std::size_t>(r)] = psi.raw(s, static_cast<double>(r) / m);
    return v;
}

// raw grid values per alphabet symbol
std::vector<std::vector<double>> raw_by_symbol(const Observable& psi, const OmegaPath& path, int m) {
    std::vector<std::vector<double>> out;
    for (const auto& s : path.alphabet()) out.push_back(raw_grid(psi, s, m));
    return out;
}

void require_centered(const MeasureStack& stack, long j, std::span<const double> values) {
    const double mu_mean = stack.integrate(j, values);
    if (std::abs(mu_mean) > 1e-9)
        throw PreconditionError("observable is not centered at offset " + std::to_string(j) + " (mean " +
                                std::to_string(mu_mean) + ")");
}

}  // namespace

Observable center_observable(const Observable& psi, const MeasureStack& stack) {
    const int m = stack.grid_size();
    const auto& path = stack.path();
    const auto raw = raw_by_symbol(psi, path, m);
    std::map<int, double> by_symbol;
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(stack.last() - stack.first() + 1));
    for (long i = stack.first(); i <= stack.last(); ++i) {
        const int sym = path.symbol_at(i);
        if (stack.shared()) {
            auto it = by_symbol.find(sym);
            if (it == by_symbol.end()) it = by_symbol.emplace(sym, stack.integrate(i, raw[static_cast<std::size_t>(sym)])).first;
            means.push_back(it->second);
        } else {
            means.push_back(stack.integrate(i, raw[static_cast<std::size_t>(sym)]));
        }
    }
    return psi.with_means(path.absolute(stack.first()), std::move(means));
}

double centering_residual(const Observable& psi, const MeasureStack& stack) {
    const int m = stack.grid_size();
    double worst = 0.0;
    for (long i = stack.first(); i <= stack.last(); ++i) {
        auto v = raw_grid(psi, stack.path().params_at(i), m);
        const double mean = psi.mean(stack.path().absolute(i));
        for (double& x : v) x -= mean;
        worst = std::max(worst, std::abs(stack.integrate(i, v)));
    }
    return worst;
}

double birkhoff_sum(const OmegaPath& omega, const Observable& psi, double x, long n) {
    if (n < 0) throw ArgumentError("birkhoff_sum: n must be >= 0");
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
        s += psi.value(omega, i, x);
        x = apply_map(omega.params_at(i), x);
    }
    return s;
}

TrajectoryEnsemble::TrajectoryEnsemble(std::shared_ptr<const MeasureStack> stack, Observable psi, long first,
                                       long length, long count, std::uint64_t seed)
    : stack_(std::move(stack)),
      psi_(std::move(psi)),
      first_(first),
      length_(length),
      count_(count),
      seed_(seed),
      end_sampler_(stack_->mu_weights(first + length)) {
    if (length < 1 || count < 1) throw ArgumentError("TrajectoryEnsemble: length and count must be >= 1");
    if (!stack_->covers(first) || !stack_->covers(first + length))
        throw StateError("TrajectoryEnsemble: stack window must cover [first, first + length]");
    const auto& path = stack_->path();
    symbol_.reserve(static_cast<std::size_t>(length));
    mean_.reserve(static_cast<std::size_t>(length));
    for (long j = 0; j < length; ++j) {
        symbol_.push_back(&path.params_at(first + j));
        mean_.push_back(psi_.mean(path.absolute(first + j)));
    }
}

double TrajectoryEnsemble::trajectory(long index, std::span<double> psi_values) const {
    if (static_cast<long>(psi_values.size()) < length_) throw ArgumentError("trajectory: buffer too short");
    using std::numbers::pi;
    CounterStream rng(derive_seed(seed_, kTrajectoryTag), static_cast<std::uint64_t>(index));
    double x = end_sampler_(rng.uniform());
    const bool uniform_branches = stack_->shared();
    double w[16];
    for (long j = length_ - 1; j >= 0; --j) {
        const SymbolParams& s = *symbol_[static_cast<std::size_t>(j)];
        const double u = rng.uniform();
        int branch;
        if (uniform_branches) {
            branch = std::min(s.d - 1, static_cast<int>(u * s.d));
        } else {
            const auto h = stack_->h(first_ + j);
            double total = 0.0;
            for (int i = 0; i < s.d; ++i) {
                const double y = wrap01((x - s.b + i) / s.d);
                w[i] = std::exp(s.eps * std::cos(2.0 * pi * y)) * interpolate(h, y);
                total += w[i];
            }
            double acc = 0.0, target = u * total;
            branch = s.d - 1;
            for (int i = 0; i < s.d; ++i) {
                acc += w[i];
                if (target < acc) {
                    branch = i;
                    break;
                }
            }
        }
        x = wrap01((x - s.b + branch) / s.d);
        psi_values[static_cast<std::size_t>(j)] = psi_.raw(s, x) - mean_[static_cast<std::size_t>(j)];
    }
    return x;
}

std::vector<std::vector<double>> TrajectoryEnsemble::sums_at(const std::vector<long>& checkpoints, int workers) const {
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        if (checkpoints[c] < 1 || checkpoints[c] > length_)
            throw ArgumentError("sums_at: checkpoint outside the trajectory length");
        if (c && checkpoints[c] <= checkpoints[c - 1]) throw ArgumentError("sums_at: checkpoints must increase");
    }
    std::vector<std::vector<double>> out(checkpoints.size(), std::vector<double>(static_cast<std::size_t>(count_)));
    for_each(workers, [&](long k, double, std::span<const double> psi) {
        double s = 0.0;
        std::size_t c = 0;
        for (long j = 0; j < length_ && c < checkpoints.size(); ++j) {
            s += psi[static_cast<std::size_t>(j)];
            if (j + 1 == checkpoints[c]) out[c++][static_cast<std::size_t>(k)] = s;
        }
    });
    return out;
}

MCEstimate variance_from_sums(std::span<const double> sums, long n) {
    std::vector<double> sq(sums.size());
    for (std::size_t k = 0; k < sums.size(); ++k) sq[k] = sums[k] * sums[k] / static_cast<double>(n);
    MCEstimate e;
    e.value = mean(sq);
    e.std_error = std::sqrt(sample_variance(sq) / static_cast<double>(sq.size()));
    return e;
}

MCEstimate variance_mc(const TrajectoryEnsemble& ensemble, long n, int workers) {
    const auto sums = ensemble.sums_at({n}, workers);
    return variance_from_sums(sums.front(), n);
}

double pair_correlation(const MeasureStack& stack, const Observable& psi, long j, long k) {
    if (j > k) throw ArgumentError("pair_correlation: need j <= k");
    if (!stack.covers(j) || !stack.covers(k)) throw StateError("pair_correlation: offsets outside the stack window");
    const int m = stack.grid_size();
    const auto& path = stack.path();
    auto u = raw_grid(psi, path.params_at(j), m);
    const double mj = psi.mean(path.absolute(j));
    for (double& x : u) x -= mj;
    require_centered(stack, j, u);
    auto v = raw_grid(psi, path.params_at(k), m);
    const double mk = psi.mean(path.absolute(k));
    for (double& x : v) x -= mk;
    require_centered(stack, k, v);

    const auto h = stack.h(j);
    for (std::size_t r = 0; r < u.size(); ++r) u[r] *= h[r];
    std::vector<double> next(u.size());
    for (long i = j; i < k; ++i) {
        build_operator(path, i, 0.0, Observable::zero(), m, stack.lambda(i)).apply(u, next);
        u.swap(next);
    }
    const auto nu = stack.nu(k);
    double c = 0.0;
    for (std::size_t r = 0; r < u.size(); ++r) c += nu[r] * v[r] * u[r];
    return c;
}

CorrelationBand CorrelationBand::compute(const MeasureStack& stack, const Observable& psi, long first, long count,
                                         double cutoff, int workers) {
    if (count < 1) throw ArgumentError("CorrelationBand: count must be >= 1");
    if (!stack.covers(first) || !stack.covers(first + count - 1))
        throw StateError("CorrelationBand: offsets outside the stack window");
    const int m = stack.grid_size();
    const auto& path = stack.path();
    const auto raw = raw_by_symbol(psi, path, m);
    std::vector<TransferOperator> ops;
    for (const auto& s : path.alphabet()) ops.push_back(build_operator(s, 0.0, Observable::zero(), 0.0, m));

    std::vector<int> sym(static_cast<std::size_t>(count));
    std::vector<double> mean(static_cast<std::size_t>(count));
    double psi_sup = 0.0;
    for (long j = 0; j < count; ++j) {
        sym[static_cast<std::size_t>(j)] = path.symbol_at(first + j);
        mean[static_cast<std::size_t>(j)] = psi.mean(path.absolute(first + j));
        psi_sup = std::max(psi_sup, sup_norm(raw[static_cast<std::size_t>(sym[static_cast<std::size_t>(j)])]) +
                                        std::abs(mean[static_cast<std::size_t>(j)]));
    }

    CorrelationBand band;
    band.first_ = first;
    band.rows_.resize(static_cast<std::size_t>(count));
    parallel_for(count, workers, [&](long begin, long end) {
        std::vector<double> u(static_cast<std::size_t>(m)), v(u.size()), next(u.size());
        auto values = [&](long j, std::vector<double>& out) {
            const auto& r = raw[static_cast<std::size_t>(sym[static_cast<std::size_t>(j)])];
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = r[k] - mean[static_cast<std::size_t>(j)];
        };
        for (long j = begin; j < end; ++j) {
            auto& row = band.rows_[static_cast<std::size_t>(j)];
            values(j, v);
            require_centered(stack, first + j, v);
            const auto h0 = stack.h(first + j);
            for (std::size_t r = 0; r < u.size(); ++r) u[r] = v[r] * h0[r];
            row.push_back(stack.integrate(first + j, [&] {
                std::vector<double> sq(v.size());
                for (std::size_t r = 0; r < v.size(); ++r) sq[r] = v[r] * v[r];
                return sq;
            }()));
            for (long lag = 1; j + lag < count; ++lag) {
                const long i = first + j + lag;
                ops[static_cast<std::size_t>(sym[static_cast<std::size_t>(j + lag - 1)])].apply(u, next);
                const double lam = stack.lambda(i - 1);
                const auto hi = stack.h(i);
                double sup = 0.0;
                for (std::size_t r = 0; r < u.size(); ++r) {
                    u[r] = next[r] / lam;
                    sup = std::max(sup, std::abs(u[r] / hi[r]));
                }
                if (sup * psi_sup < cutoff) break;
                values(j + lag, v);
                const auto nu = stack.nu(i);
                double c = 0.0;
                for (std::size_t r = 0; r < u.size(); ++r) c += nu[r] * v[r] * u[r];
                row.push_back(c);
            }
        }
    });
    for (const auto& row : band.rows_) band.max_lag_ = std::max(band.max_lag_, static_cast<long>(row.size()) - 1);
    return band;
}

double CorrelationBand::at(long j, long m) const {
    if (j < first_ || j >= first_ + count()) throw StateError("CorrelationBand: offset outside the band");
    const auto& row = rows_[static_cast<std::size_t>(j - first_)];
    return m >= 0 && m < static_cast<long>(row.size()) ? row[static_cast<std::size_t>(m)] : 0.0;
}

std::vector<double> CorrelationBand::second_moments(long i, long n_max) const {
    if (i < first_ || i + n_max > first_ + count()) throw StateError("second_moments: range outside the band");
    std::vector<double> out(static_cast<std::size_t>(n_max));
    double acc = 0.0;
    for (long n = 1; n <= n_max; ++n) {
        const long j = i + n - 1;
        acc += at(j, 0);
        for (long m = 1; m <= std::min(max_lag_, n - 1); ++m) acc += 2.0 * at(j - m, m);
        out[static_cast<std::size_t>(n - 1)] = acc;
    }
    return out;
}

double variance_operator(const MeasureStack& stack, const Observable& psi, long first, long n) {
    if (n < 1) throw ArgumentError("variance_operator: n must be >= 1");
    const auto band = CorrelationBand::compute(stack, psi, first, n);
    return band.second_moments(first, n).back() / static_cast<double>(n);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::positive_variance: return "positive-variance";
        case Verdict::coboundary_suspected: return "coboundary-suspected";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

CoboundaryDiagnostics coboundary_test(const std::vector<VarianceCheckpoint>& cps) {
    if (cps.size() < 2) throw ArgumentError("coboundary_test: need at least two checkpoints");
    CoboundaryDiagnostics d;
    for (const auto& c : cps) d.max_var = std::max(d.max_var, c.var);
    if (d.max_var < 1e-12) {
        d.verdict = Verdict::coboundary_suspected;
        return d;
    }
    std::vector<double> lx, ly;
    for (const auto& c : cps) {
        lx.push_back(std::log(static_cast<double>(c.n)));
        ly.push_back(std::log(std::max(c.var, 1e-300)));
    }
    d.slope = linear_fit(lx, ly).slope;
    const std::size_t half = cps.size() / 2;
    d.upper_slope = cps.size() - half >= 2
                        ? linear_fit(std::span(lx).subspan(half), std::span(ly).subspan(half)).slope
                        : d.slope;
    const auto& last = cps.back();
    if (d.slope <= -0.8)
        d.verdict = Verdict::coboundary_suspected;
    else if (std::abs(d.upper_slope) <= 0.2 && last.var >= 10.0 * last.std_error && last.var > 1e-10)
        d.verdict = Verdict::positive_variance;
    return d;
}

double sigma_n(double var, long n) { return std::sqrt(std::max(0.0, var) * static_cast<double>(n)); }

std::vector<long> dyadic_grid(int lo, int hi) {
    std::vector<long> g;
    for (int e = lo; e <= hi; ++e) g.push_back(1L << e);
    return g;
}

VarianceReport variance_report(std::shared_ptr<const MeasureStack> stack, const Observable& psi, long first,
                               const VarianceOptions& opts) {
    auto cps = opts.checkpoints.empty() ? dyadic_grid(5, 14) : opts.checkpoints;
    std::sort(cps.begin(), cps.end());
    const long n_max = cps.back();
    VarianceReport r;
    r.n = n_max;

    const auto band = CorrelationBand::compute(*stack, psi, first, n_max, 1e-12, opts.workers);
    r.correlation_lag = band.max_lag();
    const auto moments = band.second_moments(first, n_max);
    for (long n : cps) {
        const double var = moments[static_cast<std::size_t>(n - 1)] / static_cast<double>(n);
        r.op.push_back({n, var, 0.0, sigma_n(var, n)});
    }
    r.sigma2_op = r.op.back().var;

    if (opts.monte_carlo) {
        TrajectoryEnsemble ens(stack, psi, first, n_max, opts.trajectories, opts.seed);
        const auto sums = ens.sums_at(cps, opts.workers);
        for (std::size_t c = 0; c < cps.size(); ++c) {
            const auto e = variance_from_sums(sums[c], cps[c]);
            r.mc.push_back({cps[c], e.value, e.std_error, sigma_n(e.value, cps[c])});
        }
        r.sigma2_mc = r.mc.back().var;
        r.std_error = r.mc.back().std_error;
        r.diagnostics = coboundary_test(r.mc);
    } else {
        r.diagnostics = coboundary_test(r.op);
    }
    return r;
}

}  // namespace quench
