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

#include "quench/equivariant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/rng.hpp"

namespace quench {

namespace {

double sup_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void normalize_sum(std::vector<double>& v) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= s;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

std::shared_ptr<const EquivariantTriplet> uniform_triplet(int m) {
    auto t = std::make_shared<EquivariantTriplet>();
    t->lambda = 1.0;
    t->h.assign(static_cast<std::size_t>(m), 1.0);
    t->nu.assign(static_cast<std::size_t>(m), 1.0 / m);
    return t;
}

// h at offset `at`, pulled forward over `relax` steps, sup-normalized.
std::vector<double> pull_forward(const OmegaPath& omega, long at, long relax, int m) {
    const auto zero = Observable::zero();
    std::vector<double> cur(static_cast<std::size_t>(m), 1.0), next(cur.size());
    for (long j = at - relax; j < at; ++j) {
        build_operator(omega, j, 0.0, zero, m).apply(cur, next);
        const double s = sup_abs(next);
        for (std::size_t k = 0; k < next.size(); ++k) cur[k] = next[k] / s;
    }
    return cur;
}

// nu at offset `at`, pushed back from at + relax.
std::vector<double> push_back(const OmegaPath& omega, long at, long relax, int m) {
    const auto zero = Observable::zero();
    std::vector<double> cur(static_cast<std::size_t>(m), 1.0 / m), next(cur.size());
    for (long j = at + relax - 1; j >= at; --j) {
        build_operator(omega, j, 0.0, zero, m).apply_adjoint(cur, next);
        cur.swap(next);
        normalize_sum(cur);
    }
    return cur;
}

}  // namespace

MeasureStack MeasureStack::build(const OmegaPath& omega, long first, long last, const StackOptions& opts) {
    if (last < first) throw ArgumentError("MeasureStack: empty window");
    if (opts.relax < 1) throw ArgumentError("MeasureStack: relax must be >= 1");
    if (opts.grid_size < 2 || (opts.grid_size & (opts.grid_size - 1)) != 0)
        throw ArgumentError("MeasureStack: grid size must be a power of two");
    MeasureStack s;
    s.path_ = omega;
    s.first_ = first;
    s.last_ = last;
    s.relax_ = opts.relax;
    s.grid_size_ = opts.grid_size;
    const int m = opts.grid_size;

    if (omega.potential_free()) {
        s.triplets_.push_back(uniform_triplet(m));
        return s;
    }

    const std::size_t count = static_cast<std::size_t>(last - first + 1);
    const auto zero = Observable::zero();
    std::vector<std::vector<double>> hs(count), nus(count + 1);

    auto h = pull_forward(omega, first, opts.relax, m);
    std::vector<double> next(static_cast<std::size_t>(m));
    for (std::size_t n = 0; n < count; ++n) {
        hs[n] = h;
        if (n + 1 < count) {
            build_operator(omega, first + static_cast<long>(n), 0.0, zero, m).apply(h, next);
            const double sc = sup_abs(next);
            for (std::size_t k = 0; k < next.size(); ++k) h[k] = next[k] / sc;
        }
    }

    auto nu = push_back(omega, last + 1, opts.relax, m);
    nus[count] = nu;
    for (std::size_t n = count; n-- > 0;) {
        build_operator(omega, first + static_cast<long>(n), 0.0, zero, m).apply_adjoint(nu, next);
        nu.swap(next);
        normalize_sum(nu);
        nus[n] = nu;
    }

    std::vector<double> ones(static_cast<std::size_t>(m), 1.0), l1(static_cast<std::size_t>(m));
    s.triplets_.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        auto t = std::make_shared<EquivariantTriplet>();
        t->nu = std::move(nus[n]);
        t->h = std::move(hs[n]);
        const double c = dot(t->nu, t->h);
        for (double& x : t->h) x /= c;
        t->normalization_residual = std::abs(dot(t->nu, t->h) - 1.0);
        build_operator(omega, first + static_cast<long>(n), 0.0, zero, m).apply(ones, l1);
        t->lambda = dot(nus[n + 1], l1);
        t->n_relax = opts.relax;
        s.triplets_.push_back(std::move(t));
    }
    return s;
}

const EquivariantTriplet& MeasureStack::triplet(long i) const {
    if (!covers(i)) throw StateError("MeasureStack: offset " + std::to_string(i) + " outside the window");
    if (shared()) return *triplets_.front();
    return *triplets_[static_cast<std::size_t>(i - first_)];
}

TransferOperator MeasureStack::op(long i, double t, const Observable& psi) const {
    const double lam = normalized_ ? lambda(i) : 1.0;
    return build_operator(path_, i, t, psi, grid_size_, lam);
}

std::vector<double> MeasureStack::mu_weights(long i) const {
    const auto& tr = triplet(i);
    std::vector<double> w(tr.h.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = tr.h[k] * tr.nu[k];
    normalize_sum(w);
    return w;
}

double MeasureStack::integrate(long i, std::span<const double> g) const {
    if (static_cast<int>(g.size()) != grid_size_) throw ArgumentError("integrate: grid mismatch");
    const auto& tr = triplet(i);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) s += tr.h[k] * tr.nu[k] * g[k];
    return s;
}

double MeasureStack::eigen_residual(long i) const {
    const auto& a = triplet(i);
    const auto& b = triplet(i + 1);
    std::vector<double> out(a.h.size());
    op(i).apply(a.h, out);
    const double lam = normalized_ ? 1.0 : a.lambda;
    double r = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) r = std::max(r, std::abs(out[k] - lam * b.h[k]));
    return r;
}

MeasureStack normalize_lambda(MeasureStack stack) {
    stack.normalized_ = true;
    return stack;
}

double reestimate_lambda(const MeasureStack& stack, long i) {
    std::vector<double> ones(static_cast<std::size_t>(stack.grid_size()), 1.0), out(ones.size());
    stack.op(i).apply(ones, out);
    return dot(stack.nu(i + 1), out);
}

EquivariantTriplet estimate_triplet(const OmegaPath& omega, long n_relax, double tol, int grid_size,
                                    long relax_cap) {
    if (n_relax < 1) throw ArgumentError("estimate_triplet: n_relax must be >= 1");
    if (omega.potential_free()) {
        auto t = *uniform_triplet(grid_size);
        t.n_relax = n_relax;
        return t;
    }
    auto normalized_h = [&](long n) {
        auto h = pull_forward(omega, 0, n, grid_size);
        const auto nu = push_back(omega, 0, n, grid_size);
        const double c = dot(nu, h);
        for (double& x : h) x /= c;
        return std::pair{std::move(h), nu};
    };
    auto prev = normalized_h(n_relax);
    double residual = 0.0;
    for (long n = 2 * n_relax; n <= relax_cap; n *= 2) {
        auto cur = normalized_h(n);
        residual = 0.0;
        for (std::size_t k = 0; k < cur.first.size(); ++k)
            residual = std::max(residual, std::abs(cur.first[k] - prev.first[k]));
        if (residual < tol) {
            EquivariantTriplet t;
            t.h = std::move(cur.first);
            t.nu = std::move(cur.second);
            t.normalization_residual = std::abs(dot(t.nu, t.h) - 1.0);
            t.n_relax = n;
            std::vector<double> ones(static_cast<std::size_t>(grid_size), 1.0), l1(ones.size());
            build_operator(omega, 0, 0.0, Observable::zero(), grid_size).apply(ones, l1);
            t.lambda = dot(push_back(omega, 1, n, grid_size), l1);
            return t;
        }
        prev = std::move(cur);
    }
    throw ConvergenceError("estimate_triplet: h did not converge before the relaxation cap", residual);
}

HolderFunction mu_density(const MeasureStack& stack, long i) {
    auto w = stack.mu_weights(i);
    const double m = static_cast<double>(w.size());
    for (double& x : w) x *= m;
    return HolderFunction(std::move(w));
}

double equivariance_check(const MeasureStack& stack, long i, const std::function<double(double)>& g) {
    // nu is the atomic measure sum_k nu_k delta_{x_k}, as in integrate()
    const auto w0 = stack.mu_weights(i);
    const auto w1 = stack.mu_weights(i + 1);
    const SymbolParams& s = stack.path().params_at(i);
    const double m = static_cast<double>(w0.size());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < w0.size(); ++k) {
        const double x = static_cast<double>(k) / m;
        lhs += w0[k] * g(apply_map(s, x));
        rhs += w1[k] * g(x);
    }
    return std::abs(lhs - rhs);
}

DensitySampler::DensitySampler(std::span<const double> mu_weights) {
    const std::size_t m = mu_weights.size();
    if (m < 2) throw ArgumentError("DensitySampler: need at least two grid weights");
    node_.assign(mu_weights.begin(), mu_weights.end());
    for (double& x : node_) {
        if (!(x >= 0.0)) throw ArgumentError("DensitySampler: negative density");
        x *= static_cast<double>(m);
    }
    cumulative_.resize(m + 1);
    cumulative_[0] = 0.0;
    for (std::size_t k = 0; k < m; ++k)
        cumulative_[k + 1] = cumulative_[k] + 0.5 * (node_[k] + node_[(k + 1) % m]) / static_cast<double>(m);
}

double DensitySampler::operator()(double u) const {
    const std::size_t m = node_.size();
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative_.begin() - 1, 0));
    if (k >= m) k = m - 1;
    const double c = (target - cumulative_[k]) * static_cast<double>(m);
    const double p0 = node_[k], p1 = node_[(k + 1) % m];
    const double a = 0.5 * (p1 - p0);
    const double disc = std::max(0.0, p0 * p0 + 4.0 * a * c);
    const double denom = p0 + std::sqrt(disc);
    double s = denom > 0.0 ? 2.0 * c / denom : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return wrap01((static_cast<double>(k) + s) / static_cast<double>(m));
}

std::vector<double> sample_mu(const MeasureStack& stack, long i, long count, std::uint64_t seed, bool stratified) {
    if (count < 1) throw ArgumentError("sample_mu: count must be >= 1");
    const DensitySampler sampler(stack.mu_weights(i));
    CounterStream rng(seed, 0x5A3F0000ULL + static_cast<std::uint64_t>(stack.path().absolute(i)));
    std::vector<double> out(static_cast<std::size_t>(count));
    for (long n = 0; n < count; ++n) {
        double u = rng.uniform();
        if (stratified) u = (static_cast<double>(n) + u) / static_cast<double>(count);
        out[static_cast<std::size_t>(n)] = sampler(u);
    }
    return out;
}

void write_triplets_csv(std::ostream& out, const MeasureStack& stack) {
    out << "offset,lambda,k,h,nu\n";
    out.precision(17);
    for (long i = stack.first(); i <= stack.last(); ++i) {
        const auto& t = stack.triplet(i);
        for (std::size_t k = 0; k < t.h.size(); ++k)
            out << i << ',' << t.lambda << ',' << k << ',' << t.h[k] << ',' << t.nu[k] << '\n';
    }
}

}  // namespace quench
