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

#include "quench/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "quench/equivariant.hpp"
#include "quench/error.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"

namespace quench {

TransferOperator build_operator(const OmegaPath& omega, long step, double t, const Observable& psi,
                                int grid_size, double lambda) {
    const double psi_mean = t != 0.0 ? psi.mean(omega.absolute(step)) : 0.0;
    return build_operator(omega.params_at(step), t, psi, psi_mean, grid_size, lambda);
}

TransferOperator build_operator(const SymbolParams& s, double t, const Observable& psi, double psi_mean,
                                int grid_size, double lambda) {
    using std::numbers::pi;
    if (!(std::abs(t) <= 1.0)) throw ArgumentError("build_operator: twist must satisfy |t| <= 1");
    if (grid_size < 2) throw ArgumentError("build_operator: grid too small");

    TransferOperator op;
    op.grid_size_ = grid_size;
    op.branches_ = s.d;
    op.twisted_ = t != 0.0;
    const std::size_t taps = static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(s.d);
    op.cell_.resize(taps);
    op.frac_.resize(taps);
    op.weight_re_.resize(taps);
    if (op.twisted_) op.weight_im_.resize(taps);

    const double log_d = std::log(static_cast<double>(s.d));
    std::size_t tap = 0;
    for (int r = 0; r < grid_size; ++r) {
        const double x = static_cast<double>(r) / grid_size;
        for (int i = 0; i < s.d; ++i, ++tap) {
            double y = (x - s.b + i) / s.d;
            if (y < 0.0) y += 1.0;
            if (y >= 1.0) y -= 1.0;
            const auto [cell, frac] = grid_cell(y, grid_size);
            op.cell_[tap] = cell;
            op.frac_[tap] = frac;
            const double magnitude = std::exp(-log_d + s.eps * std::cos(2.0 * pi * y)) / lambda;
            if (op.twisted_) {
                const double phase = t * (psi.raw(s, y) - psi_mean);
                op.weight_re_[tap] = magnitude * std::cos(phase);
                op.weight_im_[tap] = magnitude * std::sin(phase);
            } else {
                op.weight_re_[tap] = magnitude;
            }
        }
    }
    return op;
}

void TransferOperator::apply(std::span<const double> in, std::span<double> out) const {
    if (twisted_) throw ArgumentError("apply: twisted operator needs complex input");
    if (static_cast<int>(in.size()) != grid_size_ || static_cast<int>(out.size()) != grid_size_)
        throw ArgumentError("apply: grid mismatch");
    const int m = grid_size_;
    std::size_t tap = 0;
    for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int i = 0; i < branches_; ++i, ++tap) {
            const int c = cell_[tap];
            const int c1 = c + 1 == m ? 0 : c + 1;
            const double f = frac_[tap];
            acc += weight_re_[tap] * ((1.0 - f) * in[static_cast<std::size_t>(c)] + f * in[static_cast<std::size_t>(c1)]);
        }
        out[static_cast<std::size_t>(r)] = acc;
    }
}

void TransferOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
    if (static_cast<int>(in.size()) != grid_size_ || static_cast<int>(out.size()) != grid_size_)
        throw ArgumentError("apply: grid mismatch");
    const int m = grid_size_;
    std::size_t tap = 0;
    for (int r = 0; r < m; ++r) {
        cplx acc = 0.0;
        for (int i = 0; i < branches_; ++i, ++tap) {
            const int c = cell_[tap];
            const int c1 = c + 1 == m ? 0 : c + 1;
            const double f = frac_[tap];
            const cplx g = (1.0 - f) * in[static_cast<std::size_t>(c)] + f * in[static_cast<std::size_t>(c1)];
            const cplx w(weight_re_[tap], twisted_ ? weight_im_[tap] : 0.0);
            acc += w * g;
        }
        out[static_cast<std::size_t>(r)] = acc;
    }
}

void TransferOperator::apply_adjoint(std::span<const double> in, std::span<double> out) const {
    if (twisted_) throw ArgumentError("apply_adjoint: real operators only");
    if (static_cast<int>(in.size()) != grid_size_ || static_cast<int>(out.size()) != grid_size_)
        throw ArgumentError("apply_adjoint: grid mismatch");
    const int m = grid_size_;
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t tap = 0;
    for (int r = 0; r < m; ++r) {
        const double v = in[static_cast<std::size_t>(r)];
        for (int i = 0; i < branches_; ++i, ++tap) {
            const int c = cell_[tap];
            const int c1 = c + 1 == m ? 0 : c + 1;
            const double f = frac_[tap];
            const double wv = weight_re_[tap] * v;
            out[static_cast<std::size_t>(c)] += (1.0 - f) * wv;
            out[static_cast<std::size_t>(c1)] += f * wv;
        }
    }
}

HolderFunction TransferOperator::apply(const HolderFunction& g) const {
    std::vector<double> out(static_cast<std::size_t>(grid_size_));
    apply(g.values(), out);
    return HolderFunction(std::move(out));
}

std::vector<cplx> TransferOperator::apply(const std::vector<cplx>& g) const {
    std::vector<cplx> out(static_cast<std::size_t>(grid_size_));
    apply(std::span<const cplx>(g), out);
    return out;
}

void TransferOperator::scale_by(double s) {
    for (double& w : weight_re_) w /= s;
    for (double& w : weight_im_) w /= s;
}

void TransferOperator::write_csv(std::ostream& out) const {
    const int m = grid_size_;
    std::vector<cplx> row(static_cast<std::size_t>(m));
    std::size_t tap = 0;
    out.precision(17);
    for (int r = 0; r < m; ++r) {
        std::fill(row.begin(), row.end(), cplx{});
        for (int i = 0; i < branches_; ++i, ++tap) {
            const int c = cell_[tap];
            const int c1 = c + 1 == m ? 0 : c + 1;
            const cplx w(weight_re_[tap], twisted_ ? weight_im_[tap] : 0.0);
            row[static_cast<std::size_t>(c)] += (1.0 - frac_[tap]) * w;
            row[static_cast<std::size_t>(c1)] += frac_[tap] * w;
        }
        for (int k = 0; k < m; ++k) {
            if (k) out << ',';
            out << row[static_cast<std::size_t>(k)].real() << ',' << row[static_cast<std::size_t>(k)].imag();
        }
        out << '\n';
    }
}

OperatorCocycle::OperatorCocycle(OmegaPath omega, std::vector<double> twists, Observable psi, int grid_size)
    : omega_(std::move(omega)), twists_(std::move(twists)) {
    ops_.reserve(twists_.size());
    for (std::size_t j = 0; j < twists_.size(); ++j)
        ops_.push_back(build_operator(omega_, static_cast<long>(j), twists_[j], psi, grid_size));
}

std::vector<cplx> OperatorCocycle::apply(std::span<const cplx> g) const {
    std::vector<cplx> cur(g.begin(), g.end());
    std::vector<cplx> next(cur.size());
    for (const auto& op : ops_) {
        op.apply(std::span<const cplx>(cur), next);
        cur.swap(next);
    }
    return cur;
}

std::vector<cplx> OperatorCocycle::apply(const HolderFunction& g) const {
    std::vector<cplx> c(g.values().begin(), g.values().end());
    return apply(std::span<const cplx>(c));
}

OperatorCocycle compose_cocycle(const OmegaPath& omega, const std::vector<double>& twists, long n,
                                const Observable& psi, int grid_size) {
    if (n < 1 || static_cast<long>(twists.size()) != n)
        throw ArgumentError("compose_cocycle: need exactly n twists");
    for (double t : twists)
        if (!(std::abs(t) <= 1.0)) throw ArgumentError("compose_cocycle: twist out of [-1, 1]");
    return OperatorCocycle(omega, twists, psi, grid_size);
}

std::vector<double> iterate_one(const OmegaPath& omega, long n, int grid_size) {
    std::vector<double> cur(static_cast<std::size_t>(grid_size), 1.0);
    std::vector<double> next(cur.size());
    const auto zero = Observable::zero();
    for (long j = 0; j < n; ++j) {
        build_operator(omega, j, 0.0, zero, grid_size).apply(cur, next);
        cur.swap(next);
    }
    return cur;
}

LYReport ly_check(const OmegaPath& omega, long n, double T, const std::vector<double>& twists,
                  const HolderFunction& g, const Observable& psi, const HolderParams& p) {
    if (!(T > 0.0)) throw ArgumentError("ly_check: T must be > 0");
    for (double t : twists)
        if (std::abs(t) > T) throw ArgumentError("ly_check: twist outside [-T, T]");
    const int m = g.size();
    const auto cocycle = compose_cocycle(omega, twists, n, psi, m);
    const auto image = cocycle.apply(g);

    LYReport r;
    r.lhs = holder_norm(std::span<const cplx>(image), p);
    const double l1 = sup_norm(iterate_one(omega, n, m));
    const double gamma = expansion_product(omega, 0, n);
    const double q = q_series(shift(omega, n), p).value;
    r.rhs = l1 * (holder_seminorm(g, p) * std::pow(gamma, -p.alpha) + (1.0 + 2.0 * q) * (1.0 + T) * sup_norm(g));
    r.slack = r.rhs - r.lhs;
    r.satisfied = r.lhs <= r.rhs * (1.0 + 1e-8);
    return r;
}

std::vector<HolderFunction> test_dictionary(int grid_size, const HolderParams& p, std::uint64_t seed,
                                            int random_count) {
    using std::numbers::pi;
    std::vector<HolderFunction> dict;
    dict.push_back(HolderFunction::constant(grid_size, 1.0));
    for (int k = 1; k <= 3; ++k) {
        dict.push_back(HolderFunction::sample(grid_size, [k](double x) { return std::cos(2.0 * pi * k * x); }));
        dict.push_back(HolderFunction::sample(grid_size, [k](double x) { return std::sin(2.0 * pi * k * x); }));
    }
    CounterStream rng(seed, 0xD1C7);
    for (int r = 0; r < random_count; ++r) {
        std::vector<double> a(7), b(7);
        for (int k = 0; k < 7; ++k) {
            a[static_cast<std::size_t>(k)] = rng.normal() / (1.0 + k * k);
            b[static_cast<std::size_t>(k)] = rng.normal() / (1.0 + k * k);
        }
        dict.push_back(HolderFunction::sample(grid_size, [&](double x) {
            double v = a[0];
            for (int k = 1; k < 7; ++k)
                v += a[static_cast<std::size_t>(k)] * std::cos(2.0 * pi * k * x) +
                     b[static_cast<std::size_t>(k)] * std::sin(2.0 * pi * k * x);
            return v;
        }));
    }
    for (auto& g : dict) g *= 1.0 / holder_norm(g, p);
    return dict;
}

NormBoundReport norm_bound_check(const OmegaPath& omega, long n, const std::vector<double>& twists,
                                 const Observable& psi, const HolderParams& p,
                                 const std::vector<HolderFunction>& dictionary) {
    if (dictionary.empty()) throw ArgumentError("norm_bound_check: empty dictionary");
    const int m = dictionary.front().size();
    const auto cocycle = compose_cocycle(omega, twists, n, psi, m);
    NormBoundReport r;
    for (const auto& g : dictionary) {
        const auto image = cocycle.apply(g);
        r.max_ratio = std::max(r.max_ratio, holder_norm(std::span<const cplx>(image), p) / holder_norm(g, p));
    }
    r.l1_norm = sup_norm(iterate_one(omega, n, m));
    r.bound = 4.0 * (1.0 + q_series(shift(omega, n), p).value) * r.l1_norm;
    r.certified = r.max_ratio <= r.bound * (1.0 + 1e-8);
    return r;
}

HolderFunction normalized_apply(const MeasureStack& stack, long first, const HolderFunction& g, long n) {
    if (!stack.lambda_normalized()) throw StateError("normalized_apply: stack is not lambda-normalized");
    if (n < 0) throw ArgumentError("normalized_apply: n must be >= 0");
    if (!stack.covers(first) || !stack.covers(first + n))
        throw StateError("normalized_apply: offsets outside the measure stack window");
    if (g.size() != stack.grid_size()) throw ArgumentError("normalized_apply: grid mismatch");
    const std::size_t m = static_cast<std::size_t>(g.size());
    std::vector<double> cur(m), next(m);
    const auto h0 = stack.h(first);
    for (std::size_t k = 0; k < m; ++k) cur[k] = g.values()[k] * h0[k];
    for (long j = 0; j < n; ++j) {
        stack.op(first + j).apply(cur, next);
        cur.swap(next);
    }
    const auto hn = stack.h(first + n);
    for (std::size_t k = 0; k < m; ++k) cur[k] /= hn[k];
    return HolderFunction(std::move(cur));
}

DecayFit decay_rate(const MeasureStack& stack, long first, const HolderFunction& g, long n_max,
                    const HolderParams& p) {
    if (!stack.lambda_normalized()) throw StateError("decay_rate: stack is not lambda-normalized");
    if (std::abs(stack.integrate(first, g.values())) > 1e-9)
        throw PreconditionError("decay_rate: g must have zero mu_omega-mean");
    if (!stack.covers(first + n_max)) throw StateError("decay_rate: window too short for n_max");

    const std::size_t m = static_cast<std::size_t>(g.size());
    const double floor = 1e-14 * std::max(1.0, sup_norm(g));
    std::vector<double> cur(m), next(m);
    const auto h0 = stack.h(first);
    for (std::size_t k = 0; k < m; ++k) cur[k] = g.values()[k] * h0[k];

    DecayFit fit;
    std::vector<double> xs, ys;
    for (long n = 1; n <= n_max; ++n) {
        stack.op(first + n - 1).apply(cur, next);
        cur.swap(next);
        const auto hn = stack.h(first + n);
        double norm = 0.0;
        for (std::size_t k = 0; k < m; ++k) norm = std::max(norm, std::abs(cur[k] / hn[k]));
        fit.norms.push_back(norm);
        if (norm > floor) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(norm));
        }
    }
    if (xs.size() < 2) {
        fit.instant_decay = true;
        fit.lambda_hat = std::numeric_limits<double>::infinity();
        return fit;
    }
    const auto line = linear_fit(xs, ys);
    fit.lambda_hat = -line.slope;
    fit.r_squared = line.r_squared;
    const double q = q_series(shift(stack.path(), first), p).value;
    fit.K_hat = std::exp(line.intercept) / (std::max(1.0, 1.0 / q) * holder_norm(g, p));
    return fit;
}

}  // namespace quench
