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

#include "quench/holder.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "quench/error.hpp"
#include "quench/fiber.hpp"

namespace quench {

void HolderParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("holder.alpha must lie in (0, 1]");
    if (!(xi > 0.0 && xi <= 0.25)) throw ConfigError("holder.xi must lie in (0, 1/4]");
}

HolderFunction::HolderFunction(std::vector<double> values) : values_(std::move(values)) {
    const auto m = values_.size();
    if (m < 2 || (m & (m - 1)) != 0) throw ConfigError("grid size must be a power of two >= 2");
}

HolderFunction HolderFunction::constant(int grid_size, double value) {
    return HolderFunction(std::vector<double>(static_cast<std::size_t>(grid_size), value));
}

double HolderFunction::operator()(double x) const noexcept { return interpolate<double>(values_, x); }

HolderFunction& HolderFunction::operator+=(const HolderFunction& other) {
    if (other.size() != size()) throw ArgumentError("grid mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

HolderFunction& HolderFunction::operator-=(const HolderFunction& other) {
    if (other.size() != size()) throw ArgumentError("grid mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

HolderFunction& HolderFunction::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

double sup_norm(std::span<const double> values) noexcept {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double sup_norm(std::span<const std::complex<double>> values) noexcept {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
}

namespace {

template <class T>
double seminorm_scan(std::span<const T> values, const HolderParams& p) {
    const int m = static_cast<int>(values.size());
    // lags l with l/M < xi
    int max_lag = static_cast<int>(std::ceil(p.xi * m)) - 1;
    max_lag = std::min(max_lag, m / 2);
    if (max_lag < 1) throw ConfigError("grid too coarse: spacing 1/M must be < xi");

    std::vector<double> inv_rho(static_cast<std::size_t>(max_lag) + 1);
    for (int l = 1; l <= max_lag; ++l)
        inv_rho[static_cast<std::size_t>(l)] = std::pow(static_cast<double>(l) / m, -p.alpha);

    double best = 0.0;
    if (p.alpha == 1.0) {
        // For alpha = 1 the pair maximum is attained on adjacent points.
        for (int k = 0; k < m; ++k) {
            const int next = k + 1 == m ? 0 : k + 1;
            best = std::max(best, std::abs(values[static_cast<std::size_t>(next)] - values[static_cast<std::size_t>(k)]));
        }
        return best * m;
    }
    for (int k = 0; k < m; ++k) {
        const T base = values[static_cast<std::size_t>(k)];
        for (int l = 1; l <= max_lag; ++l) {
            int other = k + l;
            if (other >= m) other -= m;
            const double diff = std::abs(values[static_cast<std::size_t>(other)] - base);
            best = std::max(best, diff * inv_rho[static_cast<std::size_t>(l)]);
        }
    }
    return best;
}

}  // namespace

double holder_seminorm(std::span<const double> values, const HolderParams& p) { return seminorm_scan(values, p); }

double holder_seminorm(std::span<const std::complex<double>> values, const HolderParams& p) {
    return seminorm_scan(values, p);
}

QEstimate q_series(const OmegaPath& omega, const HolderParams& p, double tol) {
    if (!(tol > 0.0)) throw ArgumentError("q_series: tol must be > 0");
    const double gamma_min = omega.min_branches();
    const double h_max = omega.max_holder_bound();
    const double ratio = std::pow(gamma_min, -p.alpha);

    QEstimate q;
    double gamma = 1.0;
    double geometric = 1.0;  // gamma_min^{-alpha j}
    for (long j = 1;; ++j) {
        const auto& s = omega.params_at(-j);
        gamma *= s.d;
        q.value += s.holder_bound * std::pow(gamma, -p.alpha);
        geometric *= ratio;
        q.terms_used = j;
        q.tail_bound = h_max * geometric / (1.0 - ratio);
        if (q.tail_bound <= tol * q.value || j >= 100000) break;
    }
    return q;
}

namespace {

struct DistortionWalk {
    const std::vector<SymbolParams>* steps;
    const std::vector<HolderFunction>* phis;
    double max_diff = 0.0;
    long branches = 0;

    // acc / acc_p are partial Birkhoff sums over levels j+1..n-1.
    void descend(long j, double x, double xp, double acc, double acc_p) {
        const auto& s = (*steps)[static_cast<std::size_t>(j)];
        const auto& phi = (*phis)[static_cast<std::size_t>(j)];
        for (int i = 0; i < s.d; ++i) {
            const double y = (x - s.b + i) / s.d;
            const double yp = (xp - s.b + i) / s.d;
            const double a = acc + phi(wrap01(y));
            const double ap = acc_p + phi(wrap01(yp));
            if (j == 0) {
                ++branches;
                max_diff = std::max(max_diff, std::abs(a - ap));
            } else {
                descend(j - 1, y, yp, a, ap);
            }
        }
    }
};

}  // namespace

DistortionReport distortion_check(const OmegaPath& omega, long n, const std::vector<HolderFunction>& phis,
                                  double x, double x_prime, const HolderParams& p) {
    if (n < 1) throw ArgumentError("distortion_check: n must be >= 1");
    if (static_cast<long>(phis.size()) < n) throw ArgumentError("distortion_check: need one function per step");
    const double rho = circle_distance(x, x_prime);
    if (rho >= p.xi) throw PreconditionError("distortion_check: rho(x, x') must be < xi");

    std::vector<SymbolParams> steps;
    for (long j = 0; j < n; ++j) {
        steps.push_back(omega.params_at(j));
        const double v = holder_seminorm(phis[static_cast<std::size_t>(j)], p);
        if (v > steps.back().holder_bound * (1.0 + 1e-12))
            throw PreconditionError("distortion_check: seminorm of phi_" + std::to_string(j) + " exceeds H");
    }

    DistortionWalk walk{&steps, &phis};
    const double xl = wrap01(x);
    walk.descend(n - 1, xl, xl + circle_delta(xl, x_prime), 0.0, 0.0);

    DistortionReport r;
    r.branches = walk.branches;
    r.max_difference = walk.max_diff;
    r.bound = std::pow(rho, p.alpha) * q_series(shift(omega, n), p).value;
    r.worst_ratio = r.bound > 0.0 ? r.max_difference / r.bound : (r.max_difference > 0.0 ? INFINITY : 0.0);
    r.ok = r.max_difference <= r.bound + 1e-12;
    return r;
}

void write_csv(std::ostream& out, const HolderFunction& g, const HolderParams& p) {
    out << "M,alpha,xi\n" << g.size() << ',' << std::setprecision(17) << p.alpha << ',' << p.xi << "\nvalue\n";
    for (double v : g.values()) out << v << '\n';
}

HolderFunction read_csv(std::istream& in, HolderParams* params) {
    std::string line;
    if (!std::getline(in, line) || line != "M,alpha,xi") throw ConfigError("holder csv: bad header");
    if (!std::getline(in, line)) throw ConfigError("holder csv: missing parameter row");
    std::istringstream row(line);
    int m = 0;
    HolderParams p;
    char comma = 0;
    row >> m >> comma >> p.alpha >> comma >> p.xi;
    if (!row || m < 2) throw ConfigError("holder csv: bad parameter row");
    if (!std::getline(in, line) || line != "value") throw ConfigError("holder csv: missing value header");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(m));
    while (std::getline(in, line) && !line.empty()) values.push_back(std::stod(line));
    if (static_cast<int>(values.size()) != m) throw ConfigError("holder csv: expected M values");
    if (params) *params = p;
    return HolderFunction(std::move(values));
}

}  // namespace quench
