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

#include <cmath>
#include <complex>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "quench/driving.hpp"

namespace quench {

struct HolderParams {
    double alpha = 1.0;  // (0, 1]
    double xi = 0.25;    // (0, 1/4]

    void validate() const;  // throws ConfigError
};

/// Real function on the circle, sampled at x_k = k/M and extended by
/// periodic piecewise-linear interpolation.
class HolderFunction {
public:
    HolderFunction() = default;
    explicit HolderFunction(std::vector<double> values);

    static HolderFunction constant(int grid_size, double value);

    template <class F>
    static HolderFunction sample(int grid_size, F&& f) {
        std::vector<double> v(static_cast<std::size_t>(grid_size));
        for (int k = 0; k < grid_size; ++k) v[static_cast<std::size_t>(k)] = f(static_cast<double>(k) / grid_size);
        return HolderFunction(std::move(v));
    }

    int size() const noexcept { return static_cast<int>(values_.size()); }
    double operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }

    /// Periodic piecewise-linear evaluation; exact at grid points.
    double operator()(double x) const noexcept;

    HolderFunction& operator+=(const HolderFunction& other);
    HolderFunction& operator-=(const HolderFunction& other);
    HolderFunction& operator*=(double s);
    friend HolderFunction operator+(HolderFunction a, const HolderFunction& b) { return a += b; }
    friend HolderFunction operator-(HolderFunction a, const HolderFunction& b) { return a -= b; }
    friend HolderFunction operator*(HolderFunction a, double s) { return a *= s; }
    friend HolderFunction operator*(double s, HolderFunction a) { return a *= s; }

private:
    std::vector<double> values_;
};

/// Interpolation cell and weight of x on an M-point periodic grid.
inline std::pair<int, double> grid_cell(double x, int grid_size) noexcept {
    double pos = (x - std::floor(x)) * grid_size;
    int cell = static_cast<int>(pos);
    if (cell >= grid_size) cell = grid_size - 1;
    return {cell, pos - cell};
}

template <class T>
T interpolate(std::span<const T> values, double x) noexcept {
    const int m = static_cast<int>(values.size());
    const auto [cell, frac] = grid_cell(x, m);
    const int next = cell + 1 == m ? 0 : cell + 1;
    return (1.0 - frac) * values[static_cast<std::size_t>(cell)] + frac * values[static_cast<std::size_t>(next)];
}

double sup_norm(std::span<const double> values) noexcept;
double sup_norm(std::span<const std::complex<double>> values) noexcept;
inline double sup_norm(const HolderFunction& g) noexcept { return sup_norm(g.values()); }

/// max |g(x_k) - g(x_l)| / rho(x_k, x_l)^alpha over grid pairs with rho < xi.
/// A lower estimate of v_{alpha,xi}; exact for the interpolant when alpha = 1.
/// Throws ConfigError when the grid spacing is not below xi.
double holder_seminorm(std::span<const double> values, const HolderParams& p);
double holder_seminorm(std::span<const std::complex<double>> values, const HolderParams& p);
inline double holder_seminorm(const HolderFunction& g, const HolderParams& p) { return holder_seminorm(g.values(), p); }

template <class T>
double holder_norm(std::span<const T> values, const HolderParams& p) {
    return sup_norm(values) + holder_seminorm(values, p);
}
inline double holder_norm(const HolderFunction& g, const HolderParams& p) { return holder_norm(g.values(), p); }

struct QEstimate {
    double value = 0.0;      // partial sum over j = 1..terms_used
    long terms_used = 0;
    double tail_bound = 0.0; // geometric bound on the omitted terms
};

/// Q_omega(H) = sum_{j>=1} H_{sigma^-j omega} gamma_{sigma^-j omega, j}^-alpha,
/// truncated once the worst-case geometric tail is <= tol * partial sum.
QEstimate q_series(const OmegaPath& omega, const HolderParams& p, double tol = 1e-10);

struct DistortionReport {
    double worst_ratio = 0.0;     // max |S(y_i) - S(y_i')| / (rho^alpha Q_{sigma^n omega})
    double max_difference = 0.0;
    double bound = 0.0;           // rho^alpha(x, x') Q_{sigma^n omega}(H)
    long branches = 0;
    bool ok = true;
};

/// Checks the distortion bound for S_n phi = sum_j phi_j o f^j over all
/// paired n-step inverse branches of x, x' in the fiber of sigma^n omega.
DistortionReport distortion_check(const OmegaPath& omega, long n, const std::vector<HolderFunction>& phis,
                                  double x, double x_prime, const HolderParams& p);

/// CSV layout: "M,alpha,xi" header, one data row, then a "value" header
/// followed by M rows.
void write_csv(std::ostream& out, const HolderFunction& g, const HolderParams& p);
HolderFunction read_csv(std::istream& in, HolderParams* params = nullptr);

}  // namespace quench
