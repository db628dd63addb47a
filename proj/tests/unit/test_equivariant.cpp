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

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "quench/equivariant.hpp"
#include "quench/error.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"

using namespace quench;
using std::numbers::pi;

namespace {
constexpr int M = 1024;
SymbolParams sym(int d, double b = 0.0, double eps = 0.0) {
    SymbolParams s;
    s.d = d;
    s.b = b;
    s.eps = eps;
    return s;
}
OmegaPath flat() { return OmegaPath::sample(0, {sym(2), sym(3, 0.2)}, {0.5, 0.5}); }
OmegaPath perturbed() { return OmegaPath::sample(1, {sym(2, 0.0, 0.05)}, {1.0}); }
OmegaPath two_symbol() { return OmegaPath::sample(4, {sym(2, 0.0, 0.05), sym(3, 0.1, 0.1)}, {0.5, 0.5}); }
double cos1(double x) { return std::cos(2 * pi * x); }
}  // namespace

TEST_CASE("potential-free triplet is exact") {
    auto t = estimate_triplet(flat(), 4, 1e-12, M);
    CHECK(t.lambda == 1.0);
    for (double v : t.h) CHECK(v == 1.0);
    for (double v : t.nu) CHECK(v == doctest::Approx(1.0 / M).epsilon(1e-14));
    auto stack = MeasureStack::build(flat(), -5, 5);
    CHECK(stack.shared());
    CHECK(stack.lambda(3) == 1.0);
}

TEST_CASE("triplet normalization and residual") {
    auto w = perturbed();
    auto t = estimate_triplet(w, 40, 1e-10, M);
    CHECK(t.normalization_residual < 1e-8);
    double nuh = 0.0;
    for (std::size_t k = 0; k < t.h.size(); ++k) nuh += t.nu[k] * t.h[k];
    CHECK(nuh == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(t.lambda > 0.0);
    CHECK(*std::min_element(t.h.begin(), t.h.end()) > 0.0);

    auto stack = MeasureStack::build(w, 0, 10, {M, 40});
    for (long i = 0; i < 10; ++i) CHECK(stack.eigen_residual(i) <= 1e-6);
    // the stack and the standalone estimate agree at offset 0
    double diff = 0.0;
    for (std::size_t k = 0; k < t.h.size(); ++k) diff = std::max(diff, std::abs(t.h[k] - stack.h(0)[k]));
    CHECK(diff < 1e-8);
    CHECK(stack.lambda(0) == doctest::Approx(t.lambda).epsilon(1e-10));
}

TEST_CASE("non-convergence is reported") {
    CHECK_THROWS_AS(estimate_triplet(perturbed(), 1, 1e-30, M, 8), ConvergenceError);
    CHECK_THROWS_AS(estimate_triplet(perturbed(), 0, 1e-8, M), ArgumentError);
}

TEST_CASE("adjoint eigen residuals on a trig dictionary") {
    auto stack = MeasureStack::build(two_symbol(), 0, 20, {M, 40});
    for (long i = 0; i < 20; ++i) {
        CHECK(stack.eigen_residual(i) <= 1e-6);
        const auto op = stack.op(i);
        for (int k = 0; k < 20; ++k) {
            auto g = HolderFunction::sample(M, [k](double x) {
                return k % 2 ? std::sin(2 * pi * (k / 2 + 1) * x) : std::cos(2 * pi * (k / 2) * x);
            });
            const auto lg = op.apply(g);
            double lhs = 0.0, rhs = 0.0;
            for (int r = 0; r < M; ++r) {
                lhs += stack.nu(i + 1)[static_cast<std::size_t>(r)] * lg[r];
                rhs += stack.nu(i)[static_cast<std::size_t>(r)] * g[r];
            }
            CHECK(std::abs(lhs - stack.lambda(i) * rhs) <= 1e-8);
        }
    }
}

TEST_CASE("lambda normalization") {
    auto f = normalize_lambda(MeasureStack::build(flat(), 0, 10));
    CHECK(f.lambda(2) == 1.0);
    auto stack = normalize_lambda(MeasureStack::build(two_symbol(), 0, 70, {M, 40}));
    for (long i = 0; i < 70; ++i) CHECK(reestimate_lambda(stack, i) == doctest::Approx(1.0).epsilon(1e-8));
    std::vector<double> u(M, 1.0), next(M);
    double worst = 0.0;
    for (long n = 0; n < 64; ++n) {
        stack.op(n).apply(u, next);
        u.swap(next);
        worst = std::max(worst, sup_norm(u));
    }
    CHECK(worst < 10.0);
    CHECK_THROWS_AS(stack.triplet(71), StateError);
}

TEST_CASE("equivariance") {
    auto stack = MeasureStack::build(flat(), 0, 10);
    CHECK(equivariance_check(stack, 0, [](double) { return 1.0; }) < 1e-12);
    CHECK(equivariance_check(stack, 0, cos1) < 1e-9);
    auto p = MeasureStack::build(perturbed(), 0, 10, {M, 40});
    CHECK(equivariance_check(p, 3, cos1) <= 1e-5);
    auto q = MeasureStack::build(two_symbol(), 0, 12, {M, 40});
    for (long i = 0; i < 12; ++i)
        for (int k = 1; k <= 3; ++k) {
            CHECK(equivariance_check(q, i, [k](double x) { return std::cos(2 * pi * k * x); }) <= 1e-5);
            CHECK(equivariance_check(q, i, [k](double x) { return std::sin(2 * pi * k * x); }) <= 1e-5);
        }
}

TEST_CASE("mu density") {
    auto u = mu_density(MeasureStack::build(flat(), 0, 3), 1);
    for (int k = 0; k < M; ++k) CHECK(u[k] == doctest::Approx(1.0).epsilon(1e-12));
    auto d = mu_density(MeasureStack::build(two_symbol(), 0, 3, {M, 40}), 2);
    double integral = 0.0;
    for (int k = 0; k < M; ++k) {
        CHECK(d[k] >= 0.0);
        integral += d[k] / M;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("sampling from mu") {
    auto stack = MeasureStack::build(flat(), 0, 3);
    const long n = 20000;
    auto xs = sample_mu(stack, 0, n, 99);
    CHECK(ks_uniform(xs) <= 1.63 / std::sqrt(double(n)));
    auto one = sample_mu(stack, 0, 1, 5);
    REQUIRE(one.size() == 1);
    CHECK(one[0] >= 0.0);
    CHECK(one[0] < 1.0);
    CHECK(sample_mu(stack, 0, 100, 7) == sample_mu(stack, 0, 100, 7));

    auto p = MeasureStack::build(two_symbol(), 0, 3, {M, 40});
    xs = sample_mu(p, 1, n, 3);
    const auto dens = mu_density(p, 1);
    for (int k = 1; k <= 2; ++k) {
        auto g = [k](double x) { return std::cos(2 * pi * k * x); };
        double quad = 0.0;
        for (int r = 0; r < M; ++r) quad += p.mu_weights(1)[static_cast<std::size_t>(r)] * g(r / double(M));
        std::vector<double> vals;
        for (double x : xs) vals.push_back(g(x));
        const double sd = std::sqrt(sample_variance(vals));
        CHECK(std::abs(mean(vals) - quad) <= 4.0 * sd / std::sqrt(double(n)));
    }
    auto strat = sample_mu(p, 1, 1000, 3, true);
    std::sort(strat.begin(), strat.end());
    CHECK(strat.front() >= 0.0);
}

TEST_CASE("density sampler inverts a linear density") {
    // density 2x on [0,1] is not periodic; use a two-cell tent instead: nodes 0 and 2
    std::vector<double> w{0.0, 1.0};
    DensitySampler s(w);
    // density p(x) = 4x on [0, 1/2], 4(1 - x) on [1/2, 1]; CDF 2x^2 on the first half
    for (double u : {0.01, 0.2, 0.49}) CHECK(s(u) == doctest::Approx(std::sqrt(u / 2)).epsilon(1e-12));
    CHECK(s(0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s(0.875) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("triplet csv") {
    auto stack = MeasureStack::build(flat(), 0, 1, {8, 4});
    std::stringstream ss;
    write_triplets_csv(ss, stack);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "offset,lambda,k,h,nu");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == 16);
}
