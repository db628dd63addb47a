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

#include <cmath>
#include <numbers>

#include "quench/birkhoff.hpp"
#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"

using namespace quench;
using std::numbers::pi;

namespace {
SymbolParams sym(int d, double b = 0.0, double eps = 0.0, double a = 1.0, double c = 0.0) {
    SymbolParams s;
    s.d = d;
    s.b = b;
    s.eps = eps;
    s.a = a;
    s.c = c;
    return s;
}
std::shared_ptr<const MeasureStack> doubling_stack(long last = 1 << 12) {
    auto w = OmegaPath::sample(0, {sym(2)}, {1.0});
    return std::make_shared<const MeasureStack>(normalize_lambda(MeasureStack::build(w, 0, last, {1024, 4})));
}
std::shared_ptr<const MeasureStack> mixed_stack(long last, int m = 256) {
    auto w = OmegaPath::sample(7, {sym(2, 0.0, 0.05), sym(3, 0.1, 0.1, 0.5, 0.5)}, {0.5, 0.5});
    return std::make_shared<const MeasureStack>(normalize_lambda(MeasureStack::build(w, 0, last, {m, 40})));
}
}  // namespace

TEST_CASE("centering") {
    auto flat = doubling_stack(16);
    auto c = center_observable(Observable::trig(), *flat);
    CHECK(std::abs(c.mean(3)) < 1e-15);
    auto five = center_observable(Observable::constant(5.0), *flat);
    for (double x : {0.0, 0.3, 0.9}) CHECK(std::abs(five.value(flat->path(), 2, x)) < 1e-12);

    auto st = mixed_stack(40);
    auto once = center_observable(Observable::trig(), *st);
    auto twice = center_observable(once, *st);
    CHECK(centering_residual(once, *st) <= 1e-9);
    for (long i = 0; i <= 40; ++i) CHECK(once.mean(i) == twice.mean(i));
    CHECK_THROWS_AS(once.mean(41), StateError);
}

TEST_CASE("Birkhoff sums") {
    auto w = OmegaPath::sample(3, {sym(2, 0.1), sym(3, 0.4, 0.0, 0.7, 0.2)}, {0.5, 0.5});
    CHECK(birkhoff_sum(w, Observable::zero(), 0.3, 50) == 0.0);
    auto psi = Observable::trig();
    CHECK(birkhoff_sum(w, psi, 0.3, 1) == psi.value(w, 0, 0.3));
    CounterStream rng(2, 0);
    for (int t = 0; t < 100; ++t) {
        const double x = rng.uniform();
        const long n = static_cast<long>(rng() % 20), m = static_cast<long>(rng() % 20);
        const double lhs = birkhoff_sum(w, psi, x, n + m);
        const double rhs = birkhoff_sum(w, psi, x, n) + birkhoff_sum(shift(w, n), psi, iterate(w, x, n).back(), m);
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
    CHECK_THROWS_AS(birkhoff_sum(w, psi, 0.1, -1), ArgumentError);
}

TEST_CASE("backward trajectories are orbits") {
    auto st = mixed_stack(64);
    auto psi = center_observable(Observable::trig(), *st);
    TrajectoryEnsemble ens(st, psi, 0, 64, 20, 5);
    std::vector<double> vals(64), again(64);
    for (long k = 0; k < 20; ++k) {
        const double x0 = ens.trajectory(k, vals);
        CHECK(ens.trajectory(k, again) == x0);
        CHECK(vals == again);
        // forward iteration keeps about 52 - n log2(3) good bits; compare the first steps
        double x = x0;
        for (long j = 0; j < 20; ++j) {
            CHECK(std::abs(psi.value(st->path(), j, x) - vals[static_cast<std::size_t>(j)]) < 1e-6);
            x = apply_map(st->path().params_at(j), x);
        }
    }
    CHECK_THROWS_AS(TrajectoryEnsemble(st, psi, 0, 65, 10, 1), StateError);
}

TEST_CASE("trajectory points follow mu at every offset") {
    auto st = mixed_stack(32);
    auto psi = center_observable(Observable::trig(), *st);
    TrajectoryEnsemble ens(st, psi, 0, 32, 20000, 8);
    std::vector<double> sum(32), sq(32);
    ens.for_each(1, [&](long, double, std::span<const double> v) {
        for (std::size_t j = 0; j < 32; ++j) {
            sum[j] += v[j];
            sq[j] += v[j] * v[j];
        }
    });
    for (std::size_t j = 0; j < 32; ++j) {
        const double m = sum[j] / 20000, sd = std::sqrt(sq[j] / 20000 - m * m);
        CHECK(std::abs(m) <= 4.0 * sd / std::sqrt(20000.0));
    }
}

TEST_CASE("ensemble output does not depend on workers") {
    auto st = mixed_stack(40);
    auto psi = center_observable(Observable::trig(), *st);
    TrajectoryEnsemble ens(st, psi, 0, 40, 101, 3);
    CHECK(ens.sums_at({10, 40}, 1) == ens.sums_at({10, 40}, 3));
    CHECK_THROWS_AS(ens.sums_at({41}), ArgumentError);
}

TEST_CASE("doubling variance by Monte Carlo") {
    auto st = doubling_stack();
    auto psi = center_observable(Observable::trig(), *st);
    TrajectoryEnsemble zero(st, center_observable(Observable::zero(), *st), 0, 64, 100, 1);
    CHECK(variance_mc(zero, 64).value == 0.0);
    TrajectoryEnsemble ens(st, psi, 0, 1 << 12, 10000, 1);
    const auto e = variance_mc(ens, 1 << 12);
    CHECK(e.value == doctest::Approx(0.5).epsilon(0.04));
    TrajectoryEnsemble twice(st, psi.scaled(2.0), 0, 1 << 12, 10000, 1);
    CHECK(variance_mc(twice, 1 << 12).value == doctest::Approx(4.0 * e.value).epsilon(1e-9));
}

TEST_CASE("pair correlations") {
    auto st = doubling_stack(16);
    auto psi = center_observable(Observable::trig(), *st);
    CHECK(pair_correlation(*st, psi, 3, 3) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(pair_correlation(*st, psi, 3, 4)) < 1e-15);
    CHECK_THROWS_AS(pair_correlation(*st, psi, 4, 3), ArgumentError);
    CHECK_THROWS_AS(pair_correlation(*st, Observable::constant(1.0), 2, 3), PreconditionError);

    auto m = mixed_stack(16);
    auto q = center_observable(Observable::trig(), *m);
    TrajectoryEnsemble ens(m, q, 0, 8, 40000, 6);
    for (long lag : {0L, 1L, 2L}) {
        std::vector<double> prod;
        ens.for_each(1, [&](long, double, std::span<const double> v) {
            prod.push_back(v[2] * v[static_cast<std::size_t>(2 + lag)]);
        });
        const double se = std::sqrt(sample_variance(prod) / prod.size());
        CHECK(std::abs(mean(prod) - pair_correlation(*m, q, 2, 2 + lag)) <= 3.0 * se);
    }
    auto band = CorrelationBand::compute(*m, q, 0, 16);
    CHECK(band.at(2, 1) == doctest::Approx(pair_correlation(*m, q, 2, 3)).epsilon(1e-10));
    CHECK(band.at(5, 4) == doctest::Approx(pair_correlation(*m, q, 5, 9)).epsilon(1e-10));
}

TEST_CASE("operator variance") {
    auto st = doubling_stack(1 << 10);
    CHECK(variance_operator(*st, center_observable(Observable::trig(), *st), 0, 1 << 10) ==
          doctest::Approx(0.5).epsilon(2e-6));
    CHECK(variance_operator(*st, center_observable(Observable::zero(), *st), 0, 100) == 0.0);

    auto m = mixed_stack(1 << 10);
    auto q = center_observable(Observable::trig(), *m);
    const double op = variance_operator(*m, q, 0, 1 << 10);
    TrajectoryEnsemble ens(m, q, 0, 1 << 10, 10000, 11);
    const auto mc = variance_mc(ens, 1 << 10);
    CHECK(std::abs(mc.value - op) <= 3.0 * mc.std_error);
}

TEST_CASE("second moments from any start offset") {
    auto m = mixed_stack(300);
    auto q = center_observable(Observable::trig(), *m);
    auto band = CorrelationBand::compute(*m, q, 0, 300);
    const auto from10 = band.second_moments(10, 50);
    // brute force over the pair matrix
    double brute = 0.0;
    for (long j = 10; j < 60; ++j)
        for (long k = 10; k < 60; ++k) brute += band.at(std::min(j, k), std::abs(j - k));
    CHECK(from10.back() == doctest::Approx(brute).epsilon(1e-12));
    CHECK_THROWS_AS(band.second_moments(280, 30), StateError);
}

TEST_CASE("variance grows linearly") {
    auto m = mixed_stack(1 << 14);
    auto q = center_observable(Observable::trig(), *m);
    auto band = CorrelationBand::compute(*m, q, 0, 1 << 14);
    const auto sm = band.second_moments(0, 1 << 14);
    std::vector<double> xs, ys;
    for (long n : dyadic_grid(8, 14)) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(sm[static_cast<std::size_t>(n - 1)]);
    }
    const auto fit = linear_fit(xs, ys);
    CHECK(fit.r_squared >= 0.99);
    CHECK(fit.slope > 0.0);
}

TEST_CASE("coboundary dichotomy") {
    auto st = mixed_stack(1 << 12);
    VarianceOptions o;
    o.checkpoints = dyadic_grid(5, 12);
    o.trajectories = 500;
    o.seed = 4;
    auto cob = variance_report(st, center_observable(Observable::coboundary(), *st), 0, o);
    CHECK(cob.diagnostics.verdict == Verdict::coboundary_suspected);
    CHECK(cob.sigma2_mc <= 0.01);
    auto pos = variance_report(st, center_observable(Observable::trig(), *st), 0, o);
    CHECK(pos.diagnostics.verdict == Verdict::positive_variance);
    o.monte_carlo = false;
    auto zero = variance_report(st, center_observable(Observable::zero(), *st), 0, o);
    CHECK(zero.diagnostics.verdict == Verdict::coboundary_suspected);

    // noisy flat estimates straddling zero stay inconclusive
    std::vector<VarianceCheckpoint> noisy;
    for (long n : dyadic_grid(5, 14)) noisy.push_back({n, 1e-3, 1e-3, 0.0});
    CHECK(coboundary_test(noisy).verdict == Verdict::inconclusive);
}

TEST_CASE("sigma_n") {
    CHECK(sigma_n(0.0, 100) == 0.0);
    CHECK(sigma_n(0.5, 4096) == doctest::Approx(45.25).epsilon(0.01));
    auto m = mixed_stack(1 << 12);
    auto q = center_observable(Observable::trig(), *m);
    auto band = CorrelationBand::compute(*m, q, 0, 1 << 12);
    const auto sm = band.second_moments(0, 1 << 12);
    const double s1 = std::sqrt(sm[(1 << 11) - 1]), s2 = std::sqrt(sm[(1 << 12) - 1]);
    CHECK(s2 / s1 == doctest::Approx(std::sqrt(2.0)).epsilon(0.03));
}
