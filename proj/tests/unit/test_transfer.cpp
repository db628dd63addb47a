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
#include <functional>
#include <sstream>

#include "quench/equivariant.hpp"
#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/rng.hpp"
#include "quench/transfer.hpp"

using namespace quench;
using std::numbers::pi;

namespace {
constexpr int M = 1024;
SymbolParams sym(int d, double b = 0.0, double eps = 0.0, double hb = 8.0) {
    SymbolParams s;
    s.d = d;
    s.b = b;
    s.eps = eps;
    s.holder_bound = hb;
    return s;
}
OmegaPath doubling() { return OmegaPath::sample(0, {sym(2)}, {1.0}); }
OmegaPath mixed(std::uint64_t seed = 3) {
    return OmegaPath::sample(seed, {sym(2, 0.0, 0.05), sym(3, 0.1, 0.1)}, {0.5, 0.5});
}
HolderFunction trig(int k, bool sine = false) {
    return HolderFunction::sample(M, [=](double x) { return sine ? std::sin(2 * pi * k * x) : std::cos(2 * pi * k * x); });
}
std::vector<double> random_twists(CounterStream& rng, long n, double T) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (double& v : t) v = T * (2 * rng.uniform() - 1);
    return t;
}
// closed-form branch sum of the doubling operator on g, evaluated at x
double doubling_branch_sum(const std::function<double(double)>& g, double x) {
    return 0.5 * (g(x / 2) + g(x / 2 + 0.5));
}
}  // namespace

TEST_CASE("untwisted doubling operator") {
    auto op = build_operator(doubling(), 0, 0.0, Observable::trig(), M);
    auto one = op.apply(HolderFunction::constant(M, 1.0));
    for (int k = 0; k < M; ++k) CHECK(one[k] == 1.0);
    auto c1 = op.apply(trig(1));
    CHECK(sup_norm(c1) < 1e-15);
    const auto g2 = trig(2);
    auto c2 = op.apply(g2);
    for (int k = 0; k < M; ++k) {
        const double x = k / double(M);
        // branch sum of the interpolant is what the grid operator computes
        const double oracle = doubling_branch_sum([&](double y) { return g2(y); }, x);
        CHECK(c2[k] == doctest::Approx(oracle).epsilon(1e-12));
        // interpolation error of cos 4 pi x is at most (4 pi)^2 / (8 M^2)
        CHECK(std::abs(c2[k] - std::cos(2 * pi * x)) <= 16 * pi * pi / (8.0 * M * M));
        if (k % 2 == 0) CHECK(c2[k] == doctest::Approx(std::cos(2 * pi * x)).epsilon(1e-12));
    }
}

TEST_CASE("operator agrees with an exact branch sum up to interpolation") {
    auto w = mixed();
    const double t = 0.7;
    auto psi = Observable::trig();
    auto g = [](double x) { return std::exp(std::sin(2 * pi * x)); };
    auto op = build_operator(w, 0, t, psi, M);
    auto gh = HolderFunction::sample(M, g);
    std::vector<cplx> in(gh.values().begin(), gh.values().end());
    auto out = op.apply(in);
    const auto& s = w.params_at(0);
    double err = 0.0;
    for (int r = 0; r < M; r += 37) {
        const double x = r / double(M);
        cplx exact = 0.0;
        for (int i = 0; i < s.d; ++i) {
            const double y = wrap01((x - s.b + i) / s.d);
            const double phi = -std::log(double(s.d)) + s.eps * std::cos(2 * pi * y);
            exact += std::exp(cplx(phi, t * psi.raw(s, y))) * g(y);
        }
        err = std::max(err, std::abs(out[static_cast<std::size_t>(r)] - exact));
    }
    // linear interpolation error is O(|g''| / M^2)
    CHECK(err < 1e-5);
}

TEST_CASE("linearity and positivity") {
    auto op = build_operator(mixed(), 1, 0.0, Observable::trig(), M);
    CHECK(sup_norm(op.apply(HolderFunction::constant(M, 0.0))) == 0.0);
    auto g1 = trig(3), g2 = trig(1, true);
    auto lhs = op.apply(g1 + g2);
    auto rhs = op.apply(g1) + op.apply(g2);
    CHECK(sup_norm(lhs - rhs) < 1e-10);
    auto pos = op.apply(HolderFunction::sample(M, [](double x) { return x * x; }));
    for (int k = 0; k < M; ++k) CHECK(pos[k] >= 0.0);
    CHECK_THROWS_AS(op.apply(HolderFunction::constant(64, 1.0)), ArgumentError);
    CHECK_THROWS_AS(build_operator(mixed(), 0, 1.5, Observable::trig(), M), ArgumentError);
}

TEST_CASE("cocycle composition") {
    auto w = mixed();
    auto psi = Observable::trig();
    auto g = trig(1);
    auto single = compose_cocycle(w, {0.4}, 1, psi, M).apply(g);
    auto direct = build_operator(w, 0, 0.4, psi, M).apply(std::vector<cplx>(g.values().begin(), g.values().end()));
    for (int k = 0; k < M; ++k) CHECK(std::abs(single[static_cast<std::size_t>(k)] - direct[static_cast<std::size_t>(k)]) == 0.0);

    auto untwisted = compose_cocycle(w, std::vector<double>(5, 0.0), 5, psi, M).apply(HolderFunction::constant(M, 1.0));
    auto l1 = iterate_one(w, 5, M);
    for (int k = 0; k < M; ++k) CHECK(std::abs(untwisted[static_cast<std::size_t>(k)] - l1[static_cast<std::size_t>(k)]) < 1e-12);

    CounterStream rng(2, 0);
    const auto t = random_twists(rng, 7, 1.0);
    auto full = compose_cocycle(w, t, 7, psi, M).apply(g);
    auto head = compose_cocycle(w, {t.begin(), t.begin() + 3}, 3, psi, M).apply(g);
    auto tail = compose_cocycle(shift(w, 3), {t.begin() + 3, t.end()}, 4, psi, M).apply(std::span<const cplx>(head));
    double diff = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) diff = std::max(diff, std::abs(full[k] - tail[k]));
    CHECK(diff < 1e-9);

    CHECK_THROWS_AS(compose_cocycle(w, {0.1, 2.0}, 2, psi, M), ArgumentError);
    CHECK_THROWS_AS(compose_cocycle(w, {0.1}, 2, psi, M), ArgumentError);
}

TEST_CASE("Lasota-Yorke inequality") {
    const HolderParams p{};
    auto psi = Observable::trig();
    auto plain = OmegaPath::sample(0, {sym(2, 0.0, 0.0, 2 * pi)}, {1.0});
    auto r = ly_check(plain, 3, 1.0, {0, 0, 0}, HolderFunction::constant(M, 1.0), psi, p);
    CHECK(r.lhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.satisfied);
    CHECK(r.rhs >= 1.0);

    CounterStream rng(9, 9);
    r = ly_check(plain, 5, 1.0, random_twists(rng, 5, 1.0), trig(1), psi, p);
    CHECK(r.satisfied);

    auto w = OmegaPath::sample(5, {sym(2, 0.0, 0.05, 2 * pi), sym(3, 0.1, 0.1, 2 * pi)}, {0.5, 0.5});
    const auto dict = test_dictionary(M, p, 4, 20);
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const long n = 1 + static_cast<long>(rng() % 8);
        const double T = 0.1 + 0.9 * rng.uniform();
        const auto& g = dict[static_cast<std::size_t>(trial) % dict.size()];
        ok += ly_check(shift(w, trial), n, T, random_twists(rng, n, T), g, psi, p).satisfied;
    }
    CHECK(ok == 100);
    CHECK_THROWS_AS(ly_check(w, 2, 0.5, {0.9, 0.0}, trig(1), psi, p), ArgumentError);
}

TEST_CASE("operator norm bounds") {
    const HolderParams p{};
    auto psi = Observable::trig();
    auto plain = OmegaPath::sample(0, {sym(2, 0.0, 0.0, 2 * pi)}, {1.0});
    const auto dict = test_dictionary(M, p, 1);
    for (const auto& g : dict) CHECK(holder_norm(g, p) == doctest::Approx(1.0));
    auto r = norm_bound_check(plain, 1, {0.0}, psi, p, dict);
    CHECK(r.certified);
    CHECK(r.bound == doctest::Approx(4.0 * (1.0 + 2 * pi)).epsilon(1e-9));
    // the constant 1 scaled to unit norm is in the dictionary
    CHECK(r.max_ratio >= r.l1_norm / r.l1_norm * 1.0 - 1e-12);

    auto w = OmegaPath::sample(6, {sym(2, 0.0, 0.05, 2 * pi), sym(3, 0.1, 0.1, 2 * pi)}, {0.5, 0.5});
    CounterStream rng(10, 0);
    int ok = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const long n = 1 + static_cast<long>(rng() % 8);
        ok += norm_bound_check(shift(w, trial), n, random_twists(rng, n, 1.0), psi, p, dict).certified;
    }
    CHECK(ok == 50);
}

TEST_CASE("sup norm contraction by L^n 1") {
    auto w = mixed(8);
    auto psi = Observable::trig();
    CounterStream rng(3, 3);
    const auto dict = test_dictionary(M, HolderParams{}, 3);
    for (int trial = 0; trial < 30; ++trial) {
        const long n = 1 + static_cast<long>(rng() % 6);
        const auto& g = dict[static_cast<std::size_t>(trial) % dict.size()];
        auto out = compose_cocycle(shift(w, trial), random_twists(rng, n, 1.0), n, psi, M).apply(g);
        const double l1 = sup_norm(iterate_one(shift(w, trial), n, M));
        CHECK(sup_norm(std::span<const cplx>(out)) <= sup_norm(g) * l1 * (1 + 1e-12));
    }
}

TEST_CASE("twist continuity") {
    auto w = mixed();
    auto psi = Observable::trig();
    const auto dict = test_dictionary(M, HolderParams{}, 2, 4);
    double prev = 1e300;
    for (double t : {0.1, 0.01, 0.001}) {
        auto a = build_operator(w, 0, t, psi, M), b = build_operator(w, 0, 0.0, psi, M);
        double worst = 0.0;
        for (const auto& g : dict) {
            std::vector<cplx> c(g.values().begin(), g.values().end());
            auto x = a.apply(c), y = b.apply(c);
            for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
        }
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("adjoint duality") {
    auto stack = MeasureStack::build(mixed(), 0, 6, {M, 40});
    for (long i = 0; i < 5; ++i) {
        const auto op = stack.op(i);
        for (int k = 1; k <= 3; ++k) {
            auto g = trig(k, k == 2);
            auto lg = op.apply(g);
            double lhs = 0.0, rhs = 0.0;
            const auto nu1 = stack.nu(i + 1), nu0 = stack.nu(i);
            for (int r = 0; r < M; ++r) {
                lhs += nu1[static_cast<std::size_t>(r)] * lg[r];
                rhs += nu0[static_cast<std::size_t>(r)] * g[r];
            }
            CHECK(std::abs(lhs - stack.lambda(i) * rhs) < 1e-8);
        }
    }
}

TEST_CASE("normalized operator") {
    auto stack = normalize_lambda(MeasureStack::build(mixed(), 0, 40, {M, 40}));
    auto one = normalized_apply(stack, 0, HolderFunction::constant(M, 1.0), 10);
    for (int k = 0; k < M; ++k) CHECK(one[k] == doctest::Approx(1.0).epsilon(1e-8));

    auto flat = normalize_lambda(MeasureStack::build(doubling(), 0, 10, {M, 4}));
    auto g = trig(2);
    auto a = normalized_apply(flat, 0, g, 1);
    auto b = build_operator(doubling(), 0, 0.0, Observable::zero(), M).apply(g);
    CHECK(sup_norm(a - b) == 0.0);

    auto c = trig(1, true);
    const double m0 = stack.integrate(0, c.values());
    for (auto& v : c.data()) v -= m0;
    for (long n : {1L, 5L, 20L}) {
        auto out = normalized_apply(stack, 0, c, n);
        CHECK(std::abs(stack.integrate(n, out.values())) < 1e-8);
    }
    auto raw = MeasureStack::build(mixed(), 0, 10, {M, 40});
    CHECK_THROWS_AS(normalized_apply(raw, 0, c, 2), StateError);
    CHECK_THROWS_AS(normalized_apply(stack, 30, c, 20), StateError);
}

TEST_CASE("decay of the normalized operator") {
    const HolderParams p{};
    auto flat = normalize_lambda(MeasureStack::build(doubling(), 0, 40, {M, 4}));
    auto f = decay_rate(flat, 0, trig(1), 20, p);
    CHECK(f.instant_decay);
    CHECK(std::isinf(f.lambda_hat));
    CHECK(f.norms[0] < 1e-14);

    f = decay_rate(flat, 0, trig(1) + trig(2), 20, p);
    CHECK(f.instant_decay);
    CHECK(f.norms[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t n = 1; n < f.norms.size(); ++n) CHECK(f.norms[n] < 1e-14);

    auto w = OmegaPath::sample(2, {sym(2, 0.0, 0.05)}, {1.0});
    auto stack = normalize_lambda(MeasureStack::build(w, 0, 40, {M, 40}));
    CounterStream rng(5, 5);
    const auto dict = test_dictionary(M, p, 17, 3);
    for (std::size_t j = dict.size() - 3; j < dict.size(); ++j) {
        auto g = dict[j];
        const double m = stack.integrate(0, g.values());
        for (auto& v : g.data()) v -= m;
        f = decay_rate(stack, 0, g, 30, p);
        CHECK_FALSE(f.instant_decay);
        CHECK(f.lambda_hat > 0.0);
        CHECK(f.r_squared >= 0.9);
        CHECK(f.K_hat > 0.0);
    }
    CHECK_THROWS_AS(decay_rate(stack, 0, HolderFunction::constant(M, 1.0), 10, p), PreconditionError);
}

TEST_CASE("dense csv export") {
    auto op = build_operator(doubling(), 0, 0.0, Observable::zero(), 8);
    std::stringstream ss;
    op.write_csv(ss);
    std::string line;
    int rows = 0;
    while (std::getline(ss, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 15);
    }
    CHECK(rows == 8);
}
