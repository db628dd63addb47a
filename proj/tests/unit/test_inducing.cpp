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

#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/inducing.hpp"
#include "quench/rng.hpp"

using namespace quench;

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
OmegaPath two_symbol(std::uint64_t seed = 7) {
    return OmegaPath::sample(seed, {sym(2, 0.0, 0.05), sym(3, 0.1, 0.1, 0.5, 0.5)}, {0.5, 0.5});
}
std::shared_ptr<const MeasureStack> doubling_stack(long last) {
    auto w = OmegaPath::sample(0, {sym(2)}, {1.0});
    return std::make_shared<const MeasureStack>(normalize_lambda(MeasureStack::build(w, 0, last, {1024, 4})));
}
IndexSetMembership everything(long n) {
    std::set<long> s;
    for (long i = 0; i <= n; ++i) s.insert(i);
    return IndexSetMembership(std::move(s));
}
}  // namespace

TEST_CASE("return times by definition") {
    auto all = return_times(everything(50), 50);
    REQUIRE(all.count() == 50);
    for (long k = 0; k <= 50; ++k) CHECK(all.m(k) == k);
    CHECK(all.start_in_E);

    IndexSetMembership pat({0, 2, 5, 9});
    auto sys = return_times(pat, 12);
    CHECK(sys.returns == std::vector<long>{2, 5, 9});
    CHECK(sys.k(7) == 2);
    CHECK(sys.k(1) == 0);
    CHECK(sys.k(9) == 3);
    CHECK(return_structure_ok(sys, pat));
    CHECK_FALSE(sys.truncated);
    CHECK_THROWS_AS(sys.m(4), ArgumentError);

    auto none = return_times(IndexSetMembership({}), 20);
    CHECK(none.truncated);
    CHECK_FALSE(none.warnings.empty());
    CHECK_FALSE(none.start_in_E);
}

TEST_CASE("induced observable") {
    auto w = two_symbol();
    auto psi = Observable::trig();
    auto all = return_times(everything(10), 10);
    auto o = induced_observable(w, psi, all, 3);
    CHECK(o.start == 3);
    CHECK(o.length == 1);
    for (double x : {0.1, 0.45, 0.8}) CHECK(o(w, psi, x) == doctest::Approx(psi.value(w, 3, x)).epsilon(1e-15));

    auto zero = induced_observable(w, Observable::zero(), all, 2, 64);
    CHECK(zero.A == 0.0);
    CHECK_THROWS_AS(induced_observable(w, psi, all, 10), ArgumentError);

    // doubling, cos: one-step blocks have A = sup|cos| up to the grid
    auto dbl = OmegaPath::sample(0, {sym(2)}, {1.0});
    CHECK(induced_observable(dbl, psi, all, 4, 2048).A == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("kac with a symbol window") {
    auto w = two_symbol(11);
    SymbolWindowMembership e(w, {0});
    CHECK(e.probability() == 0.5);
    auto sys = return_times(e, 20000);
    REQUIRE(sys.count() >= 1000);
    auto r = kac_check(sys, e.probability());
    CHECK(std::abs(r.m_over_n - 2.0) <= 0.1);
    CHECK(r.bracket_ok);
    CHECK(r.ok);
    CHECK(return_structure_ok(sys, e));

    // P-hat from independent driving draws
    double p_hat = empirical_P_E([](long k) { return membership_E(SymbolWindowMembership(two_symbol(1000 + k), {0})); },
                                 4000);
    CHECK(std::abs(p_hat - 0.5) < 4 * std::sqrt(0.25 / 4000));

    auto all = return_times(everything(200), 200);
    auto exact = kac_check(all, 1.0);
    CHECK(exact.m_over_n == 1.0);
    CHECK(exact.k_over_n == 1.0);

    CHECK_THROWS_AS(kac_check(return_times(IndexSetMembership({3, 9}), 10), 0.5), PreconditionError);
    CHECK_THROWS_AS(SymbolWindowMembership(w, {2}), ConfigError);
}

TEST_CASE("geometric gap moments") {
    double m6 = 0.0, m12 = 0.0;
    for (int k = 1; k < 400; ++k) {
        m6 += std::pow(k, 6) * std::ldexp(1.0, -k);
        m12 += std::pow(k, 12) * std::ldexp(1.0, -k);
    }
    CHECK(m6 == doctest::Approx(9366.0).epsilon(1e-12));

    auto w = two_symbol(3);
    SymbolWindowMembership e(w, {1});
    auto sys = return_times(e, 200000);
    std::vector<double> gaps;
    for (long k = 0; k + 1 <= sys.count() - 1; ++k) gaps.push_back(static_cast<double>(sys.m(k + 2) - sys.m(k + 1)));
    REQUIRE(gaps.size() > 90000);
    auto rep = moment_check(gaps, 6.0);
    const double tol = 4.0 * std::sqrt((m12 - m6 * m6) / static_cast<double>(gaps.size()));
    CHECK(std::abs(rep.moment - m6) < tol);
    CHECK(rep.moment_by_doubling.size() == 4);
    CHECK(rep.growth_exponent < 1.0 / 6.0 + 0.1);

    // A <= sup|psi| * gap
    auto psi = Observable::trig();
    for (long k = 1; k < 200; ++k) {
        auto o = induced_observable(w, psi, sys, k, 64);
        CHECK(o.A <= 1.0 * static_cast<double>(o.length) + 1e-12);
    }

    auto zero = moment_check(std::vector<double>(100, 0.0), 6.0);
    CHECK(zero.moment == 0.0);
    CHECK(zero.hill_tail_index == 0.0);
    auto flat = moment_check(std::vector<double>(64, 1.0), 6.0);
    CHECK(flat.moment == 1.0);
    CHECK(std::abs(flat.growth_exponent) < 1e-12);
}

TEST_CASE("resummation identity") {
    CounterStream rng(99, 0);
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        auto w = two_symbol(500 + t);
        SymbolWindowMembership e(w, {static_cast<int>(t % 2), 1});
        auto sys = return_times(e, 700);
        const long n = static_cast<long>(rng.uniform() * 500);
        const double x = rng.uniform();
        if (sys.k(n) >= sys.count()) continue;
        auto s = resummation_identity(w, Observable::trig(), sys, x, n);
        CHECK(std::abs(s.lhs - s.rhs) <= 1e-9);
        ++checked;
    }
    CHECK(checked >= 95);
}

TEST_CASE("tail bound") {
    auto w = two_symbol(5);
    auto psi = Observable::trig();
    SymbolWindowMembership e(w, {0});
    auto sys = return_times(e, 10200);
    std::vector<long> grid;
    for (long n = 16; n <= 10000; n = n * 5 / 4) grid.push_back(n);
    auto r = tail_bound_check(w, psi, sys, grid, 6.0, 64);
    CHECK(r.ok);
    CHECK(r.exponent <= 1.0 / 6.0 + 0.1);
    for (std::size_t k = 0; k < r.n_grid.size(); ++k) CHECK(r.discrepancy[k] <= r.bound[k] + 1e-9);

    auto at_return = tail_bound_check(w, psi, sys, {sys.m(10), sys.m(20)}, 6.0, 64);
    CHECK(at_return.discrepancy[0] == 0.0);
    CHECK(at_return.discrepancy[1] == 0.0);

    auto all = return_times(everything(2100), 2100);
    auto flat = tail_bound_check(w, psi, all, {10, 100, 1000, 2000}, 6.0, 64);
    for (double b : flat.bound) CHECK(b <= 2.0 + 1e-12);
    CHECK(std::abs(flat.exponent) < 0.05);
}

TEST_CASE("go conditions") {
    auto st = doubling_stack(400);
    auto all = return_times(everything(400), 400);
    std::vector<long> ms{8, 16, 32, 64};
    std::vector<long> offs{0, 10, 100};

    TrajectoryEnsemble cosine(st, center_observable(Observable::trig(), *st), 0, 200, 4000, 21);
    auto good = go_conditions_check(cosine, all, ms, offs, 0.5, 6.0);
    CHECK(good.go1);
    CHECK(good.go2);
    CHECK(good.u_hat == doctest::Approx(0.5).epsilon(0.15));
    CHECK(good.growth_slope == doctest::Approx(1.0).epsilon(0.05));
    // slopes per offset agree
    for (std::size_t o = 0; o < offs.size(); ++o)
        CHECK(good.var[o].back() / 64.0 == doctest::Approx(0.5).epsilon(0.1));

    TrajectoryEnsemble cob(st, center_observable(Observable::coboundary(), *st), 0, 200, 4000, 22);
    auto bad = go_conditions_check(cob, all, ms, offs, 0.5, 6.0);
    CHECK_FALSE(bad.go1);
    CHECK(bad.growth_slope < 0.5);

    CHECK_THROWS_AS(go_conditions_check(cosine, all, {500}, {0}, 0.5, 6.0), PreconditionError);
}

TEST_CASE("surrogate membership") {
    ECriteria crit;
    crit.N_check = 256;
    crit.L = 8;
    CHECK_THROWS_AS([] { ECriteria c; c.C0 = 0.0; c.validate(); }(), ConfigError);

    auto single = OmegaPath::sample(0, {sym(2, 0.0, 0.05)}, {1.0});
    auto st = std::make_shared<const MeasureStack>(normalize_lambda(MeasureStack::build(single, 0, 400, {256, 40})));
    auto psi = center_observable(Observable::trig(), *st);
    const double s2 = variance_operator(*st, psi, 0, 256);
    CHECK_THROWS_AS(SurrogateMembership(st, psi, {}, crit, std::nullopt).evaluate(0), StateError);

    SurrogateMembership e(st, psi, {}, crit, s2);
    auto s0 = e.evaluate(0);
    auto s5 = e.evaluate(5);
    CHECK(s0.C >= 4.0);
    CHECK(s0.C == doctest::Approx(s5.C).epsilon(1e-9));
    CHECK(s0.h_sup == doctest::Approx(s5.h_sup).epsilon(1e-6));
    CHECK(s0.K_hat == doctest::Approx(s5.K_hat).epsilon(1e-3));
    for (long i = 0; i < 10; ++i) CHECK(e.contains(i));

    ECriteria tiny = crit;
    tiny.C0 = 0.5;
    SurrogateMembership none(st, psi, {}, tiny, s2);
    for (long i = 0; i < 5; ++i) CHECK_FALSE(none.contains(i));

    // flat doubling: g = 1/h - 1 vanishes, so K-hat is 0
    auto flat = doubling_stack(300);
    SurrogateMembership fe(flat, center_observable(Observable::trig(), *flat), {}, crit, 0.5);
    auto fs = fe.evaluate(0);
    CHECK(fs.instant_decay);
    CHECK(fs.K_hat == 0.0);
    CHECK(fs.h_sup == doctest::Approx(1.0));
}

TEST_CASE("membership monotone in C0") {
    ECriteria crit;
    crit.N_check = 128;
    auto w = two_symbol();
    auto st = std::make_shared<const MeasureStack>(normalize_lambda(MeasureStack::build(w, 0, 200, {256, 40})));
    auto psi = center_observable(Observable::trig(), *st);
    const double s2 = variance_operator(*st, psi, 0, 128);
    SurrogateMembership e(st, psi, {}, crit, s2);
    std::vector<ESurrogates> s;
    std::vector<double> maxes;
    for (long i = 0; i < 40; ++i) {
        s.push_back(e.evaluate(i));
        maxes.push_back(s.back().max_surrogate());
    }
    std::vector<double> grid{1.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e6};
    for (const auto& v : s)
        for (std::size_t k = 1; k < grid.size(); ++k) CHECK((!v.in_E(grid[k - 1]) || v.in_E(grid[k])));

    auto sorted = maxes;
    std::nth_element(sorted.begin(), sorted.begin() + 20, sorted.end());
    const double median = sorted[20];
    long inside = 0;
    for (const auto& v : s) inside += v.in_E(median) ? 1 : 0;
    CHECK(inside > 0);
    CHECK(inside < 40);
}
