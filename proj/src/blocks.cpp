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

#include "quench/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quench/error.hpp"
#include "quench/parallel.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"
#include "quench/transfer.hpp"

namespace quench {

namespace {

constexpr long kBatches = 64;
constexpr long kChunk = 256;  // fixed reduction chunks keep sums independent of the worker count

int floor_exp(double x, int n) { return static_cast<int>(std::floor(x * n + 1e-9)); }

void check_scheme_args(int n, double beta, double eps) {
    if (n < 0 || n > 40) throw ArgumentError("block_decomposition: n must lie in [0, 40]");
    if (!(beta > 0.0 && beta < 1.0)) throw ArgumentError("block_decomposition: beta must lie in (0, 1)");
    if (!(eps > 0.0 && eps < 1.0 - beta)) throw ArgumentError("block_decomposition: eps must lie in (0, 1 - beta)");
}

// twice the interval length, exact in integers
long twice_interval(int n, int f, int e) { return (1L << (n - f + 1)) - static_cast<long>(f + 2) * (1L << e); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y, double* r2 = nullptr) {
    if (x.size() < 2 || x.front() == x.back()) return 0.0;
    const auto fit = linear_fit(x, y);
    if (r2) *r2 = fit.r_squared;
    return fit.slope;
}

}  // namespace

int lowest_set_bit(long j) {
    if (j <= 0) throw ArgumentError("lowest_set_bit: j must be >= 1");
    int r = 0;
    while ((j & 1L) == 0) {
        j >>= 1;
        ++r;
    }
    return r;
}

double default_beta(double p) {
    if (!(p > 2.0)) throw ArgumentError("default_beta: p must be > 2");
    return p / (2.0 * p - 2.0);
}

double rate_exponent(double p) {
    if (!(p >= 6.0)) throw ArgumentError("rate_exponent: p < 6 is out of scope");
    return p / (4.0 * (p - 1.0)) + 1.0 / p;
}

RateParams RateParams::from_p(double p) {
    RateParams r;
    r.p = p;
    r.beta = default_beta(p);
    return r;
}

void RateParams::validate() const {
    std::ostringstream err;
    if (!(p >= 6.0)) err << " p must be >= 6;";
    if (!(delta > 0.0)) err << " delta must be > 0;";
    if (!(beta > 0.0 && beta < 1.0)) err << " beta must lie in (0, 1);";
    if (!(eps > 0.0 && eps < 1.0 - beta)) err << " eps_blocks must lie in (0, 1 - beta);";
    if (beta > 0.0 && !(p > 2.0 + 2.0 / beta)) err << " p must exceed 2 + 2/beta;";
    if (!(slack >= 0.0)) err << " slack must be >= 0;";
    if (!err.str().empty()) throw ConfigError("rates:" + err.str());
}

long BlockScheme::gap_total() const {
    long s = 0;
    for (const auto& t : tiles) s += t.gap ? t.length : 0;
    return s;
}

long BlockScheme::interval_total() const {
    long s = 0;
    for (const auto& t : tiles) s += t.gap ? 0 : t.length;
    return s;
}

bool BlockScheme::exact() const {
    if (tiles.size() != static_cast<std::size_t>(2 * F)) return false;
    long pos = 1L << n;
    for (std::size_t k = 0; k < tiles.size(); ++k) {
        const auto& t = tiles[k];
        const long j = static_cast<long>(k / 2);
        if (t.start != pos || t.length <= 0 || t.j != j || t.gap != (k % 2 == 0)) return false;
        const long want = !t.gap ? interval_length : (j == 0 ? (1L << (e + f)) : (1L << (e + lowest_set_bit(j))));
        if (t.length != want) return false;
        pos += t.length;
    }
    return pos == (1L << (n + 1));
}

bool block_feasible(int n, double beta, double eps) {
    check_scheme_args(n, beta, eps);
    const long twice = twice_interval(n, floor_exp(beta, n), floor_exp(eps, n));
    return twice > 0 && twice % 2 == 0;
}

BlockScheme block_decomposition(int n, double beta, double eps) {
    check_scheme_args(n, beta, eps);
    BlockScheme s;
    s.n = n;
    s.beta = beta;
    s.eps = eps;
    s.f = floor_exp(beta, n);
    s.e = floor_exp(eps, n);
    s.F = 1L << s.f;
    const long twice = twice_interval(n, s.f, s.e);
    if (twice <= 0 || twice % 2 != 0) {
        std::ostringstream msg;
        msg << "window n=" << n << ": 2^{n-f} - (f+2) 2^{floor(eps n)-1} = " << (1L << (n - s.f)) << " - "
            << (s.f + 2) << "*2^" << (s.e - 1) << " is not a positive integer (f=" << s.f << ")";
        throw FeasibilityError(msg.str());
    }
    s.interval_length = twice / 2;
    long pos = 1L << n;
    for (long j = 0; j < s.F; ++j) {
        const long gap = j == 0 ? (1L << (s.e + s.f)) : (1L << (s.e + lowest_set_bit(j)));
        s.tiles.push_back({pos, gap, true, j});
        pos += gap;
        s.tiles.push_back({pos, s.interval_length, false, j});
        pos += s.interval_length;
    }
    return s;
}

std::vector<Segment> segment_plan(int top, double beta, double eps) {
    std::vector<Segment> plan{{0, 1, true, -1}};
    for (int w = 0; w <= top; ++w) {
        if (block_feasible(w, beta, eps)) {
            for (const auto& t : block_decomposition(w, beta, eps).tiles) plan.push_back({t.start, t.length, t.gap, w});
        } else {
            plan.push_back({1L << w, 1L << w, true, w});
        }
    }
    return plan;
}

GapCountReport gap_cardinality_check(int n, double beta, double eps) {
    if (n < 2) throw ArgumentError("gap_cardinality_check: n must be >= 2");
    GapCountReport r;
    r.n = n;
    r.bound_exponent = beta + 1.5 * eps;
    long total = 0;
    std::vector<double> lx, ly, wx, wy;
    for (int w = 0; w <= n; ++w) {
        const bool ok = block_feasible(w, beta, eps);
        const long gaps = ok ? block_decomposition(w, beta, eps).gap_total() : (1L << w);
        total += gaps;
        r.cumulative.push_back(total);
        r.feasible.push_back(ok);
        if (2 * w >= n) {
            lx.push_back((w + 1) * std::log(2.0));
            ly.push_back(std::log(static_cast<double>(total)));
            if (ok) {
                wx.push_back(w * std::log(2.0));
                wy.push_back(std::log(static_cast<double>(gaps)));
            }
        }
    }
    r.exponent = fit_slope(lx, ly);
    r.window_exponent = fit_slope(wx, wy);
    r.ok = r.exponent <= r.bound_exponent + 0.1;
    return r;
}

BlockSums block_sums(const TrajectoryEnsemble& ensemble, const BlockScheme& scheme, const InducedSystem& sys,
                     int workers) {
    const long K = 1L << (scheme.n + 1);
    if (K > sys.count() || sys.m(K) > ensemble.length())
        throw ArgumentError("block_sums: ensemble does not cover the window");
    BlockSums out;
    const auto N = static_cast<std::size_t>(ensemble.count());
    out.X.assign(N, std::vector<double>(static_cast<std::size_t>(scheme.F), 0.0));
    out.gap_sum.assign(N, 0.0);
    out.window_sum.assign(N, 0.0);
    ensemble.for_each(workers, [&](long k, double, std::span<const double> psi) {
        const auto A = induced_sequence(sys, psi, K);
        const auto p = static_cast<std::size_t>(k);
        for (const auto& t : scheme.tiles) {
            double s = 0.0;
            for (long l = t.start; l < t.start + t.length; ++l) s += A[static_cast<std::size_t>(l)];
            if (t.gap)
                out.gap_sum[p] += s;
            else
                out.X[p][static_cast<std::size_t>(t.j)] = s;
        }
        double w = 0.0;
        for (long l = 1L << scheme.n; l < K; ++l) w += A[static_cast<std::size_t>(l)];
        out.window_sum[p] = w;
    });
    return out;
}

std::complex<double> characteristic(const MeasureStack& stack, const Observable& psi, long a,
                                    std::span<const double> twists) {
    if (std::all_of(twists.begin(), twists.end(), [](double t) { return t == 0.0; })) return 1.0;
    const long n = static_cast<long>(twists.size());
    if (!stack.covers(a) || !stack.covers(a + n))
        throw ArgumentError("characteristic: stack does not cover the twisted range");
    const auto h = stack.h(a);
    std::vector<cplx> v(h.begin(), h.end()), w(v.size());
    for (long j = 0; j < n; ++j) {
        stack.op(a + j, twists[static_cast<std::size_t>(j)], psi).apply(std::span<const cplx>(v), std::span<cplx>(w));
        v.swap(w);
    }
    const auto nu = stack.nu(a + n);
    cplx s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += nu[k] * v[k];
    return s;
}

std::vector<double> t_pattern(int which, long length, std::uint64_t seed) {
    std::vector<double> t(static_cast<std::size_t>(length));
    CounterStream rng(derive_seed(seed, 0x7E57), static_cast<std::uint64_t>(which));
    for (long j = 0; j < length; ++j) {
        double v;
        switch (which) {
            case 0: v = 1.0; break;
            case 1: v = 0.5; break;
            case 2: v = j % 2 == 0 ? 1.0 : -1.0; break;
            case 3: v = length > 1 ? -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(length - 1) : 1.0; break;
            default: v = 2.0 * rng.uniform() - 1.0;
        }
        t[static_cast<std::size_t>(j)] = v;
    }
    return t;
}

HReport h_condition_probe(std::shared_ptr<const MeasureStack> stack, const Observable& psi, const InducedSystem& sys,
                          const HProbeOptions& opts) {
    if (!(opts.eps0 > 0.0 && opts.eps0 <= 1.0)) throw ArgumentError("h_condition_probe: eps0 must lie in (0, 1]");
    if (!(std::abs(opts.t_scale) <= 1.0)) throw ArgumentError("h_condition_probe: t_scale must lie in [-1, 1]");
    if (opts.k_grid.empty() || opts.shapes.empty() || opts.t_vectors < 1)
        throw ArgumentError("h_condition_probe: empty probe grid");
    long reach = 0;
    for (const auto& [l1, l2] : opts.shapes)
        for (long k : opts.k_grid) reach = std::max(reach, opts.start + l1 + k + l2);
    if (opts.start < 0 || reach > sys.count()) throw ArgumentError("h_condition_probe: not enough induced returns");
    if (!stack->covers(sys.m(opts.start)) || !stack->covers(sys.m(reach)))
        throw ArgumentError("h_condition_probe: stack does not cover the probed range");

    struct Probe {
        long k;
        long a0, a1, a2, a3;            // psi-index boundaries
        std::vector<double> pre, post;  // twists per psi index
    };
    std::vector<Probe> probes;
    for (long k : opts.k_grid) {
        for (const auto& [l1, l2] : opts.shapes) {
            for (int w = 0; w < opts.t_vectors; ++w) {
                auto tv = t_pattern(w, l1 + l2, opts.seed);
                Probe pr{k, sys.m(opts.start), sys.m(opts.start + l1), sys.m(opts.start + l1 + k),
                         sys.m(opts.start + l1 + k + l2), {}, {}};
                for (long l = 0; l < l1; ++l)
                    for (long j = sys.m(opts.start + l); j < sys.m(opts.start + l + 1); ++j)
                        pr.pre.push_back(opts.eps0 * opts.t_scale * tv[static_cast<std::size_t>(l)]);
                for (long l = 0; l < l2; ++l) {
                    const long b = opts.start + l1 + k + l;
                    for (long j = sys.m(b); j < sys.m(b + 1); ++j)
                        pr.post.push_back(opts.eps0 * opts.t_scale * tv[static_cast<std::size_t>(l1 + l)]);
                }
                probes.push_back(std::move(pr));
            }
        }
    }

    HReport r;
    r.k_grid = opts.k_grid;
    r.error.assign(opts.k_grid.size(), 0.0);
    std::vector<double> err(probes.size(), 0.0);
    parallel_for(static_cast<long>(probes.size()), opts.workers, [&](long begin, long end) {
        for (long q = begin; q < end; ++q) {
            const auto& pr = probes[static_cast<std::size_t>(q)];
            if (pr.pre.empty() || pr.post.empty()) continue;
            std::vector<double> joint(pr.pre);
            joint.resize(static_cast<std::size_t>(pr.a2 - pr.a0), 0.0);
            joint.insert(joint.end(), pr.post.begin(), pr.post.end());
            const cplx pre = characteristic(*stack, psi, pr.a0, pr.pre);
            const cplx post = characteristic(*stack, psi, pr.a2, pr.post);
            const cplx both = characteristic(*stack, psi, pr.a0, joint);
            err[static_cast<std::size_t>(q)] = std::abs(both - pre * post);
        }
    });
    const std::size_t per_k = opts.shapes.size() * static_cast<std::size_t>(opts.t_vectors);
    for (std::size_t q = 0; q < probes.size(); ++q) r.error[q / per_k] = std::max(r.error[q / per_k], err[q]);

    if (opts.mc_paths > 0) {
        const long first = sys.m(opts.start);
        TrajectoryEnsemble ens(stack, psi, first, sys.m(reach) - first, opts.mc_paths, derive_seed(opts.seed, 0x4EC0));
        const long N = ens.count();
        std::vector<std::vector<cplx>> acc(probes.size(), std::vector<cplx>(3, 0.0));
        std::vector<double> psi_buf(static_cast<std::size_t>(ens.length()));
        for (long p = 0; p < N; ++p) {
            ens.trajectory(p, psi_buf);
            for (std::size_t q = 0; q < probes.size(); ++q) {
                const auto& pr = probes[q];
                double s1 = 0.0, s2 = 0.0;
                for (std::size_t j = 0; j < pr.pre.size(); ++j) s1 += pr.pre[j] * psi_buf[static_cast<std::size_t>(pr.a0 - first) + j];
                for (std::size_t j = 0; j < pr.post.size(); ++j) s2 += pr.post[j] * psi_buf[static_cast<std::size_t>(pr.a2 - first) + j];
                acc[q][0] += std::polar(1.0, s1);
                acc[q][1] += std::polar(1.0, s2);
                acc[q][2] += std::polar(1.0, s1 + s2);
            }
        }
        r.mc_error.assign(opts.k_grid.size(), 0.0);
        const double inv = 1.0 / static_cast<double>(N);
        for (std::size_t q = 0; q < probes.size(); ++q) {
            const cplx e = acc[q][2] * inv - (acc[q][0] * inv) * (acc[q][1] * inv);
            r.mc_error[q / per_k] = std::max(r.mc_error[q / per_k], std::abs(e));
        }
        r.mc_std_error = std::sqrt(2.0 * inv);
        for (std::size_t k = 0; k < r.error.size(); ++k) {
            if (std::abs(r.mc_error[k] - r.error[k]) > 4.0 * r.mc_std_error) r.mc_consistent = false;
            if (r.error[k] < 2.0 * r.mc_std_error) r.widened = true;
        }
    }

    std::vector<double> x, y;
    for (std::size_t k = 0; k < r.error.size(); ++k) {
        if (r.error[k] > opts.floor) {
            x.push_back(static_cast<double>(r.k_grid[k]));
            y.push_back(std::log(r.error[k]));
        }
    }
    r.points_fitted = static_cast<long>(x.size());
    if (x.size() >= 3) {
        const auto fit = linear_fit(x, y);
        r.c_hat = -fit.slope;
        r.r_squared = fit.r_squared;
        r.pass = fit.slope < 0.0 && fit.r_squared >= 0.8;
    }
    return r;
}

double clt_test(std::span<const double> sums, double sigma) {
    if (!(sigma > 0.0)) throw PreconditionError("clt_test: sigma must be > 0");
    std::vector<double> z(sums.begin(), sums.end());
    for (auto& v : z) v /= sigma;
    return ks_normal(std::move(z));
}

CLTReport clt_series(const TrajectoryEnsemble& ensemble, const std::vector<long>& checkpoints, bool coboundary,
                     int workers) {
    CLTReport r;
    if (coboundary) {
        r.suppressed = true;
        r.flag = "coboundary-suspected: normality test suppressed";
        return r;
    }
    const auto sums = ensemble.sums_at(checkpoints, workers);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        double m2 = 0.0;
        for (double s : sums[c]) m2 += s * s;
        CLTPoint pt;
        pt.n = checkpoints[c];
        pt.sigma_n = std::sqrt(m2 / static_cast<double>(sums[c].size()));
        if (!(pt.sigma_n > 0.0)) {
            r.suppressed = true;
            r.flag = "sigma_n = 0: normality test suppressed";
            r.points.clear();
            return r;
        }
        pt.ks = clt_test(sums[c], pt.sigma_n);
        r.points.push_back(pt);
    }
    r.nonincreasing = true;
    for (std::size_t k = 1; k < r.points.size(); ++k)
        if (r.points[k].ks > r.points[k - 1].ks + r.band) r.nonincreasing = false;
    return r;
}

ASIPReport asip_harness(const TrajectoryEnsemble& ensemble, const InducedSystem& sys, const RateParams& rate,
                        const ASIPOptions& opts) {
    rate.validate();
    const auto plan = segment_plan(opts.top_window, rate.beta, rate.eps);
    const long K = 1L << (opts.top_window + 1);
    if (K > sys.count() || sys.m(K) > ensemble.length())
        throw ArgumentError("asip_harness: ensemble does not cover 2^(top+1) induced terms");
    const long N = ensemble.count();
    if (N < 2) throw ArgumentError("asip_harness: need at least two paths");
    const std::size_t S = plan.size();

    std::vector<long> power_ends;  // segment index ending at each n = 2^w
    for (std::size_t s = 0; s < S; ++s) {
        const long end = plan[s].start + plan[s].length;
        if ((end & (end - 1)) == 0) power_ends.push_back(static_cast<long>(s));
    }
    const std::size_t C = power_ends.size();

    struct Acc {
        std::vector<double> x, x2, s2;
    };
    const long chunks = (N + kChunk - 1) / kChunk;
    std::vector<Acc> acc(static_cast<std::size_t>(chunks));
    std::vector<double> at_power(static_cast<std::size_t>(N) * C);
    parallel_for(chunks, opts.workers, [&](long cb, long ce) {
        std::vector<double> psi(static_cast<std::size_t>(ensemble.length()));
        for (long c = cb; c < ce; ++c) {
            auto& a = acc[static_cast<std::size_t>(c)];
            a.x.assign(S, 0.0);
            a.x2.assign(S, 0.0);
            a.s2.assign(S, 0.0);
            for (long p = c * kChunk; p < std::min(N, (c + 1) * kChunk); ++p) {
                ensemble.trajectory(p, psi);
                const auto A = induced_sequence(sys, psi, K);
                double run = 0.0;
                std::size_t pc = 0;
                for (std::size_t s = 0; s < S; ++s) {
                    double x = 0.0;
                    for (long l = plan[s].start; l < plan[s].start + plan[s].length; ++l) x += A[static_cast<std::size_t>(l)];
                    run += x;
                    a.x[s] += x;
                    a.x2[s] += x * x;
                    a.s2[s] += run * run;
                    if (pc < C && power_ends[pc] == static_cast<long>(s))
                        at_power[static_cast<std::size_t>(p) * C + pc++] = run;
                }
            }
        }
    });
    // per-batch and pooled segment variances; chunk c goes to batch c mod R
    const long R = std::min<long>(kBatches, chunks);
    auto moments = [&](auto&& take, std::vector<double>& sd, std::vector<double>& emp, std::vector<double>& surr) {
        std::vector<double> sx(S, 0.0), sx2(S, 0.0), ss2(S, 0.0);
        double n = 0.0;
        for (long c = 0; c < chunks; ++c) {
            if (!take(c)) continue;
            n += static_cast<double>(std::min(N, (c + 1) * kChunk) - c * kChunk);
            const auto& a = acc[static_cast<std::size_t>(c)];
            for (std::size_t s = 0; s < S; ++s) {
                sx[s] += a.x[s];
                sx2[s] += a.x2[s];
                ss2[s] += a.s2[s];
            }
        }
        sd.assign(S, 0.0);
        emp.assign(S, 0.0);
        surr.assign(S, 0.0);
        double cum = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double m = sx[s] / n;
            sd[s] = n > 1.0 ? std::sqrt(std::max(0.0, (sx2[s] - n * m * m) / (n - 1.0))) : 0.0;
            emp[s] = std::sqrt(ss2[s] / n);
            cum += sd[s] * sd[s];
            surr[s] = std::sqrt(cum);
        }
    };
    std::vector<double> sd, sigma_emp, sigma_surr;
    moments([](long) { return true; }, sd, sigma_emp, sigma_surr);
    std::vector<double> rms(S, 0.0);
    {
        std::vector<double> bsd, bemp, bsurr;
        // weighted by batch size so a short trailing chunk does not dominate
        for (long b = 0; b < R; ++b) {
            double nb = 0.0;
            for (long c = b; c < chunks; c += R) nb += static_cast<double>(std::min(N, (c + 1) * kChunk) - c * kChunk);
            moments([&](long c) { return c % R == b; }, bsd, bemp, bsurr);
            for (std::size_t s = 0; s < S; ++s) rms[s] += nb * (bsurr[s] - bemp[s]) * (bsurr[s] - bemp[s]);
        }
        for (auto& v : rms) v = std::sqrt(v / static_cast<double>(N));
    }
    const double dn = static_cast<double>(N);

    // independent Gaussian surrogate with matched segment variances
    std::vector<double> st2(S, 0.0), sb(S, 0.0), sb2(S, 0.0), sbb(S, 0.0);
    std::vector<double> b(S);
    for (long p = 0; p < N; ++p) {
        CounterStream rng(derive_seed(opts.seed, 0x6A055), static_cast<std::uint64_t>(p));
        double run = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            b[s] = sd[s] * rng.normal();
            run += b[s];
            st2[s] += run * run;
            sb[s] += b[s];
            sb2[s] += b[s] * b[s];
            if (s > 0) sbb[s - 1] += b[s - 1] * b[s];
        }
    }

    ASIPReport r;
    r.rate = rate;
    r.paths = N;
    r.batches = static_cast<int>(R);
    r.suppressed = opts.coboundary;
    r.corr_bound = 3.0 / std::sqrt(dn);
    for (std::size_t s = 0; s + 1 < S; ++s) {
        if (!(sd[s] > 0.0 && sd[s + 1] > 0.0)) continue;
        const double m0 = sb[s] / dn, m1 = sb[s + 1] / dn;
        const double v0 = sb2[s] / dn - m0 * m0, v1 = sb2[s + 1] / dn - m1 * m1;
        const double rho = (sbb[s] / dn - m0 * m1) / std::sqrt(v0 * v1);
        r.max_abs_corr = std::max(r.max_abs_corr, std::abs(rho));
        ++r.pairs;
        if (std::abs(rho) > r.corr_bound) ++r.pairs_over_bound;
    }

    std::vector<double> lx, ly;
    double env = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const long end = plan[s].start + plan[s].length;
        env = std::max(env, rms[s]);
        r.segment_ends.push_back(end);
        r.envelope.push_back(env);
        if (end >= opts.fit_min_n && env > 0.0) {
            lx.push_back(std::log(static_cast<double>(end)));
            ly.push_back(std::log(env));
        }
    }
    r.discrepancy_exponent = fit_slope(lx, ly, &r.envelope_r_squared);
    const double last_emp = sigma_emp[S - 1], last_surr = sigma_surr[S - 1];
    r.final_ratio = last_emp > 0.0 ? last_surr / last_emp : (last_surr == 0.0 ? 1.0 : INFINITY);
    r.ratio_ok = std::abs(r.final_ratio - 1.0) <= 0.05;
    r.exponent_ok = r.discrepancy_exponent <= rate.a_p() + rate.delta + rate.slack;

    std::vector<double> col(static_cast<std::size_t>(N));
    for (std::size_t c = 0; c < C; ++c) {
        const auto s = static_cast<std::size_t>(power_ends[c]);
        ASIPCheckpoint cp;
        cp.n = plan[s].start + plan[s].length;
        cp.sigma_n = sigma_emp[s];
        cp.sigma_surrogate = sigma_surr[s];
        cp.sigma_surrogate_sampled = std::sqrt(st2[s] / dn);
        cp.discrepancy = std::abs(cp.sigma_surrogate - cp.sigma_n);
        if (!opts.coboundary && cp.sigma_n > 0.0) {
            for (long p = 0; p < N; ++p) col[static_cast<std::size_t>(p)] = at_power[static_cast<std::size_t>(p) * C + c];
            cp.ks = clt_test(col, cp.sigma_n);
        }
        r.checkpoints.push_back(cp);
    }
    return r;
}

}  // namespace quench
