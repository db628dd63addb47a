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

#include "quench/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quench/birkhoff.hpp"
#include "quench/blocks.hpp"
#include "quench/error.hpp"
#include "quench/fiber.hpp"
#include "quench/rng.hpp"
#include "quench/transfer.hpp"

namespace quench {

using json = nlohmann::ordered_json;

namespace {

// sub-seed tags per subcommand
constexpr std::uint64_t kTagVariance = 0x7A8;
constexpr std::uint64_t kTagLY = 0x1F;
constexpr std::uint64_t kTagInduce = 0x1DC;
constexpr std::uint64_t kTagHProbe = 0x4B;
constexpr std::uint64_t kTagASIP = 0xA51B;
constexpr long kKacReturns = 10000;

std::vector<double> random_twists(CounterStream& rng, long n, double T) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (auto& v : t) v = T * (2.0 * rng.uniform() - 1.0);
    return t;
}

json checkpoints_json(const std::vector<VarianceCheckpoint>& cps) {
    json a = json::array();
    for (const auto& c : cps) a.push_back({{"n", c.n}, {"var", c.var}, {"sigma_n", c.sigma_n}, {"stderr", c.std_error}});
    return a;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"triplet", "variance", "ly", "induce", "blocks", "hprobe", "asip", "report"};
    return names;
}

Runner::Runner(ExperimentConfig cfg, std::string out_dir, int workers)
    : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)), workers_(std::max(1, workers)), hash_(config_hash(cfg_)) {}

std::shared_ptr<const MeasureStack> Runner::stack_for(long last, bool normalized) const {
    const int m = cfg_.potential_free() || last <= cfg_.long_threshold ? cfg_.grid : cfg_.grid_long;
    auto st = MeasureStack::build(cfg_.path(), 0, last, {m, cfg_.relax});
    return std::make_shared<const MeasureStack>(normalized ? normalize_lambda(std::move(st)) : std::move(st));
}

std::unique_ptr<MembershipOracle> Runner::membership(const std::shared_ptr<const MeasureStack>& stack,
                                                     double sigma2) const {
    if (cfg_.membership == "surrogate") {
        auto psi = center_observable(cfg_.make_observable(), *stack);
        return std::make_unique<SurrogateMembership>(stack, psi, cfg_.holder, cfg_.criteria, sigma2, workers_);
    }
    return std::make_unique<SymbolWindowMembership>(cfg_.path(), cfg_.test_mode_window);
}

InducedSystem Runner::returns_for(const MembershipOracle& oracle, long count) const {
    long n = std::max<long>(count, 16);
    for (;;) {
        auto sys = return_times(oracle, n);
        if (sys.count() >= count) return sys;
        if (n > (1L << 26)) throw ConvergenceError("too few returns to E within 2^26 steps", static_cast<double>(count));
        n *= 2;
    }
}

json Runner::envelope(const std::string& name) const {
    json j;
    j["command"] = name;
    j["config_name"] = cfg_.name;
    j["config_hash"] = hash_;
    j["seed"] = cfg_.seed;
    j["versions"] = {{"quench", kVersion},
                     {"modules",
                      {{"driving-system", 1}, {"fiber-dynamics", 1}, {"holder-calculus", 1}, {"transfer-operator", 1},
                       {"equivariant-measures", 1}, {"birkhoff-statistics", 1}, {"inducing-scheme", 1},
                       {"block-asip-harness", 1}, {"cli-io", 1}}}};
    j["flags"] = {{"K_hat_surrogate", "K(omega) replaced by the fitted decay constant of 1/h - 1"},
                  {"A_L_truncation", {{"L", cfg_.criteria.L}, {"N_check", cfg_.criteria.N_check}}},
                  {"nu_horizon", cfg_.relax},
                  {"membership", cfg_.membership}};
    return j;
}

void Runner::write_text(const std::string& file, const std::string& text) const {
    std::filesystem::create_directories(out_dir_);
    std::ofstream out(std::filesystem::path(out_dir_) / file, std::ios::binary);
    if (!out) throw StateError("cannot write " + file + " in " + out_dir_);
    out << text;
}

void Runner::write_meta(const std::string& name, const std::string& status) const {
    const auto path = std::filesystem::path(out_dir_) / "meta.json";
    json meta = json::object();
    if (std::ifstream in(path); in) {
        try {
            meta = json::parse(in);
        } catch (const json::exception&) {
            meta = json::object();
        }
    }
    meta[name] = {{"timestamp", utc_timestamp()}, {"status", status}, {"workers", workers_}, {"config_hash", hash_}};
    write_text("meta.json", meta.dump(2) + "\n");
}

json Runner::compute(const std::string& name) {
    tables_.clear();
    if (name == "triplet") return triplet();
    if (name == "variance") return variance();
    if (name == "ly") return ly();
    if (name == "induce") return induce();
    if (name == "blocks") return blocks();
    if (name == "hprobe") return hprobe();
    if (name == "asip") return asip();
    if (name == "report") return report();
    throw ArgumentError("unknown subcommand: " + name);
}

int Runner::run(const std::string& name) {
    if (std::find(subcommands().begin(), subcommands().end(), name) == subcommands().end())
        throw ArgumentError("unknown subcommand: " + name);
    json doc = envelope(name);
    int status = 0;
    try {
        doc["result"] = compute(name);
        doc["status"] = "ok";
    } catch (const std::exception& e) {
        doc["status"] = "failed";
        doc["error"] = e.what();
        status = 1;
    }
    for (const auto& [file, text] : tables_) write_text(file, text);
    write_text(name + ".json", doc.dump(2) + "\n");
    write_meta(name, status == 0 ? "ok" : "failed");
    return status;
}

json Runner::triplet() {
    auto raw = stack_for(cfg_.triplet_window, false);
    const auto& st = *raw;
    double eig = 0.0, eq = 0.0;
    json lambdas = json::array();
    for (long i = st.first(); i <= st.last(); ++i) {
        lambdas.push_back(st.lambda(i));
        if (i == st.last()) continue;
        eig = std::max(eig, st.eigen_residual(i));
        for (int k = 1; k <= 3; ++k) {
            eq = std::max(eq, equivariance_check(st, i, [k](double x) { return std::cos(2 * M_PI * k * x); }));
            eq = std::max(eq, equivariance_check(st, i, [k](double x) { return std::sin(2 * M_PI * k * x); }));
        }
    }
    std::ostringstream csv;
    write_triplets_csv(csv, st);
    tables_.emplace_back("triplets.csv", csv.str());
    json r;
    r["window"] = cfg_.triplet_window;
    r["grid"] = st.grid_size();
    r["shared"] = st.shared();
    r["max_eigen_residual"] = eig;
    r["max_equivariance_residual"] = eq;
    r["equivariance_ok"] = eq <= 1e-5;
    r["lambda"] = lambdas;
    return r;
}

json Runner::variance() {
    const long top = cfg_.checkpoints.back();
    auto st = stack_for(top);
    auto psi = center_observable(cfg_.make_observable(), *st);
    VarianceOptions o;
    o.checkpoints = cfg_.checkpoints;
    o.trajectories = cfg_.mc_paths;
    o.seed = derive_seed(cfg_.seed, kTagVariance);
    o.workers = workers_;
    auto rep = variance_report(st, psi, 0, o);
    std::ostringstream csv;
    csv << "n,var_mc,stderr,var_op,sigma_n\n";
    for (std::size_t k = 0; k < rep.mc.size(); ++k)
        csv << rep.mc[k].n << ',' << format_double(rep.mc[k].var) << ',' << format_double(rep.mc[k].std_error) << ','
            << format_double(rep.op[k].var) << ',' << format_double(rep.mc[k].sigma_n) << '\n';
    tables_.emplace_back("variance.csv", csv.str());
    json r;
    r["sigma2_mc"] = rep.sigma2_mc;
    r["sigma2_op"] = rep.sigma2_op;
    r["stderr"] = rep.std_error;
    r["n"] = rep.n;
    r["grid"] = st->grid_size();
    r["checkpoints"] = checkpoints_json(rep.mc);
    r["checkpoints_op"] = checkpoints_json(rep.op);
    r["verdict"] = to_string(rep.diagnostics.verdict);
    r["slope"] = rep.diagnostics.slope;
    r["upper_slope"] = rep.diagnostics.upper_slope;
    r["correlation_lag"] = rep.correlation_lag;
    r["estimators_agree"] = std::abs(rep.sigma2_mc - rep.sigma2_op) <= 3.0 * rep.std_error;
    return r;
}

json Runner::ly() {
    const auto w = cfg_.path();
    const auto psi = cfg_.make_observable();
    const auto dict = test_dictionary(cfg_.grid, cfg_.holder, derive_seed(cfg_.seed, kTagLY), 20);
    CounterStream rng(derive_seed(cfg_.seed, kTagLY), 1);
    long satisfied = 0;
    double min_slack = INFINITY;
    for (long i = 0; i < cfg_.ly_instances; ++i) {
        const long n = 1 + static_cast<long>(rng() % static_cast<std::uint64_t>(cfg_.ly_n_max));
        const double T = cfg_.ly_T * (0.1 + 0.9 * rng.uniform());
        const auto& g = dict[static_cast<std::size_t>(i) % dict.size()];
        auto rep = ly_check(shift(w, i), n, T, random_twists(rng, n, T), g, psi, cfg_.holder);
        satisfied += rep.satisfied ? 1 : 0;
        min_slack = std::min(min_slack, rep.slack);
    }
    long certified = 0;
    double worst = 0.0;
    for (long i = 0; i < cfg_.norm_cocycles; ++i) {
        const long n = 1 + static_cast<long>(rng() % static_cast<std::uint64_t>(cfg_.ly_n_max));
        auto rep = norm_bound_check(shift(w, i), n, random_twists(rng, n, cfg_.ly_T), psi, cfg_.holder, dict);
        certified += rep.certified ? 1 : 0;
        worst = std::max(worst, rep.max_ratio / rep.bound);
    }
    json r;
    r["instances"] = cfg_.ly_instances;
    r["satisfied"] = satisfied;
    r["min_slack"] = min_slack;
    r["all_satisfied"] = satisfied == cfg_.ly_instances;
    r["norm_bound"] = {{"cocycles", cfg_.norm_cocycles}, {"certified", certified}, {"max_ratio_over_bound", worst},
                       {"all_certified", certified == cfg_.norm_cocycles}};
    return r;
}

json Runner::induce() {
    const auto w = cfg_.path();
    const std::vector<long> m_grid{8, 16, 32, 64};
    const std::vector<long> offsets{0, 10, 100};
    const long K = offsets.back() + m_grid.back();
    const bool surrogate = cfg_.membership == "surrogate";
    const long horizon = std::max(cfg_.criteria.N_check, cfg_.criteria.decay_steps);

    std::shared_ptr<const MeasureStack> st;
    std::unique_ptr<MembershipOracle> oracle;
    InducedSystem sys;
    double sigma2 = 0.0;
    if (surrogate) {
        st = stack_for(cfg_.n_max + horizon);
        auto psi0 = center_observable(cfg_.make_observable(), *st);
        sigma2 = variance_operator(*st, psi0, 0, std::min<long>(st->last(), 2048));
        oracle = membership(st, sigma2);
        sys = return_times(*oracle, cfg_.n_max);
    } else {
        oracle = membership(nullptr, 0.0);
        sys = return_times(*oracle, cfg_.n_max);
        st = stack_for(cfg_.n_max + 1);
    }
    auto psi = center_observable(cfg_.make_observable(), *st);
    if (!surrogate) sigma2 = variance_operator(*st, psi, 0, std::min<long>(st->last(), 2048));

    json r;
    double p_hat = sys.frequency();
    if (!surrogate) {
        const auto& win = dynamic_cast<const SymbolWindowMembership&>(*oracle);
        p_hat = win.probability();
        const auto pattern = cfg_.test_mode_window;
        const double emp = empirical_P_E(
            [&](long k) {
                return membership_E(SymbolWindowMembership(
                    OmegaPath::sample(derive_seed(cfg_.seed, kTagInduce + static_cast<std::uint64_t>(k)), cfg_.alphabet,
                                      cfg_.probabilities),
                    pattern));
            },
            2000);
        r["P_hat_empirical"] = emp;
    }
    r["P_hat"] = p_hat;
    r["membership"] = oracle->kind();
    r["n_max"] = sys.n_max;
    r["returns"] = sys.count();
    r["start_in_E"] = sys.start_in_E;
    r["truncated"] = sys.truncated;
    r["warnings"] = sys.warnings;
    r["return_structure_ok"] = return_structure_ok(sys, *oracle);
    std::vector<long> head(sys.returns.begin(), sys.returns.begin() + std::min<long>(sys.count(), 1000));
    r["m"] = head;
    json kn = json::array();
    for (long n = 1; n <= sys.n_max; n *= 2) kn.push_back({{"n", n}, {"k_n", sys.k(n)}});
    r["k_n"] = kn;
    if (sys.count() < 2) return r;

    // Kac on the first 10^4 returns when the oracle does not need the stack
    InducedSystem kac_sys = surrogate ? sys : returns_for(*oracle, kKacReturns);
    if (kac_sys.count() > kKacReturns) {
        kac_sys.returns.resize(kKacReturns);
        kac_sys.n_max = kac_sys.returns.back();
    }
    if (kac_sys.count() >= 100) {
        auto kac = kac_check(kac_sys, p_hat);
        r["kac"] = {{"n", kac.n}, {"m_over_n", kac.m_over_n}, {"inv_P", kac.inv_P}, {"m_error", kac.m_error},
                    {"k_over_n", kac.k_over_n}, {"k_error", kac.k_error}, {"bracket_ok", kac.bracket_ok}, {"ok", kac.ok}};
    }

    std::vector<double> A;
    for (long k = 0; k < std::min<long>(sys.count(), 2000); ++k) A.push_back(induced_observable(w, psi, sys, k, 64).A);
    auto mom = moment_check(A, cfg_.rates.p);
    r["A_moments"] = {{"p", mom.p}, {"moment", mom.moment}, {"by_doubling", mom.moment_by_doubling},
                      {"growth_exponent", mom.growth_exponent}, {"hill_tail_index", mom.hill_tail_index}};

    if (sys.count() >= K + 1 && sys.m(K + 1) <= st->last()) {
        TrajectoryEnsemble ens(st, psi, 0, sys.m(K + 1), std::min<long>(cfg_.mc_paths, 4000),
                               derive_seed(cfg_.seed, kTagInduce));
        auto go = go_conditions_check(ens, sys, m_grid, offsets, sigma2, cfg_.rates.p, workers_);
        r["go1"] = {{"u_hat", go.u_hat}, {"sigma2", go.sigma2}, {"growth_slope", go.growth_slope}, {"ok", go.go1},
                    {"m_grid", go.m_grid}, {"offsets", go.offsets}, {"var", go.var}};
        r["go2"] = {{"exponent", go.go2_exponent}, {"ok", go.go2}};
    } else {
        r["go1"] = {{"ok", false}, {"skipped", "fewer than " + std::to_string(K + 1) + " returns inside the stack"}};
    }

    const long last_return = sys.m(sys.count());
    std::vector<long> grid;
    for (long n = 16; n < last_return; n = n * 5 / 4) grid.push_back(n);
    if (grid.size() >= 2) {
        auto tail = tail_bound_check(w, psi, sys, grid, cfg_.rates.p, 64);
        r["tail"] = {{"n_grid", tail.n_grid}, {"bound", tail.bound}, {"discrepancy", tail.discrepancy},
                     {"exponent", tail.exponent}, {"ok", tail.ok}};
    }

    CounterStream rng(derive_seed(cfg_.seed, kTagInduce), 7);
    double worst = 0.0;
    const long n_hi = std::min<long>(last_return, 2000);
    for (int t = 0; t < 100; ++t) {
        const long n = static_cast<long>(rng.uniform() * static_cast<double>(n_hi));
        const auto s = resummation_identity(w, psi, sys, rng.uniform(), n);
        worst = std::max(worst, std::abs(s.lhs - s.rhs));
    }
    r["resummation"] = {{"instances", 100}, {"max_error", worst}, {"ok", worst <= 1e-9}};
    return r;
}

json Runner::blocks() {
    const auto s = block_decomposition(cfg_.blocks_n, cfg_.rates.beta, cfg_.rates.eps);
    std::ostringstream csv;
    csv << "kind,j,start,length\n";
    for (const auto& t : s.tiles) csv << (t.gap ? "J" : "I") << ',' << t.j << ',' << t.start << ',' << t.length << '\n';
    tables_.emplace_back("blocks.csv", csv.str());
    json r;
    r["n"] = s.n;
    r["beta"] = s.beta;
    r["eps"] = s.eps;
    r["f"] = s.f;
    r["F"] = s.F;
    r["floor_eps_n"] = s.e;
    r["interval_length"] = s.interval_length;
    r["J0_length"] = s.tiles.front().length;
    r["gap_total"] = s.gap_total();
    r["interval_total"] = s.interval_total();
    r["exact"] = s.exact();
    if (s.n >= 2) {
        auto g = gap_cardinality_check(s.n, s.beta, s.eps);
        r["gap_count"] = {{"cumulative", g.cumulative}, {"exponent", g.exponent}, {"window_exponent", g.window_exponent},
                          {"bound_exponent", g.bound_exponent}, {"ok", g.ok}};
    }
    return r;
}

json Runner::hprobe() {
    long reach = 0;
    for (const auto& [a, b] : cfg_.h_shapes) reach = std::max(reach, 1 + a + b + cfg_.h_k_grid.back());
    std::unique_ptr<MembershipOracle> oracle;
    if (cfg_.membership == "surrogate")
        throw ConfigError("hprobe: requires inducing.mode = test_window");
    oracle = membership(nullptr, 0.0);
    auto sys = returns_for(*oracle, reach);
    auto st = stack_for(sys.m(reach) + 1);
    auto psi = center_observable(cfg_.make_observable(), *st);
    HProbeOptions o;
    o.k_grid = cfg_.h_k_grid;
    o.shapes = cfg_.h_shapes;
    o.t_vectors = cfg_.h_t_vectors;
    o.eps0 = cfg_.h_eps0;
    o.mc_paths = cfg_.h_mc_paths;
    o.seed = derive_seed(cfg_.seed, kTagHProbe);
    o.workers = workers_;
    auto h = h_condition_probe(st, psi, sys, o);
    json r;
    r["k_grid"] = h.k_grid;
    r["error"] = h.error;
    r["mc_error"] = h.mc_error;
    r["mc_stderr"] = h.mc_std_error;
    r["mc_consistent"] = h.mc_consistent;
    r["widened"] = h.widened;
    r["c_hat"] = h.c_hat;
    r["r_squared"] = h.r_squared;
    r["points_fitted"] = h.points_fitted;
    r["pass"] = h.pass;
    r["grid"] = st->grid_size();
    return r;
}

json Runner::asip() {
    const long K = 1L << (cfg_.asip_top_window + 1);
    if (cfg_.membership == "surrogate")
        throw ConfigError("asip: requires inducing.mode = test_window");
    auto oracle = membership(nullptr, 0.0);
    auto sys = returns_for(*oracle, K + 1);
    const long len = std::max(sys.m(K), cfg_.clt_checkpoints.back());
    auto st = stack_for(len + 1);
    auto psi = center_observable(cfg_.make_observable(), *st);

    VarianceOptions vo;
    vo.checkpoints = dyadic_grid(5, static_cast<int>(std::log2(static_cast<double>(len))));
    vo.monte_carlo = false;
    vo.workers = workers_;
    auto var = variance_report(st, psi, 0, vo);
    const bool coboundary = var.diagnostics.verdict == Verdict::coboundary_suspected;

    const auto& rate = cfg_.rates;
    TrajectoryEnsemble clt_ens(st, psi, 0, cfg_.clt_checkpoints.back(), cfg_.clt_paths,
                               derive_seed(cfg_.seed, kTagASIP));
    auto clt = clt_series(clt_ens, cfg_.clt_checkpoints, coboundary, workers_);

    TrajectoryEnsemble ens(st, psi, 0, sys.m(K), cfg_.asip_paths, derive_seed(cfg_.seed, kTagASIP + 1));
    ASIPOptions ao;
    ao.top_window = cfg_.asip_top_window;
    ao.fit_min_n = cfg_.asip_fit_min_n;
    ao.seed = derive_seed(cfg_.seed, kTagASIP + 2);
    ao.workers = workers_;
    ao.coboundary = coboundary;
    auto rep = asip_harness(ens, sys, rate, ao);

    std::ostringstream csv;
    csv << "n,ks,sigma_n,sigma_surrogate,sigma_surrogate_sampled,discrepancy\n";
    for (const auto& c : rep.checkpoints)
        csv << c.n << ',' << format_double(c.ks) << ',' << format_double(c.sigma_n) << ','
            << format_double(c.sigma_surrogate) << ',' << format_double(c.sigma_surrogate_sampled) << ','
            << format_double(c.discrepancy) << '\n';
    tables_.emplace_back("asip.csv", csv.str());

    json r;
    r["label"] = rep.label;
    r["rate"] = {{"p", rate.p}, {"delta", rate.delta}, {"beta", rate.beta}, {"eps", rate.eps}, {"a_p", rate.a_p()},
                 {"slack", rate.slack}};
    r["verdict"] = to_string(var.diagnostics.verdict);
    r["sigma2_op"] = var.sigma2_op;
    json cp = json::array();
    for (const auto& c : clt.points) cp.push_back({{"n", c.n}, {"ks", c.ks}, {"sigma_n", c.sigma_n}});
    r["clt"] = {{"paths", cfg_.clt_paths}, {"points", cp}, {"nonincreasing", clt.nonincreasing}, {"band", clt.band},
                {"suppressed", clt.suppressed}, {"flag", clt.flag}};
    json table = json::array();
    for (const auto& c : rep.checkpoints)
        table.push_back({{"n", c.n}, {"ks", c.ks}, {"sigma_n", c.sigma_n}, {"sigma_surrogate", c.sigma_surrogate},
                         {"sigma_surrogate_sampled", c.sigma_surrogate_sampled}, {"discrepancy", c.discrepancy}});
    r["paths"] = rep.paths;
    r["checkpoints"] = table;
    r["batches"] = rep.batches;
    r["discrepancy_exponent"] = rep.discrepancy_exponent;
    r["envelope_r_squared"] = rep.envelope_r_squared;
    r["exponent_bound"] = rate.a_p() + rate.delta + rate.slack;
    r["exponent_ok"] = rep.exponent_ok;
    r["final_ratio"] = rep.final_ratio;
    r["ratio_ok"] = rep.ratio_ok;
    r["surrogate_independence"] = {{"pairs", rep.pairs}, {"over_bound", rep.pairs_over_bound},
                                   {"bound", rep.corr_bound}, {"max_abs_corr", rep.max_abs_corr}};
    r["suppressed"] = rep.suppressed;
    return r;
}

json Runner::report() {
    std::ostringstream md, csv;
    md << "# quench report: " << cfg_.name << "\n\n";
    md << "config hash `" << hash_ << "`, seed " << cfg_.seed << "\n\n";
    md << "| command | status | headline |\n|---|---|---|\n";
    csv << "command,key,value\n";
    json found = json::array();
    auto headline = [](const std::string& name, const json& res) -> std::vector<std::pair<std::string, json>> {
        auto pick = [&](std::initializer_list<const char*> keys) {
            std::vector<std::pair<std::string, json>> out;
            for (const char* k : keys)
                if (res.contains(k)) out.emplace_back(k, res[k]);
            return out;
        };
        if (name == "triplet") return pick({"max_eigen_residual", "max_equivariance_residual", "equivariance_ok"});
        if (name == "variance") return pick({"sigma2_mc", "sigma2_op", "stderr", "verdict"});
        if (name == "ly") return pick({"instances", "satisfied", "min_slack"});
        if (name == "induce") return pick({"P_hat", "returns", "truncated"});
        if (name == "blocks") return pick({"n", "f", "F", "interval_length", "J0_length", "exact"});
        if (name == "hprobe") return pick({"c_hat", "r_squared", "pass"});
        if (name == "asip") return pick({"final_ratio", "discrepancy_exponent", "exponent_bound", "ratio_ok", "exponent_ok"});
        return {};
    };
    for (const auto& name : subcommands()) {
        if (name == "report") continue;
        std::ifstream in(std::filesystem::path(out_dir_) / (name + ".json"));
        if (!in) continue;
        json doc = json::parse(in);
        const std::string status = doc.value("status", "unknown");
        std::string line;
        if (doc.contains("result")) {
            for (const auto& [k, v] : headline(name, doc["result"])) {
                const std::string val = v.is_number_float() ? format_double(v.get<double>()) : v.dump();
                line += (line.empty() ? "" : ", ") + k + " = " + val;
                csv << name << ',' << k << ',' << val << '\n';
            }
        } else if (doc.contains("error")) {
            line = doc["error"].get<std::string>();
        }
        if (doc.value("config_hash", "") != hash_) line += " (different config)";
        md << "| " << name << " | " << status << " | " << line << " |\n";
        found.push_back(name);
    }
    tables_.emplace_back("report.md", md.str());
    tables_.emplace_back("report.csv", csv.str());
    return {{"commands", found}};
}

}  // namespace quench
