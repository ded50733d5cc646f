// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failed criteria.  Tolerances are pinned here and must not be loosened.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mfa/moran.hpp"
#include "mfa/polytope.hpp"
#include "mfa/pressure.hpp"
#include "mfa/spectrum.hpp"

using namespace mfa;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int n, const char* what, bool pass, const std::string& detail) {
    std::printf("criterion %2d [%s]: %s  (%s)\n", n, what, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double H(double a) { return -(a * std::log(a) + (1 - a) * std::log(1 - a)); }

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, format);
    std::vsnprintf(buf, sizeof buf, format, ap);
    va_end(ap);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criteria -------------------------------------------------------------

void criterion_1() {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    SolverOptions opts;
    opts.k = 1;
    const auto t0 = clk::now();
    double worst = 0.0;
    for (int i = 1; i <= 9; ++i) {
        const double a = i / 10.0;
        const SpectrumPoint p = dual_dimension(map, f, {a}, opts);
        worst = std::max(worst, std::abs(p.dimension - H(a) / std::log(2.0)));
    }
    const double el = seconds_since(t0);
    report(1, "digit-frequency oracle", worst <= 1e-3 && el < 5.0,
           fmt("worst |D - H(a)/log2| = %.2e, %.2fs", worst, el));
}

void criterion_2() {
    const BranchSystem map = BranchSystem::linear_lengths({0.25, 0.75});
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    SolverOptions opts;
    opts.k = 1;
    double worst = 0.0;
    for (int i = 1; i <= 9; ++i) {
        const double a = i / 10.0;
        const SpectrumPoint p = dual_dimension(map, f, {a}, opts);
        const double want = H(a) / (a * std::log(4.0) + (1 - a) * std::log(4.0 / 3.0));
        worst = std::max(worst, std::abs(p.dimension - want));
    }
    const double d_quarter = dual_dimension(map, f, {0.25}, opts).dimension;
    report(2, "weighted-lengths oracle",
           worst <= 1e-3 && std::abs(d_quarter - 1.0) <= 1e-4,
           fmt("worst = %.2e, D(1/4) = %.6f", worst, d_quarter));
}

void criterion_3() {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    double wgap = 0.0, wrep = 0.0;
    for (int k : {1, 2}) {
        SolverOptions opts;
        opts.k = k;
        for (int t = 0; t < 10; ++t) {
            const double a = U(rng);
            const SpectrumPoint du = dual_dimension(map, f, {a}, opts);
            const SpectrumPoint pr = primal_dimension(map, f, {a}, opts);
            wgap = std::max(wgap, std::abs(du.dimension - pr.dimension));
            wrep = std::max({wrep, du.duality_gap, pr.duality_gap});
        }
    }
    report(3, "primal/dual agreement", wgap <= 1e-3 && wrep <= 1e-3,
           fmt("max |primal-dual| = %.2e, max reported gap = %.2e", wgap, wrep));
}

void criterion_4() {
    const double third = bowen_dimension(BranchSystem::linear_lengths({1.0 / 3, 1.0 / 3}), 1);
    const double full = bowen_dimension(BranchSystem::doubling(), 1);
    const double want = std::log(2.0) / std::log(3.0);
    report(4, "attractor-dimension oracle",
           std::abs(third - want) <= 1e-6 && full == 1.0,
           fmt("|root - log2/log3| = %.2e, doubling root = %.17g", std::abs(third - want),
               full));
}

void criterion_5() {
    const BranchSystem map = BranchSystem::manneville_pomeau(0.5);
    AnalyticSource src;
    src.id = AnalyticSource::Id::coordinate;
    const PotentialTable f = map.discretize_analytic(src, 2);
    SolverOptions opts;
    opts.k = 2;
    const auto t0 = clk::now();
    const SpectrumPoint flat = level_set_dimension(map, f, {0.0}, opts);
    std::vector<double> sweep;
    for (int L : {2, 4, 8}) sweep.push_back(subsystem_dimension(map, f, {0.05}, L, opts).dimension);
    const double el = seconds_since(t0);
    bool monotone = true;
    for (std::size_t i = 1; i < sweep.size(); ++i)
        if (sweep[i] < sweep[i - 1] - 1e-6) monotone = false;
    const bool pass = std::abs(flat.dimension - 1.0) <= 1e-9 &&
                      flat.status == SpectrumStatus::parabolic_flat && monotone && el < 60.0;
    report(5, "intermittent flat point + run-cap sweep", pass,
           fmt("D(0) = %.9f [%s], sweep = %.4f/%.4f/%.4f, %.2fs", flat.dimension,
               to_string(flat.status).c_str(), sweep[0], sweep[1], sweep[2], el));
}

void criterion_6() {
    const BranchSystem map = BranchSystem::double_parabolic(0.5);
    AnalyticSource src;
    src.id = AnalyticSource::Id::affine;
    src.a = {1.0, -1.0};
    src.b = {0.0, 1.0};
    const PotentialTable f = map.discretize_analytic(src, 2);
    SolverOptions opts;
    opts.k = 2;
    const Polytope A = parabolic_hull(map, f);
    bool hull_ok = A.vertices().size() == 2;
    for (const Vec& v : A.vertices()) {
        const bool is01 = std::abs(v[0]) <= 1e-9 && std::abs(v[1] - 1.0) <= 1e-9;
        const bool is10 = std::abs(v[0] - 1.0) <= 1e-9 && std::abs(v[1]) <= 1e-9;
        hull_ok = hull_ok && (is01 || is10);
    }
    const SpectrumPoint p = level_set_dimension(map, f, {0.5, 0.5}, opts);
    const ConvexDecomposition dec = strict_convex_decomposition(A, {0.5, 0.5});
    Vec recon(2, 0.0);
    for (std::size_t i = 0; i < dec.weights.size(); ++i)
        for (int j = 0; j < 2; ++j)
            recon[j] += dec.weights[i] * A.vertices()[dec.vertex_indices[i]][j];
    const double dec_err =
        std::max(std::abs(recon[0] - 0.5), std::abs(recon[1] - 0.5));
    const bool pass = hull_ok && std::abs(p.dimension - 1.0) <= 1e-9 &&
                      p.status == SpectrumStatus::parabolic_flat && dec_err <= 1e-9;
    report(6, "two-potential parabolic segment", pass,
           fmt("hull_ok = %d, D(1/2,1/2) = %.9f [%s], decomposition error = %.2e",
               int(hull_ok), p.dimension, to_string(p.status).c_str(), dec_err));
}

void criterion_7() {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.25, 0.75});
    const auto t0 = clk::now();
    const MoranSchedule sched = build_block_schedule(map, f, mu, {0.25}, 0.1, 2);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 100; ++s) seeds.push_back(s);
    const DimensionCertificate cert = local_dimension_certificate(sched, map, f, seeds, 4096);
    const ConvergenceReport rep = verify_level(sched, map, f, seeds, 4096);
    const double frac = rep.fraction_final_below(0.03);
    const double el = seconds_since(t0);
    const bool pass = cert.estimate >= 0.7113 && frac >= 0.95 && el < 120.0;
    report(7, "concatenation lower-bound certificate", pass,
           fmt("median = %.4f (target %.4f), final dev < 0.03 on %.0f%%, %.1fs",
               cert.estimate, cert.target, 100 * frac, el));
}

void criterion_8() {
    const BranchSystem map = BranchSystem::manneville_pomeau(0.5);
    AnalyticSource src;
    src.id = AnalyticSource::Id::digit_indicator;
    src.digit = 2;
    const PotentialTable f = map.discretize_analytic(src, 2);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.9, 0.1});
    const MoranSchedule sched = build_parabolic_schedule(map, f, mu, {0.0}, 0.1, 12);
    const ScheduleValidation val = validate_schedule(sched);
    const bool k_invariants = val.filler_lengths_match && val.k_min_weight && val.k_growth &&
                              val.k_eps_vanishing && val.k_ratio_tail && val.ok();
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 50; ++s) seeds.push_back(s);
    const ConvergenceReport rep = verify_level(sched, map, f, seeds, 8192);
    const double frac = rep.fraction_final_below(0.05);
    report(8, "parabolic interleaving schedule", frac >= 0.9 && k_invariants,
           fmt("final dev < 0.05 on %.0f%% of seeds, run-multiplier invariants %s",
               100 * frac, k_invariants ? "hold" : "violated"));
}

void criterion_9() {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const LevelCover cov = level_cover(map, f, {0.25}, 14, 0.125);
    SolverOptions opts;
    opts.k = 1;
    const double dual = dual_dimension(map, f, {0.25}, opts).dimension;
    const bool pass = !cov.empty_cover && cov.root >= 0.8113 - 0.05 && cov.root <= 1.0 &&
                      cov.root >= dual - 0.05;
    report(9, "cover-root / lower-bound sandwich", pass,
           fmt("s_14 = %.4f, dual D = %.4f", cov.root, dual));
}

void criterion_10() {
    // Pressure gradient against central finite differences, 100 probes.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> Q(-3.0, 3.0), S(0.0, 2.0);
    const BranchSystem mp = BranchSystem::manneville_pomeau(0.5);
    AnalyticSource src;
    src.id = AnalyticSource::Id::coordinate;
    const PressureContext ctx_lin(BranchSystem::doubling(),
                                  PotentialTable::digit_indicator(2, 1), 1);
    const PressureContext ctx_mp(mp, mp.discretize_analytic(src, 2), 2);
    double worst_fd = 0.0;
    for (int t = 0; t < 100; ++t) {
        const PressureContext& ctx = (t % 2 == 0) ? ctx_lin : ctx_mp;
        const Vec q{Q(rng)};
        const double s = S(rng);
        const PressureEval ev = ctx.evaluate(q, s);
        const double eps = 1e-5;
        const double dq = (ctx.pressure({q[0] + eps}, s) - ctx.pressure({q[0] - eps}, s)) /
                          (2 * eps);
        const double ds = (ctx.pressure(q, s + eps) - ctx.pressure(q, s - eps)) / (2 * eps);
        worst_fd = std::max(worst_fd,
                            std::abs(dq - ev.grad_q[0]) / std::max(1.0, std::abs(dq)));
        worst_fd = std::max(worst_fd,
                            std::abs(ds + ev.lyapunov) / std::max(1.0, std::abs(ds)));
    }
    // Midpoint convexity in (q, s), 100 probes.
    int violations = 0;
    for (int t = 0; t < 100; ++t) {
        const PressureContext& ctx = (t % 2 == 0) ? ctx_lin : ctx_mp;
        const Vec qa{Q(rng)}, qb{Q(rng)};
        const double sa = S(rng), sb = S(rng);
        const double mid = ctx.pressure({0.5 * (qa[0] + qb[0])}, 0.5 * (sa + sb));
        if (mid > 0.5 * (ctx.pressure(qa, sa) + ctx.pressure(qb, sb)) + 1e-10) ++violations;
    }
    // Geometry/ergodic-sum distortion: exact for full linear families, and
    // non-increasing in depth for the intermittent map.
    std::mt19937_64 wrng(7);
    auto sample_words = [&](const BranchSystem& map, std::size_t n) {
        std::vector<Word> ws;
        for (int a = 1; a <= map.branch_count(); ++a) ws.push_back(Word::constant(a, n));
        std::uniform_int_distribution<int> D(1, map.branch_count());
        for (int t = 0; t < 60; ++t) {
            std::vector<int> syms;
            for (std::size_t j = 0; j < n; ++j) syms.push_back(D(wrng));
            ws.emplace_back(std::move(syms));
        }
        return ws;
    };
    double worst_lin = 0.0;
    for (const BranchSystem& map :
         {BranchSystem::doubling(), BranchSystem::linear_lengths({0.25, 0.75}),
          BranchSystem::linear_lengths({1.0 / 3, 1.0 / 3})}) {
        for (std::size_t n : {5u, 12u})
            worst_lin = std::max(worst_lin, map.distortion_gap(n, sample_words(map, n)));
    }
    std::vector<double> mp_gap;
    for (std::size_t n : {5u, 10u, 20u}) mp_gap.push_back(mp.distortion_gap(n, sample_words(mp, n)));
    const bool mp_mono = mp_gap[1] <= mp_gap[0] + 1e-12 && mp_gap[2] <= mp_gap[1] + 1e-12;
    const bool pass = worst_fd <= 1e-4 && violations == 0 && worst_lin <= 1e-10 && mp_mono;
    report(10, "numerical hygiene", pass,
           fmt("FD err = %.2e, convexity violations = %d, linear gap = %.2e, "
               "intermittent gaps %.3g/%.3g/%.3g",
               worst_fd, violations, worst_lin, mp_gap[0], mp_gap[1], mp_gap[2]));
}

void criterion_11() {
    const fs::path tmp = fs::temp_directory_path() / "mfa_acceptance_determinism";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    {
        std::ofstream cfg(tmp / "spectrum.json");
        cfg << R"({"schema_version":1,"map":{"family":"doubling"},
                   "potential":{"kind":"digit_indicator","digit":1,"depth":1},
                   "solver":{"k":1},"seed":5,
                   "spectrum":{"alphas":[0.2,0.4,0.6,0.8]}})";
        std::ofstream cfg2(tmp / "moran.json");
        cfg2 << R"({"schema_version":1,"map":{"family":"doubling"},
                    "potential":{"kind":"digit_indicator","digit":1,"depth":1},
                    "seed":5,
                    "moran":{"mode":"block","alpha":[0.25],"delta":0.1,"stages":2,
                             "seeds":5,"n_max":1024,
                             "base_measure":{"kind":"bernoulli","p":[0.25,0.75]}}})";
    }
    auto run = [&](const std::string& sub, const std::string& out) {
        const std::string cmd = std::string(MFA_CLI_PATH) + " " + sub + " --config " +
                                (tmp / (sub + ".json")).string() + " --out " +
                                (tmp / out).string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    bool ran = run("spectrum", "s1") && run("spectrum", "s2") && run("moran", "m1") &&
               run("moran", "m2");
    bool identical = ran;
    for (const char* name : {"spectrum.csv", "spectrum.json", "spectrum.plt"})
        identical = identical && !slurp(tmp / "s1" / name).empty() &&
                    slurp(tmp / "s1" / name) == slurp(tmp / "s2" / name);
    for (const char* name : {"schedule.json", "prefixes.txt", "report.csv", "certificate.json"})
        identical = identical && !slurp(tmp / "m1" / name).empty() &&
                    slurp(tmp / "m1" / name) == slurp(tmp / "m2" / name);
    fs::remove_all(tmp);
    report(11, "byte-identical reruns", identical,
           ran ? "all spectrum and schedule outputs identical" : "CLI invocation failed");
}

}  // namespace

int main() {
    std::setbuf(stdout, nullptr);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("%d of 11 criteria passed\n", 11 - g_failures);
    return g_failures;
}
