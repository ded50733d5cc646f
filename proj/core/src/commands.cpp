#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "mfa/markov_measure.hpp"
#include "mfa/moran.hpp"
#include "mfa/polytope.hpp"
#include "mfa/pressure.hpp"
#include "mfa/run_config.hpp"
#include "mfa/spectrum.hpp"

namespace mfa {

namespace {

using nlohmann::json;

// All floats are printed through this: 10 significant digits, locale-free.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

bool ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    return !ec;
}

json polytope_json(const Polytope& P) {
    json j;
    j["empty"] = P.empty();
    j["ambient_dim"] = P.ambient_dim();
    j["intrinsic_dim"] = P.intrinsic_dim();
    j["vertices"] = json::array();
    for (const Vec& v : P.vertices()) j["vertices"].push_back(v);
    return j;
}

json point_json(const SpectrumPoint& p) {
    json j;
    j["alpha"] = p.alpha;
    j["dimension"] = p.dimension;
    j["status"] = to_string(p.status);
    j["s_star"] = p.s_star;
    j["q_star"] = p.q_star;
    j["entropy"] = p.entropy;
    j["lyapunov"] = p.lyapunov;
    j["measure_average"] = p.measure_average;
    j["duality_gap"] = p.duality_gap;
    j["hypothesis_warning"] = p.hypothesis_warning;
    j["sweep_run_cap"] = p.sweep_run_cap;
    return j;
}

MarkovMeasure make_base_measure(const json& m) {
    const std::string kind = m.value("kind", "");
    if (kind == "bernoulli") {
        std::vector<double> p;
        for (const auto& v : m.at("p")) p.push_back(v.get<double>());
        return MarkovMeasure::bernoulli(std::move(p));
    }
    if (kind == "markov") {
        const int mm = m.at("m").get<int>();
        const int k = m.at("k").get<int>();
        std::vector<double> trans;
        for (const auto& v : m.at("trans")) trans.push_back(v.get<double>());
        return MarkovMeasure(mm, k, std::move(trans));
    }
    throw ConfigError("unknown base measure kind: " + kind);
}

int fail(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return 1;
}

}  // namespace

int cmd_spectrum(const RunConfig& cfg, const std::string& out_dir) {
    try {
        const BranchSystem map = cfg.make_map();
        const PotentialTable f = cfg.make_potential(map);
        const SolverOptions opts = cfg.make_solver();
        const std::vector<Vec> grid = cfg.spectrum_grid_points(f.dim());
        if (!ensure_dir(out_dir)) return fail("cannot create output directory: " + out_dir);

        const std::vector<SpectrumPoint> pts = spectrum_grid(map, f, grid, opts);

        const int d = f.dim();
        std::ostringstream csv;
        for (int j = 1; j <= d; ++j) csv << "alpha_" << j << ",";
        csv << "D,status,s_star";
        for (int j = 1; j <= d; ++j) csv << ",q_" << j;
        csv << ",h,lambda\n";
        bool any_feasible = false;
        for (const SpectrumPoint& p : pts) {
            if (p.status != SpectrumStatus::infeasible) any_feasible = true;
            for (int j = 0; j < d; ++j) csv << fmt(p.alpha[j]) << ",";
            csv << fmt(p.dimension) << "," << to_string(p.status) << "," << fmt(p.s_star);
            for (int j = 0; j < d; ++j) csv << "," << fmt(p.q_star[j]);
            csv << "," << fmt(p.entropy) << "," << fmt(p.lyapunov) << "\n";
        }
        if (!write_file(out_dir + "/spectrum.csv", csv.str()))
            return fail("cannot write spectrum.csv");

        json side;
        side["schema_version"] = 1;
        side["points"] = json::array();
        for (const SpectrumPoint& p : pts) side["points"].push_back(point_json(p));
        if (!write_file(out_dir + "/spectrum.json", side.dump(2) + "\n"))
            return fail("cannot write spectrum.json");

        std::ostringstream plt;
        plt << "set datafile separator ','\n";
        if (d == 1) {
            plt << "set xlabel 'alpha'\nset ylabel 'D(alpha)'\n"
                << "plot 'spectrum.csv' skip 1 using 1:2 with linespoints title 'spectrum'\n";
        } else {
            plt << "set xlabel 'alpha_1'\nset ylabel 'alpha_2'\nset view map\n"
                << "splot 'spectrum.csv' skip 1 using 1:2:" << d + 1
                << " with points palette title 'D'\n";
        }
        if (!write_file(out_dir + "/spectrum.plt", plt.str()))
            return fail("cannot write spectrum.plt");
        return any_feasible ? 0 : 2;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_hull(const RunConfig& cfg, const std::string& out_dir) {
    try {
        const BranchSystem map = cfg.make_map();
        const PotentialTable f = cfg.make_potential(map);
        const SolverOptions opts = cfg.make_solver();
        int k = opts.k;
        if (cfg.has_section("hull")) {
            const json& h = cfg.section("hull");
            k = h.value("k", k);
            if (k < 1 || k > 12) throw ConfigError("hull k out of range");
        }
        if (!ensure_dir(out_dir)) return fail("cannot create output directory: " + out_dir);

        const Polytope R1 = rotation_set(map, f, k);
        const Polytope R2 = rotation_set(map, f, k + 1);
        bool included = true;
        for (const Vec& v : R1.vertices())
            if (!R2.contains(v, 1e-9)) included = false;

        json out;
        out["schema_version"] = 1;
        out["rotation_set"] = polytope_json(R1);
        out["rotation_set"]["order"] = k;
        out["rotation_set_refined"] = polytope_json(R2);
        out["rotation_set_refined"]["order"] = k + 1;
        out["inclusion"] = included;
        out["parabolic_hull"] =
            map.has_parabolic() ? polytope_json(parabolic_hull(map, f)) : json(nullptr);
        if (!write_file(out_dir + "/hull.json", out.dump(2) + "\n"))
            return fail("cannot write hull.json");
        return R1.empty() ? 2 : 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_moran(const RunConfig& cfg, const std::string& out_dir) {
    try {
        const BranchSystem map = cfg.make_map();
        const PotentialTable f = cfg.make_potential(map);
        const json& mo = cfg.section("moran");
        const std::string mode = mo.value("mode", "block");
        const double delta = mo.value("delta", 0.1);
        const int stages = mo.value("stages", 2);
        const int n_seeds = mo.value("seeds", 0);
        const std::size_t n_max = mo.value("n_max", std::size_t{4096});
        if (n_seeds < 1) throw ConfigError("need at least one seed");
        Vec alpha;
        for (const auto& v : mo.at("alpha")) alpha.push_back(v.get<double>());
        const MarkovMeasure mu = make_base_measure(mo.at("base_measure"));
        if (!ensure_dir(out_dir)) return fail("cannot create output directory: " + out_dir);

        MoranOptions mopts;
        mopts.seed = cfg.base_seed();
        MoranSchedule sched;
        if (mode == "block") {
            sched = build_block_schedule(map, f, mu, alpha, delta, stages, mopts);
        } else if (mode == "parabolic") {
            sched = build_parabolic_schedule(map, f, mu, alpha, delta, stages, mopts);
        } else {
            throw ConfigError("unknown moran mode: " + mode);
        }
        const ScheduleValidation val = validate_schedule(sched);

        json sj;
        sj["schema_version"] = 1;
        sj["mode"] = mode;
        sj["alpha"] = alpha;
        sj["delta"] = delta;
        sj["base"] = {{"entropy", sched.base_stats.entropy},
                      {"lyapunov", sched.base_stats.lyapunov},
                      {"average", sched.base_stats.potential_average}};
        sj["hypothesis_warning"] = sched.hypothesis_warning;
        sj["r_weights"] = sched.r_weights;
        sj["parabolic_symbols"] = sched.parabolic_symbols;
        sj["validation_ok"] = val.ok();
        sj["stages"] = json::array();
        for (const MoranStage& st : sched.stages) {
            json s;
            s["index"] = st.index;
            s["epsilon"] = st.epsilon;
            s["block_len"] = st.block_len;
            s["repetitions"] = st.repetitions;
            s["tau_f"] = st.tau_f;
            s["tau_h"] = st.tau_h;
            s["tau_g"] = st.tau_g;
            s["omega_mass"] = st.omega_mass;
            s["k_i"] = st.k_i;
            s["segment_lengths"] = st.segment_lengths;
            s["remainder"] = st.remainder;
            sj["stages"].push_back(std::move(s));
        }
        if (!write_file(out_dir + "/schedule.json", sj.dump(2) + "\n"))
            return fail("cannot write schedule.json");

        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < n_seeds; ++i) seeds.push_back(cfg.base_seed() + i);

        std::ostringstream prefixes;
        for (std::uint64_t s : seeds)
            prefixes << sample_moran(sched, map, f, n_max, s).str() << "\n";
        if (!write_file(out_dir + "/prefixes.txt", prefixes.str()))
            return fail("cannot write prefixes.txt");

        const ConvergenceReport rep = verify_level(sched, map, f, seeds, n_max);
        std::ostringstream csv;
        csv << "seed,checkpoint,sup_deviation\n";
        for (std::size_t i = 0; i < seeds.size(); ++i)
            for (std::size_t c = 0; c < rep.checkpoints.size(); ++c)
                csv << seeds[i] << "," << rep.checkpoints[c] << ","
                    << fmt(rep.sup_deviation[i][c]) << "\n";
        if (!write_file(out_dir + "/report.csv", csv.str()))
            return fail("cannot write report.csv");

        const DimensionCertificate cert = local_dimension_certificate(sched, map, f, seeds, n_max);
        const double slack = mo.value("slack", 0.1);
        json cj;
        cj["schema_version"] = 1;
        cj["estimate"] = cert.estimate;
        cj["target"] = cert.target;
        cj["slack"] = slack;
        cj["pass"] = cert.estimate >= cert.target - slack;
        if (!write_file(out_dir + "/certificate.json", cj.dump(2) + "\n"))
            return fail("cannot write certificate.json");
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_check(const RunConfig& cfg, const std::string& out_dir) {
    try {
        const BranchSystem map = cfg.make_map();
        const PotentialTable f = cfg.make_potential(map);
        const SolverOptions opts = cfg.make_solver();
        if (!ensure_dir(out_dir)) return fail("cannot create output directory: " + out_dir);
        const PressureContext ctx(map, f, opts.k);
        const int d = f.dim();
        std::mt19937_64 rng(777);
        std::uniform_real_distribution<double> qdist(-3.0, 3.0), sdist(0.0, 2.0);

        bool all_ok = true;
        std::ostringstream table;
        table << "check,pass,detail\n";
        auto record = [&](const std::string& name, bool ok, const std::string& detail) {
            all_ok = all_ok && ok;
            table << name << "," << (ok ? "pass" : "FAIL") << "," << detail << "\n";
        };

        // Midpoint convexity of the pressure on random probe pairs.
        int violations = 0;
        for (int t = 0; t < 100; ++t) {
            Vec q1(d), q2(d), qm(d);
            for (int j = 0; j < d; ++j) {
                q1[j] = qdist(rng);
                q2[j] = qdist(rng);
                qm[j] = 0.5 * (q1[j] + q2[j]);
            }
            const double s1 = sdist(rng), s2 = sdist(rng);
            const double pm = ctx.pressure(qm, 0.5 * (s1 + s2));
            if (pm > 0.5 * (ctx.pressure(q1, s1) + ctx.pressure(q2, s2)) + 1e-8) ++violations;
        }
        record("pressure_convexity", violations == 0, std::to_string(violations) + " violations");

        // Gradient against central finite differences.
        double worst_rel = 0.0;
        const double step = 1e-5;
        for (int t = 0; t < 100; ++t) {
            Vec q(d);
            for (int j = 0; j < d; ++j) q[j] = qdist(rng);
            const double s = sdist(rng);
            const PressureEval ev = ctx.evaluate(q, s);
            for (int j = 0; j < d; ++j) {
                Vec qp = q, qmn = q;
                qp[j] += step;
                qmn[j] -= step;
                const double fd = (ctx.pressure(qp, s) - ctx.pressure(qmn, s)) / (2 * step);
                worst_rel = std::max(worst_rel,
                                     std::abs(fd - ev.grad_q[j]) / std::max(1.0, std::abs(fd)));
            }
            const double fds =
                (ctx.pressure(q, s + step) - ctx.pressure(q, s - step)) / (2 * step);
            worst_rel =
                std::max(worst_rel, std::abs(fds + ev.lyapunov) / std::max(1.0, std::abs(fds)));
        }
        record("pressure_gradient_fd", worst_rel <= 1e-4, "max rel err " + fmt(worst_rel));

        // Distortion defect trend over n in {5, 10, 20}.
        std::vector<double> gaps;
        for (std::size_t n : {std::size_t{5}, std::size_t{10}, std::size_t{20}}) {
            std::vector<Word> sample;
            for (int i = 1; i <= map.branch_count(); ++i) sample.push_back(Word::constant(i, n));
            std::mt19937_64 wrng(n * 1234567ULL);
            for (int t = 0; t < 60; ++t) {
                std::vector<int> s(n);
                for (auto& sym : s) sym = 1 + static_cast<int>(wrng() % map.branch_count());
                sample.emplace_back(std::move(s));
            }
            gaps.push_back(map.distortion_gap(n, sample));
        }
        const bool gap_trend = gaps[1] <= gaps[0] + 1e-12 && gaps[2] <= gaps[1] + 1e-12 &&
                               (!map.is_linear() || gaps[2] <= 1e-10);
        record("distortion_gap_trend", gap_trend,
               fmt(gaps[0]) + " " + fmt(gaps[1]) + " " + fmt(gaps[2]));

        // Duality gap at three interior points of the rotation set.
        const Polytope R = rotation_set(map, f, std::min(opts.k, 3));
        Vec centroid(d, 0.0);
        for (const Vec& v : R.vertices())
            for (int j = 0; j < d; ++j) centroid[j] += v[j] / R.vertices().size();
        std::vector<Vec> probes{centroid};
        for (std::size_t t = 0; t < 2 && t < R.vertices().size(); ++t) {
            Vec v(d);
            for (int j = 0; j < d; ++j) v[j] = 0.5 * centroid[j] + 0.5 * R.vertices()[t][j];
            probes.push_back(std::move(v));
        }
        double worst_gap = 0.0;
        for (const Vec& a : probes) {
            const SpectrumPoint du = dual_dimension(map, f, a, opts);
            const SpectrumPoint pr = primal_dimension(map, f, a, opts);
            worst_gap = std::max({worst_gap, du.duality_gap,
                                  std::abs(du.dimension - pr.dimension)});
        }
        record("duality_gap", worst_gap <= 2e-3, "max gap " + fmt(worst_gap));

        std::cout << table.str();
        if (!write_file(out_dir + "/check.csv", table.str()))
            return fail("cannot write check.csv");
        return all_ok ? 0 : 2;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

}  // namespace mfa
