#include "mfa/spectrum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace mfa {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sup_abs(const Vec& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

struct InnerResult {
    Vec q;
    double value = 0.0;  // P(q, s) - <q, alpha>
    PressureEval eval;
    bool escaped = false;
};

// Minimize q -> P(q, s) - <q, alpha> (convex, smooth) by BFGS with Armijo
// backtracking.  Stops on gradient norm, iteration cap, multiplier escape, or
// once the value drops below stop_below (enough when only the sign matters).
InnerResult inner_minimize(const PressureContext& ctx, const Vec& alpha, double s, Vec q,
                           double gtol, const SolverOptions& opts,
                           double stop_below = -std::numeric_limits<double>::infinity()) {
    const int d = static_cast<int>(alpha.size());
    InnerResult out;
    out.eval = ctx.evaluate(q, s);
    out.value = out.eval.value - dot(q, alpha);
    out.q = q;

    std::vector<Vec> H(d, Vec(d, 0.0));
    for (int i = 0; i < d; ++i) H[i][i] = 1.0;
    Vec grad(d);
    for (int i = 0; i < d; ++i) grad[i] = out.eval.grad_q[i] - alpha[i];

    for (int it = 0; it < opts.inner_iter_cap; ++it) {
        if (out.value < stop_below) break;
        double gn = std::sqrt(dot(grad, grad));
        if (gn <= gtol) break;
        if (sup_abs(out.q) > opts.q_cap) {
            out.escaped = true;
            break;
        }
        Vec p(d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) p[i] -= H[i][j] * grad[j];
        double slope = dot(p, grad);
        if (slope >= 0.0) {  // reset a corrupted approximation
            for (int i = 0; i < d; ++i) {
                std::fill(H[i].begin(), H[i].end(), 0.0);
                H[i][i] = 1.0;
                p[i] = -grad[i];
            }
            slope = -dot(grad, grad);
        }
        double t = 1.0;
        Vec qn(d);
        PressureEval en;
        double fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            for (int i = 0; i < d; ++i) qn[i] = out.q[i] + t * p[i];
            en = ctx.evaluate(qn, s);
            fn = en.value - dot(qn, alpha);
            if (std::isfinite(fn) && fn <= out.value + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        Vec gn_vec(d), sv(d), yv(d);
        for (int i = 0; i < d; ++i) {
            gn_vec[i] = en.grad_q[i] - alpha[i];
            sv[i] = qn[i] - out.q[i];
            yv[i] = gn_vec[i] - grad[i];
        }
        const double sy = dot(sv, yv);
        if (sy > 1e-12) {
            // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
            const double r = 1.0 / sy;
            Vec Hy(d, 0.0);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) Hy[i] += H[i][j] * yv[j];
            const double yHy = dot(yv, Hy);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    H[i][j] += -r * (sv[i] * Hy[j] + Hy[i] * sv[j]) +
                               r * r * yHy * sv[i] * sv[j] + r * sv[i] * sv[j];
        }
        out.q = qn;
        out.eval = en;
        out.value = fn;
        grad = gn_vec;
    }
    if (sup_abs(out.q) > opts.q_cap) out.escaped = true;
    return out;
}

// Shared dual driver over a (possibly masked) pressure context.
SpectrumPoint dual_on_context(const PressureContext& ctx, const Vec& alpha,
                              const SolverOptions& opts) {
    SpectrumPoint p;
    p.alpha = alpha;
    p.q_star.assign(alpha.size(), 0.0);
    p.measure_average.assign(alpha.size(), 0.0);
    if (!ctx.feasible()) return p;

    const double s_cap = ctx.hausdorff_estimate();
    const double gtol = opts.tol / 10.0;
    Vec warm(alpha.size(), 0.0);
    bool any_escape = false;
    auto G = [&](double s) {
        // Only the sign of G (and whether it is below -tol) drives the outer
        // logic, so certifying G < -2 tol is enough; this avoids chasing
        // escaping multipliers all the way to the cap.
        InnerResult res = inner_minimize(ctx, alpha, s, warm, gtol, opts, -2.0 * opts.tol);
        warm = res.q;
        if (res.escaped) any_escape = true;
        return res.value;
    };

    double D;
    const double g0 = G(0.0);
    if (g0 < -opts.tol) {
        // Even the entropy spectrum is negative: alpha is unreachable in this
        // (sub)system.
        p.status = SpectrumStatus::infeasible;
        return p;
    }
    if (G(s_cap) >= 0.0) {
        D = s_cap;
    } else {
        double lo = 0.0, hi = s_cap;
        while (hi - lo > opts.tol) {
            const double mid = 0.5 * (lo + hi);
            (G(mid) >= 0.0 ? lo : hi) = mid;
        }
        D = lo;
    }

    InnerResult res = inner_minimize(ctx, alpha, D, warm, gtol, opts);
    p.dimension = D;
    p.s_star = D;
    p.q_star = res.q;
    p.measure_average = res.eval.grad_q;
    p.lyapunov = res.eval.lyapunov;
    // h(mu_Gibbs) = P - <q, int f dmu> + s int g dmu.
    p.entropy = res.eval.value - dot(res.q, res.eval.grad_q) + D * res.eval.lyapunov;
    p.duality_gap = p.lyapunov > 1e-12 ? std::abs(p.entropy / p.lyapunov - D) : 0.0;
    p.status = any_escape ? SpectrumStatus::boundary_fallback : SpectrumStatus::interior_solved;
    return p;
}

int feasibility_order(const PotentialTable& f, const SolverOptions& opts) {
    return std::max({1, f.depth() - 1, std::min(opts.k, opts.feasibility_order)});
}

// Occupation-measure primal inner solve at fixed s: exponentiated-gradient
// ascent on edge probabilities under an augmented Lagrangian for the flow and
// moment constraints.  Returns h - s*lambda of the repaired Markov measure.
struct PrimalInner {
    double value = 0.0;
    double entropy = 0.0, lyapunov = 0.0;
    Vec avg_f;
    std::vector<double> x;  // final edge occupation (warm start)
};

PrimalInner primal_inner(const PressureContext& ctx, const Vec& alpha, double s,
                         std::vector<double> x, const SolverOptions& opts) {
    const int m = ctx.alphabet();
    const int d = ctx.dim();
    const std::uint64_t S = ctx.num_states();
    const std::size_t E = S * m;

    if (x.empty()) {
        x.assign(E, 0.0);
        double cnt = 0.0;
        for (std::uint64_t st = 0; st < S; ++st)
            for (int a = 1; a <= m; ++a)
                if (ctx.edge_allowed(st, a)) { x[st * m + a - 1] = 1.0; cnt += 1.0; }
        for (double& v : x) v /= cnt;
    }

    std::vector<double> u_flow(S, 0.0), u_mom(d, 0.0);
    std::vector<double> y(S), z(S), grad(E);
    std::vector<double> x_avg(E, 0.0);
    int n_avg = 0;
    const double rho = opts.primal_rho;
    for (int it = 0; it < opts.primal_iter_cap; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        std::fill(z.begin(), z.end(), 0.0);
        Vec r_mom(d, 0.0);
        for (std::uint64_t st = 0; st < S; ++st) {
            for (int a = 1; a <= m; ++a) {
                const double v = x[st * m + a - 1];
                if (v == 0.0) continue;
                y[st] += v;
                z[ctx.next_state(st, a)] += v;
                const double* fe = ctx.edge_potential(st, a);
                for (int j = 0; j < d; ++j) r_mom[j] += v * fe[j];
            }
        }
        for (int j = 0; j < d; ++j) r_mom[j] -= alpha[j];

        double gmax = -std::numeric_limits<double>::infinity();
        for (std::uint64_t st = 0; st < S; ++st) {
            for (int a = 1; a <= m; ++a) {
                const std::size_t e = st * m + a - 1;
                if (x[e] == 0.0) { grad[e] = -std::numeric_limits<double>::infinity(); continue; }
                const std::uint64_t to = ctx.next_state(st, a);
                const double r_to = z[to] - y[to];
                const double r_fr = z[st] - y[st];
                double g = -std::log(std::max(x[e], 1e-300) / std::max(y[st], 1e-300)) -
                           s * ctx.edge_g(st, a) - (u_flow[to] + rho * r_to) +
                           (u_flow[st] + rho * r_fr);
                const double* fe = ctx.edge_potential(st, a);
                for (int j = 0; j < d; ++j) g -= (u_mom[j] + rho * r_mom[j]) * fe[j];
                g = std::clamp(g, -30.0, 30.0);
                grad[e] = g;
                gmax = std::max(gmax, g);
            }
        }
        // Diminishing step keeps the multiplier dynamics from oscillating.
        const double eta = opts.primal_eta / (1.0 + 4.0 * it / opts.primal_iter_cap);
        double total = 0.0;
        for (std::size_t e = 0; e < E; ++e) {
            if (x[e] == 0.0) continue;
            x[e] *= std::exp(eta * (grad[e] - gmax));
            total += x[e];
        }
        for (double& v : x) v /= total;

        // Gentle per-iteration dual ascent on the constraint multipliers.
        for (std::uint64_t st = 0; st < S; ++st) u_flow[st] += 0.1 * rho * (z[st] - y[st]);
        for (int j = 0; j < d; ++j) u_mom[j] += 0.1 * rho * r_mom[j];

        // Tail averaging: the averaged occupation damps any residual cycling.
        if (2 * it >= opts.primal_iter_cap) {
            for (std::size_t e = 0; e < E; ++e) x_avg[e] += x[e];
            ++n_avg;
        }
    }
    if (n_avg > 0)
        for (std::size_t e = 0; e < E; ++e) x[e] = x_avg[e] / n_avg;

    // Repair: the Markov measure of the conditional transition frequencies is
    // genuinely shift-invariant; evaluate the objective there.
    std::vector<double> trans(E, 0.0);
    for (std::uint64_t st = 0; st < S; ++st) {
        double row = 0.0;
        for (int a = 0; a < m; ++a) row += x[st * m + a];
        if (row > 0.0) {
            for (int a = 0; a < m; ++a) trans[st * m + a] = x[st * m + a] / row;
        } else {
            for (int a = 0; a < m; ++a) trans[st * m + a] = 1.0 / m;
        }
    }
    MarkovMeasure mu(m, ctx.order(), std::move(trans));
    PrimalInner out;
    out.entropy = mu.entropy_rate();
    out.avg_f.assign(d, 0.0);
    for (std::uint64_t st = 0; st < S; ++st) {
        const double pst = mu.stationary(st);
        if (pst == 0.0) continue;
        for (int a = 1; a <= m; ++a) {
            if (!ctx.edge_allowed(st, a)) continue;
            const double w = pst * mu.transition(st, a);
            out.lyapunov += w * ctx.edge_g(st, a);
            const double* fe = ctx.edge_potential(st, a);
            for (int j = 0; j < d; ++j) out.avg_f[j] += w * fe[j];
        }
    }
    out.value = out.entropy - s * out.lyapunov;
    out.x = std::move(x);
    return out;
}

std::vector<char> parabolic_run_mask(const BranchSystem& map, int k, int run_cap,
                                     std::uint64_t budget) {
    const int m = map.branch_count();
    const std::uint64_t S = cylinder_count(m, static_cast<std::size_t>(k), budget);
    std::vector<int> parab;
    for (const auto& [sym, x] : map.parabolic_points()) {
        (void)x;
        parab.push_back(sym);
    }
    std::vector<char> mask(S, 1);
    for (std::uint64_t s = 0; s < S; ++s) {
        const Word w = Word::from_rank(s, static_cast<std::size_t>(k), m);
        for (int sym : parab) {
            int run = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                run = w[i] == sym ? run + 1 : 0;
                if (run >= run_cap) { mask[s] = 0; break; }
            }
            if (!mask[s]) break;
        }
    }
    return mask;
}

}  // namespace

std::string to_string(SpectrumStatus s) {
    switch (s) {
        case SpectrumStatus::interior_solved: return "interior_solved";
        case SpectrumStatus::boundary_fallback: return "boundary_fallback";
        case SpectrumStatus::parabolic_flat: return "parabolic_flat";
        case SpectrumStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

double bowen_dimension(const BranchSystem& map, int k) {
    const PotentialTable f0 = PotentialTable::constant(map.branch_count(), {0.0});
    return PressureContext(map, f0, k).hausdorff_estimate();
}

SpectrumPoint dual_dimension(const BranchSystem& map, const PotentialTable& f, const Vec& alpha,
                             const SolverOptions& opts) {
    if (static_cast<int>(alpha.size()) != f.dim())
        throw std::invalid_argument("dual_dimension: alpha has wrong dimension");
    const Polytope R = rotation_set(map, f, feasibility_order(f, opts));
    SpectrumPoint p;
    p.alpha = alpha;
    p.q_star.assign(alpha.size(), 0.0);
    p.measure_average.assign(alpha.size(), 0.0);
    if (!R.contains(alpha, opts.hull_tol)) return p;

    const PressureContext ctx(map, f, opts.k);
    p = dual_on_context(ctx, alpha, opts);
    if (p.status == SpectrumStatus::boundary_fallback) {
        const double dual_D = p.dimension;
        SpectrumPoint prim = primal_dimension(map, f, alpha, opts);
        prim.status = SpectrumStatus::boundary_fallback;
        prim.duality_gap = std::abs(dual_D - prim.dimension);
        return prim;
    }
    return p;
}

SpectrumPoint primal_dimension(const BranchSystem& map, const PotentialTable& f, const Vec& alpha,
                               const SolverOptions& opts) {
    if (static_cast<int>(alpha.size()) != f.dim())
        throw std::invalid_argument("primal_dimension: alpha has wrong dimension");
    SpectrumPoint p;
    p.alpha = alpha;
    p.q_star.assign(alpha.size(), 0.0);
    p.measure_average.assign(alpha.size(), 0.0);
    const Polytope R = rotation_set(map, f, feasibility_order(f, opts));
    if (!R.contains(alpha, opts.hull_tol)) return p;
    const PressureContext ctx(map, f, opts.k);
    if (!ctx.feasible()) return p;

    const double s_cap = ctx.hausdorff_estimate();
    std::vector<double> warm;
    auto V = [&](double s) {
        PrimalInner r = primal_inner(ctx, alpha, s, warm, opts);
        warm = r.x;
        return r;
    };

    double D;
    if (V(s_cap).value >= 0.0) {
        D = s_cap;
    } else {
        double lo = 0.0, hi = s_cap;
        if (V(lo).value < 0.0) {
            lo = 0.0;
            hi = 0.0;
        }
        while (hi - lo > opts.tol) {
            const double mid = 0.5 * (lo + hi);
            (V(mid).value >= 0.0 ? lo : hi) = mid;
        }
        D = lo;
    }
    PrimalInner fin = primal_inner(ctx, alpha, D, warm, opts);
    p.dimension = D;
    p.s_star = D;
    p.entropy = fin.entropy;
    p.lyapunov = fin.lyapunov;
    p.measure_average = fin.avg_f;
    p.duality_gap = fin.lyapunov > 1e-12 ? std::abs(fin.entropy / fin.lyapunov - D) : 0.0;
    p.status = SpectrumStatus::interior_solved;
    return p;
}

SpectrumPoint subsystem_dimension(const BranchSystem& map, const PotentialTable& f,
                                  const Vec& alpha, int run_cap, const SolverOptions& opts) {
    if (run_cap < 1) throw std::invalid_argument("subsystem_dimension: run_cap must be >= 1");
    if (!map.has_parabolic()) return dual_dimension(map, f, alpha, opts);
    const int kL = std::max(opts.k, run_cap);
    std::vector<char> mask = parabolic_run_mask(map, kL, run_cap, opts.budget);
    const PressureContext ctx(map, f, kL, std::move(mask));
    SpectrumPoint p = dual_on_context(ctx, alpha, opts);
    p.sweep_run_cap = run_cap;
    return p;
}

SpectrumPoint level_set_dimension(const BranchSystem& map, const PotentialTable& f,
                                  const Vec& alpha, const SolverOptions& opts) {
    if (!map.has_parabolic()) return dual_dimension(map, f, alpha, opts);

    // Advisory hypothesis check: some uniformly hyperbolic subsystem should
    // carry nearly the full limit-set dimension.
    const double bowen = bowen_dimension(map, opts.k);
    double sup_hl = 0.0;
    const PotentialTable f0 = PotentialTable::constant(map.branch_count(), {0.0});
    for (int L : opts.sweep_run_caps) {
        const int kL = std::max(opts.k, L);
        PressureContext sub(map, f0, kL, parabolic_run_mask(map, kL, L, opts.budget));
        if (sub.feasible()) sup_hl = std::max(sup_hl, sub.hausdorff_estimate());
    }
    const bool warn = sup_hl < bowen - opts.hypothesis_tol;

    const Polytope A = parabolic_hull(map, f);
    if (!A.empty() && A.contains(alpha, opts.hull_tol)) {
        SpectrumPoint p;
        p.alpha = alpha;
        p.q_star.assign(alpha.size(), 0.0);
        p.dimension = bowen;
        p.s_star = bowen;
        p.status = SpectrumStatus::parabolic_flat;
        p.hypothesis_warning = warn;
        const PressureContext ctx(map, f, opts.k);
        const PressureEval ev = ctx.evaluate(Vec(f.dim(), 0.0), bowen);
        p.measure_average = ev.grad_q;
        p.lyapunov = ev.lyapunov;
        p.entropy = ev.value + bowen * ev.lyapunov;
        p.duality_gap = p.lyapunov > 1e-12 ? std::abs(p.entropy / p.lyapunov - bowen) : 0.0;
        return p;
    }

    SpectrumPoint best;
    best.alpha = alpha;
    best.q_star.assign(alpha.size(), 0.0);
    best.measure_average.assign(alpha.size(), 0.0);
    for (int L : opts.sweep_run_caps) {
        SpectrumPoint sp = subsystem_dimension(map, f, alpha, L, opts);
        if (sp.status == SpectrumStatus::infeasible) continue;
        if (best.status == SpectrumStatus::infeasible || sp.dimension >= best.dimension) best = sp;
    }
    best.hypothesis_warning = warn;
    return best;
}

LevelCover level_cover(const BranchSystem& map, const PotentialTable& f, const Vec& alpha,
                       std::size_t n, double radius, std::uint64_t budget) {
    if (static_cast<int>(alpha.size()) != f.dim())
        throw std::invalid_argument("level_cover: alpha has wrong dimension");
    if (n < static_cast<std::size_t>(f.depth()))
        throw std::invalid_argument("level_cover: n shorter than potential depth");
    LevelCover out;
    std::vector<double> log_diams;
    for_each_cylinder(map.branch_count(), n, [&](const Word& w) {
        const std::vector<double> avg = f.birkhoff_average(w);
        double dist = 0.0;
        for (std::size_t j = 0; j < alpha.size(); ++j)
            dist += (avg[j] - alpha[j]) * (avg[j] - alpha[j]);
        if (std::sqrt(dist) < radius) {
            out.words.push_back(w);
            log_diams.push_back(map.log_cylinder_diameter(w));
        }
    }, budget);
    out.empty_cover = out.words.empty();
    if (out.empty_cover) return out;

    // Root of sum_w diam(I_w)^s = 1 (log-sum-exp, decreasing in s).
    auto phi = [&](double s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double ld : log_diams) mx = std::max(mx, s * ld);
        double acc = 0.0;
        for (double ld : log_diams) acc += std::exp(s * ld - mx);
        return mx + std::log(acc);
    };
    if (phi(0.0) <= 0.0) return out;  // single cylinder: root 0
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (phi(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) throw std::runtime_error("level_cover: no sign change");
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) > 0.0 ? lo : hi) = mid;
    }
    out.root = 0.5 * (lo + hi);
    return out;
}

std::vector<SpectrumPoint> spectrum_grid(const BranchSystem& map, const PotentialTable& f,
                                         const std::vector<Vec>& grid, const SolverOptions& opts) {
    std::vector<SpectrumPoint> out(grid.size());
    const int nthreads = std::max(1, opts.threads);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
            try {
                out[i] = level_set_dimension(map, f, grid[i], opts);
            } catch (const std::exception&) {
                out[i] = SpectrumPoint{};
                out[i].alpha = grid[i];
            }
        }
    };
    if (nthreads == 1 || grid.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

ContinuityReport continuity_scan(const BranchSystem& map, const PotentialTable& f,
                                 const Vec& alpha, const std::vector<double>& radii,
                                 const SolverOptions& opts) {
    const Polytope R = rotation_set(map, f, feasibility_order(f, opts));
    if (R.intrinsic_dim() == 0)
        throw std::runtime_error("continuity_scan: rotation set has no relative interior of positive dimension");
    if (map.has_parabolic()) {
        const Polytope A = parabolic_hull(map, f);
        if (!A.empty() && A.contains(alpha, opts.hull_tol))
            throw std::runtime_error("continuity_scan: alpha lies in the parabolic hull");
    }
    ContinuityReport rep;
    const SpectrumPoint center = level_set_dimension(map, f, alpha, opts);
    for (double r : radii) {
        const SimplexSplit ss = surrounding_simplex(R, alpha, r);
        double mn = center.dimension, mx = center.dimension;
        for (const Vec& v : ss.simplex) {
            const SpectrumPoint sp = level_set_dimension(map, f, v, opts);
            mn = std::min(mn, sp.dimension);
            mx = std::max(mx, sp.dimension);
        }
        rep.radii.push_back(r);
        rep.oscillation.push_back(mx - mn);
    }
    return rep;
}

}  // namespace mfa
