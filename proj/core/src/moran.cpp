#include "mfa/moran.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mfa/pressure.hpp"

namespace mfa {

namespace {

double euclid(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double ladder_epsilon(const PotentialTable& f, int i, double c) {
    return std::max(f.variation_bound(static_cast<std::size_t>(i)), c / std::ldexp(1.0, i));
}

// int f d nu, exact from the stationary distribution.
Vec measure_average(const MarkovMeasure& nu, const PotentialTable& f) {
    const int d = f.dim();
    Vec avg(d, 0.0);
    const int r = f.depth();
    if (nu.order() >= r) {
        const std::uint64_t S = nu.num_states();
        const std::uint64_t block = cylinder_count(f.alphabet(), static_cast<std::size_t>(nu.order() - r));
        for (std::uint64_t s = 0; s < S; ++s) {
            const double p = nu.stationary(s);
            if (p == 0.0) continue;
            const double* v = f.value_at_rank(s / block);
            for (int j = 0; j < d; ++j) avg[j] += p * v[j];
        }
    } else {
        for_each_cylinder(f.alphabet(), static_cast<std::size_t>(r), [&](const Word& w) {
            const double p = nu.cylinder_mass(w);
            if (p == 0.0) return;
            const double* v = f.value_at_rank(w.rank(f.alphabet()));
            for (int j = 0; j < d; ++j) avg[j] += p * v[j];
        });
    }
    return avg;
}

struct BlockDeviations {
    double dev_f = 0.0, dev_h = 0.0, dev_g = 0.0;
    bool constant = false;
    bool zero_mass = false;
};

BlockDeviations block_deviations(const MoranStage& st, const BranchSystem& map,
                                 const PotentialTable& f, const Word& w) {
    BlockDeviations out;
    out.constant = w.is_constant();
    if (w.size() >= static_cast<std::size_t>(f.depth()))
        out.dev_f = euclid(f.birkhoff_average(w), st.target);
    const double lm = st.nu.log_cylinder_mass(w);
    if (!std::isfinite(lm)) {
        out.zero_mass = true;
    } else {
        out.dev_h = std::abs(-lm / static_cast<double>(w.size()) - st.h);
    }
    out.dev_g = std::abs(map.lyapunov_proxy(w) - st.lambda);
    return out;
}

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t idx = std::min(v.size() - 1, static_cast<std::size_t>(p * v.size()));
    return v[idx];
}

}  // namespace

bool stage_admissible(const MoranStage& st, MoranMode mode, const BranchSystem& map,
                      const PotentialTable& f, const Word& w) {
    if (mode == MoranMode::block && w.is_constant()) return false;
    const BlockDeviations dev = block_deviations(st, map, f, w);
    if (dev.zero_mass) return false;
    return dev.dev_f <= st.tau_f && dev.dev_h <= st.tau_h && dev.dev_g <= st.tau_g;
}

MoranSchedule build_block_schedule(const BranchSystem& map, const PotentialTable& f,
                                   const MarkovMeasure& mu, const Vec& alpha, double delta,
                                   int stages, const MoranOptions& opts) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("build_block_schedule: delta must be in (0, 1/2)");
    if (stages < 1) throw std::invalid_argument("build_block_schedule: need >= 1 stage");
    const MeasureStats base = measure_stats(mu, map, f, opts.quad_depth);
    if (base.lyapunov <= 0.0)
        throw std::invalid_argument("build_block_schedule: base measure has nonpositive Lyapunov exponent");
    if (euclid(base.potential_average, alpha) > 1e-6 + f.variation_bound(64))
        throw std::invalid_argument("build_block_schedule: base measure average does not match alpha");

    const int total = stages + 2;  // repetitions need l_{i+2}
    const std::vector<MarkovMeasure> approx =
        ergodic_approximants(MeasureMixture(mu), total + opts.approximant_extra);

    MoranSchedule sched;
    sched.mode = MoranMode::block;
    sched.alphabet = map.branch_count();
    sched.alpha = alpha;
    sched.delta = delta;
    sched.base_stats = base;

    std::mt19937_64 rng(opts.seed);
    std::size_t prev_len = 1;
    std::size_t next_approx = 0;
    std::vector<MoranStage> built;
    for (int i = 1; i <= total; ++i) {
        MoranStage st;
        st.index = i;
        st.epsilon = ladder_epsilon(f, i, opts.ladder_c);
        // Stage measure: the next approximant whose average sits in the band.
        std::size_t pick = next_approx;
        bool found = false;
        MeasureStats stats;
        while (pick < approx.size()) {
            stats = measure_stats(approx[pick], map, f, opts.quad_depth);
            if (euclid(stats.potential_average, alpha) < st.epsilon) { found = true; break; }
            ++pick;
        }
        if (!found)
            throw std::runtime_error("build_block_schedule: no approximant meets the stage band");
        next_approx = pick;  // re-usable; orders only need to be non-decreasing
        st.nu = approx[pick];
        st.h = stats.entropy;
        st.lambda = stats.lyapunov;
        st.target = alpha;
        st.tau_f = st.tau_h = st.tau_g = st.epsilon;

        // Empirical Egorov: smallest tested length whose inadmissible nu-mass
        // stays below delta/2 (constants counted separately).
        bool picked = false;
        for (std::size_t n = std::max<std::size_t>(static_cast<std::size_t>(i), prev_len);
             n <= opts.max_block_len; n = std::max(n + 1, n + n / 4)) {
            st.block_len = n;
            auto admissible_fraction = [&](int samples) {
                int bad = 0, consts = 0;
                for (int t = 0; t < samples; ++t) {
                    const Word w = st.nu.sample_path(n, rng());
                    if (w.is_constant()) { ++consts; continue; }
                    const BlockDeviations dev = block_deviations(st, map, f, w);
                    if (dev.zero_mass || dev.dev_f > st.tau_f || dev.dev_h > st.tau_h ||
                        dev.dev_g > st.tau_g)
                        ++bad;
                }
                return std::pair{static_cast<double>(bad) / samples,
                                 static_cast<double>(consts) / samples};
            };
            auto [bad_c, const_c] = admissible_fraction(std::max(200, opts.egorov_samples / 10));
            if (bad_c >= delta / 2 || const_c >= delta / 2) continue;
            auto [bad_full, const_full] = admissible_fraction(opts.egorov_samples);
            if (bad_full < delta / 2 && const_full < delta / 2) {
                st.omega_mass = 1.0 - bad_full - const_full;
                picked = true;
                break;
            }
        }
        if (!picked)
            throw std::runtime_error("build_block_schedule: stage budget exceeded before the mass criterion was met");
        prev_len = st.block_len;
        built.push_back(std::move(st));
    }
    for (int i = 0; i < stages; ++i) {
        built[i].repetitions = built[i + 2].block_len;
        sched.stages.push_back(std::move(built[i]));
    }
    return sched;
}

MoranSchedule build_parabolic_schedule(const BranchSystem& map, const PotentialTable& f,
                                       const MarkovMeasure& mu, const Vec& alpha, double delta,
                                       int stages, const MoranOptions& opts) {
    if (!map.has_parabolic())
        throw std::invalid_argument("build_parabolic_schedule: no parabolic branches");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("build_parabolic_schedule: delta must be in (0, 1/2)");
    const Polytope A = parabolic_hull(map, f);
    if (A.empty() || !A.contains(alpha, 1e-9))
        throw std::invalid_argument("build_parabolic_schedule: alpha outside the parabolic hull");
    if (!mu.ergodic()) throw std::invalid_argument("build_parabolic_schedule: base measure not ergodic");
    const MeasureStats base = measure_stats(mu, map, f, opts.quad_depth);
    if (base.lyapunov <= 0.0)
        throw std::invalid_argument("build_parabolic_schedule: base measure has nonpositive Lyapunov exponent");

    MoranSchedule sched;
    sched.mode = MoranMode::parabolic;
    sched.alphabet = map.branch_count();
    sched.alpha = alpha;
    sched.delta = delta;
    sched.base_stats = base;

    // Match decomposition vertices back to parabolic symbols.
    const ConvexDecomposition dec = strict_convex_decomposition(A, alpha);
    const auto parab = map.parabolic_points();
    for (std::size_t t = 0; t < dec.vertex_indices.size(); ++t) {
        const Vec& v = A.vertices()[dec.vertex_indices[t]];
        int best_sym = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [sym, x] : parab) {
            (void)x;
            const Vec pt = f.value(Word::constant(sym, static_cast<std::size_t>(f.depth())));
            const double d2 = euclid(pt, v);
            if (d2 < best_d) { best_d = d2; best_sym = sym; }
        }
        if (best_sym < 0 || best_d > 1e-7)
            throw std::runtime_error("build_parabolic_schedule: vertex does not match a parabolic point");
        sched.parabolic_symbols.push_back(best_sym);
        sched.r_weights.push_back(dec.weights[t]);
    }
    const double min_r = *std::min_element(sched.r_weights.begin(), sched.r_weights.end());

    // Advisory standing-hypothesis check: h/lambda should be close to the
    // limit-set dimension for the flat part to be sharp.
    const PotentialTable f0 = PotentialTable::constant(map.branch_count(), {0.0});
    const double bowen = PressureContext(map, f0, std::max(1, mu.order())).hausdorff_estimate();
    sched.hypothesis_warning = base.entropy / base.lyapunov < bowen - 0.1;

    std::mt19937_64 rng(opts.seed);
    for (int i = 1; i <= stages; ++i) {
        MoranStage st;
        st.index = i;
        st.epsilon = ladder_epsilon(f, i, opts.ladder_c);
        st.nu = mu;
        st.block_len = static_cast<std::size_t>(i);
        st.repetitions = 1;
        st.h = base.entropy;
        st.lambda = base.lyapunov;
        st.target = base.potential_average;
        st.k_i = static_cast<int>(std::ceil(std::max(1.0 / min_r, 1.0 / std::sqrt(st.epsilon))));

        // Filler: parabolic runs of lengths [r_j * i * k_i], remainder on the
        // last parabolic symbol.
        const std::size_t filler_total = st.block_len * static_cast<std::size_t>(st.k_i);
        std::size_t used = 0;
        std::vector<int> syms;
        for (std::size_t j = 0; j < sched.r_weights.size(); ++j) {
            const std::size_t seg =
                static_cast<std::size_t>(std::floor(sched.r_weights[j] * static_cast<double>(filler_total)));
            st.segment_lengths.push_back(seg);
            used += seg;
            for (std::size_t t = 0; t < seg; ++t) syms.push_back(sched.parabolic_symbols[j]);
        }
        st.remainder = filler_total - used;
        for (std::size_t t = 0; t < st.remainder; ++t) syms.push_back(sched.parabolic_symbols.back());
        st.filler = Word(std::move(syms));

        // Quantile thresholding: widen the eps band until 1 - delta/2 of
        // sampled mu-blocks are admissible.
        const int samples = opts.egorov_samples;
        std::vector<double> df, dh, dg;
        df.reserve(samples);
        for (int t = 0; t < samples; ++t) {
            const Word w = mu.sample_path(st.block_len, rng());
            const BlockDeviations dev = block_deviations(st, map, f, w);
            df.push_back(dev.dev_f);
            dh.push_back(dev.zero_mass ? std::numeric_limits<double>::infinity() : dev.dev_h);
            dg.push_back(dev.dev_g);
        }
        const double p = 1.0 - delta / 6.0;
        st.tau_f = std::max(st.epsilon, quantile(df, p));
        st.tau_h = std::max(st.epsilon, quantile(dh, p));
        st.tau_g = std::max(st.epsilon, quantile(dg, p));
        int good = 0;
        for (int t = 0; t < samples; ++t)
            if (df[t] <= st.tau_f && dh[t] <= st.tau_h && dg[t] <= st.tau_g) ++good;
        st.omega_mass = static_cast<double>(good) / samples;
        sched.stages.push_back(std::move(st));
    }
    return sched;
}

bool ScheduleValidation::ok() const {
    return epsilons_decreasing && lengths_monotone && repetitions_match && omega_masses &&
           filler_lengths_match && k_min_weight && k_growth && k_eps_vanishing && k_ratio_tail;
}

ScheduleValidation validate_schedule(const MoranSchedule& sched) {
    ScheduleValidation v;
    const auto& st = sched.stages;
    const std::size_t S = st.size();
    if (S == 0) return v;

    v.epsilons_decreasing = true;
    v.lengths_monotone = true;
    for (std::size_t i = 1; i < S; ++i) {
        if (!(st[i].epsilon < st[i - 1].epsilon)) v.epsilons_decreasing = false;
        if (st[i].block_len < st[i - 1].block_len) v.lengths_monotone = false;
    }
    v.omega_masses = true;
    for (const MoranStage& s : st)
        if (s.omega_mass < 1.0 - sched.delta) v.omega_masses = false;

    if (sched.mode == MoranMode::block) {
        v.repetitions_match = true;
        for (std::size_t i = 0; i + 2 < S; ++i)
            if (st[i].repetitions != st[i + 2].block_len) v.repetitions_match = false;
        // Parabolic-only checks are vacuous here.
        v.filler_lengths_match = v.k_min_weight = v.k_growth = v.k_eps_vanishing =
            v.k_ratio_tail = true;
        return v;
    }

    v.repetitions_match = true;
    for (const MoranStage& s : st)
        if (s.repetitions != 1) v.repetitions_match = false;

    const double min_r = *std::min_element(sched.r_weights.begin(), sched.r_weights.end());
    v.filler_lengths_match = true;
    v.k_min_weight = true;
    for (const MoranStage& s : st) {
        std::size_t total = s.remainder;
        for (std::size_t seg : s.segment_lengths) total += seg;
        if (total != s.block_len * static_cast<std::size_t>(s.k_i)) v.filler_lengths_match = false;
        if (s.filler.size() != total) v.filler_lengths_match = false;
        if (s.k_i * min_r < 1.0 - 1e-12) v.k_min_weight = false;
    }

    v.k_growth = true;
    for (std::size_t i = 1; i < S; ++i)
        if (st[i].k_i < st[i - 1].k_i) v.k_growth = false;
    if (S >= 8 && st[S - 1].k_i <= st[0].k_i) v.k_growth = false;

    const double head = st[0].k_i * st[0].epsilon;
    v.k_eps_vanishing = true;
    for (std::size_t i = 1; i < S; ++i)
        if (st[i].k_i * st[i].epsilon > head + 1e-12) v.k_eps_vanishing = false;
    if (S >= 8 && st[S - 1].k_i * st[S - 1].epsilon > 0.5 * head + 1e-12)
        v.k_eps_vanishing = false;

    v.k_ratio_tail = S < 2 || st[S - 2].k_i == st[S - 1].k_i;
    return v;
}

MoranSample sample_moran_annotated(const MoranSchedule& sched, const BranchSystem& map,
                                   const PotentialTable& f, std::size_t n_prefix,
                                   std::uint64_t seed) {
    if (sched.stages.empty()) throw std::invalid_argument("sample_moran: empty schedule");
    MoranSample out;
    if (n_prefix == 0) return out;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<int> symbols;
    symbols.reserve(n_prefix + 64);

    auto append_block = [&](const Word& w, int stage_idx, double log_mass) {
        for (std::size_t j = 0; j < w.size(); ++j) symbols.push_back(w[j]);
        out.block_ends.push_back(symbols.size());
        out.block_stage.push_back(stage_idx);
        out.log_block_mass.push_back(log_mass);
    };

    std::size_t si = 0;
    const int cap = 500;
    while (symbols.size() < n_prefix) {
        const MoranStage& st = sched.stages[std::min(si, sched.stages.size() - 1)];
        const std::size_t reps = sched.mode == MoranMode::block ? st.repetitions : 1;
        for (std::size_t rep = 0; rep < reps && symbols.size() < n_prefix; ++rep) {
            Word w;
            bool ok = false;
            for (int t = 0; t < cap; ++t) {
                w = st.nu.sample_path(st.block_len, rng());
                if (stage_admissible(st, sched.mode, map, f, w)) { ok = true; break; }
            }
            if (!ok && sched.mode == MoranMode::block && w.is_constant()) {
                // Best effort: never emit a boundary-coding block.
                std::vector<int> s = w.symbols();
                s.back() = s.back() == 1 ? 2 : s.back() - 1;
                w = Word(std::move(s));
            }
            const double lm = st.nu.log_cylinder_mass(w) - std::log(st.omega_mass);
            append_block(w, st.index, lm);
        }
        if (sched.mode == MoranMode::parabolic && symbols.size() < n_prefix)
            append_block(st.filler, st.index, 0.0);
        ++si;
    }
    out.word = Word(std::move(symbols));
    return out;
}

Word sample_moran(const MoranSchedule& sched, const BranchSystem& map, const PotentialTable& f,
                  std::size_t n_prefix, std::uint64_t seed) {
    return sample_moran_annotated(sched, map, f, n_prefix, seed).word;
}

double ConvergenceReport::fraction_final_below(double eps) const {
    if (sup_deviation.empty()) return 0.0;
    int good = 0;
    for (const auto& row : sup_deviation)
        if (!row.empty() && row.back() < eps) ++good;
    return static_cast<double>(good) / static_cast<double>(sup_deviation.size());
}

ConvergenceReport verify_level(const MoranSchedule& sched, const BranchSystem& map,
                               const PotentialTable& f, const std::vector<std::uint64_t>& seeds,
                               std::size_t n_max) {
    if (seeds.empty()) throw std::invalid_argument("verify_level: need at least one seed");
    ConvergenceReport rep;
    rep.alpha = sched.alpha;
    rep.checkpoints = {n_max / 8, n_max / 4, n_max / 2, n_max};
    const int d = f.dim();
    for (std::uint64_t seed : seeds) {
        const MoranSample samp = sample_moran_annotated(sched, map, f, n_max, seed);
        const Word& w = samp.word;
        const std::size_t n = std::min(n_max, w.size());
        std::vector<double> dev(n + 1, 0.0);
        Vec acc(d, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double* v = f.value_at_rank(f.window_rank(w, j));
            for (int t = 0; t < d; ++t) acc[t] += v[t];
            double dist = 0.0;
            for (int t = 0; t < d; ++t) {
                const double diff = acc[t] / static_cast<double>(j + 1) - sched.alpha[t];
                dist += diff * diff;
            }
            dev[j + 1] = std::sqrt(dist);
        }
        // Suffix maxima give sup_{n' >= c} |A_{n'} f - alpha| per checkpoint.
        std::vector<double> suffix(n + 2, 0.0);
        for (std::size_t j = n; j >= 1; --j) suffix[j] = std::max(dev[j], suffix[j + 1]);
        std::vector<double> row;
        for (std::size_t c : rep.checkpoints) row.push_back(suffix[std::max<std::size_t>(1, std::min(c, n))]);
        bool mono = true;
        for (std::size_t t = 1; t < row.size(); ++t)
            if (row[t] > row[t - 1] + 1e-12) mono = false;
        rep.sup_deviation.push_back(std::move(row));
        rep.monotone.push_back(mono ? 1 : 0);
    }
    return rep;
}

DimensionCertificate local_dimension_certificate(const MoranSchedule& sched,
                                                 const BranchSystem& map,
                                                 const PotentialTable& f,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 std::size_t n_max) {
    if (seeds.empty())
        throw std::invalid_argument("local_dimension_certificate: need at least one seed");
    DimensionCertificate cert;
    cert.target = sched.base_stats.lyapunov > 0.0
                      ? sched.base_stats.entropy / sched.base_stats.lyapunov
                      : 0.0;
    GeomCache geom(map);
    for (std::uint64_t seed : seeds) {
        const MoranSample samp = sample_moran_annotated(sched, map, f, n_max, seed);
        const Word& w = samp.word;
        const std::size_t n = std::min(n_max, w.size());

        // Mass of the n-cylinder under the concatenated measure: product of
        // full block weights plus the conditional mass of the partial block.
        double log_mass = 0.0;
        std::size_t start = 0;
        for (std::size_t b = 0; b < samp.block_ends.size() && start < n; ++b) {
            const std::size_t end = samp.block_ends[b];
            if (end <= n) {
                log_mass += samp.log_block_mass[b];
            } else if (samp.log_block_mass[b] != 0.0) {
                const MoranStage& st = sched.stages[std::min<std::size_t>(
                    static_cast<std::size_t>(samp.block_stage[b]) - 1, sched.stages.size() - 1)];
                Word part(std::vector<int>(w.symbols().begin() + start, w.symbols().begin() + n));
                log_mass += st.nu.log_cylinder_mass(part) - std::log(st.omega_mass);
            }
            start = end;
        }

        double log_diam;
        if (map.is_linear()) {
            log_diam = map.log_cylinder_diameter(w.prefix(n));
        } else {
            // Window sums of g; the cache makes repeated windows cheap.
            constexpr int kWindow = 12;
            double acc = 0.0;
            const Word pre = w.prefix(n);
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t len = std::min<std::size_t>(kWindow, n - j);
                acc += geom.g(Word(std::vector<int>(pre.symbols().begin() + j,
                                                    pre.symbols().begin() + j + len)));
            }
            log_diam = -acc;
        }
        cert.per_seed.push_back(log_diam < 0.0 ? log_mass / log_diam : 0.0);
    }
    std::vector<double> sorted = cert.per_seed;
    std::sort(sorted.begin(), sorted.end());
    cert.estimate = sorted[sorted.size() / 2];
    return cert;
}

}  // namespace mfa
