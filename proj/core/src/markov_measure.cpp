#include "mfa/markov_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mfa {

namespace {

constexpr double kRowTol = 1e-12;
constexpr double kStationaryTol = 1e-14;

std::vector<double> stationary_of(int m, std::uint64_t S, const std::vector<double>& trans) {
    std::vector<double> pi(S, 1.0 / static_cast<double>(S));
    std::vector<double> next(S, 0.0);
    const std::uint64_t mask = S / static_cast<std::uint64_t>(m);
    for (int it = 0; it < 200000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::uint64_t s = 0; s < S; ++s) {
            const double p = pi[s];
            if (p == 0.0) continue;
            const std::uint64_t base = (s % mask) * static_cast<std::uint64_t>(m);
            for (int a = 0; a < m; ++a) next[base + a] += p * trans[s * m + a];
        }
        // Lazy mixing keeps periodic supports convergent.
        double diff = 0.0;
        for (std::uint64_t s = 0; s < S; ++s) {
            const double v = 0.5 * pi[s] + 0.5 * next[s];
            diff += std::abs(v - pi[s]);
            pi[s] = v;
        }
        if (diff < kStationaryTol) break;
    }
    double total = 0.0;
    for (double v : pi) total += v;
    for (double& v : pi) v /= total;
    return pi;
}

}  // namespace

MarkovMeasure::MarkovMeasure(int m, int k, std::vector<double> trans,
                             std::optional<std::vector<double>> stationary)
    : m_(m), k_(k), trans_(std::move(trans)) {
    if (m_ < 2 || k_ < 1) throw std::invalid_argument("MarkovMeasure: need m >= 2, k >= 1");
    const std::uint64_t S = cylinder_count(m_, static_cast<std::size_t>(k_));
    if (trans_.size() != S * static_cast<std::uint64_t>(m_))
        throw std::invalid_argument("MarkovMeasure: transition table has wrong size");
    for (std::uint64_t s = 0; s < S; ++s) {
        double row = 0.0;
        for (int a = 0; a < m_; ++a) {
            const double p = trans_[s * m_ + a];
            if (p < 0.0) throw std::invalid_argument("MarkovMeasure: negative transition weight");
            row += p;
        }
        if (std::abs(row - 1.0) > kRowTol)
            throw std::invalid_argument("MarkovMeasure: transition row does not sum to 1");
    }
    if (stationary) {
        pi_ = std::move(*stationary);
        if (pi_.size() != S) throw std::invalid_argument("MarkovMeasure: stationary vector has wrong size");
    } else {
        pi_ = stationary_of(m_, S, trans_);
    }
}

MarkovMeasure MarkovMeasure::bernoulli(std::vector<double> p) {
    const int m = static_cast<int>(p.size());
    std::vector<double> trans;
    trans.reserve(static_cast<std::size_t>(m) * m);
    for (int s = 0; s < m; ++s) trans.insert(trans.end(), p.begin(), p.end());
    return MarkovMeasure(m, 1, std::move(trans), p);
}

std::uint64_t MarkovMeasure::next_state(std::uint64_t state, int symbol) const {
    const std::uint64_t mask = num_states() / static_cast<std::uint64_t>(m_);
    return (state % mask) * static_cast<std::uint64_t>(m_) + static_cast<std::uint64_t>(symbol - 1);
}

double MarkovMeasure::cylinder_mass(const Word& w) const {
    const std::size_t n = w.size();
    if (n == 0) return 1.0;
    if (n < static_cast<std::size_t>(k_)) {
        // Marginal: sum stationary mass over states with prefix w.
        const std::uint64_t block = cylinder_count(m_, static_cast<std::size_t>(k_) - n);
        const std::uint64_t base = w.rank(m_) * block;
        double s = 0.0;
        for (std::uint64_t i = 0; i < block; ++i) s += pi_[base + i];
        return s;
    }
    std::uint64_t state = w.prefix(static_cast<std::size_t>(k_)).rank(m_);
    double mass = pi_[state];
    for (std::size_t j = static_cast<std::size_t>(k_); j < n && mass > 0.0; ++j) {
        mass *= transition(state, w[j]);
        state = next_state(state, w[j]);
    }
    return mass;
}

double MarkovMeasure::log_cylinder_mass(const Word& w) const {
    const double mass = cylinder_mass(w);
    if (mass > 1e-290) return std::log(mass);
    // Recompute in log space for long words.
    const std::size_t n = w.size();
    if (n <= static_cast<std::size_t>(k_))
        return mass > 0.0 ? std::log(mass) : -std::numeric_limits<double>::infinity();
    std::uint64_t state = w.prefix(static_cast<std::size_t>(k_)).rank(m_);
    if (pi_[state] <= 0.0) return -std::numeric_limits<double>::infinity();
    double ls = std::log(pi_[state]);
    for (std::size_t j = static_cast<std::size_t>(k_); j < n; ++j) {
        const double p = transition(state, w[j]);
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        ls += std::log(p);
        state = next_state(state, w[j]);
    }
    return ls;
}

double MarkovMeasure::entropy_rate() const {
    double h = 0.0;
    for (std::uint64_t s = 0; s < num_states(); ++s) {
        if (pi_[s] == 0.0) continue;
        double row = 0.0;
        for (int a = 0; a < m_; ++a) {
            const double p = trans_[s * m_ + a];
            if (p > 0.0) row -= p * std::log(p);
        }
        h += pi_[s] * row;
    }
    return h;
}

bool MarkovMeasure::ergodic() const {
    const std::uint64_t S = num_states();
    std::vector<std::uint64_t> support;
    std::vector<int> id(S, -1);
    for (std::uint64_t s = 0; s < S; ++s)
        if (pi_[s] > 1e-15) {
            id[s] = static_cast<int>(support.size());
            support.push_back(s);
        }
    if (support.empty()) return false;
    auto reach = [&](bool reverse) {
        std::vector<char> seen(support.size(), 0);
        std::vector<std::uint64_t> stack{support[0]};
        seen[0] = 1;
        while (!stack.empty()) {
            const std::uint64_t u = stack.back();
            stack.pop_back();
            for (std::uint64_t v : support) {
                if (seen[id[v]]) continue;
                const bool edge = reverse
                    ? [&] { for (int a = 1; a <= m_; ++a)
                                if (transition(v, a) > 0.0 && next_state(v, a) == u) return true;
                            return false; }()
                    : [&] { for (int a = 1; a <= m_; ++a)
                                if (transition(u, a) > 0.0 && next_state(u, a) == v) return true;
                            return false; }();
                if (edge) { seen[id[v]] = 1; stack.push_back(v); }
            }
        }
        for (char c : seen)
            if (!c) return false;
        return true;
    };
    return reach(false) && reach(true);
}

Word MarkovMeasure::sample_path(std::size_t n, std::uint64_t seed) const {
    if (!ergodic()) throw std::runtime_error("sample_path: measure support is not strongly connected");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // Initial state from the stationary distribution.
    double u = unif(rng);
    std::uint64_t state = 0;
    for (std::uint64_t s = 0; s < num_states(); ++s) {
        if (u < pi_[s] || s + 1 == num_states()) { state = s; break; }
        u -= pi_[s];
    }
    const Word sw = Word::from_rank(state, static_cast<std::size_t>(k_), m_);
    Word out;
    for (std::size_t i = 0; i < std::min(n, static_cast<std::size_t>(k_)); ++i) out.push_back(sw[i]);
    while (out.size() < n) {
        double v = unif(rng);
        int sym = m_;
        for (int a = 1; a <= m_; ++a) {
            const double p = transition(state, a);
            if (v < p) { sym = a; break; }
            v -= p;
        }
        out.push_back(sym);
        state = next_state(state, sym);
    }
    return out;
}

MeasureStats measure_stats(const MarkovMeasure& mu, const BranchSystem& map,
                           const PotentialTable& f, int quad_depth) {
    if (quad_depth < 0) throw std::invalid_argument("measure_stats: quad_depth must be >= 0");
    const int m = mu.alphabet();
    const int r = f.depth();
    const std::size_t n = static_cast<std::size_t>(std::max(mu.order(), r) + quad_depth);
    cylinder_count(m, n);  // budget check

    MeasureStats st;
    st.quad_depth = quad_depth;
    st.entropy = mu.entropy_rate();
    st.potential_average.assign(f.dim(), 0.0);
    double lyap = 0.0;
    double g_osc = 0.0;
    const bool linear = map.is_linear();

    // DFS over positive-mass n-words, extending one symbol at a time.
    struct Frame { Word w; double mass; };
    std::vector<Frame> stack;
    const std::size_t k = static_cast<std::size_t>(mu.order());
    for_each_cylinder(m, std::min(n, k), [&](const Word& w) {
        const double mass = mu.cylinder_mass(w);
        if (mass > 0.0) stack.push_back({w, mass});
    });
    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        if (fr.w.size() < n) {
            std::uint64_t state = fr.w.suffix(fr.w.size() - k).rank(m);
            for (int a = 1; a <= m; ++a) {
                const double p = mu.transition(state, a);
                if (p <= 0.0) continue;
                Word ext = fr.w;
                ext.push_back(a);
                stack.push_back({std::move(ext), fr.mass * p});
            }
            continue;
        }
        const double gw = map.g_value(fr.w);
        lyap += fr.mass * gw;
        const double* fv = f.value_at_rank(fr.w.prefix(static_cast<std::size_t>(r)).rank(m));
        for (int t = 0; t < f.dim(); ++t) st.potential_average[t] += fr.mass * fv[t];
        if (!linear) {
            const CylinderInterval c = map.cylinder(fr.w);
            const double lo = std::log(map.derivative(fr.w[0], std::clamp(c.left, map.branch(fr.w[0]).a, map.branch(fr.w[0]).b)));
            const double hi = std::log(map.derivative(fr.w[0], std::clamp(c.right, map.branch(fr.w[0]).a, map.branch(fr.w[0]).b)));
            g_osc = std::max(g_osc, std::abs(hi - lo));
        }
    }
    st.lyapunov = lyap;
    st.error_bound = f.discretization_bound() + g_osc +
                     (n >= static_cast<std::size_t>(r) ? 0.0 : 2.0 * f.sup_norm());
    return st;
}

MeasureMixture::MeasureMixture(std::vector<double> weights, std::vector<MarkovMeasure> components)
    : weights_(std::move(weights)), comps_(std::move(components)) {
    if (weights_.size() != comps_.size() || comps_.empty())
        throw std::invalid_argument("MeasureMixture: weights and components must match");
    double total = 0.0;
    for (double w : weights_) {
        if (w < 0.0) throw std::invalid_argument("MeasureMixture: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-10)
        throw std::invalid_argument("MeasureMixture: weights must sum to 1");
    for (const auto& c : comps_)
        if (c.alphabet() != comps_[0].alphabet())
            throw std::invalid_argument("MeasureMixture: alphabet mismatch");
}

MeasureMixture::MeasureMixture(MarkovMeasure single) {
    weights_ = {1.0};
    comps_.push_back(std::move(single));
}

int MeasureMixture::alphabet() const { return comps_[0].alphabet(); }

double MeasureMixture::cylinder_mass(const Word& w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < comps_.size(); ++i) s += weights_[i] * comps_[i].cylinder_mass(w);
    return s;
}

double MeasureMixture::entropy_rate() const {
    double h = 0.0;
    for (std::size_t i = 0; i < comps_.size(); ++i) h += weights_[i] * comps_[i].entropy_rate();
    return h;
}

MeasureStats MeasureMixture::stats(const BranchSystem& map, const PotentialTable& f,
                                   int quad_depth) const {
    MeasureStats st;
    st.quad_depth = quad_depth;
    st.potential_average.assign(f.dim(), 0.0);
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        const MeasureStats ci = measure_stats(comps_[i], map, f, quad_depth);
        st.entropy += weights_[i] * ci.entropy;
        st.lyapunov += weights_[i] * ci.lyapunov;
        for (int t = 0; t < f.dim(); ++t) st.potential_average[t] += weights_[i] * ci.potential_average[t];
        st.error_bound = std::max(st.error_bound, ci.error_bound);
    }
    return st;
}

std::vector<MarkovMeasure> ergodic_approximants(const MeasureMixture& mu, int count,
                                                int first_order, std::uint64_t budget) {
    if (count < 1) throw std::invalid_argument("ergodic_approximants: count must be >= 1");
    const int m = mu.alphabet();
    std::vector<MarkovMeasure> out;
    out.reserve(count);
    int order = std::max(1, first_order);
    for (int t = 0; t < count; ++t) {
        const std::uint64_t S = cylinder_count(m, static_cast<std::size_t>(order), budget);
        // Keep every transition positive so the chain is ergodic; the floor is
        // tiny so the stationary statistics are not visibly perturbed.
        const double floor = 1e-9;
        std::vector<double> trans(S * static_cast<std::uint64_t>(m), 0.0);
        for (std::uint64_t s = 0; s < S; ++s) {
            const Word w = Word::from_rank(s, static_cast<std::size_t>(order), m);
            const double mass = mu.cylinder_mass(w);
            for (int a = 1; a <= m; ++a) {
                double p = mass > 0.0 ? mu.cylinder_mass(w + Word::constant(a, 1)) / mass
                                      : 1.0 / static_cast<double>(m);
                trans[s * m + (a - 1)] = (p + floor) / (1.0 + m * floor);
            }
            // Normalize against accumulated rounding.
            double row = 0.0;
            for (int a = 0; a < m; ++a) row += trans[s * m + a];
            for (int a = 0; a < m; ++a) trans[s * m + a] /= row;
        }
        out.emplace_back(m, order, std::move(trans));
        // Geometric order growth, capped so the state space stays enumerable.
        if (order < 14 && static_cast<std::uint64_t>(std::pow(m, 2.0 * order)) <= budget)
            order *= 2;
        else
            order += 1;
    }
    return out;
}

}  // namespace mfa
