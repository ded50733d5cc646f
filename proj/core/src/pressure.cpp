#include "mfa/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEigTol = 1e-13;
constexpr int kEigIterCap = 200000;
}  // namespace

PressureContext::PressureContext(const BranchSystem& map, const PotentialTable& f, int k,
                                 std::vector<char> state_mask)
    : m_(map.branch_count()), k_(k), d_(f.dim()) {
    if (k_ < 1) throw std::invalid_argument("PressureContext: k must be >= 1");
    if (f.alphabet() != m_) throw std::invalid_argument("PressureContext: alphabet mismatch");
    if (f.depth() > k_ + 1)
        throw std::invalid_argument("PressureContext: potential depth exceeds k+1");
    S_ = cylinder_count(m_, static_cast<std::size_t>(k_));
    if (!state_mask.empty() && state_mask.size() != S_)
        throw std::invalid_argument("PressureContext: bad state mask size");
    mask_ = state_mask.empty() ? std::vector<char>(S_, 1) : std::move(state_mask);

    edge_ok_.assign(S_ * m_, 0);
    f_edge_.assign(S_ * m_ * d_, 0.0);
    g_edge_.assign(S_ * m_, 0.0);
    GeomCache geom(map);
    for (std::uint64_t s = 0; s < S_; ++s) {
        if (!mask_[s]) continue;
        Word w = Word::from_rank(s, static_cast<std::size_t>(k_), m_);
        for (int a = 1; a <= m_; ++a) {
            const std::uint64_t t = next_state(s, a);
            if (!mask_[t]) continue;
            const std::size_t e = s * m_ + (a - 1);
            edge_ok_[e] = 1;
            Word wa = w;
            wa.push_back(a);
            const double* fv = f.value_at_rank(wa.prefix(static_cast<std::size_t>(f.depth())).rank(m_));
            for (int t2 = 0; t2 < d_; ++t2) f_edge_[e * d_ + t2] = fv[t2];
            g_edge_[e] = geom.g(wa);
        }
    }

    // Cycle detection on the allowed subgraph (iterative DFS, colors).
    std::vector<char> color(S_, 0);  // 0 white, 1 on stack, 2 done
    std::vector<std::pair<std::uint64_t, int>> stack;
    for (std::uint64_t root = 0; root < S_ && !feasible_; ++root) {
        if (!mask_[root] || color[root]) continue;
        stack.push_back({root, 0});
        color[root] = 1;
        while (!stack.empty() && !feasible_) {
            auto& [s, a] = stack.back();
            if (a >= m_) {
                color[s] = 2;
                stack.pop_back();
                continue;
            }
            const int sym = ++a;
            if (!edge_ok_[s * m_ + (sym - 1)]) continue;
            const std::uint64_t t = next_state(s, sym);
            if (color[t] == 1) {
                feasible_ = true;
            } else if (color[t] == 0) {
                color[t] = 1;
                stack.push_back({t, 0});
            }
        }
    }
}

PressureContext::Eig PressureContext::perron(const Vec& q, double s) const {
    if (static_cast<int>(q.size()) != d_)
        throw std::invalid_argument("PressureContext: q has wrong dimension");
    Eig out;
    if (!feasible_) {
        out.log_lambda = -kInf;
        return out;
    }

    // Scale exponents so the largest edge weight is exactly 1.
    double cmax = -kInf;
    std::vector<double> expo(S_ * m_, -kInf);
    for (std::size_t e = 0; e < edge_ok_.size(); ++e) {
        if (!edge_ok_[e]) continue;
        double v = -s * g_edge_[e];
        for (int t = 0; t < d_; ++t) v += q[t] * f_edge_[e * d_ + t];
        expo[e] = v;
        cmax = std::max(cmax, v);
    }
    out.scale = cmax;
    std::vector<double> w(S_ * m_, 0.0);
    double max_row = 0.0;
    for (std::uint64_t st = 0; st < S_; ++st) {
        double row = 0.0;
        for (int a = 1; a <= m_; ++a) {
            const std::size_t e = st * m_ + (a - 1);
            if (edge_ok_[e]) row += (w[e] = std::exp(expo[e] - cmax));
        }
        max_row = std::max(max_row, row);
    }
    // Uniform diagonal shift breaks periodicity without moving eigenvectors.
    const double theta = 0.01 * max_row;

    auto iterate = [&](bool transpose) {
        std::vector<double> v(S_, 0.0);
        double active = 0.0;
        for (std::uint64_t st = 0; st < S_; ++st)
            if (mask_[st]) { v[st] = 1.0; active += 1.0; }
        for (double& x : v) x /= active;
        std::vector<double> nv(S_);
        double lambda = 0.0;
        for (int it = 0; it < kEigIterCap; ++it) {
            std::fill(nv.begin(), nv.end(), 0.0);
            for (std::uint64_t st = 0; st < S_; ++st) {
                if (!mask_[st]) continue;
                for (int a = 1; a <= m_; ++a) {
                    const std::size_t e = st * m_ + (a - 1);
                    if (!edge_ok_[e]) continue;
                    const std::uint64_t t = next_state(st, a);
                    if (transpose)
                        nv[t] += w[e] * v[st];
                    else
                        nv[st] += w[e] * v[t];
                }
            }
            double l1 = 0.0;
            for (std::uint64_t st = 0; st < S_; ++st) {
                nv[st] += theta * v[st];
                l1 += nv[st];
            }
            double diff = 0.0;
            for (std::uint64_t st = 0; st < S_; ++st) {
                nv[st] /= l1;
                diff = std::max(diff, std::abs(nv[st] - v[st]));
            }
            const bool done = std::abs(l1 - lambda) <= kEigTol * std::max(1.0, l1) && diff <= kEigTol;
            lambda = l1;
            v.swap(nv);
            if (done && it > 2) break;
        }
        return std::pair{lambda, v};
    };

    auto [lr, vr] = iterate(false);
    auto [ll, vl] = iterate(true);
    out.lambda_scaled = std::max(0.5 * (lr + ll) - theta, 0.0);
    out.right = std::move(vr);
    out.left = std::move(vl);
    out.log_lambda = out.lambda_scaled > 0.0 ? std::log(out.lambda_scaled) + cmax : -kInf;
    return out;
}

double PressureContext::pressure(const Vec& q, double s) const { return perron(q, s).log_lambda; }

PressureEval PressureContext::evaluate(const Vec& q, double s) const {
    const Eig eig = perron(q, s);
    PressureEval out;
    out.value = eig.log_lambda;
    out.grad_q.assign(d_, 0.0);
    if (!std::isfinite(out.value)) return out;

    // Edge occupation x_e = u_s W_e v_t / (lambda <u, v>).
    std::vector<double> x(S_ * m_, 0.0);
    double total = 0.0;
    for (std::uint64_t st = 0; st < S_; ++st) {
        if (!mask_[st] || eig.left[st] <= 0.0) continue;
        for (int a = 1; a <= m_; ++a) {
            const std::size_t e = st * m_ + (a - 1);
            if (!edge_ok_[e]) continue;
            const std::uint64_t t = next_state(st, a);
            double wgt = -s * g_edge_[e];
            for (int j = 0; j < d_; ++j) wgt += q[j] * f_edge_[e * d_ + j];
            const double m = eig.left[st] * std::exp(wgt - eig.scale) * eig.right[t];
            x[e] = m;
            total += m;
        }
    }
    if (total <= 0.0) return out;
    for (std::size_t e = 0; e < x.size(); ++e) {
        if (x[e] == 0.0) continue;
        const double p = x[e] / total;
        for (int j = 0; j < d_; ++j) out.grad_q[j] += p * f_edge_[e * d_ + j];
        out.lyapunov += p * g_edge_[e];
    }
    return out;
}

MarkovMeasure PressureContext::gibbs(const Vec& q, double s) const {
    const Eig eig = perron(q, s);
    if (!std::isfinite(eig.log_lambda))
        throw std::runtime_error("PressureContext::gibbs: empty subshift");

    std::vector<double> trans(S_ * m_, 0.0);
    std::vector<double> pi(S_, 0.0);
    double pi_total = 0.0;
    for (std::uint64_t st = 0; st < S_; ++st) {
        pi[st] = eig.left[st] * eig.right[st];
        pi_total += pi[st];
    }
    for (std::uint64_t st = 0; st < S_; ++st) {
        pi[st] /= pi_total;
        double row = 0.0;
        for (int a = 1; a <= m_; ++a) {
            const std::size_t e = st * m_ + (a - 1);
            if (!edge_ok_[e]) continue;
            double wgt = -s * g_edge_[e];
            for (int j = 0; j < d_; ++j) wgt += q[j] * f_edge_[e * d_ + j];
            row += (trans[e] = std::exp(wgt - eig.scale) * eig.right[next_state(st, a)]);
        }
        if (row > 0.0) {
            for (int a = 0; a < m_; ++a) trans[st * m_ + a] /= row;
        } else {
            // Dead state (mass zero): any stochastic row will do.
            for (int a = 0; a < m_; ++a) trans[st * m_ + a] = 1.0 / m_;
        }
    }
    return MarkovMeasure(m_, k_, std::move(trans), std::move(pi));
}

double PressureContext::bowen_root(const Vec& q, double tol) const {
    if (!feasible_) throw std::runtime_error("bowen_root: empty subshift");
    double lo = 0.0;
    if (pressure(q, lo) <= 0.0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (pressure(q, hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) throw std::runtime_error("bowen_root: no sign change");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (pressure(q, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double PressureContext::hausdorff_estimate(double tol) const {
    if (!feasible_) return 0.0;
    // The limit set lives in [0,1]; when P(0, 1) vanishes to rounding the
    // dimension is exactly 1 and bisection noise should not show through.
    if (pressure(Vec(d_, 0.0), 1.0) >= -1e-12) return 1.0;
    return std::min(1.0, bowen_root(Vec(d_, 0.0), tol));
}

}  // namespace mfa
