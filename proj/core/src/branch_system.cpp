#include "mfa/branch_system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfa {

namespace {

constexpr int kInverseIterCap = 200;
constexpr double kInverseTol = 1e-15;

// Solve forward(z) = y for an increasing branch on [a,b].  Newton from the
// right endpoint with a bisection safeguard.
double invert_monotone(const std::function<double(double)>& forward,
                       const std::function<double(double)>& deriv,
                       double a, double b, double y, const char* what) {
    double lo = a, hi = b;
    double z = b;
    for (int it = 0; it < kInverseIterCap; ++it) {
        const double fz = forward(z) - y;
        if (std::abs(fz) < kInverseTol) return z;
        if (fz > 0.0) hi = std::min(hi, z); else lo = std::max(lo, z);
        const double dz = deriv(z);
        double znext = (dz > 0.0) ? z - fz / dz : lo;
        if (!(znext > lo && znext < hi)) znext = 0.5 * (lo + hi);
        if (hi - lo < kInverseTol) return 0.5 * (lo + hi);
        z = znext;
    }
    if (hi - lo < 1e-12) return 0.5 * (lo + hi);
    throw std::runtime_error(std::string("inverse branch evaluation failed to converge: ") + what);
}

double poly_eval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

double poly_deriv_eval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * x + c[i] * static_cast<double>(i);
    return v;
}

}  // namespace

BranchSystem BranchSystem::linear_intervals(const std::vector<std::pair<double, double>>& intervals) {
    if (intervals.size() < 2) throw std::invalid_argument("BranchSystem: need m >= 2 branches");
    BranchSystem sys;
    sys.family_ = MapFamily::linear;
    double prev = -1.0;
    for (const auto& [a, b] : intervals) {
        if (!(b > a) || a < 0.0 || b > 1.0 + 1e-15)
            throw std::invalid_argument("BranchSystem: invalid branch interval");
        if (a < prev) throw std::invalid_argument("BranchSystem: intervals must be ordered and disjoint");
        prev = b;
        Branch br;
        br.a = a;
        br.b = b;
        br.affine = true;
        br.slope = 1.0 / (b - a);
        if (br.slope <= 1.0 + 1e-12 && intervals.size() > 1 && b - a >= 1.0)
            throw std::invalid_argument("BranchSystem: affine branch must contract");
        // T(x) = (x-a)/(b-a); fixed point solves x = a/(1-(b-a)).
        br.fixed_point = a / (1.0 - (b - a));
        br.parabolic = false;
        sys.branches_.push_back(std::move(br));
    }
    return sys;
}

BranchSystem BranchSystem::linear_lengths(const std::vector<double>& lengths) {
    if (lengths.size() < 2) throw std::invalid_argument("BranchSystem: need m >= 2 branches");
    double total = 0.0;
    for (double l : lengths) {
        if (!(l > 0.0) || l >= 1.0) throw std::invalid_argument("BranchSystem: lengths must lie in (0,1)");
        total += l;
    }
    if (total > 1.0 + 1e-12) throw std::invalid_argument("BranchSystem: lengths exceed 1");
    const double gap = (1.0 - total) / static_cast<double>(lengths.size() - 1);
    std::vector<std::pair<double, double>> intervals;
    double x = 0.0;
    for (double l : lengths) {
        intervals.emplace_back(x, x + l);
        x += l + gap;
    }
    intervals.back().second = 1.0;  // absorb rounding
    return linear_intervals(intervals);
}

BranchSystem BranchSystem::manneville_pomeau(double gamma) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("manneville_pomeau: gamma must lie in (0, 1]");
    BranchSystem sys;
    sys.family_ = MapFamily::manneville_pomeau;
    sys.gamma_ = gamma;
    const double c = std::pow(2.0, gamma);

    Branch b1;
    b1.a = 0.0;
    b1.b = 0.5;
    b1.forward = [c, gamma](double x) { return x * (1.0 + c * std::pow(x, gamma)); };
    b1.deriv = [c, gamma](double x) { return 1.0 + (1.0 + gamma) * c * std::pow(x, gamma); };
    b1.fixed_point = 0.0;
    b1.parabolic = true;
    sys.branches_.push_back(std::move(b1));

    Branch b2;
    b2.a = 0.5;
    b2.b = 1.0;
    b2.affine = true;
    b2.slope = 2.0;
    b2.fixed_point = 1.0;
    b2.parabolic = false;
    sys.branches_.push_back(std::move(b2));
    return sys;
}

BranchSystem BranchSystem::double_parabolic(double gamma) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("double_parabolic: gamma must lie in (0, 1]");
    BranchSystem sys;
    sys.family_ = MapFamily::double_parabolic;
    sys.gamma_ = gamma;
    const double c = std::pow(2.0, gamma);

    Branch b1;
    b1.a = 0.0;
    b1.b = 0.5;
    b1.forward = [c, gamma](double x) { return x * (1.0 + c * std::pow(x, gamma)); };
    b1.deriv = [c, gamma](double x) { return 1.0 + (1.0 + gamma) * c * std::pow(x, gamma); };
    b1.fixed_point = 0.0;
    b1.parabolic = true;
    sys.branches_.push_back(std::move(b1));

    // Mirror of the first branch at x = 1.
    Branch b2;
    b2.a = 0.5;
    b2.b = 1.0;
    b2.forward = [c, gamma](double x) {
        const double u = 1.0 - x;
        return 1.0 - u * (1.0 + c * std::pow(u, gamma));
    };
    b2.deriv = [c, gamma](double x) {
        const double u = 1.0 - x;
        return 1.0 + (1.0 + gamma) * c * std::pow(u, gamma);
    };
    b2.fixed_point = 1.0;
    b2.parabolic = true;
    sys.branches_.push_back(std::move(b2));
    return sys;
}

BranchSystem BranchSystem::custom(const std::vector<PolyBranch>& branches) {
    if (branches.size() < 2) throw std::invalid_argument("BranchSystem: need m >= 2 branches");
    BranchSystem sys;
    sys.family_ = MapFamily::custom;
    for (const auto& pb : branches) {
        if (!(pb.b > pb.a)) throw std::invalid_argument("BranchSystem: invalid branch interval");
        if (std::abs(poly_eval(pb.coeffs, pb.a)) > 1e-9 ||
            std::abs(poly_eval(pb.coeffs, pb.b) - 1.0) > 1e-9)
            throw std::invalid_argument("BranchSystem: custom branch must map [a,b] onto [0,1]");
        Branch br;
        br.a = pb.a;
        br.b = pb.b;
        auto coeffs = pb.coeffs;
        br.forward = [coeffs](double x) { return poly_eval(coeffs, x); };
        br.deriv = [coeffs](double x) { return poly_deriv_eval(coeffs, x); };
        // Fixed point of T on [a,b]: T(a) = 0 <= a and T(b) = 1 >= b.
        double lo = pb.a, hi = pb.b;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (poly_eval(coeffs, mid) - mid < 0.0) lo = mid; else hi = mid;
        }
        br.fixed_point = 0.5 * (lo + hi);
        br.parabolic = std::abs(poly_deriv_eval(coeffs, br.fixed_point) - 1.0) < 1e-9;
        sys.branches_.push_back(std::move(br));
    }
    return sys;
}

bool BranchSystem::is_linear() const {
    for (const auto& b : branches_)
        if (!b.affine) return false;
    return true;
}

bool BranchSystem::has_parabolic() const {
    for (const auto& b : branches_)
        if (b.parabolic) return true;
    return false;
}

double BranchSystem::inverse_branch(int i, double y) const {
    const Branch& br = branch(i);
    if (y < -1e-12 || y > 1.0 + 1e-12)
        throw std::invalid_argument("inverse_branch: argument outside [0,1]");
    y = std::clamp(y, 0.0, 1.0);
    if (br.affine) return br.a + y * (br.b - br.a);
    return invert_monotone(br.forward, br.deriv, br.a, br.b, y, "parabolic branch");
}

double BranchSystem::derivative(int i, double x) const {
    const Branch& br = branch(i);
    if (br.affine) return br.slope;
    return br.deriv(std::clamp(x, br.a, br.b));
}

CylinderInterval BranchSystem::cylinder(const Word& w, double /*precision*/) const {
    if (w.empty()) return CylinderInterval{w, 0.0, 1.0};
    double lo = 0.0, hi = 1.0;
    for (std::size_t j = w.size(); j-- > 0;) {
        lo = inverse_branch(w[j], lo);
        hi = inverse_branch(w[j], hi);
    }
    if (lo > hi) std::swap(lo, hi);
    return CylinderInterval{w, lo, hi};
}

double BranchSystem::log_cylinder_diameter(const Word& w, double precision) const {
    if (w.empty()) return 0.0;
    if (is_linear()) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const Branch& br = branch(w[j]);
            s += std::log(br.b - br.a);
        }
        return s;
    }
    const CylinderInterval c = cylinder(w, precision);
    const double d = c.diameter();
    if (d > 1e-290) return std::log(d);
    // Diameter underflowed; fall back to the ergodic sum of g.
    return -static_cast<double>(w.size()) * birkhoff_g(w, 16);
}

double BranchSystem::project(const Word& w, double precision) const {
    if (w.empty()) throw std::invalid_argument("project: empty word");
    if (w.is_constant()) return branch(w[0]).fixed_point;
    auto composed = [&](double x) {
        for (std::size_t j = w.size(); j-- > 0;) x = inverse_branch(w[j], x);
        return x;
    };
    // Monotone increasing with composed(0) > 0 and composed(1) < 1 for
    // non-constant words: bisection on the fixed point.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < kInverseIterCap && hi - lo > precision; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (composed(mid) - mid >= 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double BranchSystem::g_value(const Word& w, double precision) const {
    if (w.empty()) throw std::invalid_argument("g_value: empty word");
    const double x = project(w, precision);
    return std::log(derivative(w[0], x));
}

double BranchSystem::lyapunov_proxy(const Word& w) const {
    if (w.empty()) throw std::invalid_argument("lyapunov_proxy: empty word");
    return -log_cylinder_diameter(w) / static_cast<double>(w.size());
}

double BranchSystem::birkhoff_g(const Word& w, int window_cap) const {
    if (w.empty()) throw std::invalid_argument("birkhoff_g: empty word");
    const std::size_t n = w.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Word window = w.rotated(j);
        if (window_cap > 0 && window.size() > static_cast<std::size_t>(window_cap))
            window = window.prefix(static_cast<std::size_t>(window_cap));
        acc += g_value(window);
    }
    return acc / static_cast<double>(n);
}

double BranchSystem::distortion_gap(std::size_t n, const std::vector<Word>& sample) const {
    double worst = 0.0;
    for (const Word& w : sample) {
        if (w.size() != n) throw std::invalid_argument("distortion_gap: word of wrong length");
        worst = std::max(worst, std::abs(lyapunov_proxy(w) - birkhoff_g(w)));
    }
    return worst;
}

PotentialTable BranchSystem::discretize_analytic(const AnalyticSource& src, int depth) const {
    if (depth < 1) throw std::invalid_argument("discretize_analytic: depth must be >= 1");
    const int m = branch_count();
    int d = 1;
    if (src.id == AnalyticSource::Id::affine) {
        d = static_cast<int>(src.a.size());
        if (d < 1 || src.b.size() != src.a.size())
            throw std::invalid_argument("discretize_analytic: affine source needs matching a, b");
    }
    const std::uint64_t entries = cylinder_count(m, static_cast<std::size_t>(depth));
    std::vector<double> vals(entries * static_cast<std::uint64_t>(d), 0.0);
    double max_diam = 0.0;
    for_each_cylinder(m, static_cast<std::size_t>(depth), [&](const Word& w) {
        const std::uint64_t idx = w.rank(m) * static_cast<std::uint64_t>(d);
        switch (src.id) {
            case AnalyticSource::Id::coordinate:
                vals[idx] = project(w);
                break;
            case AnalyticSource::Id::digit_indicator:
                vals[idx] = (w[0] == src.digit) ? 1.0 : 0.0;
                break;
            case AnalyticSource::Id::affine: {
                const double x = project(w);
                for (int t = 0; t < d; ++t) vals[idx + t] = src.a[t] * x + src.b[t];
                break;
            }
        }
        if (src.id != AnalyticSource::Id::digit_indicator)
            max_diam = std::max(max_diam, cylinder(w).diameter());
    });
    double bound = 0.0;
    std::string tag;
    switch (src.id) {
        case AnalyticSource::Id::coordinate:
            bound = max_diam;
            tag = "coordinate";
            break;
        case AnalyticSource::Id::digit_indicator:
            tag = "digit_indicator";
            break;
        case AnalyticSource::Id::affine: {
            double an = 0.0;
            for (double ai : src.a) an += ai * ai;
            bound = std::sqrt(an) * max_diam;
            tag = "affine";
            break;
        }
    }
    return PotentialTable(m, d, depth, std::move(vals), bound, tag);
}

std::vector<std::pair<int, double>> BranchSystem::parabolic_points() const {
    std::vector<std::pair<int, double>> out;
    for (int i = 1; i <= branch_count(); ++i)
        if (branch(i).parabolic) out.emplace_back(i, branch(i).fixed_point);
    return out;
}

double GeomCache::birkhoff_g(const Word& w, int window_cap) {
    const std::size_t n = w.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Word window = w.rotated(j);
        if (window_cap > 0 && window.size() > static_cast<std::size_t>(window_cap))
            window = window.prefix(static_cast<std::size_t>(window_cap));
        acc += g(window);
    }
    return acc / static_cast<double>(n);
}

}  // namespace mfa
