#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mfa/potential.hpp"
#include "mfa/word.hpp"

namespace mfa {

enum class MapFamily { linear, manneville_pomeau, double_parabolic, custom };

struct Branch {
    double a = 0.0, b = 1.0;                      // branch interval I_i
    bool affine = false;                          // inverse is exactly affine
    double slope = 0.0;                           // T' on I_i when affine
    std::function<double(double)> forward;        // T on [a,b] -> [0,1] (empty when affine)
    std::function<double(double)> deriv;          // T' on [a,b]        (empty when affine)
    double fixed_point = 0.0;                     // x_i with T(x_i)=x_i
    bool parabolic = false;                       // T'(x_i) == 1
};

struct CylinderInterval {
    Word word;
    double left = 0.0, right = 1.0;
    double diameter() const { return right - left; }
};

struct AnalyticSource {
    enum class Id { coordinate, digit_indicator, affine };
    Id id = Id::coordinate;
    int digit = 1;                 // digit_indicator
    std::vector<double> a, b;      // affine: F(x) = a*x + b componentwise
};

struct PolyBranch {
    double a = 0.0, b = 1.0;
    std::vector<double> coeffs;    // T(x) = sum coeffs[j] x^j on [a,b], increasing onto [0,1]
};

// The piecewise expanding map T as its list of inverse branches.
class BranchSystem {
public:
    static BranchSystem linear_intervals(const std::vector<std::pair<double, double>>& intervals);
    // Intervals of the given lengths, first at 0, last ending at 1, gaps spread evenly.
    static BranchSystem linear_lengths(const std::vector<double>& lengths);
    static BranchSystem doubling() { return linear_lengths({0.5, 0.5}); }
    static BranchSystem manneville_pomeau(double gamma);
    static BranchSystem double_parabolic(double gamma);
    static BranchSystem custom(const std::vector<PolyBranch>& branches);

    int branch_count() const { return static_cast<int>(branches_.size()); }
    const Branch& branch(int i) const { return branches_[i - 1]; }  // 1-based symbol
    MapFamily family() const { return family_; }
    double gamma() const { return gamma_; }
    bool is_linear() const;
    bool has_parabolic() const;

    // T_i(y), the inverse branch of T|_{I_i} evaluated on [0,1].
    double inverse_branch(int i, double y) const;
    // T'(x) for x in I_i.
    double derivative(int i, double x) const;

    // I_w by composing inverse branches; endpoints accurate to `precision`.
    CylinderInterval cylinder(const Word& w, double precision = 1e-12) const;

    // log diam(I_w): exact slope sums for affine systems, endpoint difference
    // otherwise (falls back to -S_n g when the diameter underflows).
    double log_cylinder_diameter(const Word& w, double precision = 1e-12) const;

    // Pi(w^infty): the fixed point of T_{w_1} o ... o T_{w_n}.
    double project(const Word& w, double precision = 1e-12) const;

    // g_w = log T'(Pi(w^infty)) with the derivative of branch w_1.
    double g_value(const Word& w, double precision = 1e-12) const;

    // -log D_n(w) / n.
    double lyapunov_proxy(const Word& w) const;

    // A_n g along w, reading g on cyclic rotations of w (exact for affine
    // systems) truncated to windows of at most `window_cap` symbols.
    double birkhoff_g(const Word& w, int window_cap = 0) const;

    // max over the sample of |lambda~_n(w) - A_n g(w)|, the distortion defect
    // between cylinder geometry and the ergodic sum of g.
    double distortion_gap(std::size_t n, const std::vector<Word>& sample) const;

    PotentialTable discretize_analytic(const AnalyticSource& src, int depth) const;

    std::vector<std::pair<int, double>> parabolic_points() const;

    // Finite-word surrogate of the double-coding exclusion: constant words in
    // symbol 1 or m are the prefixes of the two boundary codings.
    static bool is_boundary_coding(const Word& w, int m) {
        return w.is_constant() && (w[0] == 1 || w[0] == m);
    }

private:
    BranchSystem() = default;
    std::vector<Branch> branches_;
    MapFamily family_ = MapFamily::custom;
    double gamma_ = 0.0;
};

// Memoizing wrapper around g_value, keyed by (rank, length).
class GeomCache {
public:
    explicit GeomCache(const BranchSystem& map) : map_(&map) {}

    double g(const Word& w) {
        const std::uint64_t key = (w.rank(map_->branch_count()) << 6) |
                                  static_cast<std::uint64_t>(w.size() & 0x3f);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double v = map_->g_value(w);
        cache_.emplace(key, v);
        return v;
    }

    // A_n g with truncated windows, shared cache.
    double birkhoff_g(const Word& w, int window_cap);

private:
    const BranchSystem* map_;
    std::unordered_map<std::uint64_t, double> cache_;
};

}  // namespace mfa
