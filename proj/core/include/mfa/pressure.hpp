#pragma once

#include <cstdint>
#include <vector>

#include "mfa/branch_system.hpp"
#include "mfa/markov_measure.hpp"
#include "mfa/polytope.hpp"
#include "mfa/potential.hpp"

namespace mfa {

struct PressureEval {
    double value = 0.0;   // P_k(q, s)
    Vec grad_q;           // dP/dq = int f dmu_Gibbs
    double lyapunov = 0;  // int g dmu_Gibbs = -dP/ds
};

// Order-k transfer-matrix pressure for the weight exp(<q, f> - s g).  States
// are k-words, edges are (k+1)-cylinders; an optional state mask restricts to
// a subshift of finite type.
class PressureContext {
public:
    PressureContext(const BranchSystem& map, const PotentialTable& f, int k,
                    std::vector<char> state_mask = {});

    int alphabet() const { return m_; }
    int order() const { return k_; }
    int dim() const { return d_; }
    std::uint64_t num_states() const { return S_; }
    const std::vector<char>& state_mask() const { return mask_; }

    // Whether the allowed subgraph carries any cycle (otherwise every
    // pressure is -infinity and the subshift is empty).
    bool feasible() const { return feasible_; }

    // log of the Perron eigenvalue of the weighted transfer matrix.
    double pressure(const Vec& q, double s) const;

    // Pressure together with its gradient, read off the Gibbs edge occupation.
    PressureEval evaluate(const Vec& q, double s) const;

    // The order-k Gibbs (eigen-)measure of the weight.
    MarkovMeasure gibbs(const Vec& q, double s) const;

    // Unique root of s -> pressure(q, s) (strictly decreasing since g > 0).
    double bowen_root(const Vec& q, double tol = 1e-10) const;

    // Bowen root at q = 0, clamped to 1 when the pressure at s = 1 already
    // vanishes to rounding (the limit set fills the interval).
    double hausdorff_estimate(double tol = 1e-10) const;

    std::uint64_t next_state(std::uint64_t state, int symbol) const {
        return (state % (S_ / m_)) * m_ + static_cast<std::uint64_t>(symbol - 1);
    }
    bool edge_allowed(std::uint64_t state, int symbol) const {
        return edge_ok_[state * m_ + (symbol - 1)] != 0;
    }
    const double* edge_potential(std::uint64_t state, int symbol) const {
        return &f_edge_[(state * m_ + (symbol - 1)) * d_];
    }
    double edge_g(std::uint64_t state, int symbol) const {
        return g_edge_[state * m_ + (symbol - 1)];
    }

private:
    struct Eig {
        double log_lambda = 0.0;            // of the unshifted, unscaled matrix
        double lambda_scaled = 0.0;         // after subtracting the max exponent
        double scale = 0.0;                 // the subtracted max exponent
        std::vector<double> right, left;    // L1-normalized, nonnegative
    };
    Eig perron(const Vec& q, double s) const;

    int m_ = 0, k_ = 0, d_ = 0;
    std::uint64_t S_ = 0;
    std::vector<char> mask_;      // per state, 1 = allowed
    std::vector<char> edge_ok_;   // S*m
    std::vector<double> f_edge_;  // S*m*d
    std::vector<double> g_edge_;  // S*m
    bool feasible_ = false;
};

}  // namespace mfa
