#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfa/branch_system.hpp"
#include "mfa/polytope.hpp"
#include "mfa/potential.hpp"
#include "mfa/pressure.hpp"

namespace mfa {

enum class SpectrumStatus {
    interior_solved,    // dual converged with bounded multipliers
    boundary_fallback,  // multiplier escape; primal fallback answer
    parabolic_flat,     // alpha in the parabolic hull: D = dim_H of the limit set
    infeasible,         // alpha outside the rotation set
};

std::string to_string(SpectrumStatus s);

struct SolverOptions {
    int k = 2;                  // cylinder order of the measure class
    double tol = 1e-6;          // outer bisection tolerance on s
    double q_cap = 1e3;         // multiplier escape threshold (sup norm)
    int inner_iter_cap = 200;   // quasi-Newton iterations per inner solve
    int primal_iter_cap = 2000; // exponentiated-gradient iterations
    double primal_eta = 0.1;    // EG step size
    double primal_rho = 20.0;   // augmented-Lagrangian penalty
    std::vector<int> sweep_run_caps = {2, 4, 8};  // forbidden parabolic run lengths
    double hypothesis_tol = 0.05;
    double hull_tol = 1e-9;
    int feasibility_order = 3;  // rotation-set order cap for the membership test
    int threads = 1;
    std::uint64_t budget = kDefaultCylinderBudget;
};

struct SpectrumPoint {
    Vec alpha;
    double dimension = 0.0;
    SpectrumStatus status = SpectrumStatus::infeasible;
    Vec q_star;                 // dual multiplier at the optimum
    double s_star = 0.0;
    double entropy = 0.0;       // of the certifying measure
    double lyapunov = 0.0;
    Vec measure_average;        // int f dmu of the certifying measure
    double duality_gap = 0.0;   // |h/lambda(certified) - D|
    bool hypothesis_warning = false;
    int sweep_run_cap = 0;      // run cap that achieved the reported value (0 = none)
};

// Root of P(-s g) = 0 at cylinder order k, capped at the ambient dimension 1.
double bowen_dimension(const BranchSystem& map, int k);

// D(alpha) = sup{h/lambda : int f dmu = alpha} by outer bisection on s and
// inner convex minimization over the multiplier q.
SpectrumPoint dual_dimension(const BranchSystem& map, const PotentialTable& f, const Vec& alpha,
                             const SolverOptions& opts = {});

// Independent solver: bisection on s of max{h - s lambda} over order-k edge
// occupation measures with the moment constraint, by exponentiated-gradient
// ascent under an augmented Lagrangian.
SpectrumPoint primal_dimension(const BranchSystem& map, const PotentialTable& f, const Vec& alpha,
                               const SolverOptions& opts = {});

// Dual solver on the subshift forbidding every parabolic run i^run_cap.
SpectrumPoint subsystem_dimension(const BranchSystem& map, const PotentialTable& f,
                                  const Vec& alpha, int run_cap, const SolverOptions& opts = {});

// Parabolic dichotomy: inside the parabolic hull the spectrum is flat at the
// limit-set dimension; outside, the sup over uniformly hyperbolic subsystems
// obtained by capping parabolic run lengths.
SpectrumPoint level_set_dimension(const BranchSystem& map, const PotentialTable& f,
                                  const Vec& alpha, const SolverOptions& opts = {});

struct LevelCover {
    std::vector<Word> words;  // length-n words with |A_n f - alpha| < radius
    double root = 0.0;        // s with sum diam(I_w)^s = 1
    bool empty_cover = true;
};

LevelCover level_cover(const BranchSystem& map, const PotentialTable& f, const Vec& alpha,
                       std::size_t n, double radius,
                       std::uint64_t budget = kDefaultCylinderBudget);

std::vector<SpectrumPoint> spectrum_grid(const BranchSystem& map, const PotentialTable& f,
                                         const std::vector<Vec>& grid,
                                         const SolverOptions& opts = {});

struct ContinuityReport {
    std::vector<double> radii;
    std::vector<double> oscillation;  // max - min of D over {alpha} + simplex vertices
};

// Oscillation of D over shrinking surrounding simplices centered at alpha.
ContinuityReport continuity_scan(const BranchSystem& map, const PotentialTable& f,
                                 const Vec& alpha, const std::vector<double>& radii,
                                 const SolverOptions& opts = {});

}  // namespace mfa
