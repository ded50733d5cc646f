#pragma once

#include <cstdint>
#include <vector>

#include "mfa/branch_system.hpp"
#include "mfa/potential.hpp"

namespace mfa {

using Vec = std::vector<double>;

// Convex polytope stored as extreme points plus an affine basis of its hull
// and facet inequalities in intrinsic coordinates.
class Polytope {
public:
    struct Facet {
        Vec normal;     // unit normal in intrinsic coordinates
        double offset;  // normal . x <= offset
    };

    static Polytope hull(const std::vector<Vec>& points, double tol = 1e-9);
    static Polytope empty_set(int ambient_dim);

    bool empty() const { return vertices_.empty(); }
    int ambient_dim() const { return ambient_dim_; }
    int intrinsic_dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<Vec>& vertices() const { return vertices_; }
    const std::vector<Facet>& facets() const { return facets_; }

    Vec to_intrinsic(const Vec& x) const;
    Vec to_ambient(const Vec& xi) const;
    // Orthogonal distance from x to aff(P).
    double affine_distance(const Vec& x) const;

    bool contains(const Vec& x, double tol = 1e-9) const;
    bool relative_interior_contains(const Vec& x, double tol) const;

private:
    int ambient_dim_ = 0;
    std::vector<Vec> vertices_;
    Vec origin_;
    std::vector<Vec> basis_;  // orthonormal
    std::vector<Facet> facets_;
};

struct ConvexDecomposition {
    std::vector<int> vertex_indices;  // indices into Polytope::vertices()
    std::vector<double> weights;      // strictly positive, sum to 1
};

// Strictly positive weights on the minimal face containing alpha; among the
// valid weight vectors, the analytic center (max sum log w).
ConvexDecomposition strict_convex_decomposition(const Polytope& P, const Vec& alpha,
                                                double tol = 1e-9);

struct SimplexSplit {
    std::vector<Vec> simplex;               // l+1 vertices, barycenter alpha
    std::vector<std::vector<Vec>> parts;    // barycentric split around alpha
};

SimplexSplit surrounding_simplex(const Polytope& P, const Vec& alpha, double margin);

// Co{ f(i^infty) : branch i parabolic }.
Polytope parabolic_hull(const BranchSystem& map, const PotentialTable& f);

// Inner approximation of L_f at order k: hull of Birkhoff averages over
// simple cycles (length <= 2k) in the k-cylinder transition graph.  An empty
// state_mask means the full shift; otherwise only masked-in states are used.
Polytope rotation_set(const BranchSystem& map, const PotentialTable& f, int k,
                      const std::vector<char>& state_mask = {},
                      std::uint64_t cycle_budget = 2000000);

}  // namespace mfa
