#include "mfa/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace mfa {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// Gram-Schmidt: extend `basis` (orthonormal) by the component of v outside
// its span, if that component is larger than tol.  Returns true if extended.
bool gs_extend(std::vector<Vec>& basis, Vec v, double tol) {
    for (const Vec& b : basis) {
        const double c = dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
    }
    const double n = norm(v);
    if (n <= tol) return false;
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
    return true;
}

// Solve H x = g for a small dense symmetric system (Gaussian elimination).
Vec solve_dense(std::vector<Vec> H, Vec g) {
    const std::size_t n = g.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(H[r][col]) > std::abs(H[piv][col])) piv = r;
        std::swap(H[col], H[piv]);
        std::swap(g[col], g[piv]);
        const double d = H[col][col];
        if (std::abs(d) < 1e-300) throw std::runtime_error("singular system");
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double fct = H[r][col] / d;
            if (fct == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) H[r][c] -= fct * H[col][c];
            g[r] -= fct * g[col];
        }
    }
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = g[i] / H[i][i];
    return x;
}

}  // namespace

Polytope Polytope::empty_set(int ambient_dim) {
    Polytope p;
    p.ambient_dim_ = ambient_dim;
    return p;
}

Vec Polytope::to_intrinsic(const Vec& x) const {
    Vec xi(basis_.size());
    const Vec d = sub(x, origin_);
    for (std::size_t i = 0; i < basis_.size(); ++i) xi[i] = dot(d, basis_[i]);
    return xi;
}

Vec Polytope::to_ambient(const Vec& xi) const {
    Vec x = origin_;
    for (std::size_t i = 0; i < basis_.size(); ++i)
        for (std::size_t t = 0; t < x.size(); ++t) x[t] += xi[i] * basis_[i][t];
    return x;
}

double Polytope::affine_distance(const Vec& x) const {
    Vec d = sub(x, origin_);
    for (const Vec& b : basis_) {
        const double c = dot(d, b);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= c * b[i];
    }
    return norm(d);
}

Polytope Polytope::hull(const std::vector<Vec>& points, double tol) {
    if (points.empty()) return empty_set(0);
    const int D = static_cast<int>(points[0].size());
    for (const Vec& p : points)
        if (static_cast<int>(p.size()) != D)
            throw std::invalid_argument("Polytope::hull: inconsistent dimensions");

    // Deduplicate.
    std::vector<Vec> pts;
    for (const Vec& p : points) {
        bool dup = false;
        for (const Vec& q : pts)
            if (norm(sub(p, q)) <= tol) { dup = true; break; }
        if (!dup) pts.push_back(p);
    }

    Polytope P;
    P.ambient_dim_ = D;
    P.origin_ = pts[0];
    for (const Vec& p : pts) gs_extend(P.basis_, sub(p, P.origin_), tol);
    const int l = static_cast<int>(P.basis_.size());

    std::vector<Vec> xi;
    xi.reserve(pts.size());
    for (const Vec& p : pts) xi.push_back(P.to_intrinsic(p));

    if (l == 0) {
        P.vertices_ = {pts[0]};
        return P;
    }

    if (l == 1) {
        std::size_t imin = 0, imax = 0;
        for (std::size_t i = 1; i < xi.size(); ++i) {
            if (xi[i][0] < xi[imin][0]) imin = i;
            if (xi[i][0] > xi[imax][0]) imax = i;
        }
        P.vertices_ = {pts[imin], pts[imax]};
        P.facets_.push_back({{1.0}, xi[imax][0]});
        P.facets_.push_back({{-1.0}, -xi[imin][0]});
        return P;
    }

    if (l == 2) {
        // Andrew's monotone chain in intrinsic coordinates.
        std::vector<std::size_t> order(xi.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return xi[a][0] < xi[b][0] || (xi[a][0] == xi[b][0] && xi[a][1] < xi[b][1]);
        });
        auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
            return (xi[a][0] - xi[o][0]) * (xi[b][1] - xi[o][1]) -
                   (xi[a][1] - xi[o][1]) * (xi[b][0] - xi[o][0]);
        };
        std::vector<std::size_t> hull_idx;
        for (int pass = 0; pass < 2; ++pass) {
            // The guard keeps each pass from popping below its own chain: the
            // upper pass re-pushes the last sorted point, so its floor is two
            // above the surviving lower chain.
            const std::size_t start = pass == 0 ? 2 : hull_idx.size() + 2;
            for (std::size_t t = 0; t < order.size(); ++t) {
                const std::size_t i = pass == 0 ? t : order.size() - 1 - t;
                while (hull_idx.size() >= start &&
                       cross(hull_idx[hull_idx.size() - 2], hull_idx.back(), order[i]) <= tol)
                    hull_idx.pop_back();
                hull_idx.push_back(order[i]);
            }
            hull_idx.pop_back();
        }
        for (std::size_t i : hull_idx) P.vertices_.push_back(pts[i]);
        for (std::size_t i = 0; i < hull_idx.size(); ++i) {
            const Vec& a = xi[hull_idx[i]];
            const Vec& b = xi[hull_idx[(i + 1) % hull_idx.size()]];
            Vec n = {b[1] - a[1], a[0] - b[0]};  // outward for CCW chain
            const double nn = norm(n);
            if (nn <= tol) continue;
            n[0] /= nn;
            n[1] /= nn;
            P.facets_.push_back({n, dot(n, a)});
        }
        return P;
    }

    // General (small) dimension: brute-force facet enumeration over l-subsets.
    const std::size_t N = pts.size();
    double combos = 1.0;
    for (int i = 0; i < l; ++i) combos *= static_cast<double>(N - i) / (i + 1);
    if (combos > 5e5)
        throw std::runtime_error("Polytope::hull: facet enumeration budget exceeded");

    std::vector<std::size_t> sel(l);
    std::vector<Facet> facets;
    auto try_subset = [&]() {
        std::vector<Vec> dirs;
        for (int j = 1; j < l; ++j) {
            Vec d = sub(xi[sel[j]], xi[sel[0]]);
            gs_extend(dirs, std::move(d), tol);
        }
        if (static_cast<int>(dirs.size()) != l - 1) return;
        // Normal: any unit vector orthogonal to dirs.
        std::vector<Vec> full = dirs;
        Vec n;
        for (int t = 0; t < l; ++t) {
            Vec e(l, 0.0);
            e[t] = 1.0;
            if (gs_extend(full, std::move(e), tol)) { n = full.back(); break; }
        }
        if (n.empty()) return;
        const double b = dot(n, xi[sel[0]]);
        double above = 0.0, below = 0.0;
        for (const Vec& x : xi) {
            const double v = dot(n, x) - b;
            above = std::max(above, v);
            below = std::min(below, v);
        }
        Facet f;
        if (above <= tol) {
            f.normal = n;
            f.offset = b;
        } else if (below >= -tol) {
            f.normal = n;
            for (double& c : f.normal) c = -c;
            f.offset = -b;
        } else {
            return;
        }
        for (const Facet& g : facets)
            if (std::abs(g.offset - f.offset) <= 1e-9 && norm(sub(g.normal, f.normal)) <= 1e-9)
                return;
        facets.push_back(std::move(f));
    };
    std::function<void(std::size_t, int)> rec = [&](std::size_t from, int depth) {
        if (depth == l) { try_subset(); return; }
        for (std::size_t i = from; i + (l - depth) <= N; ++i) {
            sel[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    P.facets_ = std::move(facets);

    // A point is a vertex iff its tight facet normals span the intrinsic space.
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<Vec> tight;
        for (const Facet& f : P.facets_)
            if (std::abs(dot(f.normal, xi[i]) - f.offset) <= tol) {
                Vec n = f.normal;
                gs_extend(tight, std::move(n), tol);
            }
        if (static_cast<int>(tight.size()) == l) P.vertices_.push_back(pts[i]);
    }
    return P;
}

bool Polytope::contains(const Vec& x, double tol) const {
    if (empty()) return false;
    if (affine_distance(x) > tol) return false;
    const Vec xi = to_intrinsic(x);
    if (intrinsic_dim() == 0) return true;
    for (const Facet& f : facets_)
        if (dot(f.normal, xi) - f.offset > tol) return false;
    return true;
}

bool Polytope::relative_interior_contains(const Vec& x, double tol) const {
    if (empty()) return false;
    if (affine_distance(x) > tol) return false;
    const Vec xi = to_intrinsic(x);
    if (intrinsic_dim() == 0) return true;  // ri of a point is the point
    for (const Facet& f : facets_)
        if (f.offset - dot(f.normal, xi) < tol) return false;
    return true;
}

ConvexDecomposition strict_convex_decomposition(const Polytope& P, const Vec& alpha, double tol) {
    if (!P.contains(alpha, tol)) throw std::runtime_error("alpha outside hull");
    const Vec xi = P.to_intrinsic(alpha);

    // Vertices of the minimal face: tight on every facet tight at alpha.
    std::vector<int> face;
    if (P.intrinsic_dim() == 0) {
        face = {0};
    } else {
        std::vector<const Polytope::Facet*> tight;
        for (const auto& f : P.facets())
            if (std::abs(dot(f.normal, xi) - f.offset) <= tol) tight.push_back(&f);
        for (std::size_t i = 0; i < P.vertices().size(); ++i) {
            const Vec vi = P.to_intrinsic(P.vertices()[i]);
            bool ok = true;
            for (const auto* f : tight)
                if (std::abs(dot(f->normal, vi) - f->offset) > tol) { ok = false; break; }
            if (ok) face.push_back(static_cast<int>(i));
        }
    }
    if (face.empty()) throw std::runtime_error("alpha outside hull");

    ConvexDecomposition out;
    out.vertex_indices = face;
    const std::size_t V = face.size();
    if (V == 1) {
        out.weights = {1.0};
        return out;
    }

    // Face-intrinsic coordinates.
    const Vec& f0 = P.vertices()[face[0]];
    std::vector<Vec> fbasis;
    for (int idx : face) gs_extend(fbasis, sub(P.vertices()[idx], f0), tol);
    const std::size_t lf = fbasis.size();
    auto fcoord = [&](const Vec& p) {
        Vec c(lf);
        const Vec d = sub(p, f0);
        for (std::size_t i = 0; i < lf; ++i) c[i] = dot(d, fbasis[i]);
        return c;
    };
    std::vector<Vec> u(V);
    for (std::size_t i = 0; i < V; ++i) u[i] = fcoord(P.vertices()[face[i]]);
    const Vec zeta = fcoord(alpha);

    // Analytic center: minimize Phi(y,c) = -sum log(y.u_i + c) + y.zeta + c.
    const std::size_t n = lf + 1;
    Vec yc(n, 0.0);
    yc[lf] = static_cast<double>(V);  // lambda_i = 1/V initially
    auto lambdas = [&](const Vec& p, Vec& lam) {
        for (std::size_t i = 0; i < V; ++i) {
            double s = p[lf];
            for (std::size_t j = 0; j < lf; ++j) s += p[j] * u[i][j];
            if (s <= 0.0) return false;
            lam[i] = 1.0 / s;
        }
        return true;
    };
    auto phi = [&](const Vec& p, double& val) {
        val = p[lf];
        for (std::size_t j = 0; j < lf; ++j) val += p[j] * zeta[j];
        for (std::size_t i = 0; i < V; ++i) {
            double s = p[lf];
            for (std::size_t j = 0; j < lf; ++j) s += p[j] * u[i][j];
            if (s <= 0.0) return false;
            val -= std::log(s);
        }
        return true;
    };
    Vec lam(V);
    for (int it = 0; it < 200; ++it) {
        if (!lambdas(yc, lam)) throw std::runtime_error("analytic center: infeasible iterate");
        Vec grad(n, 0.0);
        for (std::size_t j = 0; j < lf; ++j) grad[j] = zeta[j];
        grad[lf] = 1.0;
        for (std::size_t i = 0; i < V; ++i) {
            for (std::size_t j = 0; j < lf; ++j) grad[j] -= lam[i] * u[i][j];
            grad[lf] -= lam[i];
        }
        double gn = 0.0;
        for (double g : grad) gn += g * g;
        if (std::sqrt(gn) < 1e-13) break;
        std::vector<Vec> H(n, Vec(n, 0.0));
        for (std::size_t i = 0; i < V; ++i) {
            const double w = lam[i] * lam[i];
            for (std::size_t a = 0; a < n; ++a) {
                const double ua = a < lf ? u[i][a] : 1.0;
                for (std::size_t b = 0; b < n; ++b) {
                    const double ub = b < lf ? u[i][b] : 1.0;
                    H[a][b] += w * ua * ub;
                }
            }
        }
        Vec step;
        try {
            Vec rhs = grad;
            for (double& g : rhs) g = -g;
            step = solve_dense(H, rhs);
        } catch (const std::exception&) {
            step = grad;
            for (double& g : step) g = -g;
        }
        double base;
        phi(yc, base);
        double t = 1.0;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            Vec cand = yc;
            for (std::size_t a = 0; a < n; ++a) cand[a] += t * step[a];
            double val;
            if (phi(cand, val) && val <= base + 1e-15) { yc = cand; break; }
        }
    }
    if (!lambdas(yc, lam)) throw std::runtime_error("analytic center failed");
    double total = 0.0;
    for (double w : lam) total += w;
    out.weights.resize(V);
    for (std::size_t i = 0; i < V; ++i) out.weights[i] = lam[i] / total;

    // Validate reconstruction.
    Vec rec(alpha.size(), 0.0);
    for (std::size_t i = 0; i < V; ++i)
        for (std::size_t t = 0; t < rec.size(); ++t)
            rec[t] += out.weights[i] * P.vertices()[face[i]][t];
    if (norm(sub(rec, alpha)) > 1e-8)
        throw std::runtime_error("strict_convex_decomposition: reconstruction failed");
    return out;
}

SimplexSplit surrounding_simplex(const Polytope& P, const Vec& alpha, double margin) {
    if (P.empty() || P.intrinsic_dim() == 0)
        throw std::runtime_error("surrounding_simplex: polytope has no relative interior of positive dimension");
    if (!(margin > 0.0)) throw std::invalid_argument("surrounding_simplex: margin must be positive");
    if (!P.relative_interior_contains(alpha, margin))
        throw std::runtime_error("surrounding_simplex: alpha not in the relative interior at this margin");

    const int l = P.intrinsic_dim();
    // Regular simplex directions: e_i - centroid in R^{l+1}, expressed in an
    // orthonormal basis of the sum-zero subspace, normalized to unit length.
    std::vector<Vec> zero_sum_basis;
    for (int i = 0; i < l; ++i) {
        Vec d(l + 1, 0.0);
        d[i] = 1.0;
        d[i + 1] = -1.0;
        gs_extend(zero_sum_basis, std::move(d), 1e-12);
    }
    std::vector<Vec> dirs;
    for (int i = 0; i <= l; ++i) {
        Vec v(l + 1, -1.0 / (l + 1));
        v[i] += 1.0;
        Vec u(l);
        for (int j = 0; j < l; ++j) u[j] = dot(v, zero_sum_basis[j]);
        const double un = norm(u);
        for (double& c : u) c /= un;
        dirs.push_back(std::move(u));
    }

    const Vec xi = P.to_intrinsic(alpha);
    SimplexSplit out;
    for (const Vec& u : dirs) {
        Vec v = xi;
        for (int j = 0; j < l; ++j) v[j] += margin * u[j];
        out.simplex.push_back(P.to_ambient(v));
    }
    for (int drop = 0; drop <= l; ++drop) {
        std::vector<Vec> part{alpha};
        for (int i = 0; i <= l; ++i)
            if (i != drop) part.push_back(out.simplex[i]);
        out.parts.push_back(std::move(part));
    }
    return out;
}

Polytope parabolic_hull(const BranchSystem& map, const PotentialTable& f) {
    std::vector<Vec> pts;
    for (const auto& [sym, x] : map.parabolic_points()) {
        (void)x;
        pts.push_back(f.value(Word::constant(sym, static_cast<std::size_t>(f.depth()))));
    }
    if (pts.empty()) return Polytope::empty_set(f.dim());
    return Polytope::hull(pts);
}

Polytope rotation_set(const BranchSystem& map, const PotentialTable& f, int k,
                      const std::vector<char>& state_mask, std::uint64_t cycle_budget) {
    if (k < 1) throw std::invalid_argument("rotation_set: k must be >= 1");
    if (f.depth() > k + 1)
        throw std::invalid_argument("rotation_set: potential depth exceeds k+1");
    const int m = map.branch_count();
    const std::uint64_t S = cylinder_count(m, static_cast<std::size_t>(k));
    if (!state_mask.empty() && state_mask.size() != S)
        throw std::invalid_argument("rotation_set: bad state mask");
    auto allowed = [&](std::uint64_t s) { return state_mask.empty() || state_mask[s]; };
    const std::uint64_t shift_mod = S / static_cast<std::uint64_t>(m);
    const int d = f.dim();

    // Edge potential: f on the first r symbols of the (k+1)-word w.a.
    auto edge_value = [&](std::uint64_t s, int a) {
        Word w = Word::from_rank(s, static_cast<std::size_t>(k), m);
        w.push_back(a);
        return f.value_at_rank(w.prefix(static_cast<std::size_t>(f.depth())).rank(m));
    };

    const int max_len = std::max(2, 2 * k);
    std::vector<Vec> averages;
    std::uint64_t cycles = 0;

    std::vector<char> on_path(S, 0);
    std::vector<double> sum(d, 0.0);
    std::function<void(std::uint64_t, std::uint64_t, int)> dfs =
        [&](std::uint64_t root, std::uint64_t s, int len) {
            for (int a = 1; a <= m; ++a) {
                const std::uint64_t t = (s % shift_mod) * m + (a - 1);
                if (!allowed(t)) continue;
                const double* fv = edge_value(s, a);
                if (t == root) {
                    if (++cycles > cycle_budget)
                        throw std::runtime_error("rotation_set: cycle enumeration budget exceeded");
                    Vec avg(d);
                    for (int q = 0; q < d; ++q) avg[q] = (sum[q] + fv[q]) / (len + 1);
                    averages.push_back(std::move(avg));
                    continue;
                }
                if (t < root || on_path[t] || len + 1 >= max_len) continue;
                on_path[t] = 1;
                for (int q = 0; q < d; ++q) sum[q] += fv[q];
                dfs(root, t, len + 1);
                for (int q = 0; q < d; ++q) sum[q] -= fv[q];
                on_path[t] = 0;
            }
        };
    for (std::uint64_t root = 0; root < S; ++root) {
        if (!allowed(root)) continue;
        on_path[root] = 1;
        dfs(root, root, 0);
        on_path[root] = 0;
    }
    if (averages.empty()) return Polytope::empty_set(d);
    return Polytope::hull(averages);
}

}  // namespace mfa
