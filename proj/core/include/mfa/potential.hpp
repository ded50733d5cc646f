#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mfa/word.hpp"

namespace mfa {

// Depth-r locally constant potential f: Sigma -> R^d, stored as one vector
// per length-r word.  Words longer than the depth read only their first r
// symbols; windows that run past the end of a finite word repeat the final
// symbol (the wrap rule accounted for by variation_bound).
class PotentialTable {
public:
    PotentialTable(int m, int dim, int depth, std::vector<double> values,
                   double discretization_bound = 0.0, std::string source_tag = "")
        : m_(m), dim_(dim), depth_(depth), values_(std::move(values)),
          disc_bound_(discretization_bound), source_tag_(std::move(source_tag)) {
        if (m_ < 2) throw std::invalid_argument("PotentialTable: need m >= 2");
        if (dim_ < 1 || depth_ < 1) throw std::invalid_argument("PotentialTable: d, r must be >= 1");
        const std::uint64_t entries = cylinder_count(m_, static_cast<std::size_t>(depth_));
        if (values_.size() != entries * static_cast<std::uint64_t>(dim_))
            throw std::invalid_argument("PotentialTable: expected m^r entries of dimension d");
    }

    static PotentialTable constant(int m, const std::vector<double>& c, int depth = 1) {
        const int d = static_cast<int>(c.size());
        const std::uint64_t entries = cylinder_count(m, static_cast<std::size_t>(depth));
        std::vector<double> vals;
        vals.reserve(entries * d);
        for (std::uint64_t i = 0; i < entries; ++i) vals.insert(vals.end(), c.begin(), c.end());
        return PotentialTable(m, d, depth, std::move(vals));
    }

    // Indicator of the first symbol being j (depth 1, scalar).
    static PotentialTable digit_indicator(int m, int j) {
        std::vector<double> vals(m, 0.0);
        vals[j - 1] = 1.0;
        return PotentialTable(m, 1, 1, std::move(vals), 0.0, "digit_indicator");
    }

    int alphabet() const { return m_; }
    int dim() const { return dim_; }
    int depth() const { return depth_; }
    double discretization_bound() const { return disc_bound_; }
    const std::string& source_tag() const { return source_tag_; }

    // Value on the length-r word with the given base-m rank.
    const double* value_at_rank(std::uint64_t rank) const { return &values_[rank * dim_]; }

    std::vector<double> value(const Word& w) const {
        if (w.size() < static_cast<std::size_t>(depth_))
            throw std::invalid_argument("PotentialTable::value: word shorter than potential depth");
        std::uint64_t r = 0;
        for (int i = 0; i < depth_; ++i) r = r * m_ + static_cast<std::uint64_t>(w[i] - 1);
        const double* v = value_at_rank(r);
        return std::vector<double>(v, v + dim_);
    }

    // Depth-r window starting at `pos`; indices past the end repeat the last symbol.
    std::uint64_t window_rank(const Word& w, std::size_t pos) const {
        const std::size_t n = w.size();
        std::uint64_t r = 0;
        for (int i = 0; i < depth_; ++i) {
            const std::size_t idx = std::min(pos + i, n - 1);
            r = r * m_ + static_cast<std::uint64_t>(w[idx] - 1);
        }
        return r;
    }

    // A_n f(w) with the end-of-word wrap rule.
    std::vector<double> birkhoff_average(const Word& w) const {
        const std::size_t n = w.size();
        if (n < static_cast<std::size_t>(depth_))
            throw std::invalid_argument("birkhoff_average: word shorter than potential depth");
        std::vector<double> acc(dim_, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double* v = value_at_rank(window_rank(w, j));
            for (int t = 0; t < dim_; ++t) acc[t] += v[t];
        }
        for (int t = 0; t < dim_; ++t) acc[t] /= static_cast<double>(n);
        return acc;
    }

    // max over table entries of the Euclidean norm.
    double sup_norm() const {
        double best = 0.0;
        for (std::size_t i = 0; i < values_.size(); i += dim_) {
            double s = 0.0;
            for (int t = 0; t < dim_; ++t) s += values_[i + t] * values_[i + t];
            best = std::max(best, s);
        }
        return std::sqrt(best);
    }

    // Upper bound on var_n A_n f.  Depth-1 tables depend only on the shared
    // prefix, so the variation vanishes; otherwise only the r-1 boundary
    // windows can differ, giving 2(r-1)||f||/n, capped by the trivial 2||f||.
    double variation_bound(std::size_t n) const {
        if (depth_ == 1 || n == 0) return 0.0;
        const double nf = sup_norm();
        return std::min(2.0 * nf, 2.0 * (depth_ - 1) * nf / static_cast<double>(n));
    }

private:
    int m_, dim_, depth_;
    std::vector<double> values_;
    double disc_bound_;
    std::string source_tag_;
};

}  // namespace mfa
