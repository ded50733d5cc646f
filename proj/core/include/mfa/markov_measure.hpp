#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfa/branch_system.hpp"
#include "mfa/potential.hpp"
#include "mfa/word.hpp"

namespace mfa {

struct MeasureStats {
    double entropy = 0.0;            // h(mu, sigma), nats
    double lyapunov = 0.0;           // lambda(mu, sigma) = int g dmu, nats
    std::vector<double> potential_average;  // int f dmu
    int quad_depth = 0;
    double error_bound = 0.0;
};

// Order-k shift-invariant Markov measure: states are k-words, transitions
// append one symbol.  Immutable after construction.
class MarkovMeasure {
public:
    // trans is S*m row-major: P(append a | state w).  Stationary distribution
    // computed if not supplied.
    MarkovMeasure(int m, int k, std::vector<double> trans,
                  std::optional<std::vector<double>> stationary = std::nullopt);

    static MarkovMeasure bernoulli(std::vector<double> p);

    int alphabet() const { return m_; }
    int order() const { return k_; }
    std::size_t num_states() const { return pi_.size(); }

    double transition(std::uint64_t state, int symbol) const {
        return trans_[state * m_ + (symbol - 1)];
    }
    double stationary(std::uint64_t state) const { return pi_[state]; }
    std::uint64_t next_state(std::uint64_t state, int symbol) const;

    // mu[w] for any length: marginal sums below order k, transition products above.
    double cylinder_mass(const Word& w) const;
    double log_cylinder_mass(const Word& w) const;  // -inf on zero mass

    double entropy_rate() const;

    bool ergodic() const;  // strong connectivity of the positive-mass support

    // Deterministic given the seed; requires ergodicity.
    Word sample_path(std::size_t n, std::uint64_t seed) const;

private:
    int m_, k_;
    std::vector<double> trans_;
    std::vector<double> pi_;
};

MeasureStats measure_stats(const MarkovMeasure& mu, const BranchSystem& map,
                           const PotentialTable& f, int quad_depth);

// Explicit affine mixture of Markov measures.  Entropy and averages combine
// affinely; collapsing to a single transition matrix would inflate entropy.
class MeasureMixture {
public:
    MeasureMixture(std::vector<double> weights, std::vector<MarkovMeasure> components);
    explicit MeasureMixture(MarkovMeasure single);

    int alphabet() const;
    std::size_t size() const { return comps_.size(); }
    const MarkovMeasure& component(std::size_t i) const { return comps_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    double cylinder_mass(const Word& w) const;
    double entropy_rate() const;  // affine in the components

    MeasureStats stats(const BranchSystem& map, const PotentialTable& f, int quad_depth) const;

private:
    std::vector<double> weights_;
    std::vector<MarkovMeasure> comps_;
};

// Ergodic approximants: order-n Markov chains matched to the
// n-cylinder marginals of mu, with a tiny transition floor making them
// ergodic and atomless.  Orders grow with the index; stats converge to mu's.
std::vector<MarkovMeasure> ergodic_approximants(const MeasureMixture& mu, int count,
                                                int first_order = 2,
                                                std::uint64_t budget = kDefaultCylinderBudget);

}  // namespace mfa
