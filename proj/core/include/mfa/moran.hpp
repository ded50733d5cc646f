#pragma once

#include <cstdint>
#include <vector>

#include "mfa/branch_system.hpp"
#include "mfa/markov_measure.hpp"
#include "mfa/polytope.hpp"
#include "mfa/potential.hpp"

namespace mfa {

enum class MoranMode {
    block,      // concatenated typical blocks of ergodic approximants
    parabolic,  // measure blocks interleaved with deterministic parabolic fillers
};

struct MoranStage {
    int index = 0;            // stage number i, 1-based
    double epsilon = 0.0;     // eps_i of the ladder
    // Stage measure (approximant; the base measure in parabolic mode).
    MarkovMeasure nu = MarkovMeasure::bernoulli({0.5, 0.5});
    std::size_t block_len = 0;    // l_i (block mode) / i (parabolic mode)
    std::size_t repetitions = 1;  // N_i = l_{i+2} in block mode, 1 in parabolic mode
    double h = 0.0, lambda = 0.0; // stats of nu, centers of the admissibility bands
    Vec target;                   // Birkhoff-average center (alpha, or int f dmu)
    double tau_f = 0.0, tau_h = 0.0, tau_g = 0.0;  // admissibility half-widths
    double omega_mass = 1.0;      // empirical nu-mass of the admissible set
    // Parabolic mode:
    int k_i = 0;
    Word filler;                            // v^i
    std::vector<std::size_t> segment_lengths;  // [r_j * i * k_i] per parabolic symbol
    std::size_t remainder = 0;                 // m_i, appended to the last segment
};

struct MoranSchedule {
    MoranMode mode = MoranMode::block;
    int alphabet = 0;
    Vec alpha;
    double delta = 0.0;
    MeasureStats base_stats;  // h, lambda, int f dmu of the base measure
    std::vector<MoranStage> stages;
    // Parabolic mode: strict convex weights over the parabolic vertices.
    std::vector<double> r_weights;
    std::vector<int> parabolic_symbols;
    bool hypothesis_warning = false;  // base h/lambda far from the limit-set dimension
};

struct MoranOptions {
    int egorov_samples = 10000;  // paths sampled per admissibility estimate
    double ladder_c = 1.0;       // eps_i = max(variation bound at i, c/2^i)
    std::size_t max_block_len = std::size_t{1} << 15;
    int rejection_cap = 500;     // draws before a block is accepted best-effort
    int quad_depth = 4;
    std::uint64_t seed = 12345;  // deterministic builder randomness
    int approximant_extra = 3;   // spare approximants if a stage misses its band
};

// Whether w is an admissible block for the stage (Birkhoff average, measure
// scaling, and geometry scaling all within the stage bands; block mode also
// excludes constant words).
bool stage_admissible(const MoranStage& st, MoranMode mode, const BranchSystem& map,
                      const PotentialTable& f, const Word& w);

// Blockwise construction: stage blocks drawn from ergodic approximants of mu,
// lengths chosen so the admissible set carries nu_i-mass >= 1 - delta.
MoranSchedule build_block_schedule(const BranchSystem& map, const PotentialTable& f,
                                   const MarkovMeasure& mu, const Vec& alpha, double delta,
                                   int stages, const MoranOptions& opts = {});

// Parabolic construction: alpha must lie in the parabolic hull; stage i emits
// one mu-block of length i followed by the deterministic filler v^i.
MoranSchedule build_parabolic_schedule(const BranchSystem& map, const PotentialTable& f,
                                       const MarkovMeasure& mu, const Vec& alpha, double delta,
                                       int stages, const MoranOptions& opts = {});

struct ScheduleValidation {
    bool epsilons_decreasing = false;
    bool lengths_monotone = false;
    bool repetitions_match = false;   // N_i = l_{i+2} (block mode)
    bool omega_masses = false;        // nu_i(admissible) >= 1 - delta
    bool filler_lengths_match = false;  // sum of segments = i * k_i
    bool k_min_weight = false;          // k_i * min r_j >= 1
    bool k_growth = false;              // k_i non-decreasing, strictly overall
    bool k_eps_vanishing = false;       // k_i eps_i shrinks from head to tail
    bool k_ratio_tail = false;          // k_{S-1}/k_S = 1 at the tail
    bool ok() const;
};

ScheduleValidation validate_schedule(const MoranSchedule& sched);

struct MoranSample {
    Word word;
    std::vector<std::size_t> block_ends;  // cumulative symbol counts
    std::vector<int> block_stage;         // stage index per block
    std::vector<double> log_block_mass;   // log rho^i(block); 0 for fillers
};

MoranSample sample_moran_annotated(const MoranSchedule& sched, const BranchSystem& map,
                                   const PotentialTable& f, std::size_t n_prefix,
                                   std::uint64_t seed);

Word sample_moran(const MoranSchedule& sched, const BranchSystem& map, const PotentialTable& f,
                  std::size_t n_prefix, std::uint64_t seed);

struct ConvergenceReport {
    Vec alpha;
    std::vector<std::size_t> checkpoints;
    std::vector<std::vector<double>> sup_deviation;  // [seed][checkpoint]
    std::vector<char> monotone;                      // per-seed non-increasing flag

    double fraction_final_below(double eps) const;
};

// Tracks sup_{n' >= n} |A_{n'} f - alpha| along sampled prefixes at
// checkpoints n_max/8, n_max/4, n_max/2, n_max.
ConvergenceReport verify_level(const MoranSchedule& sched, const BranchSystem& map,
                               const PotentialTable& f, const std::vector<std::uint64_t>& seeds,
                               std::size_t n_max);

struct DimensionCertificate {
    double estimate = 0.0;  // median over seeds of log-mass/log-diameter at n_max
    double target = 0.0;    // h(mu)/lambda(mu)
    std::vector<double> per_seed;
};

DimensionCertificate local_dimension_certificate(const MoranSchedule& sched,
                                                 const BranchSystem& map,
                                                 const PotentialTable& f,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 std::size_t n_max);

}  // namespace mfa
