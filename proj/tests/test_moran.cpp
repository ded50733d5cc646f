#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfa/moran.hpp"

using namespace mfa;

namespace {

MoranSchedule block_reference_schedule(int stages = 2) {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.25, 0.75});
    return build_block_schedule(map, f, mu, {0.25}, 0.1, stages);
}

PotentialTable intermittent_potential(const BranchSystem& map) {
    AnalyticSource src;
    src.id = AnalyticSource::Id::digit_indicator;
    src.digit = 2;
    return map.discretize_analytic(src, 2);
}

}  // namespace

TEST_CASE("block schedule structure") {
    const MoranSchedule sched = block_reference_schedule(2);
    CHECK(sched.mode == MoranMode::block);
    REQUIRE(sched.stages.size() == 2);
    CHECK(sched.base_stats.entropy / sched.base_stats.lyapunov ==
          doctest::Approx(0.8113).epsilon(1e-3));
    for (std::size_t i = 0; i < sched.stages.size(); ++i) {
        const MoranStage& st = sched.stages[i];
        CHECK(st.index == static_cast<int>(i) + 1);
        CHECK(st.omega_mass >= 1.0 - sched.delta);
        CHECK(st.block_len >= 1);
        CHECK(st.repetitions >= 1);
        if (i > 0) {
            CHECK(st.epsilon < sched.stages[i - 1].epsilon);
            CHECK(st.block_len >= sched.stages[i - 1].block_len);
        }
    }
    const ScheduleValidation val = validate_schedule(sched);
    CHECK(val.epsilons_decreasing);
    CHECK(val.lengths_monotone);
    CHECK(val.repetitions_match);
    CHECK(val.omega_masses);
    CHECK(val.ok());
}

TEST_CASE("block schedule rejects bad inputs") {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.25, 0.75});
    CHECK_THROWS_AS((void)build_block_schedule(map, f, mu, {0.25}, 0.7, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)build_block_schedule(map, f, mu, {0.25}, 0.0, 2),
                    std::invalid_argument);
    // The base measure's average must match the target level.
    CHECK_THROWS_AS((void)build_block_schedule(map, f, mu, {0.9}, 0.1, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)build_block_schedule(map, f, mu, {0.25}, 0.1, 0),
                    std::invalid_argument);
}

TEST_CASE("admissible blocks satisfy the stage bands") {
    const MoranSchedule sched = block_reference_schedule(2);
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const MoranStage& st = sched.stages.back();
    int admissible = 0;
    for (int t = 0; t < 200; ++t) {
        const Word w = st.nu.sample_path(st.block_len, 9000 + t);
        if (!stage_admissible(st, sched.mode, map, f, w)) continue;
        ++admissible;
        CHECK_FALSE(w.is_constant());
        const std::vector<double> avg = f.birkhoff_average(w);
        CHECK(std::abs(avg[0] - st.target[0]) <= st.tau_f + 1e-12);
    }
    // The stage was built so that most blocks are admissible.
    CHECK(admissible >= 150);
}

TEST_CASE("sampling is deterministic and respects the requested length") {
    const MoranSchedule sched = block_reference_schedule(2);
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const Word a = sample_moran(sched, map, f, 512, 7);
    const Word b = sample_moran(sched, map, f, 512, 7);
    const Word c = sample_moran(sched, map, f, 512, 8);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.size() >= 512);

    const MoranSample ann = sample_moran_annotated(sched, map, f, 512, 7);
    CHECK(ann.word == a);
    REQUIRE_FALSE(ann.block_ends.empty());
    CHECK(ann.block_ends.back() == a.size());
    for (std::size_t b2 = 1; b2 < ann.block_ends.size(); ++b2)
        CHECK(ann.block_ends[b2] > ann.block_ends[b2 - 1]);
    for (double lm : ann.log_block_mass) CHECK(lm <= 0.0);
}

TEST_CASE("level verification converges on the reference schedule") {
    const MoranSchedule sched = block_reference_schedule(2);
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
    const ConvergenceReport rep = verify_level(sched, map, f, seeds, 2048);
    REQUIRE(rep.sup_deviation.size() == 10);
    REQUIRE(rep.checkpoints.size() == 4);
    CHECK(rep.checkpoints.back() == 2048);
    for (const auto& row : rep.sup_deviation) {
        for (double v : row) CHECK(v >= 0.0);
        // Suffix suprema over growing checkpoints cannot increase.
        for (std::size_t c = 1; c < row.size(); ++c) CHECK(row[c] <= row[c - 1] + 1e-12);
    }
    CHECK(rep.fraction_final_below(0.05) >= 0.9);
}

TEST_CASE("dimension certificate approaches the entropy-over-lyapunov target") {
    const MoranSchedule sched = block_reference_schedule(2);
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
    const DimensionCertificate cert = local_dimension_certificate(sched, map, f, seeds, 4096);
    CHECK(cert.target == doctest::Approx(0.8113).epsilon(1e-3));
    CHECK(cert.estimate >= cert.target - 0.1);
    CHECK(cert.per_seed.size() == 20);
}

TEST_CASE("parabolic schedule on the intermittent map") {
    const BranchSystem map = BranchSystem::manneville_pomeau(0.5);
    const PotentialTable f = intermittent_potential(map);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.9, 0.1});
    const MoranSchedule sched = build_parabolic_schedule(map, f, mu, {0.0}, 0.1, 12);
    CHECK(sched.mode == MoranMode::parabolic);
    REQUIRE(sched.stages.size() == 12);
    REQUIRE(sched.parabolic_symbols.size() == 1);
    CHECK(sched.parabolic_symbols[0] == 1);
    CHECK(sched.r_weights[0] == doctest::Approx(1.0));

    // Frozen run-multiplier ladder for this construction, checked by hand:
    // eps_i = 2/i, k_i = ceil(max(1, sqrt(i/2))).
    const std::vector<int> want_k{1, 1, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3};
    for (int i = 0; i < 12; ++i) {
        const MoranStage& st = sched.stages[i];
        CHECK(st.epsilon == doctest::Approx(2.0 / (i + 1)).epsilon(1e-12));
        CHECK(st.k_i == want_k[i]);
        CHECK(st.block_len == static_cast<std::size_t>(i + 1));
        CHECK(st.repetitions == 1);
        // Filler structure: segments plus remainder tile i * k_i symbols of
        // the parabolic branch.
        std::size_t total = st.remainder;
        for (std::size_t seg : st.segment_lengths) total += seg;
        CHECK(total == st.block_len * static_cast<std::size_t>(st.k_i));
        CHECK(st.filler.size() == total);
        CHECK(st.filler.is_constant());
        CHECK(st.filler[0] == 1);
    }
    const ScheduleValidation val = validate_schedule(sched);
    CHECK(val.epsilons_decreasing);
    CHECK(val.lengths_monotone);
    CHECK(val.filler_lengths_match);
    CHECK(val.k_min_weight);
    CHECK(val.k_growth);
    CHECK(val.k_eps_vanishing);
    CHECK(val.k_ratio_tail);
    CHECK(val.ok());
}

TEST_CASE("parabolic schedule rejects unsuitable inputs") {
    const BranchSystem flat = BranchSystem::doubling();
    const PotentialTable f0 = PotentialTable::digit_indicator(2, 1);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.5, 0.5});
    CHECK_THROWS_WITH((void)build_parabolic_schedule(flat, f0, mu, {0.5}, 0.1, 3),
                      doctest::Contains("no parabolic branches"));

    const BranchSystem map = BranchSystem::manneville_pomeau(0.5);
    const PotentialTable f = intermittent_potential(map);
    // 0.5 is not in the parabolic hull {0}.
    CHECK_THROWS_AS((void)build_parabolic_schedule(map, f, mu, {0.5}, 0.1, 3),
                    std::invalid_argument);
}

TEST_CASE("parabolic sampling alternates measure blocks and fillers") {
    const BranchSystem map = BranchSystem::manneville_pomeau(0.5);
    const PotentialTable f = intermittent_potential(map);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.9, 0.1});
    const MoranSchedule sched = build_parabolic_schedule(map, f, mu, {0.0}, 0.1, 6);
    const MoranSample samp = sample_moran_annotated(sched, map, f, 400, 3);
    CHECK(samp.word.size() >= 400);
    // Filler blocks carry log-mass 0 and alternate with measure blocks.
    bool saw_filler = false;
    for (std::size_t b = 0; b < samp.block_stage.size(); ++b) {
        if (samp.log_block_mass[b] == 0.0) saw_filler = true;
    }
    CHECK(saw_filler);

    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    const ConvergenceReport rep = verify_level(sched, map, f, seeds, 2048);
    CHECK(rep.fraction_final_below(0.08) == doctest::Approx(1.0));
}
