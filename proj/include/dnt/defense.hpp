#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dnt/classifier.hpp"
#include "dnt/dataset.hpp"
#include "dnt/exec.hpp"
#include "dnt/trace_extract.hpp"

namespace dnt::defense {

/// Adds u ~ Uniform(0, d_max) to every rtt_sr (independently per record) and
/// recomputes rtt_mr; rtt_sm is left untouched. d_max = 0 returns the input.
std::vector<NotificationRtts> perturb(std::span<const NotificationRtts> records, double d_max, std::uint64_t seed);

/// Same, over groups in their given order with one random stream.
std::vector<dataset::RecordGroup> perturb_groups(std::span<const dataset::RecordGroup> groups, double d_max,
                                                 std::uint64_t seed);

struct SweepConfig {
    int sequence_length = 5;
    dataset::Feature feature = dataset::Feature::rtt_mr;
    classifier::CnnConfig cnn;
    int min_delay_s = 0;
    int max_delay_s = 20;
    /// Balancing and folding use this seed at every point; perturbation uses derive_seed(seed, {d}).
    std::uint64_t seed = 0;
};

struct SweepPoint {
    int max_delay_s = 0;
    double overall_accuracy = 0.0;
};

struct DelaySweepResult {
    std::vector<SweepPoint> points;
    double chance_level = 0.0;
};

/// One cross-validated accuracy per integer maximum delay. Points run in
/// parallel; each point's training is serial so the result is thread-count independent.
DelaySweepResult sweep(std::span<const dataset::RecordGroup> groups, const SweepConfig& cfg,
                       Exec exec = Exec::parallel);

/// Least-squares slope of accuracy against delay.
double trend_slope(const DelaySweepResult& result);

inline constexpr const char* kSweepHeader = "max_delay_s,overall_accuracy,chance_level";
std::string sweep_csv(const DelaySweepResult& result);

}  // namespace dnt::defense
