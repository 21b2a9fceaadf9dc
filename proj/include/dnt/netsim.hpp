#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dnt/exec.hpp"
#include "dnt/rng.hpp"
#include "dnt/trace_extract.hpp"

namespace dnt::netsim {

struct Lognormal {
    double mu = 0.0;
    double sigma = 0.0;
};
/// Normal truncated at zero (rejection sampled).
struct TruncatedNormal {
    double mean = 0.0;
    double std = 0.0;
};
struct ShiftedExponential {
    double offset = 0.0;
    double rate = 1.0;
};

/// A strictly positive latency distribution in seconds.
class LatencyProfile {
public:
    using Distribution = std::variant<Lognormal, TruncatedNormal, ShiftedExponential>;

    LatencyProfile() : dist_(Lognormal{-4.6, 0.2}) {}
    LatencyProfile(Distribution d) : dist_(d) {}  // NOLINT(google-explicit-constructor)

    static LatencyProfile lognormal(double mu, double sigma) { return LatencyProfile(Lognormal{mu, sigma}); }
    static LatencyProfile normal(double mean, double std) { return LatencyProfile(TruncatedNormal{mean, std}); }
    static LatencyProfile shifted_exponential(double offset, double rate) { return LatencyProfile(ShiftedExponential{offset, rate}); }

    void validate(const std::string& where) const;
    double sample(Rng& rng) const;
    /// Analytic mean of the untruncated family (used for documentation and tests).
    double nominal_mean() const;
    const Distribution& distribution() const noexcept { return dist_; }

private:
    Distribution dist_;
};

enum class NetworkType { wifi, cellular };

struct ReceiverSpec {
    std::string id;
    std::string location_label;
    NetworkType network_type = NetworkType::wifi;
    LatencyProfile uplink;
    LatencyProfile processing_delay;
};

struct ScenarioConfig {
    MessengerProfile messenger;
    LatencyProfile sender_to_server;
    LatencyProfile server_processing;
    std::vector<ReceiverSpec> receivers;
    int iterations = 1;
    int messages_per_iteration = 5;
    double short_interval = 10.0;
    double long_interval = 20.0;
    /// Upper bound of the uniform random delay the server adds to delivery notes.
    double delivery_delay_max = 0.0;
    /// Spacing between the starts of consecutive iterations.
    double iteration_period = 300.0;
    /// Unix time of trace t = 0; places iterations on the wall clock.
    std::int64_t start_epoch = 0;
    /// Multiplicative latency factor per UTC hour of day; flat by default.
    std::array<double, 24> hour_of_day_modifier = filled(1.0);
    std::string server_address = "203.0.113.10";
    std::uint64_t rng_seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

private:
    static std::array<double, 24> filled(double v) {
        std::array<double, 24> a{};
        a.fill(v);
        return a;
    }
};

/// Ground truth for one simulated message.
struct TruthRecord {
    int iteration = 0;
    int msg_idx = 0;
    NotificationRtts rtts;
    /// Latency components, kept for oracle tests.
    double d1 = 0.0;
    double d2 = 0.0;
    double countermeasure = 0.0;
};

struct ReceiverRun {
    std::string receiver_id;
    std::string location_label;
    NetworkType network_type = NetworkType::wifi;
    std::vector<PacketEvent> trace;
    std::vector<TruthRecord> truth;
};

/// Offset (s) of message `k` from the iteration start under the measurement schedule:
/// the first n-1 messages `short_interval` apart, the last `long_interval` after its predecessor.
double schedule_offset(const ScenarioConfig& cfg, int k);

/// Simulates every (receiver, iteration) unit. Each unit draws from its own
/// stream seeded by derive_seed(rng_seed, {receiver, iteration}), so the
/// serial and parallel paths are bit-identical.
std::vector<ReceiverRun> run_scenario(const ScenarioConfig& cfg, Exec exec = Exec::parallel);

/// JSONL trace file readable by read_trace_file.
void emit_trace(std::span<const PacketEvent> trace, const std::filesystem::path& path);

inline constexpr const char* kTruthHeader = "receiver,iteration,msg_idx,rtt_sm,rtt_sr";
std::string truth_csv(std::span<const ReceiverRun> runs);

/// Scenario JSON. `messenger` is a profile name looked up in `profiles` or an inline profile object.
ScenarioConfig parse_scenario(const std::string& json_text, const ProfileSet& profiles,
                              const std::string& source = "<scenario>");
ScenarioConfig load_scenario(const std::filesystem::path& path, const ProfileSet& profiles);

std::string to_string(NetworkType t);

}  // namespace dnt::netsim
