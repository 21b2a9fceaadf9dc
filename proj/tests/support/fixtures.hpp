#pragma once

// Shared fixtures: temporary directories, a reference packet excerpt, and
// simulator scenarios with known ground truth.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "dnt/csv.hpp"
#include "dnt/dataset.hpp"
#include "dnt/netsim.hpp"
#include "dnt/trace_extract.hpp"

namespace dnt::testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("dntlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        csv::write_file(p, content);
        return p;
    }

private:
    std::filesystem::path path_;
};

inline const std::string kServerPeer = "203.0.113.10";

/// Packet excerpt idx 207-214 with the message and both notifications.
inline std::vector<PacketEvent> reference_excerpt() {
    return {
        {207, 53.9259, Direction::outbound, 536, kServerPeer}, {208, 53.9261, Direction::inbound, 42, kServerPeer},
        {209, 53.9263, Direction::outbound, 97, kServerPeer},  {210, 53.9264, Direction::inbound, 42, kServerPeer},
        {211, 54.0722, Direction::inbound, 123, kServerPeer},  {212, 54.1225, Direction::outbound, 42, kServerPeer},
        {213, 55.0154, Direction::inbound, 776, kServerPeer},  {214, 55.0656, Direction::outbound, 56, kServerPeer},
    };
}

inline const char* kExcerptJsonl =
    "{\"idx\":207,\"t\":53.9259,\"dir\":\"out\",\"len\":536,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":208,\"t\":53.9261,\"dir\":\"in\",\"len\":42,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":209,\"t\":53.9263,\"dir\":\"out\",\"len\":97,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":210,\"t\":53.9264,\"dir\":\"in\",\"len\":42,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":211,\"t\":54.0722,\"dir\":\"in\",\"len\":123,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":212,\"t\":54.1225,\"dir\":\"out\",\"len\":42,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":213,\"t\":55.0154,\"dir\":\"in\",\"len\":776,\"peer\":\"203.0.113.10\"}\n"
    "{\"idx\":214,\"t\":55.0656,\"dir\":\"out\",\"len\":56,\"peer\":\"203.0.113.10\"}\n";

inline MessengerProfile profile(const std::string& name) { return default_profiles().at(name); }

inline netsim::ReceiverSpec normal_receiver(const std::string& id, const std::string& label, double mean_s, double std_s) {
    netsim::ReceiverSpec r;
    r.id = id;
    r.location_label = label;
    r.uplink = netsim::LatencyProfile::normal(mean_s, std_s);
    r.processing_delay = netsim::LatencyProfile::normal(0.010, 0.001);
    return r;
}

inline netsim::ScenarioConfig base_scenario(int iterations, std::uint64_t seed) {
    netsim::ScenarioConfig cfg;
    cfg.messenger = profile("signal");
    cfg.sender_to_server = netsim::LatencyProfile::lognormal(std::log(0.05), 0.2);
    cfg.server_processing = netsim::LatencyProfile::normal(0.005, 0.001);
    cfg.iterations = iterations;
    cfg.rng_seed = seed;
    return cfg;
}

/// Three receiver classes with uplink means 30/130/230 ms, sigma 20 ms.
inline netsim::ScenarioConfig separable_scenario(int iterations, std::uint64_t seed) {
    auto cfg = base_scenario(iterations, seed);
    cfg.receivers = {normal_receiver("ra", "city-a", 0.030, 0.020), normal_receiver("rb", "city-b", 0.130, 0.020),
                     normal_receiver("rc", "city-c", 0.230, 0.020)};
    return cfg;
}

/// Two classes drawn from the same latency profile.
inline netsim::ScenarioConfig identical_scenario(int iterations, std::uint64_t seed) {
    auto cfg = base_scenario(iterations, seed);
    cfg.receivers = {normal_receiver("ra", "left", 0.100, 0.020), normal_receiver("rb", "right", 0.100, 0.020)};
    return cfg;
}

/// Runs the real extraction path over simulator traces and groups the records by iteration.
inline std::vector<dataset::RecordGroup> extract_groups(const std::vector<netsim::ReceiverRun>& runs,
                                                        const MessengerProfile& profile) {
    std::vector<dataset::RecordGroup> groups;
    for (const auto& run : runs) {
        const auto matched = match_sequences(filter_messenger_traffic(run.trace, profile), profile);
        auto g = dataset::group_iterations(run.receiver_id, run.location_label, matched.records);
        groups.insert(groups.end(), g.begin(), g.end());
    }
    return groups;
}

inline std::vector<dataset::TimingSequenceSample> scenario_samples(const netsim::ScenarioConfig& cfg, int n = 5) {
    const auto runs = netsim::run_scenario(cfg);
    const auto groups = extract_groups(runs, cfg.messenger);
    return dataset::build_sequences(groups, n, dataset::infer_feature(groups)).samples;
}

inline dataset::TimingSequenceSample sample(std::string label, std::vector<double> values, int iteration = 0) {
    return {std::move(values), label, {label + "-rx", iteration}};
}

}  // namespace dnt::testing
