#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnt {

enum class Direction { outbound, inbound };

/// One captured packet as seen from the sender device.
struct PacketEvent {
    std::int64_t index = 0;
    double t = 0.0;  ///< seconds since capture start
    Direction direction = Direction::outbound;
    std::int32_t length = 0;  ///< bytes
    std::string peer;

    friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

/// Inclusive byte range.
struct ByteRange {
    std::int32_t lo = 0;
    std::int32_t hi = 0;

    bool contains(std::int32_t len) const noexcept { return len >= lo && len <= hi; }
    bool overlaps(const ByteRange& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

enum class ConfirmationMode { dual, single };

/// Per-messenger notification-matching rules.
struct MessengerProfile {
    std::string name;
    ByteRange server_note_len;
    ByteRange delivery_note_len;  ///< also the combined-confirmation range in single mode
    ConfirmationMode mode = ConfirmationMode::dual;
    /// Peer address prefixes; an empty list admits every peer.
    std::vector<std::string> server_address_filter;

    /// Throws ConfigError on empty ranges or overlapping dual-mode ranges.
    void validate() const;
    friend bool operator==(const MessengerProfile&, const MessengerProfile&) = default;
};

using ProfileSet = std::map<std::string, MessengerProfile>;

/// Packet-length rules for Signal, Threema, WhatsApp and the single-confirmation Signal variant.
ProfileSet default_profiles();
ProfileSet load_profiles(const std::filesystem::path& path);
ProfileSet parse_profiles(const std::string& json_text, const std::string& source = "<profiles>");
std::string profiles_to_json(const ProfileSet& profiles);

/// The three timings attached to one sent message.
struct NotificationRtts {
    double message_t = 0.0;
    std::optional<double> rtt_sm;  ///< sender <-> messenger server; absent in single mode
    double rtt_sr = 0.0;           ///< sender <-> receiver
    std::optional<double> rtt_mr;  ///< rtt_sr - rtt_sm; absent in single mode

    friend bool operator==(const NotificationRtts&, const NotificationRtts&) = default;
};

enum class PacketKind { message_candidate, server_note, delivery_note, other };

/// Server notes left unpaired longer than this (trace time) are declared orphaned.
inline constexpr double kOrphanTimeoutS = 30.0;

struct MatchResult {
    std::vector<NotificationRtts> records;
    std::size_t orphaned = 0;   ///< notes that never found a partner
    std::size_t ambiguous = 0;  ///< delivery notes dropped because several messages were in flight
};

std::vector<PacketEvent> filter_messenger_traffic(std::span<const PacketEvent> trace,
                                                  const MessengerProfile& profile);

PacketKind classify_packet(const PacketEvent& p, const MessengerProfile& profile) noexcept;

/// Pairs notifications with the message that triggered them.
///
/// Each server note binds to the latest outbound packet sent before it. A
/// delivery note closes the single pending server note; if more than one is
/// pending (a later message was acknowledged by the server first) the
/// delivery note is dropped as ambiguous and the older pending notes become
/// orphans. Single mode binds each delivery note to the latest unused
/// outbound packet.
MatchResult match_sequences(std::span<const PacketEvent> trace, const MessengerProfile& profile);

/// Parses packet-trace JSONL. Events must be sorted by t with strictly increasing idx.
std::vector<PacketEvent> parse_trace(std::istream& in, const std::string& source = "<trace>");
std::vector<PacketEvent> read_trace_file(const std::filesystem::path& path);
std::string trace_to_jsonl(std::span<const PacketEvent> trace);

/// match_sequences(filter_messenger_traffic(read_trace_file(path))).
MatchResult extract_trace_file(const std::filesystem::path& path, const MessengerProfile& profile);

/// A row of the extraction CSV.
struct ExtractedRecord {
    std::string trace_id;
    NotificationRtts rtts;
};

inline constexpr const char* kExtractionHeader = "trace_id,message_t,rtt_sm,rtt_sr,rtt_mr";

std::string extraction_csv(std::span<const ExtractedRecord> rows);
std::vector<ExtractedRecord> read_extraction_csv(const std::filesystem::path& path);

}  // namespace dnt
