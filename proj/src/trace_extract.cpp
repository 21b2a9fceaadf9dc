#include "dnt/trace_extract.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dnt/csv.hpp"
#include "dnt/errors.hpp"

namespace dnt {

using nlohmann::json;

namespace {

const char* mode_name(ConfirmationMode m) { return m == ConfirmationMode::dual ? "dual" : "single"; }

ByteRange range_from_json(const json& j, const std::string& where) {
    if (j.is_number_integer()) {
        const auto v = j.get<std::int32_t>();
        return {v, v};
    }
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw ConfigError(where + ": expected [lo, hi] integer pair");
    }
    return {j[0].get<std::int32_t>(), j[1].get<std::int32_t>()};
}

}  // namespace

void MessengerProfile::validate() const {
    if (name.empty()) throw ConfigError("profile: empty name");
    for (const auto* r : {&server_note_len, &delivery_note_len}) {
        if (r->lo <= 0 || r->hi < r->lo) {
            throw ConfigError("profile " + name + ": empty or non-positive byte range [" + std::to_string(r->lo) +
                              ", " + std::to_string(r->hi) + "]");
        }
    }
    if (mode == ConfirmationMode::dual && server_note_len.overlaps(delivery_note_len)) {
        throw ConfigError("profile " + name + ": server and delivery note ranges overlap");
    }
}

ProfileSet default_profiles() {
    ProfileSet out;
    out["signal"] = {"signal", {123, 124}, {773, 828}, ConfirmationMode::dual, {}};
    out["threema"] = {"threema", {38, 38}, {158, 390}, ConfirmationMode::dual, {}};
    out["whatsapp"] = {"whatsapp", {68, 69}, {61, 62}, ConfirmationMode::dual, {}};
    // Combined server+receiver confirmation; only rtt_sr is observable.
    out["signal-single"] = {"signal-single", {123, 124}, {773, 828}, ConfirmationMode::single, {}};
    return out;
}

ProfileSet parse_profiles(const std::string& json_text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(source + ": expected an object keyed by messenger name");
    ProfileSet out;
    for (const auto& [key, val] : doc.items()) {
        const std::string where = source + ": " + key;
        MessengerProfile p;
        p.name = key;
        if (!val.contains("server_note_len") || !val.contains("delivery_note_len")) {
            throw ConfigError(where + ": server_note_len and delivery_note_len are required");
        }
        p.server_note_len = range_from_json(val["server_note_len"], where + ".server_note_len");
        p.delivery_note_len = range_from_json(val["delivery_note_len"], where + ".delivery_note_len");
        const std::string mode = val.value("confirmation_mode", std::string("dual"));
        if (mode == "dual") {
            p.mode = ConfirmationMode::dual;
        } else if (mode == "single") {
            p.mode = ConfirmationMode::single;
        } else {
            throw ConfigError(where + ".confirmation_mode: expected 'dual' or 'single'");
        }
        if (val.contains("server_address_filter")) {
            p.server_address_filter = val["server_address_filter"].get<std::vector<std::string>>();
        }
        p.validate();
        out[key] = std::move(p);
    }
    return out;
}

ProfileSet load_profiles(const std::filesystem::path& path) {
    return parse_profiles(csv::read_file(path), path.string());
}

std::string profiles_to_json(const ProfileSet& profiles) {
    json doc = json::object();
    for (const auto& [name, p] : profiles) {
        doc[name] = {
            {"server_note_len", {p.server_note_len.lo, p.server_note_len.hi}},
            {"delivery_note_len", {p.delivery_note_len.lo, p.delivery_note_len.hi}},
            {"confirmation_mode", mode_name(p.mode)},
            {"server_address_filter", p.server_address_filter},
        };
    }
    return doc.dump(2) + "\n";
}

std::vector<PacketEvent> filter_messenger_traffic(std::span<const PacketEvent> trace,
                                                  const MessengerProfile& profile) {
    std::vector<PacketEvent> out;
    for (const auto& e : trace) {
        bool keep = profile.server_address_filter.empty();
        for (const auto& prefix : profile.server_address_filter) {
            if (e.peer.starts_with(prefix)) {
                keep = true;
                break;
            }
        }
        if (keep) out.push_back(e);
    }
    return out;
}

PacketKind classify_packet(const PacketEvent& p, const MessengerProfile& profile) noexcept {
    if (p.direction == Direction::outbound) return PacketKind::message_candidate;
    if (profile.mode == ConfirmationMode::dual && profile.server_note_len.contains(p.length)) {
        return PacketKind::server_note;
    }
    if (profile.delivery_note_len.contains(p.length)) return PacketKind::delivery_note;
    return PacketKind::other;
}

namespace {

struct PendingNote {
    double message_t;
    double note_t;
};

MatchResult match_dual(std::span<const PacketEvent> trace, const MessengerProfile& profile) {
    MatchResult result;
    std::optional<double> last_outbound;
    std::deque<PendingNote> pending;

    for (const auto& e : trace) {
        while (!pending.empty() && e.t - pending.front().note_t > kOrphanTimeoutS) {
            pending.pop_front();
            ++result.orphaned;
        }
        switch (classify_packet(e, profile)) {
            case PacketKind::message_candidate:
                last_outbound = e.t;
                break;
            case PacketKind::server_note:
                if (!last_outbound || *last_outbound >= e.t) {
                    ++result.orphaned;
                } else {
                    pending.push_back({*last_outbound, e.t});
                }
                break;
            case PacketKind::delivery_note:
                if (pending.empty()) {
                    ++result.orphaned;
                } else if (pending.size() > 1) {
                    ++result.ambiguous;
                    result.orphaned += pending.size() - 1;
                    pending.erase(pending.begin(), pending.end() - 1);
                } else {
                    const PendingNote n1 = pending.front();
                    pending.pop_front();
                    NotificationRtts r;
                    r.message_t = n1.message_t;
                    r.rtt_sm = n1.note_t - n1.message_t;
                    r.rtt_sr = e.t - n1.message_t;
                    r.rtt_mr = r.rtt_sr - *r.rtt_sm;
                    result.records.push_back(r);
                }
                break;
            case PacketKind::other:
                break;
        }
    }
    result.orphaned += pending.size();
    return result;
}

MatchResult match_single(std::span<const PacketEvent> trace, const MessengerProfile& profile) {
    MatchResult result;
    std::optional<double> last_outbound;
    bool used = true;
    for (const auto& e : trace) {
        switch (classify_packet(e, profile)) {
            case PacketKind::message_candidate:
                last_outbound = e.t;
                used = false;
                break;
            case PacketKind::delivery_note:
                if (!last_outbound || used || *last_outbound >= e.t || e.t - *last_outbound > kOrphanTimeoutS) {
                    ++result.orphaned;
                } else {
                    NotificationRtts r;
                    r.message_t = *last_outbound;
                    r.rtt_sr = e.t - *last_outbound;
                    result.records.push_back(r);
                    used = true;
                }
                break;
            default:
                break;
        }
    }
    return result;
}

}  // namespace

MatchResult match_sequences(std::span<const PacketEvent> trace, const MessengerProfile& profile) {
    return profile.mode == ConfirmationMode::dual ? match_dual(trace, profile) : match_single(trace, profile);
}

std::vector<PacketEvent> parse_trace(std::istream& in, const std::string& source) {
    std::vector<PacketEvent> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(source, lineno, "", std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(source, lineno, "", "expected a JSON object");
        auto require = [&](const char* key) -> const json& {
            if (!obj.contains(key)) throw ParseError(source, lineno, key, "missing key");
            return obj[key];
        };
        PacketEvent e;
        const json& idx = require("idx");
        if (!idx.is_number_integer()) throw ParseError(source, lineno, "idx", "expected integer");
        e.index = idx.get<std::int64_t>();
        const json& t = require("t");
        if (!t.is_number() || !std::isfinite(t.get<double>()) || t.get<double>() < 0.0) {
            throw ParseError(source, lineno, "t", "expected non-negative number");
        }
        e.t = t.get<double>();
        const json& dir = require("dir");
        if (dir == "in") {
            e.direction = Direction::inbound;
        } else if (dir == "out") {
            e.direction = Direction::outbound;
        } else {
            throw ParseError(source, lineno, "dir", "expected \"in\" or \"out\"");
        }
        const json& len = require("len");
        if (!len.is_number_integer() || len.get<std::int64_t>() <= 0 || len.get<std::int64_t>() > INT32_MAX) {
            throw ParseError(source, lineno, "len", "expected positive integer");
        }
        e.length = len.get<std::int32_t>();
        const json& peer = require("peer");
        if (!peer.is_string()) throw ParseError(source, lineno, "peer", "expected string");
        e.peer = peer.get<std::string>();
        if (!out.empty()) {
            if (e.t < out.back().t) throw ParseError(source, lineno, "t", "events not sorted by time");
            if (e.index <= out.back().index) throw ParseError(source, lineno, "idx", "index not strictly increasing");
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<PacketEvent> read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_trace(in, path.string());
}

std::string trace_to_jsonl(std::span<const PacketEvent> trace) {
    std::string out;
    char tbuf[48];
    for (const auto& e : trace) {
        // Fixed microsecond rendering keeps files byte-stable.
        std::snprintf(tbuf, sizeof tbuf, "%.6f", e.t);
        json peer = e.peer;
        out += "{\"idx\":" + std::to_string(e.index) + ",\"t\":" + tbuf + ",\"dir\":\"" +
               (e.direction == Direction::inbound ? "in" : "out") + "\",\"len\":" + std::to_string(e.length) +
               ",\"peer\":" + peer.dump() + "}\n";
    }
    return out;
}

MatchResult extract_trace_file(const std::filesystem::path& path, const MessengerProfile& profile) {
    const auto trace = read_trace_file(path);
    const auto filtered = filter_messenger_traffic(trace, profile);
    return match_sequences(filtered, profile);
}

std::string extraction_csv(std::span<const ExtractedRecord> rows) {
    std::string out = std::string(kExtractionHeader) + "\n";
    for (const auto& r : rows) {
        out += r.trace_id + "," + csv::format_seconds(r.rtts.message_t) + "," +
               csv::format_optional_seconds(r.rtts.rtt_sm) + "," + csv::format_seconds(r.rtts.rtt_sr) + "," +
               csv::format_optional_seconds(r.rtts.rtt_mr) + "\n";
    }
    return out;
}

std::vector<ExtractedRecord> read_extraction_csv(const std::filesystem::path& path) {
    const std::string src = path.string();
    std::vector<ExtractedRecord> out;
    for (const auto& row : csv::read(path, kExtractionHeader)) {
        ExtractedRecord r;
        r.trace_id = row.fields[0];
        if (r.trace_id.empty()) throw ParseError(src, row.line, "trace_id", "empty");
        r.rtts.message_t = csv::parse_double(row, 1, src, "message_t");
        r.rtts.rtt_sm = csv::parse_optional_double(row, 2, src, "rtt_sm");
        r.rtts.rtt_sr = csv::parse_double(row, 3, src, "rtt_sr");
        r.rtts.rtt_mr = csv::parse_optional_double(row, 4, src, "rtt_mr");
        if (r.rtts.rtt_sm.has_value() != r.rtts.rtt_mr.has_value()) {
            throw ParseError(src, row.line, "rtt_mr", "rtt_sm and rtt_mr must be both present or both empty");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dnt
