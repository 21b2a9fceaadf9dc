#include "dnt/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <json.hpp>

#include "dnt/csv.hpp"
#include "dnt/errors.hpp"

namespace dnt::netsim {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kMicro = 1e6;
constexpr std::int32_t kMinMessageLen = 90;
constexpr std::int32_t kMaxMessageLen = 600;

std::int64_t to_micros(double seconds) { return std::llround(seconds * kMicro); }

bool valid_id(const std::string& id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
               c == '.';
    });
}

std::int32_t sample_length(const ByteRange& r, Rng& rng) {
    return std::uniform_int_distribution<std::int32_t>(r.lo, r.hi)(rng);
}

std::int32_t sample_message_length(const MessengerProfile& p, Rng& rng) {
    std::uniform_int_distribution<std::int32_t> dist(kMinMessageLen, kMaxMessageLen);
    while (true) {
        const auto len = dist(rng);
        if (!p.server_note_len.contains(len) && !p.delivery_note_len.contains(len)) return len;
    }
}

struct TimedEvent {
    std::int64_t t_us;
    std::int64_t seq;
    Direction dir;
    std::int32_t length;
};

struct UnitOutput {
    std::vector<TimedEvent> events;
    std::vector<TruthRecord> truth;
};

double hour_factor(const ScenarioConfig& cfg, std::int64_t t_us) {
    const std::int64_t wall = cfg.start_epoch + t_us / 1'000'000;
    const std::int64_t sec_of_day = ((wall % 86400) + 86400) % 86400;
    return cfg.hour_of_day_modifier[static_cast<std::size_t>(sec_of_day / 3600)];
}

UnitOutput simulate_unit(const ScenarioConfig& cfg, std::size_t receiver, int iteration) {
    Rng rng(derive_seed(cfg.rng_seed, {receiver, static_cast<std::uint64_t>(iteration)}));
    const ReceiverSpec& spec = cfg.receivers[receiver];
    const bool dual = cfg.messenger.mode == ConfirmationMode::dual;
    UnitOutput out;
    std::int64_t seq = static_cast<std::int64_t>(iteration) * cfg.messages_per_iteration * 3;
    const double iteration_start = iteration * cfg.iteration_period;
    for (int k = 0; k < cfg.messages_per_iteration; ++k) {
        const std::int64_t t_m = to_micros(iteration_start + schedule_offset(cfg, k));
        const double factor = hour_factor(cfg, t_m);
        const std::int32_t msg_len = sample_message_length(cfg.messenger, rng);
        const double d1 = (cfg.sender_to_server.sample(rng) + cfg.server_processing.sample(rng)) * factor;
        const double d2 = (spec.uplink.sample(rng) + spec.processing_delay.sample(rng)) * factor;
        // Drawn unconditionally so the other draws do not depend on the countermeasure setting.
        const double u = cfg.delivery_delay_max * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const std::int32_t n1_len = sample_length(cfg.messenger.server_note_len, rng);
        const std::int32_t n2_len = sample_length(cfg.messenger.delivery_note_len, rng);

        // Each component is at least one microsecond so event order stays causal.
        const std::int64_t d1_us = std::max<std::int64_t>(1, to_micros(d1));
        const std::int64_t d2_us = std::max<std::int64_t>(1, to_micros(d2));
        const std::int64_t u_us = to_micros(u);
        const std::int64_t t_n1 = t_m + d1_us;
        const std::int64_t t_n2 = t_n1 + d2_us + u_us;

        out.events.push_back({t_m, seq++, Direction::outbound, msg_len});
        if (dual) out.events.push_back({t_n1, seq++, Direction::inbound, n1_len});
        out.events.push_back({t_n2, seq++, Direction::inbound, n2_len});

        TruthRecord tr;
        tr.iteration = iteration;
        tr.msg_idx = k;
        tr.rtts.message_t = static_cast<double>(t_m) / kMicro;
        tr.rtts.rtt_sr = static_cast<double>(t_n2 - t_m) / kMicro;
        if (dual) {
            tr.rtts.rtt_sm = static_cast<double>(d1_us) / kMicro;
            tr.rtts.rtt_mr = static_cast<double>(t_n2 - t_n1) / kMicro;
        }
        tr.d1 = static_cast<double>(d1_us) / kMicro;
        tr.d2 = static_cast<double>(d2_us) / kMicro;
        tr.countermeasure = static_cast<double>(u_us) / kMicro;
        out.truth.push_back(tr);
    }
    return out;
}

ReceiverRun assemble(const ScenarioConfig& cfg, std::size_t r, std::vector<UnitOutput>& units) {
    const ReceiverSpec& spec = cfg.receivers[r];
    ReceiverRun run;
    run.receiver_id = spec.id;
    run.location_label = spec.location_label;
    run.network_type = spec.network_type;
    std::vector<TimedEvent> events;
    for (auto& u : units) {
        events.insert(events.end(), u.events.begin(), u.events.end());
        run.truth.insert(run.truth.end(), u.truth.begin(), u.truth.end());
    }
    std::sort(events.begin(), events.end(),
              [](const TimedEvent& a, const TimedEvent& b) { return std::tie(a.t_us, a.seq) < std::tie(b.t_us, b.seq); });
    run.trace.reserve(events.size());
    std::int64_t idx = 0;
    for (const auto& e : events) {
        run.trace.push_back({idx++, static_cast<double>(e.t_us) / kMicro, e.dir, e.length, cfg.server_address});
    }
    return run;
}

}  // namespace

void LatencyProfile::validate(const std::string& where) const {
    auto fail = [&](const std::string& field, const std::string& msg) { throw ConfigError(where + "." + field + ": " + msg); };
    std::visit(overloaded{
                   [&](const Lognormal& d) {
                       if (!std::isfinite(d.mu)) fail("mu", "must be finite");
                       if (!std::isfinite(d.sigma) || d.sigma < 0.0) fail("sigma", "must be >= 0");
                   },
                   [&](const TruncatedNormal& d) {
                       if (!std::isfinite(d.mean) || d.mean <= 0.0) fail("mean", "must be > 0");
                       if (!std::isfinite(d.std) || d.std < 0.0) fail("std", "must be >= 0");
                   },
                   [&](const ShiftedExponential& d) {
                       if (!std::isfinite(d.offset) || d.offset < 0.0) fail("offset", "must be >= 0");
                       if (!std::isfinite(d.rate) || d.rate <= 0.0) fail("rate", "must be > 0");
                   },
               },
               dist_);
}

double LatencyProfile::sample(Rng& rng) const {
    return std::visit(overloaded{
                          [&](const Lognormal& d) {
                              if (d.sigma == 0.0) return std::exp(d.mu);
                              return std::lognormal_distribution<double>(d.mu, d.sigma)(rng);
                          },
                          [&](const TruncatedNormal& d) {
                              if (d.std == 0.0) return d.mean;
                              std::normal_distribution<double> dist(d.mean, d.std);
                              double v = 0.0;
                              do {
                                  v = dist(rng);
                              } while (v <= 0.0);
                              return v;
                          },
                          [&](const ShiftedExponential& d) {
                              std::exponential_distribution<double> dist(d.rate);
                              double v = 0.0;
                              do {
                                  v = d.offset + dist(rng);
                              } while (v <= 0.0);
                              return v;
                          },
                      },
                      dist_);
}

double LatencyProfile::nominal_mean() const {
    return std::visit(overloaded{
                          [](const Lognormal& d) { return std::exp(d.mu + d.sigma * d.sigma / 2.0); },
                          [](const TruncatedNormal& d) { return d.mean; },
                          [](const ShiftedExponential& d) { return d.offset + 1.0 / d.rate; },
                      },
                      dist_);
}

std::string to_string(NetworkType t) { return t == NetworkType::wifi ? "wifi" : "cellular"; }

double schedule_offset(const ScenarioConfig& cfg, int k) {
    const int n = cfg.messages_per_iteration;
    if (k < n - 1) return k * cfg.short_interval;
    return (n >= 2 ? (n - 2) * cfg.short_interval + cfg.long_interval : 0.0);
}

void ScenarioConfig::validate() const {
    messenger.validate();
    sender_to_server.validate("sender_to_server");
    server_processing.validate("server_processing");
    if (receivers.empty()) throw ConfigError("receivers: at least one receiver required");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < receivers.size(); ++i) {
        const auto& r = receivers[i];
        const std::string where = "receivers[" + std::to_string(i) + "]";
        if (!valid_id(r.id)) throw ConfigError(where + ".id: must be non-empty [A-Za-z0-9_.-]");
        if (!ids.insert(r.id).second) throw ConfigError(where + ".id: duplicate '" + r.id + "'");
        if (r.location_label.empty()) throw ConfigError(where + ".location_label: must be non-empty");
        if (r.location_label.find(',') != std::string::npos) {
            throw ConfigError(where + ".location_label: must not contain ','");
        }
        r.uplink.validate(where + ".uplink");
        r.processing_delay.validate(where + ".processing_delay");
    }
    if (iterations < 1) throw ConfigError("iterations: must be >= 1");
    if (messages_per_iteration < 1) throw ConfigError("messages_per_iteration: must be >= 1");
    if (!(short_interval > 0.0) || !std::isfinite(short_interval)) throw ConfigError("short_interval: must be > 0");
    if (!(long_interval > 0.0) || !std::isfinite(long_interval)) throw ConfigError("long_interval: must be > 0");
    if (!(delivery_delay_max >= 0.0) || !std::isfinite(delivery_delay_max)) {
        throw ConfigError("delivery_delay_max: must be >= 0");
    }
    const double span = schedule_offset(*this, messages_per_iteration - 1);
    if (!(iteration_period >= span + kOrphanTimeoutS)) {
        throw ConfigError("iteration_period: must be >= schedule span + " + std::to_string(kOrphanTimeoutS) + " s (" +
                          std::to_string(span + kOrphanTimeoutS) + ")");
    }
    for (std::size_t h = 0; h < hour_of_day_modifier.size(); ++h) {
        if (!(hour_of_day_modifier[h] > 0.0) || !std::isfinite(hour_of_day_modifier[h])) {
            throw ConfigError("hour_of_day_modifier[" + std::to_string(h) + "]: must be > 0");
        }
    }
    if (filter_messenger_traffic(std::vector<PacketEvent>{{0, 0.0, Direction::inbound, 1, server_address}}, messenger)
            .empty()) {
        throw ConfigError("server_address: not admitted by the messenger's server_address_filter");
    }
}

std::vector<ReceiverRun> run_scenario(const ScenarioConfig& cfg, Exec exec) {
    cfg.validate();
    const std::size_t n_receivers = cfg.receivers.size();
    const auto n_units = static_cast<std::ptrdiff_t>(n_receivers * static_cast<std::size_t>(cfg.iterations));
    std::vector<UnitOutput> units(static_cast<std::size_t>(n_units));
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::ptrdiff_t u = 0; u < n_units; ++u) {
            units[u] = simulate_unit(cfg, static_cast<std::size_t>(u / cfg.iterations), static_cast<int>(u % cfg.iterations));
        }
    } else {
        for (std::ptrdiff_t u = 0; u < n_units; ++u) {
            units[u] = simulate_unit(cfg, static_cast<std::size_t>(u / cfg.iterations), static_cast<int>(u % cfg.iterations));
        }
    }
    std::vector<ReceiverRun> runs;
    runs.reserve(n_receivers);
    for (std::size_t r = 0; r < n_receivers; ++r) {
        std::vector<UnitOutput> mine(std::make_move_iterator(units.begin() + static_cast<std::ptrdiff_t>(r) * cfg.iterations),
                                     std::make_move_iterator(units.begin() + static_cast<std::ptrdiff_t>(r + 1) * cfg.iterations));
        runs.push_back(assemble(cfg, r, mine));
    }
    return runs;
}

void emit_trace(std::span<const PacketEvent> trace, const std::filesystem::path& path) {
    csv::write_file(path, trace_to_jsonl(trace));
}

std::string truth_csv(std::span<const ReceiverRun> runs) {
    std::vector<const ReceiverRun*> order;
    for (const auto& r : runs) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->receiver_id < b->receiver_id; });
    std::string out = std::string(kTruthHeader) + "\n";
    for (const auto* run : order) {
        for (const auto& t : run->truth) {
            out += run->receiver_id + "," + std::to_string(t.iteration) + "," + std::to_string(t.msg_idx) + "," +
                   csv::format_optional_seconds(t.rtts.rtt_sm) + "," + csv::format_seconds(t.rtts.rtt_sr) + "\n";
        }
    }
    return out;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown field");
        }
    }
}

double get_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + ": required");
    if (!obj[key].is_number()) throw ConfigError(where + "." + key + ": expected number");
    return obj[key].get<double>();
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError((where.empty() ? "" : where + ".") + key + ": wrong type");
    }
}

LatencyProfile parse_latency(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected object");
    const std::string type = get_or<std::string>(j, "type", "lognormal", where);
    LatencyProfile p;
    if (type == "lognormal") {
        reject_unknown(j, {"type", "mu", "sigma"}, where);
        p = LatencyProfile::lognormal(get_number(j, "mu", where), get_number(j, "sigma", where));
    } else if (type == "normal") {
        reject_unknown(j, {"type", "mean", "std"}, where);
        p = LatencyProfile::normal(get_number(j, "mean", where), get_number(j, "std", where));
    } else if (type == "shifted_exponential") {
        reject_unknown(j, {"type", "offset", "rate"}, where);
        p = LatencyProfile::shifted_exponential(get_number(j, "offset", where), get_number(j, "rate", where));
    } else {
        throw ConfigError(where + ".type: unknown distribution '" + type + "'");
    }
    p.validate(where);
    return p;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text, const ProfileSet& profiles, const std::string& source) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(source + ": expected object");
    reject_unknown(doc,
                   {"messenger", "sender_to_server", "server_processing", "receivers", "iterations",
                    "messages_per_iteration", "short_interval", "long_interval", "delivery_delay_max",
                    "iteration_period", "start_epoch", "hour_of_day_modifier", "server_address", "rng_seed"},
                   "");
    ScenarioConfig cfg;
    if (!doc.contains("messenger")) throw ConfigError("messenger: required");
    if (doc["messenger"].is_string()) {
        const auto name = doc["messenger"].get<std::string>();
        auto it = profiles.find(name);
        if (it == profiles.end()) throw ConfigError("messenger: unknown profile '" + name + "'");
        cfg.messenger = it->second;
    } else {
        json wrapped = {{"inline", doc["messenger"]}};
        cfg.messenger = parse_profiles(wrapped.dump(), "messenger").at("inline");
    }
    if (!doc.contains("sender_to_server")) throw ConfigError("sender_to_server: required");
    cfg.sender_to_server = parse_latency(doc["sender_to_server"], "sender_to_server");
    if (!doc.contains("server_processing")) throw ConfigError("server_processing: required");
    cfg.server_processing = parse_latency(doc["server_processing"], "server_processing");
    if (!doc.contains("receivers") || !doc["receivers"].is_array()) throw ConfigError("receivers: expected array");
    for (std::size_t i = 0; i < doc["receivers"].size(); ++i) {
        const json& r = doc["receivers"][i];
        const std::string where = "receivers[" + std::to_string(i) + "]";
        if (!r.is_object()) throw ConfigError(where + ": expected object");
        reject_unknown(r, {"id", "location_label", "network_type", "uplink", "processing_delay"}, where);
        ReceiverSpec spec;
        spec.id = get_or<std::string>(r, "id", "", where);
        spec.location_label = get_or<std::string>(r, "location_label", "", where);
        const auto nt = get_or<std::string>(r, "network_type", "wifi", where);
        if (nt == "wifi") {
            spec.network_type = NetworkType::wifi;
        } else if (nt == "cellular") {
            spec.network_type = NetworkType::cellular;
        } else {
            throw ConfigError(where + ".network_type: expected 'wifi' or 'cellular'");
        }
        if (!r.contains("uplink")) throw ConfigError(where + ".uplink: required");
        spec.uplink = parse_latency(r["uplink"], where + ".uplink");
        if (!r.contains("processing_delay")) throw ConfigError(where + ".processing_delay: required");
        spec.processing_delay = parse_latency(r["processing_delay"], where + ".processing_delay");
        cfg.receivers.push_back(std::move(spec));
    }
    cfg.iterations = get_or<int>(doc, "iterations", cfg.iterations, "");
    cfg.messages_per_iteration = get_or<int>(doc, "messages_per_iteration", cfg.messages_per_iteration, "");
    cfg.short_interval = get_or<double>(doc, "short_interval", cfg.short_interval, "");
    cfg.long_interval = get_or<double>(doc, "long_interval", cfg.long_interval, "");
    cfg.delivery_delay_max = get_or<double>(doc, "delivery_delay_max", cfg.delivery_delay_max, "");
    cfg.iteration_period = get_or<double>(doc, "iteration_period", cfg.iteration_period, "");
    cfg.start_epoch = get_or<std::int64_t>(doc, "start_epoch", cfg.start_epoch, "");
    if (doc.contains("hour_of_day_modifier")) {
        const auto v = get_or<std::vector<double>>(doc, "hour_of_day_modifier", {}, "");
        if (v.size() != 24) throw ConfigError("hour_of_day_modifier: expected 24 values");
        std::copy(v.begin(), v.end(), cfg.hour_of_day_modifier.begin());
    }
    cfg.server_address = get_or<std::string>(doc, "server_address", cfg.server_address, "");
    cfg.rng_seed = get_or<std::uint64_t>(doc, "rng_seed", cfg.rng_seed, "");
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path, const ProfileSet& profiles) {
    return parse_scenario(csv::read_file(path), profiles, path.string());
}

}  // namespace dnt::netsim
