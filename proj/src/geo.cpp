#include "dnt/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dnt/csv.hpp"
#include "dnt/errors.hpp"

namespace dnt::geo {

namespace {

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

bool GeoPoint::valid() const noexcept {
    return std::isfinite(latitude) && std::isfinite(longitude) && latitude >= -90.0 && latitude <= 90.0 &&
           longitude >= -180.0 && longitude <= 180.0;
}

void validate(const GeoPoint& p) {
    if (!std::isfinite(p.latitude) || p.latitude < -90.0 || p.latitude > 90.0) {
        throw ConfigError("latitude out of range [-90, 90]: " + std::to_string(p.latitude));
    }
    if (!std::isfinite(p.longitude) || p.longitude < -180.0 || p.longitude > 180.0) {
        throw ConfigError("longitude out of range [-180, 180]: " + std::to_string(p.longitude));
    }
}

double great_circle_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
    if (a == b) return 0.0;
    const double lat1 = radians(a.latitude);
    const double lat2 = radians(b.latitude);
    const double dlat = lat2 - lat1;
    const double dlon = radians(b.longitude - a.longitude);
    const double s_lat = std::sin(dlat / 2.0);
    const double s_lon = std::sin(dlon / 2.0);
    double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::vector<double> distance_matrix(std::span<const GeoPoint> points, Exec exec) {
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<double> out(points.size() * points.size(), 0.0);
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            for (std::ptrdiff_t j = 0; j < n; ++j) {
                out[i * n + j] = great_circle_distance(points[i], points[j]);
            }
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            for (std::ptrdiff_t j = 0; j < n; ++j) {
                out[i * n + j] = great_circle_distance(points[i], points[j]);
            }
        }
    }
    return out;
}

bool is_location_code(const std::string& s) noexcept {
    if (s.size() != 3) return false;
    for (char c : s) {
        if (c < 'a' || c > 'z') return false;
    }
    return true;
}

IataTable IataTable::load(const std::filesystem::path& path) {
    const std::string src = path.string();
    std::map<std::string, GeoPoint> entries;
    for (const auto& row : csv::read(path, "code,lat,lon")) {
        const std::string& code = row.fields[0];
        if (!is_location_code(code)) throw ParseError(src, row.line, "code", "not a 3-letter lowercase code");
        GeoPoint p{csv::parse_double(row, 1, src, "lat"), csv::parse_double(row, 2, src, "lon")};
        if (!p.valid()) throw ParseError(src, row.line, "lat/lon", "coordinate out of range");
        entries[code] = p;
    }
    return IataTable(std::move(entries));
}

IataTable IataTable::bundled() {
    return load(std::filesystem::path(DNT_DATA_DIR) / "iata_codes.csv");
}

std::optional<GeoPoint> IataTable::resolve(const std::string& code) const {
    auto it = entries_.find(code);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<ServerRecord> load_server_table(const std::filesystem::path& path, const IataTable* lookup) {
    const std::string src = path.string();
    std::vector<ServerRecord> out;
    for (const auto& row : csv::read(path, "messenger,address,code,lat,lon")) {
        ServerRecord rec;
        rec.messenger = row.fields[0];
        rec.address = row.fields[1];
        if (rec.messenger.empty()) throw ParseError(src, row.line, "messenger", "empty");
        if (rec.address.empty()) throw ParseError(src, row.line, "address", "empty");
        if (!row.fields[2].empty()) {
            if (!is_location_code(row.fields[2])) {
                throw ParseError(src, row.line, "code", "must be exactly 3 lowercase letters: '" + row.fields[2] + "'");
            }
            rec.location_code = row.fields[2];
        }
        const bool has_lat = !row.fields[3].empty();
        const bool has_lon = !row.fields[4].empty();
        if (has_lat != has_lon) {
            throw ParseError(src, row.line, has_lat ? "lon" : "lat", "latitude and longitude must be given together");
        }
        if (has_lat) {
            const double lat = csv::parse_double(row, 3, src, "lat");
            const double lon = csv::parse_double(row, 4, src, "lon");
            if (lat < -90.0 || lat > 90.0) throw ParseError(src, row.line, "lat", "out of range [-90, 90]");
            if (lon < -180.0 || lon > 180.0) throw ParseError(src, row.line, "lon", "out of range [-180, 180]");
            rec.location = GeoPoint{lat, lon};
        } else if (rec.location_code && lookup) {
            rec.location = lookup->resolve(*rec.location_code);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::optional<GeoPoint> parse_location(const std::string& text, const IataTable& lookup) {
    const auto parts = csv::split(text);
    if (parts.size() == 2) {
        csv::Row row{0, parts};
        GeoPoint p{csv::parse_double(row, 0, "location", "lat"), csv::parse_double(row, 1, "location", "lon")};
        validate(p);
        return p;
    }
    return lookup.resolve(csv::trim(text));
}

}  // namespace dnt::geo
