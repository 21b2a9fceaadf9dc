#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnt/exec.hpp"

namespace dnt::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

/// A position on the sphere in degrees.
struct GeoPoint {
    double latitude = 0.0;   ///< [-90, 90]
    double longitude = 0.0;  ///< [-180, 180]

    bool valid() const noexcept;
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Throws ConfigError when the point is outside the coordinate bounds.
void validate(const GeoPoint& p);

/// Haversine distance in km on a sphere of radius kEarthRadiusKm.
double great_circle_distance(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Row-major |points| x |points| distance matrix.
std::vector<double> distance_matrix(std::span<const GeoPoint> points, Exec exec = Exec::parallel);

/// Static IATA code -> coordinate lookup.
class IataTable {
public:
    IataTable() = default;
    explicit IataTable(std::map<std::string, GeoPoint> entries) : entries_(std::move(entries)) {}

    /// CSV with header `code,lat,lon`.
    static IataTable load(const std::filesystem::path& path);
    /// The table shipped in data/iata_codes.csv.
    static IataTable bundled();

    std::optional<GeoPoint> resolve(const std::string& code) const;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, GeoPoint> entries_;
};

struct ServerRecord {
    std::string messenger;
    std::string address;
    /// Absent when the row gave no coordinates and its code could not be resolved.
    std::optional<GeoPoint> location;
    /// Exactly three lowercase ASCII letters when present.
    std::optional<std::string> location_code;
};

bool is_location_code(const std::string& s) noexcept;

/// Reads the server table CSV (`messenger,address,code,lat,lon`). Rows with
/// empty lat/lon are resolved through `lookup` when given; codes that do not
/// resolve are kept with an empty location.
std::vector<ServerRecord> load_server_table(const std::filesystem::path& path, const IataTable* lookup = nullptr);

/// Parses "lat,lon" or a location code.
std::optional<GeoPoint> parse_location(const std::string& text, const IataTable& lookup);

}  // namespace dnt::geo
