#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gfusion/evaluation.hpp"
#include "gfusion/factors.hpp"
#include "gfusion/geodesy.hpp"
#include "gfusion/simulate.hpp"

namespace gfusion {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a64_hex(std::string_view bytes);

// --- trajectory files: `t px py pz qw qx qy qz` ----------------------------

Trajectory parse_trajectory(std::string_view text);
Trajectory read_trajectory(const std::filesystem::path& path);
std::string format_trajectory(const Trajectory& trajectory);
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);

// --- sensor streams ---------------------------------------------------------

enum class GpsFrame { kEnu, kLla };

struct GpsFile {
  GpsFrame frame = GpsFrame::kEnu;
  std::optional<GeoPoint> origin;        // first record, LLA files only
  std::vector<GpsMeasurement> measurements;  // ENU world frame
};

/// `# frame: enu|lla` header, then `t x y z nsats` or `t lat lon alt nsats`.
/// LLA records are converted to ENU about the first record.
GpsFile parse_gps(std::string_view text);
GpsFile read_gps(const std::filesystem::path& path);
/// ENU measurements written either as-is or converted to LLA about origin.
void write_gps(const std::filesystem::path& path, const std::vector<GpsMeasurement>& gps,
               GpsFrame frame, const GeoPoint& origin = {});

/// `t mx my mz`.
std::vector<MagMeasurement> parse_mag(std::string_view text);
std::vector<MagMeasurement> read_mag(const std::filesystem::path& path);
void write_mag(const std::filesystem::path& path, const std::vector<MagMeasurement>& mag);

enum class BaroQuantity { kHeight, kPressure };

struct BaroFile {
  BaroQuantity quantity = BaroQuantity::kHeight;
  std::vector<double> timestamps;
  std::vector<double> values;  // m or Pa
};

/// `# quantity: height|pressure` header, then `t value`.
BaroFile parse_baro(std::string_view text);
BaroFile read_baro(const std::filesystem::path& path);
void write_baro(const std::filesystem::path& path, const BaroFile& baro);

/// Heights relative to the reference. Pressure files use reference_pressure,
/// or the first sample when none is given; height files pass through.
std::vector<BaroSample> baro_heights(const BaroFile& baro,
                                     std::optional<double> reference_pressure,
                                     double meters_per_pascal = kDefaultMetersPerPascal);

// --- flat key-value files -------------------------------------------------

struct KeyValue {
  std::string value;
  int line = 0;
};

/// `key = value` per line, `#` comments. Duplicate keys are an error.
std::map<std::string, KeyValue> parse_key_values(std::string_view text);

}  // namespace gfusion
