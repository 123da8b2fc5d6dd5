#include "gfusion/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gfusion/errors.hpp"

namespace gfusion {
namespace {

struct Line {
  int number;
  std::string_view text;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    ++number;
    const auto len = (end == std::string_view::npos ? text.size() : end) - start;
    lines.push_back({number, text.substr(start, len)});
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',' || s[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != ',' && s[i] != '\r') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

double parse_number(std::string_view field, int line) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("invalid number '" + std::string(field) + "'", line);
  }
  return v;
}

std::vector<double> parse_record(std::string_view text, std::size_t expected, int line) {
  const auto fields = split_fields(text);
  if (fields.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " fields, got " +
                         std::to_string(fields.size()),
                     line);
  }
  std::vector<double> values;
  values.reserve(expected);
  for (auto f : fields) values.push_back(parse_number(f, line));
  return values;
}

// `# key: value` before the first record.
std::optional<std::pair<std::string, std::string>> header(std::string_view comment) {
  auto body = trim(comment.substr(1));
  const auto colon = body.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto key = trim(body.substr(0, colon));
  if (key.empty() || key.find(' ') != std::string_view::npos) return std::nullopt;
  return std::pair{std::string(key), std::string(trim(body.substr(colon + 1)))};
}

void check_increasing(double t, std::optional<double>& last, int line) {
  if (last && !(t > *last)) throw ParseError("timestamps are not strictly increasing", line);
  last = t;
}

std::string file_name_context(const std::filesystem::path& path, const std::exception& e) {
  return path.string() + ": " + e.what();
}

template <class F>
auto with_path(const std::filesystem::path& path, F&& parse) {
  const std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ParseError(file_name_context(path, e));
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place: " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

Trajectory parse_trajectory(std::string_view text) {
  Trajectory traj;
  std::optional<double> last;
  for (const auto& line : split_lines(text)) {
    const auto s = trim(line.text);
    if (s.empty() || s.front() == '#') continue;
    const auto v = parse_record(s, 8, line.number);
    check_increasing(v[0], last, line.number);
    const double qn = std::sqrt(v[4] * v[4] + v[5] * v[5] + v[6] * v[6] + v[7] * v[7]);
    if (std::abs(qn - 1.0) > 1e-3) {
      throw ParseError("quaternion is not unit (norm " + format_double(qn) + ")", line.number);
    }
    traj.push_back(v[0], {{v[1], v[2], v[3]}, UnitQuaternion(v[4], v[5], v[6], v[7])});
  }
  if (traj.empty()) throw ParseError("trajectory file contains no records");
  return traj;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  return with_path(path, [](const std::string& t) { return parse_trajectory(t); });
}

std::string format_trajectory(const Trajectory& trajectory) {
  std::string out = "# t px py pz qw qx qy qz\n";
  for (const auto& s : trajectory) {
    const auto& p = s.pose.position;
    const auto& q = s.pose.orientation;
    for (double v : {s.timestamp, p.x(), p.y(), p.z(), q.w(), q.x(), q.y()}) {
      out += format_double(v);
      out += ' ';
    }
    out += format_double(q.z());
    out += '\n';
  }
  return out;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  atomic_write(path, format_trajectory(trajectory));
}

GpsFile parse_gps(std::string_view text) {
  GpsFile file;
  std::optional<GpsFrame> frame;
  std::optional<EnuOrigin> origin;
  std::optional<double> last;
  for (const auto& line : split_lines(text)) {
    const auto s = trim(line.text);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const auto h = header(s);
      if (!h || h->first != "frame") continue;
      GpsFrame declared;
      if (h->second == "enu") {
        declared = GpsFrame::kEnu;
      } else if (h->second == "lla") {
        declared = GpsFrame::kLla;
      } else {
        throw ParseError("unknown gps frame '" + h->second + "'", line.number);
      }
      if (frame && *frame != declared) throw ParseError("mixed gps frames in one file", line.number);
      frame = declared;
      continue;
    }
    if (!frame) throw ParseError("gps file lacks a '# frame: enu|lla' header", line.number);
    const auto v = parse_record(s, 5, line.number);
    check_increasing(v[0], last, line.number);
    if (v[4] < 0.0 || v[4] != std::floor(v[4])) {
      throw ParseError("satellite count must be a nonnegative integer", line.number);
    }
    GpsMeasurement m;
    m.timestamp = v[0];
    m.satellites = static_cast<int>(v[4]);
    if (*frame == GpsFrame::kEnu) {
      m.position = {v[1], v[2], v[3]};
    } else {
      const GeoPoint p{v[1], v[2], v[3]};
      try {
        validate(p);
      } catch (const DomainError& e) {
        throw ParseError(e.what(), line.number);
      }
      if (!origin) {
        origin.emplace(p);
        file.origin = p;
      }
      m.position = lla_to_enu(p, *origin);
    }
    file.measurements.push_back(m);
  }
  if (!frame) throw ParseError("gps file lacks a '# frame: enu|lla' header");
  file.frame = *frame;
  return file;
}

GpsFile read_gps(const std::filesystem::path& path) {
  return with_path(path, [](const std::string& t) { return parse_gps(t); });
}

void write_gps(const std::filesystem::path& path, const std::vector<GpsMeasurement>& gps,
               GpsFrame frame, const GeoPoint& origin) {
  std::string out = frame == GpsFrame::kEnu ? "# frame: enu\n# t x y z nsats\n"
                                            : "# frame: lla\n# t lat lon alt nsats\n";
  const EnuOrigin enu(origin);
  for (const auto& m : gps) {
    Eigen::Vector3d v = m.position;
    if (frame == GpsFrame::kLla) {
      const GeoPoint p = enu_to_lla(m.position, enu);
      v = {p.latitude, p.longitude, p.altitude};
    }
    out += format_double(m.timestamp) + ' ' + format_double(v.x()) + ' ' +
           format_double(v.y()) + ' ' + format_double(v.z()) + ' ' +
           std::to_string(std::max(m.satellites, 0)) + '\n';
  }
  atomic_write(path, out);
}

std::vector<MagMeasurement> parse_mag(std::string_view text) {
  std::vector<MagMeasurement> out;
  std::optional<double> last;
  for (const auto& line : split_lines(text)) {
    const auto s = trim(line.text);
    if (s.empty() || s.front() == '#') continue;
    const auto v = parse_record(s, 4, line.number);
    check_increasing(v[0], last, line.number);
    out.push_back({{v[1], v[2], v[3]}, v[0]});
  }
  return out;
}

std::vector<MagMeasurement> read_mag(const std::filesystem::path& path) {
  return with_path(path, [](const std::string& t) { return parse_mag(t); });
}

void write_mag(const std::filesystem::path& path, const std::vector<MagMeasurement>& mag) {
  std::string out = "# t mx my mz\n";
  for (const auto& m : mag) {
    out += format_double(m.timestamp) + ' ' + format_double(m.field.x()) + ' ' +
           format_double(m.field.y()) + ' ' + format_double(m.field.z()) + '\n';
  }
  atomic_write(path, out);
}

BaroFile parse_baro(std::string_view text) {
  BaroFile file;
  std::optional<BaroQuantity> quantity;
  std::optional<double> last;
  for (const auto& line : split_lines(text)) {
    const auto s = trim(line.text);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const auto h = header(s);
      if (!h || h->first != "quantity") continue;
      BaroQuantity declared;
      if (h->second == "height") {
        declared = BaroQuantity::kHeight;
      } else if (h->second == "pressure") {
        declared = BaroQuantity::kPressure;
      } else {
        throw ParseError("unknown barometer quantity '" + h->second + "'", line.number);
      }
      if (quantity && *quantity != declared) {
        throw ParseError("mixed barometer quantities in one file", line.number);
      }
      quantity = declared;
      continue;
    }
    if (!quantity) {
      throw ParseError("barometer file lacks a '# quantity: height|pressure' header",
                       line.number);
    }
    const auto v = parse_record(s, 2, line.number);
    check_increasing(v[0], last, line.number);
    if (*quantity == BaroQuantity::kPressure && !(v[1] > 0.0)) {
      throw ParseError("pressure must be positive", line.number);
    }
    file.timestamps.push_back(v[0]);
    file.values.push_back(v[1]);
  }
  if (!quantity) throw ParseError("barometer file lacks a '# quantity: height|pressure' header");
  file.quantity = *quantity;
  return file;
}

BaroFile read_baro(const std::filesystem::path& path) {
  return with_path(path, [](const std::string& t) { return parse_baro(t); });
}

void write_baro(const std::filesystem::path& path, const BaroFile& baro) {
  std::string out = baro.quantity == BaroQuantity::kHeight
                        ? "# quantity: height\n# t height_m\n"
                        : "# quantity: pressure\n# t pressure_pa\n";
  for (std::size_t i = 0; i < baro.timestamps.size(); ++i) {
    out += format_double(baro.timestamps[i]) + ' ' + format_double(baro.values[i]) + '\n';
  }
  atomic_write(path, out);
}

std::vector<BaroSample> baro_heights(const BaroFile& baro,
                                     std::optional<double> reference_pressure,
                                     double meters_per_pascal) {
  std::vector<BaroSample> out;
  out.reserve(baro.values.size());
  if (baro.values.empty()) return out;
  const double ref = reference_pressure.value_or(baro.values.front());
  for (std::size_t i = 0; i < baro.values.size(); ++i) {
    const double h = baro.quantity == BaroQuantity::kHeight
                         ? baro.values[i]
                         : pressure_to_height(baro.values[i], ref, meters_per_pascal);
    out.push_back({baro.timestamps[i], h});
  }
  return out;
}

std::map<std::string, KeyValue> parse_key_values(std::string_view text) {
  std::map<std::string, KeyValue> out;
  for (const auto& line : split_lines(text)) {
    auto s = line.text;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line.number);
    const std::string key(trim(s.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key", line.number);
    if (out.contains(key)) throw ParseError("duplicate key '" + key + "'", line.number);
    out[key] = {std::string(trim(s.substr(eq + 1))), line.number};
  }
  return out;
}

}  // namespace gfusion
