#include "aeronet/geo_mobility.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"

namespace aeronet {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no, const char* name) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid " + name + " '" +
                     std::string(field) + "'");
  }
  return value;
}

double round_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

void WorldExtent::validate() const {
  if (!(x_max > 0.0) || !(y_max > 0.0)) {
    throw ValidationError("world extent must have positive x_max and y_max");
  }
  if (x_max > kMaxProjectionSpanMeters || y_max > kMaxProjectionSpanMeters) {
    throw ValidationError("world extent spans more than 100 km; equirectangular projection "
                          "is not accurate enough");
  }
  if (origin_lat < -90.0 || origin_lat > 90.0 || origin_lon < -180.0 || origin_lon > 180.0) {
    throw ValidationError("world extent origin is not a valid lat/lon");
  }
}

Point2 WorldExtent::clamp(Point2 p) const noexcept {
  return {std::clamp(p.x, 0.0, x_max), std::clamp(p.y, 0.0, y_max)};
}

std::vector<Point2> TraceSet::snapshot(std::size_t slot) const {
  std::vector<Point2> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back(u.positions.at(slot));
  return out;
}

std::vector<UserCheckins> parse_checkins_csv(const std::string& text, std::size_t min_reports) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError("line 1: missing header row");
  ++line_no;
  {
    const auto header = split_fields(line);
    const bool ok = header.size() == 4 && header[0] == "user_id" && header[1] == "timestamp" &&
                    header[2] == "lat" && header[3] == "lon";
    if (!ok) throw ParseError("line 1: expected header 'user_id,timestamp,lat,lon'");
  }

  std::vector<UserCheckins> users;
  std::unordered_map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError("line " + std::to_string(line_no) + ": empty user_id");
    RawCheckin c;
    c.user_id = std::string(fields[0]);
    c.timestamp = parse_double(fields[1], line_no, "timestamp");
    c.lat = parse_double(fields[2], line_no, "lat");
    c.lon = parse_double(fields[3], line_no, "lon");
    if (c.lat < -90.0 || c.lat > 90.0) {
      throw ParseError("line " + std::to_string(line_no) + ": latitude out of range");
    }
    if (c.lon < -180.0 || c.lon > 180.0) {
      throw ParseError("line " + std::to_string(line_no) + ": longitude out of range");
    }
    auto [it, inserted] = index.try_emplace(c.user_id, users.size());
    if (inserted) users.push_back(UserCheckins{c.user_id, {}});
    users[it->second].checkins.push_back(std::move(c));
  }

  std::vector<UserCheckins> kept;
  for (auto& u : users) {
    std::stable_sort(u.checkins.begin(), u.checkins.end(),
                     [](const RawCheckin& a, const RawCheckin& b) { return a.timestamp < b.timestamp; });
    auto last = std::unique(u.checkins.begin(), u.checkins.end(),
                            [](const RawCheckin& a, const RawCheckin& b) { return a.timestamp == b.timestamp; });
    u.checkins.erase(last, u.checkins.end());
    if (u.checkins.size() >= min_reports) kept.push_back(std::move(u));
  }
  if (kept.empty()) {
    throw ValidationError("empty cohort: no user has at least " + std::to_string(min_reports) +
                          " check-ins");
  }
  return kept;
}

std::vector<UserCheckins> ingest_checkins(const std::filesystem::path& path, std::size_t min_reports) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open check-in file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkins_csv(buf.str(), min_reports);
}

Point2 project_point(double lat, double lon, const WorldExtent& extent) {
  const double dlat = (lat - extent.origin_lat) * kDegToRad;
  const double dlon = (lon - extent.origin_lon) * kDegToRad;
  return {kEarthRadiusMeters * std::cos(extent.origin_lat * kDegToRad) * dlon,
          kEarthRadiusMeters * dlat};
}

std::pair<double, double> unproject_point(Point2 p, const WorldExtent& extent) {
  const double lat = extent.origin_lat + p.y / kEarthRadiusMeters / kDegToRad;
  const double lon =
      extent.origin_lon + p.x / (kEarthRadiusMeters * std::cos(extent.origin_lat * kDegToRad)) / kDegToRad;
  return {lat, lon};
}

std::vector<LocalUser> project_to_local(const std::vector<UserCheckins>& users,
                                        const WorldExtent& extent, OutOfExtentPolicy policy) {
  extent.validate();
  std::vector<LocalUser> out;
  out.reserve(users.size());
  for (const auto& u : users) {
    LocalUser local{u.user_id, {}, false};
    local.checkins.reserve(u.checkins.size());
    for (const auto& c : u.checkins) {
      Point2 p = project_point(c.lat, c.lon, extent);
      if (std::abs(p.x) > kMaxProjectionSpanMeters || std::abs(p.y) > kMaxProjectionSpanMeters) {
        throw ValidationError("user " + u.user_id +
                              ": check-in more than 100 km from the origin; projection precondition violated");
      }
      if (!extent.contains(p)) {
        if (policy == OutOfExtentPolicy::reject) {
          throw ValidationError("user " + u.user_id + ": check-in outside the world extent");
        }
        p = extent.clamp(p);
        local.clamped = true;
      }
      local.checkins.push_back({c.timestamp, p});
    }
    out.push_back(std::move(local));
  }
  return out;
}

UserTrace interpolate_trace(const LocalUser& user, double slot_seconds, std::size_t n_slots,
                            double start_time) {
  if (user.checkins.size() < 2) {
    throw ValidationError("user " + user.user_id + ": degenerate trace, need at least 2 check-ins");
  }
  if (!(slot_seconds > 0.0)) throw ValidationError("slot_seconds must be positive");

  const auto& cs = user.checkins;
  UserTrace trace{user.user_id, {}, slot_seconds};
  trace.positions.reserve(n_slots);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n_slots; ++i) {
    const double t = start_time + static_cast<double>(i) * slot_seconds;
    if (t <= cs.front().timestamp) {
      trace.positions.push_back(cs.front().position);
      continue;
    }
    if (t >= cs.back().timestamp) {
      trace.positions.push_back(cs.back().position);
      continue;
    }
    while (cs[seg + 1].timestamp < t) ++seg;
    const auto& a = cs[seg];
    const auto& b = cs[seg + 1];
    const double w = (t - a.timestamp) / (b.timestamp - a.timestamp);
    trace.positions.push_back({a.position.x + w * (b.position.x - a.position.x),
                               a.position.y + w * (b.position.y - a.position.y)});
  }
  return trace;
}

TraceSet interpolate_cohort(const std::vector<LocalUser>& users, double slot_seconds,
                            std::size_t n_slots) {
  if (users.empty()) throw ValidationError("empty cohort");
  double start = users.front().checkins.empty() ? 0.0 : users.front().checkins.front().timestamp;
  for (const auto& u : users) {
    if (!u.checkins.empty()) start = std::min(start, u.checkins.front().timestamp);
  }
  TraceSet set{slot_seconds, n_slots, {}};
  set.users.reserve(users.size());
  for (const auto& u : users) set.users.push_back(interpolate_trace(u, slot_seconds, n_slots, start));
  return set;
}

std::size_t train_slot_count(std::size_t n_slots) { return (n_slots * 3) / 4; }

TraceSplit split_train_test(const UserTrace& trace) {
  const std::size_t n = trace.positions.size();
  if (n < 8) {
    throw ValidationError("trace of user " + trace.user_id + " has " + std::to_string(n) +
                          " slots; at least 8 are needed for a train/test split");
  }
  const auto cut = trace.positions.begin() + static_cast<std::ptrdiff_t>(train_slot_count(n));
  return {{trace.positions.begin(), cut}, {cut, trace.positions.end()}};
}

nlohmann::json trace_set_to_json(const TraceSet& traces) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : traces.users) {
    nlohmann::json xy = nlohmann::json::array();
    for (const auto& p : u.positions) xy.push_back({round_mm(p.x), round_mm(p.y)});
    users.push_back({{"id", u.user_id}, {"xy", std::move(xy)}});
  }
  return {{"slot_seconds", traces.slot_seconds}, {"n_slots", traces.n_slots}, {"users", std::move(users)}};
}

TraceSet trace_set_from_json(const nlohmann::json& doc) {
  try {
    TraceSet set;
    set.slot_seconds = doc.at("slot_seconds").get<double>();
    set.n_slots = doc.at("n_slots").get<std::size_t>();
    for (const auto& u : doc.at("users")) {
      UserTrace t{u.at("id").get<std::string>(), {}, set.slot_seconds};
      for (const auto& p : u.at("xy")) t.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      if (t.positions.size() != set.n_slots) {
        throw ParseError("trace of user " + t.user_id + " has " + std::to_string(t.positions.size()) +
                         " slots, expected " + std::to_string(set.n_slots));
      }
      set.users.push_back(std::move(t));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed trace document: ") + e.what());
  }
}

void write_trace_file(const TraceSet& traces, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write trace file: " + path.string());
  out << trace_set_to_json(traces).dump(1) << '\n';
}

TraceSet read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open trace file: " + path.string());
  try {
    return trace_set_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("trace file " + path.string() + ": " + e.what());
  }
}

}  // namespace aeronet
