#pragma once

// GPS check-in ingestion, local projection, slot interpolation and
// train/test splitting of per-user mobility traces.

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace aeronet {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct RawCheckin {
  std::string user_id;
  double timestamp = 0.0;  // seconds since epoch
  double lat = 0.0;        // degrees
  double lon = 0.0;        // degrees
};

/// All check-ins of one user, sorted by timestamp.
struct UserCheckins {
  std::string user_id;
  std::vector<RawCheckin> checkins;
};

/// Rectangular study area [0, x_max] x [0, y_max] in meters. The origin
/// (origin_lat, origin_lon) is the south-west corner.
struct WorldExtent {
  double x_max = 0.0;
  double y_max = 0.0;
  double origin_lat = 0.0;
  double origin_lon = 0.0;

  void validate() const;
  [[nodiscard]] bool contains(Point2 p) const noexcept {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= x_max && p.y <= y_max;
  }
  [[nodiscard]] Point2 clamp(Point2 p) const noexcept;
};

struct LocalCheckin {
  double timestamp = 0.0;
  Point2 position;
};

struct LocalUser {
  std::string user_id;
  std::vector<LocalCheckin> checkins;
  bool clamped = false;  // at least one point was pulled back into the extent
};

struct UserTrace {
  std::string user_id;
  std::vector<Point2> positions;  // one per slot
  double slot_seconds = 200.0;
};

/// A cohort of traces sharing one slot grid.
struct TraceSet {
  double slot_seconds = 200.0;
  std::size_t n_slots = 0;
  std::vector<UserTrace> users;

  /// Positions of every user at one slot, in cohort order.
  [[nodiscard]] std::vector<Point2> snapshot(std::size_t slot) const;
};

inline constexpr double kEarthRadiusMeters = 6371000.0;
inline constexpr double kMaxProjectionSpanMeters = 100000.0;

/// Reads a `user_id,timestamp,lat,lon` CSV (header row required) and keeps
/// users with at least `min_reports` check-ins. Each user's check-ins are
/// sorted by time; exact duplicate timestamps keep the first row.
/// Users are returned in order of first appearance in the file.
std::vector<UserCheckins> ingest_checkins(const std::filesystem::path& path,
                                          std::size_t min_reports);

/// Same as above, reading from an in-memory CSV document.
std::vector<UserCheckins> parse_checkins_csv(const std::string& text, std::size_t min_reports);

enum class OutOfExtentPolicy { reject, clamp };

/// Equirectangular projection about the extent origin.
Point2 project_point(double lat, double lon, const WorldExtent& extent);
/// Inverse of project_point; returns {lat, lon} in degrees.
std::pair<double, double> unproject_point(Point2 p, const WorldExtent& extent);

/// Projects every check-in into the local metric frame. With `reject`,
/// points outside the extent raise a ValidationError naming the user; with
/// `clamp` they are pulled onto the boundary and the user is flagged.
std::vector<LocalUser> project_to_local(const std::vector<UserCheckins>& users,
                                        const WorldExtent& extent,
                                        OutOfExtentPolicy policy = OutOfExtentPolicy::reject);

/// Piecewise-linear resampling onto slots t_i = start_time + i * slot_seconds,
/// clamped to the first/last check-in outside their span.
UserTrace interpolate_trace(const LocalUser& user, double slot_seconds, std::size_t n_slots,
                            double start_time);

/// Interpolates a whole cohort; the slot grid starts at the earliest check-in
/// of the cohort.
TraceSet interpolate_cohort(const std::vector<LocalUser>& users, double slot_seconds,
                            std::size_t n_slots);

struct TraceSplit {
  std::vector<Point2> train;
  std::vector<Point2> test;
};

/// First floor(0.75 N) slots for training, the rest for testing.
TraceSplit split_train_test(const UserTrace& trace);
std::size_t train_slot_count(std::size_t n_slots);

// Trace file: {slot_seconds, n_slots, users:[{id, xy:[[x,y],...]}]},
// coordinates rounded to millimeters.
nlohmann::json trace_set_to_json(const TraceSet& traces);
TraceSet trace_set_from_json(const nlohmann::json& doc);
void write_trace_file(const TraceSet& traces, const std::filesystem::path& path);
TraceSet read_trace_file(const std::filesystem::path& path);

}  // namespace aeronet
