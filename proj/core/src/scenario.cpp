#include "aeronet/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"

namespace aeronet {

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::learned: return "learned";
    case ControllerKind::learned_no_power_control: return "learned_no_power_control";
    case ControllerKind::static_placement: return "static";
    case ControllerKind::gakmeans_follow: return "gakmeans_follow";
  }
  return "unknown";
}

ControllerKind parse_controller(const std::string& name) {
  for (auto k : {ControllerKind::learned, ControllerKind::learned_no_power_control,
                 ControllerKind::static_placement, ControllerKind::gakmeans_follow}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown controller '" + name +
                        "' (expected learned, learned_no_power_control, static or gakmeans_follow)");
}

ChannelParams ChannelSettings::params() const {
  ChannelParams p = ChannelParams::from_db(carrier_hz, b1, b2, zeta_deg, path_loss_exponent, mu_los_db, mu_nlos_db,
                                           noise_dbm_per_hz, bandwidth_hz, min_rate_bps);
  p.power_bound_form = power_bound_linear_altitude ? PowerBoundForm::altitude_linear : PowerBoundForm::altitude_to_alpha;
  return p;
}

namespace {

// Derived grid geometry follows the extent.
void finalize(Scenario& s) {
  if (s.grid.x_cells > 0 && s.grid.y_cells > 0) {
    s.grid.cell_x_m = s.extent.x_max / static_cast<double>(s.grid.x_cells);
    s.grid.cell_y_m = s.extent.y_max / static_cast<double>(s.grid.y_cells);
  }
  s.fixture.n_slots = s.n_slots;
  s.fixture.slot_seconds = s.slot_seconds;
}

std::string trim(std::string v) {
  const auto b = v.find_first_not_of(" \t\r\n");
  const auto e = v.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size()) throw ParseError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ParseError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ParseError(key + ": expected a comma-separated list");
  return out;
}

std::string render_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt::format("{}", v[i]);
  return out;
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(Scenario&, const std::string&)> set;
  std::function<std::string(const Scenario&)> get;
};

#define AERONET_DOUBLE(sec, name, expr)                                                                \
  Binding {                                                                                            \
    sec, name, [](Scenario& s, const std::string& v) { expr = to_double(std::string(sec "." name), v); }, \
        [](const Scenario& s) { return fmt::format("{}", expr); }                                      \
  }
#define AERONET_UINT(sec, name, expr)                                                                  \
  Binding {                                                                                            \
    sec, name,                                                                                         \
        [](Scenario& s, const std::string& v) {                                                        \
          expr = static_cast<std::remove_reference_t<decltype(expr)>>(to_uint(std::string(sec "." name), v)); \
        },                                                                                             \
        [](const Scenario& s) { return fmt::format("{}", expr); }                                      \
  }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      AERONET_UINT("scenario", "n_uavs", s.n_uavs),
      AERONET_UINT("scenario", "n_slots", s.n_slots),
      AERONET_DOUBLE("scenario", "slot_seconds", s.slot_seconds),
      AERONET_UINT("scenario", "seed", s.master_seed),
      Binding{"scenario", "controller", [](Scenario& s, const std::string& v) { s.controller = parse_controller(trim(v)); },
              [](const Scenario& s) { return to_string(s.controller); }},
      AERONET_UINT("scenario", "min_reports", s.min_reports),
      Binding{"scenario", "out_of_extent",
              [](Scenario& s, const std::string& v) {
                const auto t = trim(v);
                if (t == "reject") {
                  s.out_of_extent = OutOfExtentPolicy::reject;
                } else if (t == "clamp") {
                  s.out_of_extent = OutOfExtentPolicy::clamp;
                } else {
                  throw ParseError("scenario.out_of_extent: expected reject or clamp, got '" + v + "'");
                }
              },
              [](const Scenario& s) { return std::string(s.out_of_extent == OutOfExtentPolicy::reject ? "reject" : "clamp"); }},

      AERONET_DOUBLE("extent", "x_max", s.extent.x_max),
      AERONET_DOUBLE("extent", "y_max", s.extent.y_max),
      AERONET_DOUBLE("extent", "origin_lat", s.extent.origin_lat),
      AERONET_DOUBLE("extent", "origin_lon", s.extent.origin_lon),

      AERONET_DOUBLE("channel", "carrier_hz", s.channel.carrier_hz),
      AERONET_DOUBLE("channel", "b1", s.channel.b1),
      AERONET_DOUBLE("channel", "b2", s.channel.b2),
      AERONET_DOUBLE("channel", "zeta_deg", s.channel.zeta_deg),
      AERONET_DOUBLE("channel", "path_loss_exponent", s.channel.path_loss_exponent),
      AERONET_DOUBLE("channel", "mu_los_db", s.channel.mu_los_db),
      AERONET_DOUBLE("channel", "mu_nlos_db", s.channel.mu_nlos_db),
      AERONET_DOUBLE("channel", "noise_dbm_per_hz", s.channel.noise_dbm_per_hz),
      AERONET_DOUBLE("channel", "bandwidth_hz", s.channel.bandwidth_hz),
      AERONET_DOUBLE("channel", "min_rate_bps", s.channel.min_rate_bps),
      Binding{"channel", "power_bound_linear_altitude",
              [](Scenario& s, const std::string& v) {
                s.channel.power_bound_linear_altitude = to_bool("channel.power_bound_linear_altitude", v);
              },
              [](const Scenario& s) { return std::string(s.channel.power_bound_linear_altitude ? "true" : "false"); }},
      AERONET_DOUBLE("channel", "p_max_w", s.p_max_w),
      AERONET_DOUBLE("channel", "h_min", s.h_min),
      AERONET_DOUBLE("channel", "h_max", s.h_max),

      AERONET_UINT("grid", "x_cells", s.grid.x_cells),
      AERONET_UINT("grid", "y_cells", s.grid.y_cells),
      Binding{"grid", "altitude_levels",
              [](Scenario& s, const std::string& v) { s.grid.altitude_levels = to_list("grid.altitude_levels", v); },
              [](const Scenario& s) { return render_list(s.grid.altitude_levels); }},
      Binding{"grid", "power_levels",
              [](Scenario& s, const std::string& v) { s.grid.power_levels = to_list("grid.power_levels", v); },
              [](const Scenario& s) { return render_list(s.grid.power_levels); }},
      AERONET_UINT("grid", "initial_power_idx", s.grid.initial_power_idx),

      AERONET_UINT("esn", "reservoir_size", s.esn.reservoir_size),
      AERONET_DOUBLE("esn", "sparsity", s.esn.sparsity),
      AERONET_DOUBLE("esn", "spectral_radius", s.esn.spectral_radius),
      AERONET_DOUBLE("esn", "leak_rate", s.esn.leak_rate),
      AERONET_DOUBLE("esn", "input_scaling", s.esn.input_scaling),
      AERONET_DOUBLE("esn", "ridge_lambda", s.esn.ridge_lambda),
      AERONET_UINT("esn", "washout", s.esn.washout),

      AERONET_UINT("ga", "population_size", s.ga.population_size),
      AERONET_UINT("ga", "generations", s.ga.generations),
      AERONET_DOUBLE("ga", "mutation_rate", s.ga.mutation_rate),
      AERONET_DOUBLE("ga", "crossover_rate", s.ga.crossover_rate),

      AERONET_DOUBLE("rl", "learning_rate", s.rl.learning_rate),
      AERONET_DOUBLE("rl", "discount", s.rl.discount),
      AERONET_DOUBLE("rl", "epsilon_start", s.rl.epsilon.start),
      AERONET_DOUBLE("rl", "epsilon_decay", s.rl.epsilon.decay),
      AERONET_DOUBLE("rl", "epsilon_floor", s.rl.epsilon.floor),
      Binding{"rl", "selection",
              [](Scenario& s, const std::string& v) {
                const auto t = trim(v);
                if (t == "shared_sum") {
                  s.rl.selection = SelectionMode::shared_sum;
                } else if (t == "independent") {
                  s.rl.selection = SelectionMode::independent;
                } else {
                  throw ParseError("rl.selection: expected shared_sum or independent, got '" + v + "'");
                }
              },
              [](const Scenario& s) {
                return std::string(s.rl.selection == SelectionMode::shared_sum ? "shared_sum" : "independent");
              }},
      AERONET_UINT("rl", "placement_trials", s.rl.placement_trials),
      AERONET_UINT("rl", "placement_iterations", s.rl.placement_iterations),
      AERONET_UINT("rl", "slot_episodes", s.rl.slot_episodes),
      AERONET_UINT("rl", "slot_iterations", s.rl.slot_iterations),
      AERONET_UINT("rl", "curve_stride", s.rl.curve_stride),

      AERONET_UINT("fixture", "n_users", s.fixture.n_users),
      AERONET_UINT("fixture", "seed", s.fixture.seed),
      AERONET_DOUBLE("fixture", "start_epoch", s.fixture.start_epoch),
      AERONET_DOUBLE("fixture", "min_speed", s.fixture.min_speed),
      AERONET_DOUBLE("fixture", "max_speed", s.fixture.max_speed),
      AERONET_DOUBLE("fixture", "max_pause_s", s.fixture.max_pause_s),
      AERONET_DOUBLE("fixture", "roam_probability", s.fixture.roam_probability),
      AERONET_DOUBLE("fixture", "hotspot_sigma_m", s.fixture.hotspot_sigma_m),
      AERONET_DOUBLE("fixture", "anchor_radius_m", s.fixture.anchor_radius_m),
  };
  return table;
}

#undef AERONET_DOUBLE
#undef AERONET_UINT

const Binding* find_binding(const std::string& section, const std::string& key) {
  for (const auto& b : bindings()) {
    if (b.section == section && b.key == key) return &b;
  }
  return nullptr;
}

}  // namespace

void Scenario::validate() const {
  if (n_uavs == 0) throw ValidationError("n_uavs must be at least 1");
  if (n_slots < 8) throw ValidationError("n_slots must be at least 8 (train/test split)");
  if (!(slot_seconds > 0.0)) throw ValidationError("slot_seconds must be positive");
  if (min_reports < 2) throw ValidationError("min_reports must be at least 2 (interpolation needs two check-ins)");
  extent.validate();
  channel.params().validate();
  if (!(h_min > 0.0 && h_max >= h_min)) throw ValidationError("altitude bounds must satisfy 0 < h_min <= h_max");
  if (!(p_max_w > 0.0)) throw ValidationError("p_max_w must be positive");
  grid.validate();
  for (double h : grid.altitude_levels) {
    if (h < h_min || h > h_max) {
      throw ValidationError(fmt::format("altitude level {} m lies outside [{}, {}]", h, h_min, h_max));
    }
  }
  if (grid.power_levels.back() > p_max_w) {
    throw ValidationError(fmt::format("power level {} W exceeds p_max_w {} W", grid.power_levels.back(), p_max_w));
  }
  esn.validate();
  ga.validate();
  TrainOptions probe;
  probe.learning_rate = rl.learning_rate;
  probe.discount = rl.discount;
  probe.epsilon = rl.epsilon;
  probe.validate();
  if (rl.placement_trials == 0 || rl.placement_iterations == 0) {
    throw ValidationError("placement needs at least one trial and one iteration");
  }
  if (rl.slot_episodes == 0 || rl.slot_iterations == 0) {
    throw ValidationError("flight slots need at least one episode and one iteration");
  }
  fixture.validate();
}

Scenario default_scenario() {
  Scenario s;
  s.esn.reservoir_size = 1000;
  finalize(s);
  return s;
}

Scenario parse_scenario(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(fmt::format("scenario line {}: {}", e.line(), e.message()));
  }
  Scenario s = default_scenario();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ParseError("scenario key '" + section + "' must be inside a section");
    }
    for (const auto& [key, value] : body) {
      const Binding* b = find_binding(section, key);
      if (b == nullptr) throw ParseError("unknown scenario key [" + section + "] " + key);
      b->set(s, value.data());
    }
  }
  finalize(s);
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string render_scenario(const Scenario& scenario) {
  std::string out;
  std::string section;
  for (const auto& b : bindings()) {
    if (b.section != section) {
      out += (section.empty() ? "" : "\n") + fmt::format("[{}]\n", b.section);
      section = b.section;
    }
    out += fmt::format("{} = {}\n", b.key, b.get(scenario));
  }
  return out;
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& b : bindings()) doc[b.section][b.key] = b.get(scenario);
  return doc;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"reservoir_size", "spectral_radius", "leak_rate", "ridge_lambda",
                                             "n_uavs",         "min_rate_bps",    "seed",      "controller"};
  return axes;
}

Scenario with_axis(const Scenario& base, const std::string& axis, const std::string& value) {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"reservoir_size", "esn"}, {"spectral_radius", "esn"}, {"leak_rate", "esn"},     {"ridge_lambda", "esn"},
      {"n_uavs", "scenario"},    {"min_rate_bps", "channel"}, {"seed", "scenario"},    {"controller", "scenario"}};
  for (const auto& [key, section] : keys) {
    if (key != axis) continue;
    Scenario s = base;
    find_binding(section, key)->set(s, value);
    finalize(s);
    return s;
  }
  std::string list;
  for (const auto& a : sweep_axes()) list += (list.empty() ? "" : ", ") + a;
  throw ValidationError("unknown sweep axis '" + axis + "' (accepted: " + list + ")");
}

}  // namespace aeronet
