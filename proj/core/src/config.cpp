#include "evtrack/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "evtrack/error.hpp"

namespace evtrack {

namespace {

template <class T>
using Ref = T& (*)(ExperimentConfig&);
using NumberRef = std::variant<Ref<double>, Ref<std::int64_t>, Ref<int>, Ref<std::uint64_t>, Ref<bool>>;

struct TextRef {
  std::string (*get)(const ExperimentConfig&);
  void (*set)(ExperimentConfig&, std::string_view);
};

enum class Scale { none, degrees };

struct Field {
  std::string_view section;
  std::string_view key;
  std::string_view unit;
  std::string_view help;
  Scale scale = Scale::none;
  std::string_view json_key;  // internal-unit spelling when it differs from key
  std::variant<NumberRef, TextRef> ref;

  std::string name() const { return std::string(section) + "." + std::string(key); }
  std::string_view json_name() const { return json_key.empty() ? key : json_key; }
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config: " + std::string(key) + " = '" + std::string(value) + "' is not " +
                    std::string(expected));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string_view v = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, text, std::is_floating_point_v<T> ? "a number" : "an integer");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  std::string v(trim(text));
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, text, "a boolean");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

double to_file(double internal, Scale s) { return s == Scale::degrees ? rad2deg(internal) : internal; }
double from_file(double file, Scale s) { return s == Scale::degrees ? deg2rad(file) : file; }

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"experiment", "scenario", "", "step | sine_sweep | constant_rate_sweep | coast | manual", Scale::none, "",
       TextRef{[](const C& c) { return std::string(to_string(c.scenario)); },
               [](C& c, std::string_view v) { c.scenario = parse_scenario(v); }}},
      {"experiment", "feedback", "", "vision | encoder | truth", Scale::none, "",
       TextRef{[](const C& c) { return std::string(to_string(c.feedback)); },
               [](C& c, std::string_view v) { c.feedback = parse_feedback(v); }}},
      {"experiment", "excitation", "", "setpoint | disk: what step and sine references move", Scale::none, "",
       TextRef{[](const C& c) { return std::string(to_string(c.excitation)); },
               [](C& c, std::string_view v) { c.excitation = parse_excitation(v); }}},
      {"experiment", "duration", "s", "simulated run length", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.duration; }}},
      {"experiment", "seed", "", "seed of every random source in the run", Scale::none, "",
       NumberRef{+[](C& c) -> std::uint64_t& { return c.seed; }}},
      {"experiment", "rate_feedforward", "", "use the reference rate as alpha_dot_des", Scale::none, "",
       NumberRef{+[](C& c) -> bool& { return c.rate_feedforward; }}},
      {"experiment", "prime_estimator", "", "start the filter at the known initial alignment", Scale::none, "",
       NumberRef{+[](C& c) -> bool& { return c.prime_estimator; }}},
      {"experiment", "record_timing", "", "log wall-clock estimator time (logs stop being byte-identical)",
       Scale::none, "", NumberRef{+[](C& c) -> bool& { return c.record_timing; }}},
      {"experiment", "log_events", "", "keep the generated event stream", Scale::none, "",
       NumberRef{+[](C& c) -> bool& { return c.log_events; }}},
      {"experiment", "physics_step", "us", "integrator step", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.physics_step; }}},
      {"experiment", "tick", "us", "estimation and control period", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.tick; }}},
      {"experiment", "metrics_skip", "s", "summary metrics ignore the start of the run", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.metrics_skip; }}},
      {"experiment", "manual_steer_hz", "Hz", "steering message rate of scripted manual runs", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.manual_steer_hz; }}},
      {"experiment", "manual_ramp_accel", "deg/s^2", "spin-up of scripted manual runs, 0 = instant",
       Scale::degrees, "manual_ramp_accel_rad_s2", NumberRef{+[](C& c) -> double& { return c.manual_ramp_accel; }}},
      {"experiment", "initial_alpha", "deg", "dualcopter roll at t = 0", Scale::degrees, "initial_alpha_rad",
       NumberRef{+[](C& c) -> double& { return c.initial_alpha; }}},
      {"experiment", "initial_disk", "deg", "disk angle at t = 0", Scale::degrees, "initial_disk_rad",
       NumberRef{+[](C& c) -> double& { return c.initial_disk; }}},

      {"reference", "kind", "", "auto | step | sine | constant_rate | chirp | manual", Scale::none, "",
       TextRef{[](const C& c) { return c.reference_kind ? std::string(to_string(*c.reference_kind)) : "auto"; },
               [](C& c, std::string_view v) {
                 if (trim(v) == "auto") c.reference_kind.reset();
                 else c.reference_kind = parse_reference_kind(trim(v));
               }}},
      {"reference", "amplitude", "deg", "step height, sine and chirp amplitude", Scale::degrees, "amplitude_rad",
       NumberRef{+[](C& c) -> double& { return c.reference.amplitude; }}},
      {"reference", "omega", "rad/s", "sine frequency, chirp start", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.reference.omega; }}},
      {"reference", "omega_end", "rad/s", "chirp end frequency", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.reference.omega_end; }}},
      {"reference", "chirp_duration", "s", "chirp sweep length", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.reference.chirp_duration; }}},
      {"reference", "rate", "deg/s", "constant-rate and manual-ramp speed", Scale::degrees, "rate_rad_s",
       NumberRef{+[](C& c) -> double& { return c.reference.rate; }}},
      {"reference", "offset", "deg", "constant added to the reference", Scale::degrees, "offset_rad",
       NumberRef{+[](C& c) -> double& { return c.reference.offset; }}},
      {"reference", "onset", "us", "reference holds its offset before this time", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.reference.onset; }}},

      {"plant", "inertia", "kg m^2", "roll moment of inertia", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.plant.inertia; }}},
      {"plant", "arm", "m", "half rotor separation", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.plant.arm; }}},
      {"plant", "motor_tau", "s", "rotor thrust lag, 0 = instant", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.plant.motor_tau; }}},
      {"plant", "max_thrust", "N", "per-rotor thrust ceiling", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.plant.max_thrust; }}},
      {"plant", "bias_thrust", "N", "per-rotor operating point", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.plant.bias_thrust; }}},
      {"plant", "disturbance", "N m", "constant imbalance torque", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.plant.disturbance; }}},

      {"camera", "width", "px", "sensor columns", Scale::none, "",
       NumberRef{+[](C& c) -> int& { return c.camera.width; }}},
      {"camera", "height", "px", "sensor rows", Scale::none, "",
       NumberRef{+[](C& c) -> int& { return c.camera.height; }}},
      {"camera", "cx", "px", "disk centre column", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.camera.cx; }}},
      {"camera", "cy", "px", "disk centre row", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.camera.cy; }}},
      {"camera", "disk_radius", "px", "radius of the black/white disk", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.camera.disk_radius; }}},
      {"camera", "noise_rate", "events/s", "background events over the whole sensor", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.camera.noise_rate; }}},
      {"camera", "refractory", "us", "per-pixel dead time", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.camera.refractory; }}},

      {"estimator", "capacity", "events", "Hough window size", Scale::none, "",
       NumberRef{+[](C& c) -> std::uint64_t& { return c.estimator.hough.capacity; }}},
      {"estimator", "span", "us", "Hough window age limit", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.estimator.hough.span; }}},
      {"estimator", "min_line_count", "events", "votes needed to accept a line", Scale::none, "",
       NumberRef{+[](C& c) -> int& { return c.estimator.hough.min_line_count; }}},
      {"estimator", "q_angle", "deg^2", "process noise on the angle per tick", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.estimator.noise.q_angle; }}},
      {"estimator", "q_rate", "(deg/s)^2", "process noise on the rate per tick", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.estimator.noise.q_rate; }}},
      {"estimator", "r_angle", "deg^2", "line measurement variance", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.estimator.noise.r_angle; }}},
      {"estimator", "p0_angle", "deg^2", "initial angle variance", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.estimator.initial_cov.p00; }}},
      {"estimator", "p0_rate", "(deg/s)^2", "initial rate variance", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.estimator.initial_cov.p11; }}},

      {"delays", "event", "us", "camera to estimator", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.delays.event; }}},
      {"delays", "command", "us", "controller to rotors", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.delays.command; }}},
      {"delays", "encoder", "us", "encoder to controller", Scale::none, "",
       NumberRef{+[](C& c) -> std::int64_t& { return c.delays.encoder; }}},
      {"delays", "compute", "us", "estimator and controller time before a vision command leaves", Scale::none,
       "", NumberRef{+[](C& c) -> std::int64_t& { return c.delays.compute; }}},

      {"gains", "synthesize", "", "derive k_p, k_d from tau, zeta, inertia", Scale::none, "",
       NumberRef{+[](C& c) -> bool& { return c.gains.synthesize; }}},
      {"gains", "tau", "s", "design time constant", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.gains.tau; }}},
      {"gains", "zeta", "", "design damping ratio", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.gains.zeta; }}},
      {"gains", "inertia", "kg m^2", "model inertia for synthesis and the filter input", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.gains.inertia; }}},
      {"gains", "k_p", "N m/rad", "explicit proportional gain", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.gains.k_p; }}},
      {"gains", "k_d", "N m s/rad", "explicit derivative gain", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.gains.k_d; }}},

      {"thrust_map", "c2", "N", "quadratic thrust coefficient", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.thrust_map.c2; }}},
      {"thrust_map", "c1", "N", "linear thrust coefficient", Scale::none, "",
       NumberRef{+[](C& c) -> double& { return c.thrust_map.c1; }}},
  };
  return table;
}

const Field& find_field(std::string_view name) {
  for (const Field& f : fields()) {
    if (f.name() == name) return f;
  }
  throw ConfigError("config: unknown key '" + std::string(name) + "'");
}

void sync_derived(ExperimentConfig& c) {
  c.estimator.hough.cx = c.camera.cx;
  c.estimator.hough.cy = c.camera.cy;
}

void set_field(const Field& f, ExperimentConfig& c, std::string_view value) {
  const std::string name = f.name();
  if (const auto* text = std::get_if<TextRef>(&f.ref)) {
    text->set(c, trim(value));
    return;
  }
  std::visit(
      [&](auto ref) {
        auto& slot = ref(c);
        using T = std::remove_reference_t<decltype(slot)>;
        if constexpr (std::is_same_v<T, bool>) {
          slot = parse_bool(name, value);
        } else if constexpr (std::is_same_v<T, double>) {
          slot = from_file(parse_number<double>(name, value), f.scale);
        } else {
          slot = parse_number<T>(name, value);
        }
      },
      std::get<NumberRef>(f.ref));
}

std::string get_field(const Field& f, const ExperimentConfig& config) {
  if (const auto* text = std::get_if<TextRef>(&f.ref)) return text->get(config);
  auto& c = const_cast<ExperimentConfig&>(config);
  return std::visit(
      [&](auto ref) -> std::string {
        const auto& slot = ref(c);
        using T = std::remove_cvref_t<decltype(slot)>;
        if constexpr (std::is_same_v<T, bool>) return slot ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return format_double(to_file(slot, f.scale));
        else return std::to_string(slot);
      },
      std::get<NumberRef>(f.ref));
}

}  // namespace

std::vector<ConfigKeyInfo> config_keys() {
  std::vector<ConfigKeyInfo> out;
  for (const Field& f : fields()) out.push_back({f.name(), std::string(f.unit), std::string(f.help)});
  return out;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  set_field(find_field(trim(key)), config, value);
  sync_derived(config);
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("config: override '" + std::string(assignment) + "' is not section.key=value");
  }
  apply_setting(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::string_view ini_text, const ExperimentConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig config = base;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) {
      apply_setting(config, section + "." + key, value.data());
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), base);
}

std::string to_ini(const ExperimentConfig& config) {
  std::string out;
  std::string_view section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += "; " + std::string(f.help);
    if (!f.unit.empty()) out += " [" + std::string(f.unit) + "]";
    out += "\n" + std::string(f.key) + " = " + get_field(f, config) + "\n";
  }
  return out;
}

nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  auto& c = const_cast<ExperimentConfig&>(config);
  for (const Field& f : fields()) {
    auto& slot = j[std::string(f.section)][std::string(f.json_name())];
    if (const auto* text = std::get_if<TextRef>(&f.ref)) {
      slot = text->get(config);
      continue;
    }
    std::visit([&](auto ref) { slot = ref(c); }, std::get<NumberRef>(f.ref));
  }
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    for (const Field& f : fields()) {
      const auto sec = j.find(std::string(f.section));
      if (sec == j.end()) continue;
      const auto it = sec->find(std::string(f.json_name()));
      if (it == sec->end()) continue;
      if (const auto* text = std::get_if<TextRef>(&f.ref)) {
        text->set(config, it->get<std::string>());
        continue;
      }
      std::visit(
          [&](auto ref) {
            auto& slot = ref(config);
            slot = it->get<std::remove_reference_t<decltype(slot)>>();
          },
          std::get<NumberRef>(f.ref));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  sync_derived(config);
  return config;
}

}  // namespace evtrack
