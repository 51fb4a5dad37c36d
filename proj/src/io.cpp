#include "grinn/io.hpp"

#include <bit>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "grinn/error.hpp"
#include "grinn/random.hpp"

namespace grinn {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* what) {
  throw Error(ErrorKind::parse,
              std::string(key) + ": cannot parse '" + std::string(value) + "' as " + what);
}

double to_double(std::string_view key, std::string_view s) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad_value(key, s, "a number");
  return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view s) {
  Int x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad_value(key, s, "an integer");
  return x;
}

bool to_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, s, "a boolean");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const T& xs, int count) {
  std::string s;
  for (int i = 0; i < count; ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(xs[0])>>) {
      s += fmt(xs[i]);
    } else {
      s += std::to_string(xs[i]);
    }
  }
  return s;
}

std::vector<double> to_doubles(std::string_view key, std::string_view s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(to_double(key, part));
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  int lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty()) {
      throw Error(ErrorKind::parse,
                  "line " + std::to_string(lineno) + ": expected key = value, got '" +
                      std::string(line) + "'");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))),
                     std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_overrides(CaseConfig& c, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    const std::string_view v = value;
    if (key == "case") {
      c = paper_case(parse_case_id(v));
    } else if (key == "dim" || key == "dimension") {
      c.dimension = to_int<int>(key, v);
    } else if (key == "amplitude") {
      c.amplitude = to_double(key, v);
    } else if (key == "wavelength_ratio") {
      c.wavelength_ratio = to_double(key, v);
    } else if (key == "direction") {
      const auto d = to_doubles(key, v);
      if (d.empty() || d.size() > 3) bad_value(key, v, "1 to 3 comma-separated numbers");
      c.direction = {0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < d.size(); ++i) c.direction[i] = d[i];
    } else if (key == "gravity") {
      c.gravity = to_bool(key, v);
    } else if (key == "solver") {
      try {
        c.solver = parse_solver(v);
      } catch (const Error& e) {
        throw Error(ErrorKind::parse, "solver: " + std::string(e.what()));
      }
    } else if (key == "wavelengths_per_axis") {
      c.wavelengths_per_axis = to_double(key, v);
    } else if (key == "t_start") {
      c.t_start = to_double(key, v);
    } else if (key == "t_end") {
      c.t_end = to_double(key, v);
    } else if (key == "grid_points") {
      c.fd.grid_points = to_int<int>(key, v);
    } else if (key == "courant") {
      c.fd.courant = to_double(key, v);
    } else if (key == "hidden_layers") {
      c.pinn.hidden_layers.clear();
      for (auto part : split(v, ',')) c.pinn.hidden_layers.push_back(to_int<int>(key, part));
    } else if (key == "n_interior") {
      c.pinn.n_interior = to_int<int>(key, v);
    } else if (key == "n_boundary") {
      c.pinn.n_boundary = to_int<int>(key, v);
    } else if (key == "n_initial") {
      c.pinn.n_initial = to_int<int>(key, v);
    } else if (key == "adam_epochs") {
      c.pinn.adam_epochs = to_int<int>(key, v);
    } else if (key == "learning_rate") {
      c.pinn.learning_rate = to_double(key, v);
    } else if (key == "lbfgs_iterations") {
      c.pinn.lbfgs_iterations = to_int<int>(key, v);
    } else if (key == "lbfgs_memory") {
      c.pinn.lbfgs_memory = to_int<int>(key, v);
    } else if (key == "seed") {
      c.pinn.seed = to_int<std::uint64_t>(key, v);
    } else if (key == "omega0") {
      c.pinn.omega0 = to_double(key, v);
    } else if (key == "time_span") {
      c.pinn.time_span = to_double(key, v);
    } else if (key == "weight_pde") {
      c.pinn.weight_pde = to_double(key, v);
    } else if (key == "weight_boundary") {
      c.pinn.weight_boundary = to_double(key, v);
    } else if (key == "weight_initial") {
      c.pinn.weight_initial = to_double(key, v);
    } else if (key == "mean_free_poisson") {
      c.pinn.mean_free_poisson = to_bool(key, v);
    } else {
      throw Error(ErrorKind::parse, "unknown config key '" + key + "'");
    }
  }
}

CaseConfig resolve_config(const KeyValues& file_values, const KeyValues& flag_values) {
  // The case named on the command line wins, then the file's, then case 1.
  CaseConfig c = paper_case(CaseId::case1);
  auto find_case = [](const KeyValues& kv) -> const std::string* {
    const std::string* found = nullptr;
    for (const auto& [k, v] : kv) {
      if (k == "case") found = &v;
    }
    return found;
  };
  const std::string* flag_case = find_case(flag_values);
  KeyValues file_rest;
  for (const auto& kv : file_values) {
    if (kv.first == "case" && flag_case) continue;
    if (kv.first == "case") {
      apply_overrides(c, {kv});
    } else {
      file_rest.push_back(kv);
    }
  }
  if (flag_case) apply_overrides(c, {{"case", *flag_case}});
  apply_overrides(c, file_rest);
  KeyValues flag_rest;
  for (const auto& kv : flag_values) {
    if (kv.first != "case") flag_rest.push_back(kv);
  }
  apply_overrides(c, flag_rest);
  c.validate();
  return c;
}

CaseConfig parse_config(std::string_view text) { return resolve_config(parse_key_values(text), {}); }

CaseConfig read_config(const fs::path& path) { return parse_config(read_text(path)); }

std::string serialize_config(const CaseConfig& c) {
  std::ostringstream o;
  o << "case = " << to_string(c.id) << '\n'
    << "dim = " << c.dimension << '\n'
    << "amplitude = " << fmt(c.amplitude) << '\n'
    << "wavelength_ratio = " << fmt(c.wavelength_ratio) << '\n'
    << "direction = " << join(c.direction, 3) << '\n'
    << "gravity = " << (c.gravity ? "true" : "false") << '\n'
    << "solver = " << to_string(c.solver) << '\n'
    << "wavelengths_per_axis = " << fmt(c.wavelengths_per_axis) << '\n'
    << "t_start = " << fmt(c.t_start) << '\n'
    << "t_end = " << fmt(c.t_end) << '\n'
    << "grid_points = " << c.fd.grid_points << '\n'
    << "courant = " << fmt(c.fd.courant) << '\n'
    << "hidden_layers = "
    << join(c.pinn.hidden_layers, static_cast<int>(c.pinn.hidden_layers.size())) << '\n'
    << "n_interior = " << c.pinn.n_interior << '\n'
    << "n_boundary = " << c.pinn.n_boundary << '\n'
    << "n_initial = " << c.pinn.n_initial << '\n'
    << "adam_epochs = " << c.pinn.adam_epochs << '\n'
    << "learning_rate = " << fmt(c.pinn.learning_rate) << '\n'
    << "lbfgs_iterations = " << c.pinn.lbfgs_iterations << '\n'
    << "lbfgs_memory = " << c.pinn.lbfgs_memory << '\n'
    << "seed = " << c.pinn.seed << '\n'
    << "omega0 = " << fmt(c.pinn.omega0) << '\n'
    << "time_span = " << fmt(c.pinn.time_span) << '\n'
    << "weight_pde = " << fmt(c.pinn.weight_pde) << '\n'
    << "weight_boundary = " << fmt(c.pinn.weight_boundary) << '\n'
    << "weight_initial = " << fmt(c.pinn.weight_initial) << '\n'
    << "mean_free_poisson = " << (c.pinn.mean_free_poisson ? "true" : "false") << '\n';
  return o.str();
}

Snapshot snapshot_from_state(const FieldState& s, const UnitSystem& units, std::string case_id) {
  Snapshot out;
  out.dimension = s.dimension;
  out.shape = s.shape;
  out.spacing = s.spacing;
  out.units = units;
  out.case_id = std::move(case_id);
  const std::size_t n = s.size();
  out.points.resize(n);
  for (int k = 0; k < s.shape[2]; ++k) {
    for (int j = 0; j < s.shape[1]; ++j) {
      for (int i = 0; i < s.shape[0]; ++i) {
        SpaceTimePoint& p = out.points[s.index(i, j, k)];
        const int idx[3] = {i, j, k};
        for (int a = 0; a < s.dimension; ++a) p.x[a] = s.coordinate(a, idx[a]);
        p.t = s.t;
      }
    }
  }
  out.rho = s.rho;
  out.phi = s.phi;
  for (int a = 0; a < s.dimension; ++a) out.v[a] = s.v[a];
  return out;
}

Snapshot snapshot_from_prediction(std::span<const SpaceTimePoint> points, const Prediction& p,
                                  const UnitSystem& units, std::string case_id) {
  Snapshot out;
  out.dimension = p.dimension;
  out.units = units;
  out.case_id = std::move(case_id);
  out.points.assign(points.begin(), points.end());
  out.rho.assign(p.rho.data(), p.rho.data() + p.rho.size());
  out.phi.assign(p.phi.data(), p.phi.data() + p.phi.size());
  for (int a = 0; a < p.dimension; ++a) out.v[a].assign(p.v[a].data(), p.v[a].data() + p.v[a].size());
  return out;
}

void write_snapshot(const Snapshot& s, const fs::path& path) {
  static constexpr const char* axes[3] = {"x", "y", "z"};
  static constexpr const char* vel[3] = {"vx", "vy", "vz"};
  const int d = s.dimension;
  std::string text;
  text.reserve(s.points.size() * 24 * (2 * d + 3));
  for (int a = 0; a < d; ++a) text += std::string(axes[a]) + ',';
  text += "t,rho";
  for (int a = 0; a < d; ++a) text += std::string(",") + vel[a];
  text += ",phi\n";
  char buf[32];
  auto put = [&](double x, bool last) {
    const int len = std::snprintf(buf, sizeof buf, "%.17g", x);
    text.append(buf, static_cast<std::size_t>(len));
    text += last ? '\n' : ',';
  };
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    for (int a = 0; a < d; ++a) put(s.points[k].x[a], false);
    put(s.points[k].t, false);
    put(s.rho[k], false);
    for (int a = 0; a < d; ++a) put(s.v[a][k], false);
    put(s.phi[k], true);
  }
  write_text(path, text);

  std::ostringstream meta;
  meta << "dimension = " << d << '\n'
       << "points = " << s.points.size() << '\n'
       << "shape = " << join(s.shape, 3) << '\n'
       << "spacing = " << join(s.spacing, 3) << '\n'
       << "sound_speed = " << fmt(s.units.sound_speed) << '\n'
       << "four_pi_G = " << fmt(s.units.four_pi_G) << '\n'
       << "background_density = " << fmt(s.units.background_density) << '\n'
       << "case = " << s.case_id << '\n';
  write_text(fs::path(path.string() + ".meta"), meta.str());
}

Snapshot read_snapshot(const fs::path& path) {
  const std::string text = read_text(path);
  Snapshot s;
  const auto lines = split(text, '\n');
  if (lines.empty()) throw Error(ErrorKind::parse, "empty snapshot " + path.string());
  const auto header = split(lines[0], ',');
  int d = 0;
  while (d < static_cast<int>(header.size()) && d < 3 &&
         header[static_cast<std::size_t>(d)] == std::string_view("xyz").substr(static_cast<std::size_t>(d), 1)) {
    ++d;
  }
  if (d == 0 || header.size() != static_cast<std::size_t>(2 * d + 3)) {
    throw Error(ErrorKind::parse, "unrecognized snapshot header in " + path.string());
  }
  s.dimension = d;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto cols = split(lines[li], ',');
    if (cols.size() != header.size()) {
      throw Error(ErrorKind::parse, "row " + std::to_string(li) + " has the wrong column count");
    }
    SpaceTimePoint p;
    std::size_t c = 0;
    for (int a = 0; a < d; ++a) p.x[a] = to_double("x", cols[c++]);
    p.t = to_double("t", cols[c++]);
    s.points.push_back(p);
    s.rho.push_back(to_double("rho", cols[c++]));
    for (int a = 0; a < d; ++a) s.v[a].push_back(to_double("v", cols[c++]));
    s.phi.push_back(to_double("phi", cols[c++]));
  }
  const fs::path meta_path(path.string() + ".meta");
  if (fs::exists(meta_path)) {
    for (const auto& [k, v] : parse_key_values(read_text(meta_path))) {
      if (k == "shape") {
        const auto xs = to_doubles(k, v);
        for (std::size_t i = 0; i < 3 && i < xs.size(); ++i) s.shape[i] = static_cast<int>(xs[i]);
      } else if (k == "spacing") {
        const auto xs = to_doubles(k, v);
        for (std::size_t i = 0; i < 3 && i < xs.size(); ++i) s.spacing[i] = xs[i];
      } else if (k == "sound_speed") {
        s.units.sound_speed = to_double(k, v);
      } else if (k == "four_pi_G") {
        s.units.four_pi_G = to_double(k, v);
      } else if (k == "background_density") {
        s.units.background_density = to_double(k, v);
      } else if (k == "case") {
        s.case_id = v;
      }
    }
  }
  return s;
}

void save_checkpoint(const fs::path& path, const NetworkParams& params, std::uint64_t seed) {
  const NetworkSpec& sp = params.spec();
  std::ostringstream h;
  h << "grinn-checkpoint 1\n"
    << "input_width " << sp.input_width << '\n'
    << "hidden " << join(sp.hidden, static_cast<int>(sp.hidden.size())) << '\n'
    << "output_width " << sp.output_width << '\n'
    << "omega0 " << fmt(sp.omega0) << '\n'
    << "input_lower " << join(sp.input_lower, static_cast<int>(sp.input_lower.size())) << '\n'
    << "input_upper " << join(sp.input_upper, static_cast<int>(sp.input_upper.size())) << '\n'
    << "periods " << join(sp.periods, static_cast<int>(sp.periods.size())) << '\n'
    << "seed " << seed << '\n'
    << "count " << params.size() << '\n'
    << "end\n";
  std::string bytes = h.str();
  const std::size_t header = bytes.size();
  bytes.resize(header + params.size() * sizeof(double));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(params.flat()[static_cast<Eigen::Index>(i)]);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    std::memcpy(bytes.data() + header + i * sizeof(double), &u, sizeof u);
  }
  write_text(path, bytes);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const std::string bytes = read_text(path);
  NetworkSpec sp;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t pos = 0;
  bool ended = false;
  int lineno = 0;
  while (pos < bytes.size()) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string_view line(bytes.data() + pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (lineno == 1) {
      if (line != "grinn-checkpoint 1") throw Error(ErrorKind::parse, "not a checkpoint: " + path.string());
      continue;
    }
    if (line == "end") {
      ended = true;
      break;
    }
    const auto sp_pos = line.find(' ');
    const std::string_view key = line.substr(0, sp_pos);
    const std::string_view val = sp_pos == std::string_view::npos ? std::string_view{} : line.substr(sp_pos + 1);
    if (key == "input_width") {
      sp.input_width = to_int<int>(key, val);
    } else if (key == "hidden") {
      sp.hidden.clear();
      for (auto part : split(val, ',')) sp.hidden.push_back(to_int<int>(key, part));
    } else if (key == "output_width") {
      sp.output_width = to_int<int>(key, val);
    } else if (key == "omega0") {
      sp.omega0 = to_double(key, val);
    } else if (key == "input_lower") {
      sp.input_lower = to_doubles(key, val);
    } else if (key == "input_upper") {
      sp.input_upper = to_doubles(key, val);
    } else if (key == "periods") {
      sp.periods = to_doubles(key, val);
    } else if (key == "seed") {
      seed = to_int<std::uint64_t>(key, val);
    } else if (key == "count") {
      count = to_int<std::size_t>(key, val);
    } else {
      throw Error(ErrorKind::parse, "unknown checkpoint key '" + std::string(key) + "'");
    }
  }
  if (!ended) throw Error(ErrorKind::parse, "truncated checkpoint header in " + path.string());
  sp.validate();
  NetworkParams params(sp);
  if (count != params.size() || bytes.size() - pos != count * sizeof(double)) {
    throw Error(ErrorKind::parse, "checkpoint parameter count does not match its network");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t u;
    std::memcpy(&u, bytes.data() + pos + i * sizeof(double), sizeof u);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    params.flat()[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(u);
  }
  return {std::move(params), seed};
}

void save_model(const fs::path& stem, const TrainedModel& model) {
  save_checkpoint(fs::path(stem.string() + ".ckpt"), model.params, model.config.pinn.seed);
  std::string cfg = serialize_config(model.config);
  cfg += "# trained window\n# t_start = " + fmt(model.domain.t_start) +
         "\n# t_end = " + fmt(model.domain.t_end) + '\n';
  write_text(fs::path(stem.string() + ".cfg"), cfg);
}

TrainedModel load_model(const fs::path& stem, const UnitSystem& units) {
  TrainedModel m;
  m.config = read_config(fs::path(stem.string() + ".cfg"));
  m.units = units;
  m.domain = case_domain(m.config, units);
  m.params = load_checkpoint(fs::path(stem.string() + ".ckpt")).params;
  if (!(m.params.spec() == case_network_spec(m.config, units))) {
    throw Error(ErrorKind::parse, "checkpoint network does not match its config");
  }
  return m;
}

RunManifest make_manifest(std::string command, std::vector<std::string> arguments,
                          const CaseConfig& config, std::string output_dir) {
  RunManifest m;
  m.command = std::move(command);
  m.arguments = std::move(arguments);
  m.config = config;
  m.seed = config.pinn.seed;
  m.sampling_seed = derive_seed(config.pinn.seed, "sampling");
  m.init_seed = derive_seed(config.pinn.seed, "init");
  m.output_dir = std::move(output_dir);
  m.version = version_string();
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m.started_at = buf;
  return m;
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  std::ostringstream o;
  o << "# grinn run manifest\n"
    << "command = " << m.command << '\n';
  for (const auto& a : m.arguments) o << "arg = " << a << '\n';
  o << "seed = " << m.seed << '\n'
    << "sampling_seed = " << m.sampling_seed << '\n'
    << "init_seed = " << m.init_seed << '\n'
    << "output_dir = " << m.output_dir << '\n'
    << "version = " << m.version << '\n'
    << "started_at = " << m.started_at << '\n';
  for (const auto& [k, v] : parse_key_values(serialize_config(m.config))) {
    o << "config." << k << " = " << v << '\n';
  }
  write_text(path, o.str());
}

RunManifest read_manifest(const fs::path& path) {
  RunManifest m;
  KeyValues cfg;
  for (auto& [k, v] : parse_key_values(read_text(path))) {
    if (k.rfind("config.", 0) == 0) {
      cfg.emplace_back(k.substr(7), v);
    } else if (k == "command") {
      m.command = v;
    } else if (k == "arg") {
      m.arguments.push_back(v);
    } else if (k == "seed") {
      m.seed = to_int<std::uint64_t>(k, v);
    } else if (k == "sampling_seed") {
      m.sampling_seed = to_int<std::uint64_t>(k, v);
    } else if (k == "init_seed") {
      m.init_seed = to_int<std::uint64_t>(k, v);
    } else if (k == "output_dir") {
      m.output_dir = v;
    } else if (k == "version") {
      m.version = v;
    } else if (k == "started_at") {
      m.started_at = v;
    } else {
      throw Error(ErrorKind::parse, "unknown manifest key '" + k + "'");
    }
  }
  m.config = resolve_config(cfg, {});
  return m;
}

fs::path default_output_root() {
  const char* env = std::getenv("GRINN_OUTPUT_ROOT");
  return (env && *env) ? fs::path(env) : fs::path("runs");
}

const char* version_string() { return "0.1.0"; }

}  // namespace grinn
