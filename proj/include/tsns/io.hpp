#pragma once
// Persistence and configuration plumbing: run manifests, the binary
// trajectory container, deterministic CSV emission, and the flat key=value
// configuration grammar shared by the command-line tool and the tests.

#include <cerrno>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "field.hpp"
#include "metrics.hpp"
#include "regime.hpp"
#include "solver.hpp"
#include "version.hpp"

namespace tsns {

// ---------------------------------------------------------------------------
// Hashing and low-level byte encoding
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

namespace detail {

inline void put_u32le(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64le(std::string& b, double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  for (int i = 0; i < 8; ++i) b.push_back(char((u >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

inline double get_f64le(const unsigned char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= std::uint64_t(p[i]) << (8 * i);
  double x;
  std::memcpy(&x, &u, 8);
  return x;
}

// %.17g renders doubles reproducibly and round-trips exactly.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Flat key=value configuration grammar
// ---------------------------------------------------------------------------

struct AppConfig {
  SolverConfig solver;
  MetricConfig metric;
  std::uint64_t seed = 1;
  double c0 = 1.0;
  bool c0_estimated = false;  // provenance of c0
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw std::invalid_argument("config: bad number for " + what + ": '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw std::invalid_argument("config: bad integer for " + what + ": '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || s.find('-') != std::string::npos)
    throw std::invalid_argument("config: bad unsigned integer for " + what + ": '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + what + ": '" + s + "'");
}

}  // namespace detail

// Parses "k1,k2" into a mode index.
inline ModeIndex parse_mode(const std::string& s) {
  std::vector<std::string> parts = detail::split(s, ',');
  if (parts.size() != 2)
    throw std::invalid_argument("config: bad mode '" + s + "' (want k1,k2)");
  return ModeIndex{(int)detail::parse_int(parts[0], "mode k1"),
                   (int)detail::parse_int(parts[1], "mode k2")};
}

// Parses "k1,k2;k1,k2;..." into a mode list.
inline std::vector<ModeIndex> parse_mode_list(const std::string& s) {
  std::vector<ModeIndex> out;
  for (const std::string& item : detail::split(s, ';')) out.push_back(parse_mode(item));
  return out;
}

// Parses "k1,k2,coeff;..." into a field on the given truncation.
inline SpectralField parse_field_spec(const TruncationSpec& t, const std::string& s) {
  std::vector<std::pair<ModeIndex, double>> entries;
  for (const std::string& item : detail::split(s, ';')) {
    std::vector<std::string> parts = detail::split(item, ',');
    if (parts.size() != 3)
      throw std::invalid_argument("config: bad field entry '" + item +
                                  "' (want k1,k2,coeff)");
    entries.push_back({ModeIndex{(int)detail::parse_int(parts[0], "field k1"),
                                 (int)detail::parse_int(parts[1], "field k2")},
                       detail::parse_double(parts[2], "field coeff")});
  }
  return make_field(t, entries);
}

// Parses the flat key=value grammar.  Lines are `key = value`; blank lines
// and `#` comments are skipped; unknown keys are rejected.
inline AppConfig parse_config_text(const std::string& text) {
  AppConfig app;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<ModeIndex> noise_modes;
  std::vector<double> noise_amps;
  while (std::getline(in, line)) {
    ++lineno;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::string::size_type eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    try {
    if (key == "nu") {
      app.solver.nu = detail::parse_double(val, key);
    } else if (key == "dt") {
      app.solver.dt = detail::parse_double(val, key);
    } else if (key == "trunc_k") {
      app.solver.trunc.K = (int)detail::parse_int(val, key);
    } else if (key == "dealias") {
      app.solver.trunc.dealias = detail::parse_bool(val, key);
    } else if (key == "period") {
      app.solver.forcing.period = detail::parse_double(val, key);
    } else if (key == "forcing") {
      app.solver.forcing.terms.clear();
      for (const std::string& item : detail::split(val, ';')) {
        std::vector<std::string> parts = detail::split(item, ',');
        if (parts.size() != 4)
          throw std::invalid_argument(
              "config line " + std::to_string(lineno) +
              ": forcing term wants k1,k2,amplitude,phase");
        ForcingTerm t;
        t.mode = ModeIndex{(int)detail::parse_int(parts[0], "forcing k1"),
                           (int)detail::parse_int(parts[1], "forcing k2")};
        t.amplitude = detail::parse_double(parts[2], "forcing amplitude");
        t.phase = detail::parse_double(parts[3], "forcing phase");
        app.solver.forcing.terms.push_back(t);
      }
    } else if (key == "noise_modes") {
      noise_modes = parse_mode_list(val);
    } else if (key == "noise_amps") {
      noise_amps.clear();
      for (const std::string& item : detail::split(val, ','))
        noise_amps.push_back(detail::parse_double(item, "noise amplitude"));
    } else if (key == "nonlinear") {
      app.solver.nonlinear_enabled = detail::parse_bool(val, key);
    } else if (key == "seed") {
      app.seed = detail::parse_u64(val, key);
    } else if (key == "c0") {
      app.c0 = detail::parse_double(val, key);
    } else if (key == "eta") {
      app.metric.eta = detail::parse_double(val, key);
    } else if (key == "metric_r") {
      app.metric.r = detail::parse_double(val, key);
    } else if (key == "quad_nodes") {
      app.metric.quad_nodes = (int)detail::parse_int(val, key);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.rfind("config line", 0) == 0) throw;
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": " + msg);
    }
  }
  if (noise_modes.size() != noise_amps.size())
    throw std::invalid_argument(
        "config: noise_modes and noise_amps must have equal length");
  app.solver.noise.modes = noise_modes;
  app.solver.noise.amplitudes = noise_amps;
  return app;
}

inline AppConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Canonical echo: parse_config_text(config_to_text(a)) reproduces `a`
// bit-exactly (floats rendered with %.17g).
inline std::string config_to_text(const AppConfig& app) {
  std::ostringstream out;
  out << "nu = " << detail::fmt_double(app.solver.nu) << "\n";
  out << "dt = " << detail::fmt_double(app.solver.dt) << "\n";
  out << "trunc_k = " << app.solver.trunc.K << "\n";
  out << "dealias = " << (app.solver.trunc.dealias ? "true" : "false") << "\n";
  out << "period = " << detail::fmt_double(app.solver.forcing.period) << "\n";
  if (!app.solver.forcing.terms.empty()) {
    out << "forcing = ";
    for (std::size_t i = 0; i < app.solver.forcing.terms.size(); ++i) {
      const ForcingTerm& t = app.solver.forcing.terms[i];
      if (i) out << "; ";
      out << t.mode.k1 << "," << t.mode.k2 << ","
          << detail::fmt_double(t.amplitude) << "," << detail::fmt_double(t.phase);
    }
    out << "\n";
  }
  if (!app.solver.noise.modes.empty()) {
    out << "noise_modes = ";
    for (std::size_t i = 0; i < app.solver.noise.modes.size(); ++i) {
      if (i) out << "; ";
      out << app.solver.noise.modes[i].k1 << "," << app.solver.noise.modes[i].k2;
    }
    out << "\nnoise_amps = ";
    for (std::size_t i = 0; i < app.solver.noise.amplitudes.size(); ++i) {
      if (i) out << ", ";
      out << detail::fmt_double(app.solver.noise.amplitudes[i]);
    }
    out << "\n";
  }
  out << "nonlinear = " << (app.solver.nonlinear_enabled ? "true" : "false") << "\n";
  out << "seed = " << app.seed << "\n";
  out << "c0 = " << detail::fmt_double(app.c0) << "\n";
  out << "eta = " << detail::fmt_double(app.metric.eta) << "\n";
  out << "metric_r = " << detail::fmt_double(app.metric.r) << "\n";
  out << "quad_nodes = " << app.metric.quad_nodes << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_echo;
  std::uint64_t master_seed = 0;
  std::string c0_provenance = "CONFIGURED";
  std::string created_at;  // ISO-8601 UTC
  std::uint64_t content_hash = 0;
};

inline std::string iso8601_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["tool_version"] = m.tool_version;
  j["config_echo"] = m.config_echo;
  j["master_seed"] = m.master_seed;
  j["c0_provenance"] = m.c0_provenance;
  j["created_at"] = m.created_at;
  j["content_hash"] = m.content_hash;
  return j;
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest: cannot open " + path);
  out << manifest_json(m).dump(2) << "\n";
  if (!out) throw std::runtime_error("manifest: write failed for " + path);
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);
  RunManifest m;
  try {
    nlohmann::json j;
    in >> j;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_echo = j.at("config_echo").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.c0_provenance = j.at("c0_provenance").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    m.content_hash = j.at("content_hash").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest: " + path + ": " + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Binary trajectory container
// ---------------------------------------------------------------------------
//
// Layout: 8-byte magic "TSNSTRJ1", 32-bit little-endian header length, UTF-8
// JSON header, then every frame as consecutive IEEE-754 doubles (little
// endian) in the header's mode order.  The header's mode enumeration is
// authoritative for the frame layout; the content hash covers the frame
// payload bytes.

inline constexpr char kTrajectoryMagic[9] = "TSNSTRJ1";

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
  if (traj.frames.empty())
    throw std::invalid_argument("save_trajectory: trajectory has no frames");
  const std::vector<ModeIndex> modes = enumerate_modes(traj.config.trunc);
  std::string payload;
  payload.reserve(traj.frames.size() * modes.size() * 8);
  for (const SpectralField& f : traj.frames) {
    if (f.coeff.size() != modes.size())
      throw std::invalid_argument("save_trajectory: frame truncation mismatch");
    for (double c : f.coeff) detail::put_f64le(payload, c);
  }
  const std::uint64_t hash = fnv1a64(
      reinterpret_cast<const unsigned char*>(payload.data()), payload.size());

  AppConfig echo;
  echo.solver = traj.config;
  nlohmann::json header;
  header["tool_version"] = kToolVersion;
  header["config"] = config_to_text(echo);
  header["start_index"] = traj.start_index;
  header["frame_count"] = traj.frames.size();
  std::vector<std::string> order;
  order.reserve(modes.size());
  for (const ModeIndex& k : modes)
    order.push_back(std::to_string(k.k1) + "," + std::to_string(k.k2));
  header["mode_order"] = order;
  header["content_hash"] = hash;
  const std::string htext = header.dump();

  std::string blob;
  blob.reserve(12 + htext.size() + payload.size());
  blob.append(kTrajectoryMagic, 8);
  detail::put_u32le(blob, (std::uint32_t)htext.size());
  blob += htext;
  blob += payload;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_trajectory: cannot open " + path);
  out.write(blob.data(), (std::streamsize)blob.size());
  if (!out) throw std::runtime_error("save_trajectory: write failed for " + path);
}

inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_trajectory: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kTrajectoryMagic, 8) != 0)
    throw std::runtime_error("load_trajectory: " + path +
                             ": not a trajectory container (bad magic)");
  const std::uint32_t hlen = detail::get_u32le(bytes.data() + 8);
  if (bytes.size() < 12 + (std::size_t)hlen)
    throw std::runtime_error("load_trajectory: " + path + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_trajectory: " + path + ": bad header: " + e.what());
  }

  Trajectory traj;
  std::uint64_t expect_hash = 0;
  std::size_t frame_count = 0;
  std::vector<std::string> order;
  try {
    AppConfig app = parse_config_text(header.at("config").get<std::string>());
    traj.config = app.solver;
    traj.start_index = header.at("start_index").get<std::int64_t>();
    frame_count = header.at("frame_count").get<std::size_t>();
    order = header.at("mode_order").get<std::vector<std::string>>();
    expect_hash = header.at("content_hash").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_trajectory: " + path + ": bad header: " + e.what());
  }
  validate(traj.config);

  // The header's mode order is authoritative: map each stored column to the
  // canonical slot it belongs to.
  const std::size_t dim = mode_count(traj.config.trunc);
  if (order.size() != dim)
    throw std::runtime_error("load_trajectory: " + path +
                             ": mode_order size does not match truncation");
  std::vector<int> slot_of(dim, -1);
  std::vector<bool> seen(dim, false);
  for (std::size_t c = 0; c < dim; ++c) {
    int s = mode_slot(traj.config.trunc, parse_mode(order[c]));
    if (s < 0 || seen[(std::size_t)s])
      throw std::runtime_error("load_trajectory: " + path +
                               ": invalid mode_order entry '" + order[c] + "'");
    seen[(std::size_t)s] = true;
    slot_of[c] = s;
  }

  const unsigned char* payload = bytes.data() + 12 + hlen;
  const std::size_t avail = bytes.size() - 12 - hlen;
  const std::size_t frame_bytes = dim * 8;
  if (avail < frame_count * frame_bytes) {
    const std::size_t failing = avail / frame_bytes;  // first incomplete frame
    throw std::runtime_error("load_trajectory: " + path + ": truncated at frame " +
                             std::to_string(failing) + " of " +
                             std::to_string(frame_count));
  }
  const std::uint64_t got_hash = fnv1a64(payload, frame_count * frame_bytes);
  if (got_hash != expect_hash)
    throw std::runtime_error("load_trajectory: " + path +
                             ": integrity error: content hash mismatch");

  traj.frames.reserve(frame_count);
  for (std::size_t f = 0; f < frame_count; ++f) {
    SpectralField w = zero_field(traj.config.trunc);
    for (std::size_t c = 0; c < dim; ++c) {
      w.coeff[(std::size_t)slot_of[c]] =
          detail::get_f64le(payload + f * frame_bytes + c * 8);
    }
    traj.frames.push_back(std::move(w));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Deterministic CSV emission
// ---------------------------------------------------------------------------

// One `#` comment line, one column-name line, then rows with %.17g cells.
inline std::string csv_text(const std::string& comment,
                            const std::vector<std::string>& columns,
                            const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  out << "# " << comment << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ",";
    out << columns[i];
  }
  out << "\n";
  for (const std::vector<double>& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument("csv: row width does not match columns");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << detail::fmt_double(row[i]);
    }
    out << "\n";
  }
  return out.str();
}

inline void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write: cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write: failed for " + path);
}

}  // namespace tsns
