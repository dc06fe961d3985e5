#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nsreg/dss.hpp"
#include "nsreg/field.hpp"
#include "nsreg/ledger.hpp"
#include "nsreg/norms.hpp"

namespace nsreg {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// 17 significant digits, the CSV contract.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Writes to a sibling temporary and renames, so readers never see a partial file.
inline void atomic_write(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(bool(out), ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    require(bool(out), ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorKind::IoError, "rename to " + path.string() + " failed: " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline void append_le(std::string& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(char((bits >> (8 * b)) & 0xff));
}

inline double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

/// Splits "header line\n" + payload and parses the header.
inline std::pair<Json, std::string_view> split_header(const std::string& bytes, const std::string& what) {
  auto nl = bytes.find('\n');
  require(nl != std::string::npos, ErrorKind::IoError, what + ": missing header line");
  Json head;
  try {
    head = Json::parse(bytes.substr(0, nl));
  } catch (const std::exception& e) {
    fail(ErrorKind::IoError, what + ": bad header: " + e.what());
  }
  return {head, std::string_view(bytes).substr(nl + 1)};
}

}  // namespace detail

// ---- field snapshots ------------------------------------------------------------

/// Header line, then little-endian doubles of the physical samples in (x, y, z, component) order.
inline std::string encode_snapshot(const PhysicalVector& p, double time) {
  const GridSpec& g = p.grid;
  Json head = {{"format", "nsreg-snapshot"},
               {"version", 1},
               {"grid", {{"n", g.n}, {"length", g.length}, {"dealias_fraction", g.dealias_fraction}}},
               {"time", time},
               {"components", 3},
               {"endianness", "little"}};
  std::string out = head.dump() + "\n";
  const std::size_t total = std::size_t(g.n) * g.n * g.n;
  out.reserve(out.size() + total * 24);
  for (std::size_t q = 0; q < total; ++q)
    for (int c = 0; c < 3; ++c) detail::append_le(out, p.data[c][q]);
  return out;
}

struct SnapshotFile {
  PhysicalVector samples;
  double time = 0.0;
};

inline SnapshotFile decode_snapshot(const std::string& bytes, const std::string& what = "snapshot") {
  auto [head, body] = detail::split_header(bytes, what);
  require(head.value("format", "") == "nsreg-snapshot", ErrorKind::IoError, what + ": not a snapshot file");
  require(head.value("endianness", "") == "little" && head.value("components", 0) == 3, ErrorKind::IoError,
          what + ": unsupported layout");
  GridSpec g{head["grid"]["n"].get<int>(), head["grid"]["length"].get<double>(),
             head["grid"]["dealias_fraction"].get<double>()};
  g.validate();
  const std::size_t total = std::size_t(g.n) * g.n * g.n;
  require(body.size() == total * 24, ErrorKind::IoError,
          what + ": payload has " + std::to_string(body.size()) + " bytes, expected " + std::to_string(total * 24));
  SnapshotFile s;
  s.time = head["time"].get<double>();
  s.samples = zero_physical_vector(g);
  for (std::size_t q = 0; q < total; ++q)
    for (int c = 0; c < 3; ++c) s.samples.data[c][q] = detail::read_le(body.data() + (3 * q + c) * 8);
  return s;
}

inline void write_snapshot(const fs::path& path, const SpectralField& v) {
  atomic_write(path, encode_snapshot(to_physical(v), v.time));
}

inline SpectralField read_snapshot(const fs::path& path) {
  SnapshotFile s = decode_snapshot(read_file(path), path.string());
  SpectralField v = to_spectral(s.samples);
  v.time = s.time;
  return v;
}

// ---- trajectory ledger directory ---------------------------------------------------

inline Json grid_json(const GridSpec& g) {
  return {{"n", g.n}, {"length", g.length}, {"dealias_fraction", g.dealias_fraction}};
}

/// Snapshot files first, the manifest last. The manifest lists each file with its size.
inline void write_ledger(const fs::path& dir, const TrajectoryLedger& led) {
  fs::create_directories(dir);
  fs::remove(dir / "manifest.json");
  Json snaps = Json::array();
  for (std::size_t i = 0; i < led.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.bin", i);
    std::string bytes = encode_snapshot(to_physical(led.snapshots[i].v), led.snapshots[i].time);
    atomic_write(dir / name, bytes);
    snaps.push_back({{"file", name}, {"time", led.snapshots[i].time}, {"bytes", bytes.size()}});
  }
  Json m = {{"format", "nsreg-ledger"},
            {"version", 1},
            {"grid", grid_json(led.grid)},
            {"scheme", led.scheme},
            {"dt", led.dt},
            {"times", led.step_times},
            {"energy", led.energy},
            {"dissipation", led.dissipation},
            {"snapshots", snaps}};
  atomic_write(dir / "manifest.json", m.dump(1) + "\n");
}

/// Throws IoError unless the manifest parses and every listed file exists with its recorded size.
inline Json validate_manifest(const fs::path& dir) {
  fs::path mp = dir / "manifest.json";
  require(fs::exists(mp), ErrorKind::IoError, "no manifest in " + dir.string());
  Json m;
  try {
    m = Json::parse(read_file(mp));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, "manifest does not parse: " + std::string(e.what()));
  }
  require(m.value("format", "") == "nsreg-ledger", ErrorKind::IoError, "not a ledger manifest");
  for (const auto& s : m.at("snapshots")) {
    fs::path f = dir / s.at("file").get<std::string>();
    require(fs::exists(f) && fs::file_size(f) == s.at("bytes").get<std::size_t>(), ErrorKind::IoError,
            "snapshot " + f.string() + " is missing or truncated");
  }
  return m;
}

inline TrajectoryLedger read_ledger(const fs::path& dir) {
  Json m = validate_manifest(dir);
  TrajectoryLedger led;
  led.grid = {m["grid"]["n"].get<int>(), m["grid"]["length"].get<double>(), m["grid"]["dealias_fraction"].get<double>()};
  led.scheme = m["scheme"].get<std::string>();
  led.dt = m["dt"].get<double>();
  led.dealias_fraction = led.grid.dealias_fraction;
  led.step_times = m["times"].get<std::vector<double>>();
  led.energy = m["energy"].get<std::vector<double>>();
  led.dissipation = m["dissipation"].get<std::vector<double>>();
  for (const auto& s : m["snapshots"]) {
    SpectralField v = read_snapshot(dir / s["file"].get<std::string>());
    led.snapshots.push_back({v.time, v, std::nullopt});
  }
  return led;
}

// ---- DSS profile file ------------------------------------------------------------------

/// Samples on a (log r, polar, azimuthal) tensor grid of the annulus [1, lambda].
struct ProfileSampling {
  int radial = 33;
  int polar = 33;
  int azimuthal = 64;
};

inline std::string encode_profile(const DssProfile& p, const ProfileSampling& s = {}) {
  Json head = {{"format", "nsreg-dss-profile"}, {"version", 1},        {"lambda", p.lambda},
               {"seam_tolerance", p.seam_tolerance}, {"radial", s.radial}, {"polar", s.polar},
               {"azimuthal", s.azimuthal},        {"components", 3},    {"endianness", "little"}};
  std::string out = head.dump() + "\n";
  for (int a = 0; a < s.radial; ++a) {
    double r = std::pow(p.lambda, double(a) / (s.radial - 1));
    for (int b = 0; b < s.polar; ++b) {
      double th = kPi * b / (s.polar - 1);
      for (int c = 0; c < s.azimuthal; ++c) {
        double ph = 2 * kPi * c / s.azimuthal;
        Vec3 x = r * Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        Vec3 v = p.annulus_field(x);
        for (int k = 0; k < 3; ++k) detail::append_le(out, v[k]);
      }
    }
  }
  return out;
}

/// Trilinear interpolation in (log r, polar, azimuthal); radii outside [1, lambda] are clamped.
inline DssProfile decode_profile(const std::string& bytes, const std::string& what = "profile") {
  auto [head, body] = detail::split_header(bytes, what);
  require(head.value("format", "") == "nsreg-dss-profile", ErrorKind::IoError, what + ": not a DSS profile file");
  ProfileSampling s{head["radial"].get<int>(), head["polar"].get<int>(), head["azimuthal"].get<int>()};
  require(s.radial >= 2 && s.polar >= 2 && s.azimuthal >= 1, ErrorKind::IoError, what + ": degenerate sampling");
  const std::size_t total = std::size_t(s.radial) * s.polar * s.azimuthal;
  require(body.size() == total * 24, ErrorKind::IoError, what + ": payload size mismatch");
  auto vals = std::make_shared<std::vector<double>>(total * 3);
  for (std::size_t q = 0; q < total * 3; ++q) (*vals)[q] = detail::read_le(body.data() + q * 8);
  DssProfile p;
  p.lambda = head["lambda"].get<double>();
  p.seam_tolerance = head["seam_tolerance"].get<double>();
  p.smoothness = "sampled";
  const double lam = p.lambda;
  p.annulus_field = [vals, s, lam](const Vec3& x) {
    double r = norm(x);
    if (r == 0.0) return Vec3{};
    double fr = std::clamp(std::log(r) / std::log(lam), 0.0, 1.0) * (s.radial - 1);
    double fth = std::acos(std::clamp(x.z / r, -1.0, 1.0)) / kPi * (s.polar - 1);
    double ph = std::atan2(x.y, x.x);
    if (ph < 0) ph += 2 * kPi;
    double fph = ph / (2 * kPi) * s.azimuthal;
    int a0 = std::min(int(fr), s.radial - 2), b0 = std::min(int(fth), s.polar - 2), c0 = int(fph) % s.azimuthal;
    double ta = fr - a0, tb = fth - b0, tc = fph - std::floor(fph);
    Vec3 out{};
    for (int da = 0; da < 2; ++da)
      for (int db = 0; db < 2; ++db)
        for (int dc = 0; dc < 2; ++dc) {
          double w = (da ? ta : 1 - ta) * (db ? tb : 1 - tb) * (dc ? tc : 1 - tc);
          if (w == 0.0) continue;
          std::size_t q = (std::size_t(a0 + da) * s.polar + (b0 + db)) * s.azimuthal + (c0 + dc) % s.azimuthal;
          out = out + w * Vec3{(*vals)[3 * q], (*vals)[3 * q + 1], (*vals)[3 * q + 2]};
        }
    return out;
  };
  return p;
}

inline DssProfile read_profile(const fs::path& path) { return decode_profile(read_file(path), path.string()); }

// ---- reports ------------------------------------------------------------------------------

inline Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

inline Json to_json(const NormReport& r) {
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  Json br = Json::array();
  for (const auto& e : r.breakdown) br.push_back({{"label", e.label}, {"key", e.key}, {"value", e.value}});
  return {{"norm_id", r.norm_id},          {"params", params},    {"value", r.value},
          {"argmax_location", vec_json(r.argmax)}, {"quadrature_error", r.quadrature_error}, {"breakdown", br}};
}

/// Minimal CSV builder; every double goes through format_double.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& add(double x) { return cell(format_double(x)); }
  CsvTable& add(const std::string& s) { return cell(s); }
  CsvTable& add(const char* s) { return cell(s); }
  CsvTable& add(long long x) { return cell(std::to_string(x)); }
  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += "\n";
    }
    return out;
  }
  std::size_t size() const { return rows_.size(); }

 private:
  CsvTable& cell(std::string s) {
    rows_.back().push_back(std::move(s));
    return *this;
  }
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace nsreg
