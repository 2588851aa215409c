#pragma once

// File formats: key=value run configuration, diagnostic CSV, binary field
// snapshots, the JSON run manifest, and CSV/summary output of experiments.
//
// Snapshot layout (all little-endian, no padding, 42-byte header):
//   offset  0  magic "RADMSNP1"            8 bytes
//   offset  8  endianness marker 0x01       u8
//   offset  9  n_per_axis                  u32
//   offset 13  t                           f64
//   offset 21  alpha                       f64
//   offset 29  theta                       f64
//   offset 37  deconv_order                u32
//   offset 41  payload_kind                 u8  (0 spectral, 1 physical)
// Spectral payload: every mode, k1 outermost, each k_j ascending over
// [-n/2+1, n/2]; per mode three components as (re, im) f64 pairs.
// Physical payload: every point, i1 outermost, i_j ascending over [0, n);
// per point three f64 components.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "json.hpp"

#include "radm/diagnostics.hpp"
#include "radm/errors.hpp"
#include "radm/harness.hpp"
#include "radm/spectral_core.hpp"
#include "radm/timestepper.hpp"

#ifndef RADM_CODE_REVISION
#define RADM_CODE_REVISION "unknown"
#endif

namespace radm {

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------------------
// Enumerations as text

inline std::string to_string(IcPreset v) {
  switch (v) {
    case IcPreset::taylor_green_2d: return "taylor_green_2d";
    case IcPreset::random_divfree: return "random_divfree";
    case IcPreset::abc_flow: return "abc_flow";
  }
  return "?";
}

inline std::string to_string(ForcingPreset v) {
  switch (v) {
    case ForcingPreset::none: return "none";
    case ForcingPreset::steady_trig: return "steady_trig";
    case ForcingPreset::time_decaying_trig: return "time_decaying_trig";
  }
  return "?";
}

inline std::string to_string(ModelMode v) {
  switch (v) {
    case ModelMode::radm: return "radm";
    case ModelMode::limit_atheta: return "limit_atheta";
    case ModelMode::plain_rotational_nse: return "plain_rotational_nse";
  }
  return "?";
}

inline std::string to_string(ExperimentKind v) {
  switch (v) {
    case ExperimentKind::symbol_audit: return "symbol_audit";
    case ExperimentKind::n_sweep: return "n_sweep";
    case ExperimentKind::theta_sweep: return "theta_sweep";
    case ExperimentKind::taylor_green_verify: return "taylor_green_verify";
    case ExperimentKind::conservation_audit: return "conservation_audit";
    case ExperimentKind::stability_audit: return "stability_audit";
  }
  return "?";
}

template <class Enum, std::size_t N>
std::optional<Enum> enum_from(std::string_view text, const std::array<Enum, N>& values) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

inline constexpr std::array kIcPresets{IcPreset::taylor_green_2d, IcPreset::random_divfree, IcPreset::abc_flow};
inline constexpr std::array kForcingPresets{ForcingPreset::none, ForcingPreset::steady_trig,
                                            ForcingPreset::time_decaying_trig};
inline constexpr std::array kModelModes{ModelMode::radm, ModelMode::limit_atheta, ModelMode::plain_rotational_nse};
inline constexpr std::array kExperimentKinds{ExperimentKind::symbol_audit,        ExperimentKind::n_sweep,
                                             ExperimentKind::theta_sweep,         ExperimentKind::taylor_green_verify,
                                             ExperimentKind::conservation_audit, ExperimentKind::stability_audit};

// ---------------------------------------------------------------------------
// Configuration text

namespace detail {

struct KeyValueLine {
  std::size_t line = 0;
  std::string key;
  std::string value;
};

inline std::vector<KeyValueLine> split_key_values(std::string_view text) {
  std::vector<KeyValueLine> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(line_no, std::string(line), "expected key=value");
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(line_no, "", "empty key");
      for (const auto& prev : out) {
        if (prev.key == key) throw ConfigError(line_no, std::string(key), "duplicate key");
      }
      out.push_back({line_no, std::string(key), std::string(value)});
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

template <class T>
T require_number(const KeyValueLine& kv) {
  const auto v = parse_number<T>(kv.value);
  if (!v) throw ConfigError(kv.line, kv.key, "cannot parse '" + kv.value + "' as a number");
  return *v;
}

inline void require(bool ok, const KeyValueLine& kv, const std::string& what) {
  if (!ok) throw ConfigError(kv.line, kv.key, "value '" + kv.value + "' out of range: " + what);
}

// Applies one config key; false when the key is not a solver key.
inline bool apply_config_key(SolverConfig& cfg, const KeyValueLine& kv) {
  const auto& k = kv.key;
  if (k == "grid_n") {
    cfg.grid_n = require_number<int>(kv);
    require(cfg.grid_n >= 8 && cfg.grid_n % 2 == 0, kv, "must be even and >= 8");
  } else if (k == "nu") {
    cfg.nu = require_number<double>(kv);
    require(cfg.nu >= 0.0, kv, "must be >= 0");
  } else if (k == "alpha") {
    cfg.filter.alpha = require_number<double>(kv);
    require(cfg.filter.alpha >= 0.0 && std::isfinite(cfg.filter.alpha), kv, "must be >= 0");
  } else if (k == "theta") {
    cfg.filter.theta = require_number<double>(kv);
    require(cfg.filter.theta >= 0.0 && cfg.filter.theta <= 1.0, kv, "must lie in [0, 1]");
  } else if (k == "deconv_n") {
    cfg.filter.deconv_order = require_number<int>(kv);
    require(cfg.filter.deconv_order >= 0, kv, "must be >= 0");
  } else if (k == "dt") {
    cfg.dt = require_number<double>(kv);
    require(cfg.dt > 0.0, kv, "must be > 0");
  } else if (k == "t_end") {
    cfg.t_end = require_number<double>(kv);
    require(cfg.t_end > 0.0, kv, "must be > 0");
  } else if (k == "ic") {
    const auto v = enum_from(kv.value, kIcPresets);
    if (!v) throw ConfigError(kv.line, k, "unknown value '" + kv.value + "'");
    cfg.ic = *v;
  } else if (k == "seed") {
    cfg.seed = require_number<std::uint64_t>(kv);
  } else if (k == "forcing") {
    const auto v = enum_from(kv.value, kForcingPresets);
    if (!v) throw ConfigError(kv.line, k, "unknown value '" + kv.value + "'");
    cfg.forcing = *v;
  } else if (k == "model_mode") {
    const auto v = enum_from(kv.value, kModelModes);
    if (!v) throw ConfigError(kv.line, k, "unknown value '" + kv.value + "'");
    cfg.model_mode = *v;
  } else if (k == "cfl_safety") {
    cfg.cfl_safety = require_number<double>(kv);
    require(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0, kv, "must lie in (0, 1]");
  } else if (k == "sample_every") {
    cfg.sample_every = require_number<int>(kv);
    require(cfg.sample_every >= 1, kv, "must be >= 1");
  } else if (k == "out_dir") {
    require(!kv.value.empty(), kv, "must be nonempty");
    cfg.out_dir = kv.value;
  } else {
    return false;
  }
  return true;
}

inline void validate_parsed(const SolverConfig& cfg) {
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(0, "config", e.what());
  }
}

}  // namespace detail

/// Strict key=value parser; '#' starts a comment, missing keys keep defaults.
inline SolverConfig parse_config(std::string_view text) {
  SolverConfig cfg;
  for (const auto& kv : detail::split_key_values(text)) {
    if (!detail::apply_config_key(cfg, kv)) throw ConfigError(kv.line, kv.key, "unknown key");
  }
  detail::validate_parsed(cfg);
  return cfg;
}

/// Inverse of parse_config for every file-settable key.
inline std::string format_config(const SolverConfig& cfg) {
  std::ostringstream os;
  os << "grid_n=" << cfg.grid_n << '\n'
     << "nu=" << format_double(cfg.nu) << '\n'
     << "alpha=" << format_double(cfg.filter.alpha) << '\n'
     << "theta=" << format_double(cfg.filter.theta) << '\n'
     << "deconv_n=" << cfg.filter.deconv_order << '\n'
     << "dt=" << format_double(cfg.dt) << '\n'
     << "t_end=" << format_double(cfg.t_end) << '\n'
     << "ic=" << to_string(cfg.ic) << '\n'
     << "seed=" << cfg.seed << '\n'
     << "forcing=" << to_string(cfg.forcing) << '\n'
     << "model_mode=" << to_string(cfg.model_mode) << '\n'
     << "cfl_safety=" << format_double(cfg.cfl_safety) << '\n'
     << "sample_every=" << cfg.sample_every << '\n'
     << "out_dir=" << cfg.out_dir << '\n';
  return os.str();
}

/// Experiment files: the config keys plus `kind`, `sweep` (comma list) and `output`.
inline ExperimentSpec parse_experiment(std::string_view text) {
  ExperimentSpec spec;
  bool have_kind = false;
  for (const auto& kv : detail::split_key_values(text)) {
    if (kv.key == "kind") {
      const auto v = enum_from(kv.value, kExperimentKinds);
      if (!v) throw ConfigError(kv.line, kv.key, "unknown value '" + kv.value + "'");
      spec.kind = *v;
      have_kind = true;
    } else if (kv.key == "sweep") {
      spec.sweep_values.clear();
      std::string_view rest = kv.value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        const auto v = parse_number<double>(item);
        if (!v) throw ConfigError(kv.line, kv.key, "cannot parse '" + std::string(item) + "' as a number");
        spec.sweep_values.push_back(*v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    } else if (kv.key == "output") {
      spec.output_path = kv.value;
    } else if (!detail::apply_config_key(spec.base_config, kv)) {
      throw ConfigError(kv.line, kv.key, "unknown key");
    }
  }
  if (!have_kind) throw ConfigError(0, "kind", "missing");
  detail::validate_parsed(spec.base_config);
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(0, "sweep", e.what());
  }
  return spec;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(path, "write failed");
}

// ---------------------------------------------------------------------------
// Diagnostic CSV

inline constexpr std::string_view kDiagCsvHeader =
    "t,model_energy,model_dissipation,kinetic_energy,norm_theta,norm_1_plus_theta,div_residual,orth_defect,"
    "forcing_power";

inline std::string diag_csv_text(std::span<const DiagRecord> records) {
  std::string out(kDiagCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    const std::array<double, 9> cols{r.t,          r.model_energy, r.model_dissipation,
                                     r.kinetic_energy, r.norm_theta,  r.norm_1_plus_theta,
                                     r.div_residual,   r.orth_defect, r.forcing_power};
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ',';
      out += format_double(cols[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<DiagRecord> parse_diag_csv(std::string_view text) {
  std::vector<DiagRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kDiagCsvHeader) throw FormatError("diagnostic CSV header mismatch");
      continue;
    }
    if (line.empty()) continue;
    std::array<double, 9> cols{};
    std::size_t field = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto item = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (field >= cols.size()) throw FormatError("too many columns on CSV line " + std::to_string(line_no));
      const auto v = parse_number<double>(item);
      if (!v) throw FormatError("bad number on CSV line " + std::to_string(line_no));
      cols[field++] = *v;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != cols.size()) throw FormatError("too few columns on CSV line " + std::to_string(line_no));
    out.push_back({cols[0], cols[1], cols[2], cols[3], cols[4], cols[5], cols[6], cols[7], cols[8]});
  }
  return out;
}

inline void write_diag_csv(std::span<const DiagRecord> records, const std::string& path) {
  write_text_file(path, diag_csv_text(records));
}

inline std::vector<DiagRecord> read_diag_csv(const std::string& path) { return parse_diag_csv(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr std::array<char, 8> kSnapshotMagic{'R', 'A', 'D', 'M', 'S', 'N', 'P', '1'};
inline constexpr std::size_t kSnapshotHeaderSize = 42;

enum class PayloadKind : std::uint8_t { spectral = 0, physical = 1 };

struct SnapshotHeader {
  std::uint32_t n_per_axis = 0;
  double t = 0.0;
  double alpha = 0.0;
  double theta = 0.0;
  std::uint32_t deconv_order = 0;
  PayloadKind payload_kind = PayloadKind::spectral;

  std::size_t payload_bytes() const noexcept {
    const std::size_t count = static_cast<std::size_t>(n_per_axis) * n_per_axis * n_per_axis;
    return count * (payload_kind == PayloadKind::spectral ? 48 : 24);
  }
};

struct Snapshot {
  SnapshotHeader header;
  std::variant<SpectralVectorField, RealVectorField> field;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t u8() { return bytes_[pos_++]; }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline void write_header(ByteWriter& w, const SnapshotHeader& h) {
  for (char c : kSnapshotMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u8(0x01);
  w.u32(h.n_per_axis);
  w.f64(h.t);
  w.f64(h.alpha);
  w.f64(h.theta);
  w.u32(h.deconv_order);
  w.u8(static_cast<std::uint8_t>(h.payload_kind));
}

}  // namespace detail

inline SnapshotHeader snapshot_header(const WaveGrid& grid, double t, const FilterParams& p, PayloadKind kind) {
  return {static_cast<std::uint32_t>(grid.n()), t, p.alpha, p.theta, static_cast<std::uint32_t>(p.deconv_order),
          kind};
}

inline std::vector<std::uint8_t> encode_snapshot(const SpectralVectorField& v, double t, const FilterParams& p) {
  const auto& grid = v.grid();
  detail::ByteWriter w;
  detail::write_header(w, snapshot_header(grid, t, p, PayloadKind::spectral));
  const int n = grid.n();
  for (int k1 = -n / 2 + 1; k1 <= n / 2; ++k1) {
    for (int k2 = -n / 2 + 1; k2 <= n / 2; ++k2) {
      for (int k3 = -n / 2 + 1; k3 <= n / 2; ++k3) {
        const CVec3 c = v.at(grid.mode_of({k1, k2, k3}));
        for (const auto& z : c) {
          w.f64(z.real());
          w.f64(z.imag());
        }
      }
    }
  }
  return std::move(w.bytes());
}

inline std::vector<std::uint8_t> encode_snapshot(const RealVectorField& f, double t, const FilterParams& p) {
  detail::ByteWriter w;
  detail::write_header(w, snapshot_header(f.grid(), t, p, PayloadKind::physical));
  for (std::size_t i = 0; i < f.points(); ++i) {
    for (double x : f.at(i)) w.f64(x);
  }
  return std::move(w.bytes());
}

inline Snapshot decode_snapshot(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSnapshotHeaderSize) throw FormatError("snapshot truncated: header incomplete");
  if (!std::equal(kSnapshotMagic.begin(), kSnapshotMagic.end(), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw FormatError("snapshot magic mismatch");
  }
  detail::ByteReader r(bytes.subspan(8));
  if (r.u8() != 0x01) throw FormatError("unsupported endianness marker");
  SnapshotHeader h;
  h.n_per_axis = r.u32();
  h.t = r.f64();
  h.alpha = r.f64();
  h.theta = r.f64();
  h.deconv_order = r.u32();
  const auto kind = r.u8();
  if (kind > 1) throw FormatError("unknown payload kind " + std::to_string(kind));
  h.payload_kind = static_cast<PayloadKind>(kind);
  if (h.n_per_axis < 8 || h.n_per_axis % 2 != 0 || h.n_per_axis > 4096) {
    throw FormatError("invalid n_per_axis " + std::to_string(h.n_per_axis));
  }
  if (bytes.size() != kSnapshotHeaderSize + h.payload_bytes()) {
    throw FormatError("snapshot payload length " + std::to_string(bytes.size() - kSnapshotHeaderSize) +
                      " does not match header (" + std::to_string(h.payload_bytes()) + ")");
  }
  const WaveGrid grid(static_cast<int>(h.n_per_axis));
  detail::ByteReader p(bytes.subspan(kSnapshotHeaderSize));
  if (h.payload_kind == PayloadKind::spectral) {
    SpectralVectorField v(grid);
    const int n = grid.n();
    for (int k1 = -n / 2 + 1; k1 <= n / 2; ++k1) {
      for (int k2 = -n / 2 + 1; k2 <= n / 2; ++k2) {
        for (int k3 = -n / 2 + 1; k3 <= n / 2; ++k3) {
          CVec3 c;
          for (auto& z : c) {
            const double re = p.f64();
            const double im = p.f64();
            z = Complex(re, im);
          }
          v.set(grid.mode_of({k1, k2, k3}), c);
        }
      }
    }
    require_hermitian(v);
    return {h, std::move(v)};
  }
  RealVectorField f(grid);
  for (std::size_t i = 0; i < f.points(); ++i) {
    Vec3 x;
    for (auto& comp : x) comp = p.f64();
    f.set(i, x);
  }
  return {h, std::move(f)};
}

inline void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

inline void write_snapshot(const SpectralVectorField& v, double t, const FilterParams& p, const std::string& path) {
  write_bytes(path, encode_snapshot(v, t, p));
}

inline void write_snapshot(const RealVectorField& f, double t, const FilterParams& p, const std::string& path) {
  write_bytes(path, encode_snapshot(f, t, p));
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  int schema_version = 1;
  SolverConfig config;
  std::string created_at;
  std::string code_revision = RADM_CODE_REVISION;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::json to_json(const RunManifest& m) {
  const auto& c = m.config;
  return {
      {"schema_version", m.schema_version},
      {"created_at", m.created_at},
      {"code_revision", m.code_revision},
      {"grid", {{"n_per_axis", c.grid_n}, {"box_length", kTwoPi}}},
      {"config",
       {{"nu", c.nu},
        {"alpha", c.filter.alpha},
        {"theta", c.filter.theta},
        {"deconv_n", c.filter.deconv_order},
        {"theory_regime", c.filter.theory_regime()},
        {"dt", c.dt},
        {"t_end", c.t_end},
        {"ic", to_string(c.ic)},
        {"seed", c.seed},
        {"forcing", to_string(c.forcing)},
        {"model_mode", to_string(c.model_mode)},
        {"cfl_safety", c.cfl_safety},
        {"sample_every", c.sample_every},
        {"out_dir", c.out_dir}}},
  };
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != 1) throw FormatError("unsupported manifest schema " + std::to_string(m.schema_version));
  m.created_at = j.at("created_at").get<std::string>();
  m.code_revision = j.at("code_revision").get<std::string>();
  auto& c = m.config;
  c.grid_n = j.at("grid").at("n_per_axis").get<int>();
  const auto& jc = j.at("config");
  c.nu = jc.at("nu").get<double>();
  c.filter.alpha = jc.at("alpha").get<double>();
  c.filter.theta = jc.at("theta").get<double>();
  c.filter.deconv_order = jc.at("deconv_n").get<int>();
  c.dt = jc.at("dt").get<double>();
  c.t_end = jc.at("t_end").get<double>();
  auto enum_at = [&](const char* key, const auto& values) {
    const auto v = enum_from(jc.at(key).get<std::string>(), values);
    if (!v) throw FormatError(std::string("bad manifest value for ") + key);
    return *v;
  };
  c.ic = enum_at("ic", kIcPresets);
  c.seed = jc.at("seed").get<std::uint64_t>();
  c.forcing = enum_at("forcing", kForcingPresets);
  c.model_mode = enum_at("model_mode", kModelModes);
  c.cfl_safety = jc.at("cfl_safety").get<double>();
  c.sample_every = jc.at("sample_every").get<int>();
  c.out_dir = jc.at("out_dir").get<std::string>();
  return m;
}

// ---------------------------------------------------------------------------
// Output directory lock

/// Exclusive lock file `<dir>/.radm.lock`, removed on destruction.
class OutDirLock {
 public:
  explicit OutDirLock(const std::string& dir) : path_((std::filesystem::path(dir) / ".radm.lock").string()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw IoError(path_, "output directory is locked by another run");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  OutDirLock(const OutDirLock&) = delete;
  OutDirLock& operator=(const OutDirLock&) = delete;
  ~OutDirLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::string path_;
};

// ---------------------------------------------------------------------------
// Experiment tables

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string text() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline std::string format_bool(bool b) { return b ? "1" : "0"; }

inline CsvTable table_of(const NSweepReport& rep) {
  CsvTable t{{"N", "l2l2_gap", "linf_h_theta_gap", "symbol_gap", "ratio_power", "blew_up", "times_matched"}, {}};
  for (const auto& r : rep.rows) {
    t.rows.push_back({std::to_string(r.N), format_double(r.l2l2_gap), format_double(r.linf_h_theta_gap),
                      format_double(r.symbol_gap), format_double(r.ratio_power), format_bool(r.blew_up),
                      format_bool(r.times_matched)});
  }
  return t;
}

inline CsvTable table_of(const ConservationReport& rep) {
  CsvTable t{{"dt", "initial_energy", "final_energy", "relative_drift", "budget_residual", "energy_nonincreasing",
              "max_div_residual", "max_orth_defect", "bound_holds", "blew_up"},
             {}};
  for (const auto& r : rep.rows) {
    t.rows.push_back({format_double(r.dt), format_double(r.initial_energy), format_double(r.final_energy),
                      format_double(r.relative_drift), format_double(r.budget_residual),
                      format_bool(r.energy_nonincreasing), format_double(r.max_div_residual),
                      format_double(r.max_orth_defect), format_bool(r.bound_holds), format_bool(r.blew_up)});
  }
  return t;
}

inline CsvTable table_of(std::span<const ThetaRow> rows) {
  CsvTable t{{"theta", "theory_regime", "initial_energy", "final_energy", "budget_residual", "max_orth_defect",
              "final_norm_1_plus_theta", "energy_nonincreasing", "blew_up"},
             {}};
  for (const auto& r : rows) {
    t.rows.push_back({format_double(r.theta), format_bool(r.theory_regime), format_double(r.initial_energy),
                      format_double(r.final_energy), format_double(r.budget_residual),
                      format_double(r.max_orth_defect), format_double(r.final_norm_1_plus_theta),
                      format_bool(r.energy_nonincreasing), format_bool(r.blew_up)});
  }
  return t;
}

inline CsvTable table_of(const TaylorGreenReport& rep) {
  CsvTable t{{"dt", "error", "relative_error", "blew_up"}, {}};
  for (const auto& r : rep.rows) {
    t.rows.push_back(
        {format_double(r.dt), format_double(r.error), format_double(r.relative_error), format_bool(r.blew_up)});
  }
  return t;
}

inline CsvTable table_of(const StabilityReport& rep) {
  CsvTable t{{"epsilon", "response", "growth", "blew_up"}, {}};
  for (const auto& r : rep.rows) {
    t.rows.push_back(
        {format_double(r.epsilon), format_double(r.response), format_double(r.growth), format_bool(r.blew_up)});
  }
  return t;
}

inline CsvTable table_of(const SymbolAuditReport& rep) {
  return {{"checks", "violations", "worst_lower_slack", "worst_upper_slack", "worst_identity_ulps",
           "worst_monotone_step", "seconds"},
          {{std::to_string(rep.checks), std::to_string(rep.violations), format_double(rep.worst_lower_slack),
            format_double(rep.worst_upper_slack), format_double(rep.worst_identity_ulps),
            format_double(rep.worst_monotone_step), format_double(rep.seconds)}}};
}

// ---------------------------------------------------------------------------
// Experiment driver

struct ExperimentOutcome {
  CsvTable table;
  std::string summary;
  bool passed = true;
};

namespace detail {

inline std::string verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace detail

/// Runs one harness experiment. Sweep values are N for n_sweep, theta for
/// theta_sweep, dt for taylor_green_verify and conservation_audit, epsilon for
/// stability_audit; symbol_audit uses them as alpha values (default lattice if empty).
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentOutcome out;
  std::ostringstream s;
  const auto& base = spec.base_config;
  // dt sweeps are listed ascending; orders are measured from the coarsest step.
  const std::vector<double> coarse_to_fine(spec.sweep_values.rbegin(), spec.sweep_values.rend());
  switch (spec.kind) {
    case ExperimentKind::symbol_audit: {
      std::vector<double> alphas = spec.sweep_values;
      if (alphas.empty()) alphas = {0.1, 0.25, 1.0, 4.0};
      const std::array<double, 4> thetas{1.0 / 6.0, 0.5, 0.75, 1.0};
      const WaveGrid grid(base.grid_n);
      const auto rep = run_symbol_audit(grid, alphas, thetas, std::max(base.filter.deconv_order, 32));
      out.table = table_of(rep);
      out.passed = rep.passed();
      s << detail::verdict(out.passed) << " symbol_audit checks=" << rep.checks << " violations=" << rep.violations
        << '\n';
      for (const auto& o : rep.offenders) s << "  offender: " << o << '\n';
      break;
    }
    case ExperimentKind::n_sweep: {
      std::vector<int> orders;
      for (double v : spec.sweep_values) {
        if (v < 0 || v != std::floor(v)) throw ConfigError(0, "sweep", "N values must be nonnegative integers");
        orders.push_back(static_cast<int>(v));
      }
      const auto rep = run_n_sweep(base, orders);
      out.table = table_of(rep);
      bool first_largest = !rep.rows.empty();
      for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        if (!(rep.rows[i].l2l2_gap < rep.rows[0].l2l2_gap)) first_largest = false;
      }
      bool blew = rep.reference_blew_up;
      for (const auto& r : rep.rows) blew = blew || r.blew_up;
      out.passed = first_largest && !blew;
      s << detail::verdict(out.passed) << " n_sweep first_gap_largest=" << first_largest << " blow_up=" << blew
        << '\n';
      break;
    }
    case ExperimentKind::theta_sweep: {
      const auto rows = run_theta_sweep(base, spec.sweep_values);
      out.table = table_of(rows);
      s << "RECORDED theta_sweep rows=" << rows.size() << '\n';
      break;
    }
    case ExperimentKind::taylor_green_verify: {
      const auto rep = run_taylor_green_verify(base, coarse_to_fine);
      out.table = table_of(rep);
      out.passed = rep.passed(2.7);
      s << detail::verdict(out.passed) << " taylor_green_verify min_order=" << format_double(rep.min_order)
        << " below_roundoff_floor=" << rep.below_roundoff_floor << '\n';
      break;
    }
    case ExperimentKind::conservation_audit: {
      const auto rep = run_conservation_audit(base, coarse_to_fine);
      out.table = table_of(rep);
      bool ok = true;
      for (const auto& r : rep.rows) ok = ok && !r.blew_up && r.bound_holds;
      out.passed = ok;
      s << detail::verdict(ok) << " conservation_audit";
      for (double o : rep.residual_orders) s << " residual_order=" << format_double(o);
      s << '\n';
      break;
    }
    case ExperimentKind::stability_audit: {
      const auto rep = run_stability_audit(base, spec.sweep_values);
      out.table = table_of(rep);
      bool blew = rep.base_blew_up;
      for (const auto& r : rep.rows) blew = blew || r.blew_up;
      const bool ratio_ok = rep.rows.size() < 2 || (rep.normalized_ratio >= 0.5 && rep.normalized_ratio <= 2.0);
      out.passed = !blew && ratio_ok;
      s << detail::verdict(out.passed) << " stability_audit normalized_ratio=" << format_double(rep.normalized_ratio)
        << " implied_constant=" << format_double(rep.implied_constant) << '\n';
      break;
    }
  }
  out.summary = s.str();
  return out;
}

}  // namespace radm
