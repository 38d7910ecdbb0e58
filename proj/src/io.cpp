#include "camtraj/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace camtraj {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw parse_error("unexpected end of binary file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  put_u32(out, static_cast<std::uint32_t>(bits & 0xffffffffull));
  put_u32(out, static_cast<std::uint32_t>(bits >> 32));
}

double get_f64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return std::bit_cast<double>(lo | (hi << 32));
}

void check_magic(std::istream& in, const char* magic, const char* what) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::string(buf, 4) != magic)
    throw parse_error(std::string("not a ") + what + " file (bad magic)");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open " + path.string());
  return in;
}

std::vector<double> parse_fields(const std::string& line, std::size_t expected,
                                 int line_no) {
  std::istringstream iss(line);
  std::vector<double> fields;
  double v;
  while (iss >> v) fields.push_back(v);
  if (!iss.eof()) throw parse_error("malformed number", line_no);
  if (fields.size() != expected)
    throw parse_error("expected " + std::to_string(expected) + " fields, got " +
                          std::to_string(fields.size()),
                      line_no);
  for (double f : fields) {
    if (!std::isfinite(f)) throw parse_error("non-finite value", line_no);
  }
  return fields;
}

Rotation quaternion_field(double w, double x, double y, double z, int line_no) {
  const double norm = std::sqrt(w * w + x * x + y * y + z * z);
  if (std::abs(norm - 1.0) > 1e-3)
    throw parse_error("quaternion norm deviates from 1 by more than 1e-3", line_no);
  return Rotation::from_quaternion(w, x, y, z);
}

}  // namespace

TrajectoryFormat trajectory_format_from_string(const std::string& name) {
  if (name == "native") return TrajectoryFormat::native;
  if (name == "tum") return TrajectoryFormat::tum;
  throw config_error("unknown trajectory format: " + name);
}

Trajectory parse_trajectory(const std::string& text, TrajectoryFormat format) {
  Trajectory traj;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  bool any_intrinsics = false;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    if (format == TrajectoryFormat::native) {
      const auto f = parse_fields(line, 13, line_no);
      Pose pose;
      pose.rotation = quaternion_field(f[5], f[6], f[7], f[8], line_no);
      pose.position = Vec3(f[9], f[10], f[11]);
      if (f[12] < 0.0 || f[12] > 1.0)
        throw parse_error("confidence outside [0, 1]", line_no);
      std::optional<Intrinsics> k;
      if (!(f[1] == 0.0 && f[2] == 0.0 && f[3] == 0.0 && f[4] == 0.0)) {
        Intrinsics intr;
        intr.fx = f[1];
        intr.fy = f[2];
        intr.cx = f[3];
        intr.cy = f[4];
        if (!(intr.fx > 0.0) || !(intr.fy > 0.0))
          throw parse_error("focal lengths must be positive", line_no);
        k = intr;
        any_intrinsics = true;
      }
      traj.poses.push_back(pose);
      traj.confidence.push_back(f[12]);
      traj.intrinsics.push_back(k);
    } else {
      const auto f = parse_fields(line, 8, line_no);
      Pose pose;
      pose.rotation = quaternion_field(f[7], f[4], f[5], f[6], line_no);
      pose.position = Vec3(f[1], f[2], f[3]);
      traj.poses.push_back(pose);
      traj.confidence.push_back(1.0);
    }
  }
  if (traj.size() < 2) throw parse_error("trajectory needs at least 2 frames");
  if (format == TrajectoryFormat::native && !any_intrinsics) traj.intrinsics.clear();
  traj.validate();
  return traj;
}

Trajectory load_trajectory(const std::filesystem::path& path, TrajectoryFormat format) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_trajectory(text.str(), format);
}

std::string serialize_trajectory(const Trajectory& traj) {
  traj.validate();
  std::string out;
  out += "# columns: frame fx fy cx cy qw qx qy qz tx ty tz conf\n";
  out += "# quaternion is scalar-first and unit; conf lies in [0, 1]\n";
  out += "# fx fy cx cy are all zero when a frame carries no intrinsics\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Pose& p = traj.poses[i];
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    if (!traj.intrinsics.empty() && traj.intrinsics[i]) {
      fx = traj.intrinsics[i]->fx;
      fy = traj.intrinsics[i]->fy;
      cx = traj.intrinsics[i]->cx;
      cy = traj.intrinsics[i]->cy;
    }
    const Eigen::Quaterniond q = p.rotation.quaternion();
    out += std::to_string(i);
    for (double v : {fx, fy, cx, cy, q.w(), q.x(), q.y(), q.z(), p.position.x(),
                     p.position.y(), p.position.z(), traj.confidence[i]}) {
      out += " ";
      out += fmt(v);
    }
    out += "\n";
  }
  return out;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  const std::string text = serialize_trajectory(traj);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw parse_error("failed writing " + path.string());
}

void save_confidence_maps(const std::filesystem::path& path,
                          const std::vector<ConfidenceMap>& maps) {
  if (maps.empty()) throw config_error("no confidence maps to save");
  const int h = maps.front().height, w = maps.front().width;
  auto out = open_out(path);
  out.write("CNF1", 4);
  put_u32(out, static_cast<std::uint32_t>(maps.size()));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  for (const ConfidenceMap& m : maps) {
    if (m.height != h || m.width != w ||
        m.values.size() != static_cast<std::size_t>(h) * w)
      throw config_error("confidence maps have inconsistent dimensions");
    for (double v : m.values) put_f32(out, static_cast<float>(v));
  }
  if (!out) throw parse_error("failed writing " + path.string());
}

std::vector<ConfidenceMap> load_confidence_maps(const std::filesystem::path& path) {
  auto in = open_in(path);
  check_magic(in, "CNF1", "confidence map");
  const std::uint32_t n = get_u32(in), h = get_u32(in), w = get_u32(in);
  if (n == 0 || h == 0 || w == 0) throw parse_error("empty confidence map file");
  std::vector<ConfidenceMap> maps(n);
  for (auto& m : maps) {
    m.height = static_cast<int>(h);
    m.width = static_cast<int>(w);
    m.values.resize(static_cast<std::size_t>(h) * w);
    for (double& v : m.values) v = get_f32(in);
  }
  return maps;
}

void save_pluecker_maps(const std::filesystem::path& path,
                        const std::vector<PlueckerMap>& maps) {
  if (maps.empty()) throw config_error("no ray maps to save");
  const int h = maps.front().height, w = maps.front().width;
  auto out = open_out(path);
  out.write("PLK1", 4);
  put_u32(out, static_cast<std::uint32_t>(maps.size()));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  for (const PlueckerMap& m : maps) {
    if (m.height != h || m.width != w ||
        m.data.size() != static_cast<std::size_t>(6) * h * w)
      throw config_error("ray maps have inconsistent dimensions");
    for (double v : m.data) put_f32(out, static_cast<float>(v));
  }
  if (!out) throw parse_error("failed writing " + path.string());
}

std::vector<PlueckerMap> load_pluecker_maps(const std::filesystem::path& path) {
  auto in = open_in(path);
  check_magic(in, "PLK1", "ray map");
  const std::uint32_t n = get_u32(in), h = get_u32(in), w = get_u32(in);
  if (n == 0 || h == 0 || w == 0) throw parse_error("empty ray map file");
  std::vector<PlueckerMap> maps(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    maps[i].frame_index = static_cast<int>(i);
    maps[i].height = static_cast<int>(h);
    maps[i].width = static_cast<int>(w);
    maps[i].data.resize(static_cast<std::size_t>(6) * h * w);
    for (double& v : maps[i].data) v = get_f32(in);
  }
  return maps;
}

void save_policy(const std::filesystem::path& path, const PolicyParams& params) {
  params.validate();
  const int d = params.state_dim();
  const int t = params.total_steps();
  auto out = open_out(path);
  out.write("TPL1", 4);
  put_u32(out, static_cast<std::uint32_t>(2 + t + 2 * d * d + d * t));
  put_f64(out, static_cast<double>(d));
  put_f64(out, static_cast<double>(t));
  for (int i = 0; i < t; ++i) put_f64(out, params.sigma[i]);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) put_f64(out, params.weight_cond(r, c));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) put_f64(out, params.weight_state(r, c));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < t; ++c) put_f64(out, params.step_bias(r, c));
  if (!out) throw parse_error("failed writing " + path.string());
}

PolicyParams load_policy(const std::filesystem::path& path) {
  auto in = open_in(path);
  check_magic(in, "TPL1", "policy checkpoint");
  const std::uint32_t count = get_u32(in);
  if (count < 2) throw parse_error("policy checkpoint header is too small");
  const double dd = get_f64(in);
  const double dt = get_f64(in);
  if (dd < 1 || dt < 1 || dd != std::floor(dd) || dt != std::floor(dt) ||
      dd > 1e6 || dt > 1e6)
    throw parse_error("policy checkpoint has invalid dimensions");
  const int d = static_cast<int>(dd);
  const int t = static_cast<int>(dt);
  if (count != static_cast<std::uint32_t>(2 + t + 2 * d * d + d * t))
    throw parse_error("policy checkpoint size does not match its dimensions");
  PolicyParams params = PolicyParams::make(d, t);
  for (int i = 0; i < t; ++i) params.sigma[i] = get_f64(in);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) params.weight_cond(r, c) = get_f64(in);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) params.weight_state(r, c) = get_f64(in);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < t; ++c) params.step_bias(r, c) = get_f64(in);
  params.validate();
  return params;
}

}  // namespace camtraj
