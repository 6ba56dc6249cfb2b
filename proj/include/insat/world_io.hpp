#pragma once

// World file: one JSON header line, then the occupancy as run lengths
// (LEB128 varints, alternating free/occupied, starting with free).

#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "insat/errors.hpp"
#include "insat/world.hpp"

namespace insat
{

inline constexpr int kWorldFormatVersion = 1;

namespace detail
{

inline void put_varint(std::string& out, std::uint64_t v)
{
  while (v >= 0x80)
  {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

inline std::uint64_t get_varint(const std::string& in, std::size_t& pos)
{
  std::uint64_t v = 0;
  int shift = 0;
  const std::size_t start = pos;
  while (true)
  {
    if (pos >= in.size())
      throw ParseError("truncated run-length payload", pos);
    const auto b = static_cast<std::uint8_t>(in[pos++]);
    if (shift > 56)
      throw ParseError("varint too long", start);
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80))
      return v;
    shift += 7;
  }
}

inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 json_vec(const nlohmann::json& j)
{
  if (!j.is_array() || j.size() != 3)
    throw InvalidArgument("expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace detail

inline std::string encode_occupancy(const VoxelMap& map)
{
  std::string out;
  std::uint8_t cur = 0;
  std::uint64_t run = 0;
  for (auto v : map.raw())
  {
    if (v == cur)
    {
      ++run;
      continue;
    }
    detail::put_varint(out, run);
    cur = v;
    run = 1;
  }
  detail::put_varint(out, run);
  return out;
}

inline std::string serialize_world(const World& w)
{
  nlohmann::json h;
  h["format"] = "insat-world";
  h["version"] = kWorldFormatVersion;
  h["origin"] = detail::vec_json(w.map.origin());
  h["resolution"] = w.map.resolution();
  h["dims"] = {w.map.dims()[0], w.map.dims()[1], w.map.dims()[2]};
  h["inflation_radius"] = w.inflation_radius;
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& wall : w.walls)
  {
    nlohmann::json wj;
    wj["x_min"] = wall.x_min;
    wj["x_max"] = wall.x_max;
    wj["windows"] = nlohmann::json::array();
    for (const auto& r : wall.windows)
      wj["windows"].push_back({{"y_min", r.y_min}, {"y_max", r.y_max}, {"z_min", r.z_min}, {"z_max", r.z_max}});
    walls.push_back(wj);
  }
  h["walls"] = walls;
  const std::string payload = encode_occupancy(w.map);
  h["payload_bytes"] = payload.size();
  return h.dump() + "\n" + payload;
}

inline World deserialize_world(const std::string& data)
{
  const std::size_t nl = data.find('\n');
  if (nl == std::string::npos)
    throw ParseError("missing header terminator", data.size());
  nlohmann::json h;
  try
  {
    h = nlohmann::json::parse(data.substr(0, nl));
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw ParseError(std::string("bad header: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  try
  {
    if (h.value("format", std::string()) != "insat-world")
      throw ParseError("not a world file", 0);
    const int version = h.at("version").get<int>();
    if (version != kWorldFormatVersion)
      throw VersionError("unsupported world format version " + std::to_string(version) +
                         " (expected " + std::to_string(kWorldFormatVersion) + ")");
    const Cell dims{h.at("dims")[0].get<int>(), h.at("dims")[1].get<int>(), h.at("dims")[2].get<int>()};
    VoxelMap map(detail::json_vec(h.at("origin")), h.at("resolution").get<double>(), dims);
    const std::size_t payload_bytes = h.at("payload_bytes").get<std::size_t>();
    const std::size_t begin = nl + 1;
    if (data.size() < begin + payload_bytes)
      throw ParseError("truncated payload: expected " + std::to_string(payload_bytes) + " bytes",
                       data.size());
    const std::string payload = data.substr(0, begin + payload_bytes);
    std::size_t pos = begin, cell = 0;
    bool occ = false;
    while (pos < payload.size())
    {
      const std::size_t at = pos;
      const std::uint64_t run = detail::get_varint(payload, pos);
      if (cell + run > map.size())
        throw ParseError("run-length payload overruns the grid", at);
      for (std::uint64_t k = 0; k < run; ++k) map.set(cell++, occ);
      occ = !occ;
    }
    if (cell != map.size())
      throw ParseError("run-length payload covers " + std::to_string(cell) + " of " +
                           std::to_string(map.size()) + " cells",
                       pos);
    std::vector<WallInfo> walls;
    for (const auto& wj : h.value("walls", nlohmann::json::array()))
    {
      WallInfo w;
      w.x_min = wj.at("x_min").get<double>();
      w.x_max = wj.at("x_max").get<double>();
      for (const auto& r : wj.at("windows"))
        w.windows.push_back({r.at("y_min").get<double>(), r.at("y_max").get<double>(),
                             r.at("z_min").get<double>(), r.at("z_max").get<double>()});
      walls.push_back(std::move(w));
    }
    return make_world(std::move(map), h.at("inflation_radius").get<double>(), std::move(walls));
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ParseError(std::string("bad header field: ") + e.what(), 0);
  }
}

inline void save_world(const World& w, const std::string& path)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error("cannot open " + path + " for writing");
  f << serialize_world(w);
  if (!f)
    throw Error("write failed: " + path);
}

inline std::string read_file(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline World load_world(const std::string& path) { return deserialize_world(read_file(path)); }

/// ASCII "x y z" per line ('#' comments allowed) into a grid padded around the points.
inline World import_xyz(const std::string& path, double resolution, double inflation_radius,
                        double padding = 1.0)
{
  const std::string data = read_file(path);
  std::vector<Vec3> pts;
  std::size_t pos = 0;
  while (pos < data.size())
  {
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos)
      end = data.size();
    std::string line = data.substr(pos, end - pos);
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.resize(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos)
    {
      std::istringstream ss(line);
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw ParseError("expected three numbers", pos);
      pts.emplace_back(x, y, z);
    }
    pos = end + 1;
  }
  if (pts.empty())
    throw ParseError("no points", 0);
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts)
  {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  lo.array() -= padding;
  hi.array() += padding;
  const Vec3 ext = hi - lo;
  VoxelMap map(lo, resolution,
               Cell{cells_for(ext.x(), resolution) + 1, cells_for(ext.y(), resolution) + 1,
                    cells_for(ext.z(), resolution) + 1});
  for (const auto& p : pts)
    if (auto c = map.try_world_to_cell(p))
      map.set(*c, true);
  return make_world(std::move(map), inflation_radius);
}

}  // namespace insat
