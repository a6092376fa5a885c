#include "scsd/volume.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <vector>

namespace scsd {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "raw volume payloads are little-endian");

std::filesystem::path strip_ext(std::filesystem::path p) {
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  return p;
}

json direction_set_to_json(const DirectionSet& d) {
  json dirs = json::array();
  for (const auto& v : d.directions) dirs.push_back({v.x(), v.y(), v.z()});
  return json{{"b_value", d.b_value}, {"hemisphere", d.hemisphere}, {"vectors", dirs}};
}

DirectionSet direction_set_from_json(const json& j) {
  DirectionSet d;
  d.b_value = j.value("b_value", 0.0);
  d.hemisphere = j.value("hemisphere", false);
  for (const auto& v : j.at("vectors"))
    d.directions.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
  return d;
}

void write_pair(const std::filesystem::path& base, const json& header, const MatRM& data,
                const std::string& dtype) {
  if (dtype != "f64" && dtype != "f32")
    throw std::invalid_argument("save_volume: dtype must be f64 or f32");
  {
    std::ofstream jf(base.string() + ".json");
    if (!jf) throw std::runtime_error("cannot open " + base.string() + ".json");
    jf << header.dump(2) << '\n';
  }
  std::ofstream rf(base.string() + ".raw", std::ios::binary);
  if (!rf) throw std::runtime_error("cannot open " + base.string() + ".raw");
  if (dtype == "f64") {
    rf.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(data.size())));
  } else {
    std::vector<float> buf(static_cast<size_t>(data.size()));
    for (Eigen::Index i = 0; i < data.size(); ++i)
      buf[static_cast<size_t>(i)] = static_cast<float>(*(data.data() + i));
    rf.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(sizeof(float) * buf.size()));
  }
  if (!rf) throw std::runtime_error("write failed: " + base.string() + ".raw");
}

struct LoadedPair {
  json header;
  MatRM data;
};

LoadedPair read_pair(const std::filesystem::path& base_in) {
  const auto base = strip_ext(base_in);
  json header;
  {
    std::ifstream jf(base.string() + ".json");
    if (!jf) throw std::runtime_error("cannot open " + base.string() + ".json");
    jf >> header;
  }
  const auto& jd = header.at("dims");
  Dims3 dims{jd.at(0).get<int>(), jd.at(1).get<int>(), jd.at(2).get<int>()};
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
    throw std::runtime_error(base.string() + ".json: invalid dims");
  const long long rows = header.at("num_rows").get<long long>();
  const std::string dtype = header.at("dtype").get<std::string>();
  if (dtype != "f64" && dtype != "f32")
    throw std::runtime_error(base.string() + ".json: unsupported dtype '" + dtype + "'");
  if (header.value("byte_order", "little") != "little")
    throw std::runtime_error(base.string() + ".json: unsupported byte order");
  if (header.value("ordering", "x-fastest") != "x-fastest")
    throw std::runtime_error(base.string() + ".json: unsupported voxel ordering");

  const long long count = rows * dims.count();
  const size_t elem = dtype == "f64" ? sizeof(double) : sizeof(float);
  std::ifstream rf(base.string() + ".raw", std::ios::binary | std::ios::ate);
  if (!rf) throw std::runtime_error("cannot open " + base.string() + ".raw");
  const auto bytes = static_cast<long long>(rf.tellg());
  if (bytes != count * static_cast<long long>(elem))
    throw std::runtime_error(base.string() + ".raw: payload size " + std::to_string(bytes) +
                             " does not match header (" + std::to_string(count * elem) + " bytes)");
  rf.seekg(0);

  LoadedPair out;
  out.header = std::move(header);
  out.data.resize(rows, dims.count());
  if (dtype == "f64") {
    rf.read(reinterpret_cast<char*>(out.data.data()), bytes);
  } else {
    std::vector<float> buf(static_cast<size_t>(count));
    rf.read(reinterpret_cast<char*>(buf.data()), bytes);
    for (long long i = 0; i < count; ++i) *(out.data.data() + i) = buf[static_cast<size_t>(i)];
  }
  if (!rf) throw std::runtime_error("read failed: " + base.string() + ".raw");
  if (!out.data.allFinite())
    throw std::runtime_error(base.string() + ".raw: payload contains non-finite values");
  return out;
}

json common_header(Dims3 dims, long long rows, const std::string& dtype) {
  return json{{"dims", {dims.nx, dims.ny, dims.nz}},
              {"num_rows", rows},
              {"dtype", dtype},
              {"byte_order", "little"},
              {"ordering", "x-fastest"}};
}

} // namespace

void save_volume(const SignalVolume& vol, const std::filesystem::path& base,
                 const std::string& dtype) {
  if (vol.data.cols() != vol.dims.count() || vol.data.rows() != vol.acquisition.size())
    throw std::invalid_argument("save_volume: data shape inconsistent with header");
  json h = common_header(vol.dims, vol.data.rows(), dtype);
  h["kind"] = "signal";
  h["acquisition"] = direction_set_to_json(vol.acquisition);
  write_pair(strip_ext(base), h, vol.data, dtype);
}

void save_volume(const CoefficientVolume& vol, const std::filesystem::path& base,
                 const std::string& dtype) {
  const long long expected = vol.num_recon() + (vol.has_iso_row ? 1 : 0);
  if (vol.data.cols() != vol.dims.count() || vol.data.rows() != expected)
    throw std::invalid_argument("save_volume: data shape inconsistent with header");
  json h = common_header(vol.dims, vol.data.rows(), dtype);
  h["kind"] = "coefficients";
  h["has_iso_row"] = vol.has_iso_row;
  h["recon_dirs"] = direction_set_to_json(vol.recon_dirs);
  write_pair(strip_ext(base), h, vol.data, dtype);
}

SignalVolume load_signal_volume(const std::filesystem::path& base) {
  auto [header, data] = read_pair(base);
  SignalVolume v;
  const auto& jd = header.at("dims");
  v.dims = {jd.at(0).get<int>(), jd.at(1).get<int>(), jd.at(2).get<int>()};
  if (header.contains("acquisition"))
    v.acquisition = direction_set_from_json(header.at("acquisition"));
  v.data = std::move(data);
  if ((v.data.array() < 0.0).any())
    throw std::runtime_error("signal volume has negative entries");
  return v;
}

CoefficientVolume load_coefficient_volume(const std::filesystem::path& base) {
  auto [header, data] = read_pair(base);
  CoefficientVolume v;
  const auto& jd = header.at("dims");
  v.dims = {jd.at(0).get<int>(), jd.at(1).get<int>(), jd.at(2).get<int>()};
  v.has_iso_row = header.value("has_iso_row", true);
  if (header.contains("recon_dirs"))
    v.recon_dirs = direction_set_from_json(header.at("recon_dirs"));
  v.data = std::move(data);
  return v;
}

} // namespace scsd
