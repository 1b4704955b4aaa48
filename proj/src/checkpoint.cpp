// SPDX-License-Identifier: Apache-2.0

#include "mechnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "mechnet/error.hpp"

namespace mechnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'N', 'T', 'E', 'N', 'S', 'R', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated tensor container " + path.string());
  return v;
}

}  // namespace

void write_tensor_container(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(a.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(a.value.cols()));
    out.write(reinterpret_cast<const char*>(a.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(a.value.size())));
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<NamedArray> read_tensor_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a tensor container: " + path.string());
  }
  const auto count = get<std::uint32_t>(in, path);
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > (1u << 16)) throw ParseError("implausible tensor name length in " + path.string());
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw IoError("truncated tensor container " + path.string());
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    if (rows > (1u << 24) || cols > (1u << 24)) throw ParseError("implausible tensor shape in " + path.string());
    ad::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double) * rows * cols))) {
      throw IoError("truncated tensor container " + path.string());
    }
    arrays.push_back({std::move(name), std::move(m)});
  }
  return arrays;
}

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".manifest.json");
}

void save_model(const ModelWeights& weights, const std::filesystem::path& path) {
  std::vector<NamedArray> arrays;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& p : weights.params) {
    arrays.push_back({p.name, p.value});
    tensors.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  write_tensor_container(path, arrays);

  const Architecture& a = weights.arch;
  nlohmann::ordered_json manifest = {
      {"format", "mechnet-checkpoint"},
      {"version", 1},
      {"container", path.filename().string()},
      {"architecture",
       {{"variant", std::string(to_string(a.variant))},
        {"input_dim", a.input_dim},
        {"gnn_layers", a.gnn_layers},
        {"gnn_width", a.gnn_width},
        {"mlp_hidden_layers", a.mlp_hidden_layers},
        {"mlp_width", a.mlp_width},
        {"components", a.components},
        {"gin_epsilon", a.gin_epsilon}}},
      {"tensors", tensors}};
  std::ofstream out(manifest_path(path));
  if (!out) throw IoError("cannot write " + manifest_path(path).string());
  out << manifest.dump(2) << '\n';
}

ModelWeights load_model(const std::filesystem::path& path) {
  std::ifstream in(manifest_path(path));
  if (!in) throw IoError("cannot open " + manifest_path(path).string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  Architecture arch;
  try {
    const auto& a = manifest.at("architecture");
    arch.variant = parse_layer_variant(a.at("variant").get<std::string>());
    arch.input_dim = a.at("input_dim").get<std::size_t>();
    arch.gnn_layers = a.at("gnn_layers").get<std::size_t>();
    arch.gnn_width = a.at("gnn_width").get<std::size_t>();
    arch.mlp_hidden_layers = a.at("mlp_hidden_layers").get<std::size_t>();
    arch.mlp_width = a.at("mlp_width").get<std::size_t>();
    arch.components = a.at("components").get<std::size_t>();
    arch.gin_epsilon = a.value("gin_epsilon", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  // Build the expected layout, then fill it from the container.
  ModelWeights weights = init_weights(arch, 0);
  const auto arrays = read_tensor_container(path);
  if (arrays.size() != weights.params.size()) {
    throw ParseError("checkpoint tensor count does not match the architecture");
  }
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    auto& p = weights.params[i];
    if (arrays[i].name != p.name || arrays[i].value.rows() != p.value.rows() ||
        arrays[i].value.cols() != p.value.cols()) {
      throw ParseError("checkpoint tensor '" + arrays[i].name + "' does not match the architecture");
    }
    p.value = arrays[i].value;
  }
  return weights;
}

}  // namespace mechnet
