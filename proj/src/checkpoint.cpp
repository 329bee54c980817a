#include "uniedge/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "uniedge/errors.hpp"

namespace uniedge {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw BadCheckpoint("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint64_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put<std::uint64_t>(out, p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint64_t>(out, p.value.rank());
    for (std::size_t d : p.value.shape()) put<std::uint64_t>(out, d);
    for (double v : p.value.data()) put<double>(out, v);
  }
  if (!out) throw Error("failed writing checkpoint");
}

ParameterStore read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw BadCheckpoint("not a checkpoint (bad magic)");
  }
  if (const auto version = get<std::uint64_t>(in); version != kCheckpointVersion) {
    throw BadCheckpoint("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in);
  ParameterStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint64_t>(in);
    if (len > (1u << 20)) throw BadCheckpoint("implausible parameter name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(len))) throw BadCheckpoint("truncated checkpoint");
    const auto rank = get<std::uint64_t>(in);
    if (rank == 0 || rank > 8) throw BadCheckpoint("implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in);
    Tensor value(shape);
    for (double& v : value.data()) v = get<double>(in);
    store.declare(std::move(name), std::move(value));
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    write_checkpoint(out, params);
  }
  std::filesystem::rename(tmp, path);
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("checkpoint not found: " + path.string());
  ParameterStore loaded = read_checkpoint(in);
  if (loaded.size() != params.size()) {
    throw BadCheckpoint("checkpoint holds " + std::to_string(loaded.size()) + " parameters, model declares " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = loaded.at(i);
    auto& dst = params.at(i);
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw BadCheckpoint("checkpoint entry " + src.name + " " + to_string(src.value.shape()) +
                          " does not match " + dst.name + " " + to_string(dst.value.shape()));
    }
    dst.value = src.value;
  }
}

}  // namespace uniedge
