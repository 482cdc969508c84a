#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "raylap/discovery.hpp"
#include "raylap/error.hpp"

namespace raylap {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'R', 'A', 'Y', 'B', 'N', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw Error(ErrorKind::invalid_parameter, "truncated ray bank file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_raybank(const RayBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::invalid_parameter, "cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bank.dim));
  put<std::uint64_t>(out, bank.rays.size());
  for (std::size_t r = 0; r < bank.rays.size(); ++r) {
    const Ray& ray = bank.rays[r];
    const RaySamples& s = bank.samples[r];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ray.kind));
    put<std::uint32_t>(out, s.dead ? 1u : 0u);
    for (Index i = 0; i < bank.dim; ++i) put<double>(out, ray.start[i]);
    for (Index i = 0; i < bank.dim; ++i) put<double>(out, ray.end[i]);
    put<std::uint64_t>(out, s.t.size());
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      put<double>(out, s.t[k]);
      put<double>(out, s.logl[k]);
      put<std::uint8_t>(out, s.refined[k]);
    }
  }
  if (!out) throw Error(ErrorKind::invalid_parameter, "failed writing '" + path + "'");
}

RayBank read_raybank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::invalid_parameter, "cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::invalid_parameter, "'" + path + "' is not a ray bank file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw Error(ErrorKind::invalid_parameter, "unsupported ray bank version " + std::to_string(version));
  RayBank bank;
  bank.dim = static_cast<Index>(get<std::uint32_t>(in));
  const auto n_rays = get<std::uint64_t>(in);
  for (std::uint64_t r = 0; r < n_rays; ++r) {
    Ray ray;
    const auto kind = get<std::uint32_t>(in);
    if (kind > 3) throw Error(ErrorKind::invalid_parameter, "corrupt ray kind in ray bank");
    ray.kind = static_cast<RayKind>(kind);
    RaySamples s;
    s.dead = get<std::uint32_t>(in) != 0;
    ray.start.resize(bank.dim);
    ray.end.resize(bank.dim);
    for (Index i = 0; i < bank.dim; ++i) ray.start[i] = get<double>(in);
    for (Index i = 0; i < bank.dim; ++i) ray.end[i] = get<double>(in);
    const auto n = get<std::uint64_t>(in);
    for (std::uint64_t k = 0; k < n; ++k) {
      s.t.push_back(get<double>(in));
      s.logl.push_back(get<double>(in));
      s.refined.push_back(get<std::uint8_t>(in));
    }
    bank.rays.push_back(std::move(ray));
    bank.samples.push_back(std::move(s));
  }
  return bank;
}

}  // namespace raylap
