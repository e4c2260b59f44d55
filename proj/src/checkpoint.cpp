#include <cstring>
#include <fstream>

#include "sketchparse/error.hpp"
#include "sketchparse/learn.hpp"

namespace sketchparse::learn {

namespace {

constexpr char kMagic[4] = {'S', 'K', 'P', 'A'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::ParseError, "truncated array container");
  return v;
}

}  // namespace

void save_arrays(const std::filesystem::path& path, const ArrayMap& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(arrays.size()));
  for (const auto& [name, m] : arrays) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(out, static_cast<std::uint64_t>(m.rows()));
    put(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

ArrayMap load_arrays(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::ParseError, "not an array container: " + path.string());
  }
  if (auto version = get<std::uint32_t>(in); version != kVersion) {
    throw Error(ErrorCode::ParseError, "unsupported container version " + std::to_string(version));
  }
  ArrayMap arrays;
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name(get<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw Error(ErrorCode::ParseError, "truncated array '" + name + "'");
    arrays.emplace(std::move(name), std::move(m));
  }
  return arrays;
}

}  // namespace sketchparse::learn
