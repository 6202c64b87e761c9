#include "nextcat/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace nextcat::ad {

namespace {

constexpr char kMagic[4] = {'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
  std::uint32_t v = 0;
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw ParseError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::map<std::string, Tensor>& tensors,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(f, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) {
      std::int32_t v = d;
      f.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    f.write(reinterpret_cast<const char*>(t.value().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!f.good()) throw IoError("write failed for " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError(path + ": not a checkpoint file");
  if (read_u32(f, path) != kVersion)
    throw ParseError(path + ": unsupported checkpoint version");
  std::uint32_t count = read_u32(f, path);
  std::map<std::string, Tensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = read_u32(f, path);
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len))
      throw ParseError(path + ": truncated checkpoint");
    std::uint32_t ndim = read_u32(f, path);
    std::vector<int> shape(ndim);
    std::size_t n = 1;
    for (auto& d : shape) {
      std::int32_t v = 0;
      if (!f.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw ParseError(path + ": truncated checkpoint");
      d = v;
      n *= static_cast<std::size_t>(v);
    }
    std::vector<double> data(n);
    if (!f.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(double))))
      throw ParseError(path + ": truncated checkpoint");
    out.emplace(std::move(name), Tensor::from(std::move(shape), std::move(data)));
  }
  return out;
}

}  // namespace nextcat::ad
