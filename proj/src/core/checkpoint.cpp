#include "sgnv/core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sgnv/core/errors.hpp"

namespace sgnv {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'N', 'V', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u64(std::ostream& os, uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((x >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= uint64_t(b[i]) << (8 * i);
  return x;
}

void write_str(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), std::streamsize(s.size()));
}

std::string read_str(std::istream& is) {
  uint64_t n = read_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), std::streamsize(n));
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const CheckpointMeta& meta, const ParamStore& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw Error("checkpoint_write", "cannot open " + path.string());
  os.write(kMagic, 8);
  write_u64(os, kVersion);
  nlohmann::json j = {{"module", meta.module},
                      {"step", meta.step},
                      {"config", meta.config}};
  write_str(os, j.dump());
  write_u64(os, params.all().size());
  for (auto& [name, v] : params.all()) {
    write_str(os, name);
    write_u64(os, v->val.shape().size());
    for (int d : v->val.shape()) write_u64(os, uint64_t(d));
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(v->val.data()),
             std::streamsize(v->val.size() * 8));
  }
  if (!os)
    throw Error("checkpoint_write", "short write to " + path.string());
}

static CheckpointMeta load_impl(const std::filesystem::path& path,
                                ParamStore& params, bool into_existing) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw Error("checkpoint_missing", "cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw Error("checkpoint_format", "bad magic in " + path.string());
  uint64_t ver = read_u64(is);
  if (ver != kVersion)
    throw Error("checkpoint_format",
                "unsupported version " + std::to_string(ver));
  nlohmann::json j = nlohmann::json::parse(read_str(is));
  CheckpointMeta meta;
  meta.module = j.at("module").get<std::string>();
  meta.step = j.at("step").get<int64_t>();
  meta.config = j.at("config");
  uint64_t n_arrays = read_u64(is);
  for (uint64_t k = 0; k < n_arrays; ++k) {
    std::string name = read_str(is);
    uint64_t rank = read_u64(is);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = int(read_u64(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()), std::streamsize(t.size() * 8));
    if (!is)
      throw Error("checkpoint_format", "truncated array " + name);
    if (into_existing) {
      Var v = params.get(name);
      if (v->val.shape() != shape)
        throw Error("checkpoint_format", "shape mismatch for " + name);
      v->val = std::move(t);
    } else {
      params.add(name, std::move(t));
    }
  }
  return meta;
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                               ParamStore& params) {
  return load_impl(path, params, false);
}

CheckpointMeta load_checkpoint_into(const std::filesystem::path& path,
                                    ParamStore& params) {
  return load_impl(path, params, true);
}

}  // namespace sgnv
