#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fiberpinn/errors.hpp"
#include "fiberpinn/mlp.hpp"

namespace fiberpinn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'F', 'P', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxLayers = 1024;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("checkpoint: truncated file " + path);
  return v;
}

}  // namespace

void checkpoint_save(const MlpModel& model, const std::string& path) {
  model.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, model.seed);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.widths.size()));
  for (int w : model.widths) put<std::uint32_t>(os, static_cast<std::uint32_t>(w));
  put<std::uint64_t>(os, model.params.size());
  os.write(reinterpret_cast<const char*>(model.params.data()),
           static_cast<std::streamsize>(model.params.size() * sizeof(double)));
  if (!os) throw IoError("checkpoint: write failed for " + path);
}

MlpModel checkpoint_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path);
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic)) throw IoError("checkpoint: truncated file " + path);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("checkpoint: bad magic in " + path);
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) {
    std::ostringstream os;
    os << "checkpoint: unsupported version " << version << " in " << path;
    throw IoError(os.str());
  }
  MlpModel m;
  m.seed = get<std::uint64_t>(is, path);
  const auto n_widths = get<std::uint32_t>(is, path);
  if (n_widths < 2 || n_widths > kMaxLayers) throw IoError("checkpoint: bad layer count in " + path);
  for (std::uint32_t i = 0; i < n_widths; ++i)
    m.widths.push_back(static_cast<int>(get<std::uint32_t>(is, path)));
  const auto n_params = get<std::uint64_t>(is, path);
  if (n_params != parameter_count(m.widths))
    throw IoError("checkpoint: parameter count does not match widths in " + path);
  m.params.resize(n_params);
  if (!is.read(reinterpret_cast<char*>(m.params.data()),
               static_cast<std::streamsize>(n_params * sizeof(double))))
    throw IoError("checkpoint: truncated file " + path);
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("checkpoint: trailing bytes in " + path);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  return m;
}

MlpModel checkpoint_load(const std::string& path, std::span<const int> expected_widths) {
  MlpModel m = checkpoint_load(path);
  if (!std::equal(m.widths.begin(), m.widths.end(), expected_widths.begin(), expected_widths.end()))
    throw ConfigError("checkpoint: layer widths in " + path + " do not match the configuration");
  return m;
}

}  // namespace fiberpinn
