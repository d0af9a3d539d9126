#include "tadn/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'A', 'D', 'N', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const std::string& where) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw InputError(where + ": truncated checkpoint");
  }
  return v;
}

std::string get_bytes(std::istream& in, std::uint32_t n, const std::string& where) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw InputError(where + ": truncated checkpoint");
  return s;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);

  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) meta += k + "=" + v + "\n";
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));

  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  std::vector<float> buf;
  for (const auto& [name, m] : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    buf.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      buf[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + where);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw InputError(where + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(in, where);
  if (version != kCheckpointVersion) {
    throw InputError(where + ": unsupported checkpoint version " +
                     std::to_string(version));
  }

  Checkpoint ckpt;
  std::istringstream meta(get_bytes(in, get_u32(in, where), where));
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(where + ": malformed metadata line");
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const std::uint32_t count = get_u32(in, where);
  std::vector<float> buf;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_bytes(in, get_u32(in, where), where);
    const std::uint32_t rows = get_u32(in, where);
    const std::uint32_t cols = get_u32(in, where);
    buf.resize(static_cast<std::size_t>(rows) * cols);
    if (!buf.empty() &&
        !in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
      throw InputError(where + ": truncated payload for " + name);
    }
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < buf.size(); ++j) m.data()[j] = buf[j];
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  return ckpt;
}

Checkpoint snapshot(const ParameterStore& store) {
  Checkpoint ckpt;
  for (const auto& e : store.entries()) ckpt.tensors.emplace_back(e.name, e.tensor.value());
  return ckpt;
}

void restore(ParameterStore& store, const Checkpoint& ckpt) {
  if (ckpt.tensors.size() != store.entries().size()) {
    throw InputError("checkpoint has " + std::to_string(ckpt.tensors.size()) +
                     " tensors, model expects " +
                     std::to_string(store.entries().size()));
  }
  for (auto& e : store.entries()) {
    const Matrix* src = nullptr;
    for (const auto& [name, m] : ckpt.tensors) {
      if (name == e.name) {
        src = &m;
        break;
      }
    }
    if (src == nullptr) throw InputError("checkpoint is missing parameter " + e.name);
    if (src->rows() != e.tensor.rows() || src->cols() != e.tensor.cols()) {
      throw InputError("checkpoint shape mismatch for " + e.name);
    }
    e.tensor.mutable_value() = *src;
  }
}

}  // namespace nn
TADN_NAMESPACE_END
