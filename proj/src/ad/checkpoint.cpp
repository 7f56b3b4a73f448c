#include "fullend/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fullend/error.hpp"

namespace fullend::ad {

namespace {

constexpr char kMagic[8] = {'F', 'E', 'S', 'E', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint: truncated file");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

std::string encode_checkpoint(const ParamList& params, const std::map<std::string, std::string>& meta) {
  std::ostringstream header;
  for (const auto& [k, v] : meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw ContractError("checkpoint: meta key/value may not contain spaces or newlines: " + k);
    header << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& p : params) {
    if (p.name.find_first_of(" \n") != std::string::npos) throw ContractError("checkpoint: bad tensor name " + p.name);
    header << "tensor " << p.name << " f64 " << p.tensor.rank();
    for (auto d : p.tensor.shape()) header << ' ' << d;
    header << '\n';
  }
  const std::string h = header.str();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, h.size());
  out += h;
  for (const auto& p : params)
    for (double v : p.tensor.values()) put_le<double>(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("checkpoint: bad magic");
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const auto hlen = get_le<std::uint64_t>(bytes, pos);
  if (pos + hlen > bytes.size()) throw IoError("checkpoint: truncated header");
  std::istringstream header(bytes.substr(pos, hlen));
  pos += hlen;
  Checkpoint ck;
  std::vector<std::pair<std::string, Shape>> layout;
  std::string line;
  while (std::getline(header, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      ck.meta[key] = value;
    } else if (kind == "tensor") {
      std::string name, dtype;
      std::size_t rank = 0;
      ls >> name >> dtype >> rank;
      if (dtype != "f64") throw IoError("checkpoint: unsupported dtype " + dtype + " for " + name);
      Shape s(rank);
      for (auto& d : s) ls >> d;
      if (!ls) throw IoError("checkpoint: malformed tensor line: " + line);
      layout.emplace_back(name, s);
    } else {
      throw IoError("checkpoint: unknown header record: " + line);
    }
  }
  for (const auto& [name, shape] : layout) {
    std::vector<double> v(shape_size(shape));
    for (double& x : v) x = get_le<double>(bytes, pos);
    ck.tensors.push_back({name, Tensor::from(shape, std::move(v))});
  }
  if (pos != bytes.size()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const ParamList& params, const std::map<std::string, std::string>& meta) {
  const std::string bytes = encode_checkpoint(params, meta);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

void restore(const Checkpoint& ckpt, const ParamList& params) {
  for (const auto& p : params) {
    const Tensor* src = ckpt.find(p.name);
    if (src == nullptr) throw IoError("checkpoint: missing tensor " + p.name);
    if (src->shape() != p.tensor.shape())
      throw IoError("checkpoint: tensor " + p.name + " has shape " + shape_str(src->shape()) + ", model expects " +
                    shape_str(p.tensor.shape()));
    Tensor dst = p.tensor;
    std::copy(src->values().begin(), src->values().end(), dst.data());
  }
}

}  // namespace fullend::ad
