#include "effn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace effn {

namespace {

constexpr char kMagic[4] = {'E', 'F', 'F', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(out, u);
}

struct Reader {
  std::string bytes;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw IoError("checkpoint: truncated file " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

struct TensorEntry {
  std::vector<std::size_t> shape;
  std::uint64_t offset = 0;  // bytes into the payload
};

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string head;
  head.append(kMagic, 4);
  put_u32(head, kVersion);

  put_u32(head, 4);  // hyperparameters
  auto put_hyper = [&](const std::string& key, double value) {
    put_u32(head, static_cast<std::uint32_t>(key.size()));
    head += key;
    put_f64(head, value);
  };
  put_hyper("dim", static_cast<double>(ckpt.params.dim()));
  put_hyper("hidden", static_cast<double>(ckpt.params.hidden()));
  put_hyper("attn", static_cast<double>(ckpt.params.attn()));
  put_hyper("dropout", ckpt.dropout);

  put_u32(head, static_cast<std::uint32_t>(ckpt.params.layer_set.size()));
  for (const int id : ckpt.params.layer_set) put_u32(head, static_cast<std::uint32_t>(id));

  std::vector<std::pair<std::string, const TensorF*>> tensors;
  ckpt.params.for_each(
      [&](const char* name, const TensorF& t) { tensors.emplace_back(name, &t); });
  if (!ckpt.trajectory.empty()) tensors.emplace_back("fusion.trajectory", &ckpt.trajectory);

  std::string payload;
  put_u32(head, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(head, static_cast<std::uint32_t>(name.size()));
    head += name;
    put_u32(head, static_cast<std::uint32_t>(t->shape().size()));
    for (const std::size_t d : t->shape()) put_u32(head, static_cast<std::uint32_t>(d));
    put_u64(head, payload.size());
    const std::size_t bytes = t->size() * sizeof(float);
    const std::size_t at = payload.size();
    payload.resize(at + bytes);
    std::memcpy(payload.data() + at, t->data(), bytes);
  }
  put_u64(head, payload.size());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("write_checkpoint: cannot open " + path);
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw IoError("write_checkpoint: short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  Reader r;
  r.path = path;
  {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_checkpoint: cannot open " + path);
    r.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  if (r.bytes.size() < 8 || std::memcmp(r.bytes.data(), kMagic, 4) != 0)
    throw FormatError("read_checkpoint: bad magic in " + path);
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("read_checkpoint: unsupported version " + std::to_string(version));

  std::map<std::string, double> hypers;
  const std::uint32_t n_hyper = r.u32();
  if (n_hyper > 64) throw FormatError("read_checkpoint: implausible hyperparameter count");
  for (std::uint32_t i = 0; i < n_hyper; ++i) {
    const std::uint32_t klen = r.u32();
    if (klen > 256) throw FormatError("read_checkpoint: implausible key length");
    const std::string key = r.str(klen);
    hypers[key] = r.f64();
  }

  Checkpoint ckpt;
  const std::uint32_t n_set = r.u32();
  if (n_set == 0 || n_set > 256) throw FormatError("read_checkpoint: implausible layer set");
  ckpt.params.layer_set.clear();
  for (std::uint32_t i = 0; i < n_set; ++i)
    ckpt.params.layer_set.push_back(static_cast<int>(r.u32()));

  std::map<std::string, TensorEntry> entries;
  const std::uint32_t n_tensors = r.u32();
  if (n_tensors > 1024) throw FormatError("read_checkpoint: implausible tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::uint32_t nlen = r.u32();
    if (nlen > 256) throw FormatError("read_checkpoint: implausible tensor name");
    const std::string name = r.str(nlen);
    TensorEntry e;
    const std::uint32_t ndim = r.u32();
    if (ndim > 8) throw FormatError("read_checkpoint: implausible rank for " + name);
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint32_t ext = r.u32();
      if (ext == 0 || ext > (1u << 24))
        throw FormatError("read_checkpoint: implausible extent for " + name);
      e.shape.push_back(ext);
      count *= ext;
    }
    if (count > (1ull << 32)) throw FormatError("read_checkpoint: shape overflow for " + name);
    e.offset = r.u64();
    entries[name] = std::move(e);
  }
  const std::uint64_t payload_bytes = r.u64();
  if (r.pos + payload_bytes > r.bytes.size())
    throw IoError("read_checkpoint: truncated payload in " + path);
  const char* payload = r.bytes.data() + r.pos;

  auto load = [&](const std::string& name) {
    const auto it = entries.find(name);
    if (it == entries.end())
      throw FormatError("read_checkpoint: missing tensor " + name + " in " + path);
    const TensorEntry& e = it->second;
    TensorF t(e.shape);
    const std::uint64_t bytes = t.size() * sizeof(float);
    if (e.offset + bytes > payload_bytes)
      throw FormatError("read_checkpoint: tensor " + name + " exceeds payload");
    std::memcpy(t.data(), payload + e.offset, bytes);
    return t;
  };

  ckpt.params.for_each([&](const char* name, TensorF& t) { t = load(name); });
  if (entries.count("fusion.trajectory")) ckpt.trajectory = load("fusion.trajectory");
  if (hypers.count("dropout")) ckpt.dropout = hypers["dropout"];

  if (ckpt.params.fusion_logits.size() != ckpt.params.layer_set.size())
    throw FormatError("read_checkpoint: fusion logits disagree with layer set");
  auto check_hyper = [&](const std::string& key, std::size_t actual) {
    const auto it = hypers.find(key);
    if (it != hypers.end() && static_cast<std::size_t>(it->second) != actual)
      throw FormatError("read_checkpoint: hyperparameter " + key + " disagrees with tensor shapes");
  };
  check_hyper("dim", ckpt.params.dim());
  check_hyper("hidden", ckpt.params.hidden());
  check_hyper("attn", ckpt.params.attn());
  return ckpt;
}

}  // namespace effn
