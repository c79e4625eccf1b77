#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wavescore/training.hpp"

namespace wavescore {

namespace {

constexpr char kMagic[8] = {'W', 'A', 'V', 'E', 'S', 'C', 'K', '\0'};
constexpr uint32_t kVersion = 1;

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// All multi-byte fields are little-endian on disk.
template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<char*>(buf), sizeof(T));
}

struct Reader {
  const std::string& bytes;
  size_t pos = 0;
  template <typename T>
  T get() {
    if (pos + sizeof(T) > bytes.size())
      throw IntegrityError("checkpoint: truncated file");
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, bytes.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(buf, buf + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  std::string get_block(size_t n) {
    if (pos + n > bytes.size()) throw IntegrityError("checkpoint: truncated file");
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

void put_string(std::string& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out += s;
}

void put_tensor(std::string& out, const std::string& tag, const TensorF& t) {
  put_string(out, tag);
  put<uint32_t>(out, static_cast<uint32_t>(t.rank()));
  for (int d = 0; d < t.rank(); ++d) put<uint32_t>(out, static_cast<uint32_t>(t.dim(d)));
  for (int64_t i = 0; i < t.numel(); ++i) put<float>(out, t[i]);
}

TensorF get_tensor(Reader& r, std::string* tag) {
  uint32_t tag_len = r.get<uint32_t>();
  *tag = r.get_block(tag_len);
  uint32_t rank = r.get<uint32_t>();
  if (rank > 8) throw IntegrityError("checkpoint: implausible tensor rank");
  std::vector<int> shape(rank);
  int64_t n = 1;
  for (uint32_t d = 0; d < rank; ++d) {
    shape[d] = static_cast<int>(r.get<uint32_t>());
    n *= shape[d];
  }
  TensorF t(shape);
  for (int64_t i = 0; i < n; ++i) t[i] = r.get<float>();
  return t;
}

std::string meta_text(const Checkpoint& c) {
  std::ostringstream os;
  os << "epochs_trained = " << c.epochs_trained << "\n";
  os << "seed = " << c.seed << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", c.sigma_min);
  os << "sigma_min = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", c.sigma_max);
  os << "sigma_max = " << buf << "\n";
  os << "mode = " << c.mode << "\n";
  os << "adam_steps = " << c.adam.steps << "\n";
  return os.str();
}

void parse_meta(const std::string& text, Checkpoint* c) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.pop_back();
    };
    strip(key);
    strip(val);
    if (key == "epochs_trained") c->epochs_trained = std::stoi(val);
    else if (key == "seed") c->seed = std::stoull(val);
    else if (key == "sigma_min") c->sigma_min = std::stod(val);
    else if (key == "sigma_max") c->sigma_max = std::stod(val);
    else if (key == "mode") c->mode = val;
    else if (key == "adam_steps") c->adam.steps = std::stoll(val);
    else throw IntegrityError("checkpoint: unknown metadata key '" + key + "'");
  }
}

std::string layer_tag(const NetworkSpec& spec, size_t li) {
  switch (spec.layers[li].kind) {
    case LayerKind::kConv: return "layer" + std::to_string(li) + ".kernel";
    case LayerKind::kBatchNorm: return "layer" + std::to_string(li) + ".scale";
    default: return "";
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  ckpt.spec.validate();
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint32_t>(out, ckpt.version);
  put_string(out, ckpt.spec.to_text());
  put_string(out, meta_text(ckpt));

  // Weights in declaration order, then running statistics, then Adam state.
  std::vector<std::pair<std::string, const TensorF*>> tensors;
  for (size_t li = 0; li < ckpt.spec.layers.size(); ++li) {
    if (!ckpt.params[li].empty()) tensors.push_back({layer_tag(ckpt.spec, li), &ckpt.params[li]});
    if (!ckpt.running_ms[li].empty())
      tensors.push_back({"layer" + std::to_string(li) + ".running_ms", &ckpt.running_ms[li]});
  }
  for (size_t i = 0; i < ckpt.adam.m.size(); ++i)
    tensors.push_back({"adam.m." + std::to_string(i), &ckpt.adam.m[i]});
  for (size_t i = 0; i < ckpt.adam.v.size(); ++i)
    tensors.push_back({"adam.v." + std::to_string(i), &ckpt.adam.v[i]});

  put<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [tag, t] : tensors) put_tensor(out, tag, *t);

  put<uint32_t>(out, static_cast<uint32_t>(ckpt.loss_history.size()));
  for (const LossRecord& r : ckpt.loss_history) {
    put<uint32_t>(out, static_cast<uint32_t>(r.epoch));
    put<uint32_t>(out, static_cast<uint32_t>(r.step));
    put<double>(out, r.loss);
  }

  put<uint64_t>(out, fnv1a64(out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string bytes = ss.str();

  if (bytes.size() < sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t))
    throw IntegrityError(path + ": file too short to be a checkpoint");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw IntegrityError(path + ": bad magic, not a wavescore checkpoint");
  // Validate the trailing checksum over everything before it.
  std::string body = bytes.substr(0, bytes.size() - sizeof(uint64_t));
  Reader tail{bytes, bytes.size() - sizeof(uint64_t)};
  uint64_t stored = tail.get<uint64_t>();
  if (fnv1a64(body) != stored)
    throw IntegrityError(path + ": checksum mismatch (corrupted or truncated)");

  Reader r{bytes, sizeof(kMagic)};
  Checkpoint c;
  c.version = r.get<uint32_t>();
  if (c.version > kVersion)
    throw VersionError(path + ": checkpoint format version " + std::to_string(c.version) +
                       " is newer than supported version " + std::to_string(kVersion));
  uint32_t spec_len = r.get<uint32_t>();
  c.spec = NetworkSpec::from_text(r.get_block(spec_len));
  uint32_t meta_len = r.get<uint32_t>();
  int64_t adam_steps_holder = 0;
  (void)adam_steps_holder;
  parse_meta(r.get_block(meta_len), &c);
  int64_t adam_steps = c.adam.steps;

  c.params.assign(c.spec.layers.size(), TensorF());
  c.running_ms.assign(c.spec.layers.size(), TensorF());
  uint32_t n_tensors = r.get<uint32_t>();
  std::vector<TensorF> adam_m, adam_v;
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string tag;
    TensorF t = get_tensor(r, &tag);
    if (tag.rfind("adam.m.", 0) == 0) {
      adam_m.push_back(std::move(t));
    } else if (tag.rfind("adam.v.", 0) == 0) {
      adam_v.push_back(std::move(t));
    } else if (tag.rfind("layer", 0) == 0) {
      auto dot = tag.find('.');
      size_t li = std::stoul(tag.substr(5, dot - 5));
      if (li >= c.spec.layers.size())
        throw IntegrityError(path + ": tensor tag references missing layer: " + tag);
      std::string field = tag.substr(dot + 1);
      if (field == "kernel" || field == "scale")
        c.params[li] = std::move(t);
      else if (field == "running_ms")
        c.running_ms[li] = std::move(t);
      else
        throw IntegrityError(path + ": unknown tensor tag " + tag);
    } else {
      throw IntegrityError(path + ": unknown tensor tag " + tag);
    }
  }
  c.adam.m = std::move(adam_m);
  c.adam.v = std::move(adam_v);
  c.adam.steps = adam_steps;

  uint32_t n_loss = r.get<uint32_t>();
  c.loss_history.reserve(n_loss);
  for (uint32_t i = 0; i < n_loss; ++i) {
    LossRecord rec;
    rec.epoch = static_cast<int>(r.get<uint32_t>());
    rec.step = static_cast<int>(r.get<uint32_t>());
    rec.loss = r.get<double>();
    c.loss_history.push_back(rec);
  }

  // Sanity: every conv/batchnorm layer must have its parameters present.
  for (size_t li = 0; li < c.spec.layers.size(); ++li) {
    const auto& l = c.spec.layers[li];
    if (l.kind == LayerKind::kConv && c.params[li].empty())
      throw IntegrityError(path + ": missing kernel for layer " + std::to_string(li));
    if (l.kind == LayerKind::kBatchNorm &&
        (c.params[li].empty() || c.running_ms[li].empty()))
      throw IntegrityError(path + ": missing batchnorm state for layer " + std::to_string(li));
  }
  return c;
}

}  // namespace wavescore
