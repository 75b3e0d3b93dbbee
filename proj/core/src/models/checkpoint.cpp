#include "lt3lssl/models/checkpoint.hpp"

#include "lt3lssl/common/error.hpp"

#include <array>
#include <fstream>

namespace lt3lssl::models {

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'T', '3', 'L', 'C', 'K', 'P', 'T'};
// Upper bounds that catch corrupt length fields before allocating.
constexpr std::uint64_t kMaxString = 1u << 16;
constexpr std::int64_t kMaxDims = 8;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void tensor(const torch::Tensor& t) {
    auto c = t.detach().to(torch::kFloat32).contiguous();
    pod(static_cast<std::uint32_t>(c.dim()));
    for (auto s : c.sizes()) pod(static_cast<std::int64_t>(s));
    out_.write(static_cast<const char*>(c.data_ptr()), static_cast<std::streamsize>(c.numel() * sizeof(float)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) fail("truncated checkpoint");
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (n > kMaxString) fail("corrupt string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) fail("truncated checkpoint");
    return s;
  }
  torch::Tensor tensor() {
    const auto ndim = pod<std::uint32_t>();
    if (ndim > kMaxDims) fail("corrupt tensor rank");
    std::vector<std::int64_t> shape;
    std::int64_t numel = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      shape.push_back(pod<std::int64_t>());
      if (shape.back() < 0) fail("negative tensor extent");
      numel *= shape.back();
    }
    auto t = torch::empty(shape, torch::kFloat32);
    in_.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(numel * sizeof(float)));
    if (!in_) fail("truncated tensor payload");
    return t;
  }
  [[noreturn]] void fail(const std::string& what) const { throw DataError(path_ + ": " + what); }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

Checkpoint Checkpoint::capture(const ModelBundle& model, const data::LongTailProfile& profile,
                               std::uint64_t config_hash, std::int64_t step) {
  Checkpoint c;
  c.config_hash = config_hash;
  c.step = step;
  c.spec = model.spec;
  c.profile = profile;
  for (const auto& [name, set] : model.state_sets()) c.sets[name] = set.clone().entries();
  return c;
}

void Checkpoint::load_into(ModelBundle& model) const {
  for (auto& [name, set] : model.state_sets()) {
    auto it = sets.find(name);
    if (it == sets.end()) throw DataError("checkpoint lacks component '" + name + "'");
    set.copy_from(ParamSet(it->second));
  }
}

ModelBundle Checkpoint::restore() const {
  auto model = ModelBundle::create(spec, 0);
  load_into(model);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.pod(kCheckpointVersion);
  w.pod(ckpt.config_hash);
  w.pod(ckpt.step);

  w.str(ckpt.spec.backbone.name);
  w.pod(ckpt.spec.backbone.width);
  w.pod(ckpt.spec.num_classes);
  w.pod(ckpt.spec.projector_hidden);
  w.pod(ckpt.spec.embedding_dim);
  w.pod(static_cast<std::uint8_t>(ckpt.spec.classifier_bias ? 1 : 0));

  w.pod(ckpt.profile.num_classes);
  for (auto n : ckpt.profile.counts) w.pod(n);
  w.pod(ckpt.profile.beta);

  w.pod(static_cast<std::uint32_t>(ckpt.sets.size()));
  for (const auto& [name, entries] : ckpt.sets) {
    w.str(name);
    w.pod(static_cast<std::uint32_t>(entries.size()));
    for (const auto& [tname, t] : entries) {
      w.str(tname);
      w.tensor(t);
    }
  }

  w.pod(static_cast<std::uint8_t>(ckpt.queue ? 1 : 0));
  if (ckpt.queue) {
    const auto& q = *ckpt.queue;
    w.pod(q.capacity);
    w.pod(q.dim);
    w.pod(q.head);
    w.tensor(q.embeddings);
    for (auto y : q.labels) w.pod(y);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) r.fail("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));

  Checkpoint c;
  c.config_hash = r.pod<std::uint64_t>();
  c.step = r.pod<std::int64_t>();
  c.spec.backbone.name = r.str();
  c.spec.backbone.width = r.pod<std::int64_t>();
  c.spec.num_classes = r.pod<std::int64_t>();
  c.spec.projector_hidden = r.pod<std::int64_t>();
  c.spec.embedding_dim = r.pod<std::int64_t>();
  c.spec.classifier_bias = r.pod<std::uint8_t>() != 0;

  const auto classes = r.pod<std::int64_t>();
  if (classes < 0 || classes > (1 << 24)) r.fail("corrupt class count");
  std::vector<std::int64_t> counts;
  for (std::int64_t i = 0; i < classes; ++i) counts.push_back(r.pod<std::int64_t>());
  const auto beta = r.pod<double>();
  if (classes > 0) {
    c.profile = data::LongTailProfile::from_counts(std::move(counts));
    c.profile.beta = beta;
  }

  const auto set_count = r.pod<std::uint32_t>();
  for (std::uint32_t s = 0; s < set_count; ++s) {
    auto name = r.str();
    const auto n = r.pod<std::uint32_t>();
    std::vector<std::pair<std::string, torch::Tensor>> entries;
    for (std::uint32_t i = 0; i < n; ++i) {
      auto tname = r.str();
      entries.emplace_back(std::move(tname), r.tensor());
    }
    c.sets[name] = std::move(entries);
  }

  if (r.pod<std::uint8_t>() != 0) {
    QueueState q;
    q.capacity = r.pod<std::int64_t>();
    q.dim = r.pod<std::int64_t>();
    q.head = r.pod<std::int64_t>();
    q.embeddings = r.tensor();
    if (q.embeddings.dim() != 2 || q.embeddings.size(0) != q.capacity || q.embeddings.size(1) != q.dim) {
      r.fail("queue shape mismatch");
    }
    for (std::int64_t i = 0; i < q.capacity; ++i) q.labels.push_back(r.pod<std::int64_t>());
    c.queue = std::move(q);
  }
  return c;
}

}  // namespace lt3lssl::models
