#include "lt3lssl/train/config.hpp"

#include "lt3lssl/common/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lt3lssl::train {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw InvalidArgument("config " + key + ": cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidArgument("config " + key + ": expected a boolean, got '" + text + "'");
}

struct Field {
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

// Accessor-based fields for nested structs.
template <typename Get>
Field num_field(Get get) {
  using T = std::remove_reference_t<decltype(get(std::declval<TrainConfig&>()))>;
  return {[get](const TrainConfig& c) { return fmt(get(const_cast<TrainConfig&>(c))); },
          [get](TrainConfig& c, const std::string& v) { get(c) = parse_number<T>("", v); }};
}
template <typename Get>
Field bool_field(Get get) {
  return {[get](const TrainConfig& c) { return fmt(get(const_cast<TrainConfig&>(c))); },
          [get](TrainConfig& c, const std::string& v) { get(c) = parse_bool("", v); }};
}
template <typename Get>
Field str_field(Get get) {
  return {[get](const TrainConfig& c) { return get(const_cast<TrainConfig&>(c)); },
          [get](TrainConfig& c, const std::string& v) { get(c) = v; }};
}

// Ordered so that to_ini() output is stable and grouped by section.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"data.name", str_field([](TrainConfig& c) -> std::string& { return c.data.name; })},
      {"data.beta", num_field([](TrainConfig& c) -> double& { return c.data.beta; })},
      {"data.n_max", num_field([](TrainConfig& c) -> std::int64_t& { return c.data.n_max; })},
      {"data.source", str_field([](TrainConfig& c) -> std::string& { return c.data.source; })},
      {"data.test_per_class", num_field([](TrainConfig& c) -> std::int64_t& { return c.data.test_per_class; })},
      {"data.probe_per_class", num_field([](TrainConfig& c) -> std::int64_t& { return c.data.probe_per_class; })},
      {"data.oracle", bool_field([](TrainConfig& c) -> bool& { return c.data.oracle; })},
      {"data.fill",
       {[](const TrainConfig& c) -> std::string { return c.data.fill == data::FillPolicy::kZero ? "zero" : "noise"; },
        [](TrainConfig& c, const std::string& v) {
          if (v == "zero") c.data.fill = data::FillPolicy::kZero;
          else if (v == "noise") c.data.fill = data::FillPolicy::kUniformNoise;
          else throw InvalidArgument("config data.fill: expected noise or zero, got '" + v + "'");
        }}},
      {"data.groups", str_field([](TrainConfig& c) -> std::string& { return c.data.groups; })},
      {"data.manifest", str_field([](TrainConfig& c) -> std::string& { return c.data.manifest; })},
      {"data.test_manifest", str_field([](TrainConfig& c) -> std::string& { return c.data.test_manifest; })},
      {"data.seed", num_field([](TrainConfig& c) -> std::uint64_t& { return c.data.seed; })},
      {"model.backbone", str_field([](TrainConfig& c) -> std::string& { return c.model.backbone.name; })},
      {"model.width", num_field([](TrainConfig& c) -> std::int64_t& { return c.model.backbone.width; })},
      {"model.projector_hidden", num_field([](TrainConfig& c) -> std::int64_t& { return c.model.projector_hidden; })},
      {"model.embedding_dim", num_field([](TrainConfig& c) -> std::int64_t& { return c.model.embedding_dim; })},
      {"ssl.mode",
       {[](const TrainConfig& c) -> std::string { return c.mode == TrainMode::kMoco ? "moco" : "3lssl"; },
        [](TrainConfig& c, const std::string& v) {
          if (v == "moco") c.mode = TrainMode::kMoco;
          else if (v == "3lssl") c.mode = TrainMode::k3lssl;
          else throw InvalidArgument("config ssl.mode: expected 3lssl or moco, got '" + v + "'");
        }}},
      {"ssl.losses",
       {[](const TrainConfig& c) { return losses_to_string(c.losses); },
        [](TrainConfig& c, const std::string& v) { c.losses = parse_losses(v); }}},
      {"ssl.queue_capacity", num_field([](TrainConfig& c) -> std::int64_t& { return c.queue_capacity; })},
      {"ssl.queue_variant",
       {[](const TrainConfig& c) { return std::string(queue_variant_name(c.queue_variant)); },
        [](TrainConfig& c, const std::string& v) { c.queue_variant = parse_queue_variant(v); }}},
      {"ssl.mask_stages", num_field([](TrainConfig& c) -> std::int64_t& { return c.mask_stages; })},
      {"ssl.cam_class",
       {[](const TrainConfig& c) -> std::string { return c.cam_predicted ? "predicted" : "truth"; },
        [](TrainConfig& c, const std::string& v) {
          if (v == "predicted") c.cam_predicted = true;
          else if (v == "truth") c.cam_predicted = false;
          else throw InvalidArgument("config ssl.cam_class: expected truth or predicted, got '" + v + "'");
        }}},
      {"ssl.alpha", num_field([](TrainConfig& c) -> double& { return c.alpha; })},
      {"ssl.logit_adjust", bool_field([](TrainConfig& c) -> bool& { return c.logit_adjust; })},
      {"ssl.temperature", num_field([](TrainConfig& c) -> double& { return c.temperature; })},
      {"ssl.moco_queue", num_field([](TrainConfig& c) -> std::int64_t& { return c.moco_queue; })},
      {"ssl.augment", str_field([](TrainConfig& c) -> std::string& { return c.augment; })},
      {"optim.lr", num_field([](TrainConfig& c) -> double& { return c.optim.lr; })},
      {"optim.momentum", num_field([](TrainConfig& c) -> double& { return c.optim.momentum; })},
      {"optim.weight_decay", num_field([](TrainConfig& c) -> double& { return c.optim.weight_decay; })},
      {"optim.epochs", num_field([](TrainConfig& c) -> std::int64_t& { return c.optim.epochs; })},
      {"optim.batch_size", num_field([](TrainConfig& c) -> std::int64_t& { return c.optim.batch_size; })},
      {"optim.warmup_epochs", num_field([](TrainConfig& c) -> std::int64_t& { return c.optim.warmup_epochs; })},
      {"finetune.epochs", num_field([](TrainConfig& c) -> std::int64_t& { return c.finetune.epochs; })},
      {"finetune.lr", num_field([](TrainConfig& c) -> double& { return c.finetune.lr; })},
      {"finetune.momentum", num_field([](TrainConfig& c) -> double& { return c.finetune.momentum; })},
      {"finetune.weight_decay", num_field([](TrainConfig& c) -> double& { return c.finetune.weight_decay; })},
      {"finetune.batch_size", num_field([](TrainConfig& c) -> std::int64_t& { return c.finetune.batch_size; })},
      {"run.probe_every", num_field([](TrainConfig& c) -> std::int64_t& { return c.probe_every; })},
      {"run.seed", num_field([](TrainConfig& c) -> std::uint64_t& { return c.seed; })},
      {"run.out", str_field([](TrainConfig& c) -> std::string& { return c.out_dir; })},
  };
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  throw InvalidArgument("unknown config key '" + key + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string ini_text(const TrainConfig& cfg, bool with_out) {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, f] : fields()) {
    if (!with_out && key == "run.out") continue;
    const auto dot = key.find('.');
    const auto sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

}  // namespace

std::string_view queue_variant_name(QueueVariant v) {
  switch (v) {
    case QueueVariant::kSingle: return "single";
    case QueueVariant::kCPrime: return "cprime";
    case QueueVariant::kCTruth: return "ctruth";
  }
  return "cprime";
}

QueueVariant parse_queue_variant(std::string_view name) {
  if (name == "single") return QueueVariant::kSingle;
  if (name == "cprime") return QueueVariant::kCPrime;
  if (name == "ctruth") return QueueVariant::kCTruth;
  throw InvalidArgument("unknown queue variant '" + std::string(name) + "' (single, cprime, ctruth)");
}

ssl::LossSwitches parse_losses(std::string_view text) {
  ssl::LossSwitches s{false, false, false, false};
  std::string t(text);
  if (trim(t) == "none") return s;
  std::stringstream in(t);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item == "h") s.sim1 = true;
    else if (item == "p") s.sim2 = true;
    else if (item == "a") s.sim3 = true;
    else if (item == "ce") s.cls = true;
    else throw InvalidArgument("unknown loss '" + item + "' (expected ce, h, p, a)");
  }
  return s;
}

std::string losses_to_string(const ssl::LossSwitches& s) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(s.cls, "ce");
  add(s.sim1, "h");
  add(s.sim2, "p");
  add(s.sim3, "a");
  return out.empty() ? "none" : out;
}

void TrainConfig::validate() const {
  if (losses.sim3 && !losses.cls) throw InvalidArgument("A-SSL needs the classifier: enable ce with a");
  if (mode == TrainMode::kMoco && !losses.cls) throw InvalidArgument("moco mode trains ce jointly: enable ce");
  if (!losses.cls && !losses.sim1 && !losses.sim2 && !losses.sim3 && mode != TrainMode::kMoco)
    throw InvalidArgument("no loss term enabled");
  if (optim.batch_size < 1) throw InvalidArgument("optim.batch_size must be >= 1");
  if (queue_capacity < optim.batch_size) throw InvalidArgument("ssl.queue_capacity must be >= optim.batch_size");
  if (mode == TrainMode::kMoco && moco_queue < 1) throw InvalidArgument("ssl.moco_queue must be >= 1");
  if (mask_stages < 1 || mask_stages > 3) throw InvalidArgument("ssl.mask_stages must be 1, 2 or 3");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("ssl.alpha must lie in [0, 1]");
  if (!(temperature > 0.0)) throw InvalidArgument("ssl.temperature must be > 0");
  if (optim.epochs < 0 || finetune.epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(optim.lr >= 0.0) || !(finetune.lr >= 0.0)) throw InvalidArgument("learning rates must be >= 0");
  if (finetune.batch_size < 1) throw InvalidArgument("finetune.batch_size must be >= 1");
  if (probe_every < 0) throw InvalidArgument("run.probe_every must be >= 0");
}

std::uint64_t TrainConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : ini_text(*this, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string TrainConfig::to_ini() const { return ini_text(*this, true); }

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  try {
    find_field(key).set(cfg, trim(value));
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    // Number parsers do not know their key; prefix it here.
    if (msg.rfind("config :", 0) == 0) throw InvalidArgument("config " + key + msg.substr(7));
    throw;
  }
}

std::string get_config_value(const TrainConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

TrainConfig parse_config(const std::string& ini_text_in) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text_in);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  TrainConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      // Top-level `key = value` lines: accept dotted keys as written.
      set_config_value(cfg, section, body.data());
      continue;
    }
    for (const auto& [name, value] : body) set_config_value(cfg, section + "." + name, value.data());
  }
  return cfg;
}

TrainConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void write_config(const std::filesystem::path& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << cfg.to_ini();
  if (!out) throw IoError("write failed: " + path.string());
}

void apply_overrides(TrainConfig& cfg, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
}

}  // namespace lt3lssl::train
