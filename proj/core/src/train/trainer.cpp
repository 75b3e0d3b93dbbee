#include "lt3lssl/train/trainer.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/seed.hpp"
#include "lt3lssl/data/longtail.hpp"
#include "lt3lssl/data/mnist_cifar.hpp"
#include "lt3lssl/data/sources.hpp"
#include "lt3lssl/ssl/cam.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace lt3lssl::train {
namespace {

namespace F = torch::nn::functional;

torch::Tensor unit(const torch::Tensor& v) { return F::normalize(v, F::NormalizeFuncOptions().dim(1)); }

std::vector<std::int64_t> to_vector(const torch::Tensor& t) {
  auto c = t.to(torch::kLong).contiguous();
  return {c.data_ptr<std::int64_t>(), c.data_ptr<std::int64_t>() + c.numel()};
}

torch::Tensor zero_scalar() { return torch::zeros({}); }

void set_lr(torch::optim::SGD& opt, double lr) {
  for (auto& group : opt.param_groups()) static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
}

}  // namespace

TrainState TrainState::create(const TrainConfig& cfg_in, const data::LongTailProfile& profile,
                              std::int64_t steps_per_epoch) {
  cfg_in.validate();
  auto cfg = cfg_in;
  cfg.model.num_classes = profile.num_classes;
  auto model = models::ModelBundle::create(cfg.model, cfg.seed);
  TrainState s{cfg, profile, std::move(model), ssl::AugmentedQueue(cfg.queue_capacity, cfg.model.embedding_dim),
               std::nullopt, nullptr};
  if (cfg.mode == TrainMode::kMoco) {
    auto gen = at::make_generator<at::CPUGeneratorImpl>(derive_seed({cfg.seed, tag(Stream::kNegatives)}));
    auto init = unit(torch::randn({cfg.moco_queue, cfg.model.embedding_dim}, gen, torch::kFloat));
    s.keys.emplace(cfg.moco_queue, cfg.model.embedding_dim);
    s.keys->restore(init, std::vector<std::int64_t>(static_cast<std::size_t>(cfg.moco_queue), 0), 0);
  }
  s.optimizer = std::make_unique<torch::optim::SGD>(
      s.model.online_parameters(),
      torch::optim::SGDOptions(cfg.optim.lr).momentum(cfg.optim.momentum).weight_decay(cfg.optim.weight_decay));
  s.total_steps = steps_per_epoch * cfg.optim.epochs;
  return s;
}

double TrainState::lr_at(std::int64_t t) const {
  const double base = cfg.optim.lr;
  if (total_steps <= 0) return base;
  const auto per_epoch = cfg.optim.epochs > 0 ? total_steps / cfg.optim.epochs : 0;
  const auto warm = std::min(total_steps, cfg.optim.warmup_epochs * per_epoch);
  if (t < warm) return base * static_cast<double>(t + 1) / static_cast<double>(warm);
  const double span = static_cast<double>(std::max<std::int64_t>(1, total_steps - warm));
  const double progress = std::min(1.0, static_cast<double>(t - warm) / span);
  return 0.5 * base * (1.0 + std::cos(M_PI * progress));
}

ssl::LossBreakdown StepLosses::breakdown() const {
  return {sim1.item<double>(), sim2.item<double>(), sim3.item<double>(), cls.item<double>(), total.item<double>()};
}

StepLosses compute_losses(TrainState& state, const data::TwoViewBatch& batch) {
  const auto& cfg = state.cfg;
  auto& m = state.model;
  const bool moco = cfg.mode == TrainMode::kMoco;
  const bool use_h = !moco && cfg.losses.sim1;
  const bool use_p = !moco && cfg.losses.sim2;
  const bool use_a = !moco && cfg.losses.sim3;
  const auto batch_size = batch.size();

  StepLosses out{zero_scalar(), zero_scalar(), zero_scalar(), zero_scalar(), {}, {}, {}};

  auto online = m.encoder->forward(batch.x);
  if (cfg.losses.cls) {
    auto logits = m.classifier->forward(online.pooled);
    if (cfg.logit_adjust) logits = models::adjust_logits(logits, state.profile);
    out.cls = ssl::classification_loss(logits, batch.labels);
  }

  torch::Tensor f_x;
  if (moco || use_h || use_p || use_a) f_x = m.projector->forward(online.pooled);

  // Momentum branch: no gradients reach it.
  torch::Tensor f_key;
  torch::Tensor pseudo;
  if (moco || use_h || use_a) {
    torch::NoGradGuard no_grad;
    auto key = m.momentum_encoder->forward(batch.x_prime);
    f_key = unit(m.momentum_projector->forward(key.pooled));
    if (use_a) pseudo = m.classifier->forward(key.pooled).argmax(1);
  }

  if (moco) {
    out.sim1 = ssl::infonce_loss(f_x, f_key, state.keys->embeddings(), cfg.temperature);
    out.key_embeddings = f_key;
    out.queue_labels = to_vector(batch.labels);
  }
  if (use_h) out.sim1 = ssl::cosine_similarity_loss(f_x, f_key);

  if (use_p) {
    torch::Tensor f_p;
    {
      torch::NoGradGuard no_grad;
      const auto weight = m.classifier->weight().detach();
      auto classes = cfg.cam_predicted ? m.classifier->forward(online.pooled.detach()).argmax(1) : batch.labels;
      auto first = ssl::normalize_cam(ssl::compute_cam(online.feature_map.detach(), weight, classes));
      auto cam_fn = [&](const torch::Tensor& masked) {
        return ssl::normalize_cam(ssl::compute_cam(m.encoder->forward(masked).feature_map, weight, classes));
      };
      auto x_p = ssl::mask_input_stages(batch.x, first, cfg.mask_stages, cam_fn);
      f_p = unit(m.momentum_projector->forward(m.momentum_encoder->forward(x_p).pooled));
    }
    out.sim2 = ssl::cosine_similarity_loss(f_x, f_p);
  }

  if (use_a) {
    const auto stored = cfg.queue_variant == QueueVariant::kCTruth ? to_vector(batch.labels) : to_vector(pseudo);
    auto [targets, valid] = cfg.queue_variant == QueueVariant::kSingle ? state.queue.most_recent_batch(stored)
                                                                        : state.queue.aggregate_batch(stored);
    // A mean of unit vectors can cancel out; such rows carry no direction.
    valid = valid.logical_and(targets.norm(2, 1) > 1e-8);
    if (valid.any().item<bool>()) {
      auto idx = valid.nonzero().squeeze(1);
      auto per = ssl::cosine_similarity_loss_per_sample(f_x.index_select(0, idx), unit(targets.index_select(0, idx)));
      out.sim3 = per.sum() / static_cast<double>(batch_size);
    }
    out.key_embeddings = f_key;
    out.queue_labels = stored;
  }

  out.total = out.sim1 + out.sim2 + out.sim3 + out.cls;
  return out;
}

ssl::LossBreakdown train_step(TrainState& state, const data::TwoViewBatch& batch) {
  state.model.train();
  auto losses = compute_losses(state, batch);
  const auto& sw = state.cfg.losses;
  const bool moco = state.cfg.mode == TrainMode::kMoco;
  ssl::LossSwitches reported{moco || sw.sim1, !moco && sw.sim2, !moco && sw.sim3, sw.cls};
  auto report = ssl::total_loss(losses.sim1.item<double>(), losses.sim2.item<double>(), losses.sim3.item<double>(),
                                losses.cls.item<double>(), reported);

  set_lr(*state.optimizer, state.lr_at(state.step));
  state.optimizer->zero_grad();
  if (losses.total.requires_grad()) losses.total.backward();

  // EMA from the online parameters as they were before this step.
  auto& m = state.model;
  auto enc_k = models::ParamSet::parameters_of(*m.momentum_encoder);
  auto proj_k = models::ParamSet::parameters_of(*m.momentum_projector);
  models::momentum_update(enc_k, models::ParamSet::parameters_of(*m.encoder), state.cfg.alpha);
  models::momentum_update(proj_k, models::ParamSet::parameters_of(*m.projector), state.cfg.alpha);

  state.optimizer->step();

  if (losses.key_embeddings.defined()) {
    auto& q = moco ? *state.keys : state.queue;
    q.push(losses.key_embeddings, losses.queue_labels);
  }
  ++state.step;
  return report;
}

std::map<std::string, eval::EvalReport> evaluate_bundle(models::ModelBundle& model, const data::DatasetBundle& b) {
  std::map<std::string, eval::EvalReport> out;
  if (!b.concat) {
    out.emplace("full", eval::evaluate(model, b.test, b.groups, "full"));
    return out;
  }
  const data::ConcatDataset test(b.test);
  for (auto v : {data::EvalVariant::kFull, data::EvalVariant::kMnistOnly, data::EvalVariant::kCifarOnly}) {
    const std::string name(data::variant_name(v));
    auto variant = data::make_eval_variant(test, v, b.spec.seed, b.spec.fill);
    out.emplace(name, eval::evaluate(model, variant.samples(), b.groups, name));
  }
  return out;
}

std::string metrics_json_line(const EpochRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["sim1"] = r.loss.sim1;
  j["sim2"] = r.loss.sim2;
  j["sim3"] = r.loss.sim3;
  j["cls"] = r.loss.cls;
  j["total"] = r.loss.total;
  j["acc_all"] = r.probe ? nlohmann::json(r.probe->acc_all) : nlohmann::json(nullptr);
  j["acc_many"] = r.probe ? opt(r.probe->acc_many) : nlohmann::json(nullptr);
  j["acc_med"] = r.probe ? opt(r.probe->acc_medium) : nlohmann::json(nullptr);
  j["acc_few"] = r.probe ? opt(r.probe->acc_few) : nlohmann::json(nullptr);
  for (const auto& [name, acc] : r.variant_acc) j["acc_" + name] = acc;
  return j.dump();
}

namespace {

struct Probe {
  std::vector<std::pair<std::string, data::LabeledImageSet>> sets;  // first entry feeds acc_*
};

Probe make_probe(const data::DatasetBundle& b) {
  Probe p;
  if (b.spec.probe_per_class <= 0) return p;
  auto subset = data::balanced_subset(b.test, b.num_classes, b.spec.probe_per_class, b.spec.seed);
  if (!b.concat) {
    p.sets.emplace_back("full", std::move(subset));
    return p;
  }
  const data::ConcatDataset probe(subset);
  for (auto v : {data::EvalVariant::kFull, data::EvalVariant::kMnistOnly, data::EvalVariant::kCifarOnly})
    p.sets.emplace_back(std::string(data::variant_name(v)),
                        data::make_eval_variant(probe, v, b.spec.seed, b.spec.fill).samples());
  return p;
}

void write_nan_dump(const std::filesystem::path& path, const TrainState& s, const data::TwoViewBatch& batch,
                    const std::string& error) {
  nlohmann::ordered_json j;
  j["error"] = error;
  j["epoch"] = s.epoch;
  j["step"] = s.step;
  j["lr"] = s.lr_at(s.step);
  j["config_hash"] = s.cfg.hash();
  j["sample_ids"] = batch.sample_ids;
  j["model_fingerprint"] = s.model.fingerprint();
  std::ofstream out(path);
  if (out) out << j.dump(2) << '\n';
}

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
  return p;
}

}  // namespace

TrainResult run_training(const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const auto bundle = data::load_dataset(cfg.data, data::data_root_from_env());
  return run_training(cfg, bundle, hooks);
}

TrainResult run_training(const TrainConfig& cfg, const data::DatasetBundle& bundle, const TrainHooks& hooks) {
  cfg.validate();
  const auto& train_set = bundle.train;
  const auto n = train_set.size();
  const auto bs = cfg.optim.batch_size;
  // The trailing partial batch is dropped unless it is the only one.
  const auto steps_per_epoch = n >= bs ? n / bs : (n > 0 ? 1 : 0);

  TrainResult result;
  result.out_dir = ensure_dir(cfg.out_dir);
  write_config(result.out_dir / "config.ini", cfg);
  data::write_profile_csv(result.out_dir / "profile.csv", bundle.profile);
  result.metrics = result.out_dir / "metrics.jsonl";
  std::ofstream metrics(result.metrics, std::ios::trunc);
  if (!metrics) throw IoError("cannot write " + result.metrics.string());

  auto state = TrainState::create(cfg, bundle.profile, steps_per_epoch);
  const auto pipeline = data::AugmentationPipeline::parse(cfg.augment);
  const auto probe = make_probe(bundle);

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t epoch = 1; epoch <= cfg.optim.epochs; ++epoch) {
    state.epoch = epoch;
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng({cfg.seed, tag(Stream::kShuffle), static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), rng);

    ssl::LossBreakdown sum;
    for (std::int64_t s = 0; s < steps_per_epoch; ++s) {
      const auto begin = s * bs;
      const auto len = std::min(bs, n - begin);
      std::span<const std::int64_t> idx(order.data() + begin, static_cast<std::size_t>(len));
      auto batch = data::make_two_view_batch(train_set, idx, pipeline, cfg.seed, epoch);
      ssl::LossBreakdown step;
      try {
        step = train_step(state, batch);
      } catch (const NumericError& e) {
        const auto dump = result.out_dir / "nan_dump.json";
        write_nan_dump(dump, state, batch, e.what());
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(state.step) + "; diagnostics in " + dump.string());
      }
      sum.sim1 += step.sim1;
      sum.sim2 += step.sim2;
      sum.sim3 += step.sim3;
      sum.cls += step.cls;
      sum.total += step.total;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double k = steps_per_epoch > 0 ? static_cast<double>(steps_per_epoch) : 1.0;
    rec.loss = {sum.sim1 / k, sum.sim2 / k, sum.sim3 / k, sum.cls / k, sum.total / k};
    const bool probe_now = cfg.probe_every > 0 && (epoch % cfg.probe_every == 0 || epoch == cfg.optim.epochs);
    if (probe_now && !probe.sets.empty()) {
      for (const auto& [name, set] : probe.sets) {
        auto report = eval::evaluate(state.model, set, bundle.groups, name);
        if (!rec.probe) rec.probe = report;
        if (probe.sets.size() > 1) rec.variant_acc[name] = report.acc_all;
      }
    }
    metrics << metrics_json_line(rec) << '\n';
    metrics.flush();
    if (!metrics) throw IoError("write failed: " + result.metrics.string());
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }

  result.final_state = models::Checkpoint::capture(state.model, bundle.profile, cfg.hash(), state.step);
  result.final_state.queue = models::QueueState{state.queue.capacity(), state.queue.dim(), state.queue.head(),
                                                state.queue.embeddings().clone(), state.queue.labels()};
  result.checkpoint = result.out_dir / "checkpoint.bin";
  models::save_checkpoint(result.checkpoint, result.final_state);

  if (cfg.losses.sim3 && cfg.mode == TrainMode::k3lssl) {
    result.queue_csv = result.out_dir / "queue.csv";
    ssl::write_queue_snapshot(state.queue, *result.queue_csv, result.out_dir / "queue_embeddings.bin");
  }

  result.test = evaluate_bundle(state.model, bundle);
  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  for (const auto& [name, r] : result.test) rows.emplace_back("test", r);
  eval::write_reports_csv(result.out_dir / "report.csv", rows);
  return result;
}

}  // namespace lt3lssl::train
