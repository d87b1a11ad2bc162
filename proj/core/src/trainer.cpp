#include "balance/trainer.hpp"

#include <cmath>
#include <fstream>

#include "balance/csv.hpp"
#include "balance/metrics.hpp"
#include "balance/optim.hpp"
#include "balance/regularizer.hpp"
#include "balance/rng.hpp"

namespace balance {

const char* label_proposal_name(LabelProposal p) {
  switch (p) {
    case LabelProposal::None: return "none";
    case LabelProposal::Uniform: return "uniform";
    case LabelProposal::InverseFrequency: return "inverse_frequency";
  }
  return "none";
}

LabelProposal parse_label_proposal(const std::string& name) {
  for (auto p : {LabelProposal::None, LabelProposal::Uniform, LabelProposal::InverseFrequency})
    if (name == label_proposal_name(p)) return p;
  throw std::invalid_argument("unknown label proposal '" + name + "'");
}

void validate(const TrainerConfig& c) {
  auto require = [](bool ok, const char* key, const char* rule) {
    if (!ok) throw std::invalid_argument(std::string(key) + " " + rule);
  };
  require(c.noise_dim >= 1, "noise_dim", "must be >= 1");
  require(c.batch_size >= 1, "batch_size", "must be >= 1");
  require(c.iterations >= 1, "iterations", "must be >= 1");
  require(c.lr_g > 0.0, "lr_g", "must be > 0");
  require(c.lr_d > 0.0, "lr_d", "must be > 0");
  require(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  require(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  require(c.lambda >= 0.0, "lambda", "must be >= 0");
  require(c.alpha > 0.0 && c.alpha <= 1.0, "alpha", "must lie in (0, 1]");
  require(c.beta > 0.0, "beta", "must be > 0");
  require(c.cycle_len >= 1, "cycle_len", "must be >= 1");
  require(c.ema_decay >= 0.0 && c.ema_decay <= 1.0, "ema_decay", "must lie in [0, 1]");
  require(c.eval_samples >= 3, "eval_samples", "must be >= 3");
  for (auto h : c.g_hidden) require(h >= 1, "g_hidden", "sizes must be >= 1");
  for (auto h : c.d_hidden) require(h >= 1, "d_hidden", "sizes must be >= 1");
}

RelativisticLosses relativistic_losses(Graph& g, NodeId d_real, NodeId d_fake) {
  if (g.value(d_real).shape() != g.value(d_fake).shape()) {
    throw ShapeError("relativistic_losses: real and fake batches differ: " + to_string(g.value(d_real).shape()) +
                     " vs " + to_string(g.value(d_fake).shape()));
  }
  const NodeId loss_d = g.scale(g.mean(g.log_sigmoid(g.sub(d_real, d_fake))), -1.0);
  const NodeId loss_g = g.scale(g.mean(g.log_sigmoid(g.sub(d_fake, d_real))), -1.0);
  return {loss_d, loss_g};
}

std::vector<std::string> metrics_header(std::size_t num_classes) {
  std::vector<std::string> h{"cycle", "iter", "loss_d", "loss_g", "loss_reg", "kl_uniform", "frechet"};
  for (std::size_t k = 0; k < num_classes; ++k) h.push_back("frac_" + std::to_string(k));
  for (std::size_t k = 0; k < num_classes; ++k) h.push_back("N_" + std::to_string(k));
  return h;
}

std::vector<std::string> metrics_fields(const MetricsRow& r) {
  std::vector<std::string> f{std::to_string(r.cycle), std::to_string(r.iter), format_double(r.loss_d),
                             format_double(r.loss_g), format_double(r.loss_reg), format_double(r.kl_uniform),
                             format_double(r.frechet)};
  for (double v : r.class_fracs) f.push_back(format_double(v));
  for (double v : r.n_dist) f.push_back(format_double(v));
  return f;
}

namespace {

class GanRun {
 public:
  GanRun(const TrainerConfig& cfg, const LabeledDataset& data, const Mlp& classifier, const EvalContext& eval)
      : cfg_(cfg),
        data_(data),
        clf_(classifier),
        eval_(eval),
        k_(classifier.output_dim()),
        adam_g_(AdamOptions{cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2, 1e-8}),
        adam_d_(AdamOptions{cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2, 1e-8}),
        ema_(cfg.ema_decay, cfg.resolved_ema_start()),
        stats_(classifier.output_dim(), {cfg.alpha, cfg.beta, cfg.cycle_len, 1.0}),
        snapshot_(stats_.distribution()),
        batch_rng_(cfg.seed, "batch"),
        noise_rng_(cfg.seed, "noise") {
    validate(cfg);
    if (data.size() == 0) throw std::invalid_argument("training data is empty");
    if (data.dim() != classifier.input_dim()) throw ShapeError("classifier input does not match data dimension");
    if (data.num_classes() != k_) throw ShapeError("classifier width does not match class count");

    Rng init(cfg.seed, "init");
    MlpSpec gs;
    gs.sizes.push_back(generator_input_dim());
    gs.sizes.insert(gs.sizes.end(), cfg.g_hidden.begin(), cfg.g_hidden.end());
    gs.sizes.push_back(data.dim());
    gs.hidden = cfg.g_activation;
    generator_ = Mlp(gs, init);

    MlpSpec ds;
    ds.sizes.push_back(data.dim());
    ds.sizes.insert(ds.sizes.end(), cfg.d_hidden.begin(), cfg.d_hidden.end());
    ds.sizes.push_back(1);
    ds.hidden = cfg.d_activation;
    discriminator_ = Mlp(ds, init);

    Rng eval_rng(cfg.seed, "eval");
    eval_input_ = Tensor(cfg.eval_samples, generator_input_dim());
    for (std::size_t i = 0; i < cfg.eval_samples; ++i) {
      for (std::size_t j = 0; j < cfg.noise_dim; ++j) eval_input_(i, j) = eval_rng.normal();
      if (conditional()) eval_input_(i, cfg.noise_dim + i % k_) = 1.0;
    }
  }

  void pin_statistics(const std::vector<double>& n_hat) {
    if (n_hat.size() != k_) throw ShapeError("fixed statistics must list one value per class");
    for (double v : n_hat)
      if (!(v > 0.0)) throw std::invalid_argument("fixed statistics must be strictly positive");
    pinned_ = ClassDistribution::from_weights(n_hat);
  }

  TrainResult run(std::size_t warmup) {
    TrainResult res;
    const std::size_t total = warmup + cfg_.iterations;
    for (std::size_t it = 0; it < total; ++it) {
      const bool regularize = it >= warmup;
      if (pinned_ && it == warmup) {
        res.class0_trajectory.push_back(class0_fraction());
        snapshot_ = *pinned_;
      }
      step(it, regularize ? cfg_.lambda : 0.0);

      const bool boundary = (it + 1) % cfg_.cycle_len == 0;
      if (boundary || it + 1 == total) {
        if (boundary && !pinned_) {
          stats_.end_cycle();
          snapshot_ = stats_.distribution();
        }
        res.history.push_back(evaluate(it + 1));
        if (pinned_ && regularize) res.class0_trajectory.push_back(res.history.back().class0_fraction);
      }
    }
    res.raw_generator = generator_;
    res.generator = generator_;
    if (ema_.active()) res.generator.params() = ema_.shadow();
    res.discriminator = discriminator_;
    return res;
  }

 private:
  bool conditional() const { return cfg_.label_proposal != LabelProposal::None; }
  std::size_t generator_input_dim() const { return cfg_.noise_dim + (conditional() ? k_ : 0); }

  Tensor real_batch() {
    Tensor x(cfg_.batch_size, data_.dim());
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
      const std::size_t src = batch_rng_.index(data_.size());
      for (std::size_t d = 0; d < data_.dim(); ++d) x(i, d) = data_.samples(src, d);
    }
    return x;
  }

  int propose_label() {
    if (cfg_.label_proposal == LabelProposal::Uniform) return static_cast<int>(noise_rng_.index(k_));
    double total = 0.0;
    for (std::size_t k = 0; k < k_; ++k) total += 1.0 / snapshot_[k];
    double u = noise_rng_.uniform() * total;
    for (std::size_t k = 0; k < k_; ++k) {
      u -= 1.0 / snapshot_[k];
      if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(k_ - 1);
  }

  Tensor generator_input() {
    Tensor z(cfg_.batch_size, generator_input_dim());
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
      for (std::size_t j = 0; j < cfg_.noise_dim; ++j) z(i, j) = noise_rng_.normal();
      if (conditional()) z(i, cfg_.noise_dim + static_cast<std::size_t>(propose_label())) = 1.0;
    }
    return z;
  }

  void step(std::size_t it, double lambda) {
    const Tensor x = real_batch();

    // Discriminator update against a detached fake batch.
    double loss_d = 0.0;
    {
      Tensor fake = generator_.forward(generator_input());
      Graph g;
      const NodeId inputs[] = {g.constant(x), g.constant(std::move(fake))};
      const auto critic = discriminator_.bind_shared(g, inputs, true);
      const auto losses = relativistic_losses(g, critic.outputs[0], critic.outputs[1]);
      g.backward(losses.loss_d);
      loss_d = g.value(losses.loss_d).item();
      grads_.clear();
      for (NodeId p : critic.params) grads_.push_back(g.grad(p));
      adam_d_.step(discriminator_.params(), grads_);
    }

    // Generator update; discriminator and classifier enter as constants.
    Graph g;
    const auto gen = generator_.bind(g, g.constant(generator_input()), true);
    const NodeId inputs[] = {g.constant(x), gen.output};
    const auto critic = discriminator_.bind_shared(g, inputs, false);
    const auto losses = relativistic_losses(g, critic.outputs[0], critic.outputs[1]);
    NodeId probs{};
    const NodeId p_hat = mean_softmax(g, clf_, gen.output, &probs);
    const NodeId reg = l_reg(g, p_hat, snapshot_);
    const NodeId total = combined_generator_loss(g, losses.loss_g, reg, lambda, k_);
    g.backward(total);
    grads_.clear();
    for (NodeId p : gen.params) grads_.push_back(g.grad(p));
    adam_g_.step(generator_.params(), grads_);
    ema_.update(it + 1, generator_.params());

    if (!pinned_) {
      if (cfg_.soft_counts) {
        stats_.record_soft(g.value(probs).data());
      } else {
        const auto labels = argmax_rows(g.value(probs));
        stats_.record_batch(labels);
      }
    }

    const double loss_g = g.value(losses.loss_g).item();
    const double loss_reg = g.value(reg).item();
    if (!std::isfinite(loss_d) || !std::isfinite(loss_g) || !std::isfinite(loss_reg)) {
      throw TrainingError("non-finite loss at iteration " + std::to_string(it) + ": loss_d=" + format_double(loss_d) +
                          " loss_g=" + format_double(loss_g) + " loss_reg=" + format_double(loss_reg));
    }
    sum_d_ += loss_d;
    sum_g_ += loss_g;
    sum_reg_ += loss_reg;
    ++window_;
  }

  double class0_fraction() const {
    const auto labels = argmax_rows(clf_.forward(generator_.forward(eval_input_)));
    return label_fractions(labels, k_)[0];
  }

  MetricsRow evaluate(std::size_t iter) {
    MetricsRow row;
    row.cycle = ++rows_;
    row.iter = iter;
    const double w = static_cast<double>(std::max<std::size_t>(window_, 1));
    row.loss_d = sum_d_ / w;
    row.loss_g = sum_g_ / w;
    row.loss_reg = sum_reg_ / w;
    sum_d_ = sum_g_ = sum_reg_ = 0.0;
    window_ = 0;

    Mlp evaluated = generator_;
    if (ema_.active()) evaluated.params() = ema_.shadow();
    const Tensor samples = evaluated.forward(eval_input_);
    const Mlp& annotator = eval_.annotator ? *eval_.annotator : clf_;
    const auto labels = argmax_rows(annotator.forward(samples));
    row.kl_uniform = kl_to_uniform(labels, k_);
    row.class_fracs = label_fractions(labels, k_);
    if (eval_.reference) row.frechet = frechet_gaussian(eval_.reference->samples, samples).distance;
    row.n_dist.assign(snapshot_.values().begin(), snapshot_.values().end());
    row.class0_fraction = class0_fraction();
    return row;
  }

  const TrainerConfig& cfg_;
  const LabeledDataset& data_;
  const Mlp& clf_;
  EvalContext eval_;
  std::size_t k_;
  Mlp generator_;
  Mlp discriminator_;
  Adam adam_g_;
  Adam adam_d_;
  Ema ema_;
  EffectiveClassStats stats_;
  ClassDistribution snapshot_;
  std::optional<ClassDistribution> pinned_;
  Rng batch_rng_;
  Rng noise_rng_;
  Tensor eval_input_;
  std::vector<Tensor> grads_;
  double sum_d_ = 0.0, sum_g_ = 0.0, sum_reg_ = 0.0;
  std::size_t window_ = 0;
  std::size_t rows_ = 0;
};

}  // namespace

TrainResult train(const TrainerConfig& cfg, const LabeledDataset& data, const Mlp& classifier,
                  const EvalContext& eval) {
  GanRun run(cfg, data, classifier, eval);
  return run.run(0);
}

TrainResult fixed_stats_experiment(const TrainerConfig& cfg, const FixedStatsOptions& opts,
                                   const LabeledDataset& data, const Mlp& classifier, const EvalContext& eval) {
  GanRun run(cfg, data, classifier, eval);
  run.pin_statistics(opts.n_hat);
  return run.run(opts.warmup);
}

void export_checkpoint(const std::filesystem::path& dir, const TrainResult& result, const TrainerConfig& cfg) {
  std::filesystem::create_directories(dir);
  save_mlp(dir / "generator.txt", result.generator);
  save_mlp(dir / "generator_raw.txt", result.raw_generator);
  save_mlp(dir / "discriminator.txt", result.discriminator);
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  auto sizes = [](const Mlp& m) {
    std::string s;
    for (auto v : m.spec().sizes) s += (s.empty() ? "" : ",") + std::to_string(v);
    return s;
  };
  out << "generator_sizes=" << sizes(result.generator) << '\n';
  out << "discriminator_sizes=" << sizes(result.discriminator) << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "iteration=" << (result.history.empty() ? 0 : result.history.back().iter) << '\n';
  out << "ema_active=" << (cfg.resolved_ema_start() <= cfg.iterations ? 1 : 0) << '\n';
}

}  // namespace balance
