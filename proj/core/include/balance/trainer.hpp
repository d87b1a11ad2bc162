#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "balance/class_stats.hpp"
#include "balance/graph.hpp"
#include "balance/longtail.hpp"
#include "balance/mlp.hpp"

namespace balance {

/// How generator inputs carry a class label.
///   None             - unconditional generator (default)
///   Uniform          - one-hot label appended to the noise, drawn uniformly
///   InverseFrequency - as Uniform, drawn with weight 1 / N_k
enum class LabelProposal { None, Uniform, InverseFrequency };

const char* label_proposal_name(LabelProposal p);
LabelProposal parse_label_proposal(const std::string& name);

struct TrainerConfig {
  std::size_t noise_dim = 8;
  std::vector<std::size_t> g_hidden{32, 32};
  std::vector<std::size_t> d_hidden{32, 32};
  Activation g_activation = Activation::Tanh;
  Activation d_activation = Activation::LeakyRelu;

  std::size_t batch_size = 64;
  std::size_t iterations = 4000;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;

  double lambda = 5.0;
  double alpha = 0.5;
  double beta = 1.0;
  std::size_t cycle_len = 200;
  bool soft_counts = false;

  double ema_decay = 0.999;
  /// First generator step folded into the EMA; defaults to 20% of iterations.
  std::optional<std::size_t> ema_start;

  std::size_t eval_samples = 2000;
  LabelProposal label_proposal = LabelProposal::None;
  std::uint64_t seed = 0;

  std::size_t resolved_ema_start() const { return ema_start.value_or(iterations / 5); }
};

/// Throws std::invalid_argument naming the first bad field.
void validate(const TrainerConfig& cfg);

/// Thrown when a loss turns non-finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RelativisticLosses {
  NodeId loss_d;
  NodeId loss_g;
};

/// L_D = -mean log sigmoid(D(x) - D(G(z))),  L_G = -mean log sigmoid(D(G(z)) - D(x))
/// over paired rows of two n x 1 critic outputs.
RelativisticLosses relativistic_losses(Graph& g, NodeId d_real, NodeId d_fake);

/// Data the trainer evaluates against at each cycle boundary.
struct EvalContext {
  /// Labels generated samples for kl_uniform / class fractions. Falls back to
  /// the in-loop classifier when null.
  const Mlp* annotator = nullptr;
  /// Real points for the Frechet proxy. Skipped (reported as 0) when null.
  const LabeledDataset* reference = nullptr;
};

struct MetricsRow {
  std::size_t cycle = 0;
  std::size_t iter = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_reg = 0.0;
  double kl_uniform = 0.0;
  double frechet = 0.0;
  std::vector<double> class_fracs;    // annotator fractions on evaluation samples
  std::vector<double> n_dist;         // effective class distribution after the cycle
  double class0_fraction = 0.0;       // in-loop classifier, raw generator
};

std::vector<std::string> metrics_header(std::size_t num_classes);
std::vector<std::string> metrics_fields(const MetricsRow& row);

struct TrainResult {
  Mlp generator;      // EMA weights once the EMA has started, raw weights otherwise
  Mlp raw_generator;
  Mlp discriminator;
  std::vector<MetricsRow> history;
  /// Row 0 is the state before any regularized step (fixed-stats runs only).
  std::vector<double> class0_trajectory;
};

/// Full classifier-in-the-loop GAN training with cycle-scheduled statistics.
TrainResult train(const TrainerConfig& cfg, const LabeledDataset& data, const Mlp& classifier,
                  const EvalContext& eval = {});

struct FixedStatsOptions {
  std::vector<double> n_hat;
  /// Unregularized iterations before the fixed statistics switch on; the
  /// class-0 fraction measured at the end of warmup is the trajectory start.
  std::size_t warmup = 0;
};

/// Trains with the effective class frequencies pinned to `opts.n_hat` and
/// returns the per-cycle fraction of generated samples the classifier labels 0.
TrainResult fixed_stats_experiment(const TrainerConfig& cfg, const FixedStatsOptions& opts,
                                   const LabeledDataset& data, const Mlp& classifier,
                                   const EvalContext& eval = {});

/// Writes generator.txt, discriminator.txt and manifest.txt into `dir`.
void export_checkpoint(const std::filesystem::path& dir, const TrainResult& result, const TrainerConfig& cfg);

}  // namespace balance
