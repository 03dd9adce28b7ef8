#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "xanchor/anchor_table.hpp"
#include "xanchor/linear_map.hpp"

namespace xanchor {

struct AdvConfig {
  std::size_t top_k_vocab = 50000;
  int epochs = 5;
  int batches_per_epoch = 1000;
  std::size_t batch_size = 32;
  int dis_steps = 5;  ///< discriminator updates per map update
  std::size_t disc_hidden = 256;
  double disc_input_dropout = 0.1;
  double label_smoothing = 0.2;
  double leaky_slope = 0.2;
  double lr_map = 0.1;
  double lr_disc = 0.1;
  double lr_decay = 0.95;  ///< per epoch, both learning rates
  double ortho_beta = 0.01;
  std::uint64_t seed = 0;
  /// Relative margin over a random orthogonal map's criterion.
  double convergence_threshold = 0.5;
  std::size_t criterion_words = 10000;
  std::size_t csls_knn = 10;

  void validate() const;
};

nlohmann::json to_json(const AdvConfig& cfg);
AdvConfig adv_config_from_json(const nlohmann::json& j, AdvConfig base = {});

struct EpochStats {
  int epoch = 0;
  double disc_accuracy = 0.0;
  double disc_loss = 0.0;
  double map_loss = 0.0;
  double criterion = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_criterion = 0.0;
  /// Criterion of a seeded random orthogonal map on the same tables.
  double baseline_criterion = 0.0;
  /// baseline + convergence_threshold * |baseline|
  double threshold_value = 0.0;
  bool converged = false;
  std::size_t src_rows = 0;
  std::size_t tgt_rows = 0;
};

nlohmann::json to_json(const TrainReport& report);

struct AdversarialResult {
  LinearMap map;
  TrainReport report;
};

/// Adversarial training of an orthogonal-ish map on unit-normalized rows.
/// Returns the epoch checkpoint with the best unsupervised criterion.
/// DataError on dim mismatch; TrainingDivergedError on a non-finite loss.
AdversarialResult train_adversarial(const AnchorTable& src, const AnchorTable& tgt,
                                    const AdvConfig& cfg);

/// Mean top-1 CSLS score of the first `n_words` mapped source rows against
/// the target table.
double unsupervised_criterion(const LinearMap& map, const AnchorTable& src,
                              const AnchorTable& tgt, std::size_t knn = 10,
                              std::size_t n_words = 10000);

/// (1 + beta) W - beta (W W^T) W
RowMatrix orthogonalize_step(const RowMatrix& w, double beta);

/// Seeded Haar-random orthogonal matrix.
RowMatrix random_orthogonal(std::size_t dim, std::uint64_t seed);

struct RefineReport {
  std::vector<double> criterion;          ///< index 0 is the input map
  std::vector<std::size_t> dictionary_size;  ///< induced pairs per round
  std::size_t best_round = 0;
};

nlohmann::json to_json(const RefineReport& report);

/// Alternates mutual-CSLS-neighbour dictionary induction over the first
/// `n_words` rows of each table with Procrustes. Returns the best of the
/// input and the `rounds` refined maps by criterion (earliest on ties).
/// RefinementError when no mutual pairs exist.
LinearMap refine_procrustes(const LinearMap& map, const AnchorTable& src,
                            const AnchorTable& tgt, int rounds,
                            std::size_t n_words = 10000, std::size_t knn = 10,
                            RefineReport* report = nullptr);

}  // namespace xanchor
