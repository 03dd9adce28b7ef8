#include "xanchor/align_unsupervised.hpp"

#include <cmath>
#include <random>
#include <unordered_set>

#include "xanchor/align_supervised.hpp"
#include "xanchor/error.hpp"
#include "xanchor/kernels.hpp"
#include "xanchor/log.hpp"
#include "xanchor/retrieval.hpp"

namespace xanchor {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

AnchorTable unit_rows(const AnchorTable& table) {
  const RowMatrix m = kernels::normalized_rows(table.matrix());
  AnchorTable out(table.dim());
  for (std::size_t i = 0; i < table.size(); ++i) {
    out.add(table.key(i), std::span<const double>(m.row(static_cast<Eigen::Index>(i)).data(), table.dim()),
            table.count(i));
  }
  return out;
}

/// d -> h -> h -> 1 with leaky ReLU, input dropout and a sigmoid output.
class Discriminator {
 public:
  Discriminator(std::size_t dim, std::size_t hidden, double slope, std::mt19937_64& rng)
      : slope_(slope) {
    const auto d = static_cast<Eigen::Index>(dim);
    const auto h = static_cast<Eigen::Index>(hidden);
    w1_ = init(h, d, rng);
    b1_ = init(h, 1, rng, d).col(0);
    w2_ = init(h, h, rng);
    b2_ = init(h, 1, rng, h).col(0);
    w3_ = init(1, h, rng).row(0).transpose();
    b3_ = init(1, 1, rng, h)(0, 0);
  }

  struct Pass {
    RowMatrix mask, input, z1, h1, z2, h2;
    Eigen::VectorXd logit;
  };

  Pass forward(const RowMatrix& x, double dropout, std::mt19937_64* rng) const {
    Pass p;
    p.mask = RowMatrix::Ones(x.rows(), x.cols());
    if (rng && dropout > 0.0) {
      const double keep = 1.0 - dropout;
      for (Eigen::Index i = 0; i < p.mask.size(); ++i) {
        p.mask.data()[i] = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
      }
    }
    p.input = x.cwiseProduct(p.mask);
    p.z1 = (p.input * w1_.transpose()).rowwise() + b1_.transpose();
    p.h1 = leaky(p.z1);
    p.z2 = (p.h1 * w2_.transpose()).rowwise() + b2_.transpose();
    p.h2 = leaky(p.z2);
    p.logit = (p.h2 * w3_).array() + b3_;
    return p;
  }

  /// Mean BCE against soft labels y; dlogit is filled with dL/dlogit.
  static double loss(const Eigen::VectorXd& logit, const Eigen::VectorXd& y, Eigen::VectorXd& dlogit) {
    const auto n = static_cast<double>(logit.size());
    double total = 0.0;
    dlogit.resize(logit.size());
    for (Eigen::Index i = 0; i < logit.size(); ++i) {
      total += y(i) * softplus(-logit(i)) + (1.0 - y(i)) * softplus(logit(i));
      dlogit(i) = (sigmoid(logit(i)) - y(i)) / n;
    }
    return total / n;
  }

  /// Backpropagates dlogit; applies an SGD step when lr > 0 and returns the
  /// gradient with respect to the (pre-dropout) input.
  RowMatrix backward(const Pass& p, const Eigen::VectorXd& dlogit, double lr) {
    const RowMatrix dz2 = (dlogit * w3_.transpose()).cwiseProduct(leaky_grad(p.z2));
    const RowMatrix dz1 = (dz2 * w2_).cwiseProduct(leaky_grad(p.z1));
    RowMatrix dx = (dz1 * w1_).cwiseProduct(p.mask);
    if (lr > 0.0) {
      w3_ -= lr * (p.h2.transpose() * dlogit);
      b3_ -= lr * dlogit.sum();
      w2_ -= lr * (dz2.transpose() * p.h1);
      b2_ -= lr * dz2.colwise().sum().transpose();
      w1_ -= lr * (dz1.transpose() * p.input);
      b1_ -= lr * dz1.colwise().sum().transpose();
    }
    return dx;
  }

 private:
  // PyTorch-style U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static RowMatrix init(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                        Eigen::Index fan_in = 0) {
    if (fan_in == 0) fan_in = cols;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * bound;
    return m;
  }

  RowMatrix leaky(const RowMatrix& z) const {
    return z.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
  }
  RowMatrix leaky_grad(const RowMatrix& z) const {
    return z.unaryExpr([s = slope_](double v) { return v > 0.0 ? 1.0 : s; });
  }

  double slope_;
  RowMatrix w1_, w2_;
  Eigen::VectorXd b1_, b2_, w3_;
  double b3_ = 0.0;
};

RowMatrix gather(const RowMatrix& m, const std::vector<std::size_t>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void check_finite(double value, const char* what, int epoch) {
  if (!std::isfinite(value)) {
    throw TrainingDivergedError(std::string(what) + " became non-finite in epoch " + std::to_string(epoch),
                                epoch);
  }
}

}  // namespace

void AdvConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("adversarial config: " + m); };
  if (top_k_vocab < 1) fail("top_k_vocab must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batches_per_epoch < 1) fail("batches_per_epoch must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (dis_steps < 0) fail("dis_steps must be >= 0");
  if (disc_hidden < 1) fail("disc_hidden must be >= 1");
  if (disc_input_dropout < 0.0 || disc_input_dropout >= 1.0) fail("disc_input_dropout must be in [0,1)");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) fail("label_smoothing must be in [0,1)");
  if (!(lr_map > 0.0) || !(lr_disc > 0.0)) fail("learning rates must be positive");
  if (!(lr_decay > 0.0)) fail("lr_decay must be positive");
  if (!(ortho_beta > 0.0) || ortho_beta > 0.1) fail("ortho_beta must be in (0, 0.1]");
  if (criterion_words < 1 || csls_knn < 1) fail("criterion_words and csls_knn must be >= 1");
}

nlohmann::json to_json(const AdvConfig& c) {
  return {{"top_k_vocab", c.top_k_vocab},
          {"epochs", c.epochs},
          {"batches_per_epoch", c.batches_per_epoch},
          {"batch_size", c.batch_size},
          {"dis_steps", c.dis_steps},
          {"disc_hidden", c.disc_hidden},
          {"disc_input_dropout", c.disc_input_dropout},
          {"label_smoothing", c.label_smoothing},
          {"leaky_slope", c.leaky_slope},
          {"lr_map", c.lr_map},
          {"lr_disc", c.lr_disc},
          {"lr_decay", c.lr_decay},
          {"ortho_beta", c.ortho_beta},
          {"seed", c.seed},
          {"convergence_threshold", c.convergence_threshold},
          {"criterion_words", c.criterion_words},
          {"csls_knn", c.csls_knn}};
}

AdvConfig adv_config_from_json(const nlohmann::json& j, AdvConfig c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("top_k_vocab", c.top_k_vocab);
  get("epochs", c.epochs);
  get("batches_per_epoch", c.batches_per_epoch);
  get("batch_size", c.batch_size);
  get("dis_steps", c.dis_steps);
  get("disc_hidden", c.disc_hidden);
  get("disc_input_dropout", c.disc_input_dropout);
  get("label_smoothing", c.label_smoothing);
  get("leaky_slope", c.leaky_slope);
  get("lr_map", c.lr_map);
  get("lr_disc", c.lr_disc);
  get("lr_decay", c.lr_decay);
  get("ortho_beta", c.ortho_beta);
  get("seed", c.seed);
  get("convergence_threshold", c.convergence_threshold);
  get("criterion_words", c.criterion_words);
  get("csls_knn", c.csls_knn);
  return c;
}

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"disc_accuracy", e.disc_accuracy},
                      {"disc_loss", e.disc_loss},
                      {"map_loss", e.map_loss},
                      {"criterion", e.criterion}});
  }
  return {{"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"best_criterion", r.best_criterion},
          {"baseline_criterion", r.baseline_criterion},
          {"threshold_value", r.threshold_value},
          {"converged", r.converged},
          {"src_rows", r.src_rows},
          {"tgt_rows", r.tgt_rows}};
}

nlohmann::json to_json(const RefineReport& r) {
  return {{"criterion", r.criterion}, {"dictionary_size", r.dictionary_size}, {"best_round", r.best_round}};
}

RowMatrix orthogonalize_step(const RowMatrix& w, double beta) {
  return (1.0 + beta) * w - beta * ((w * w.transpose()) * w);
}

RowMatrix random_orthogonal(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

double unsupervised_criterion(const LinearMap& map, const AnchorTable& src, const AnchorTable& tgt,
                              std::size_t knn, std::size_t n_words) {
  const AnchorTable mapped = map.apply(src);
  const std::size_t n = std::min(n_words, mapped.size());
  if (n == 0 || tgt.empty()) return 0.0;
  const RowMatrix queries = mapped.matrix().topRows(static_cast<Eigen::Index>(n));
  const auto rankings = CslsIndex(mapped, tgt, knn).rank(queries, 1);
  double total = 0.0;
  for (const auto& r : rankings) total += r.front().score;
  return total / static_cast<double>(n);
}

AdversarialResult train_adversarial(const AnchorTable& src_in, const AnchorTable& tgt_in,
                                    const AdvConfig& cfg) {
  cfg.validate();
  if (src_in.dim() != tgt_in.dim()) {
    throw DataError("source dim " + std::to_string(src_in.dim()) + " != target dim " +
                    std::to_string(tgt_in.dim()));
  }
  if (src_in.empty() || tgt_in.empty()) throw DataError("empty anchor table");
  if (src_in.size() < cfg.top_k_vocab || tgt_in.size() < cfg.top_k_vocab) {
    warn("fewer than " + std::to_string(cfg.top_k_vocab) + " rows; training on all " +
         std::to_string(src_in.size()) + " source and " + std::to_string(tgt_in.size()) + " target rows");
  }
  const AnchorTable src = unit_rows(src_in);
  const AnchorTable tgt = unit_rows(tgt_in);
  const std::size_t n_src = std::min(cfg.top_k_vocab, src.size());
  const std::size_t n_tgt = std::min(cfg.top_k_vocab, tgt.size());
  const RowMatrix xs = src.matrix();
  const RowMatrix xt = tgt.matrix();
  const auto d = static_cast<Eigen::Index>(src.dim());

  std::mt19937_64 rng(cfg.seed);
  Discriminator disc(src.dim(), cfg.disc_hidden, cfg.leaky_slope, rng);
  LinearMap map = LinearMap::identity(src.dim());
  map.orthogonal = false;
  map.normalized = true;

  const auto b = static_cast<Eigen::Index>(cfg.batch_size);
  Eigen::VectorXd disc_labels(2 * b), map_labels(2 * b);
  disc_labels.head(b).setConstant(1.0 - cfg.label_smoothing);
  disc_labels.tail(b).setConstant(cfg.label_smoothing);
  map_labels.head(b).setConstant(cfg.label_smoothing);
  map_labels.tail(b).setConstant(1.0 - cfg.label_smoothing);

  TrainReport report;
  report.src_rows = n_src;
  report.tgt_rows = n_tgt;
  LinearMap best = map;
  double lr_map = cfg.lr_map;
  double lr_disc = cfg.lr_disc;
  std::vector<std::size_t> src_ids(cfg.batch_size), tgt_ids(cfg.batch_size);
  RowMatrix batch(2 * b, d);
  Eigen::VectorXd dlogit;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double correct = 0.0, seen = 0.0, disc_loss = 0.0, map_loss = 0.0;
    for (int it = 0; it < cfg.batches_per_epoch; ++it) {
      for (int s = 0; s < cfg.dis_steps; ++s) {
        for (auto& i : src_ids) i = uniform_index(rng, n_src);
        for (auto& i : tgt_ids) i = uniform_index(rng, n_tgt);
        batch.topRows(b) = gather(xs, src_ids) * map.w.transpose();
        batch.bottomRows(b) = gather(xt, tgt_ids);
        const auto pass = disc.forward(batch, cfg.disc_input_dropout, &rng);
        const double l = Discriminator::loss(pass.logit, disc_labels, dlogit);
        check_finite(l, "discriminator loss", epoch);
        disc_loss += l;
        for (Eigen::Index i = 0; i < 2 * b; ++i) {
          correct += ((pass.logit(i) > 0.0) == (i < b)) ? 1.0 : 0.0;
        }
        seen += static_cast<double>(2 * b);
        disc.backward(pass, dlogit, lr_disc);
      }
      for (auto& i : src_ids) i = uniform_index(rng, n_src);
      for (auto& i : tgt_ids) i = uniform_index(rng, n_tgt);
      const RowMatrix xb = gather(xs, src_ids);
      batch.topRows(b) = xb * map.w.transpose();
      batch.bottomRows(b) = gather(xt, tgt_ids);
      const auto pass = disc.forward(batch, 0.0, nullptr);
      const double l = Discriminator::loss(pass.logit, map_labels, dlogit);
      check_finite(l, "mapping loss", epoch);
      map_loss += l;
      const RowMatrix dx = disc.backward(pass, dlogit, 0.0);
      // mapped = X W^T, so dL/dW = dmapped^T X.
      map.w -= lr_map * (dx.topRows(b).transpose() * xb);
      map.w = orthogonalize_step(map.w, cfg.ortho_beta);
      if (!map.w.allFinite()) {
        throw TrainingDivergedError("map became non-finite in epoch " + std::to_string(epoch), epoch);
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.disc_accuracy = seen > 0.0 ? correct / seen : 0.0;
    stats.disc_loss = cfg.dis_steps > 0 ? disc_loss / (cfg.batches_per_epoch * cfg.dis_steps) : 0.0;
    stats.map_loss = map_loss / cfg.batches_per_epoch;
    stats.criterion = unsupervised_criterion(map, src, tgt, cfg.csls_knn, cfg.criterion_words);
    check_finite(stats.criterion, "criterion", epoch);
    report.epochs.push_back(stats);
    if (report.best_epoch < 0 || stats.criterion > report.best_criterion) {
      report.best_epoch = epoch;
      report.best_criterion = stats.criterion;
      best = map;
    }
    lr_map *= cfg.lr_decay;
    lr_disc *= cfg.lr_decay;
  }

  LinearMap random;
  random.w = random_orthogonal(src.dim(), cfg.seed ^ 0x5851F42D4C957F2DULL);
  random.orthogonal = true;
  report.baseline_criterion = unsupervised_criterion(random, src, tgt, cfg.csls_knn, cfg.criterion_words);
  report.threshold_value =
      report.baseline_criterion + cfg.convergence_threshold * std::abs(report.baseline_criterion);
  report.converged = report.best_criterion >= report.threshold_value;
  best.orthogonal = best.orthogonality_defect() <= 1e-6 * static_cast<double>(src.dim());
  return {best, report};
}

LinearMap refine_procrustes(const LinearMap& map, const AnchorTable& src_in, const AnchorTable& tgt_in,
                            int rounds, std::size_t n_words, std::size_t knn, RefineReport* report) {
  RefineReport local;
  RefineReport& rep = report ? *report : local;
  rep = {};
  if (rounds <= 0) {
    rep.criterion.push_back(unsupervised_criterion(map, src_in, tgt_in, knn, n_words));
    rep.dictionary_size.push_back(0);
    return map;
  }
  const AnchorTable src = unit_rows(src_in);
  const AnchorTable tgt = unit_rows(tgt_in);
  const std::size_t ns = std::min(n_words, src.size());
  const std::size_t nt = std::min(n_words, tgt.size());
  const AnchorTable src_head = src.head(ns);
  const AnchorTable tgt_head = tgt.head(nt);
  const RowMatrix xs = src_head.matrix();
  const RowMatrix xt = tgt_head.matrix();

  LinearMap current = map;
  LinearMap best = map;
  rep.criterion.push_back(unsupervised_criterion(map, src, tgt, knn, n_words));
  rep.dictionary_size.push_back(0);
  double best_value = rep.criterion.front();
  for (int round = 1; round <= rounds; ++round) {
    const AnchorTable mapped = current.apply(src_head);
    const RowMatrix ms = mapped.matrix();
    // Row-level best matches in both directions; cluster rows stay distinct.
    const RowMatrix ms_unit = kernels::normalized_rows(ms);
    const std::size_t k = std::min({knn, ns, nt});
    const auto rs = kernels::omp::topk_mean_dot(xt, ms_unit, k);
    const auto rt = kernels::omp::topk_mean_dot(ms_unit, xt, k);
    const auto fwd = kernels::omp::topk_scores(ms_unit, xt, 1, 2.0, rs);
    const auto bwd = kernels::omp::topk_scores(xt, ms_unit, 1, 2.0, rt);
    std::vector<std::pair<std::size_t, std::size_t>> dict;
    for (std::size_t i = 0; i < ns; ++i) {
      const auto j = fwd.at(i, 0);
      if (bwd.at(j, 0) == i) dict.emplace_back(i, j);
    }
    if (dict.empty()) throw RefinementError("no mutual nearest neighbours in round " + std::to_string(round));
    TrainingPairs pairs;
    pairs.normalized = true;
    pairs.x.resize(static_cast<Eigen::Index>(dict.size()), xs.cols());
    pairs.y.resize(static_cast<Eigen::Index>(dict.size()), xt.cols());
    for (std::size_t p = 0; p < dict.size(); ++p) {
      pairs.x.row(static_cast<Eigen::Index>(p)) = xs.row(static_cast<Eigen::Index>(dict[p].first));
      pairs.y.row(static_cast<Eigen::Index>(p)) = xt.row(static_cast<Eigen::Index>(dict[p].second));
      pairs.keys.emplace_back(src_head.key(dict[p].first), tgt_head.key(dict[p].second));
    }
    current = fit_procrustes(pairs);
    const double value = unsupervised_criterion(current, src, tgt, knn, n_words);
    rep.criterion.push_back(value);
    rep.dictionary_size.push_back(dict.size());
    if (value > best_value) {
      best_value = value;
      best = current;
      rep.best_round = static_cast<std::size_t>(round);
    }
  }
  return best;
}

}  // namespace xanchor
