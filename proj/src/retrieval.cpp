#include "xanchor/retrieval.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "xanchor/error.hpp"
#include "xanchor/kernels.hpp"
#include "xanchor/log.hpp"

namespace xanchor {
namespace {

constexpr std::size_t kDefaultKs[] = {1, 5, 10};

Ranking collapse(const kernels::TopK& top, std::size_t row, const AnchorTable& candidates,
                 std::size_t k, double offset) {
  Ranking out;
  std::unordered_set<std::string_view> seen;
  for (std::size_t j = 0; j < top.k && out.size() < k; ++j) {
    const auto c = top.at(row, j);
    const auto surface = parent_surface(candidates.key(c));
    if (!seen.insert(surface).second) continue;
    out.push_back({std::string(surface), top.score_at(row, j) - offset, c});
  }
  return out;
}

void check_dims(std::size_t query_dim, const AnchorTable& candidates) {
  if (candidates.empty()) throw DataError("no candidates");
  if (query_dim != candidates.dim()) {
    throw DataError("query dim " + std::to_string(query_dim) + " != candidate dim " +
                    std::to_string(candidates.dim()));
  }
}

RowMatrix single_query(std::span<const double> query) {
  RowMatrix q(1, static_cast<Eigen::Index>(query.size()));
  for (std::size_t c = 0; c < query.size(); ++c) q(0, static_cast<Eigen::Index>(c)) = query[c];
  if (q.norm() == 0.0) throw DataError("zero-norm query");
  return q;
}

}  // namespace

GoldLexicon make_gold(const BilingualLexicon& lex) {
  GoldLexicon gold;
  for (const auto& p : lex.pairs) gold[p.source].insert(p.target);
  return gold;
}

GoldLexicon read_gold(const std::filesystem::path& path) { return make_gold(read_dictionary(path)); }

std::string to_string(Retrieval r) { return r == Retrieval::nn ? "nn" : "csls_knn_10"; }

Retrieval parse_retrieval(std::string_view text) {
  if (text == "nn") return Retrieval::nn;
  if (text == "csls_knn_10" || text == "csls") return Retrieval::csls;
  throw ConfigError("retrieval must be nn or csls_knn_10, got '" + std::string(text) + "'");
}

std::size_t max_rows_per_surface(const AnchorTable& table) {
  std::unordered_map<std::string_view, std::size_t> counts;
  std::size_t best = 0;
  for (const auto& key : table.keys()) best = std::max(best, ++counts[parent_surface(key)]);
  return best;
}

std::vector<Ranking> nn_rank(const RowMatrix& queries, const AnchorTable& candidates,
                             std::size_t k) {
  check_dims(static_cast<std::size_t>(queries.cols()), candidates);
  const RowMatrix cand = kernels::normalized_rows(candidates.matrix());
  const RowMatrix q = kernels::normalized_rows(queries);
  const auto top = kernels::omp::topk_scores(q, cand, k * max_rows_per_surface(candidates), 1.0, {});
  std::vector<Ranking> out(static_cast<std::size_t>(q.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = collapse(top, i, candidates, k, 0.0);
  return out;
}

Ranking nn_retrieve(std::span<const double> query, const AnchorTable& candidates, std::size_t k) {
  check_dims(query.size(), candidates);
  return nn_rank(single_query(query), candidates, k).front();
}

CslsIndex::CslsIndex(const AnchorTable& mapped_source, const AnchorTable& candidates,
                     std::size_t knn, std::size_t cap)
    : candidates_(&candidates), knn_(knn) {
  check_dims(mapped_source.dim(), candidates);
  if (mapped_source.empty()) throw DataError("no source vectors for CSLS");
  if (knn < 1) throw ConfigError("CSLS neighbourhood size must be >= 1");
  const std::size_t src_rows = std::min(cap, mapped_source.size());
  const std::size_t cand_rows = std::min(cap, candidates.size());
  const std::size_t limit = std::min(src_rows, cand_rows);
  if (knn_ > limit) {
    warn("CSLS K=" + std::to_string(knn_) + " exceeds the neighbourhood size; using " +
         std::to_string(limit));
    knn_ = limit;
  }
  cand_unit_ = kernels::normalized_rows(candidates.matrix());
  cand_head_ = cand_unit_.topRows(static_cast<Eigen::Index>(cand_rows));
  const RowMatrix src_head =
      kernels::normalized_rows(mapped_source.matrix().topRows(static_cast<Eigen::Index>(src_rows)));
  r_source_ = kernels::omp::topk_mean_dot(cand_unit_, src_head, knn_);
}

std::vector<double> CslsIndex::r_target(const RowMatrix& queries) const {
  return kernels::omp::topk_mean_dot(kernels::normalized_rows(queries), cand_head_, knn_);
}

std::vector<Ranking> CslsIndex::rank(const RowMatrix& queries, std::size_t k) const {
  check_dims(static_cast<std::size_t>(queries.cols()), *candidates_);
  const RowMatrix q = kernels::normalized_rows(queries);
  const auto rt = kernels::omp::topk_mean_dot(q, cand_head_, knn_);
  const auto top = kernels::omp::topk_scores(q, cand_unit_, k * max_rows_per_surface(*candidates_),
                                             2.0, r_source_);
  std::vector<Ranking> out(static_cast<std::size_t>(q.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = collapse(top, i, *candidates_, k, rt[i]);
  return out;
}

Ranking csls_retrieve(std::span<const double> query, const AnchorTable& mapped_source,
                      const AnchorTable& candidates, std::size_t k, std::size_t knn) {
  check_dims(query.size(), candidates);
  const RowMatrix q = single_query(query);
  return CslsIndex(mapped_source, candidates, knn).rank(q, k).front();
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json precision = nlohmann::json::object();
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& [k, p] : report.precision_at) precision[std::to_string(k)] = p;
  for (const auto& [k, h] : report.hits_at) hits[std::to_string(k)] = h;
  return {
      {"retrieval", to_string(report.retrieval)},
      {"precision_at", precision},
      {"hits_at", hits},
      {"n_queries", report.n_queries},
      {"oov_queries", report.oov_queries},
      {"query_vectors", report.query_vectors},
  };
}

EvalReport evaluate_queries(std::span<const EvalQuery> queries, const AnchorTable& mapped_source,
                            const AnchorTable& tgt, Retrieval retrieval,
                            std::span<const std::size_t> ks, std::size_t oov) {
  if (ks.empty()) ks = kDefaultKs;
  if (queries.empty()) throw EvalError("no evaluation queries with a source vector");
  std::vector<std::size_t> sorted_ks(ks.begin(), ks.end());
  std::sort(sorted_ks.begin(), sorted_ks.end());
  sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());
  if (sorted_ks.front() == 0) throw ConfigError("precision cut-offs must be >= 1");
  const std::size_t kmax = sorted_ks.back();

  std::size_t rows = 0;
  for (const auto& q : queries) {
    if (q.vectors.empty()) throw EvalError("query '" + q.label + "' has no vectors");
    rows += q.vectors.size();
  }
  RowMatrix matrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(tgt.dim()));
  std::size_t r = 0;
  for (const auto& q : queries) {
    for (const auto& v : q.vectors) {
      if (v.size() != tgt.dim()) throw DataError("query '" + q.label + "' has the wrong dimension");
      for (std::size_t c = 0; c < v.size(); ++c) {
        matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
      }
      ++r;
    }
  }

  std::vector<Ranking> rankings;
  if (retrieval == Retrieval::nn) {
    rankings = nn_rank(matrix, tgt, kmax);
  } else {
    rankings = CslsIndex(mapped_source, tgt).rank(matrix, kmax);
  }

  EvalReport report;
  report.retrieval = retrieval;
  report.n_queries = queries.size();
  report.oov_queries = oov;
  report.query_vectors = rows;
  for (auto k : sorted_ks) report.hits_at[k] = 0;
  r = 0;
  for (const auto& q : queries) {
    // Best (smallest) rank at which any of the query's vectors hits.
    std::size_t best = kmax;
    for (std::size_t v = 0; v < q.vectors.size(); ++v, ++r) {
      const auto& ranking = rankings[r];
      for (std::size_t j = 0; j < ranking.size() && j < best; ++j) {
        if (q.gold.count(ranking[j].surface)) {
          best = j;
          break;
        }
      }
    }
    for (auto k : sorted_ks) {
      if (best < k) ++report.hits_at[k];
    }
  }
  for (auto k : sorted_ks) {
    report.precision_at[k] =
        100.0 * static_cast<double>(report.hits_at[k]) / static_cast<double>(report.n_queries);
  }
  return report;
}

EvalReport evaluate(const LinearMap& map, const AnchorTable& src, const AnchorTable& tgt,
                    const GoldLexicon& gold, Retrieval retrieval,
                    std::span<const std::size_t> ks) {
  const AnchorTable mapped = map.apply(src);
  std::vector<EvalQuery> queries;
  std::size_t oov = 0;
  for (const auto& [word, targets] : gold) {
    const auto& rows = mapped.rows_for_surface(word);
    if (rows.empty()) {
      ++oov;
      continue;
    }
    EvalQuery q;
    q.label = word;
    q.gold = targets;
    for (auto row : rows) {
      auto v = mapped.vector(row);
      q.vectors.emplace_back(v.begin(), v.end());
    }
    queries.push_back(std::move(q));
  }
  if (queries.empty()) throw EvalError("none of the " + std::to_string(gold.size()) +
                                       " gold source words has a source vector");
  return evaluate_queries(queries, mapped, tgt, retrieval, ks, oov);
}

}  // namespace xanchor
