#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xanchor/anchor_table.hpp"
#include "xanchor/lexicon.hpp"
#include "xanchor/linear_map.hpp"

namespace xanchor {

/// source surface -> acceptable target surfaces
using GoldLexicon = std::map<std::string, std::set<std::string>>;

GoldLexicon make_gold(const BilingualLexicon& lex);
GoldLexicon read_gold(const std::filesystem::path& path);

enum class Retrieval { nn, csls };

/// "nn" or "csls_knn_10".
std::string to_string(Retrieval r);
Retrieval parse_retrieval(std::string_view text);

inline constexpr std::size_t kNeighborhoodCap = 50000;

struct Candidate {
  std::string surface;
  double score = 0.0;
  std::size_t row = 0;  ///< best-scoring candidate row for this surface
};
using Ranking = std::vector<Candidate>;

/// Largest number of rows sharing one parent surface.
std::size_t max_rows_per_surface(const AnchorTable& table);

/// Cosine ranking over `candidates`, cluster rows collapsed to their surface
/// before truncation to k, ties to the smaller row. DataError on a zero
/// query or dim mismatch.
Ranking nn_retrieve(std::span<const double> query, const AnchorTable& candidates,
                    std::size_t k);

/// Precomputed CSLS neighbourhoods:
///   score(x, y) = 2 cos(x, y) - r_T(x) - r_S(y)
/// where r_T(x) averages the K best cosines of x against the candidates and
/// r_S(y) the K best cosines of y against the mapped source vectors. Both
/// neighbourhoods use at most the first `cap` rows of each table.
class CslsIndex {
 public:
  CslsIndex(const AnchorTable& mapped_source, const AnchorTable& candidates,
            std::size_t knn = 10, std::size_t cap = kNeighborhoodCap);

  std::size_t knn() const noexcept { return knn_; }
  const std::vector<double>& r_source() const noexcept { return r_source_; }
  /// r_T for every row of `queries` (any norm; rows are normalized here).
  std::vector<double> r_target(const RowMatrix& queries) const;

  /// Rankings for every row of `queries`. Zero rows score with cosine 0.
  std::vector<Ranking> rank(const RowMatrix& queries, std::size_t k) const;

 private:
  const AnchorTable* candidates_;
  RowMatrix cand_unit_;
  RowMatrix cand_head_;
  std::vector<double> r_source_;
  std::size_t knn_;
};

/// Cosine rankings for every row of `queries` (batch form of nn_retrieve).
std::vector<Ranking> nn_rank(const RowMatrix& queries, const AnchorTable& candidates,
                             std::size_t k);

Ranking csls_retrieve(std::span<const double> query, const AnchorTable& mapped_source,
                      const AnchorTable& candidates, std::size_t k, std::size_t knn = 10);

struct EvalReport {
  Retrieval retrieval = Retrieval::nn;
  std::map<std::size_t, double> precision_at;  ///< percent
  std::map<std::size_t, std::size_t> hits_at;
  std::size_t n_queries = 0;
  std::size_t oov_queries = 0;
  std::size_t query_vectors = 0;
};

nlohmann::json to_json(const EvalReport& report);

/// One evaluation query: already-mapped vectors (a hit through any of them
/// counts) and the accepted target surfaces.
struct EvalQuery {
  std::string label;
  std::vector<std::vector<double>> vectors;
  std::set<std::string> gold;
};

/// Scores prepared queries. `mapped_source` supplies the CSLS source
/// neighbourhoods. EvalError when `queries` is empty.
EvalReport evaluate_queries(std::span<const EvalQuery> queries,
                            const AnchorTable& mapped_source, const AnchorTable& tgt,
                            Retrieval retrieval, std::span<const std::size_t> ks,
                            std::size_t oov = 0);

/// BLI precision: every gold source word with a source row is a query
/// (all its cluster rows participate); the others count as OOV.
EvalReport evaluate(const LinearMap& map, const AnchorTable& src, const AnchorTable& tgt,
                    const GoldLexicon& gold, Retrieval retrieval,
                    std::span<const std::size_t> ks = std::span<const std::size_t>());

}  // namespace xanchor
