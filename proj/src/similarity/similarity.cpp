#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "weighting.hpp"

namespace recbase {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::cosine: return "cosine";
    case Measure::asymmetric_cosine: return "asymmetric";
    case Measure::jaccard: return "jaccard";
    case Measure::dice: return "dice";
    case Measure::tversky: return "tversky";
  }
  return "?";
}

std::string_view to_string(FeatureWeighting w) {
  switch (w) {
    case FeatureWeighting::none: return "none";
    case FeatureWeighting::tfidf: return "tfidf";
    case FeatureWeighting::bm25: return "bm25";
  }
  return "?";
}

std::string_view to_string(Axis a) { return a == Axis::items ? "items" : "users"; }

Measure parse_measure(std::string_view s) {
  if (s == "cosine") return Measure::cosine;
  if (s == "asymmetric" || s == "asymmetric_cosine") return Measure::asymmetric_cosine;
  if (s == "jaccard") return Measure::jaccard;
  if (s == "dice") return Measure::dice;
  if (s == "tversky") return Measure::tversky;
  throw ConfigError(fmt::format("unknown similarity measure '{}'", s));
}

FeatureWeighting parse_feature_weighting(std::string_view s) {
  if (s == "none") return FeatureWeighting::none;
  if (s == "tfidf" || s == "TF-IDF") return FeatureWeighting::tfidf;
  if (s == "bm25" || s == "BM25") return FeatureWeighting::bm25;
  throw ConfigError(fmt::format("unknown feature weighting '{}'", s));
}

Axis parse_axis(std::string_view s) {
  if (s == "items") return Axis::items;
  if (s == "users") return Axis::users;
  throw ConfigError(fmt::format("unknown axis '{}'", s));
}

bool is_set_based(Measure m) {
  return m == Measure::jaccard || m == Measure::dice || m == Measure::tversky;
}

void SimilarityConfig::validate() const {
  if (top_k == 0) throw ConfigError("similarity: topK must be >= 1");
  if (!(shrink >= 0.0) || !std::isfinite(shrink)) throw ConfigError("similarity: shrink must be >= 0");
  auto in02 = [](double x) { return x >= 0.0 && x <= 2.0; };
  if (!in02(asymmetric_alpha)) throw ConfigError("similarity: asymmetric_alpha must be in [0, 2]");
  if (!in02(tversky_alpha) || !in02(tversky_beta)) throw ConfigError("similarity: tversky alpha/beta must be in [0, 2]");
  if (is_set_based(measure) && feature_weighting != FeatureWeighting::none) {
    throw ConfigError(fmt::format("similarity: feature weighting is not defined for set measure '{}'", to_string(measure)));
  }
}

nlohmann::json to_json(const SimilarityConfig& cfg) {
  return {{"similarity", to_string(cfg.measure)},
          {"topK", cfg.top_k},
          {"shrink", cfg.shrink},
          {"normalize", cfg.normalize},
          {"asymmetric_alpha", cfg.asymmetric_alpha},
          {"tversky_alpha", cfg.tversky_alpha},
          {"tversky_beta", cfg.tversky_beta},
          {"feature_weighting", to_string(cfg.feature_weighting)}};
}

SimilarityConfig similarity_config_from_json(const nlohmann::json& j) {
  SimilarityConfig cfg;
  try {
    if (j.contains("similarity")) cfg.measure = parse_measure(j.at("similarity").get<std::string>());
    if (j.contains("topK")) cfg.top_k = j.at("topK").get<std::size_t>();
    if (j.contains("shrink")) cfg.shrink = j.at("shrink").get<double>();
    if (j.contains("normalize")) cfg.normalize = j.at("normalize").get<bool>();
    if (j.contains("asymmetric_alpha")) cfg.asymmetric_alpha = j.at("asymmetric_alpha").get<double>();
    if (j.contains("tversky_alpha")) cfg.tversky_alpha = j.at("tversky_alpha").get<double>();
    if (j.contains("tversky_beta")) cfg.tversky_beta = j.at("tversky_beta").get<double>();
    if (j.contains("feature_weighting")) {
      cfg.feature_weighting = parse_feature_weighting(j.at("feature_weighting").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("similarity parameters: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

SimilarityMatrix::SimilarityMatrix(CsrMatrix m) : matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols()) throw Error("SimilarityMatrix must be square");
}

std::size_t SimilarityMatrix::max_row_size() const {
  std::size_t m = 0;
  for (std::size_t r = 0; r < n(); ++r) m = std::max(m, matrix_.row_size(r));
  return m;
}

namespace {

bool better(const std::pair<Index, double>& a, const std::pair<Index, double>& b) {
  return a.second > b.second || (a.second == b.second && a.first < b.first);
}

}  // namespace

void select_top_k(std::vector<std::pair<Index, double>>& row, std::size_t k) {
  if (row.size() > k) {
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end(), better);
    row.resize(k);
  }
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

SimilarityIndex::SimilarityIndex(CsrMatrix vectors, SimilarityConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.feature_weighting != FeatureWeighting::none) {
    const auto stats = detail::WeightingStats::fit(vectors, cfg_.feature_weighting);
    idf_ = stats.idf;
    average_length_ = stats.average_length;
    vectors = apply_feature_weighting(vectors, cfg_.feature_weighting);
  }
  if (is_set_based(cfg_.measure)) {
    CsrBuilder b(vectors.rows(), vectors.cols());
    for (std::size_t r = 0; r < vectors.rows(); ++r) {
      const auto row = vectors.row(r);
      for (std::size_t p = 0; p < row.size(); ++p) {
        if (row.values[p] != 0.0) b.push(row.indices[p], 1.0);
      }
      b.finish_row();
    }
    vectors = std::move(b).build();
  }
  vectors_ = std::move(vectors);
  transposed_ = vectors_.transpose();
  norms_.assign(vectors_.rows(), 0.0);
  for (std::size_t r = 0; r < vectors_.rows(); ++r) {
    double s = 0.0;
    for (double v : vectors_.row(r).values) s += v * v;
    norms_[r] = s;
  }
}

std::vector<std::pair<Index, double>> SimilarityIndex::weight_query(SparseRowView query) const {
  std::vector<std::pair<Index, double>> q;
  if (cfg_.feature_weighting != FeatureWeighting::none) {
    detail::WeightingStats stats{cfg_.feature_weighting, idf_, average_length_};
    q = stats.apply(query);
  } else {
    q.reserve(query.size());
    for (std::size_t p = 0; p < query.size(); ++p) {
      if (query.values[p] != 0.0) q.emplace_back(query.indices[p], query.values[p]);
    }
  }
  if (is_set_based(cfg_.measure)) {
    for (auto& e : q) e.second = 1.0;
  }
  return q;
}

void SimilarityIndex::query_prepared(std::span<const std::pair<Index, double>> query, std::optional<Index> skip,
                                     Workspace& ws, std::vector<std::pair<Index, double>>& out) const {
  const std::size_t n = vectors_.rows();
  if (ws.accumulator.size() != n) {
    ws.accumulator.assign(n, 0.0);
    ws.seen.assign(n, 0);
    ws.touched.clear();
  }
  double query_norm = 0.0;
  for (const auto& [f, v] : query) {
    query_norm += v * v;
    if (f >= transposed_.rows()) continue;
    const auto col = transposed_.row(f);
    for (std::size_t p = 0; p < col.size(); ++p) {
      const Index j = col.indices[p];
      if (!ws.seen[j]) {
        ws.seen[j] = 1;
        ws.touched.push_back(j);
      }
      ws.accumulator[j] += v * col.values[p];
    }
  }
  // For set measures the squared norm equals the support size.
  const double qn = query_norm;
  out.clear();
  for (Index j : ws.touched) {
    const double overlap = ws.accumulator[j];
    ws.accumulator[j] = 0.0;
    ws.seen[j] = 0;
    if (skip && j == *skip) continue;
    if (overlap == 0.0) continue;
    double value = cfg_.measure == Measure::dice ? 2.0 * overlap : overlap;
    if (cfg_.normalize) {
      const double nj = norms_[j];
      double denom = 0.0;
      switch (cfg_.measure) {
        case Measure::cosine:
          denom = std::sqrt(qn) * std::sqrt(nj);
          break;
        case Measure::asymmetric_cosine:
          denom = std::pow(qn, cfg_.asymmetric_alpha) * std::pow(nj, 1.0 - cfg_.asymmetric_alpha);
          break;
        case Measure::jaccard:
          denom = qn + nj - overlap;
          break;
        case Measure::dice:
          denom = qn + nj;
          break;
        case Measure::tversky:
          denom = overlap + cfg_.tversky_alpha * (qn - overlap) + cfg_.tversky_beta * (nj - overlap);
          break;
      }
      denom += cfg_.shrink;
      if (!(denom > 0.0)) continue;
      value /= denom;
    }
    if (value != 0.0 && std::isfinite(value)) out.emplace_back(j, value);
  }
  ws.touched.clear();
  select_top_k(out, cfg_.top_k);
}

std::vector<std::pair<Index, double>> SimilarityIndex::query(SparseRowView query, std::optional<Index> skip) const {
  Workspace ws;
  std::vector<std::pair<Index, double>> out;
  const auto q = weight_query(query);
  query_prepared(q, skip, ws, out);
  return out;
}

SimilarityMatrix compute_row_similarity(const CsrMatrix& vectors, const SimilarityConfig& cfg) {
  cfg.validate();
  const std::size_t n = vectors.rows();
  // The index already holds the weighted/binarized rows, so rows are taken
  // from it and queried without re-weighting.
  const SimilarityIndex index(vectors, cfg);
  std::vector<std::vector<std::pair<Index, double>>> rows(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    SimilarityIndex::Workspace ws;
    std::vector<std::pair<Index, double>> q;
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = index.vectors_.row(i);
      q.clear();
      for (std::size_t p = 0; p < row.size(); ++p) q.emplace_back(row.indices[p], row.values[p]);
      index.query_prepared(q, static_cast<Index>(i), ws, rows[i]);
    }
  });
  CsrBuilder b(n, n);
  for (const auto& r : rows) {
    for (const auto& [j, v] : r) b.push(j, v);
    b.finish_row();
  }
  return SimilarityMatrix(std::move(b).build());
}

SimilarityMatrix compute_similarity(const InteractionMatrix& m, Axis axis, const SimilarityConfig& cfg) {
  if (m.empty()) throw ConfigError("compute_similarity: empty interaction matrix");
  return compute_row_similarity(axis == Axis::items ? m.by_item() : m.by_user(), cfg);
}

SimilarityMatrix top_k_prune(const SimilarityMatrix& s, std::size_t k) {
  if (k == 0) throw ConfigError("top_k_prune: k must be >= 1");
  CsrBuilder b(s.n(), s.n());
  std::vector<std::pair<Index, double>> row;
  for (std::size_t i = 0; i < s.n(); ++i) {
    const auto r = s.row(i);
    row.clear();
    for (std::size_t p = 0; p < r.size(); ++p) row.emplace_back(r.indices[p], r.values[p]);
    select_top_k(row, k);
    for (const auto& [j, v] : row) b.push(j, v);
    b.finish_row();
  }
  return SimilarityMatrix(std::move(b).build());
}

InteractionMatrix concat_hybrid(const InteractionMatrix& m, const ContentMatrix& c, double w, Axis axis) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("concat_hybrid: w must be >= 0");
  const std::size_t entities = axis == Axis::items ? m.n_items() : m.n_users();
  if (c.n_entities() != entities) {
    throw ConfigError(fmt::format("concat_hybrid: content has {} rows, interaction {} axis has {}", c.n_entities(),
                                  to_string(axis), entities));
  }
  std::vector<Interaction> out;
  out.reserve(m.nnz() + (w > 0.0 ? c.features.nnz() : 0));
  for (auto e : m.interactions()) {
    e.timestamp.reset();
    out.push_back(e);
  }
  if (w > 0.0) {
    for (const auto& t : c.features.triplets()) {
      const double v = w * t.value;
      if (v == 0.0) continue;
      if (v < 0.0) throw ConfigError("concat_hybrid: content weights must be nonnegative");
      if (axis == Axis::items) {
        out.push_back({static_cast<Index>(m.n_users() + t.col), t.row, v, std::nullopt});
      } else {
        out.push_back({t.row, static_cast<Index>(m.n_items() + t.col), v, std::nullopt});
      }
    }
  }
  if (axis == Axis::items) {
    return InteractionMatrix::from_interactions(m.n_users() + c.n_features(), m.n_items(), std::move(out));
  }
  return InteractionMatrix::from_interactions(m.n_users(), m.n_items() + c.n_features(), std::move(out));
}

void write_similarity_tsv(const std::filesystem::path& path, const SimilarityMatrix& s) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  for (std::size_t i = 0; i < s.n(); ++i) {
    const auto r = s.row(i);
    for (std::size_t p = 0; p < r.size(); ++p) out << fmt::format("{}\t{}\t{}\n", i, r.indices[p], r.values[p]);
  }
}

}  // namespace recbase
