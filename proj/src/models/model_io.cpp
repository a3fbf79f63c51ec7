#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "detail.hpp"

namespace recbase {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'R', 'B', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

enum class PayloadType : std::uint8_t { csr = 1, dense = 2, reals = 3, integers = 4 };
enum class ArtifactTag : std::uint8_t { popularity = 1, item_weights = 2, user_similarity = 3, factors = 4, dense = 5 };

class Writer {
 public:
  explicit Writer(const fs::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  }

  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void text(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }

  void header(std::string_view name, PayloadType type) {
    text(name);
    u8(static_cast<std::uint8_t>(type));
  }
  void csr(std::string_view name, const CsrMatrix& m) {
    header(name, PayloadType::csr);
    u64(m.rows());
    u64(m.cols());
    u64(m.nnz());
    for (auto p : m.indptr()) u64(p);
    for (auto i : m.indices()) u32(i);
    for (auto v : m.values()) f64(v);
  }
  template <typename Matrix>
  void dense(std::string_view name, const Matrix& m) {
    header(name, PayloadType::dense);
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  void reals(std::string_view name, std::span<const double> v) {
    header(name, PayloadType::reals);
    u64(v.size());
    for (double x : v) f64(x);
  }
  void integers(std::string_view name, std::span<const std::int64_t> v) {
    header(name, PayloadType::integers);
    u64(v.size());
    for (auto x : v) u64(static_cast<std::uint64_t>(x));
  }

  void finish() {
    out_.flush();
    if (!out_) throw Error(fmt::format("{}: write failed", path_.string()));
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error(fmt::format("{}: cannot open", path.string()));
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_) fail("unexpected end of file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t size(std::uint64_t limit = std::uint64_t{1} << 40) {
    const auto v = u64();
    if (v > limit) fail("implausible size field");
    return static_cast<std::size_t>(v);
  }
  std::string text() {
    std::string s(size(std::uint64_t{1} << 32), '\0');
    bytes(s.data(), s.size());
    return s;
  }

  void expect(std::string_view name, PayloadType type) {
    const auto got = text();
    if (got != name) fail(fmt::format("expected payload '{}', found '{}'", name, got));
    if (u8() != static_cast<std::uint8_t>(type)) fail(fmt::format("payload '{}' has the wrong type", name));
  }
  CsrMatrix csr(std::string_view name) {
    expect(name, PayloadType::csr);
    const auto rows = size();
    const auto cols = size();
    const auto nnz = size();
    std::vector<std::size_t> indptr(rows + 1);
    for (auto& p : indptr) p = size();
    std::vector<Index> indices(nnz);
    for (auto& i : indices) i = u32();
    std::vector<double> values(nnz);
    for (auto& v : values) v = f64();
    try {
      return CsrMatrix(rows, cols, std::move(indptr), std::move(indices), std::move(values));
    } catch (const Error& e) {
      fail(fmt::format("payload '{}': {}", name, e.what()));
    }
  }
  template <typename Matrix>
  Matrix dense(std::string_view name) {
    expect(name, PayloadType::dense);
    const auto rows = static_cast<Eigen::Index>(size());
    const auto cols = static_cast<Eigen::Index>(size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    }
    return m;
  }
  std::vector<double> reals(std::string_view name) {
    expect(name, PayloadType::reals);
    std::vector<double> v(size());
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<std::int64_t> integers(std::string_view name) {
    expect(name, PayloadType::integers);
    std::vector<std::int64_t> v(size());
    for (auto& x : v) x = static_cast<std::int64_t>(u64());
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_.string(), 0, what); }

 private:
  std::ifstream in_;
  fs::path path_;
};

void write_train(Writer& w, const InteractionMatrix& m) {
  w.csr("train", m.by_user());
  std::vector<std::int64_t> ts;
  if (m.has_timestamps() && !m.empty()) {
    ts.reserve(m.nnz());
    for (Index u = 0; u < m.n_users(); ++u) {
      const auto t = m.user_timestamps(u);
      ts.insert(ts.end(), t.begin(), t.end());
    }
  }
  w.integers("train_timestamps", ts);
}

InteractionMatrix read_train(Reader& r) {
  const CsrMatrix x = r.csr("train");
  const auto ts = r.integers("train_timestamps");
  if (!ts.empty() && ts.size() != x.nnz()) r.fail("timestamp count does not match the training matrix");
  std::vector<Interaction> entries;
  entries.reserve(x.nnz());
  for (std::size_t u = 0; u < x.rows(); ++u) {
    const auto row = x.row(u);
    for (std::size_t p = 0; p < row.size(); ++p) {
      Interaction e{static_cast<Index>(u), row.indices[p], row.values[p], std::nullopt};
      if (!ts.empty()) e.timestamp = ts[x.indptr()[u] + p];
      entries.push_back(e);
    }
  }
  return InteractionMatrix::from_interactions(x.rows(), x.cols(), std::move(entries));
}

FoldInConfig fold_in_from(const nlohmann::json& hp) {
  FoldInConfig f;
  f.mode = parse_cold_user_mode(hp.value("fold_in_mode", "item_similarity"));
  if (hp.contains("fold_in_topK")) f.top_k = hp.at("fold_in_topK").get<std::size_t>();
  return f;
}

}  // namespace

void save_model(const fs::path& path, const FittedModel& model) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.text(model.kind());
  w.text(model.hyperparameters().dump());
  w.u8(model.fit_epochs().has_value() ? 1 : 0);
  w.u64(model.fit_epochs().value_or(0));
  write_train(w, model.train());
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, PopularityArtifact>) {
          w.u8(static_cast<std::uint8_t>(ArtifactTag::popularity));
          w.reals("popularity", a.popularity);
        } else if constexpr (std::is_same_v<T, ItemWeightsArtifact>) {
          w.u8(static_cast<std::uint8_t>(ArtifactTag::item_weights));
          w.csr("weights", a.weights);
        } else if constexpr (std::is_same_v<T, UserSimilarityArtifact>) {
          w.u8(static_cast<std::uint8_t>(ArtifactTag::user_similarity));
          w.csr("similarity", a.similarity.matrix());
          w.u8(a.fold_in ? 1 : 0);
        } else if constexpr (std::is_same_v<T, FactorArtifact>) {
          w.u8(static_cast<std::uint8_t>(ArtifactTag::factors));
          w.dense("user_factors", a.user_factors);
          w.dense("item_factors", a.item_factors);
          w.u8(a.item_similarity ? 1 : 0);
          if (a.item_similarity) w.csr("item_similarity", *a.item_similarity);
        } else {
          w.u8(static_cast<std::uint8_t>(ArtifactTag::dense));
          w.dense("weights", a.weights);
        }
      },
      model.artifact());
  w.finish();
}

FittedModel load_model(const fs::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) r.fail("not a model file");
  if (const auto v = r.u32(); v != kVersion) r.fail(fmt::format("unsupported format version {}", v));
  std::string kind = r.text();
  nlohmann::json hp;
  try {
    hp = nlohmann::json::parse(r.text());
  } catch (const nlohmann::json::exception& e) {
    r.fail(fmt::format("hyperparameters: {}", e.what()));
  }
  const bool has_epochs = r.u8() != 0;
  const auto epochs = r.u64();
  auto train = std::make_shared<const InteractionMatrix>(read_train(r));

  ModelArtifact artifact;
  switch (static_cast<ArtifactTag>(r.u8())) {
    case ArtifactTag::popularity:
      artifact = PopularityArtifact{r.reals("popularity")};
      break;
    case ArtifactTag::item_weights:
      artifact = ItemWeightsArtifact{r.csr("weights")};
      break;
    case ArtifactTag::user_similarity: {
      SimilarityMatrix s(r.csr("similarity"));
      std::shared_ptr<const SimilarityIndex> index;
      if (r.u8() != 0) index = std::make_shared<const SimilarityIndex>(train->by_user(), similarity_config_from_json(hp));
      artifact = UserSimilarityArtifact{std::move(s), std::move(index)};
      break;
    }
    case ArtifactTag::factors: {
      FactorArtifact a;
      a.user_factors = r.dense<Eigen::MatrixXd>("user_factors");
      a.item_factors = r.dense<Eigen::MatrixXd>("item_factors");
      a.fold_in = fold_in_from(hp);
      if (r.u8() != 0) a.item_similarity = r.csr("item_similarity");
      artifact = std::move(a);
      break;
    }
    case ArtifactTag::dense:
      artifact = DenseWeightsArtifact{r.dense<RowMatrix>("weights")};
      break;
    default:
      r.fail("unknown artifact tag");
  }
  return FittedModel(std::move(kind), std::move(hp), std::move(train), std::move(artifact),
                     has_epochs ? std::optional<std::size_t>(epochs) : std::nullopt);
}

}  // namespace recbase
