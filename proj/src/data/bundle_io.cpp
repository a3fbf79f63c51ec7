#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "recbase/data.hpp"

namespace recbase {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  return out;
}

std::vector<std::string_view> tab_fields(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      f.push_back(line.substr(start));
      return f;
    }
    f.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_field(std::string_view s, const fs::path& path, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(path.string(), line_no, fmt::format("bad field '{}'", s));
  }
  return v;
}

template <typename Fn>
void read_lines(const fs::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("{}: cannot open", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(line_no, std::string_view(line));
  }
}

InteractionMatrix read_interactions_tsv(const fs::path& path, std::size_t n_users, std::size_t n_items) {
  std::vector<Interaction> entries;
  read_lines(path, [&](std::size_t line_no, std::string_view line) {
    const auto f = tab_fields(line);
    if (f.size() < 3 || f.size() > 4) {
      throw ParseError(path.string(), line_no, "expected user, item, weight[, timestamp]");
    }
    Interaction e;
    e.user = parse_field<Index>(f[0], path, line_no);
    e.item = parse_field<Index>(f[1], path, line_no);
    e.weight = parse_field<double>(f[2], path, line_no);
    if (f.size() == 4) e.timestamp = parse_field<std::int64_t>(f[3], path, line_no);
    entries.push_back(e);
  });
  return InteractionMatrix::from_interactions(n_users, n_items, std::move(entries));
}

}  // namespace

void write_interactions_tsv(const fs::path& path, const InteractionMatrix& m) {
  auto out = open_out(path);
  for (const auto& e : m.interactions()) {
    if (e.timestamp) {
      out << fmt::format("{}\t{}\t{}\t{}\n", e.user, e.item, e.weight, *e.timestamp);
    } else {
      out << fmt::format("{}\t{}\t{}\n", e.user, e.item, e.weight);
    }
  }
}

void write_id_map(const fs::path& path, const IdMap& map) {
  auto out = open_out(path);
  for (Index i = 0; i < map.size(); ++i) out << fmt::format("{}\t{}\n", map.raw(i), i);
}

void write_bundle(const fs::path& dir, const SplitBundle& bundle, const IdMap* users, const IdMap* items) {
  fs::create_directories(dir);
  write_interactions_tsv(dir / "train.tsv", bundle.train);
  write_interactions_tsv(dir / "test.tsv", bundle.test);
  if (bundle.validation) write_interactions_tsv(dir / "validation.tsv", *bundle.validation);
  if (bundle.fold_in) write_interactions_tsv(dir / "fold_in.tsv", *bundle.fold_in);
  if (bundle.negatives) {
    auto out = open_out(dir / "negatives.tsv");
    for (const auto& [u, list] : *bundle.negatives) {
      for (Index i : list) out << fmt::format("{}\t{}\n", u, i);
    }
  }
  if (users) write_id_map(dir / "users.tsv", *users);
  if (items) write_id_map(dir / "items.tsv", *items);

  nlohmann::json p;
  p["splitter"] = bundle.provenance.splitter;
  p["params"] = bundle.provenance.params;
  p["seed"] = bundle.provenance.seed;
  p["dataset_digest"] = bundle.provenance.dataset_digest;
  p["warnings"] = bundle.provenance.warnings;
  p["n_users"] = bundle.train.n_users();
  p["n_items"] = bundle.train.n_items();
  p["has_validation"] = bundle.validation.has_value();
  p["has_fold_in"] = bundle.fold_in.has_value();
  p["has_negatives"] = bundle.negatives.has_value();
  p["validation_users"] = bundle.validation_users;
  p["test_users"] = bundle.test_users;
  auto out = open_out(dir / "provenance.json");
  out << p.dump(2) << '\n';
}

std::vector<std::pair<Index, Index>> read_negative_pairs(const fs::path& path) {
  std::vector<std::pair<Index, Index>> pairs;
  read_lines(path, [&](std::size_t line_no, std::string_view line) {
    const auto f = tab_fields(line);
    if (f.size() != 2) throw ParseError(path.string(), line_no, "expected user<TAB>item");
    pairs.emplace_back(parse_field<Index>(f[0], path, line_no), parse_field<Index>(f[1], path, line_no));
  });
  return pairs;
}

SplitBundle read_bundle(const fs::path& dir, bool validate) {
  const fs::path prov_path = dir / "provenance.json";
  std::ifstream in(prov_path);
  if (!in) throw Error(fmt::format("{}: missing provenance.json", dir.string()));
  nlohmann::json p;
  try {
    in >> p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(prov_path.string(), 0, e.what());
  }
  const std::size_t nu = p.at("n_users").get<std::size_t>();
  const std::size_t ni = p.at("n_items").get<std::size_t>();

  SplitBundle b;
  b.train = read_interactions_tsv(dir / "train.tsv", nu, ni);
  b.test = read_interactions_tsv(dir / "test.tsv", nu, ni);
  if (fs::exists(dir / "validation.tsv")) b.validation = read_interactions_tsv(dir / "validation.tsv", nu, ni);
  if (fs::exists(dir / "fold_in.tsv")) b.fold_in = read_interactions_tsv(dir / "fold_in.tsv", nu, ni);
  if (fs::exists(dir / "negatives.tsv")) {
    NegativeSets neg;
    for (const auto& [u, i] : read_negative_pairs(dir / "negatives.tsv")) {
      if (u >= nu || i >= ni) throw Error(fmt::format("{}: negative ({}, {}) out of range", dir.string(), u, i));
      neg[u].push_back(i);
    }
    b.negatives = std::move(neg);
  } else if (p.value("has_negatives", false)) {
    b.negatives = NegativeSets{};
  }
  b.provenance.splitter = p.value("splitter", "");
  b.provenance.params = p.value("params", nlohmann::json::object());
  b.provenance.seed = p.value("seed", std::uint64_t{0});
  b.provenance.dataset_digest = p.value("dataset_digest", "");
  b.provenance.warnings = p.value("warnings", std::vector<std::string>{});
  b.validation_users = p.value("validation_users", std::vector<Index>{});
  b.test_users = p.value("test_users", std::vector<Index>{});
  if (validate) b.validate();
  return b;
}

}  // namespace recbase
