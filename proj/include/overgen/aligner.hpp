#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overgen/alignment.hpp"
#include "overgen/corpus.hpp"
#include "overgen/error.hpp"
#include "overgen/tokenizer.hpp"

namespace overgen {

/// Interned vocabulary; ids follow first appearance.
class Vocab {
 public:
  using Id = std::uint32_t;

  Id intern(std::string_view word) {
    auto it = index_.find(std::string(word));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<Id>(words_.size());
    words_.emplace_back(word);
    index_.emplace(words_.back(), id);
    return id;
  }

  std::optional<Id> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(Id id) const { return words_.at(id); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Id> index_;
};

/// Lexical translation table t(tgt | src) of an IBM Model 1 aligner.
struct TranslationModel {
  using Row = std::unordered_map<Vocab::Id, double>;

  Vocab src_vocab;
  Vocab tgt_vocab;
  std::vector<Row> rows;  // one per source word
  Row null_row;           // t(tgt | NULL), used only when uses_null
  bool uses_null = true;
  std::size_t iterations_trained = 0;
  std::size_t skipped_pairs = 0;
  /// Training log-likelihood before the first update and after each one.
  std::vector<double> log_likelihood;

  double prob(std::string_view src, std::string_view tgt) const {
    const auto s = src_vocab.find(src);
    const auto t = tgt_vocab.find(tgt);
    if (!s || !t) return 0.0;
    return lookup(rows[*s], *t);
  }

  double prob_null(std::string_view tgt) const {
    const auto t = tgt_vocab.find(tgt);
    if (!uses_null || !t) return 0.0;
    return lookup(null_row, *t);
  }

  /// Most probable translation of `src`; ties go to the lower target id.
  std::optional<std::string> best_translation(std::string_view src) const {
    const auto s = src_vocab.find(src);
    if (!s || rows[*s].empty()) return std::nullopt;
    std::optional<std::pair<Vocab::Id, double>> best;
    for (const auto& [t, p] : rows[*s]) {
      if (!best || p > best->second || (p == best->second && t < best->first)) {
        best = {t, p};
      }
    }
    return tgt_vocab.word(best->first);
  }

  static double lookup(const Row& row, Vocab::Id t) {
    auto it = row.find(t);
    return it == row.end() ? 0.0 : it->second;
  }

  friend bool operator==(const TranslationModel&, const TranslationModel&) = default;
};

struct TrainOptions {
  std::size_t iterations = 10;
  bool uses_null = true;
};

using TokenPair = std::pair<TokenSeq, TokenSeq>;

namespace detail {

struct EncodedPair {
  std::vector<Vocab::Id> src;
  std::vector<Vocab::Id> tgt;
};

inline double ibm1_log_likelihood(const TranslationModel& m,
                                  const std::vector<EncodedPair>& data) {
  double ll = 0.0;
  for (const auto& p : data) {
    const double positions = static_cast<double>(p.src.size() + (m.uses_null ? 1 : 0));
    for (auto f : p.tgt) {
      double sum = m.uses_null ? TranslationModel::lookup(m.null_row, f) : 0.0;
      for (auto e : p.src) sum += TranslationModel::lookup(m.rows[e], f);
      ll += std::log(sum / positions);
    }
  }
  return ll;
}

}  // namespace detail

/// Trains IBM Model 1 by EM. The table starts uniform over co-occurring
/// word pairs. Pairs with an empty side are skipped and counted.
inline TranslationModel train_ibm1(std::span<const TokenPair> corpus,
                                   const TrainOptions& options = {}) {
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  if (options.iterations < 1) throw ValidationError("iterations must be >= 1");

  TranslationModel m;
  m.uses_null = options.uses_null;

  std::vector<detail::EncodedPair> data;
  data.reserve(corpus.size());
  for (const auto& [src, tgt] : corpus) {
    if (src.empty() || tgt.empty()) {
      ++m.skipped_pairs;
      continue;
    }
    detail::EncodedPair p;
    for (const auto& w : src.tokens) p.src.push_back(m.src_vocab.intern(w));
    for (const auto& w : tgt.tokens) p.tgt.push_back(m.tgt_vocab.intern(w));
    data.push_back(std::move(p));
  }
  if (data.empty()) throw ValidationError("every training pair has an empty side");

  m.rows.resize(m.src_vocab.size());
  for (const auto& p : data) {
    for (auto e : p.src) {
      for (auto f : p.tgt) m.rows[e][f] = 0.0;
    }
    if (m.uses_null) {
      for (auto f : p.tgt) m.null_row[f] = 0.0;
    }
  }
  auto normalize_uniform = [](TranslationModel::Row& row) {
    const double u = 1.0 / static_cast<double>(row.size());
    for (auto& [f, p] : row) p = u;
  };
  for (auto& row : m.rows) normalize_uniform(row);
  if (m.uses_null) normalize_uniform(m.null_row);

  m.log_likelihood.push_back(detail::ibm1_log_likelihood(m, data));

  // Expected counts reuse the table's sparsity pattern.
  std::vector<TranslationModel::Row> counts = m.rows;
  TranslationModel::Row null_counts = m.null_row;
  std::vector<double> totals(m.rows.size());
  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    for (auto& row : counts) {
      for (auto& [f, c] : row) c = 0.0;
    }
    for (auto& [f, c] : null_counts) c = 0.0;
    std::fill(totals.begin(), totals.end(), 0.0);
    double null_total = 0.0;

    for (const auto& p : data) {
      for (auto f : p.tgt) {
        const double pn = m.uses_null ? m.null_row.at(f) : 0.0;
        double denom = pn;
        for (auto e : p.src) denom += m.rows[e].at(f);
        for (auto e : p.src) {
          const double c = m.rows[e].at(f) / denom;
          counts[e][f] += c;
          totals[e] += c;
        }
        if (m.uses_null) {
          const double c = pn / denom;
          null_counts[f] += c;
          null_total += c;
        }
      }
    }

    for (std::size_t e = 0; e < m.rows.size(); ++e) {
      for (auto& [f, p] : m.rows[e]) p = counts[e].at(f) / totals[e];
    }
    if (m.uses_null && null_total > 0.0) {
      for (auto& [f, p] : m.null_row) p = null_counts.at(f) / null_total;
    }
    ++m.iterations_trained;
    m.log_likelihood.push_back(detail::ibm1_log_likelihood(m, data));
  }
  return m;
}

/// Tokenizes every segment and trains on the resulting pairs.
inline TranslationModel train_ibm1(const Corpus& corpus, const TrainOptions& options = {}) {
  std::vector<TokenPair> pairs;
  pairs.reserve(corpus.size());
  for (const auto& seg : corpus.segments) {
    pairs.emplace_back(tokenize(seg.src), tokenize(seg.tgt));
  }
  return train_ibm1(pairs, options);
}

inline constexpr double kDefaultPMin = 0.05;

struct AlignDiagnostics {
  std::size_t oov_target_tokens = 0;
  std::size_t null_wins = 0;
  std::size_t below_p_min = 0;
};

/// Links each target token to its most probable source token. A target
/// token stays unaligned when it is out of vocabulary, when its best
/// probability is below `p_min`, or when NULL explains it strictly better.
inline Alignment align_pair(const TranslationModel& model, const TokenSeq& src,
                            const TokenSeq& tgt, double p_min = kDefaultPMin,
                            AlignDiagnostics* diag = nullptr) {
  if (!(p_min >= 0.0 && p_min <= 1.0)) throw RangeError("p_min must lie in [0, 1]");
  AlignDiagnostics local;
  auto& d = diag ? *diag : local;

  std::vector<std::optional<Vocab::Id>> src_ids;
  src_ids.reserve(src.size());
  for (const auto& w : src.tokens) src_ids.push_back(model.src_vocab.find(w));

  Alignment a;
  for (std::size_t j = 0; j < tgt.size(); ++j) {
    const auto f = model.tgt_vocab.find(tgt[j]);
    if (!f) {
      ++d.oov_target_tokens;
      continue;
    }
    double best = 0.0;
    std::optional<std::size_t> best_i;
    for (std::size_t i = 0; i < src_ids.size(); ++i) {
      if (!src_ids[i]) continue;
      const double p = TranslationModel::lookup(model.rows[*src_ids[i]], *f);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (model.uses_null && TranslationModel::lookup(model.null_row, *f) > best) {
      ++d.null_wins;
      continue;
    }
    if (!best_i || best < p_min) {
      ++d.below_p_min;
      continue;
    }
    a.add(*best_i, j);
  }
  return a;
}

inline constexpr std::string_view kModelFormat = "overgen-ibm1-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

template <typename RowT>
std::vector<std::pair<Vocab::Id, double>> sorted_row(const RowT& row) {
  std::vector<std::pair<Vocab::Id, double>> v(row.begin(), row.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace detail

/// Writes `model` as a versioned, line-oriented text file. Words are
/// stored as JSON string literals; probabilities with 17 significant digits.
inline void save_model(const TranslationModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing", path);
  std::size_t entries = model.null_row.size();
  for (const auto& row : model.rows) entries += row.size();

  out << kModelFormat << ' ' << kModelVersion << '\n';
  out << "uses_null " << (model.uses_null ? 1 : 0) << '\n';
  out << "iterations " << model.iterations_trained << '\n';
  out << "skipped_pairs " << model.skipped_pairs << '\n';
  out << "log_likelihood " << model.log_likelihood.size();
  for (double ll : model.log_likelihood) out << ' ' << detail::format_prob(ll);
  out << '\n';
  out << "src_vocab " << model.src_vocab.size() << '\n';
  for (const auto& w : model.src_vocab.words()) out << nlohmann::json(w).dump() << '\n';
  out << "tgt_vocab " << model.tgt_vocab.size() << '\n';
  for (const auto& w : model.tgt_vocab.words()) out << nlohmann::json(w).dump() << '\n';
  out << "entries " << entries << '\n';
  for (std::size_t e = 0; e < model.rows.size(); ++e) {
    for (const auto& [f, p] : detail::sorted_row(model.rows[e])) {
      out << e << ' ' << f << ' ' << detail::format_prob(p) << '\n';
    }
  }
  for (const auto& [f, p] : detail::sorted_row(model.null_row)) {
    out << "NULL " << f << ' ' << detail::format_prob(p) << '\n';
  }
  out << "end\n";
  out.close();
  if (!out) throw IoError("write failure", path);
}

inline TranslationModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path);

  std::size_t line_no = 0;
  std::string line;
  auto corrupt = [&](const std::string& why) {
    return ParseError("corrupt model file " + path + ": " + why, line_no);
  };
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw corrupt("unexpected end of file");
    ++line_no;
    return line;
  };
  auto expect_field = [&](std::string_view key) {
    std::istringstream ss(next_line());
    std::string k;
    std::size_t v = 0;
    if (!(ss >> k >> v) || k != key) throw corrupt("expected '" + std::string(key) + "'");
    return v;
  };

  {
    std::istringstream ss(next_line());
    std::string format;
    int version = 0;
    if (!(ss >> format) || format != kModelFormat) throw corrupt("not a model file");
    if (!(ss >> version)) throw corrupt("missing version");
    if (version != kModelVersion) {
      throw ValidationError("model file " + path + " has version " +
                            std::to_string(version) + ", expected " +
                            std::to_string(kModelVersion));
    }
  }

  TranslationModel m;
  const auto uses_null = expect_field("uses_null");
  if (uses_null > 1) throw corrupt("uses_null must be 0 or 1");
  m.uses_null = uses_null == 1;
  m.iterations_trained = expect_field("iterations");
  m.skipped_pairs = expect_field("skipped_pairs");
  {
    std::istringstream ss(next_line());
    std::string k;
    std::size_t n = 0;
    if (!(ss >> k >> n) || k != "log_likelihood") throw corrupt("expected 'log_likelihood'");
    for (std::size_t i = 0; i < n; ++i) {
      std::string tok;
      if (!(ss >> tok)) throw corrupt("short log_likelihood list");
      try {
        m.log_likelihood.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw corrupt("bad log_likelihood value");
      }
    }
  }
  auto read_vocab = [&](std::string_view key, Vocab& vocab) {
    const auto n = expect_field(key);
    for (std::size_t i = 0; i < n; ++i) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(next_line());
      } catch (const nlohmann::json::parse_error&) {
        throw corrupt("bad vocabulary entry");
      }
      if (!j.is_string()) throw corrupt("bad vocabulary entry");
      if (vocab.intern(j.get<std::string>()) != i) throw corrupt("duplicate vocabulary entry");
    }
  };
  read_vocab("src_vocab", m.src_vocab);
  read_vocab("tgt_vocab", m.tgt_vocab);
  m.rows.resize(m.src_vocab.size());

  const auto entries = expect_field("entries");
  for (std::size_t k = 0; k < entries; ++k) {
    std::istringstream ss(next_line());
    std::string src, prob;
    std::size_t f = 0;
    if (!(ss >> src >> f >> prob)) throw corrupt("bad table entry");
    if (f >= m.tgt_vocab.size()) throw corrupt("target id out of range");
    double p = 0;
    std::size_t used = 0;
    try {
      p = std::stod(prob, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != prob.size() || !(p >= 0.0 && p <= 1.0)) throw corrupt("bad probability");
    const auto fid = static_cast<Vocab::Id>(f);
    if (src == "NULL") {
      m.null_row[fid] = p;
    } else {
      std::size_t e = 0;
      auto [ptr, ec] = std::from_chars(src.data(), src.data() + src.size(), e);
      if (ec != std::errc() || ptr != src.data() + src.size() || e >= m.rows.size()) {
        throw corrupt("source id out of range");
      }
      m.rows[e][fid] = p;
    }
  }
  if (next_line() != "end") throw corrupt("missing end marker");
  return m;
}

}  // namespace overgen
