#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overgen/alignment.hpp"
#include "overgen/corpus.hpp"
#include "overgen/detector.hpp"
#include "overgen/error.hpp"
#include "overgen/label.hpp"
#include "overgen/tokenizer.hpp"

namespace overgen {

enum class InjectionKind { Prefix, Confabulation, Oscillation };

constexpr std::string_view to_string(InjectionKind k) {
  switch (k) {
    case InjectionKind::Prefix: return "prefix";
    case InjectionKind::Confabulation: return "confabulation";
    case InjectionKind::Oscillation: return "oscillation";
  }
  return "prefix";
}

inline std::optional<InjectionKind> injection_kind_from_string(std::string_view s) {
  for (auto k : {InjectionKind::Prefix, InjectionKind::Confabulation, InjectionKind::Oscillation}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct InjectionSpec {
  InjectionKind kind = InjectionKind::Prefix;
  std::vector<std::string> templates;       // Prefix; "{lang}" expands to the target language
  std::vector<std::string> insert_lexicon;  // Confabulation phrases, or Oscillation tokens
  std::size_t repeat_min = 10;
  std::size_t repeat_max = 12;
  double rate = 1.0;
  std::uint64_t seed = 0;
  bool oscillation_suffix = false;  // append the repetition instead of replacing the target

  void validate() const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("injection rate must lie in [0, 1]");
    switch (kind) {
      case InjectionKind::Prefix:
        if (templates.empty()) throw ValidationError("prefix injection needs templates");
        break;
      case InjectionKind::Confabulation:
        if (insert_lexicon.empty()) throw ValidationError("confabulation injection needs a lexicon");
        break;
      case InjectionKind::Oscillation:
        if (repeat_min < 2 || repeat_min > repeat_max) {
          throw ValidationError("oscillation repeat range must satisfy 2 <= min <= max");
        }
        break;
    }
  }
};

struct SyntheticSegment {
  SegmentPair pair;
  std::optional<DetachedSpan> injected_span;
  /// Links every clean target token; injected tokens stay unlinked.
  Alignment oracle_alignment;
};

namespace detail {

/// Links each target token not already covered to the source token at the
/// same relative position, so a clean pair is treated as fully faithful.
inline Alignment identity_extended(const SegmentPair& pair) {
  const auto src_len = tokenize(pair.src).size();
  const auto tgt_len = tokenize(pair.tgt).size();
  Alignment a = pair.alignment.value_or(Alignment{});
  a.check_bounds(src_len, tgt_len);
  if (tgt_len == 0) return a;
  if (src_len == 0) {
    throw ValidationError("segment '" + pair.id + "': cannot align a target to an empty source");
  }
  const auto covered = a.target_coverage(tgt_len);
  for (std::size_t j = 0; j < tgt_len; ++j) {
    if (!covered[j]) a.add(std::min(j * src_len / tgt_len, src_len - 1), j);
  }
  return a;
}

/// Target indices at or after `from` move right by `by`.
inline Alignment shift_targets(const Alignment& a, std::size_t from, std::size_t by) {
  Alignment out;
  for (const auto& l : a.links) out.add(l.src, l.tgt >= from ? l.tgt + by : l.tgt);
  return out;
}

inline void expect_tokens(const TokenSeq& got, std::span<const std::string> want,
                          const std::string& what) {
  if (!std::equal(got.tokens.begin(), got.tokens.end(), want.begin(), want.end())) {
    throw ValidationError(what + " does not tokenize to the expected token sequence");
  }
}

}  // namespace detail

inline std::string language_name(std::string_view code) {
  static const std::map<std::string, std::string, std::less<>> names = {
      {"cs", "Czech"},   {"de", "German"},     {"en", "English"},  {"es", "Spanish"},
      {"fr", "French"},  {"hi", "Hindi"},      {"is", "Icelandic"}, {"it", "Italian"},
      {"ja", "Japanese"}, {"ko", "Korean"},    {"nl", "Dutch"},    {"pl", "Polish"},
      {"pt", "Portuguese"}, {"ru", "Russian"}, {"uk", "Ukrainian"}, {"zh", "Chinese"}};
  auto it = names.find(code);
  return it == names.end() ? std::string(code) : it->second;
}

/// Replaces every "{lang}" with the name of the pair's target language.
inline std::string expand_template(std::string_view tmpl, std::string_view lang_pair) {
  const auto dash = lang_pair.find('-');
  const auto lang = language_name(dash == std::string_view::npos ? lang_pair : lang_pair.substr(dash + 1));
  std::string out(tmpl);
  for (auto pos = out.find("{lang}"); pos != std::string::npos; pos = out.find("{lang}", pos)) {
    out.replace(pos, 6, lang);
    pos += lang.size();
  }
  return out;
}

inline SyntheticSegment inject_prefix(const SegmentPair& pair, std::string_view tmpl,
                                      double theta_detached = DetectorParams{}.theta_detached) {
  const auto prefix = tokenize(tmpl);
  if (prefix.empty()) throw ValidationError("empty prefix template");
  const auto base = detail::identity_extended(pair);
  const auto old_tgt = tokenize(pair.tgt);

  SyntheticSegment s;
  s.pair = pair;
  s.pair.tgt = old_tgt.empty() ? std::string(tmpl) : std::string(tmpl) + " " + pair.tgt;
  std::vector<std::string> expected = prefix.tokens;
  expected.insert(expected.end(), old_tgt.tokens.begin(), old_tgt.tokens.end());
  detail::expect_tokens(tokenize(s.pair.tgt), expected, "prefixed target");

  const auto k = prefix.size();
  const double share = static_cast<double>(k) / static_cast<double>(expected.size());
  s.pair.gold_label = share >= theta_detached ? OvergenLabel::Detached : OvergenLabel::PartiallyDetached;
  s.injected_span = DetachedSpan{0, k - 1};
  s.oracle_alignment = detail::shift_targets(base, 0, k);
  if (pair.alignment) s.pair.alignment = detail::shift_targets(*pair.alignment, 0, k);
  return s;
}

namespace detail {

inline SyntheticSegment confabulate(const SegmentPair& pair, std::span<const std::string> insert,
                                    const std::string& phrase, std::size_t position,
                                    std::size_t k_partial) {
  if (insert.empty()) throw ValidationError("empty confabulation insert");
  const auto old_tgt = tokenize(pair.tgt);
  if (position > old_tgt.size()) {
    throw BoundsError("insert position " + std::to_string(position) + " beyond target of " +
                      std::to_string(old_tgt.size()) + " tokens");
  }
  const auto base = detail::identity_extended(pair);

  const auto cut = position < old_tgt.size() ? old_tgt.offsets[position].first : pair.tgt.size();
  std::string before = pair.tgt.substr(0, cut);
  std::string after = pair.tgt.substr(cut);
  std::string text = before;
  if (!text.empty() && text.back() != ' ') text += ' ';
  text += phrase;
  if (!after.empty() && after.front() != ' ') text += ' ';
  text += after;

  std::vector<std::string> expected(old_tgt.tokens.begin(),
                                    old_tgt.tokens.begin() + static_cast<std::ptrdiff_t>(position));
  expected.insert(expected.end(), insert.begin(), insert.end());
  expected.insert(expected.end(), old_tgt.tokens.begin() + static_cast<std::ptrdiff_t>(position),
                  old_tgt.tokens.end());

  SyntheticSegment s;
  s.pair = pair;
  s.pair.tgt = std::move(text);
  detail::expect_tokens(tokenize(s.pair.tgt), expected, "confabulated target");
  s.pair.gold_label = insert.size() < k_partial ? OvergenLabel::MinimallyDetached
                                                : OvergenLabel::PartiallyDetached;
  s.injected_span = DetachedSpan{position, position + insert.size() - 1};
  s.oracle_alignment = shift_targets(base, position, insert.size());
  if (pair.alignment) s.pair.alignment = shift_targets(*pair.alignment, position, insert.size());
  return s;
}

}  // namespace detail

/// Inserts single-token words, space separated, before target token `position`.
inline SyntheticSegment inject_confabulation(const SegmentPair& pair,
                                             std::span<const std::string> insert,
                                             std::size_t position,
                                             std::size_t k_partial = DetectorParams{}.k_partial) {
  std::string phrase;
  for (const auto& t : insert) {
    const auto seq = tokenize(t);
    if (seq.size() != 1 || seq[0] != t) {
      throw ValidationError("insert element '" + t + "' is not a single token");
    }
    if (!phrase.empty()) phrase += ' ';
    phrase += t;
  }
  return detail::confabulate(pair, insert, phrase, position, k_partial);
}

/// Inserts the phrase verbatim; its tokens form the injected span.
inline SyntheticSegment inject_confabulation(const SegmentPair& pair, std::string_view insert,
                                             std::size_t position,
                                             std::size_t k_partial = DetectorParams{}.k_partial) {
  const auto tokens = tokenize(insert).tokens;
  return detail::confabulate(pair, tokens, std::string(insert), position, k_partial);
}

/// `repeats` copies of "token," replace the target, or follow it when
/// `suffix` is set.
inline SyntheticSegment inject_oscillation(const SegmentPair& pair, std::string_view token,
                                           std::size_t repeats, bool suffix = false) {
  if (repeats < 2) throw ValidationError("oscillation needs at least 2 repeats");
  const auto tok = tokenize(token);
  if (tok.size() != 1 || tok[0] != token) {
    throw ValidationError("oscillation token '" + std::string(token) + "' is not a single token");
  }
  std::string run;
  for (std::size_t r = 0; r < repeats; ++r) {
    if (r) run += ' ';
    run += token;
    run += ',';
  }

  SyntheticSegment s;
  s.pair = pair;
  s.pair.gold_label = OvergenLabel::Oscillatory;
  const auto injected = 2 * repeats;
  if (suffix) {
    const auto old_len = tokenize(pair.tgt).size();
    s.oracle_alignment = detail::identity_extended(pair);
    s.pair.tgt = pair.tgt.empty() ? run : pair.tgt + " " + run;
    s.injected_span = DetachedSpan{old_len, old_len + injected - 1};
  } else {
    s.pair.tgt = run;
    s.pair.alignment.reset();
    s.injected_span = DetachedSpan{0, injected - 1};
  }
  return s;
}

struct ManifestEntry {
  std::string id;
  InjectionKind kind = InjectionKind::Prefix;
  std::string template_or_insert;
  std::optional<DetachedSpan> span;
  bool skipped = false;  // an earlier injection already perturbed this segment

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

inline nlohmann::ordered_json to_json(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["kind"] = std::string(to_string(e.kind));
  j["template_or_insert"] = e.template_or_insert;
  if (e.span) {
    j["span"] = {{"start", e.span->start}, {"end", e.span->end}};
  } else {
    j["span"] = nullptr;
  }
  if (e.skipped) j["skipped"] = true;
  return j;
}

inline ManifestEntry manifest_entry_from_json(const nlohmann::ordered_json& j) {
  try {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    const auto kind = injection_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw ParseError("unknown injection kind");
    e.kind = *kind;
    e.template_or_insert = j.at("template_or_insert").get<std::string>();
    if (const auto& s = j.at("span"); !s.is_null()) {
      e.span = DetachedSpan{s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()};
    }
    e.skipped = j.value("skipped", false);
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed manifest entry: ") + ex.what());
  }
}

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<Alignment> oracle_alignments;  // parallel to corpus.segments
  std::vector<ManifestEntry> manifest;       // injections, then skips, in injection order
};

namespace detail {

// Fixed mapping from engine output, independent of the standard library's
// distribution implementations.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t index_draw(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

}  // namespace detail

/// Applies each injection in turn with its own seeded generator. A segment is
/// perturbed at most once; later specs that select it record a skip.
/// Untouched segments get gold label None.
inline SyntheticCorpus build_synthetic_corpus(const Corpus& clean,
                                              std::span<const InjectionSpec> specs,
                                              const DetectorParams& params = {}) {
  for (const auto& seg : clean.segments) {
    if (seg.gold_label && *seg.gold_label != OvergenLabel::None) {
      throw ValidationError("segment '" + seg.id + "' is already labelled as an overgeneration");
    }
  }
  for (const auto& spec : specs) spec.validate();

  SyntheticCorpus out;
  out.corpus.name = clean.name;
  out.corpus.segments.reserve(clean.size());
  for (const auto& seg : clean.segments) {
    out.corpus.segments.push_back(seg);
    out.corpus.segments.back().gold_label = OvergenLabel::None;
    out.oracle_alignments.push_back(detail::identity_extended(seg));
  }

  std::vector<bool> taken(clean.size(), false);
  std::vector<ManifestEntry> skipped;
  for (const auto& spec : specs) {
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      if (!(detail::unit_draw(rng) < spec.rate)) continue;
      const auto& seg = clean.segments[i];
      ManifestEntry entry;
      entry.id = seg.id;
      entry.kind = spec.kind;

      std::optional<SyntheticSegment> made;
      switch (spec.kind) {
        case InjectionKind::Prefix: {
          entry.template_or_insert = expand_template(
              spec.templates[detail::index_draw(rng, spec.templates.size())], seg.lang_pair);
          if (!taken[i]) made = inject_prefix(seg, entry.template_or_insert, params.theta_detached);
          break;
        }
        case InjectionKind::Confabulation: {
          entry.template_or_insert =
              spec.insert_lexicon[detail::index_draw(rng, spec.insert_lexicon.size())];
          const auto position = detail::index_draw(rng, tokenize(seg.tgt).size() + 1);
          if (!taken[i]) {
            made = inject_confabulation(seg, std::string_view(entry.template_or_insert), position,
                                        params.k_partial);
          }
          break;
        }
        case InjectionKind::Oscillation: {
          const auto repeats =
              spec.repeat_min + detail::index_draw(rng, spec.repeat_max - spec.repeat_min + 1);
          std::vector<std::string> pool = spec.insert_lexicon;
          if (pool.empty()) {
            for (const auto& t : tokenize(seg.tgt).tokens) {
              const auto cp = detail::decode_utf8(t, 0);
              if (!detail::is_punct(cp.value)) pool.push_back(t);
            }
          }
          if (pool.empty()) break;
          entry.template_or_insert = pool[detail::index_draw(rng, pool.size())];
          if (!taken[i]) {
            made = inject_oscillation(seg, entry.template_or_insert, repeats, spec.oscillation_suffix);
          }
          break;
        }
      }
      if (taken[i]) {
        entry.skipped = true;
        skipped.push_back(std::move(entry));
        continue;
      }
      if (!made) continue;
      taken[i] = true;
      entry.span = made->injected_span;
      out.corpus.segments[i] = std::move(made->pair);
      out.oracle_alignments[i] = std::move(made->oracle_alignment);
      out.manifest.push_back(std::move(entry));
    }
  }
  out.manifest.insert(out.manifest.end(), skipped.begin(), skipped.end());
  return out;
}

/// One entry per non-empty line; lines starting with '#' are comments.
inline std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path);
  std::vector<std::string> lines;
  std::string text;
  while (std::getline(in, text)) {
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos || text[first] == '#') continue;
    const auto last = text.find_last_not_of(" \t");
    lines.push_back(text.substr(first, last - first + 1));
  }
  return lines;
}

}  // namespace overgen
