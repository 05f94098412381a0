#include "hgre/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>

#include "hgre/rng.hpp"

namespace hgre {

namespace {

const std::vector<std::string> kSurnames = {"zhao", "qian", "sun",  "li",
                                            "zhou", "wu",   "zheng", "feng"};
const std::vector<std::string> kGivenNames = {"wei", "fang", "na",  "jun",
                                              "lei", "yan",  "tao", "ming"};
const std::vector<std::string> kLocations = {"beicheng", "nanwan",  "xijie",   "dongqu",
                                             "zhongyuan", "heping", "jiangbei", "chengnan"};
const std::vector<std::string> kAmounts = {"n5", "n10", "n20", "n50", "n100", "n200", "n500", "n900"};
const std::vector<std::string> kUnits = {"ke", "jin"};
const std::vector<std::string> kYears = {"y2019", "y2020", "y2021", "y2022"};

// Syllable pool for drug surface forms.
const std::vector<std::string> kDrugSyllables = {
    "bing", "du", "ke", "ta", "ming", "hai", "luo", "yin", "jia", "ji",
    "ben",  "an", "da", "ma", "ya",   "pian", "mo", "fen", "suan", "jing"};

struct DrugInventory {
  // concept -> list of surface forms (1 or 2 aliases), every surface a lexicon term
  std::vector<std::vector<std::vector<std::string>>> concepts;
  Lexicon lexicon;
};

// Deterministic term list: widths cycle 1/2/3, every third 3-token term also
// contributes its 2-token suffix so overlapping matches occur in real data.
DrugInventory build_drug_inventory(int lexicon_size) {
  DrugInventory inv;
  std::vector<std::vector<std::string>> terms;
  std::set<std::vector<std::string>> seen;
  size_t i = 0, j = 7;
  int width_cycle = 0;
  while (static_cast<int>(terms.size()) < lexicon_size) {
    const int width = 1 + width_cycle % 3;
    std::vector<std::string> term;
    for (int k = 0; k < width; ++k) {
      term.push_back(kDrugSyllables[(i + k * j) % kDrugSyllables.size()]);
    }
    ++i;
    j += 3;
    ++width_cycle;
    if (seen.insert(term).second) {
      terms.push_back(term);
      if (width == 3 && static_cast<int>(terms.size()) < lexicon_size) {
        std::vector<std::string> suffix(term.begin() + 1, term.end());
        if (seen.insert(suffix).second) terms.push_back(suffix);
      }
    }
  }
  // Pair consecutive terms as aliases of one concept.
  for (size_t k = 0; k < terms.size(); k += 2) {
    std::vector<std::vector<std::string>> surfaces;
    surfaces.push_back(terms[k]);
    if (k + 1 < terms.size()) surfaces.push_back(terms[k + 1]);
    inv.concepts.push_back(std::move(surfaces));
  }
  inv.lexicon = Lexicon(terms);
  return inv;
}

struct SentenceBuilder {
  std::vector<std::string> tokens;
  std::vector<EntityMention> entities;
  std::vector<RelationMention> relations;

  void word(const std::string& t) { tokens.push_back(t); }

  int entity(const std::vector<std::string>& surface, const std::string& type) {
    const int start = static_cast<int>(tokens.size());
    for (const auto& t : surface) tokens.push_back(t);
    entities.push_back({{start, static_cast<int>(tokens.size()) - 1}, type});
    return static_cast<int>(entities.size()) - 1;
  }

  void relation(int subj, int obj, const std::string& type) {
    relations.push_back({subj, obj, type});
  }
};

std::vector<std::string> sample_person(Rng& rng) {
  return {rng.pick(kSurnames), rng.pick(kGivenNames)};
}

std::vector<std::string> sample_person_distinct(Rng& rng,
                                                const std::set<std::vector<std::string>>& used) {
  for (;;) {
    auto p = sample_person(rng);
    if (!used.count(p)) return p;
  }
}

const std::vector<std::string>& sample_drug(Rng& rng, const DrugInventory& inv, int concept) {
  return inv.concepts[concept][rng.uniform(inv.concepts[concept].size())];
}

void maybe_time_prefix(Rng& rng, SentenceBuilder& sb) {
  if (!rng.bernoulli(0.4)) return;
  std::vector<std::string> surface = {rng.pick(kYears)};
  if (rng.bernoulli(0.5)) surface.push_back("yue" + std::to_string(1 + rng.uniform(9)));
  sb.entity(surface, "TIME");
  sb.word(",");
}

void quantity(Rng& rng, SentenceBuilder& sb) {
  sb.entity({rng.pick(kAmounts), rng.pick(kUnits)}, "QUANTITY");
}

Document build_sentence(Rng& rng, const DrugInventory& inv, PatternKind kind) {
  SentenceBuilder sb;
  maybe_time_prefix(rng, sb);
  std::set<std::vector<std::string>> used_persons;
  const auto p1_surface = sample_person_distinct(rng, used_persons);
  used_persons.insert(p1_surface);

  switch (kind) {
    case PatternKind::simple: {
      const int variant = static_cast<int>(rng.uniform(4));
      const int p1 = sb.entity(p1_surface, "PERSON");
      if (variant == 0) {  // traffic
        sb.word("fanyun");
        const int d = sb.entity(sample_drug(rng, inv, static_cast<int>(rng.uniform(inv.concepts.size()))), "DRUG");
        sb.relation(p1, d, "traffic");
        if (rng.bernoulli(0.5)) quantity(rng, sb);
      } else if (variant == 1) {  // possess
        sb.word("chiyou");
        if (rng.bernoulli(0.5)) quantity(rng, sb);
        const int d = sb.entity(sample_drug(rng, inv, static_cast<int>(rng.uniform(inv.concepts.size()))), "DRUG");
        sb.relation(p1, d, "possess");
      } else if (variant == 2) {  // sell_to
        sb.word("xiang");
        const int p2 = sb.entity(sample_person_distinct(rng, used_persons), "PERSON");
        sb.word("chushou");
        sb.entity(sample_drug(rng, inv, static_cast<int>(rng.uniform(inv.concepts.size()))), "DRUG");
        sb.relation(p1, p2, "sell_to");
      } else {  // provide_venue
        sb.word("zai");
        const int loc = sb.entity({rng.pick(kLocations)}, "LOCATION");
        sb.word("tigong");
        sb.word("xidu");
        sb.word("changsuo");
        sb.relation(p1, loc, "provide_venue");
      }
      break;
    }
    case PatternKind::joint_crime: {
      const int p1 = sb.entity(p1_surface, "PERSON");
      sb.word("he");
      const auto p2_surface = sample_person_distinct(rng, used_persons);
      used_persons.insert(p2_surface);
      const int p2 = sb.entity(p2_surface, "PERSON");
      sb.word("gongtong");
      const int variant = static_cast<int>(rng.uniform(3));
      if (variant == 0) {
        sb.word("fanyun");
        const int d = sb.entity(sample_drug(rng, inv, static_cast<int>(rng.uniform(inv.concepts.size()))), "DRUG");
        sb.relation(p1, d, "traffic");
        sb.relation(p2, d, "traffic");
      } else if (variant == 1) {
        sb.word("chiyou");
        const int d = sb.entity(sample_drug(rng, inv, static_cast<int>(rng.uniform(inv.concepts.size()))), "DRUG");
        sb.relation(p1, d, "possess");
        sb.relation(p2, d, "possess");
      } else {
        sb.word("xiang");
        const int p3 = sb.entity(sample_person_distinct(rng, used_persons), "PERSON");
        sb.word("chushou");
        sb.entity(sample_drug(rng, inv, static_cast<int>(rng.uniform(inv.concepts.size()))), "DRUG");
        sb.relation(p1, p3, "sell_to");
        sb.relation(p2, p3, "sell_to");
      }
      break;
    }
    case PatternKind::multi_crime: {
      const int p1 = sb.entity(p1_surface, "PERSON");
      sb.word("bujin");
      const size_t c1 = rng.uniform(inv.concepts.size());
      size_t c2 = rng.uniform(inv.concepts.size());
      while (c2 == c1) c2 = rng.uniform(inv.concepts.size());
      const int variant = static_cast<int>(rng.uniform(3));
      if (variant == 0) {  // traffic + possess
        sb.word("fanyun");
        const int d1 = sb.entity(sample_drug(rng, inv, static_cast<int>(c1)), "DRUG");
        sb.word("erqie");
        sb.word("chiyou");
        const int d2 = sb.entity(sample_drug(rng, inv, static_cast<int>(c2)), "DRUG");
        sb.relation(p1, d1, "traffic");
        sb.relation(p1, d2, "possess");
      } else if (variant == 1) {  // sell_to + traffic
        sb.word("xiang");
        const int p2 = sb.entity(sample_person_distinct(rng, used_persons), "PERSON");
        sb.word("chushou");
        sb.entity(sample_drug(rng, inv, static_cast<int>(c1)), "DRUG");
        sb.word("erqie");
        sb.word("fanyun");
        const int d2 = sb.entity(sample_drug(rng, inv, static_cast<int>(c2)), "DRUG");
        sb.relation(p1, p2, "sell_to");
        sb.relation(p1, d2, "traffic");
      } else {  // provide_venue + traffic
        sb.word("zai");
        const int loc = sb.entity({rng.pick(kLocations)}, "LOCATION");
        sb.word("tigong");
        sb.word("xidu");
        sb.word("changsuo");
        sb.word("erqie");
        sb.word("fanyun");
        const int d = sb.entity(sample_drug(rng, inv, static_cast<int>(c1)), "DRUG");
        sb.relation(p1, loc, "provide_venue");
        sb.relation(p1, d, "traffic");
      }
      break;
    }
  }
  Document doc;
  doc.tokens = std::move(sb.tokens);
  doc.entities = std::move(sb.entities);
  doc.relations = std::move(sb.relations);
  return doc;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (num_docs < 0) throw ValidationError("generator: num_docs < 0");
  if (p_joint_crime < 0.0 || p_joint_crime > 1.0 || p_multi_crime < 0.0 || p_multi_crime > 1.0)
    throw ValidationError("generator: pattern probabilities must be in [0,1]");
  if (p_joint_crime + p_multi_crime > 1.0)
    throw ValidationError("generator: p_joint_crime + p_multi_crime > 1");
  if (max_sentence_len < 20)
    throw ValidationError("generator: max_sentence_len below 20 cannot fit the longest template");
  if (lexicon_size < 4) throw ValidationError("generator: lexicon_size must be at least 4");
}

LabelSchema synthetic_schema() {
  return LabelSchema{{"PERSON", "DRUG", "LOCATION", "QUANTITY", "TIME"},
                     {"sell_to", "traffic", "possess", "provide_venue"}};
}

bool type_pair_compatible(const std::string& relation_type, const std::string& subject_type,
                          const std::string& object_type) {
  static const std::map<std::string, std::pair<std::string, std::string>> table = {
      {"sell_to", {"PERSON", "PERSON"}},
      {"traffic", {"PERSON", "DRUG"}},
      {"possess", {"PERSON", "DRUG"}},
      {"provide_venue", {"PERSON", "LOCATION"}},
  };
  auto it = table.find(relation_type);
  return it != table.end() && it->second.first == subject_type &&
         it->second.second == object_type;
}

GeneratedCorpus generate_corpus(const GeneratorConfig& cfg) {
  cfg.validate();
  GeneratedCorpus out;
  out.schema = synthetic_schema();
  auto inv = build_drug_inventory(cfg.lexicon_size);
  out.lexicon = inv.lexicon;

  const int n_joint = static_cast<int>(std::ceil(cfg.p_joint_crime * cfg.num_docs));
  const int n_multi = static_cast<int>(std::ceil(cfg.p_multi_crime * cfg.num_docs));
  if (n_joint + n_multi > cfg.num_docs)
    throw ValidationError("generator: pattern quotas exceed num_docs");

  std::vector<PatternKind> kinds;
  kinds.insert(kinds.end(), n_joint, PatternKind::joint_crime);
  kinds.insert(kinds.end(), n_multi, PatternKind::multi_crime);
  kinds.insert(kinds.end(), cfg.num_docs - n_joint - n_multi, PatternKind::simple);
  Rng master(cfg.seed);
  master.shuffle(kinds);

  for (int i = 0; i < cfg.num_docs; ++i) {
    Rng doc_rng(master.fork_seed());
    Document doc = build_sentence(doc_rng, inv, kinds[i]);
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", i);
    doc.doc_id = id;
    if (static_cast<int>(doc.tokens.size()) > cfg.max_sentence_len)
      throw ValidationError("generator: emitted sentence exceeds max_sentence_len");
    doc.validate(out.schema, kDefaultMaxSpanWidth);
    out.docs.push_back(std::move(doc));
    switch (kinds[i]) {
      case PatternKind::simple: out.tallies.simple += 1; break;
      case PatternKind::joint_crime: out.tallies.joint_crime += 1; break;
      case PatternKind::multi_crime: out.tallies.multi_crime += 1; break;
    }
  }
  return out;
}

PatternCounts pattern_census(const std::vector<Document>& docs) {
  PatternCounts counts;
  for (const auto& doc : docs) {
    const auto& rels = doc.relations;
    std::vector<bool> paired(rels.size(), false);
    for (size_t i = 0; i < rels.size(); ++i) {
      for (size_t j = i + 1; j < rels.size(); ++j) {
        const bool same_subj = rels[i].subject == rels[j].subject;
        const bool same_obj = rels[i].object == rels[j].object;
        if (same_obj && !same_subj) {
          counts.joint_crime += 1;
          paired[i] = paired[j] = true;
        }
        if (same_subj && !same_obj) {
          counts.multi_crime += 1;
          paired[i] = paired[j] = true;
        }
        if (same_subj && same_obj) paired[i] = paired[j] = true;
      }
    }
    for (size_t i = 0; i < rels.size(); ++i) {
      if (!paired[i]) counts.simple += 1;
    }
  }
  return counts;
}

}  // namespace hgre
