#pragma once

#include <cstdint>
#include <vector>

#include "hgre/lexicon.hpp"
#include "hgre/schema.hpp"

namespace hgre {

// Drug-case-style corpus generator. Emits single-sentence documents built
// from closed-vocabulary templates; two template kinds realize the special
// relational patterns (two subjects sharing an object, one subject with two
// objects) so the jc/cp hyperedge families have signal to exploit.
struct GeneratorConfig {
  int num_docs = 100;
  uint64_t seed = 1;
  int max_sentence_len = 24;
  double p_joint_crime = 0.2;
  double p_multi_crime = 0.2;
  int lexicon_size = 12;

  void validate() const;
};

enum class PatternKind { simple, joint_crime, multi_crime };

struct PatternCounts {
  long simple = 0;       // relations sharing neither endpoint with another
  long joint_crime = 0;  // unordered relation pairs sharing object, differing subject
  long multi_crime = 0;  // unordered relation pairs sharing subject, differing object

  bool operator==(const PatternCounts&) const = default;
};

struct GeneratedCorpus {
  std::vector<Document> docs;
  Lexicon lexicon;
  LabelSchema schema;
  PatternCounts tallies;  // what the generator believes it emitted
};

LabelSchema synthetic_schema();

// Relation type -> (subject entity type, object entity type).
bool type_pair_compatible(const std::string& relation_type, const std::string& subject_type,
                          const std::string& object_type);

GeneratedCorpus generate_corpus(const GeneratorConfig& cfg);

PatternCounts pattern_census(const std::vector<Document>& docs);

}  // namespace hgre
