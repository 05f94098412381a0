#pragma once

#include <string>
#include <vector>

#include "hgre/schema.hpp"

namespace hgre {

// Raw micro counts for one task.
struct TaskCounts {
  long correct = 0;
  long predicted = 0;
  long gold = 0;

  TaskCounts& operator+=(const TaskCounts& o) {
    correct += o.correct;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }

  double precision() const { return predicted == 0 ? 0.0 : double(correct) / double(predicted); }
  double recall() const { return gold == 0 ? 0.0 : double(correct) / double(gold); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

// Strict relation tuple: boundaries and types of both endpoints plus the
// relation type must all match for a prediction to count.
struct RelTuple {
  SpanRef subject_span;
  std::string subject_type;
  SpanRef object_span;
  std::string object_type;
  std::string relation_type;

  bool operator==(const RelTuple&) const = default;
  auto operator<=>(const RelTuple&) const = default;
};

// Exact-match counting for one document; each gold item is matched at most
// once, duplicate predictions beyond the first count as wrong.
TaskCounts score_ner(const std::vector<EntityMention>& pred,
                     const std::vector<EntityMention>& gold);
TaskCounts score_re(const std::vector<RelTuple>& pred, const std::vector<RelTuple>& gold);

// Gold relation tuples of a document, endpoint types taken from its entities.
std::vector<RelTuple> gold_rel_tuples(const Document& doc);

struct MetricsReport {
  TaskCounts ner;
  TaskCounts re;
  // run metadata
  std::string topology;
  int hgnn_layers = 0;
  uint64_t seed = 0;

  std::string to_json() const;
  std::string to_table() const;  // aligned Precision / Recall / F1 text table
  static MetricsReport from_json(const std::string& text);
};

}  // namespace hgre
