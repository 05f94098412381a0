#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgre {

// Raised for malformed input files (bad JSON, bad record shape).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when well-formed input violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Label inventory. Index 0 of every classifier head is the implicit null
// class; it is never listed here and never stored in gold files.
struct LabelSchema {
  std::vector<std::string> entity_types;
  std::vector<std::string> relation_types;

  int entity_index(const std::string& type) const;    // -1 if unknown
  int relation_index(const std::string& type) const;  // -1 if unknown
  void validate() const;  // non-empty, duplicate-free

  static LabelSchema load(const std::string& path);
  void save(const std::string& path) const;
};

// Inclusive [start, end] token span.
struct SpanRef {
  int start = 0;
  int end = 0;

  int width() const { return end - start + 1; }
  bool operator==(const SpanRef&) const = default;
  auto operator<=>(const SpanRef&) const = default;
};

struct EntityMention {
  SpanRef span;
  std::string type;

  bool operator==(const EntityMention&) const = default;
};

struct RelationMention {
  int subject = 0;  // index into Document::entities
  int object = 0;
  std::string type;

  bool operator==(const RelationMention&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<EntityMention> entities;
  std::vector<RelationMention> relations;

  // Throws ValidationError naming doc_id on any invariant breach.
  void validate(const LabelSchema& schema, int max_span_width) const;
};

inline constexpr int kDefaultMaxSpanWidth = 16;

// One JSON object per line; see the corpus format in the README.
std::vector<Document> load_corpus(const std::string& path, const LabelSchema& schema,
                                  int max_span_width = kDefaultMaxSpanWidth);
void save_corpus(const std::string& path, const std::vector<Document>& docs);

std::string document_to_json_line(const Document& doc);

// Deterministic split: held-out gets floor((1-ratio)*N) docs.
std::pair<std::vector<Document>, std::vector<Document>> split_corpus(
    const std::vector<Document>& docs, double ratio, uint64_t seed);

}  // namespace hgre
