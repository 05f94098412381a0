#include "hgre/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hgre/rng.hpp"

namespace hgre {

using nlohmann::json;

int LabelSchema::entity_index(const std::string& type) const {
  auto it = std::find(entity_types.begin(), entity_types.end(), type);
  return it == entity_types.end() ? -1 : static_cast<int>(it - entity_types.begin());
}

int LabelSchema::relation_index(const std::string& type) const {
  auto it = std::find(relation_types.begin(), relation_types.end(), type);
  return it == relation_types.end() ? -1 : static_cast<int>(it - relation_types.begin());
}

void LabelSchema::validate() const {
  if (entity_types.empty()) throw ValidationError("schema: entity_types is empty");
  if (relation_types.empty()) throw ValidationError("schema: relation_types is empty");
  std::set<std::string> e(entity_types.begin(), entity_types.end());
  if (e.size() != entity_types.size())
    throw ValidationError("schema: duplicate entity type");
  std::set<std::string> r(relation_types.begin(), relation_types.end());
  if (r.size() != relation_types.size())
    throw ValidationError("schema: duplicate relation type");
}

LabelSchema LabelSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("schema: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("schema: bad JSON in " + path + ": " + e.what());
  }
  LabelSchema s;
  try {
    s.entity_types = j.at("entity_types").get<std::vector<std::string>>();
    s.relation_types = j.at("relation_types").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError("schema: bad structure in " + path + ": " + e.what());
  }
  s.validate();
  return s;
}

void LabelSchema::save(const std::string& path) const {
  json j;
  j["entity_types"] = entity_types;
  j["relation_types"] = relation_types;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("schema: cannot write " + path);
  out << j.dump(2) << "\n";
}

void Document::validate(const LabelSchema& schema, int max_span_width) const {
  const int n = static_cast<int>(tokens.size());
  for (const auto& e : entities) {
    if (e.span.start < 0 || e.span.start > e.span.end || e.span.end >= n)
      throw ValidationError("doc " + doc_id + ": entity span (" + std::to_string(e.span.start) +
                            "," + std::to_string(e.span.end) + ") out of range for " +
                            std::to_string(n) + " tokens");
    if (e.span.width() > max_span_width)
      throw ValidationError("doc " + doc_id + ": entity span wider than max span width " +
                            std::to_string(max_span_width));
    if (schema.entity_index(e.type) < 0)
      throw ValidationError("doc " + doc_id + ": unknown entity type '" + e.type + "'");
  }
  const int ne = static_cast<int>(entities.size());
  for (const auto& r : relations) {
    if (r.subject < 0 || r.subject >= ne || r.object < 0 || r.object >= ne)
      throw ValidationError("doc " + doc_id + ": relation endpoint out of range");
    if (r.subject == r.object)
      throw ValidationError("doc " + doc_id + ": relation links an entity to itself");
    if (schema.relation_index(r.type) < 0)
      throw ValidationError("doc " + doc_id + ": unknown relation type '" + r.type + "'");
  }
}

namespace {

Document document_from_json(const json& j) {
  Document d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& je : j.at("entities")) {
    EntityMention e;
    e.span.start = je.at("start").get<int>();
    e.span.end = je.at("end").get<int>();
    e.type = je.at("type").get<std::string>();
    d.entities.push_back(std::move(e));
  }
  for (const auto& jr : j.at("relations")) {
    RelationMention r;
    r.subject = jr.at("subject").get<int>();
    r.object = jr.at("object").get<int>();
    r.type = jr.at("type").get<std::string>();
    d.relations.push_back(std::move(r));
  }
  return d;
}

}  // namespace

std::string document_to_json_line(const Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["tokens"] = doc.tokens;
  json es = json::array();
  for (const auto& e : doc.entities) {
    es.push_back({{"start", e.span.start}, {"end", e.span.end}, {"type", e.type}});
  }
  j["entities"] = es;
  json rs = json::array();
  for (const auto& r : doc.relations) {
    rs.push_back({{"subject", r.subject}, {"object", r.object}, {"type", r.type}});
  }
  j["relations"] = rs;
  return j.dump();
}

std::vector<Document> load_corpus(const std::string& path, const LabelSchema& schema,
                                  int max_span_width) {
  std::ifstream in(path);
  if (!in) throw ParseError("corpus: cannot open " + path);
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("corpus " + path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    Document d;
    try {
      d = document_from_json(j);
    } catch (const json::exception& e) {
      throw ParseError("corpus " + path + " line " + std::to_string(line_no) +
                       ": bad record: " + e.what());
    }
    d.validate(schema, max_span_width);
    docs.push_back(std::move(d));
  }
  return docs;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("corpus: cannot write " + path);
  for (const auto& d : docs) out << document_to_json_line(d) << "\n";
}

std::pair<std::vector<Document>, std::vector<Document>> split_corpus(
    const std::vector<Document>& docs, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ValidationError("split_corpus: ratio must be in (0,1)");
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const size_t held = static_cast<size_t>((1.0 - ratio) * static_cast<double>(docs.size()));
  std::pair<std::vector<Document>, std::vector<Document>> out;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < docs.size() - held ? out.first : out.second).push_back(docs[order[i]]);
  }
  return out;
}

}  // namespace hgre
