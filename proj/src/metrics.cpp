#include "hgre/metrics.hpp"

#include <cstdio>
#include <map>

#include "json.hpp"

namespace hgre {

using nlohmann::json;

namespace {

template <typename T>
TaskCounts count_exact(const std::vector<T>& pred, const std::vector<T>& gold) {
  TaskCounts c;
  c.predicted = static_cast<long>(pred.size());
  c.gold = static_cast<long>(gold.size());
  std::map<T, long> remaining;
  for (const auto& g : gold) remaining[g] += 1;
  for (const auto& p : pred) {
    auto it = remaining.find(p);
    if (it != remaining.end() && it->second > 0) {
      it->second -= 1;
      c.correct += 1;
    }
  }
  return c;
}

}  // namespace

TaskCounts score_ner(const std::vector<EntityMention>& pred,
                     const std::vector<EntityMention>& gold) {
  std::vector<std::tuple<int, int, std::string>> p, g;
  for (const auto& e : pred) p.emplace_back(e.span.start, e.span.end, e.type);
  for (const auto& e : gold) g.emplace_back(e.span.start, e.span.end, e.type);
  return count_exact(p, g);
}

TaskCounts score_re(const std::vector<RelTuple>& pred, const std::vector<RelTuple>& gold) {
  return count_exact(pred, gold);
}

std::vector<RelTuple> gold_rel_tuples(const Document& doc) {
  std::vector<RelTuple> out;
  for (const auto& r : doc.relations) {
    const auto& s = doc.entities[r.subject];
    const auto& o = doc.entities[r.object];
    out.push_back({s.span, s.type, o.span, o.type, r.type});
  }
  return out;
}

std::string MetricsReport::to_json() const {
  json j;
  auto task = [](const TaskCounts& c) {
    return json{{"p", c.precision()},   {"r", c.recall()},  {"f1", c.f1()},
                {"correct", c.correct}, {"pred", c.predicted}, {"gold", c.gold}};
  };
  j["ner"] = task(ner);
  j["re"] = task(re);
  j["meta"] = {{"topology", topology}, {"hgnn_layers", hgnn_layers}, {"seed", seed}};
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  json j = json::parse(text);
  MetricsReport r;
  auto task = [](const json& t) {
    TaskCounts c;
    c.correct = t.at("correct").get<long>();
    c.predicted = t.at("pred").get<long>();
    c.gold = t.at("gold").get<long>();
    return c;
  };
  r.ner = task(j.at("ner"));
  r.re = task(j.at("re"));
  r.topology = j.at("meta").at("topology").get<std::string>();
  r.hgnn_layers = j.at("meta").at("hgnn_layers").get<int>();
  r.seed = j.at("meta").at("seed").get<uint64_t>();
  return r;
}

std::string MetricsReport::to_table() const {
  char buf[256];
  std::string out = "Task       Precision      Recall          F1\n";
  auto row = [&](const char* name, const TaskCounts& c) {
    std::snprintf(buf, sizeof(buf), "%-8s %11.2f %11.2f %11.2f\n", name,
                  100.0 * c.precision(), 100.0 * c.recall(), 100.0 * c.f1());
    out += buf;
  };
  row("Entity", ner);
  row("Relation", re);
  return out;
}

}  // namespace hgre
