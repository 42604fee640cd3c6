#include "vpdiff/document.hpp"

#include <fstream>
#include <sstream>

#include "vpdiff/serialize.hpp"

namespace vpd {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

} // namespace

Document Document::parse(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DocumentError("document: expected 'key = value' in line: " + t);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw DocumentError("document: empty key");
    // balanced-parenthesis continuation for embedded expressions
    if (!value.empty() && value[0] == '(') {
      int depth = 0;
      for (char c : value) depth += c == '(' ? 1 : (c == ')' ? -1 : 0);
      while (depth > 0 && std::getline(in, line)) {
        value += "\n" + line;
        for (char c : line) depth += c == '(' ? 1 : (c == ')' ? -1 : 0);
      }
      if (depth != 0) throw DocumentError("document: unbalanced parentheses in value of " + key);
    }
    doc.entries.emplace_back(key, value);
  }
  return doc;
}

Document Document::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DocumentError("document: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool Document::has(const std::string& key) const {
  for (auto& [k, v] : entries)
    if (k == key) return true;
  return false;
}

const std::string& Document::get(const std::string& key) const {
  for (auto& [k, v] : entries)
    if (k == key) return v;
  throw DocumentError("document: missing key " + key);
}

std::string Document::getOr(const std::string& key, const std::string& fallback) const {
  for (auto& [k, v] : entries)
    if (k == key) return v;
  return fallback;
}

std::vector<std::string> Document::keysWithPrefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto& [k, v] : entries)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

namespace {

Vec4 parseVec4(const std::string& s) {
  std::istringstream in(s);
  Vec4 v{};
  for (int i = 0; i < 4; ++i)
    if (!(in >> v[i])) throw DocumentError("document: expected four components in '" + s + "'");
  return v;
}

std::vector<int> parseInts(const std::string& s) {
  std::istringstream in(s);
  std::vector<int> out;
  int x;
  while (in >> x) out.push_back(x);
  return out;
}

bool parseBool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw DocumentError("document: expected boolean, got '" + s + "'");
}

} // namespace

GraphDescription graphFromDocument(const Document& doc) {
  GraphDescription g;
  std::map<int, GraphLeg> legs;
  for (auto& [k, v] : doc.entries) {
    if (k.rfind("leg.", 0) != 0) continue;
    auto second = k.find('.', 4);
    if (second == std::string::npos) throw DocumentError("document: malformed leg key " + k);
    int id = std::stoi(k.substr(4, second - 4));
    std::string field = k.substr(second + 1);
    GraphLeg& leg = legs[id];
    leg.id = id;
    if (field == "k")
      leg.k = parseVec4(v);
    else if (field == "K")
      leg.K = parseVec4(v);
    else if (field == "ghost")
      leg.ghost = parseBool(v);
    else
      throw DocumentError("document: unknown leg field " + field);
  }
  for (auto& [id, leg] : legs) g.legs.push_back(leg);

  for (auto& [k, v] : doc.entries) {
    if (k.rfind("vertex.", 0) != 0) continue;
    auto second = k.find('.', 7);
    if (second == std::string::npos) continue;
    std::string field = k.substr(second + 1);
    int id = std::stoi(k.substr(7, second - 7));
    while ((int)g.vertices.size() < id) g.vertices.push_back({});
    if (field == "kind") {
      if (v == "tri")
        g.vertices[id - 1].kind = VertexTag::TriGauge;
      else if (v == "quad")
        g.vertices[id - 1].kind = VertexTag::QuadGauge;
      else if (v == "ghost")
        g.vertices[id - 1].kind = VertexTag::GhostGauge;
      else
        throw DocumentError("document: unknown vertex kind " + v);
    } else if (field == "legs") {
      g.vertices[id - 1].legs = parseInts(v);
    }
  }
  for (auto& [k, v] : doc.entries) {
    if (k.rfind("propagator.", 0) != 0) continue;
    auto second = k.find('.', 11);
    if (second == std::string::npos) continue;
    std::string field = k.substr(second + 1);
    int id = std::stoi(k.substr(11, second - 11));
    while ((int)g.propagators.size() < id) g.propagators.push_back({});
    if (field == "legs") {
      auto ids = parseInts(v);
      if (ids.size() != 2) throw DocumentError("document: propagator joins exactly two legs");
      g.propagators[id - 1].legA = ids[0];
      g.propagators[id - 1].legB = ids[1];
    } else if (field == "ghost") {
      g.propagators[id - 1].ghost = parseBool(v);
    }
  }
  return g;
}

FluctuationOperatorSpec operatorFromDocument(const Document& doc) {
  std::string form = doc.get("form");
  auto expr = [&](const char* key) {
    return doc.has(key) ? parseExpr(doc.get(key)) : TensorExpr::zero();
  };
  if (form == "generalBC")
    return FluctuationOperatorSpec::generalBC(expr("B"), expr("C"));
  if (form == "generalMNC")
    return FluctuationOperatorSpec::generalMNC(expr("M"), expr("N"), expr("C"));
  if (form == "covariantAE")
    return FluctuationOperatorSpec::covariantAE(expr("A"), expr("E"));
  throw DocumentError("document: unknown operator form " + form);
}

MatterContent matterFromDocument(const Document& doc) {
  MatterContent m;
  m.gaugeFieldCount = std::stoi(doc.getOr("gaugeFields", "0"));
  m.chiralDiracCount = std::stoi(doc.getOr("chiralDirac", "0"));
  m.complexScalarCount = std::stoi(doc.getOr("complexScalars", "0"));
  m.includePureGauge = parseBool(doc.getOr("includePureGauge", "true"));
  if (m.gaugeFieldCount < 0 || m.chiralDiracCount < 0 || m.complexScalarCount < 0)
    throw DocumentError("document: matter counts must be non-negative");
  return m;
}

} // namespace vpd
