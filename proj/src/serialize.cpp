#include "vpdiff/serialize.hpp"

#include <cctype>
#include <sstream>
#include <vector>

namespace vpd {

namespace {

void printSlot(std::ostringstream& os, const IndexSlot& s) {
  os << " " << spaceLetter(s.space) << (s.variance == Variance::Upper ? '+' : '-') << " "
     << s.label;
  if (s.dummy) os << " *";
}

void printFactor(std::ostringstream& os, const FieldSymbol& f) {
  os << " (f " << kindName(f.kind) << " " << f.tag;
  // parity/ghost recorded only when differing from the factory default
  FieldSymbol def = makeField(f.kind, {}, f.tag);
  if (f.odd != def.odd) os << " odd";
  if (f.ghost != def.ghost) os << " gh " << f.ghost;
  os << " (x";
  for (auto& s : f.indices) printSlot(os, s);
  os << ") (d";
  for (auto& s : f.derivs) printSlot(os, s);
  os << "))";
}

struct Tokenizer {
  std::vector<std::string> toks;
  size_t pos = 0;

  explicit Tokenizer(const std::string& text) {
    std::string cur;
    for (char c : text) {
      if (c == '(' || c == ')') {
        if (!cur.empty()) {
          toks.push_back(cur);
          cur.clear();
        }
        toks.push_back(std::string(1, c));
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!cur.empty()) {
          toks.push_back(cur);
          cur.clear();
        }
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) toks.push_back(cur);
  }

  const std::string& peek() const {
    static const std::string eof = "<eof>";
    return pos < toks.size() ? toks[pos] : eof;
  }
  std::string next() {
    if (pos >= toks.size()) throw MalformedExpressionError("parse: unexpected end of input");
    return toks[pos++];
  }
  void expect(const std::string& t) {
    std::string g = next();
    if (g != t) throw MalformedExpressionError("parse: expected '" + t + "', got '" + g + "'");
  }
};

IndexSlot parseSlot(Tokenizer& tz) {
  std::string sv = tz.next();
  if (sv.size() != 2) throw MalformedExpressionError("parse: bad slot tag " + sv);
  IndexSlot s;
  s.space = spaceFromLetter(sv[0]);
  s.variance = sv[1] == '+' ? Variance::Upper : Variance::Lower;
  s.label = tz.next();
  if (tz.peek() == "*") {
    tz.next();
    s.dummy = true;
  }
  return s;
}

SymConst symFromName(const std::string& n) {
  for (SymConst c : {SymConst::Omega4, SymConst::InvEps, SymConst::Lambda, SymConst::Omega1L,
                     SymConst::Coupling, SymConst::Xi, SymConst::MomentVol})
    if (n == symName(c)) return c;
  throw MalformedExpressionError("parse: unknown constant " + n);
}

ScalarCoeff parseCoeff(Tokenizer& tz) {
  tz.expect("(");
  tz.expect("c");
  ScalarCoeff c(Rational::parse(tz.next()));
  while (tz.peek() != ")") {
    std::string t = tz.next();
    if (t == "i") {
      c.iPow = 1;
    } else if (t == "sym") {
      std::string n = tz.next();
      c.mulConst(symFromName(n), std::stoi(tz.next()));
    } else if (t == "msq") {
      MomSq m;
      std::string kk = tz.next();
      m.inner = kk == "K";
      m.tag = std::stoi(tz.next());
      if (tz.peek() == "e") {
        tz.next();
        m.ieps = true;
      }
      c.mulMomSq(m, std::stoi(tz.next()));
    } else {
      throw MalformedExpressionError("parse: unexpected coeff token " + t);
    }
  }
  tz.expect(")");
  return c;
}

FieldSymbol parseFactor(Tokenizer& tz) {
  // "(f" already consumed
  std::string name = tz.next();
  int tag = std::stoi(tz.next());
  FieldSymbol f = makeField(kindFromName(name), {}, tag);
  while (tz.peek() != "(") {
    std::string t = tz.next();
    if (t == "odd")
      f.odd = !f.odd;
    else if (t == "gh")
      f.ghost = std::stoi(tz.next());
    else
      throw MalformedExpressionError("parse: unexpected factor token " + t);
  }
  tz.expect("(");
  tz.expect("x");
  while (tz.peek() != ")") f.indices.push_back(parseSlot(tz));
  tz.expect(")");
  tz.expect("(");
  tz.expect("d");
  while (tz.peek() != ")") f.derivs.push_back(parseSlot(tz));
  tz.expect(")");
  tz.expect(")");
  return f;
}

} // namespace

std::string printExpr(const TensorExpr& e) {
  TensorExpr c = canonicalize(e);
  std::ostringstream os;
  os << "(sum";
  for (auto& t : c.terms) {
    os << "\n (t (c " << t.coeff.rat.str();
    if (t.coeff.iPow) os << " i";
    for (auto& [s, n] : t.coeff.pows) os << " sym " << symName(s) << " " << n;
    for (auto& [m, n] : t.coeff.momsq)
      os << " msq " << (m.inner ? "K" : "k") << " " << m.tag << (m.ieps ? " e" : "") << " " << n;
    os << ")";
    for (auto& f : t.factors) printFactor(os, f);
    os << ")";
  }
  os << ")\n";
  return os.str();
}

TensorExpr parseExpr(const std::string& text) {
  Tokenizer tz(text);
  tz.expect("(");
  tz.expect("sum");
  TensorExpr e;
  while (tz.peek() == "(") {
    tz.next();
    tz.expect("t");
    TensorMonomial m;
    m.coeff = parseCoeff(tz);
    while (tz.peek() == "(") {
      tz.next();
      tz.expect("f");
      m.factors.push_back(parseFactor(tz));
    }
    tz.expect(")");
    e.terms.push_back(std::move(m));
  }
  tz.expect(")");
  return canonicalize(e);
}

} // namespace vpd
