#pragma once

#include <map>
#include <string>
#include <vector>

#include "vpdiff/feynman.hpp"
#include "vpdiff/heat_kernel.hpp"
#include "vpdiff/ledger.hpp"

namespace vpd {

struct DocumentError : Error { using Error::Error; };

// Line-oriented key-value document:
//   # comment
//   key = value
//   leg.1.k = 1 0 0 2
// Keys may repeat. A value opening with '(' continues across lines until its
// parentheses balance, so serialized expressions embed directly.
struct Document {
  std::vector<std::pair<std::string, std::string>> entries;

  static Document parse(const std::string& text);
  static Document load(const std::string& path);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string getOr(const std::string& key, const std::string& fallback) const;
  std::vector<std::string> keysWithPrefix(const std::string& prefix) const;
};

GraphDescription graphFromDocument(const Document& doc);
FluctuationOperatorSpec operatorFromDocument(const Document& doc);
MatterContent matterFromDocument(const Document& doc);

} // namespace vpd
