#pragma once

#include <compare>
#include <string>

#include "prunekit/errors.hpp"

namespace prunekit {

/// Identifies a block by stage index and position within the stage.
/// Ordering is lexicographic; it is the tie-break order everywhere.
struct LayerRef {
  int stage = 0;
  int index = 0;

  auto operator<=>(const LayerRef&) const = default;

  std::string str() const {
    return "s" + std::to_string(stage) + "b" + std::to_string(index);
  }
};

/// Parses the "s<stage>b<index>" form produced by LayerRef::str().
inline LayerRef parse_layer_ref(const std::string& s) {
  auto bpos = s.find('b');
  if (s.size() < 4 || s[0] != 's' || bpos == std::string::npos) {
    fail(ErrorKind::InvalidParameter, "bad layer ref '" + s + "'");
  }
  try {
    return LayerRef{std::stoi(s.substr(1, bpos - 1)), std::stoi(s.substr(bpos + 1))};
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidParameter, "bad layer ref '" + s + "'");
  }
}

}  // namespace prunekit
