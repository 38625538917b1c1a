#include "lmselect/errors.hpp"

#include <sstream>

namespace lmselect {

namespace {

std::string located(const std::string& what, std::size_t line, std::size_t column) {
  if (line == 0) return what;
  std::ostringstream os;
  os << "line " << line;
  if (column != 0) os << ", column " << column;
  os << ": " << what;
  return os.str();
}

}  // namespace

DataError::DataError(const std::string& what, std::size_t line, std::size_t column)
    : Error(located(what, line, column)), line_(line), column_(column) {}

ZeroProbabilityPattern::ZeroProbabilityPattern(std::size_t pattern_index)
    : Error("zero-probability pattern (index " + std::to_string(pattern_index) + ")"),
      pattern_index_(pattern_index) {}

EnumerationCapExceeded::EnumerationCapExceeded(double configurations, double cap)
    : Error("exact entropy enumeration over " + std::to_string(static_cast<long long>(configurations)) +
            " latent configurations exceeds the cap of " + std::to_string(static_cast<long long>(cap)) +
            "; use the chain decomposition") {}

}  // namespace lmselect
