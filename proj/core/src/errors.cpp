#include "aqd/errors.hpp"

namespace aqd {

IoError::IoError(const std::string& path, const std::string& what)
    : InputError(path + ": " + what), path_(path) {}

FormatError::FormatError(const std::string& what, std::size_t line)
    : InputError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

TopologyError::TopologyError(const std::string& what, std::size_t row, std::size_t col)
    : Error(what + " at cell (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
      row_(row),
      col_(col) {}

}  // namespace aqd
