#pragma once

#include <string>
#include <vector>

#include "pairdiff/data.hpp"

namespace pairdiff {

/// Reads `y,x1..xk,w1..wd` with k, d >= 1 inferred from the header.
/// Throws IoError for unreadable files and DataError naming the line and
/// column for malformed content.
Dataset ingest_csv(const std::string& path);

/// Same parser on in-memory text; `origin` names the source in messages.
Dataset parse_csv(const std::string& text, const std::string& origin);

/// Writes the dataset with the header above and round-trip precision.
void write_csv(const std::string& path, const Dataset& data);

/// Writes a header and rows of preformatted cells.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

/// Shortest text that parses back to the same double.
std::string format_real(double v);

}  // namespace pairdiff
