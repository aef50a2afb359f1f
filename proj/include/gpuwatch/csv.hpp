#pragma once

#include <string>
#include <vector>

namespace gpuwatch {

// Splits one CSV line. Handles double-quoted fields with "" escapes; no
// embedded newlines (the tidy formats never produce them).
std::vector<std::string> splitCsvLine(const std::string& line);

// Quotes a field if it contains a comma, quote, or leading/trailing space.
std::string csvField(const std::string& s);

// Reads all lines of a text file; transparently decompresses when the path
// ends in ".bz2". Throws std::runtime_error on unreadable input.
std::vector<std::string> readLines(const std::string& path);

void writeTextFile(const std::string& path, const std::string& content);

}  // namespace gpuwatch
