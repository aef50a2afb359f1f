#include "gpuwatch/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gpuwatch {

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // drop trailing CR
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

std::string csvField(const std::string& s) {
    bool needQuote = s.find(',') != std::string::npos ||
                     s.find('"') != std::string::npos;
    if (!s.empty() && (s.front() == ' ' || s.back() == ' ')) needQuote = true;
    if (!needQuote) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

namespace {

std::vector<std::string> linesFromStream(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

std::vector<std::string> readLines(const std::string& path) {
    const bool bz2 = path.size() > 4 && path.compare(path.size() - 4, 4, ".bz2") == 0;
    if (!bz2) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open file: " + path);
        return linesFromStream(in);
    }
    // No quoting needed: paths come from the CLI/tests; reject the one
    // character that would break the shell command.
    if (path.find('\'') != std::string::npos)
        throw std::runtime_error("unsupported character in path: " + path);
    std::string cmd = "bzip2 -dc '" + path + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot spawn bzip2 for: " + path);
    std::string content;
    char buf[1 << 16];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) content.append(buf, n);
    int rc = pclose(pipe);
    if (rc != 0) throw std::runtime_error("bzip2 decompression failed for: " + path);
    std::istringstream in(content);
    return linesFromStream(in);
}

void writeTextFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace gpuwatch
