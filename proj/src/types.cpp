#include "gpuwatch/types.hpp"

#include <algorithm>

namespace gpuwatch {

std::string labelsToString(const Labels& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ';';
        out += labels[i].first;
        out += '=';
        out += labels[i].second;
    }
    return out;
}

Labels labelsFromString(const std::string& s) {
    Labels out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t end = s.find(';', pos);
        if (end == std::string::npos) end = s.size();
        std::string pair = s.substr(pos, end - pos);
        if (!pair.empty()) {
            std::size_t eq = pair.find('=');
            if (eq == std::string::npos) {
                out.emplace_back(pair, "");
            } else {
                out.emplace_back(pair.substr(0, eq), pair.substr(eq + 1));
            }
        }
        pos = end + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string ColumnKey::str() const {
    if (labels.empty()) return metric;
    return metric + "{" + labelsToString(labels) + "}";
}

}  // namespace gpuwatch
