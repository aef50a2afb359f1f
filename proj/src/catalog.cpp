#include "gpuwatch/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/time_util.hpp"

namespace gpuwatch {

namespace {

std::string normalizeState(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out = s.substr(b, e - b);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool parseDouble(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

}  // namespace

bool isOkState(const std::string& state) {
    const std::string s = normalizeState(state);
    return s == "idle" || s == "alloc" || s == "mix";
}

bool isFailureState(const std::string& state) {
    const std::string s = normalizeState(state);
    return s == "drain" || s == "draining" || s == "down" || s == "no response" ||
           s == "rebooting";
}

std::vector<IncidentRecord> parseCatalog(const std::string& path,
                                         ParseDiagnostics& diag) {
    std::vector<std::string> lines = readLines(path);
    if (lines.empty()) throw std::runtime_error("empty catalog: " + path);
    std::string header = lines[0];
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "node,date,description,category,beforeHours,afterHours")
        throw std::runtime_error("unknown catalog header in " + path + ": " + header);

    std::vector<IncidentRecord> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        ++diag.totalRows;
        std::vector<std::string> f = splitCsvLine(lines[li]);
        if (f.size() != 6) {
            ++diag.malformed;
            continue;
        }
        auto date = parseDate(f[1]);
        double before, after;
        if (!date || !parseDouble(f[4], before) || !parseDouble(f[5], after) ||
            before < 0 || after < 0 || f[0].empty()) {
            ++diag.malformed;
            continue;
        }
        IncidentRecord r;
        r.node = f[0];
        r.catalogDate = *date;
        r.description = f[2];
        r.category = f[3];
        r.beforeHours = before;
        r.afterHours = after;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StateTransition> parseTransitions(const std::string& path,
                                              ParseDiagnostics& diag) {
    std::vector<std::string> lines = readLines(path);
    if (lines.empty()) throw std::runtime_error("empty transitions file: " + path);
    std::string header = lines[0];
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "node,timestamp,fromState,toState")
        throw std::runtime_error("unknown transitions header in " + path + ": " + header);

    std::vector<StateTransition> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        ++diag.totalRows;
        std::vector<std::string> f = splitCsvLine(lines[li]);
        double ts;
        if (f.size() != 4 || !parseDouble(f[1], ts) || f[0].empty()) {
            // also accept human-readable datetimes in the timestamp column
            if (f.size() == 4 && !f[0].empty()) {
                auto t = parseDateTime(f[1]);
                if (t) {
                    out.push_back({f[0], *t, f[2], f[3]});
                    continue;
                }
            }
            ++diag.malformed;
            continue;
        }
        out.push_back({f[0], static_cast<std::int64_t>(ts), f[2], f[3]});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const StateTransition& a, const StateTransition& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

std::vector<StateTransition> transitionsFromSamples(
    const std::vector<MetricSample>& samples, const std::string& metricName) {
    // node -> time-ordered (timestamp, state)
    std::map<std::string, std::map<std::int64_t, std::string>> stateByNode;
    for (const MetricSample& s : samples) {
        if (s.metric != metricName || s.value != 1.0) continue;
        for (const auto& [k, v] : s.labels) {
            if (k == "state") stateByNode[s.node][s.timestamp] = v;
        }
    }
    std::vector<StateTransition> out;
    for (const auto& [node, states] : stateByNode) {
        const std::string* prev = nullptr;
        for (const auto& [ts, st] : states) {
            if (prev && normalizeState(*prev) != normalizeState(st))
                out.push_back({node, ts, *prev, st});
            prev = &st;
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const StateTransition& a, const StateTransition& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

IncidentRecord refineIncidentTime(const IncidentRecord& record,
                                  const std::vector<StateTransition>& transitions) {
    IncidentRecord out = record;
    const std::int64_t dayBegin = record.catalogDate;
    const std::int64_t dayEnd = dayBegin + 86400;
    const std::int64_t priorBegin = dayBegin - 3 * 86400;

    std::vector<std::int64_t> sameDay, prior;
    for (const StateTransition& t : transitions) {
        if (t.node != record.node) continue;
        if (!isOkState(t.fromState) || !isFailureState(t.toState)) continue;
        if (t.timestamp >= dayBegin && t.timestamp < dayEnd)
            sameDay.push_back(t.timestamp);
        else if (t.timestamp >= priorBegin && t.timestamp < dayBegin)
            prior.push_back(t.timestamp);
    }

    auto countAt = [](const std::vector<std::int64_t>& v, std::int64_t t) {
        return std::count(v.begin(), v.end(), t);
    };

    if (!sameDay.empty()) {
        std::int64_t t0 = *std::min_element(sameDay.begin(), sameDay.end());
        out.refinedT0 = t0;
        out.ambiguousTie = countAt(sameDay, t0) > 1;
    } else if (!prior.empty()) {
        std::int64_t t0 = *std::max_element(prior.begin(), prior.end());
        out.refinedT0 = t0;
        out.ambiguousTie = countAt(prior, t0) > 1;
    } else {
        out.discarded = true;
    }
    return out;
}

std::string refinedCatalogCsv(const std::vector<IncidentRecord>& records) {
    std::ostringstream os;
    os << "node,date,description,category,beforeHours,afterHours,"
          "refinedT0,collectStart,collectEnd,status\n";
    for (const IncidentRecord& r : records) {
        os << csvField(r.node) << ',' << formatDate(r.catalogDate) << ','
           << csvField(r.description) << ',' << csvField(r.category) << ','
           << r.beforeHours << ',' << r.afterHours << ',';
        if (r.refinedT0) {
            os << *r.refinedT0 << ',' << r.collectStart() << ',' << r.collectEnd()
               << ",refined";
        } else {
            os << ",,,discarded";
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace gpuwatch
