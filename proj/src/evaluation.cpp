#include "gpuwatch/evaluation.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/stats.hpp"

namespace gpuwatch {

std::vector<WeakEvent> extractWeakEvents(const SignatureMatrix& sig, double q,
                                         int minRun, bool pooled) {
    std::vector<WeakEvent> events;
    const std::size_t n = sig.rows.size();

    double pooledThreshold = kMissing;
    if (pooled) {
        std::vector<double> vals;
        for (double v : sig.scalar)
            if (!isMissing(v)) vals.push_back(v);
        if (vals.empty()) return events;
        pooledThreshold = nearestRankQuantile(std::move(vals), q);
    }

    for (std::size_t b = 0; b < n;) {
        std::size_t e = b;
        while (e < n && sig.rows[e].node == sig.rows[b].node) ++e;

        double threshold = pooledThreshold;
        if (!pooled) {
            std::vector<double> vals;
            for (std::size_t i = b; i < e; ++i)
                if (!isMissing(sig.scalar[i])) vals.push_back(sig.scalar[i]);
            if (vals.empty()) {
                b = e;
                continue;
            }
            threshold = nearestRankQuantile(std::move(vals), q);
        }

        std::size_t runStart = 0;
        std::size_t runLen = 0;
        double peak = 0.0;
        auto flush = [&](std::size_t endPos) {
            if (runLen >= static_cast<std::size_t>(minRun)) {
                WeakEvent ev;
                ev.node = sig.rows[b].node;
                ev.startWindow = sig.rows[runStart].index;
                ev.endWindow = sig.rows[endPos - 1].index;
                ev.startTime = sig.rows[runStart].start;
                ev.peak = peak;
                ev.threshold = threshold;
                events.push_back(std::move(ev));
            }
            runLen = 0;
            peak = 0.0;
        };
        for (std::size_t i = b; i < e; ++i) {
            const bool above = !isMissing(sig.scalar[i]) && sig.scalar[i] > threshold;
            // a gap in window indices breaks contiguity
            const bool contiguous =
                runLen > 0 && i > b && sig.rows[i].index == sig.rows[i - 1].index + 1;
            if (above && (runLen == 0 || contiguous)) {
                if (runLen == 0) runStart = i;
                ++runLen;
                peak = std::max(peak, sig.scalar[i]);
            } else if (above) {
                flush(i);
                runStart = i;
                runLen = 1;
                peak = sig.scalar[i];
            } else {
                flush(i);
            }
        }
        flush(e);
        b = e;
    }
    return events;
}

LeadStats computeLeadTime(const std::vector<WeakEvent>& events, const ScoreSeries& alerts,
                          int lookback, bool includeMisses) {
    // per-node sorted alert window indices
    std::map<std::string, std::vector<std::size_t>> alertIdx;
    for (std::size_t i = 0; i < alerts.rows.size(); ++i)
        if (alerts.alert[i]) alertIdx[alerts.rows[i].node].push_back(alerts.rows[i].index);
    for (auto& [node, v] : alertIdx) std::sort(v.begin(), v.end());

    LeadStats out;
    std::vector<double> aggregated;
    for (const WeakEvent& ev : events) {
        double lead = 0.0;
        bool detected = false;
        auto it = alertIdx.find(ev.node);
        if (it != alertIdx.end()) {
            const std::size_t lo =
                ev.startWindow >= static_cast<std::size_t>(lookback)
                    ? ev.startWindow - static_cast<std::size_t>(lookback)
                    : 0;
            auto first = std::lower_bound(it->second.begin(), it->second.end(), lo);
            if (first != it->second.end() && *first <= ev.startWindow) {
                lead = static_cast<double>(ev.startWindow - *first);
                detected = true;
            }
        }
        out.leads.push_back(lead);
        if (detected) ++out.detectedEvents;
        if (detected || includeMisses) aggregated.push_back(lead);
    }
    if (!aggregated.empty()) {
        double sum = 0.0, mx = 0.0;
        for (double v : aggregated) {
            sum += v;
            mx = std::max(mx, v);
        }
        out.avgLead = sum / static_cast<double>(aggregated.size());
        out.maxLead = mx;
        std::sort(aggregated.begin(), aggregated.end());
        const std::size_t k = aggregated.size();
        out.medianLead = k % 2 ? aggregated[k / 2]
                               : 0.5 * (aggregated[k / 2 - 1] + aggregated[k / 2]);
    }
    return out;
}

RunStats alertRunStats(const ScoreSeries& alerts) {
    RunStats out;
    const std::size_t n = alerts.rows.size();
    for (std::size_t b = 0; b < n;) {
        std::size_t e = b;
        while (e < n && alerts.rows[e].node == alerts.rows[b].node) ++e;
        std::size_t runLen = 0;
        for (std::size_t i = b; i < e; ++i) {
            const bool contiguous =
                runLen > 0 && i > b && alerts.rows[i].index == alerts.rows[i - 1].index + 1;
            if (alerts.alert[i] && (runLen == 0 || contiguous)) {
                ++runLen;
            } else if (alerts.alert[i]) {
                ++out.runCount;
                out.totalAlertWindows += runLen;
                runLen = 1;
            } else if (runLen > 0) {
                ++out.runCount;
                out.totalAlertWindows += runLen;
                runLen = 0;
            }
        }
        if (runLen > 0) {
            ++out.runCount;
            out.totalAlertWindows += runLen;
        }
        b = e;
    }
    if (out.runCount > 0)
        out.avgRunLen = static_cast<double>(out.totalAlertWindows) /
                        static_cast<double>(out.runCount);
    return out;
}

std::string comparisonCsv(const std::vector<ComparisonRow>& rows, bool anyEvents) {
    std::ostringstream os;
    os.precision(17);
    os << "plane,method,avgLead,medianLead,maxLead,avgRunLen,runs,note\n";
    for (const ComparisonRow& r : rows) {
        os << r.plane << ',' << r.method << ',';
        if (!r.available) {
            os << ",,,,,plane unavailable\n";
            continue;
        }
        if (r.lead) {
            os << r.lead->avgLead << ',' << r.lead->medianLead << ',' << r.lead->maxLead;
        } else {
            os << ",,";
        }
        os << ',';
        if (r.runs.avgRunLen) os << *r.runs.avgRunLen;
        os << ',' << r.runs.runCount << ',';
        if (!anyEvents) os << "no weak events";
        os << '\n';
    }
    return os.str();
}

std::string eventsCsv(const std::vector<WeakEvent>& events,
                      const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "node,startWindow,startTime,length,lead,detector,plane\n";
    for (const ComparisonRow& r : rows) {
        if (!r.available || !r.lead) continue;
        for (std::size_t i = 0; i < events.size() && i < r.lead->leads.size(); ++i) {
            const WeakEvent& ev = events[i];
            os << csvField(ev.node) << ',' << ev.startWindow << ',' << ev.startTime
               << ',' << (ev.endWindow - ev.startWindow + 1) << ',' << r.lead->leads[i]
               << ',' << r.method << ',' << r.plane << '\n';
        }
    }
    return os.str();
}

std::string leadBarChartSvg(const std::vector<ComparisonRow>& rows) {
    // groups: methods; one bar per plane within each group
    std::vector<std::string> methods, planes;
    std::map<std::pair<std::string, std::string>, double> leads;
    double maxLead = 1.0;
    for (const ComparisonRow& r : rows) {
        if (!r.available || !r.lead) continue;
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
        if (std::find(planes.begin(), planes.end(), r.plane) == planes.end())
            planes.push_back(r.plane);
        leads[{r.method, r.plane}] = r.lead->avgLead;
        maxLead = std::max(maxLead, r.lead->avgLead);
    }
    const int width = 560, height = 320, marginL = 50, marginB = 40, marginT = 30;
    const int plotW = width - marginL - 20, plotH = height - marginT - marginB;
    const char* palette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
       << "\" height=\"" << height << "\">\n";
    os << "<text x=\"" << width / 2
       << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">Average lead "
          "(windows) per plane and detector</text>\n";
    os << "<line x1=\"" << marginL << "\" y1=\"" << marginT + plotH << "\" x2=\""
       << marginL + plotW << "\" y2=\"" << marginT + plotH
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << marginL << "\" y1=\"" << marginT << "\" x2=\"" << marginL
       << "\" y2=\"" << marginT + plotH << "\" stroke=\"black\"/>\n";

    if (!methods.empty()) {
        const double groupW = static_cast<double>(plotW) / methods.size();
        const double barW = groupW / (planes.size() + 1);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            for (std::size_t pi = 0; pi < planes.size(); ++pi) {
                auto it = leads.find({methods[mi], planes[pi]});
                if (it == leads.end()) continue;
                double h = it->second / maxLead * plotH;
                double x = marginL + mi * groupW + (pi + 0.5) * barW;
                os << "<rect x=\"" << x << "\" y=\"" << marginT + plotH - h
                   << "\" width=\"" << barW * 0.9 << "\" height=\"" << h
                   << "\" fill=\"" << palette[pi % 5] << "\"/>\n";
                os << "<text x=\"" << x + barW * 0.45 << "\" y=\""
                   << marginT + plotH - h - 4
                   << "\" text-anchor=\"middle\" font-size=\"10\">" << it->second
                   << "</text>\n";
            }
            os << "<text x=\"" << marginL + (mi + 0.5) * groupW << "\" y=\""
               << marginT + plotH + 16 << "\" text-anchor=\"middle\" font-size=\"12\">"
               << methods[mi] << "</text>\n";
        }
        for (std::size_t pi = 0; pi < planes.size(); ++pi) {
            os << "<rect x=\"" << marginL + 8 + static_cast<int>(pi) * 90 << "\" y=\""
               << height - 16 << "\" width=\"10\" height=\"10\" fill=\""
               << palette[pi % 5] << "\"/>\n";
            os << "<text x=\"" << marginL + 22 + static_cast<int>(pi) * 90 << "\" y=\""
               << height - 7 << "\" font-size=\"11\">" << planes[pi] << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace gpuwatch
