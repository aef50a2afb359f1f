#include "gpuwatch/pipeline.hpp"

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gpuwatch/catalog.hpp"
#include "gpuwatch/csv.hpp"
#include "gpuwatch/detectors.hpp"
#include "gpuwatch/evaluation.hpp"
#include "gpuwatch/forensics.hpp"
#include "gpuwatch/ingest.hpp"
#include "gpuwatch/stats.hpp"
#include "gpuwatch/time_util.hpp"

namespace gpuwatch {

using nlohmann::json;

PipelineConfig configFromJson(const std::string& text) {
    json j = json::parse(text);
    if (j.contains("config")) j = j["config"];  // accept a whole manifest
    PipelineConfig c;
    c.archive = j.value("archive", c.archive);
    c.catalog = j.value("catalog", c.catalog);
    c.transitions = j.value("transitions", c.transitions);
    c.outDir = j.value("outDir", c.outDir);
    if (j.contains("slice")) {
        const json& s = j["slice"];
        c.slice.nodes = s.value("nodes", c.slice.nodes);
        c.slice.startTime = s.value("startTime", c.slice.startTime);
        c.slice.endTime = s.value("endTime", c.slice.endTime);
        c.slice.windowLength = s.value("windowLength", c.slice.windowLength);
        c.slice.stride = s.value("stride", c.slice.stride);
        c.slice.perNodeCap = s.value("perNodeCap", c.slice.perNodeCap);
        c.slice.seed = s.value("seed", c.slice.seed);
        c.slice.baselineHorizon = s.value("baselineHorizon", c.slice.baselineHorizon);
        c.slice.leadLookback = s.value("leadLookback", c.slice.leadLookback);
    }
    if (j.contains("metrics")) {
        const json& m = j["metrics"];
        c.metrics.memTempMetric = m.value("memTempMetric", c.metrics.memTempMetric);
        c.metrics.ambientMetric = m.value("ambientMetric", c.metrics.ambientMetric);
        c.metrics.gpuLabel = m.value("gpuLabel", c.metrics.gpuLabel);
        c.metrics.gpuCount = m.value("gpuCount", c.metrics.gpuCount);
        c.metrics.pipeMetrics = m.value("pipeMetrics", c.metrics.pipeMetrics);
        c.metrics.minSamplesPerWindow =
            m.value("minSamplesPerWindow", c.metrics.minSamplesPerWindow);
        c.metrics.warmupWindows = m.value("warmupWindows", c.metrics.warmupWindows);
        c.metrics.rollSlopeHorizon =
            m.value("rollSlopeHorizon", c.metrics.rollSlopeHorizon);
    }
    c.budget = j.value("budget", c.budget);
    c.smoothWindow = j.value("smoothWindow", c.smoothWindow);
    c.perNodeBudget = j.value("perNodeBudget", c.perNodeBudget);
    c.ifTrees = j.value("ifTrees", c.ifTrees);
    c.ifSubsample = j.value("ifSubsample", c.ifSubsample);
    c.ocsvmNu = j.value("ocsvmNu", c.ocsvmNu);
    c.ocsvmGamma = j.value("ocsvmGamma", c.ocsvmGamma);
    c.ocsvmTol = j.value("ocsvmTol", c.ocsvmTol);
    c.ocsvmMaxTrain = j.value("ocsvmMaxTrain", c.ocsvmMaxTrain);
    c.weakQuantile = j.value("weakQuantile", c.weakQuantile);
    c.minRun = j.value("minRun", c.minRun);
    c.pooledQuantile = j.value("pooledQuantile", c.pooledQuantile);
    c.includeMisses = j.value("includeMisses", c.includeMisses);
    c.scrapeInterval = j.value("scrapeInterval", c.scrapeInterval);
    c.dropoutThreshold = j.value("dropoutThreshold", c.dropoutThreshold);
    c.baselineMinutes = j.value("baselineMinutes", c.baselineMinutes);
    c.adjacentMinutes = j.value("adjacentMinutes", c.adjacentMinutes);
    c.adjacentAfter = j.value("adjacentAfter", c.adjacentAfter);
    c.minLongSamples = j.value("minLongSamples", c.minLongSamples);
    c.runTimestamp = j.value("runTimestamp", c.runTimestamp);
    return c;
}

namespace {

json configJson(const PipelineConfig& c) {
    json j;
    j["archive"] = c.archive;
    j["catalog"] = c.catalog;
    j["transitions"] = c.transitions;
    j["outDir"] = c.outDir;
    json s;
    s["nodes"] = c.slice.nodes;
    s["startTime"] = c.slice.startTime;
    s["endTime"] = c.slice.endTime;
    s["windowLength"] = c.slice.windowLength;
    s["stride"] = c.slice.stride;
    s["perNodeCap"] = c.slice.perNodeCap;
    s["seed"] = c.slice.seed;
    s["baselineHorizon"] = c.slice.baselineHorizon;
    s["leadLookback"] = c.slice.leadLookback;
    j["slice"] = s;
    json m;
    m["memTempMetric"] = c.metrics.memTempMetric;
    m["ambientMetric"] = c.metrics.ambientMetric;
    m["gpuLabel"] = c.metrics.gpuLabel;
    m["gpuCount"] = c.metrics.gpuCount;
    m["pipeMetrics"] = c.metrics.pipeMetrics;
    m["minSamplesPerWindow"] = c.metrics.minSamplesPerWindow;
    m["warmupWindows"] = c.metrics.warmupWindows;
    m["rollSlopeHorizon"] = c.metrics.rollSlopeHorizon;
    j["metrics"] = m;
    j["budget"] = c.budget;
    j["smoothWindow"] = c.smoothWindow;
    j["perNodeBudget"] = c.perNodeBudget;
    j["ifTrees"] = c.ifTrees;
    j["ifSubsample"] = c.ifSubsample;
    j["ocsvmNu"] = c.ocsvmNu;
    j["ocsvmGamma"] = c.ocsvmGamma;
    j["ocsvmTol"] = c.ocsvmTol;
    j["ocsvmMaxTrain"] = c.ocsvmMaxTrain;
    j["weakQuantile"] = c.weakQuantile;
    j["minRun"] = c.minRun;
    j["pooledQuantile"] = c.pooledQuantile;
    j["includeMisses"] = c.includeMisses;
    j["scrapeInterval"] = c.scrapeInterval;
    j["dropoutThreshold"] = c.dropoutThreshold;
    j["baselineMinutes"] = c.baselineMinutes;
    j["adjacentMinutes"] = c.adjacentMinutes;
    j["adjacentAfter"] = c.adjacentAfter;
    j["minLongSamples"] = c.minLongSamples;
    j["runTimestamp"] = c.runTimestamp;
    return j;
}

std::string hexDigest(std::uint64_t d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(d));
    return buf;
}

std::uint64_t fileDigest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

struct RunState {
    PipelineConfig cfg;
    json manifest;
    std::vector<std::string> files;

    // lazily computed artifacts
    std::vector<MetricSample> samples;
    ParseDiagnostics archiveDiag;
    bool samplesLoaded = false;
    std::map<std::string, NodeSeries> series;
    std::vector<std::string> warnings;
    bool seriesBuilt = false;

    WindowFeatureMatrix matrix;       // capped
    SignatureMatrix signature;        // capped, aligned with matrix rows
    SignatureMatrix fullSignature;    // every window, weak events come from here
    PlaneSet planes;
    bool featuresBuilt = false;

    std::vector<ScoreSeries> scores;
    bool detected = false;
};

std::string outPath(RunState& st, const std::string& name) {
    namespace fs = std::filesystem;
    return (fs::path(st.cfg.outDir) / name).string();
}

void emitFile(RunState& st, const std::string& name, const std::string& content) {
    const std::string path = outPath(st, name);
    writeTextFile(path, content);
    st.files.push_back(path);
}

void initManifest(RunState& st, const std::string& stage) {
    std::filesystem::create_directories(st.cfg.outDir);
    if (st.cfg.runTimestamp.empty())
        st.cfg.runTimestamp = formatDateTime(static_cast<std::int64_t>(std::time(nullptr)));
    st.manifest["tool"] = "gpuwatch";
    st.manifest["version"] = "0.1.0";
    st.manifest["stage"] = stage;
    st.manifest["runTimestamp"] = st.cfg.runTimestamp;
    st.manifest["inputs"] = json::object();
}

void recordInput(RunState& st, const std::string& role, const std::string& path) {
    if (path.empty()) return;
    json e;
    e["path"] = path;
    e["fnv1a64"] = hexDigest(fileDigest(path));
    st.manifest["inputs"][role] = e;
}

void loadSamples(RunState& st) {
    if (st.samplesLoaded) return;
    if (st.cfg.archive.empty()) throw std::runtime_error("no archive configured");
    recordInput(st, "archive", st.cfg.archive);
    st.samples = parseArchive(st.cfg.archive, st.archiveDiag);
    st.samplesLoaded = true;
    json d;
    d["totalRows"] = st.archiveDiag.totalRows;
    d["malformed"] = st.archiveDiag.malformed;
    d["duplicates"] = st.archiveDiag.duplicates;
    st.manifest["archiveDiagnostics"] = d;
}

void resolveSlice(RunState& st) {
    if (st.cfg.slice.startTime != 0 || st.cfg.slice.endTime != 0) return;
    std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
    for (const MetricSample& s : st.samples) {
        lo = std::min(lo, s.timestamp);
        hi = std::max(hi, s.timestamp);
    }
    if (lo > hi) throw std::runtime_error("archive holds no usable samples");
    st.cfg.slice.startTime = lo;
    st.cfg.slice.endTime = hi;
}

void buildSeries(RunState& st) {
    if (st.seriesBuilt) return;
    loadSamples(st);
    resolveSlice(st);
    st.series = buildNodeSeries(st.samples, st.cfg.slice, &st.warnings);
    st.seriesBuilt = true;
}

void buildFeatures(RunState& st) {
    if (st.featuresBuilt) return;
    buildSeries(st);
    WindowFeatureMatrix full = aggregateWindows(st.series, st.cfg.slice, st.cfg.metrics);
    SignatureMatrix fullSig = buildSignature(full, st.cfg.slice, st.cfg.metrics);

    std::map<std::string, std::vector<std::size_t>> windowsPerNode;
    for (const WindowRow& r : full.rows) windowsPerNode[r.node].push_back(r.index);
    auto keep = sampleWindows(windowsPerNode, st.cfg.slice);
    st.matrix = selectRows(full, keep);
    st.fullSignature = std::move(fullSig);
    st.signature = selectSignatureRows(st.fullSignature, keep);
    st.planes = assemblePlanes(st.matrix, st.signature, st.cfg.metrics);
    st.featuresBuilt = true;

    json av = json::array();
    for (const AvailabilityEntry& e : st.planes.availability) {
        json a;
        a["plane"] = e.plane;
        a["available"] = e.available;
        a["columns"] = e.columnCount;
        av.push_back(a);
    }
    st.manifest["availability"] = av;
    st.manifest["signatureFull"] = st.signature.full;
}

std::vector<const PlaneMatrix*> availablePlanes(RunState& st) {
    std::vector<const PlaneMatrix*> out;
    const PlaneMatrix* all[] = {&st.planes.gpu, &st.planes.pipe, &st.planes.os,
                                &st.planes.joint};
    for (const PlaneMatrix* p : all) {
        bool ok = false;
        for (const AvailabilityEntry& e : st.planes.availability)
            if (e.plane == p->name && e.available) ok = true;
        if (ok) out.push_back(p);
    }
    return out;
}

void runDetection(RunState& st) {
    if (st.detected) return;
    buildFeatures(st);
    json thresholds = json::object();
    for (const PlaneMatrix* plane : availablePlanes(st)) {
        WindowFeatureMatrix tmp;
        tmp.rows = plane->rows;
        tmp.cols = plane->cols;
        RobustScaler scaler = fitRobustScaler(tmp);
        DenseMatrix dense = denseStandardized(*plane, scaler);

        std::vector<ScoreSeries> batch;
        batch.push_back(scoreRobustZ(*plane, scaler));

        if (dense.nRows >= 2) {
            ScoreSeries ifs;
            ifs.detector = "iforest";
            ifs.plane = plane->name;
            ifs.rows = plane->rows;
            IsolationForestModel forest = trainIsolationForest(
                dense, st.cfg.ifTrees, st.cfg.ifSubsample, st.cfg.slice.seed);
            ifs.raw = scoreIsolationForest(forest, dense);
            batch.push_back(std::move(ifs));

            ScoreSeries svm;
            svm.detector = "ocsvm";
            svm.plane = plane->name;
            svm.rows = plane->rows;
            OneClassSvmParams params;
            params.nu = st.cfg.ocsvmNu;
            params.gamma = st.cfg.ocsvmGamma;
            params.maxTrain = st.cfg.ocsvmMaxTrain;
            params.tolerance = st.cfg.ocsvmTol;
            params.seed = st.cfg.slice.seed;
            OneClassSvmModel model = trainOneClassSvm(dense, params);
            svm.raw = scoreOneClassSvm(model, dense);
            batch.push_back(std::move(svm));
        }

        json planeThresholds = json::object();
        for (ScoreSeries& s : batch) {
            smoothScores(s, st.cfg.smoothWindow);
            applyBudget(s, st.cfg.budget, st.cfg.perNodeBudget);
            json t;
            if (st.cfg.perNodeBudget) {
                json per = json::object();
                for (const auto& [node, thr] : s.perNodeThresholds)
                    per[node] = isMissing(thr) ? json() : json(thr);
                t["perNode"] = per;
            } else {
                t["global"] = isMissing(s.threshold) ? json() : json(s.threshold);
            }
            t["degenerate"] = s.degenerate;
            planeThresholds[s.detector] = t;
            st.scores.push_back(std::move(s));
        }
        thresholds[plane->name] = planeThresholds;
    }
    st.manifest["thresholds"] = thresholds;
    st.detected = true;
}

void finishManifest(RunState& st, StageResult& out) {
    st.manifest["config"] = configJson(st.cfg);
    if (!st.warnings.empty()) st.manifest["warnings"] = st.warnings;
    json files = json::array();
    for (const std::string& f : st.files) files.push_back(f);
    st.manifest["outputs"] = files;
    out.manifestJson = st.manifest.dump(2) + "\n";
    const std::string path = outPath(st, "manifest.json");
    writeTextFile(path, out.manifestJson);
    st.files.push_back(path);
    out.files = st.files;
}

std::string disappearanceCsv(
    const std::vector<std::pair<ForensicSummary, DisappearanceReport>>& reports) {
    std::ostringstream os;
    os << "node,t0,metric,status,gpusLost\n";
    for (const auto& [summary, rep] : reports) {
        for (const auto& [metric, status] : rep.metricStatus) {
            os << csvField(summary.node) << ',' << summary.t0 << ','
               << csvField(metric) << ',' << status << ',';
            auto it = rep.partialGpuLoss.find(metric);
            if (it != rep.partialGpuLoss.end()) {
                std::string joined;
                for (const std::string& g : it->second) {
                    if (!joined.empty()) joined += ';';
                    joined += g;
                }
                os << csvField(joined);
            }
            os << '\n';
        }
    }
    return os.str();
}

std::vector<StateTransition> loadTransitions(RunState& st) {
    std::vector<StateTransition> trans;
    if (!st.cfg.transitions.empty()) {
        recordInput(st, "transitions", st.cfg.transitions);
        ParseDiagnostics diag;
        trans = parseTransitions(st.cfg.transitions, diag);
    } else {
        loadSamples(st);
        trans = transitionsFromSamples(st.samples);
    }
    std::stable_sort(trans.begin(), trans.end(),
                     [](const StateTransition& a, const StateTransition& b) {
                         return a.timestamp < b.timestamp;
                     });
    return trans;
}

std::vector<IncidentRecord> refineAll(RunState& st) {
    if (st.cfg.catalog.empty()) throw std::runtime_error("no catalog configured");
    recordInput(st, "catalog", st.cfg.catalog);
    ParseDiagnostics diag;
    std::vector<IncidentRecord> records = parseCatalog(st.cfg.catalog, diag);
    std::vector<StateTransition> trans = loadTransitions(st);
    std::vector<IncidentRecord> out;
    out.reserve(records.size());
    for (const IncidentRecord& r : records) out.push_back(refineIncidentTime(r, trans));
    json c;
    c["incidents"] = records.size();
    std::size_t kept = 0;
    for (const IncidentRecord& r : out)
        if (!r.discarded) ++kept;
    c["refined"] = kept;
    c["discarded"] = records.size() - kept;
    st.manifest["catalogSummary"] = c;
    return out;
}

void forensicsStage(RunState& st) {
    loadSamples(st);
    std::vector<IncidentRecord> refined = refineAll(st);

    std::vector<std::tuple<IncidentRecord, std::optional<AlignmentResult>, std::string>>
        alignments;
    std::vector<ForensicSummary> summaries;
    std::vector<std::pair<ForensicSummary, DisappearanceReport>> reports;

    for (const IncidentRecord& rec : refined) {
        if (rec.discarded || !rec.refinedT0) continue;
        SliceSpec window;
        window.nodes = {rec.node};
        window.startTime = rec.collectStart();
        window.endTime = rec.collectEnd();
        auto perNode = buildNodeSeries(st.samples, window);
        auto it = perNode.find(rec.node);
        if (it == perNode.end()) {
            alignments.emplace_back(rec, std::nullopt, st.cfg.archive);
            continue;
        }
        auto aligned = alignScrapeCountDrop(it->second, rec, st.cfg.scrapeInterval,
                                            st.cfg.dropoutThreshold);
        alignments.emplace_back(rec, aligned, st.cfg.archive);
        if (!aligned) continue;
        ForensicSummary summary = rankShifts(
            it->second, aligned->t0Used, rec.category, st.cfg.baselineMinutes,
            st.cfg.adjacentMinutes, !st.cfg.adjacentAfter, st.cfg.minLongSamples);
        DisappearanceReport rep = detectDisappearance(
            it->second, aligned->t0Used, st.cfg.minLongSamples,
            2 * st.cfg.dropoutThreshold, st.cfg.metrics.gpuLabel);
        reports.emplace_back(summary, std::move(rep));
        summaries.push_back(std::move(summary));
    }

    json a;
    a["incidents"] = refined.size();
    a["aligned"] = summaries.size();
    st.manifest["alignmentSummary"] = a;

    emitFile(st, "refined_catalog.csv", refinedCatalogCsv(refined));
    emitFile(st, "alignment.csv", alignmentCsv(alignments));
    emitFile(st, "forensic_summary.csv", forensicSummaryCsv(summaries));
    emitFile(st, "disappearance.csv", disappearanceCsv(reports));
}

void evaluateStage(RunState& st) {
    runDetection(st);
    std::vector<WeakEvent> events = extractWeakEvents(
        st.fullSignature, st.cfg.weakQuantile, st.cfg.minRun, st.cfg.pooledQuantile);
    st.manifest["weakEvents"] = events.size();

    std::vector<ComparisonRow> rows;
    for (const ScoreSeries& s : st.scores) {
        ComparisonRow row;
        row.plane = s.plane;
        row.method = s.detector;
        row.runs = alertRunStats(s);
        if (!events.empty())
            row.lead = computeLeadTime(events, s, st.cfg.slice.leadLookback,
                                       st.cfg.includeMisses);
        rows.push_back(std::move(row));
    }
    for (const AvailabilityEntry& e : st.planes.availability) {
        if (e.available) continue;
        for (const char* det : {"zscore", "iforest", "ocsvm"}) {
            ComparisonRow row;
            row.plane = e.plane;
            row.method = det;
            row.available = false;
            rows.push_back(std::move(row));
        }
    }

    emitFile(st, "scores.csv", scoresCsv(st.scores));
    emitFile(st, "report.csv", comparisonCsv(rows, !events.empty()));
    emitFile(st, "events.csv", eventsCsv(events, rows));
    emitFile(st, "lead_avg.svg", leadBarChartSvg(rows));
}

}  // namespace

std::string configToJson(const PipelineConfig& cfg) {
    return configJson(cfg).dump(2) + "\n";
}

StageResult runIngestStats(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "ingest-stats");
    buildSeries(st);
    std::map<std::string, GapStats> stats;
    json nodes = json::object();
    for (const auto& [node, series] : st.series) {
        stats[node] = computeGapStats(series);
        json n;
        n["samples"] = series.timeline.size();
        n["columns"] = series.columns.size();
        n["nativeInterval"] = series.nativeInterval;
        nodes[node] = n;
    }
    st.manifest["nodes"] = nodes;
    emitFile(st, "gap_stats.csv", gapStatsCsv(st.series, stats));
    StageResult out;
    finishManifest(st, out);
    return out;
}

StageResult runRefineCatalog(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "refine-catalog");
    std::vector<IncidentRecord> refined = refineAll(st);
    emitFile(st, "refined_catalog.csv", refinedCatalogCsv(refined));
    StageResult out;
    finishManifest(st, out);
    return out;
}

StageResult runFeatures(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "features");
    buildFeatures(st);
    emitFile(st, "features.csv", featureMatrixCsv(st.matrix));
    emitFile(st, "features_mask.csv", featureMaskCsv(st.matrix));
    emitFile(st, "availability.csv",
             availabilityCsv("slice", st.planes.availability));
    StageResult out;
    finishManifest(st, out);
    return out;
}

StageResult runDetect(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "detect");
    runDetection(st);
    emitFile(st, "scores.csv", scoresCsv(st.scores));
    StageResult out;
    finishManifest(st, out);
    return out;
}

StageResult runEvaluate(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "evaluate");
    evaluateStage(st);
    StageResult out;
    finishManifest(st, out);
    return out;
}

StageResult runForensics(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "forensics");
    forensicsStage(st);
    StageResult out;
    finishManifest(st, out);
    return out;
}

StageResult runAll(const PipelineConfig& cfg) {
    RunState st;
    st.cfg = cfg;
    initManifest(st, "all");

    buildSeries(st);
    std::map<std::string, GapStats> stats;
    for (const auto& [node, series] : st.series) stats[node] = computeGapStats(series);
    emitFile(st, "gap_stats.csv", gapStatsCsv(st.series, stats));

    buildFeatures(st);
    emitFile(st, "features.csv", featureMatrixCsv(st.matrix));
    emitFile(st, "features_mask.csv", featureMaskCsv(st.matrix));
    emitFile(st, "availability.csv",
             availabilityCsv("slice", st.planes.availability));

    evaluateStage(st);
    if (!st.cfg.catalog.empty()) forensicsStage(st);

    StageResult out;
    finishManifest(st, out);
    return out;
}

}  // namespace gpuwatch
