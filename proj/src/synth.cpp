#include "gpuwatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/stats.hpp"
#include "gpuwatch/time_util.hpp"

namespace gpuwatch {

const char* regimeName(Regime r) {
    switch (r) {
        case Regime::nominal: return "nominal";
        case Regime::driftDominated: return "driftDominated";
        case Regime::detachment: return "detachment";
    }
    return "?";
}

Regime regimeFromName(const std::string& name) {
    if (name == "nominal") return Regime::nominal;
    if (name == "driftDominated" || name == "drift") return Regime::driftDominated;
    if (name == "detachment") return Regime::detachment;
    throw std::runtime_error("unknown regime: " + name);
}

namespace {

std::string nodeName(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "snode%02d", i);
    return buf;
}

std::int64_t alignToCadence(std::int64_t t, std::int64_t start, std::int64_t cadence) {
    return start + ((t - start) / cadence) * cadence;
}

std::vector<PlantedEvent> autoPlant(const ScenarioSpec& spec) {
    std::vector<PlantedEvent> events;
    if (spec.regime == Regime::nominal) return events;
    PlantedEvent ev;
    ev.node = nodeName(0);
    if (spec.regime == Regime::driftDominated) {
        ev.t0 = alignToCadence(
            spec.startTime + spec.durationSeconds * 8 / 10, spec.startTime, spec.cadence);
        ev.driftSlopePerWindow = spec.driftSlope;
        ev.driftOnset = ev.t0 - spec.driftOnsetWindows * spec.stride;
        if (spec.pipePrecursorWindows > 0)
            ev.pipePrecursorStart =
                ev.driftOnset - spec.pipePrecursorWindows * spec.stride;
    } else {
        ev.t0 = alignToCadence(
            spec.startTime + spec.durationSeconds * 6 / 10, spec.startTime, spec.cadence);
        for (int g = 0; g < spec.gpusPerNode; ++g) ev.detachedGpus.push_back(g);
    }
    events.push_back(std::move(ev));
    return events;
}

struct Row {
    std::string metric;
    std::string labels;
    double value;
};

}  // namespace

GeneratedScenario generate(const ScenarioSpec& spec, const std::string& outDir) {
    namespace fs = std::filesystem;
    fs::create_directories(outDir);

    GeneratedScenario out;
    out.events = spec.events.empty() ? autoPlant(spec) : spec.events;

    const std::int64_t leadIn =
        static_cast<std::int64_t>(spec.minLeadInWindows) * spec.stride;
    for (const PlantedEvent& ev : out.events) {
        if (ev.t0 - spec.startTime < leadIn ||
            ev.t0 >= spec.startTime + spec.durationSeconds)
            throw std::runtime_error(
                "planted t0 violates the clean lead-in requirement");
    }

    auto eventFor = [&](const std::string& node) -> const PlantedEvent* {
        for (const PlantedEvent& ev : out.events)
            if (ev.node == node) return &ev;
        return nullptr;
    };

    std::ostringstream tidy;
    tidy.precision(17);
    tidy << "timestamp,node,metric,labels,value\n";
    std::size_t rows = 0;

    for (int n = 0; n < spec.nodeCount; ++n) {
        const std::string node = nodeName(n);
        const PlantedEvent* ev = eventFor(node);
        std::mt19937_64 rng(splitmix64(spec.seed ^ fnv1a64(node)));
        std::normal_distribution<double> gauss(0.0, 1.0);

        for (std::int64_t t = spec.startTime; t < spec.startTime + spec.durationSeconds;
             t += spec.cadence) {
            std::vector<Row> emit;

            const bool detached = ev && !ev->detachedGpus.empty() && t >= ev->t0;
            const bool ramping = ev && ev->driftSlopePerWindow != 0.0 &&
                                 t >= ev->driftOnset && t < ev->t0;
            const bool precursor = ev && ev->pipePrecursorStart != 0 &&
                                   t >= ev->pipePrecursorStart && t < ev->t0;

            for (int g = 0; g < spec.gpusPerNode; ++g) {
                if (detached &&
                    std::find(ev->detachedGpus.begin(), ev->detachedGpus.end(), g) !=
                        ev->detachedGpus.end())
                    continue;
                const std::string gl = "gpu=" + std::to_string(g);
                double memTemp = 40.0 + 2.0 * g + spec.memTempNoise * gauss(rng);
                if (ramping && g == 0)
                    memTemp += ev->driftSlopePerWindow *
                               static_cast<double>(t - ev->driftOnset) /
                               static_cast<double>(spec.stride);
                emit.push_back({"DCGM_FI_DEV_MEMORY_TEMP", gl, memTemp});
                emit.push_back({"DCGM_FI_DEV_GPU_TEMP", gl, 55.0 + 2.0 * g});
                emit.push_back({"DCGM_FI_DEV_POWER_USAGE", gl, 120.0 + 5.0 * g});
                emit.push_back({"DCGM_FI_DEV_GPU_UTIL", gl, 80.0});
                emit.push_back({"DCGM_FI_DEV_SM_CLOCK", gl, 1410.0});
            }

            emit.push_back(
                {"ambient_temperature", "", 25.0 + spec.ambientNoise * gauss(rng)});
            double duration = 0.05 + std::abs(spec.pipeNoise * gauss(rng));
            if (precursor) duration += 2.0;
            emit.push_back({"scrape_duration_seconds", "", duration});
            emit.push_back({"scrape_success", "", 1.0});
            emit.push_back({"node_load1", "", 4.0 + spec.loadNoise * gauss(rng)});
            emit.push_back({"node_load5", "", 4.0 + 0.5 * spec.loadNoise * gauss(rng)});
            if (!precursor)  // pipeline degradation also drops a node family
                emit.push_back(
                    {"node_load15", "", 4.0 + 0.25 * spec.loadNoise * gauss(rng)});
            emit.push_back({"node_memory_MemAvailable_bytes", "",
                            2e11 + spec.memAvailableNoise * gauss(rng)});
            emit.push_back({"scrape_samples_scraped", "",
                            static_cast<double>(emit.size() + 1)});

            for (const Row& r : emit) {
                tidy << t << ',' << node << ',' << r.metric << ',' << r.labels << ','
                     << r.value << '\n';
                ++rows;
            }
        }
    }
    out.rowsEmitted = rows;

    // scheduler transitions and operator catalog
    std::ostringstream trans, cat;
    trans << "node,timestamp,fromState,toState\n";
    cat << "node,date,description,category,beforeHours,afterHours\n";
    for (const PlantedEvent& ev : out.events) {
        // some unremarkable activity well before the event
        trans << ev.node << ',' << spec.startTime + 3600 << ",idle,alloc\n";
        std::int64_t drainTime = ev.t0;
        std::string category = "gpu thermal drift";
        std::string description = "memory temperature ramp before drain";
        if (!ev.detachedGpus.empty()) {
            drainTime = ev.t0 + spec.detectionDelay;
            category = "gpu fell off bus";
            description = "gpus dropped off bus";
        }
        trans << ev.node << ',' << drainTime << ",alloc,drain\n";
        cat << ev.node << ',' << formatDate(drainTime) << ',' << csvField(description)
            << ',' << csvField(category) << ",24,2\n";
    }

    namespace fsn = std::filesystem;
    out.archivePath = (fsn::path(outDir) / "tidy.csv").string();
    out.transitionsPath = (fsn::path(outDir) / "transitions.csv").string();
    out.catalogPath = (fsn::path(outDir) / "catalog.csv").string();
    out.groundTruthPath = (fsn::path(outDir) / "ground_truth.json").string();
    writeTextFile(out.archivePath, tidy.str());
    writeTextFile(out.transitionsPath, trans.str());
    writeTextFile(out.catalogPath, cat.str());

    nlohmann::json gt;
    gt["spec"] = nlohmann::json::parse(scenarioSpecJson(spec));
    gt["rowsEmitted"] = rows;
    gt["events"] = nlohmann::json::array();
    for (const PlantedEvent& ev : out.events) {
        nlohmann::json e;
        e["node"] = ev.node;
        e["t0"] = ev.t0;
        e["driftSlopePerWindow"] = ev.driftSlopePerWindow;
        e["driftOnset"] = ev.driftOnset;
        e["pipePrecursorStart"] = ev.pipePrecursorStart;
        e["detachedGpus"] = ev.detachedGpus;
        gt["events"].push_back(e);
    }
    writeTextFile(out.groundTruthPath, gt.dump(2) + "\n");
    return out;
}

std::string scenarioSpecJson(const ScenarioSpec& spec) {
    nlohmann::json j;
    j["regime"] = regimeName(spec.regime);
    j["nodeCount"] = spec.nodeCount;
    j["gpusPerNode"] = spec.gpusPerNode;
    j["startTime"] = spec.startTime;
    j["durationSeconds"] = spec.durationSeconds;
    j["cadence"] = spec.cadence;
    j["stride"] = spec.stride;
    j["seed"] = spec.seed;
    j["memTempNoise"] = spec.memTempNoise;
    j["ambientNoise"] = spec.ambientNoise;
    j["pipeNoise"] = spec.pipeNoise;
    j["loadNoise"] = spec.loadNoise;
    j["memAvailableNoise"] = spec.memAvailableNoise;
    j["detectionDelay"] = spec.detectionDelay;
    j["driftOnsetWindows"] = spec.driftOnsetWindows;
    j["driftSlope"] = spec.driftSlope;
    j["pipePrecursorWindows"] = spec.pipePrecursorWindows;
    return j.dump();
}

}  // namespace gpuwatch
