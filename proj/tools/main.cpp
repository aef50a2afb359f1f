#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gpuwatch/pipeline.hpp"
#include "gpuwatch/synth.hpp"

namespace {

std::string readFileOrThrow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --config values seed the defaults; explicit flags override them.
gpuwatch::PipelineConfig baseConfig(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        std::string a = argv[i];
        if (a == "--config" || a == "-c")
            return gpuwatch::configFromJson(readFileOrThrow(argv[i + 1]));
    }
    return {};
}

void addPipelineOptions(CLI::App* cmd, gpuwatch::PipelineConfig& cfg,
                        std::string& scenario) {
    std::string ignored;
    cmd->add_option("-c,--config", ignored, "JSON config or manifest to start from");
    cmd->add_option("--scenario", scenario,
                    "generate a synthetic scenario of this regime and analyze it");
    cmd->add_option("--archive", cfg.archive, "tidy telemetry archive (.csv or .csv.bz2)");
    cmd->add_option("--catalog", cfg.catalog, "operator incident catalog CSV");
    cmd->add_option("--transitions", cfg.transitions,
                    "scheduler state transitions CSV (default: derived from the archive)");
    cmd->add_option("-o,--out", cfg.outDir, "output directory");
    cmd->add_option("--nodes", cfg.slice.nodes, "restrict to these nodes");
    cmd->add_option("--start", cfg.slice.startTime, "slice start (unix seconds)");
    cmd->add_option("--end", cfg.slice.endTime, "slice end (unix seconds)");
    cmd->add_option("--window", cfg.slice.windowLength, "window length w (seconds)");
    cmd->add_option("--stride", cfg.slice.stride, "window stride s (seconds)");
    cmd->add_option("--cap", cfg.slice.perNodeCap, "per-node window cap");
    cmd->add_option("--seed", cfg.slice.seed, "base RNG seed");
    cmd->add_option("--baseline-horizon", cfg.slice.baselineHorizon,
                    "drift baseline horizon (windows)");
    cmd->add_option("--lookback", cfg.slice.leadLookback, "lead-time lookback (windows)");
    cmd->add_option("--budget", cfg.budget, "alert budget (fraction of windows)");
    cmd->add_option("--smooth", cfg.smoothWindow, "score smoothing window");
    cmd->add_flag("--per-node-budget", cfg.perNodeBudget,
                  "fit the budget threshold per node");
    cmd->add_option("--trees", cfg.ifTrees, "isolation forest trees");
    cmd->add_option("--subsample", cfg.ifSubsample, "isolation forest subsample size");
    cmd->add_option("--nu", cfg.ocsvmNu, "one-class SVM nu");
    cmd->add_option("--gamma", cfg.ocsvmGamma, "RBF gamma (<=0: scale convention)");
    cmd->add_option("--svm-max-train", cfg.ocsvmMaxTrain, "one-class SVM training cap");
    cmd->add_option("--quantile", cfg.weakQuantile, "weak-event signature quantile");
    cmd->add_option("--min-run", cfg.minRun, "weak-event minimum run length");
    cmd->add_flag("--pooled-quantile", cfg.pooledQuantile,
                  "pool all nodes for the weak-event quantile");
    cmd->add_flag("!--exclude-misses", cfg.includeMisses,
                  "drop undetected events from lead aggregates");
    cmd->add_option("--scrape-interval", cfg.scrapeInterval, "scrape interval (seconds)");
    cmd->add_option("--dropout", cfg.dropoutThreshold, "dropout threshold (seconds)");
    cmd->add_option("--baseline", cfg.baselineMinutes, "forensic baseline (minutes)");
    cmd->add_option("--adjacent", cfg.adjacentMinutes, "forensic adjacent interval (minutes)");
    cmd->add_flag("--adjacent-after", cfg.adjacentAfter,
                  "compare the post-t0 side instead of the pre-t0 side");
    cmd->add_option("--run-timestamp", cfg.runTimestamp,
                    "fixed manifest timestamp (for reproducible reruns)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gpuwatch: early-warning analysis for GPU node telemetry"};
    app.require_subcommand(1);

    gpuwatch::PipelineConfig cfg;
    try {
        cfg = baseConfig(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    gpuwatch::StageResult (*stage)(const gpuwatch::PipelineConfig&) = nullptr;
    std::string scenario;
    for (auto [name, desc, fn] :
         {std::tuple{"ingest-stats", "parse the archive and report gap statistics",
                     &gpuwatch::runIngestStats},
          std::tuple{"refine-catalog", "refine incident times against state transitions",
                     &gpuwatch::runRefineCatalog},
          std::tuple{"features", "build windowed features and the drift signature",
                     &gpuwatch::runFeatures},
          std::tuple{"detect", "score windows with the three detectors",
                     &gpuwatch::runDetect},
          std::tuple{"evaluate", "weak events, lead times and the comparison table",
                     &gpuwatch::runEvaluate},
          std::tuple{"forensics", "align incidents and rank post-collapse shifts",
                     &gpuwatch::runForensics},
          std::tuple{"all", "full pipeline, end to end", &gpuwatch::runAll}}) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        addPipelineOptions(cmd, cfg, scenario);
        cmd->callback([&stage, fn] { stage = fn; });
    }

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scenario");
    gpuwatch::ScenarioSpec scen;
    std::string regimeName = "nominal";
    std::string synthOut = "out";
    synth->add_option("--regime", regimeName,
                      "nominal, driftDominated or detachment");
    synth->add_option("-o,--out", synthOut, "output directory");
    synth->add_option("--nodes", scen.nodeCount, "node count");
    synth->add_option("--gpus", scen.gpusPerNode, "GPUs per node");
    synth->add_option("--start", scen.startTime, "scenario start (unix seconds)");
    synth->add_option("--duration", scen.durationSeconds, "scenario length (seconds)");
    synth->add_option("--cadence", scen.cadence, "scrape cadence (seconds)");
    synth->add_option("--seed", scen.seed, "RNG seed");
    synth->add_option("--mem-temp-noise", scen.memTempNoise,
                      "memory temperature noise sigma");
    synth->add_option("--ambient-noise", scen.ambientNoise, "ambient noise sigma");
    synth->add_option("--drift-slope", scen.driftSlope, "ramp slope (degrees per window)");
    synth->add_option("--drift-onset-windows", scen.driftOnsetWindows,
                      "ramp length before t0 (windows)");
    synth->add_option("--pipe-precursor-windows", scen.pipePrecursorWindows,
                      "pipeline precursor before the ramp (windows)");
    synth->add_option("--detection-delay", scen.detectionDelay,
                      "scheduler drain lag after detachment (seconds)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            scen.regime = gpuwatch::regimeFromName(regimeName);
            gpuwatch::GeneratedScenario gen = gpuwatch::generate(scen, synthOut);
            std::printf("%s\n%s\n%s\n%s\n", gen.archivePath.c_str(),
                        gen.transitionsPath.c_str(), gen.catalogPath.c_str(),
                        gen.groundTruthPath.c_str());
            return 0;
        }
        if (!scenario.empty()) {
            gpuwatch::ScenarioSpec sp;
            sp.regime = gpuwatch::regimeFromName(scenario);
            sp.seed = cfg.slice.seed;
            gpuwatch::GeneratedScenario gen =
                gpuwatch::generate(sp, cfg.outDir + "/scenario");
            cfg.archive = gen.archivePath;
            cfg.catalog = gen.catalogPath;
            cfg.transitions = gen.transitionsPath;
        }
        gpuwatch::StageResult res = stage(cfg);
        for (const std::string& f : res.files) std::printf("%s\n", f.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
