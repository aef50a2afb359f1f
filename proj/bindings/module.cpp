#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gpuwatch/detectors.hpp"
#include "gpuwatch/evaluation.hpp"
#include "gpuwatch/pipeline.hpp"
#include "gpuwatch/stats.hpp"
#include "gpuwatch/synth.hpp"

namespace py = pybind11;
using namespace gpuwatch;

namespace {

DenseMatrix toDense(const std::vector<std::vector<double>>& rows) {
    DenseMatrix m;
    m.nRows = rows.size();
    m.nCols = rows.empty() ? 0 : rows[0].size();
    m.data.reserve(m.nRows * m.nCols);
    for (const auto& r : rows) {
        if (r.size() != m.nCols)
            throw std::invalid_argument("rows must share one width");
        m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "core bindings for the gpuwatch toolkit";

    mod.def(
        "generate_scenario",
        [](const std::string& regime, const std::string& outDir, std::uint64_t seed,
           int nodeCount, std::int64_t durationSeconds, int pipePrecursorWindows) {
            ScenarioSpec spec;
            spec.regime = regimeFromName(regime);
            spec.seed = seed;
            spec.nodeCount = nodeCount;
            spec.durationSeconds = durationSeconds;
            spec.pipePrecursorWindows = pipePrecursorWindows;
            GeneratedScenario gen = generate(spec, outDir);
            py::dict d;
            d["archive"] = gen.archivePath;
            d["transitions"] = gen.transitionsPath;
            d["catalog"] = gen.catalogPath;
            d["ground_truth"] = gen.groundTruthPath;
            d["rows"] = gen.rowsEmitted;
            return d;
        },
        py::arg("regime"), py::arg("out_dir"), py::arg("seed") = 0,
        py::arg("node_count") = 1, py::arg("duration_seconds") = 7 * 86400,
        py::arg("pipe_precursor_windows") = 0);

    mod.def(
        "run_pipeline",
        [](const std::string& configJson) {
            StageResult res = runAll(configFromJson(configJson));
            py::dict d;
            d["files"] = res.files;
            d["manifest"] = res.manifestJson;
            return d;
        },
        py::arg("config_json"));

    mod.def("config_template", [] { return configToJson(PipelineConfig{}); });

    mod.def(
        "robust_center_scale",
        [](std::vector<double> values) {
            const double c = median(values);
            std::vector<double> dev;
            dev.reserve(values.size());
            for (double v : values) dev.push_back(std::abs(v - c));
            double s = kMadConsistency * median(std::move(dev));
            if (s == 0.0) s = std::max(populationStd(values), 1e-9);
            return py::make_tuple(c, s);
        },
        py::arg("values"));

    mod.def(
        "apply_budget",
        [](const std::vector<double>& smoothed, double budget) {
            ScoreSeries s;
            s.rows.resize(smoothed.size());
            s.raw = smoothed;
            s.smoothed = smoothed;
            applyBudget(s, budget);
            std::vector<int> alerts(s.alert.begin(), s.alert.end());
            return py::make_tuple(s.threshold, alerts);
        },
        py::arg("smoothed"), py::arg("budget") = 0.01);

    mod.def(
        "extract_weak_events",
        [](const std::vector<double>& scalar, double q, int minRun) {
            SignatureMatrix sig;
            sig.rows.resize(scalar.size());
            for (std::size_t i = 0; i < scalar.size(); ++i) {
                sig.rows[i].node = "node";
                sig.rows[i].index = i;
            }
            sig.scalar = scalar;
            std::vector<py::dict> out;
            for (const WeakEvent& e : extractWeakEvents(sig, q, minRun)) {
                py::dict d;
                d["start"] = e.startWindow;
                d["end"] = e.endWindow;
                d["peak"] = e.peak;
                d["threshold"] = e.threshold;
                out.push_back(std::move(d));
            }
            return out;
        },
        py::arg("scalar"), py::arg("q") = 0.99, py::arg("min_run") = 3);

    mod.def(
        "isolation_forest_scores",
        [](const std::vector<std::vector<double>>& rows, std::size_t trees,
           std::size_t subsample, std::uint64_t seed) {
            DenseMatrix m = toDense(rows);
            IsolationForestModel model = trainIsolationForest(m, trees, subsample, seed);
            return scoreIsolationForest(model, m);
        },
        py::arg("rows"), py::arg("trees") = 100, py::arg("subsample") = 256,
        py::arg("seed") = 0);

    mod.def(
        "ocsvm_scores",
        [](const std::vector<std::vector<double>>& rows, double nu, double gamma,
           std::uint64_t seed) {
            DenseMatrix m = toDense(rows);
            OneClassSvmParams params;
            params.nu = nu;
            params.gamma = gamma;
            params.seed = seed;
            OneClassSvmModel model = trainOneClassSvm(m, params);
            return scoreOneClassSvm(model, m);
        },
        py::arg("rows"), py::arg("nu") = 0.05, py::arg("gamma") = 0.0,
        py::arg("seed") = 0);
}
