#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpuwatch/ingest.hpp"
#include "gpuwatch/types.hpp"

namespace gpuwatch {

struct IncidentRecord {
    std::string node;
    std::int64_t catalogDate = 0;  // UTC midnight of the logged day
    std::string description;
    std::string category;
    double beforeHours = 0.0;
    double afterHours = 0.0;

    std::optional<std::int64_t> refinedT0;
    bool discarded = false;
    bool ambiguousTie = false;  // two qualifying transitions shared a timestamp

    std::int64_t collectStart() const {
        return refinedT0 ? *refinedT0 - static_cast<std::int64_t>(beforeHours * 3600.0) : 0;
    }
    std::int64_t collectEnd() const {
        return refinedT0 ? *refinedT0 + static_cast<std::int64_t>(afterHours * 3600.0) : 0;
    }
};

struct StateTransition {
    std::string node;
    std::int64_t timestamp = 0;
    std::string fromState;
    std::string toState;
};

// Catalog CSV header: node,date,description,category,beforeHours,afterHours
std::vector<IncidentRecord> parseCatalog(const std::string& path,
                                         ParseDiagnostics& diag);

// Transitions CSV header: node,timestamp,fromState,toState
std::vector<StateTransition> parseTransitions(const std::string& path,
                                              ParseDiagnostics& diag);

// Derives transitions from a state-encoding metric family in a tidy archive:
// rows of `metricName` whose labels carry `state=<name>` with value 1 mark the
// node's state at that timestamp; consecutive state changes become transitions.
std::vector<StateTransition> transitionsFromSamples(
    const std::vector<MetricSample>& samples,
    const std::string& metricName = "slurm_node_state");

bool isOkState(const std::string& state);
bool isFailureState(const std::string& state);

// Applies the same-day / prior-3-day refinement rules. `transitions` must be
// sorted by timestamp. Pure: returns an updated copy.
IncidentRecord refineIncidentTime(const IncidentRecord& record,
                                  const std::vector<StateTransition>& transitions);

// Refined-catalog CSV: adds refinedT0,collectStart,collectEnd,status columns.
std::string refinedCatalogCsv(const std::vector<IncidentRecord>& records);

}  // namespace gpuwatch
