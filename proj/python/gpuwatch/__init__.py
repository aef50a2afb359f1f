from ._core import (
    apply_budget,
    config_template,
    extract_weak_events,
    generate_scenario,
    isolation_forest_scores,
    ocsvm_scores,
    robust_center_scale,
    run_pipeline,
)

__all__ = [
    "apply_budget",
    "config_template",
    "extract_weak_events",
    "generate_scenario",
    "isolation_forest_scores",
    "ocsvm_scores",
    "robust_center_scale",
    "run_pipeline",
]
