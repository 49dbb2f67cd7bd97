"""Metrics in pixel space and the evaluation/ablation harness."""
from .harness import (
    AblationTable,
    Aggregate,
    MetricsReport,
    aggregate,
    evaluate,
    round_half_up,
    run_ablation,
    variant_config,
)
from .metrics import box_centers, c_mse, cf_mse, horizon_steps, mse_boxes, rmse

__all__ = [
    "AblationTable", "Aggregate", "MetricsReport", "aggregate", "box_centers", "c_mse", "cf_mse",
    "evaluate", "horizon_steps", "mse_boxes", "rmse", "round_half_up", "run_ablation", "variant_config",
]
