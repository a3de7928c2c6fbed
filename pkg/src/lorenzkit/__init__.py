"""Numerical toolkit for a damped Lorenz-like flow: separatrix integration,
homoclinic-bifurcation scans, Poincare-map classification, and finite-time
Lyapunov analysis."""

from .integrate import (
    EventHit,
    EventSpec,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    eval_dense,
    integrate,
)
from .lyapunov import FtleResult, ftle, kaplan_yorke
from .model import (
    ConditionReport,
    LorenzParams,
    PathPoint,
    SaddleData,
    State,
    SystemParams,
    balance_V,
    balance_V_rate,
    check_conditions,
    equilibria,
    invert_path,
    jacobian,
    lorenz_to_lorenzlike,
    path_params,
    path_system,
    rhs,
    saddle_data,
    splus_stability_threshold,
    splus_stable,
    symmetry_image,
)
from .poincare import (
    ColoredGrid,
    GridImage,
    PointStatus,
    Section,
    SectionKind,
    TentMapResult,
    build_sections,
    half_frame,
    iterate_grid,
    map_global,
    map_local,
    rectangle_grid,
    section_trace,
    separatrix_section_hit,
    tent_map_test,
    write_grid_csv,
    write_return_map_csv,
)
from .scan import (
    BifurcationInterval,
    RegionLabel,
    RegionScanResult,
    ScanSettings,
    SweepResult,
    classify_region,
    merge_split_signature,
    refine_interval,
    region_scan,
    scan_grid,
    scan_manifest,
    sweep_s,
    write_scan_csv,
)
from .separatrix import (
    OutcomeKind,
    RunSettings,
    SeparatrixOutcome,
    SeparatrixRun,
    classify_limit_set,
    focus_separatrix_seeds,
    run_separatrix,
    seed_separatrix,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "State", "SystemParams", "PathPoint", "LorenzParams", "SaddleData",
    "ConditionReport", "path_params", "path_system", "invert_path", "rhs",
    "jacobian", "equilibria", "symmetry_image", "splus_stability_threshold",
    "splus_stable", "balance_V", "balance_V_rate", "saddle_data",
    "lorenz_to_lorenzlike", "check_conditions",
    # integrate
    "IntegratorConfig", "EventSpec", "EventHit", "Trajectory",
    "IntegrationError", "integrate", "eval_dense",
    # separatrix
    "OutcomeKind", "RunSettings", "SeparatrixOutcome", "SeparatrixRun",
    "seed_separatrix", "run_separatrix", "classify_limit_set",
    "focus_separatrix_seeds",
    # scan
    "ScanSettings", "RegionLabel", "BifurcationInterval", "SweepResult",
    "RegionScanResult", "sweep_s", "refine_interval", "classify_region",
    "merge_split_signature", "region_scan", "scan_grid", "write_scan_csv",
    "scan_manifest",
    # lyapunov
    "FtleResult", "ftle", "kaplan_yorke",
    # poincare
    "SectionKind", "Section", "PointStatus", "ColoredGrid", "GridImage",
    "TentMapResult", "build_sections", "rectangle_grid", "half_frame",
    "separatrix_section_hit", "map_local", "map_global", "iterate_grid",
    "section_trace", "tent_map_test", "write_grid_csv", "write_return_map_csv",
]
