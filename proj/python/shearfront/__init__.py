"""Front speeds of reaction-diffusion fronts in shear flows.

Thin layer over the compiled ``_core`` module: JSON results are decoded
into plain dicts, configs may be paths, dicts or JSON/TOML text.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Union

from . import _core
from ._core import (
    ConfigError,
    ConvergenceError,
    CylinderGrid,
    DomainTooShortError,
    FlowProfile,
    FrontSolution,
    Reaction,
    SolveOptions,
    TorusGrid,
    WindowOptions,
    check_nondegeneracy,
    cosine_flow,
    custom_flow,
    decay_rate,
    kpp_limit_speed,
    kpp_minimal_speed,
    make_cutoff,
    mu_of_lambda,
    principal_eigenvalue,
    profile_difference,
    small_amplitude_slope,
    solve_front,
    two_mode_flow,
    zero_flow,
)

__version__ = _core.__version__

Config = Union[str, os.PathLike, dict]


def _config_text(config: Config) -> tuple[str, bool]:
    if isinstance(config, dict):
        return json.dumps(config), False
    path = Path(config)
    return path.read_text(), path.suffix == ".toml"


def speed_curve(A_list, flow, reaction, window=None) -> dict:
    """Continuation in A; entries carry c*, gamma_A and the identity errors."""
    return json.loads(_core.speed_curve_json(list(A_list), flow, reaction, window or WindowOptions()))


def gamma_star_by_viscosity(flow, reaction, A_schedule, window=None) -> dict:
    return json.loads(_core.gamma_star_by_viscosity_json(flow, reaction, list(A_schedule), window or WindowOptions()))


def identities(solution: FrontSolution) -> dict:
    return json.loads(solution.identities_json())


def run(config: Config, out_dir: str = "", *, mode: str = "run", no_cache: bool = False, threads: int = 1,
        grid_refine: int = 0, write_files: bool = True) -> dict[str, Any]:
    """Runs an experiment. Returns the report plus exit_code, solver_calls and cache_hits."""
    text, toml = _config_text(config)
    report, code, calls, hits = _core.run_experiment_json(text, toml, mode, str(out_dir), no_cache, threads,
                                                          grid_refine, write_files)
    return {"report": json.loads(report), "exit_code": code, "solver_calls": calls, "cache_hits": hits}


def check_report(report: Union[dict, str, os.PathLike]) -> tuple[int, list[str]]:
    if isinstance(report, dict):
        text = json.dumps(report)
    else:
        text = Path(report).read_text()
    return _core.check_report_json(text)

