"""JSON/CSV input and output.

Input files are strict: ``"schema": 1`` is required, unknown fields are
rejected, and every diagnostic names the offending field path.  All numeric
output is serialized with 17 significant digits so values round-trip
exactly; files are written atomically (temp file, then rename).
"""

from __future__ import annotations

import json
import os
from typing import Any, Sequence

import numpy as np

from .controllability import ControllabilityReport
from .errors import ConfigError
from .gramian import GramianSet
from .model import (
    AdjointFeedbackLaw,
    ControlPair,
    DenseGenerator,
    ImpulseStage,
    ImpulsiveSystem,
    PiecewiseConstantLaw,
    SpectralBlocks,
)
from .synthesis import SynthesisResult
from .wave import WaveImpulse, WaveModel

SCHEMA_VERSION = 1

__all__ = [
    "load_system",
    "load_control",
    "load_wave_model",
    "system_to_dict",
    "dump_json",
    "write_json",
    "write_csv",
    "format_float",
    "gramian_report_dict",
    "controllability_report_dict",
    "synthesis_result_dict",
]


# ---------------------------------------------------------------------------
# strict readers
# ---------------------------------------------------------------------------


def _expect_mapping(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected an object")
    return node


def _check_keys(obj: dict, path: str, required: Sequence[str], optional: Sequence[str] = ()):
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}: missing required field '{key}'")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown field")


def _number(node: Any, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(node)


def _vector(node: Any, path: str) -> np.ndarray:
    if not isinstance(node, list):
        raise ConfigError(f"{path}: expected an array of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(node)])


def _matrix(node: Any, path: str) -> np.ndarray:
    if not isinstance(node, list) or not node:
        raise ConfigError(f"{path}: expected a non-empty array of rows")
    rows = [_vector(r, f"{path}[{i}]") for i, r in enumerate(node)]
    width = rows[0].shape[0]
    if any(r.shape[0] != width for r in rows):
        raise ConfigError(f"{path}: rows have inconsistent lengths")
    return np.array(rows)


def _check_schema(obj: dict, path: str):
    version = obj.get("schema")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}.schema: expected {SCHEMA_VERSION}, got {version!r}")


def _load_json_file(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc


def load_system(path: str) -> ImpulsiveSystem:
    """Read a system definition file (shared by all CLI subcommands)."""
    root = _expect_mapping(_load_json_file(path), path)
    _check_keys(root, path, required=("schema", "generator", "B", "horizon_b"), optional=("stages",))
    _check_schema(root, path)

    gen_node = _expect_mapping(root["generator"], f"{path}.generator")
    if set(gen_node) == {"dense"}:
        generator = DenseGenerator(_matrix(gen_node["dense"], f"{path}.generator.dense"))
    elif set(gen_node) == {"spectral_blocks"}:
        generator = SpectralBlocks(_vector(gen_node["spectral_blocks"], f"{path}.generator.spectral_blocks"))
    else:
        raise ConfigError(f"{path}.generator: expected exactly one of 'dense' or 'spectral_blocks'")

    stages = []
    for i, node in enumerate(root.get("stages", [])):
        spath = f"{path}.stages[{i}]"
        stage = _expect_mapping(node, spath)
        _check_keys(stage, spath, required=("t", "C", "D"))
        stages.append(
            ImpulseStage(
                _number(stage["t"], f"{spath}.t"),
                _matrix(stage["C"], f"{spath}.C"),
                _matrix(stage["D"], f"{spath}.D"),
            )
        )
    return ImpulsiveSystem(
        generator=generator,
        input_matrix=_matrix(root["B"], f"{path}.B"),
        horizon=_number(root["horizon_b"], f"{path}.horizon_b"),
        stages=tuple(stages),
    )


def load_control(sys: ImpulsiveSystem, path: str) -> ControlPair:
    """Read a control file: piecewise-constant grids or an adjoint-feedback seed."""
    root = _expect_mapping(_load_json_file(path), path)
    _check_keys(root, path, required=("schema", "u"), optional=("v",))
    _check_schema(root, path)

    u_node = _expect_mapping(root["u"], f"{path}.u")
    if set(u_node) == {"adjoint_feedback"}:
        law = AdjointFeedbackLaw(_vector(u_node["adjoint_feedback"], f"{path}.u.adjoint_feedback"))
    elif set(u_node) == {"grids", "values"}:
        counts_node = u_node["grids"]
        values_node = u_node["values"]
        if not isinstance(counts_node, list) or not isinstance(values_node, list):
            raise ConfigError(f"{path}.u: 'grids' and 'values' must be arrays")
        if len(counts_node) != sys.p + 1 or len(values_node) != sys.p + 1:
            raise ConfigError(
                f"{path}.u: need one grid and one value list per subinterval "
                f"({sys.p + 1} for this system)"
            )
        values = []
        for k, (cnt, vals) in enumerate(zip(counts_node, values_node)):
            count = int(_number(cnt, f"{path}.u.grids[{k}]"))
            mat = _matrix(vals, f"{path}.u.values[{k}]")
            if mat.shape != (count, sys.m_inputs):
                raise ConfigError(
                    f"{path}.u.values[{k}]: expected shape {(count, sys.m_inputs)}, got {mat.shape}"
                )
            values.append(mat)
        law = PiecewiseConstantLaw(breaks=tuple(sys.boundaries), values=tuple(values))
    else:
        raise ConfigError(f"{path}.u: expected either 'adjoint_feedback' or 'grids'+'values'")

    v_node = root.get("v", [])
    if not isinstance(v_node, list):
        raise ConfigError(f"{path}.v: expected an array of impulse control vectors")
    impulses = tuple(_vector(v, f"{path}.v[{k}]") for k, v in enumerate(v_node))
    if len(impulses) != sys.p:
        raise ConfigError(f"{path}.v: expected {sys.p} impulse control vectors, got {len(impulses)}")
    return ControlPair(law, impulses)


def load_wave_model(path: str) -> WaveModel:
    root = _expect_mapping(_load_json_file(path), path)
    _check_keys(
        root, path, required=("schema", "gamma", "alpha", "beta", "horizon_b"), optional=("stages",)
    )
    _check_schema(root, path)
    stages = []
    for i, node in enumerate(root.get("stages", [])):
        spath = f"{path}.stages[{i}]"
        stage = _expect_mapping(node, spath)
        _check_keys(stage, spath, required=("t", "a", "b"))
        stages.append(
            WaveImpulse(
                _number(stage["t"], f"{spath}.t"),
                _vector(stage["a"], f"{spath}.a"),
                _vector(stage["b"], f"{spath}.b"),
            )
        )
    return WaveModel(
        gamma=_vector(root["gamma"], f"{path}.gamma"),
        alpha=_vector(root["alpha"], f"{path}.alpha"),
        beta=_vector(root["beta"], f"{path}.beta"),
        horizon=_number(root["horizon_b"], f"{path}.horizon_b"),
        stages=tuple(stages),
    )


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    """17 significant digits: exact round-trip for IEEE doubles."""
    return format(float(x), ".17g")


def dump_json(node: Any, indent: int = 0) -> str:
    """Deterministic JSON text with fixed-precision floats."""
    pad = "  " * indent
    child = "  " * (indent + 1)
    if isinstance(node, dict):
        if not node:
            return "{}"
        parts = [f'{child}{json.dumps(str(k))}: {dump_json(v, indent + 1)}' for k, v in node.items()]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(node, (list, tuple)):
        seq = list(node)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, bool)) or v is None for v in seq)
        if flat:
            return "[" + ", ".join(dump_json(v) for v in seq) + "]"
        parts = [f"{child}{dump_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    if isinstance(node, bool):
        return "true" if node else "false"
    if node is None:
        return "null"
    if isinstance(node, (int, np.integer)):
        return str(int(node))
    if isinstance(node, (float, np.floating)):
        return format_float(float(node))
    if isinstance(node, str):
        return json.dumps(node)
    if isinstance(node, np.ndarray):
        return dump_json(node.tolist(), indent)
    raise TypeError(f"cannot serialize {type(node).__name__}")


def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json(path: str, node: Any):
    _atomic_write(path, dump_json(node) + "\n")


def write_csv(path: str, header: Sequence[str], rows):
    """Comma-separated, '.' decimal, header row, 17-significant-digit numbers."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else format_float(cell) for cell in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _matrix_list(a: np.ndarray) -> list:
    return [list(map(float, row)) for row in np.atleast_2d(a)]


def system_to_dict(sys: ImpulsiveSystem) -> dict:
    if isinstance(sys.generator, DenseGenerator):
        gen = {"dense": _matrix_list(sys.generator.a)}
    else:
        gen = {"spectral_blocks": list(map(float, sys.generator.frequencies))}
    return {
        "schema": SCHEMA_VERSION,
        "generator": gen,
        "B": _matrix_list(sys.input_matrix),
        "horizon_b": sys.horizon,
        "stages": [
            {"t": st.time, "C": _matrix_list(st.c), "D": _matrix_list(st.d)} for st in sys.stages
        ],
    }


def gramian_report_dict(gs: GramianSet) -> dict:
    def block(g: np.ndarray) -> dict:
        return {"matrix": _matrix_list(g), "eigenvalues": list(np.linalg.eigvalsh(g))}

    return {
        "schema": SCHEMA_VERSION,
        "theta": block(gs.theta),
        "gamma": block(gs.gamma),
        "theta_tilde": block(gs.theta_tilde),
        "gamma_tilde": block(gs.gamma_tilde),
        "total": block(gs.total),
    }


def controllability_report_dict(report: ControllabilityReport, gramians: GramianSet = None) -> dict:
    out = {
        "schema": SCHEMA_VERSION,
        "verdict": report.verdict,
        "lambda_min": report.lambda_min,
        "lambda_max": report.lambda_max,
        "rank_tol": report.rank_tol,
        "decay_tol": report.decay_tol,
        "per_gramian_min_eigs": {
            "theta": report.per_gramian_min_eigs[0],
            "gamma": report.per_gramian_min_eigs[1],
            "theta_tilde": report.per_gramian_min_eigs[2],
            "gamma_tilde": report.per_gramian_min_eigs[3],
        },
        "kalman_rank": report.kalman_rank,
        "probes": [
            {
                "label": pr.label,
                "converged": pr.converged,
                "plateau": pr.plateau,
                "plateau_value": pr.plateau_value,
                "samples": [[float(e), float(r)] for e, r in zip(pr.epsilons, pr.norms)],
            }
            for pr in report.probes
        ],
    }
    if gramians is not None:
        out["matrices"] = {
            "theta": _matrix_list(gramians.theta),
            "gamma": _matrix_list(gramians.gamma),
            "theta_tilde": _matrix_list(gramians.theta_tilde),
            "gamma_tilde": _matrix_list(gramians.gamma_tilde),
            "total": _matrix_list(gramians.total),
        }
    return out


def synthesis_result_dict(result: SynthesisResult) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "epsilon": result.epsilon,
        "phi_hat": list(map(float, result.phi_hat)),
        "predicted_error": list(map(float, result.predicted_error)),
        "achieved_error": list(map(float, result.achieved_error)),
        "identity_defect": result.identity_defect,
        "j_value": result.j_value,
        "impulse_controls": [list(map(float, v)) for v in result.control.impulses],
    }
