"""File formats: edge-list panels, covariate CSVs, run configuration and parameter JSON."""
from __future__ import annotations

import json
import os
import re
from pathlib import Path
from typing import Union

import jsonschema
import numpy as np

from .errors import ValidationError
from .model import ModelParams, PriorSet, StarModelSpec, UndirectedModelParams
from .netcore import CovariateTensor, DynamicNetwork
from .netstats import DIRECTED_STATS, UNDIRECTED_STATS
from .vb.state import FitOptions

PathLike = Union[str, os.PathLike]

_HEADER = re.compile(r"^#\s*star-panel\s+v1\s+directed=(true|false)\s+n=(\d+)\s+T=(\d+)\s*$")


# ---------------------------------------------------------------------------
# panels

def write_panel(path: PathLike, network: DynamicNetwork) -> None:
    """Edge list with one ``t,i,j`` row per edge (undirected: i < j only).

    Non-default actor labels go on an ``# actors`` line and are read back as strings.
    """
    n, T = network.n, network.T
    ids = [str(lab) for lab in network.labels]
    default = [str(k + 1) for k in range(n)]
    if any("," in s or not s.strip() or s != s.strip() for s in ids):
        raise ValidationError("actor labels must be non-empty, comma-free and unpadded")
    lines = [f"# star-panel v1 directed={'true' if network.directed else 'false'} n={n} T={T}"]
    if ids != default:
        lines.append("# actors " + ",".join(ids))
    for t in range(T + 1):
        M = network[t]
        if not network.directed:
            M = np.triu(M, 1)
        for i, j in zip(*np.nonzero(M)):
            lines.append(f"{t},{ids[i]},{ids[j]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_panel(path: PathLike) -> DynamicNetwork:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValidationError(f"{path}: empty panel file")
    m = _HEADER.match(text[0].strip())
    if m is None:
        raise ValidationError(f"{path}:1: expected '# star-panel v1 directed=<true|false> n=<n> T=<T>'")
    directed = m.group(1) == "true"
    n, T = int(m.group(2)), int(m.group(3))
    if n < 2:
        raise ValidationError(f"{path}:1: need n >= 2")
    labels: tuple = ()
    index = {str(k + 1): k for k in range(n)}
    A = np.zeros((T + 1, n, n), dtype=np.int8)
    for lineno, raw in enumerate(text[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# actors"):
                labels = tuple(s.strip() for s in line[len("# actors"):].split(","))
                if len(labels) != n or len(set(labels)) != n or "" in labels:
                    raise ValidationError(f"{path}:{lineno}: actors line must list {n} distinct labels")
                index = {lab: k for k, lab in enumerate(labels)}
            continue
        parts = [s.strip() for s in line.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: malformed row {raw!r}, expected t,i,j")
        try:
            t = int(parts[0])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: time index {parts[0]!r} is not an integer") from None
        if not 0 <= t <= T:
            raise ValidationError(f"{path}:{lineno}: time index {t} outside 0..{T}")
        if parts[1] not in index or parts[2] not in index:
            raise ValidationError(f"{path}:{lineno}: unknown actor id in {raw!r}")
        i, j = index[parts[1]], index[parts[2]]
        if i == j:
            raise ValidationError(f"{path}:{lineno}: self-loop {raw!r}")
        A[t, i, j] = 1
        if not directed:
            A[t, j, i] = 1
    return DynamicNetwork(A, directed=directed, labels=labels)


# ---------------------------------------------------------------------------
# covariates

def write_covariates(directory: PathLike, covariates: CovariateTensor, static: tuple = ()) -> Path:
    """One dense CSV per slice per time point (or one per slice if listed in ``static``).

    Returns the path of the JSON manifest that :func:`read_covariates` consumes.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = covariates.names or tuple(f"x{k}" for k in range(covariates.p))
    files = {}
    for k, name in enumerate(names):
        if name in static:
            if not np.all(covariates.slices[:, k] == covariates.slices[:1, k]):
                raise ValidationError(f"covariate {name!r} is not constant over time")
            fn = f"{name}.csv"
            np.savetxt(d / fn, covariates.slices[0, k], delimiter=",", fmt="%.17g")
            files[name] = fn
        else:
            files[name] = []
            for t in range(covariates.T):
                fn = f"{name}_t{t + 1}.csv"
                np.savetxt(d / fn, covariates.slices[t, k], delimiter=",", fmt="%.17g")
                files[name].append(fn)
    manifest = {"n": covariates.n, "T": covariates.T, "names": list(names), "files": files}
    path = d / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _load_matrix(path: Path, n: int) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if M.shape != (n, n):
        raise ValidationError(f"{path}: expected a {n}x{n} matrix, got {M.shape}")
    return M


def read_covariates(manifest_path: PathLike) -> CovariateTensor:
    mpath = Path(manifest_path)
    try:
        manifest = json.loads(mpath.read_text())
        n, T, names, files = manifest["n"], manifest["T"], manifest["names"], manifest["files"]
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationError(f"{mpath}: bad covariate manifest ({exc})") from None
    X = np.empty((T, len(names), n, n))
    for k, name in enumerate(names):
        entry = files.get(name)
        if isinstance(entry, str):
            X[:, k] = _load_matrix(mpath.parent / entry, n)
        elif isinstance(entry, list) and len(entry) == T:
            for t, fn in enumerate(entry):
                X[t, k] = _load_matrix(mpath.parent / fn, n)
        else:
            raise ValidationError(f"{mpath}: covariate {name!r} needs one file or {T} per-time files")
    return CovariateTensor(X, tuple(names))


# ---------------------------------------------------------------------------
# parameters

def params_to_json(params: Union[ModelParams, UndirectedModelParams], names=()) -> dict:
    d = params.to_dict()
    d["kind"] = "directed" if isinstance(params, ModelParams) else "undirected"
    if names:
        d["names"] = list(names)
    return d


def params_from_json(d: dict) -> Union[ModelParams, UndirectedModelParams]:
    d = dict(d)
    kind = d.pop("kind", "directed")
    d.pop("names", None)
    cls = ModelParams if kind == "directed" else UndirectedModelParams
    return cls.from_dict(d)


# ---------------------------------------------------------------------------
# run configuration

_POS = {"type": "number", "exclusiveMinimum": 0}
_PROB = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "panel": {"type": "string"},
                "covariates": {"type": "string"},
                "truth": {"type": "string"},
                "state": {"type": "string"},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directed": {"type": "boolean"},
                "stats": {"type": "array", "items": {"enum": sorted(set(DIRECTED_STATS + UNDIRECTED_STATS))}},
                "covariance_design": {"enum": ["full", "identity_only", "none"]},
                "lag_depth": {"type": "integer", "minimum": 1},
            },
        },
        "priors": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                **{k: _POS for k in ("sigma2_beta", "sigma2_theta", "a_s0", "b_s0", "a_r0", "b_r0", "a_R0", "b_R0")},
                "a_omega0": {"type": "number", "exclusiveMinimum": 3},
                "B_omega0": {
                    "type": "array", "minItems": 2, "maxItems": 2,
                    "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                },
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "tolerance": _POS,
                "jitter": {"type": "number", "minimum": 0},
                "latent_moment": {"enum": ["mean", "location"]},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "T": {"type": "integer", "minimum": 1},
                "initial_density": {"type": "number", "minimum": 0, "maximum": 1},
                "truth": {"enum": ["dependence", "independence"]},
                "params": {"type": "object"},
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "draws": {"type": "integer", "minimum": 1000},
                "grid_points": {"type": "integer", "minimum": 2},
                "p_values": {"type": "array", "minItems": 1, "items": _PROB},
            },
        },
    },
}


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config {where}: {exc.message}") from None
    return cfg


def load_config(path: PathLike) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    return validate_config(cfg)


def spec_from_config(cfg: dict) -> StarModelSpec:
    model = cfg.get("model", {})
    directed = model.get("directed", True)
    stats = model.get("stats", DIRECTED_STATS if directed else UNDIRECTED_STATS)
    try:
        priors = PriorSet(**cfg.get("priors", {}))
        return StarModelSpec(
            directed=directed,
            stat_selection=tuple(stats),
            covariance_design=model.get("covariance_design", "full"),
            priors=priors,
            lag_depth=model.get("lag_depth", 1),
        )
    except ValueError as exc:
        raise ValidationError(f"config model: {exc}") from None


def fit_options_from_config(cfg: dict) -> FitOptions:
    return FitOptions(seed=cfg.get("seed", 0), **cfg.get("fit", {}))
