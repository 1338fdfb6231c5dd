"""Experiment configuration: YAML parsing, validation, canonical hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .empirical import FunctionClass
from .errors import ValidationError
from .processes import FiniteChainSpec, IfsSpec, IidSpec, MaSpec, AffineMap

__all__ = ["ExperimentConfig", "load_config", "canonical_hash"]

_MODEL_KINDS = ("iid_uniform", "iid_normal", "finite_chain", "ifs", "ma",
                "expanding_map")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ValidationError(f"config: not valid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ValidationError("config: top level must be a mapping")
    return raw


def canonical_hash(raw: dict) -> str:
    """Content hash of the parsed config (insensitive to formatting)."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _require(raw: dict, key: str, typ, path: str):
    if key not in raw:
        raise ValidationError(f"config: missing field {path}{key}")
    val = raw[key]
    if typ is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ValidationError(f"config: field {path}{key} must be a number")
        return float(val)
    if typ is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise ValidationError(f"config: field {path}{key} must be an integer")
        return val
    if not isinstance(val, typ):
        raise ValidationError(
            f"config: field {path}{key} must be {typ.__name__}")
    return val


def _positive_int(raw, key, path):
    val = _require(raw, key, int, path)
    if val < 1:
        raise ValidationError(f"config: field {path}{key} must be >= 1")
    return val


def _build_model(raw: dict):
    kind = _require(raw, "kind", str, "model.")
    if kind not in _MODEL_KINDS:
        raise ValidationError(f"config: model.kind must be one of {_MODEL_KINDS}")
    if kind == "iid_uniform":
        return IidSpec("uniform")
    if kind == "iid_normal":
        return IidSpec("normal")
    if kind == "finite_chain":
        mat = _require(raw, "transition", list, "model.")
        values = raw.get("state_values")
        return FiniteChainSpec(np.asarray(mat, dtype=float),
                               None if values is None else np.asarray(values, float))
    if kind == "ma":
        coeffs = _require(raw, "coeffs", list, "model.")
        return MaSpec(np.asarray(coeffs, dtype=float),
                      innovation=raw.get("innovation", "normal"),
                      tail_bound=float(raw.get("tail_bound", 0.0)))
    if kind == "ifs":
        maps_raw = _require(raw, "maps", list, "model.")
        maps = tuple(AffineMap(m["scale"], m["offset"]) for m in maps_raw)
        probs = tuple(float(p) for p in _require(raw, "probs", list, "model."))
        domain = raw.get("domain")
        return IfsSpec(maps=maps, probs=probs,
                       domain=None if domain is None else np.asarray(domain, float))
    # expanding_map carries only its id; simulation dispatch handles it
    return {"kind": "expanding_map",
            "map_id": _require(raw, "map_id", str, "model.")}


def _build_function_class(raw: dict) -> FunctionClass:
    kind = _require(raw, "kind", str, "function_class.")
    if "params" in raw:
        return FunctionClass(kind, np.asarray(raw["params"], dtype=float))
    if kind == "interval_indicators":
        grid = _require(raw, "grid", dict, "function_class.")
        count = _positive_int(grid, "count", "function_class.grid.")
        lo = float(grid.get("lo", 1.0 / (count + 1)))
        hi = float(grid.get("hi", count / (count + 1.0)))
        return FunctionClass.interval_grid(lo, hi, count)
    raise ValidationError(
        "config: function_class needs explicit params for non-interval kinds")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated experiment description.

    The seed is mandatory: no wall-clock defaults, so a config fully
    determines every output byte.
    """

    raw: dict
    seed: int
    n: int
    reps: int
    workers: int
    model: object
    function_class: FunctionClass
    t_grid: np.ndarray
    kernel_route: str
    draws: int
    jitter: float
    lag: int | None
    alphas: tuple
    shift: tuple | None          # (time fraction, size) or None
    analyses: dict = field(default_factory=dict)
    out_dir: str = "results"

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.raw)

    @staticmethod
    def from_dict(raw: dict, seed_override: int | None = None,
                  out_override: str | None = None,
                  workers_override: int | None = None) -> "ExperimentConfig":
        if seed_override is None:
            seed = _require(raw, "seed", int, "")
        else:
            seed = int(seed_override)
        if seed < 0:
            raise ValidationError("config: field seed must be >= 0")
        n = _positive_int(raw, "n", "")
        reps = _positive_int(raw, "reps", "")
        workers = workers_override if workers_override is not None \
            else int(raw.get("workers", 1))
        if workers < 1:
            raise ValidationError("config: field workers must be >= 1")
        model = _build_model(_require(raw, "model", dict, ""))
        fc = _build_function_class(_require(raw, "function_class", dict, ""))
        tg = raw.get("t_grid", {})
        if not isinstance(tg, dict):
            raise ValidationError("config: field t_grid must be a mapping")
        t_count = int(tg.get("count", 50))
        if t_count < 2:
            raise ValidationError("config: field t_grid.count must be >= 2")
        t_grid = np.linspace(1.0 / t_count, 1.0, t_count)
        kief = raw.get("kiefer", {})
        route = kief.get("kernel", "auto")
        if route not in ("auto", "analytic_iid", "spectral_chain", "estimate"):
            raise ValidationError("config: kiefer.kernel must be auto, "
                                  "analytic_iid, spectral_chain or estimate")
        draws = int(kief.get("draws", 5000))
        if draws < 100:
            raise ValidationError("config: kiefer.draws must be >= 100")
        jitter = float(kief.get("jitter", 1e-10))
        lag = kief.get("lag")
        if lag is not None:
            lag = int(lag)
        alphas = tuple(float(a) for a in raw.get("alphas", (0.1, 0.05, 0.01)))
        for a in alphas:
            if not 0.0 < a < 1.0:
                raise ValidationError("config: alphas must lie in (0, 1)")
        shift = None
        if "shift" in raw and raw["shift"] is not None:
            sh = raw["shift"]
            shift = (float(sh.get("at", 0.5)), float(sh.get("size", 0.0)))
            if not 0.0 < shift[0] < 1.0:
                raise ValidationError("config: shift.at must lie in (0, 1)")
        analyses = raw.get("analyses", {}) or {}
        out_dir = out_override if out_override is not None \
            else str(raw.get("out", "results"))
        return ExperimentConfig(raw=raw, seed=seed, n=n, reps=reps,
                                workers=workers, model=model,
                                function_class=fc, t_grid=t_grid,
                                kernel_route=route, draws=draws, jitter=jitter,
                                lag=lag, alphas=alphas, shift=shift,
                                analyses=dict(analyses), out_dir=out_dir)
