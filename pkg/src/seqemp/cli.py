"""Command-line pipelines: simulate, test, calibrate, verify.

Every subcommand reads a YAML experiment config (see README for the schema),
stages its outputs in a hidden directory and moves them into place only after
the whole run succeeded, so an aborted run leaves no partial result files.
A manifest records the config hash, the seed, the package version and a
checksum per output file; identical configs produce identical manifests.

Exit codes: 0 ok, 1 validation error, 2 numeric failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bracketing import (Measure, PsiBudget, bracketing_number,
                         entropy_condition_check)
from .config import ExperimentConfig, load_config
from .empirical import cusum_batch, cusum_statistic, r_sup_batch
from .errors import NumericError, ValidationError
from .kiefer import (build_kiefer, chain_kernel, default_lag,
                     estimate_longrun_kernel, iid_interval_kernel,
                     quantile_table, sample_sup_bridge)
from .mixing import (count_violations, exact_product_covariance,
                     fit_product_bound, moment_bound_check,
                     random_mixing_suite, MixingConfig)
from .processes import (FiniteChainSpec, IidSpec, SamplePath, simulate,
                        simulate_chain_batch, simulate_expanding_map)
from .rng import child_seed, stream
from .spectral import covariance_decay_check, second_modulus, spectral_report

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ---------------------------------------------------------------------------
# staged output
# ---------------------------------------------------------------------------

class _Staging:
    """Write outputs to a hidden directory, promote them only on success."""

    def __init__(self, out_dir: str, tag: str):
        self.out_dir = Path(out_dir)
        self.dir = self.out_dir / f".staging-{tag}-{os.getpid()}"
        self.names: list[str] = []

    def __enter__(self):
        self.dir.mkdir(parents=True, exist_ok=True)
        return self

    def path(self, name: str) -> Path:
        self.names.append(name)
        return self.dir / name

    def file_hashes(self) -> dict:
        out = {}
        for name in self.names:
            digest = hashlib.sha256((self.dir / name).read_bytes()).hexdigest()
            out[name] = digest
        return out

    def commit(self) -> list[str]:
        for name in self.names:
            os.replace(self.dir / name, self.out_dir / name)
        shutil.rmtree(self.dir, ignore_errors=True)
        return [str(self.out_dir / n) for n in self.names]

    def __exit__(self, exc_type, exc, tb):
        if self.dir.exists():
            shutil.rmtree(self.dir, ignore_errors=True)
        return False


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(staging: _Staging, cfg: ExperimentConfig,
                    command: str) -> None:
    payload = {
        "command": command,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "version": __version__,
        "files": staging.file_hashes(),
    }
    _write_json(staging.path("manifest.json"), payload)


# ---------------------------------------------------------------------------
# replicated statistics
# ---------------------------------------------------------------------------

def _replicate_values(model, n: int, seed: int, rep_lo: int, rep_hi: int,
                      shift) -> np.ndarray:
    """(rep_hi - rep_lo, n) matrix of path values for the given replicates."""
    if isinstance(model, FiniteChainSpec):
        states = simulate_chain_batch(model, n, rep_hi - rep_lo, seed,
                                      first_rep=rep_lo)
        vals = model.state_values[states]
    elif isinstance(model, IidSpec):
        vals = np.empty((rep_hi - rep_lo, n))
        for r in range(rep_lo, rep_hi):
            rng = stream(seed, "path", r)
            vals[r - rep_lo] = rng.random(n) if model.dist == "uniform" \
                else rng.standard_normal(n)
    elif isinstance(model, dict) and model.get("kind") == "expanding_map":
        vals = np.empty((rep_hi - rep_lo, n))
        for r in range(rep_lo, rep_hi):
            vals[r - rep_lo] = simulate_expanding_map(
                model["map_id"], n, child_seed(seed, "path", r)).values
    else:
        vals = np.empty((rep_hi - rep_lo, n))
        for r in range(rep_lo, rep_hi):
            vals[r - rep_lo] = simulate(model, n, child_seed(seed, "path", r)).values
    if shift is not None:
        at, size = shift
        vals = vals.copy()
        vals[:, int(np.floor(n * at + 1e-12)):] += size
    return vals


def _stat_chunk(payload):
    (model, fc, t_grid, n, seed, shift, rep_lo, rep_hi) = payload
    vals = _replicate_values(model, n, seed, rep_lo, rep_hi, shift)
    return rep_lo, cusum_batch(vals, fc), r_sup_batch(vals, fc, t_grid)


def _replicated_statistics(cfg: ExperimentConfig):
    """Exact and grid-restricted statistics per replicate, worker-parallel.

    Output ordering is canonical (by replicate index) regardless of worker
    scheduling, since every replicate consumes its own derived stream.
    """
    reps = cfg.reps
    chunk = max(64, (reps + 4 * cfg.workers - 1) // (4 * cfg.workers))
    payloads = [(cfg.model, cfg.function_class, cfg.t_grid, cfg.n, cfg.seed,
                 cfg.shift, lo, min(lo + chunk, reps))
                for lo in range(0, reps, chunk)]
    exact = np.empty(reps)
    grid = np.empty(reps)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_stat_chunk, payloads))
    else:
        results = [_stat_chunk(p) for p in payloads]
    for lo, ex, gr in sorted(results, key=lambda r: r[0]):
        exact[lo:lo + ex.size] = ex
        grid[lo:lo + gr.size] = gr
    return exact, grid


def _null_kernel(cfg: ExperimentConfig):
    """Resolve the long-run kernel for the configured null model."""
    route = cfg.kernel_route
    model = cfg.model
    if route == "auto":
        if isinstance(model, IidSpec) and model.dist == "uniform":
            route = "analytic_iid"
        elif isinstance(model, FiniteChainSpec):
            route = "spectral_chain"
        else:
            route = "estimate"
    if route == "analytic_iid":
        return iid_interval_kernel(cfg.function_class), route
    if route == "spectral_chain":
        if not isinstance(model, FiniteChainSpec):
            raise ValidationError("spectral_chain kernel needs a finite_chain model")
        return chain_kernel(model, cfg.function_class), route
    theta = second_modulus(model) if isinstance(model, FiniteChainSpec) else None
    lag, weights = (cfg.lag, "truncated_sum") if cfg.lag is not None \
        else default_lag(cfg.n, theta)
    pilot_reps = min(cfg.reps, 20)
    paths = []
    for r in range(pilot_reps):
        vals = _replicate_values(model, cfg.n, child_seed(cfg.seed, "pilot"),
                                 r, r + 1, None)[0]
        paths.append(SamplePath(values=vals, seed=0, model_id="pilot"))
    return estimate_longrun_kernel(paths, cfg.function_class, lag, weights), \
        "estimate"


def _kiefer_draws(cfg: ExperimentConfig):
    kernel, route = _null_kernel(cfg)
    model = build_kiefer(kernel, cfg.t_grid, jitter=cfg.jitter)
    draws = sample_sup_bridge(model, cfg.draws, child_seed(cfg.seed, "kiefer"))
    return draws, route, model


def _quantile_payload(cfg, draws, route):
    table = quantile_table(draws, cfg.alphas)
    return {
        "kernel": route,
        "grid": {"f_count": cfg.function_class.n_members,
                 "t_count": int(cfg.t_grid.size)},
        "draws": int(cfg.draws),
        "quantiles": [cv.to_record() for cv in table],
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_run(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        exact, grid = _replicated_statistics(cfg)
        with open(staging.path("tn_draws.csv"), "w", newline="") as fh:
            fh.write("rep,t_n,t_n_grid\n")
            for r in range(cfg.reps):
                fh.write(f"{r},{exact[r]:.17g},{grid[r]:.17g}\n")
        draws, route, _ = _kiefer_draws(cfg)
        _write_json(staging.path("kiefer_quantiles.json"),
                    _quantile_payload(cfg, draws, route))
        _run_analyses(cfg, staging)
        _write_manifest(staging, cfg, "run")
        for name in staging.commit():
            print(name)
    return 0


def _run_analyses(cfg: ExperimentConfig, staging: _Staging) -> None:
    toggles = cfg.analyses
    if toggles.get("spectral"):
        _spectral_outputs(cfg, staging)
    if toggles.get("mixing"):
        _mixing_outputs(cfg, staging)
    if toggles.get("entropy"):
        _entropy_outputs(cfg, staging)


def _cmd_simulate(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        if isinstance(cfg.model, dict):
            path = simulate_expanding_map(cfg.model["map_id"], cfg.n,
                                          child_seed(cfg.seed, "path", 0))
        else:
            path = simulate(cfg.model, cfg.n, child_seed(cfg.seed, "path", 0))
        path.to_csv(staging.path("path.csv"))
        path.save_npz(staging.path("path.npz"))
        _write_manifest(staging, cfg, "simulate")
        for name in staging.commit():
            print(name)
    return 0


def _cmd_test(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        vals = _replicate_values(cfg.model, cfg.n, cfg.seed, 0, 1, cfg.shift)[0]
        path = SamplePath(values=vals, seed=cfg.seed, model_id="test-path")
        result = cusum_statistic(path, cfg.function_class)
        grid_stat = float(r_sup_batch(vals[None, :], cfg.function_class,
                                      cfg.t_grid)[0])
        draws, route, _ = _kiefer_draws(cfg)
        table = quantile_table(draws, cfg.alphas)
        print(f"T_n = {result.statistic:.6f} "
              f"(argmax k = {result.argmax_k}, f = {result.argmax_f})")
        print(f"grid statistic = {grid_stat:.6f} "
              f"({cfg.function_class.n_members} functions x "
              f"{cfg.t_grid.size} time points, kernel = {route})")
        decisions = {}
        for cv in table:
            reject = grid_stat > cv.value
            decisions[str(cv.alpha)] = bool(reject)
            print(f"alpha = {cv.alpha:g}: critical value = {cv.value:.6f} "
                  f"(mc se {cv.mc_se:.4f}) -> "
                  f"{'reject' if reject else 'accept'} H0")
        payload = {"t_n": result.to_record(), "grid_statistic": grid_stat,
                   "kernel": route, "decisions": decisions,
                   "quantiles": [cv.to_record() for cv in table]}
        _write_json(staging.path("test_result.json"), payload)
        _write_manifest(staging, cfg, "test")
        staging.commit()
    return 0


def _cmd_critical_values(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        draws, route, _ = _kiefer_draws(cfg)
        np.savetxt(staging.path("kiefer_draws.csv"), draws, delimiter=",",
                   header="sup_bridge", comments="")
        payload = _quantile_payload(cfg, draws, route)
        _write_json(staging.path("kiefer_quantiles.json"), payload)
        _write_manifest(staging, cfg, "critical-values")
        for name in staging.commit():
            print(name)
        for cv in quantile_table(draws, cfg.alphas):
            print(f"alpha = {cv.alpha:g}: q = {cv.value:.6f} "
                  f"+/- {cv.mc_se:.4f}")
    return 0


def _chain_observable(cfg: ExperimentConfig) -> np.ndarray:
    model = cfg.model
    if not isinstance(model, FiniteChainSpec):
        raise ValidationError("this subcommand needs a finite_chain model")
    obs = cfg.raw.get("observable")
    if obs is None:
        f = np.zeros(model.n_states)
        f[-1] = 1.0
    else:
        f = np.asarray(obs, dtype=float)
        if f.shape != (model.n_states,):
            raise ValidationError("config: observable must list one value per state")
    return f - float(model.stationary @ f)


def _spectral_outputs(cfg: ExperimentConfig, staging: _Staging) -> None:
    f = _chain_observable(cfg)
    report = spectral_report(cfg.model, f)
    _write_json(staging.path("spectral_report.json"), report.to_record())
    decay = covariance_decay_check(cfg.model, f, f)
    decay.to_csv(staging.path("decay.csv"))
    print(f"theta = {report.theta:.6f}, kappa = {report.kappa:.6f}, "
          f"sigma2 = {report.sigma2:.6f}, gap = {report.gap:.6f}")


def _cmd_spectral(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        _spectral_outputs(cfg, staging)
        _write_manifest(staging, cfg, "spectral")
        staging.commit()
    return 0


def _mixing_outputs(cfg: ExperimentConfig, staging: _Staging) -> None:
    model = cfg.model
    if not isinstance(model, FiniteChainSpec):
        raise ValidationError("verify-mixing needs a finite_chain model")
    mix_cfg = cfg.raw.get("mixing", {}) or {}
    n_train = int(mix_cfg.get("train", 100))
    n_holdout = int(mix_cfg.get("holdout", 100))
    rng = stream(cfg.seed, "mixing-cli")
    records = []
    rows = []
    for i in range(n_train + n_holdout):
        p = int(rng.integers(1, 4))
        q = int(rng.integers(1, p + 1))
        gaps = rng.integers(1, 21, size=p)
        idx = tuple(np.concatenate([[0], np.cumsum(gaps)]).tolist())
        raw = rng.normal(size=model.n_states)
        raw -= float(model.stationary @ raw)
        if np.abs(raw).max() < 1e-12:
            raw[0] += 1.0
            raw -= float(model.stationary @ raw)
        f = raw / np.abs(raw).max() * float(rng.uniform(0.2, 1.0))
        f -= float(model.stationary @ f)
        if np.abs(f).max() > 1.0:
            f /= np.abs(f).max()
        rec = exact_product_covariance(
            model, MixingConfig(p=p, q=q, indices=idx, f=f))
        records.append(rec)
        rows.append((i, p, q, idx, rec))
    c_fit, ell = fit_product_bound(records[:n_train])
    holdout_viol = count_violations(records[n_train:], c_fit, ell)
    with open(staging.path("mixing_checks.csv"), "w", newline="") as fh:
        fh.write("idx,split,p,q,gap,lhs,bound,ratio\n")
        for i, p, q, idx, rec in rows:
            bound = rec.bound(c_fit, ell)
            ratio = rec.lhs / bound if bound > 0 else 0.0
            split = "train" if i < n_train else "holdout"
            fh.write(f"{i},{split},{p},{q},{rec.split_gap},"
                     f"{rec.lhs:.17g},{bound:.17g},{ratio:.17g}\n")
    growth = moment_bound_check(
        model, _chain_observable(cfg), p=2,
        n_grid=[2 ** k for k in range(8, 15)],
        reps=int(mix_cfg.get("reps", 400)),
        seed=child_seed(cfg.seed, "mixing-growth"))
    verdict = {"fitted_c": float(c_fit), "fitted_ell": int(ell),
               "theta": records[0].theta if records else None,
               "train": n_train, "holdout": n_holdout,
               "holdout_violations": int(holdout_viol),
               "moment_slope": growth.slope,
               "moment_slope_limit": growth.slope_limit,
               "passed": holdout_viol == 0 and growth.passed}
    _write_json(staging.path("mixing_verdict.json"), verdict)
    print(f"mixing: C = {c_fit:.4g}, ell = {ell}, "
          f"holdout violations = {holdout_viol}, "
          f"moment slope = {growth.slope:.3f} "
          f"(limit {growth.slope_limit:.2f})")


def _cmd_verify_mixing(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        _mixing_outputs(cfg, staging)
        _write_manifest(staging, cfg, "verify-mixing")
        staging.commit()
    return 0


def _entropy_outputs(cfg: ExperimentConfig, staging: _Staging) -> None:
    ent_cfg = cfg.raw.get("entropy", {}) or {}
    levels = int(ent_cfg.get("levels", 10))
    if levels < 8:
        raise ValidationError("config: entropy.levels must be >= 8")
    r = float(ent_cfg.get("r", 1.0))
    s = float(ent_cfg.get("s", 1.0))
    fc = cfg.function_class
    if fc.dim == 1:
        lo = float(min(fc.params.min(), 0.0))
        hi = float(max(fc.params.max(), 1.0))
        mu = Measure.uniform(np.array([[lo], [hi]]))
    else:
        mu = Measure.uniform(np.array([[0.0] * fc.dim, [1.0] * fc.dim]))
    psi = PsiBudget()
    eps_grid = 2.0 ** -np.arange(1, levels + 1, dtype=np.float64)
    profile = bracketing_number(fc, mu, eps_grid, s, psi, r=r)
    verdict = entropy_condition_check(profile)
    profile.to_csv(staging.path("entropy_profile.csv"))
    _write_json(staging.path("entropy_verdict.json"), verdict.to_record())
    print(f"entropy: tail ratio = {verdict.tail_ratio:.4f} "
          f"({'summable' if verdict.summable else 'not summable'})")


def _cmd_verify_entropy(cfg: ExperimentConfig) -> int:
    with _Staging(cfg.out_dir, cfg.config_hash[:12]) as staging:
        _entropy_outputs(cfg, staging)
        _write_manifest(staging, cfg, "verify-entropy")
        staging.commit()
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "simulate": _cmd_simulate,
    "test": _cmd_test,
    "critical-values": _cmd_critical_values,
    "spectral": _cmd_spectral,
    "verify-mixing": _cmd_verify_mixing,
    "verify-entropy": _cmd_verify_entropy,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="seqemp",
                     description="sequential empirical process experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes for replication loops")
        p.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        raw = load_config(args.config)
        cfg = ExperimentConfig.from_dict(raw, seed_override=args.seed,
                                         out_override=args.out,
                                         workers_override=args.workers)
        return _COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
