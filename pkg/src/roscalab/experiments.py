"""Monte Carlo experiments: swap roscas from random starts versus the optimum.

Ratios are OPT divided by mean welfare (ratio of means). Every table cell
draws from its own RNG stream derived from ``(seed, cell id)``. Initial
allocations and per-run kernel seeds are drawn up front, so results do not
depend on how runs are split across worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .core import Allocation, RoscaInstance, approximation_ratio, load_instance
from .costs import CRRA, CostModel, Quasilinear, cost_from_dict
from .matching import optimal_welfare
from .profiles import BUILTIN_9, DIST_FAMILIES, FAMILIES_30, load_builtin
from .swaps import DEFAULT_POLICY, ScanPolicy, run_swap_rosca, strictness_margin
from .core import welfare

DEFAULT_RUNS = 10_000
CRRA_A_GRID = (0.0, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0)
CRRA_W_GRID = (1.0, 2.0, 3.0, 4.0, 5.0)
DIST_CRRA = CRRA(W=4.0, a=0.5)

_POLICY_CODES = {
    ScanPolicy.SHUFFLE: _kernels.POLICY_SHUFFLE,
    ScanPolicy.LEXICOGRAPHIC: _kernels.POLICY_LEXICOGRAPHIC,
    ScanPolicy.PAYER_FIRST: _kernels.POLICY_PAYER_FIRST,
}


@dataclass
class ExperimentConfig:
    """What to simulate and how.

    ``profiles`` is a built-in name, a list of names, or a profile file path.
    ``costs`` is a list of serialized cost models (distributional experiment);
    the CRRA experiment sweeps ``a_grid`` x ``W_grid`` instead.
    """

    profiles: object = "crra9"
    runs: int = DEFAULT_RUNS
    seed: int = 0
    scan_policy: str = DEFAULT_POLICY.value
    output_format: str = "markdown"
    a_grid: tuple = CRRA_A_GRID
    W_grid: tuple = CRRA_W_GRID
    costs: Optional[list] = None
    workers: int = 1

    def __post_init__(self):
        if int(self.runs) < 1:
            raise ValueError("runs must be at least 1")
        self.runs = int(self.runs)
        self.scan_policy = ScanPolicy(self.scan_policy).value
        for a in self.a_grid:
            for W in self.W_grid:
                CRRA(W=float(W), a=float(a))
        if self.output_format not in ("csv", "json", "markdown"):
            raise ValueError(f"unknown output format {self.output_format!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        d = json.loads(Path(path).read_text())
        for key in ("a_grid", "W_grid"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def profile_names(self) -> list:
        return [self.profiles] if isinstance(self.profiles, str) else list(self.profiles)


def resolve_instance(name: str) -> RoscaInstance:
    if name in BUILTIN_9 or name in FAMILIES_30 or name == "pareto30":
        return load_builtin(name)
    return load_instance(name)


def cell_rng(seed: int, *cell) -> np.random.Generator:
    cell_id = zlib.crc32(json.dumps(cell, sort_keys=True, default=str).encode())
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), cell_id]))


def random_allocation(n: int, rng: np.random.Generator) -> Allocation:
    """Uniformly random participant -> round bijection."""
    return Allocation(tuple(int(x) for x in rng.permutation(n)))


def analytic_random_ratio(instance: RoscaInstance) -> float:
    """OPT over the exact expected welfare of a uniform allocation (mean value per row)."""
    opt, _ = optimal_welfare(instance)
    return approximation_ratio(opt, float(instance.values.sum()) / instance.n)


def expected_random_ratio(instance: RoscaInstance, runs: int, rng: np.random.Generator) -> float:
    """Monte Carlo OPT / mean welfare of uniform allocations with no payments."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    n = instance.n
    perms = rng.permuted(np.tile(np.arange(n), (runs, 1)), axis=1)
    totals = instance.values[np.arange(n)[None, :], perms].sum(axis=1)
    opt, _ = optimal_welfare(instance)
    return approximation_ratio(opt, float(np.mean(totals)))


def _kernel_params(cost: CostModel):
    if isinstance(cost, Quasilinear) or (isinstance(cost, CRRA) and cost.a == 0):
        return _kernels.KIND_QUASILINEAR, 1.0, 0.0
    if isinstance(cost, CRRA):
        kind = _kernels.KIND_LOG if cost.is_log else _kernels.KIND_POWER
        return kind, float(cost.W), float(cost.a)
    return None


def _kernel_chunk(args):
    values, inits, seeds, kind, W, a, eps, policy = args
    inits = inits.copy()
    return _kernels.simulate_batch(values, inits, seeds, kind, W, a, eps, policy)


def _reference_runs(instance, cost, inits, seeds, policy):
    out = np.empty(len(inits))
    for r, (init, s) in enumerate(zip(inits, seeds)):
        rng = np.random.default_rng(int(s))
        outcome = run_swap_rosca(instance, Allocation(tuple(init)), cost, rng, policy)
        out[r] = welfare(instance, outcome, cost)
    return out


def simulate_swap_welfare(
    instance: RoscaInstance,
    cost: CostModel,
    runs: int,
    rng: np.random.Generator,
    scan_policy: str | ScanPolicy = DEFAULT_POLICY,
    workers: int = 1,
    inits: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Final swap-rosca welfare for each of ``runs`` random starts."""
    n = instance.n
    policy = ScanPolicy(scan_policy)
    if inits is None:
        inits = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (runs, 1)), axis=1)
    seeds = rng.integers(0, 2**32, size=len(inits), dtype=np.uint32)
    params = _kernel_params(cost)
    if params is None:
        return _reference_runs(instance, cost, inits, seeds, policy)
    kind, W, a = params
    values = np.ascontiguousarray(instance.values, dtype=np.float64)
    eps = strictness_margin(instance)
    code = _POLICY_CODES[policy]
    workers = max(1, int(workers))
    if workers == 1 or len(inits) < 2 * workers:
        out = _kernel_chunk((values, inits, seeds, kind, W, a, eps, code))
    else:
        bounds = np.linspace(0, len(inits), workers + 1).astype(int)
        jobs = [
            (values, inits[lo:hi], seeds[lo:hi], kind, W, a, eps, code)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = np.concatenate(list(ex.map(_kernel_chunk, jobs)))
    if np.isnan(out).any():
        from .swaps import SwapNonConvergence

        raise SwapNonConvergence(f"{int(np.isnan(out).sum())} runs exceeded the pass cap")
    return out


def swap_ratio(
    instance: RoscaInstance,
    cost: CostModel,
    runs: int,
    rng: np.random.Generator,
    scan_policy: str | ScanPolicy = DEFAULT_POLICY,
    workers: int = 1,
) -> float:
    opt, _ = optimal_welfare(instance)
    w = simulate_swap_welfare(instance, cost, runs, rng, scan_policy, workers)
    return approximation_ratio(opt, float(np.mean(w)))


@dataclass
class CrraTable:
    profile: str
    opt: float
    random_ratio: float
    a_grid: tuple
    W_grid: tuple
    ratios: np.ndarray  # shape (len(a_grid), len(W_grid))

    def cell(self, a: float, W: float) -> float:
        return float(self.ratios[self.a_grid.index(a), self.W_grid.index(W)])


@dataclass
class DistRow:
    profile: str
    opt: float
    random: float
    quasilinear: float
    crra: float


def run_crra_experiment(config: ExperimentConfig) -> CrraTable:
    """Swap-rosca ratio for every (a, W) pair on a single profile set."""
    name = config.profile_names()[0]
    inst = resolve_instance(name)
    opt, _ = optimal_welfare(inst)
    rand = expected_random_ratio(inst, config.runs, cell_rng(config.seed, "crra", name, "random"))
    ratios = np.empty((len(config.a_grid), len(config.W_grid)))
    for ia, a in enumerate(config.a_grid):
        for iw, W in enumerate(config.W_grid):
            cost = CRRA(W=float(W), a=float(a))
            rng = cell_rng(config.seed, "crra", name, float(a), float(W))
            w = simulate_swap_welfare(inst, cost, config.runs, rng, config.scan_policy, config.workers)
            ratios[ia, iw] = approximation_ratio(opt, float(np.mean(w)))
    return CrraTable(name, opt, rand, tuple(config.a_grid), tuple(config.W_grid), ratios)


def run_distributional_experiment(config: ExperimentConfig) -> list[DistRow]:
    """OPT, random ratio and swap ratios under quasilinear and CRRA cost per profile set."""
    costs = [cost_from_dict(c) for c in config.costs] if config.costs else [Quasilinear(), DIST_CRRA]
    if len(costs) != 2:
        raise ValueError("the distributional experiment takes exactly two cost models")
    rows = []
    for name in config.profile_names():
        inst = resolve_instance(name)
        opt, _ = optimal_welfare(inst)
        rand = expected_random_ratio(inst, config.runs, cell_rng(config.seed, "dist", name, "random"))
        cells = []
        for cost in costs:
            rng = cell_rng(config.seed, "dist", name, cost.to_dict())
            w = simulate_swap_welfare(inst, cost, config.runs, rng, config.scan_policy, config.workers)
            cells.append(approximation_ratio(opt, float(np.mean(w))))
        rows.append(DistRow(name, opt, rand, cells[0], cells[1]))
    return rows


def dist_profile_names(size: int) -> list:
    return [f"{fam}{size}" for fam in DIST_FAMILIES]


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.3f}"


def emit_table(results, fmt: str = "markdown") -> bytes:
    """Serialize a CrraTable or a list of DistRow as csv, json or markdown."""
    if isinstance(results, CrraTable):
        header = ["a"] + [f"W={_num(W)}" for W in results.W_grid]
        body = [
            [_num(a)] + [float(x) for x in results.ratios[ia]] for ia, a in enumerate(results.a_grid)
        ]
        meta = {
            "profile": results.profile,
            "opt": results.opt,
            "random_ratio": results.random_ratio,
            "a_grid": list(results.a_grid),
            "W_grid": list(results.W_grid),
            "ratios": results.ratios.tolist(),
        }
    else:
        rows = list(results)
        header = ["profile", "OPT", "random", "quasilinear", "CRRA"]
        body = [[r.profile, r.opt, r.random, r.quasilinear, r.crra] for r in rows]
        meta = {"rows": [asdict(r) for r in rows]}
    if fmt == "json":
        return json.dumps(meta, indent=2).encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows([[repr(c) if isinstance(c, float) else c for c in row] for row in body])
        return buf.getvalue().encode()
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for row in body:
            lines.append("| " + " | ".join(_fmt(c) if isinstance(c, float) else str(c) for c in row) + " |")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def _num(x: float) -> str:
    return f"{x:g}"


def parse_table_json(data: bytes):
    """Inverse of ``emit_table(..., 'json')``."""
    d = json.loads(data)
    if "rows" in d:
        return [DistRow(**r) for r in d["rows"]]
    return CrraTable(
        d["profile"], d["opt"], d["random_ratio"], tuple(d["a_grid"]), tuple(d["W_grid"]), np.array(d["ratios"])
    )


def write_results(name: str, results, out_dir: str | Path, config: ExperimentConfig, elapsed: float) -> Path:
    """Write ``{name}.{csv,json,md}`` plus a manifest into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for fmt, ext in (("csv", "csv"), ("json", "json"), ("markdown", "md")):
        (out / f"{name}.{ext}").write_bytes(emit_table(results, fmt))
    digests = {p: resolve_instance(p).digest() for p in config.profile_names()}
    manifest = {
        "experiment": name,
        "seed": config.seed,
        "runs": config.runs,
        "scan_policy": config.scan_policy,
        "profile_digests": digests,
        "wall_clock_seconds": round(elapsed, 3),
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()},
    }
    path = out / f"{name}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def default_workers() -> int:
    return os.cpu_count() or 1


def timed(fn, *args):
    t0 = time.perf_counter()
    res = fn(*args)
    return res, time.perf_counter() - t0
