"""Algorithm registry, single-run evaluation, parameter sweeps and figure tables."""

from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .allocators import Schedule, bca, fsa, gba, gba_sic
from .correlated import fsa_correlated
from .metrics import N_BINS, MetricsReport, evaluate_schedule
from .params import SystemParams
from .scenario import Scenario, generate_scenario

ALGORITHMS: dict[str, Callable[[Scenario], Schedule]] = {
    "fsa": fsa,
    "bca": bca,
    "gba": gba,
    "gba_sic": gba_sic,
    "bca_ni": partial(bca, exact=True),
    "gba_ni": partial(gba, exact=True),
    "fsa_correlated": fsa_correlated,
    "fsa_correlated_int": partial(fsa_correlated, integer=True),
}

MAIN_ALGORITHMS = ("fsa", "bca", "gba", "gba_sic")

SWEEP_VARS = {"N": "n_devices", "C": "n_channels", "Delta": "delay_slots"}

CSV_COLUMNS = ["sweep_var", "value", "algorithm", "seed", "fraction_served", "mean_delay", "max_delay",
               "mean_aoi", "jain_bin", "jain_dev", "runtime_s"] + [f"served_bin_{b}" for b in range(N_BINS)]


def run_algorithm(name: str, scenario: Scenario) -> Schedule:
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(scenario)


def evaluate(algorithm: str, scenario: Scenario) -> tuple[Schedule, MetricsReport]:
    start = time.perf_counter()
    schedule = run_algorithm(algorithm, scenario)
    elapsed = time.perf_counter() - start
    return schedule, evaluate_schedule(schedule, scenario, elapsed)


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


@dataclass
class SweepSpec:
    var: str  # one of SWEEP_VARS
    values: Sequence[int]
    algorithms: Sequence[str] = MAIN_ALGORITHMS
    seeds: Sequence[int] = tuple(range(10))
    n_devices: int = 140
    n_channels: int = 7
    params: SystemParams = field(default_factory=SystemParams)
    fading: str = "independent"
    include_runtime: bool = True

    def __post_init__(self):
        if self.var not in SWEEP_VARS:
            raise ValueError(f"sweep variable must be one of {sorted(SWEEP_VARS)}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")

    def point(self, value: int) -> tuple[int, int, SystemParams]:
        n, c, params = self.n_devices, self.n_channels, self.params
        if self.var == "N":
            n = int(value)
        elif self.var == "C":
            c = int(value)
        else:
            params = params.replace(delay_slots=int(value), pairing_limit=min(params.pairing_limit, int(value)))
        return n, c, params


def _run_cell(spec: SweepSpec, value: int, seed: int) -> list[dict]:
    n, c, params = spec.point(value)
    scenario = generate_scenario(n, c, params, seed, fading_mode=spec.fading)
    rows = []
    for alg in spec.algorithms:
        _, rep = evaluate(alg, scenario)
        row = {
            "sweep_var": spec.var,
            "value": value,
            "algorithm": alg,
            "seed": seed,
            "fraction_served": rep.fraction_served,
            "mean_delay": rep.mean_delay,
            "max_delay": rep.max_delay,
            "mean_aoi": rep.mean_aoi,
            "jain_bin": rep.jain_bin,
            "jain_dev": rep.jain_dev,
            "runtime_s": rep.runtime_s if spec.include_runtime else 0.0,
        }
        for b, v in enumerate(rep.served_bins):
            row[f"served_bin_{b}"] = v
        rows.append(row)
    return rows


def run_sweep(spec: SweepSpec, jobs: int = 1, progress: Callable[[int, int], None] | None = None) -> list[dict]:
    """Every (sweep value, seed) scenario under every algorithm, ordered by (value, seed)."""
    cells = [(v, s) for v in spec.values for s in spec.seeds]
    out: list[dict] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_run_cell, [spec] * len(cells), *zip(*cells)) if cells else []
            for k, rows in enumerate(results):
                out.extend(rows)
                if progress:
                    progress(k + 1, len(cells))
        return out
    for k, (v, s) in enumerate(cells):
        out.extend(_run_cell(spec, v, s))
        if progress:
            progress(k + 1, len(cells))
    return out


def write_csv(rows: Iterable[dict], fh, columns: Sequence[str] = CSV_COLUMNS):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])


def read_csv(fh) -> list[dict]:
    rows = []
    for raw in csv.DictReader(fh):
        row = {}
        for k, v in raw.items():
            if k in ("sweep_var", "algorithm"):
                row[k] = v
            else:
                row[k] = float(v)
        rows.append(row)
    return rows


def csv_text(rows: Iterable[dict], columns: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, columns)
    return buf.getvalue()


def summarize(rows: Iterable[dict], metric: str, var: str | None = None) -> list[dict]:
    """Mean, sample standard deviation and count of ``metric`` per (value, algorithm)."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    order: list[tuple] = []
    for row in rows:
        if var is not None and row["sweep_var"] != var:
            continue
        key = (row["value"], row["algorithm"])
        if key not in groups:
            order.append(key)
        groups[key].append(float(row[metric]))
    out = []
    for key in sorted(order, key=lambda k: (k[0], order.index(k))):
        vals = np.asarray(groups[key])
        vals = vals[~np.isnan(vals)]
        mean = float(vals.mean()) if vals.size else math.nan
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out.append({"value": key[0], "algorithm": key[1], "mean": mean, "sd": sd, "n": int(vals.size)})
    return out


FIGURES = {
    "fig4": ("N", "fraction_served"),
    "fig5": ("N", "mean_delay"),
    "fig6": ("C", "fraction_served"),
    "fig7": ("Delta", "fraction_served"),
}


def distance_figure(rows: Sequence[dict], n_devices: int, radius: float) -> list[dict]:
    """Served fraction per radial bin from the N sweep at ``n_devices``."""
    sel = [r for r in rows if r["sweep_var"] == "N" and int(r["value"]) == n_devices]
    width = radius / N_BINS
    out = []
    algs = list(dict.fromkeys(r["algorithm"] for r in sel))
    for b in range(N_BINS):
        for alg in algs:
            vals = np.array([r[f"served_bin_{b}"] for r in sel if r["algorithm"] == alg], dtype=float)
            vals = vals[~np.isnan(vals)]
            out.append({
                "value": (b + 0.5) * width,
                "algorithm": alg,
                "mean": float(vals.mean()) if vals.size else math.nan,
                "sd": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                "n": int(vals.size),
            })
    return out


def figure_tables(rows: Sequence[dict], distance_n: int = 140, radius: float = 50.0) -> dict[str, list[dict]]:
    tables = {}
    for name, (var, metric) in FIGURES.items():
        table = summarize(rows, metric, var)
        if table:
            tables[name] = table
    fig8 = distance_figure(rows, distance_n, radius)
    if any(r["n"] for r in fig8):
        tables["fig8"] = fig8
    return tables
