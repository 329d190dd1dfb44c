"""Bound-comparison experiments: figure sweeps, regime slopes, proposition checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bounds import (
    BOUND_NAMES,
    NotApplicable,
    bound_barbour_hall,
    bound_lecam,
    bound_roos_equal,
    bound_thm1_tv,
    full_report,
    BoundReport,
)
from .compound import SumSpec, SummandSpec
from .pmf import DEFAULT_POLICY, TruncationPolicy, geometric

MAX_SUMMANDS = 5000
MAX_SUPPORT = 4096

CSV_COLUMNS = BOUND_NAMES + ("exact_tv", "exact_kl", "tv_budget", "flags")

FIGURES = ("2a", "2b", "2c", "3a", "3b")

DEFAULT_ALPHAS = tuple(round(0.05 * k, 2) for k in range(1, 10))
# the λ range for 2c and the n grid for 3a/3b are not given with the figures; these are our defaults
DEFAULT_LAMBDAS = tuple(float(k) for k in range(1, 21))
DEFAULT_NS = (25, 50, 100, 200, 400, 800)
REGIME_NS = (50, 100, 200, 400, 800, 1600, 3200)


@dataclass(frozen=True)
class GridPoint:
    """One configuration of a sweep: its sweep-variable values and the sum it describes."""

    sweep: dict
    build: Callable[[TruncationPolicy], SumSpec]


@dataclass
class ExperimentConfig:
    name: str
    sweep_columns: tuple[str, ...]
    grid: list[GridPoint]
    truncation: TruncationPolicy = DEFAULT_POLICY
    output_path: str | None = None
    regime: str = "fixed"

    def __post_init__(self):
        if not self.grid:
            raise ValueError("experiment grid is empty")
        if self.regime not in ("I", "II", "fixed"):
            raise ValueError(f"unknown regime {self.regime!r}")


def check_desk_scale(n: int, policy: TruncationPolicy) -> None:
    if n > MAX_SUMMANDS:
        raise ValueError(f"{n} summands exceeds the desk-scale cap of {MAX_SUMMANDS}; split the run")
    if policy.max_support > MAX_SUPPORT:
        raise ValueError(f"max_support {policy.max_support} exceeds {MAX_SUPPORT}")


def equal_geometric_spec(n: int, p: float, alpha: float, policy: TruncationPolicy) -> SumSpec:
    return SumSpec.equal(n, p, geometric(alpha, policy))


def spread_geometric_spec(n: int, p: float, lo: float, hi: float, policy: TruncationPolicy) -> SumSpec:
    """Summands with equal ``p`` and geometric severities, parameters equispaced in [lo, hi]."""
    alphas = np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2])
    return SumSpec(SummandSpec(p, geometric(float(a), policy)) for a in alphas)


def figure_config(
    name: str,
    policy: TruncationPolicy = DEFAULT_POLICY,
    n: int | None = None,
    lam: float | None = None,
    alpha: float | None = None,
    values: Sequence[float] | None = None,
    alpha_range: tuple[float, float] = (0.15, 0.25),
) -> ExperimentConfig:
    """Grid for one figure; ``values`` overrides the swept variable's defaults.

    2a and 2b share one configuration (alpha sweep, n = 100, lam = 5); 2b is
    only a different presentation of the same data.
    """
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    if name in ("2a", "2b"):
        n = n or 100
        lam = lam or 5.0
        check_desk_scale(n, policy)
        grid = [
            GridPoint({"alpha": a}, lambda pol, a=a: equal_geometric_spec(n, lam / n, a, pol))
            for a in (values or DEFAULT_ALPHAS)
        ]
        return ExperimentConfig(name, ("alpha",), grid, policy)
    if name == "2c":
        n = n or 100
        alpha = alpha or 0.2
        check_desk_scale(n, policy)
        lams = values or DEFAULT_LAMBDAS
        for lm in lams:
            if not 0 < lm < n:
                raise ValueError(f"lam must lie in (0, n) so that p = lam/n < 1, got {lm}")
        grid = [
            GridPoint({"lam": lm}, lambda pol, lm=lm: equal_geometric_spec(n, lm / n, alpha, pol))
            for lm in lams
        ]
        return ExperimentConfig(name, ("lam",), grid, policy)
    lo, hi = alpha_range
    ns = [int(v) for v in (values or DEFAULT_NS)]
    for m in ns:
        check_desk_scale(m, policy)
    if name == "3a":
        lam = lam or 5.0
        p_of = lambda m: lam / m
        regime = "I"
    else:
        mu = lam or 0.5
        p_of = lambda m: math.sqrt(mu / m)
        regime = "II"
    for m in ns:
        if not 0 < p_of(m) < 1:
            raise ValueError(f"n = {m} gives p = {p_of(m)} outside (0, 1)")
    grid = [
        GridPoint({"n": m}, lambda pol, m=m: spread_geometric_spec(m, p_of(m), lo, hi, pol))
        for m in ns
    ]
    return ExperimentConfig(name, ("n",), grid, policy, regime=regime)


def _flag_text(report: BoundReport) -> str:
    parts = []
    for name in BOUND_NAMES:
        if getattr(report, name) is None:
            parts.append(f"{name}=n/a")
        elif math.isinf(getattr(report, name)):
            parts.append(f"{name}=vacuous")
    if report.stein is not None and report.stein.vacuous:
        parts.append("stein=vacuous")
    return ";".join(parts)


def report_row(sweep: dict, report: BoundReport) -> dict:
    row = dict(sweep)
    for name in BOUND_NAMES:
        row[name] = getattr(report, name)
    row["exact_tv"] = report.exact_tv.value if report.exact_tv else None
    row["exact_kl"] = report.exact_kl.value if report.exact_kl else None
    row["tv_budget"] = report.exact_tv.error_budget if report.exact_tv else None
    row["flags"] = _flag_text(report)
    return row


def run_config(config: ExperimentConfig, exact: bool = True) -> list[dict]:
    """Rows in grid order; each carries the bounds, exact distances and budget."""
    rows = []
    for point in config.grid:
        spec = point.build(config.truncation)
        report = full_report(spec, config.truncation, exact=exact, with_j1=False)
        rows.append(report_row(point.sweep, report))
    return rows


def run_figure(name: str, policy: TruncationPolicy = DEFAULT_POLICY, **overrides) -> list[dict]:
    return run_config(figure_config(name, policy, **overrides))


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def rows_to_csv(rows: Iterable[dict], sweep_columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    columns = tuple(sweep_columns) + CSV_COLUMNS
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


@dataclass(frozen=True)
class SlopeFit:
    bound_name: str
    slope: float
    intercept: float
    r_squared: float
    points: int
    flag: str = ""


def fit_loglog(name: str, ns: Sequence[float], values: Sequence[float | None]) -> SlopeFit:
    """Least-squares slope of log(value) against log(n)."""
    pairs = [(n, v) for n, v in zip(ns, values) if v is not None and math.isfinite(v) and v > 0]
    flag = ""
    if len(pairs) < len(ns):
        flag = f"dropped {len(ns) - len(pairs)} non-finite or n/a values"
    if len(pairs) < 4:
        return SlopeFit(name, math.nan, math.nan, math.nan, len(pairs), "degenerate: fewer than 4 points")
    x = np.log([n for n, _ in pairs])
    y = np.log([v for _, v in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-24 else 1.0 - ss_res / ss_tot
    return SlopeFit(name, float(slope), float(intercept), r2, len(pairs), flag)


REGIME_BOUNDS = ("lecam", "roos_general", "bcl_stein", "thm2_tv", "thm3_tv")


def regime_spec(regime: str, param: float, n: int, policy: TruncationPolicy = DEFAULT_POLICY,
                alpha_range: tuple[float, float] = (0.15, 0.25)) -> SumSpec:
    """Regime I: ``p = param / n``; Regime II: ``p = sqrt(param / n)``."""
    if regime == "I":
        p = param / n
    elif regime == "II":
        p = math.sqrt(param / n)
    else:
        raise ValueError(f"regime must be 'I' or 'II', got {regime!r}")
    if not 0 < p < 1:
        raise ValueError(f"n = {n} gives p = {p} outside (0, 1)")
    return spread_geometric_spec(n, p, *alpha_range, policy)


def run_regimes(
    regime: str,
    param: float,
    n_values: Sequence[int] = REGIME_NS,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> tuple[list[SlopeFit], list[dict]]:
    """Log-log slopes of each bound in ``n``; returns the fits and the raw rows."""
    if len(n_values) < 4:
        raise ValueError("a slope fit needs at least 4 values of n")
    rows = []
    for n in n_values:
        check_desk_scale(n, policy)
        spec = regime_spec(regime, param, n, policy)
        report = full_report(spec, policy, exact=False, with_j1=False)
        rows.append({"n": n, **{b: getattr(report, b) for b in REGIME_BOUNDS}})
    fits = [fit_loglog(b, n_values, [r[b] for r in rows]) for b in REGIME_BOUNDS]
    return fits, rows


@dataclass
class PropositionRow:
    p: float
    n: int
    thm1_tv: float
    lecam: float
    barbour_hall: float
    roos_equal: float | None
    region1: bool
    part1: bool
    region2: bool
    part2: bool
    region3: bool
    part3: bool

    @property
    def ok(self) -> bool:
        return all(not region or part for region, part in
                   ((self.region1, self.part1), (self.region2, self.part2), (self.region3, self.part3)))


@dataclass
class PropositionReport:
    rows: list[PropositionRow] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(r.ok for r in self.rows)

    def failures(self, part: int) -> list[PropositionRow]:
        return [r for r in self.rows if getattr(r, f"region{part}") and not getattr(r, f"part{part}")]


DEFAULT_P_GRID = (0.02,) + tuple(round(0.05 * k, 2) for k in range(1, 10))
DEFAULT_N_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


def run_proposition_checks(
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
) -> PropositionReport:
    """Compare the Pinsker form of the relative entropy bound with the classical bounds.

    Equal ``p`` and equal severities, so only ``(n, p)`` matter and the unit
    severity stands in for any ``Q``. Regions: part 1 needs
    ``n > 1/(sqrt(2) p (1 - p))``; part 2 needs ``p < 1/2``; part 3 needs both
    and ``p > 0.012``.
    """
    from .pmf import unit_severity

    unit = unit_severity()
    report = PropositionReport()
    for p in p_grid:
        if not 0 < p < 1:
            raise ValueError(f"p must lie in (0, 1), got {p}")
        for n in n_grid:
            if n < 1:
                raise ValueError(f"n must be >= 1, got {n}")
            spec = SumSpec.equal(n, p, unit)
            t1 = bound_thm1_tv(spec)
            lc = bound_lecam(spec)
            bh = bound_barbour_hall(spec)
            try:
                roos = bound_roos_equal(spec)
            except NotApplicable:
                roos = None
            threshold = 1.0 / (math.sqrt(2.0) * p * (1.0 - p))
            r1 = n > threshold
            r2 = p < 0.5
            r3 = 0.012 < p < 0.5 and r1
            best = min(v for v in (lc, bh, roos) if v is not None)
            report.rows.append(
                PropositionRow(p, n, t1, lc, bh, roos, r1, t1 <= lc, r2, t1 <= bh, r3, t1 <= best)
            )
    return report
