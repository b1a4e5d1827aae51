"""Least-squares calibration of the switchover-time formula against measured clock times."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .asymptotics import switchover_time_from

HEADER = ("series_id", "c0_mol_l", "m0_mol_l", "t_sw_s")


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateDataError(ValueError):
    """The measurements cannot separate k0 from phi."""


@dataclass(frozen=True)
class Measurement:
    series_id: str
    c0: float  # mol/l
    m0: float  # mol/l
    t_sw_observed: float  # s

    def __post_init__(self):
        if not (self.c0 > 0 and self.m0 > 0 and self.t_sw_observed > 0):
            raise ValueError(f"c0, m0 and t_sw must be positive: {self}")


@dataclass(frozen=True)
class FitResult:
    k0_hat: float
    phi_hat: float
    sse: float
    residuals: tuple[float, ...]  # observed - predicted, input order
    iterations: int
    converged: bool
    gradient_norm: float


def _parse_positive(text: str, name: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name}: cannot parse {text!r} as a number", line) from None
    if not (value > 0 and math.isfinite(value)):
        raise ParseError(f"{name} must be positive and finite, got {text!r}", line)
    return value


def _parse_times(text: str, line: int) -> list[float]:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        parts = [p for p in text[1:-1].split(",") if p.strip()]
        if not parts:
            raise ParseError("empty replicate list", line)
        return [_parse_positive(p.strip(), "t_sw_s", line) for p in parts]
    return [_parse_positive(text, "t_sw_s", line)]


def load_measurements(source: str | Iterable[str]) -> list[Measurement]:
    """Parse measurement CSV text (header ``series_id,c0_mol_l,m0_mol_l,t_sw_s``).

    A ``t_sw_s`` cell may hold a quoted replicate list such as
    ``"(116.86, 122.34)"``, which expands to one measurement per replicate.
    Empty input gives an empty list.
    """
    lines = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(lines)
    measurements: list[Measurement] = []
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            if tuple(cell.strip() for cell in row) != HEADER:
                raise ParseError(f"expected header {','.join(HEADER)}, got {','.join(row)}", line)
            header_seen = True
            continue
        if len(row) != len(HEADER):
            raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", line)
        series = row[0].strip()
        c0 = _parse_positive(row[1].strip(), "c0_mol_l", line)
        m0 = _parse_positive(row[2].strip(), "m0_mol_l", line)
        for t in _parse_times(row[3], line):
            measurements.append(Measurement(series, c0, m0, t))
    return measurements


def read_measurements(path: str | Path) -> list[Measurement]:
    with open(path, newline="", encoding="utf-8") as fh:
        return load_measurements(fh)


def table1() -> list[Measurement]:
    """The bundled kitchen-experiment data set: two series, five conditions, two repeats."""
    text = resources.files("clockwork").joinpath("data/table1.csv").read_text(encoding="utf-8")
    return load_measurements(text)


def write_measurements(measurements: Sequence[Measurement], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(HEADER)
    for m in measurements:
        writer.writerow([m.series_id, repr(m.c0), repr(m.m0), repr(m.t_sw_observed)])


def predict(measurement: Measurement, k0: float, phi: float) -> float:
    """Predicted switchover time in seconds for one measured condition."""
    if not k0 > 0:
        raise ValueError("k0 must be positive")
    return float(switchover_time_from(measurement.c0, measurement.m0, k0, phi))


def _arrays(measurements: Sequence[Measurement]):
    c0 = np.array([m.c0 for m in measurements], dtype=float)
    m0 = np.array([m.m0 for m in measurements], dtype=float)
    t = np.array([m.t_sw_observed for m in measurements], dtype=float)
    return c0, m0, t


def sse(measurements: Sequence[Measurement], k0: float, phi: float) -> float:
    c0, m0, t = _arrays(measurements)
    r = t - switchover_time_from(c0, m0, k0, phi)
    return float(np.dot(r, r))


def fit(measurements: Sequence[Measurement], k0_init: float = 1.0, phi_init: float = 0.1, *,
        max_iter: int = 200, step_tol: float = 1e-10, grad_tol: float = 1e-8) -> FitResult:
    """Fit (k0, phi) by unweighted least squares on all replicates.

    Levenberg-Marquardt on (log k0, phi), so k0 stays positive while phi is
    unconstrained. Converged means the last step was below ``step_tol``
    relative to (k0, |phi|) and the gradient of SSE, divided by the sum of
    squared observations, is below ``grad_tol``. Non-convergence returns the
    best iterate with ``converged=False``.
    """
    if len(measurements) < 2:
        raise DegenerateDataError("need at least two measurements to fit two parameters")
    c0, m0, t = _arrays(measurements)
    ratios = np.unique(np.round(c0 / m0, 12))
    if ratios.size < 2:
        raise DegenerateDataError(
            "all rows share one c0/m0 ratio; k0 and phi are not separately identifiable")
    if not k0_init > 0:
        raise ValueError("k0_init must be positive")

    scale = float(np.dot(t, t))
    inv_m0 = 1.0 / m0
    ratio = c0 * inv_m0

    def model(theta):
        # t_pred = exp(-log k0) (c0/m0 - phi) / m0
        return np.exp(-theta[0]) * (ratio - theta[1]) * inv_m0

    def jacobian(theta, pred):
        # of the residual t - t_pred
        return np.column_stack([pred, np.exp(-theta[0]) * inv_m0])

    theta = np.array([math.log(k0_init), float(phi_init)])
    pred = model(theta)
    r = t - pred
    cost = float(np.dot(r, r))
    lam = 1e-3
    converged = False
    grad_norm = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        J = jacobian(theta, pred)
        g = J.T @ r
        A = J.T @ J
        step = None
        while lam < 1e16:
            damped = A + lam * np.diag(np.diag(A))
            delta = np.linalg.solve(damped, -g)
            trial = theta + delta
            trial_pred = model(trial)
            trial_r = t - trial_pred
            trial_cost = float(np.dot(trial_r, trial_r))
            if trial_cost <= cost:
                step = delta
                theta, pred, r, cost = trial, trial_pred, trial_r, trial_cost
                lam = max(lam * 0.1, 1e-12)
                break
            lam *= 10.0
        grad_norm = float(np.linalg.norm(2.0 * jacobian(theta, pred).T @ r)) / scale
        k0 = math.exp(theta[0])
        if step is None:
            # no downhill step left at any damping
            converged = grad_norm < grad_tol
            break
        dk0 = k0 * (1.0 - math.exp(-step[0]))
        step_size = math.hypot(dk0, step[1])
        if step_size < step_tol * (k0 + abs(theta[1])) and grad_norm < grad_tol:
            converged = True
            break

    k0_hat = math.exp(theta[0])
    phi_hat = float(theta[1])
    if phi_hat < 0 or phi_hat > 0.5:
        warnings.warn(f"fitted phi = {phi_hat:.3g} lies outside [0, 1/2]; "
                      "physically this is a boundary case", stacklevel=2)
    return FitResult(k0_hat=k0_hat, phi_hat=phi_hat, sse=cost,
                     residuals=tuple(float(x) for x in r), iterations=iterations,
                     converged=converged, gradient_norm=grad_norm)


@dataclass(frozen=True)
class ReportRow:
    series_id: str
    variable: str  # "c0" or "m0", whichever the series varies
    value: float
    c0: float
    m0: float
    observed: float
    predicted: float

    @property
    def residual(self) -> float:
        return self.observed - self.predicted


@dataclass(frozen=True)
class FitReport:
    result: FitResult
    rows: tuple[ReportRow, ...]

    def series(self) -> dict[str, list[ReportRow]]:
        out: dict[str, list[ReportRow]] = {}
        for row in self.rows:
            out.setdefault(row.series_id, []).append(row)
        return out

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "variable", "value", "c0_mol_l", "m0_mol_l",
                         "t_sw_observed_s", "t_sw_predicted_s", "residual_s"])
        for row in self.rows:
            writer.writerow([row.series_id, row.variable, _g(row.value), _g(row.c0), _g(row.m0),
                             _g(row.observed), _g(row.predicted), _g(row.residual)])

    def summary(self) -> str:
        res = self.result
        lines = [
            "switchover-time fit",
            f"  k0        = {res.k0_hat:.6g} l/mol/s",
            f"  phi       = {res.phi_hat:.6g}",
            f"  SSE       = {res.sse:.6g} s^2",
            f"  rows      = {len(self.rows)}",
            f"  iterations= {res.iterations}",
            f"  converged = {'yes' if res.converged else 'no'}",
        ]
        for sid, rows in self.series().items():
            rms = math.sqrt(sum(r.residual ** 2 for r in rows) / len(rows))
            lines.append(f"  series {sid}: {len(rows)} rows varying {rows[0].variable}, "
                         f"rms residual {rms:.4g} s")
        return "\n".join(lines) + "\n"


def _g(x: float) -> str:
    return format(x, ".17g")


def _varying_column(rows: Sequence[Measurement]) -> str:
    def spread(values):
        values = np.asarray(values)
        return (values.max() - values.min()) / values.mean()

    c_spread = spread([m.c0 for m in rows])
    m_spread = spread([m.m0 for m in rows])
    return "m0" if m_spread > c_spread else "c0"


def fit_report(result: FitResult, measurements: Sequence[Measurement]) -> FitReport:
    """Observed against predicted switchover times, grouped by series.

    Each series is tagged with the concentration it varies (the one with the
    larger relative spread), which is the natural x-axis for plotting it.
    """
    groups: dict[str, list[Measurement]] = {}
    for m in measurements:
        groups.setdefault(m.series_id, []).append(m)
    variable = {sid: _varying_column(rows) for sid, rows in groups.items()}
    rows = []
    for m in measurements:
        var = variable[m.series_id]
        rows.append(ReportRow(m.series_id, var, m.c0 if var == "c0" else m.m0, m.c0, m.m0,
                              m.t_sw_observed, predict(m, result.k0_hat, result.phi_hat)))
    return FitReport(result, tuple(rows))
