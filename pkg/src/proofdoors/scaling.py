"""Scaling classification of per-depth solving times.

Times are smoothed with the running-maximum envelope, linearly interpolated
between its jump points, then fitted with linear, polynomial and
exponential models.  The best coefficient of determination wins, with a
parsimony bonus on the linear fit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LINEAR = "linear"
POLYNOMIAL = "polynomial"
EXPONENTIAL = "exponential"
UNKNOWN = "unknown"

LINEAR_BONUS = 0.05
MIN_POINTS = 5
DEFAULT_DEGREE = 3
TIME_FLOOR = 1e-3  # seconds; floor before taking logs

SOLVED, TIMEOUT, SAT = "solved", "timeout", "sat"


@dataclass(frozen=True)
class TimingPoint:
    k: int
    size: float
    time: float
    status: str = SOLVED


@dataclass
class TimingSeries:
    points: list = field(default_factory=list)
    family: str = ""

    def __post_init__(self):
        ks = [p.k for p in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("depths must be strictly increasing")
        if any(p.time < 0 for p in self.points):
            raise ValueError("times must be nonnegative")

    @classmethod
    def from_lists(cls, ks: Sequence[int], sizes: Sequence[float], times: Sequence[float],
                   family: str = "") -> "TimingSeries":
        return cls([TimingPoint(int(k), float(s), float(t)) for k, s, t in zip(ks, sizes, times)], family)

    def truncated(self) -> "TimingSeries":
        """Points before the first SAT or timeout."""
        out = []
        for p in self.points:
            if p.status != SOLVED:
                break
            out.append(p)
        return TimingSeries(out, self.family)

    def subsequence(self, parity: int) -> "TimingSeries":
        return TimingSeries([p for p in self.points if p.k % 2 == parity], self.family)

    @property
    def ks(self):
        return [p.k for p in self.points]

    @property
    def sizes(self):
        return [p.size for p in self.points]

    @property
    def times(self):
        return [p.time for p in self.points]

    def __len__(self):
        return len(self.points)


@dataclass
class FitReport:
    label: str | None
    r2: dict
    params: dict
    n_points: int
    parity_labels: tuple | None = None

    @property
    def adjusted_linear_r2(self) -> float | None:
        r = self.r2.get(LINEAR)
        return None if r is None else r + LINEAR_BONUS

    def to_json(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x
        return {
            "label": self.label,
            "r2": {k: clean(v) for k, v in self.r2.items()},
            "adjusted_linear_r2": clean(self.adjusted_linear_r2),
            "params": {k: [clean(float(c)) for c in v] for k, v in self.params.items()},
            "n_points": self.n_points,
            "parity_labels": list(self.parity_labels) if self.parity_labels else None,
        }


def running_max(series: Sequence[float]) -> list:
    out, best = [], None
    for x in series:
        best = x if best is None or x > best else best
        out.append(best)
    return out


def envelope(series: TimingSeries | Sequence[float], ks: Sequence[float] | None = None) -> list[float]:
    """Running maximum, linearly interpolated between its jump points.

    Jump points are the first sample and every sample where the running
    maximum strictly increases.  Samples after the last jump keep its value.
    """
    if isinstance(series, TimingSeries):
        ks, times = series.ks, series.times
    else:
        times = list(series)
        ks = list(range(len(times))) if ks is None else list(ks)
    if not times:
        raise ValueError("empty series")
    rm = running_max(times)
    jumps = [0] + [i for i in range(1, len(rm)) if rm[i] > rm[i - 1]]
    out = list(map(float, rm))
    for a, b in zip(jumps, jumps[1:]):
        ka, kb = ks[a], ks[b]
        for i in range(a + 1, b):
            out[i] = rm[a] + (rm[b] - rm[a]) * (ks[i] - ka) / (kb - ka)
    return out


def r_squared(y: np.ndarray, yhat: np.ndarray) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 else 0.0
    return 1.0 - ss_res / ss_tot


def fit_models(xs: Sequence[float], ys: Sequence[float], poly_degree: int = DEFAULT_DEGREE) -> FitReport:
    """Least-squares linear, polynomial and exponential fits; no label.

    The exponential model is fitted by linear regression of ``ln max(y, eps)``
    on ``x``.  All R^2 values are computed on the original scale.
    Polynomial coefficients are in increasing degree order.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    if np.ptp(x) == 0:
        raise ValueError("degenerate design: all sizes equal")
    if np.any(np.diff(x) <= 0):
        raise ValueError("sizes must be strictly increasing")
    lin = np.polynomial.Polynomial.fit(x, y, 1).convert()
    deg = min(poly_degree, len(x) - 1)
    poly = np.polynomial.Polynomial.fit(x, y, deg).convert()
    logy = np.log(np.maximum(y, TIME_FLOOR))
    beta, ln_alpha = np.polyfit(x, logy, 1)
    exp_hat = np.exp(ln_alpha + beta * x)
    r2 = {
        LINEAR: r_squared(y, lin(x)),
        POLYNOMIAL: r_squared(y, poly(x)),
        EXPONENTIAL: r_squared(y, exp_hat),
    }
    params = {
        LINEAR: list(np.pad(lin.coef, (0, 2 - len(lin.coef)))),
        POLYNOMIAL: list(np.pad(poly.coef, (0, deg + 1 - len(poly.coef)))),
        EXPONENTIAL: [math.exp(ln_alpha), float(beta)],
    }
    return FitReport(None, r2, params, len(x))


def _label(rep: FitReport) -> str:
    # strict comparisons: ties go to the simpler model
    best, best_score = LINEAR, rep.r2[LINEAR] + LINEAR_BONUS
    for name in (POLYNOMIAL, EXPONENTIAL):
        if rep.r2[name] > best_score:
            best, best_score = name, rep.r2[name]
    return best


def classify(series: TimingSeries, poly_degree: int = DEFAULT_DEGREE) -> FitReport:
    s = series.truncated()
    n = len(s)
    if n < MIN_POINTS:
        return FitReport(UNKNOWN, {}, {}, n)
    rep = fit_models(s.sizes, envelope(s), poly_degree)
    rep.label = _label(rep)
    return rep


def classify_parity(series: TimingSeries, poly_degree: int = DEFAULT_DEGREE) -> FitReport:
    """Overall classification plus independent labels for odd and even depths."""
    rep = classify(series, poly_degree)
    s = series.truncated()
    odd = classify(s.subsequence(1), poly_degree)
    even = classify(s.subsequence(0), poly_degree)
    rep.parity_labels = (odd.label, even.label)
    return rep


# -- CSV ingestion and reports ---------------------------------------------------

CSV_COLUMNS = ("family", "k", "vars", "clauses", "time_s", "status")
_STATUS_ALIASES = {"solved": SOLVED, "unsat": SOLVED, "ok": SOLVED, "timeout": TIMEOUT,
                   "sat": SAT}


class SchemaError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


def read_timing_csv(source, size_measure: str = "clauses") -> dict[str, TimingSeries]:
    """Parse a timing CSV into one series per family, ordered by depth.

    ``source`` is a path or an open text stream.  Row numbers in errors
    count the header as row 1.
    """
    if size_measure not in ("clauses", "vars"):
        raise ValueError(f"unknown size measure {size_measure!r}")
    fh = open(source, newline="") if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__") else source
    try:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(f"missing columns {missing}", 1)
        rows: dict[str, list[TimingPoint]] = {}
        for rowno, row in enumerate(reader, 2):
            try:
                k = int(row["k"])
                size = float(row[size_measure])
                t = float(row["time_s"])
            except (TypeError, ValueError):
                raise SchemaError("non-numeric k, size or time", rowno) from None
            status = _STATUS_ALIASES.get((row["status"] or "").strip().lower())
            if status is None:
                raise SchemaError(f"unknown status {row['status']!r}", rowno)
            if t < 0 or not math.isfinite(t):
                raise SchemaError("negative or non-finite time", rowno)
            fam = row["family"]
            if not fam:
                raise SchemaError("empty family name", rowno)
            pts = rows.setdefault(fam, [])
            if any(p.k == k for p in pts):
                raise SchemaError(f"duplicate depth {k} for family {fam}", rowno)
            pts.append(TimingPoint(k, size, t, status))
    finally:
        if fh is not source:
            fh.close()
    return {fam: TimingSeries(sorted(pts, key=lambda p: p.k), fam) for fam, pts in rows.items()}


def classify_families(families: dict[str, TimingSeries], poly_degree: int = DEFAULT_DEGREE,
                      parity: bool = False) -> dict[str, FitReport]:
    fn = classify_parity if parity else classify
    return {fam: fn(s, poly_degree) for fam, s in sorted(families.items())}


def report_json(reports: dict[str, FitReport]) -> str:
    return json.dumps({fam: r.to_json() for fam, r in reports.items()}, indent=1)


def predict(rep: FitReport, xs: Iterable[float]) -> list[float]:
    """Evaluate the selected model at ``xs``."""
    x = np.asarray(list(xs), dtype=float)
    if rep.label == EXPONENTIAL:
        a, b = rep.params[EXPONENTIAL]
        return list(a * np.exp(b * x))
    if rep.label in (LINEAR, POLYNOMIAL):
        return list(np.polynomial.Polynomial(rep.params[rep.label])(x))
    return []


def plot_svg(series: TimingSeries, rep: FitReport, width: int = 480, height: int = 320) -> str:
    """Envelope points and the selected fit, for eyeballing a label."""
    s = series.truncated()
    margin = 40
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
            f'<rect width="{width}" height="{height}" fill="white"/>'
            f'<text x="{margin}" y="20" font-size="12" font-family="sans-serif">'
            f'{series.family} : {rep.label}</text>')
    if len(s) < 2:
        return head + "</svg>\n"
    xs = np.asarray(s.sizes, dtype=float)
    ys = np.asarray(envelope(s), dtype=float)
    grid = np.linspace(xs.min(), xs.max(), 100)
    fit = np.asarray(predict(rep, grid)) if rep.label != UNKNOWN else np.array([])
    ymax = max(ys.max(), fit.max() if fit.size else 0.0) or 1.0
    ymin = min(0.0, ys.min())
    span_x = float(np.ptp(xs)) or 1.0

    def px(x):
        return margin + (x - xs.min()) / span_x * (width - 2 * margin)

    def py(y):
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin)

    body = [head, f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
            f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>']
    for x, y in zip(xs, ys):
        body.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.5" fill="#333"/>')
    if fit.size:
        pts = " ".join(f"{px(x):.1f},{py(min(y, ymax)):.1f}" for x, y in zip(grid, fit))
        body.append(f'<polyline points="{pts}" fill="none" stroke="#c00" stroke-width="1.5"/>')
    body.append("</svg>")
    return "\n".join(body) + "\n"
