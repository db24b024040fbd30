"""Ensemble-versus-ensemble comparison: normalized mean differences and KS."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .metrics import MetricVector

COLUMNS = ("density", "avg_clustering", "lcc_fraction", "avg_sp_norm", "modularity", "degree")
HEADERS = {
    "density": "Density",
    "avg_clustering": "Avg CC",
    "lcc_fraction": "% LCC",
    "avg_sp_norm": "Avg SP",
    "modularity": "Mod.",
    "degree": "Degree",
}
# scalar used for the mean difference of the degree column
DEGREE_SCALAR = "degree_gini"
FITTED_MARK = "†"


def normalized_mean_diff(real_vals: Sequence[float], gen_vals: Sequence[float]) -> float:
    """``|mean(real) - mean(gen)| / sigma_real``, population standard deviation."""
    real = np.asarray(real_vals, dtype=float)
    gen = np.asarray(gen_vals, dtype=float)
    if real.size < 2:
        raise ValueError("need at least two real values")
    if gen.size == 0:
        raise ValueError("need at least one generated value")
    sigma = real.std()
    if sigma == 0:
        raise ValueError("real values have zero standard deviation")
    return float(abs(real.mean() - gen.mean()) / sigma)


def ks_statistic(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Two-sample KS distance, evaluated exactly at every sample point."""
    x = np.sort(np.asarray(xs, dtype=float))
    y = np.sort(np.asarray(ys, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    mean_diff: Mapping[str, float | None]
    ks: Mapping[str, float | None]
    fitted: frozenset = frozenset()

    @classmethod
    def from_values(cls, name: str, mean_diff: Sequence[float | None] | None,
                    ks: Sequence[float | None], fitted: Iterable[str] = ()) -> "ComparisonRow":
        """Build a row from per-column values in :data:`COLUMNS` order."""
        if mean_diff is None:
            mean_diff = [None] * len(COLUMNS)
        if len(mean_diff) != len(COLUMNS) or len(ks) != len(COLUMNS):
            raise ValueError(f"expected {len(COLUMNS)} values per block")
        return cls(name, dict(zip(COLUMNS, mean_diff)), dict(zip(COLUMNS, ks)),
                   _fitted_set(fitted))

    @property
    def mean_diff_avg(self) -> float | None:
        vals = [v for c, v in self.mean_diff.items() if v is not None and c not in self.fitted]
        return float(np.mean(vals)) if vals else None

    @property
    def ks_avg(self) -> float | None:
        vals = [v for v in self.ks.values() if v is not None]
        return float(np.mean(vals)) if vals else None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean_diff": dict(self.mean_diff),
            "ks": dict(self.ks),
            "fitted": sorted(self.fitted),
            "mean_diff_avg": self.mean_diff_avg,
            "ks_avg": self.ks_avg,
        }


def _fitted_set(fitted: Iterable[str]) -> frozenset:
    out = frozenset(fitted)
    unknown = out - set(COLUMNS)
    if unknown:
        raise ValueError(f"unknown fitted metrics: {sorted(unknown)}")
    return out


def _fmt(v, mark=False) -> str:
    if v is None:
        return "-"
    return f"{v:.3f}" + (FITTED_MARK if mark else "")


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"columns": list(COLUMNS), "rows": [r.to_dict() for r in self.rows]}

    def to_text(self) -> str:
        """Aligned two-block table: normalized mean differences, then KS."""
        head = ["Model"] + [HEADERS[c] for c in COLUMNS] + ["Avg"]
        body = []
        for r in self.rows:
            body.append([r.name] + [_fmt(r.mean_diff[c], c in r.fitted) for c in COLUMNS]
                        + [_fmt(r.mean_diff_avg)])
        split = len(body)
        for r in self.rows:
            body.append([r.name] + [_fmt(r.ks[c]) for c in COLUMNS] + [_fmt(r.ks_avg)])
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]

        def line(cells):
            return "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                             for i, (c, w) in enumerate(zip(cells, widths))).rstrip()

        rule = "-" * len(line(head))
        out = [line(head), rule] + [line(b) for b in body[:split]] + [rule]
        out += [line(b) for b in body[split:]]
        if any(r.fitted for r in self.rows):
            out.append(f"{FITTED_MARK} fitted parameter; left out of the mean-difference average")
        return "\n".join(out) + "\n"


def _column(vectors: Sequence[MetricVector], name: str) -> list[float]:
    attr = DEGREE_SCALAR if name == "degree" else name
    return [getattr(v, attr) for v in vectors]


def summarize(real_metrics: Sequence[MetricVector], gen_metrics: Sequence[MetricVector],
              fitted: Iterable[str] = (), name: str = "generated",
              real_degrees: Sequence[float] | None = None,
              gen_degrees: Sequence[float] | None = None) -> ComparisonTable:
    """Compare a generated ensemble against the real one, column by column.

    The degree column's mean difference uses the degree Gini; its KS uses the
    pooled normalized degrees when both are given and the Gini values otherwise.
    A column whose real values have zero spread gets no mean difference (None).
    """
    mean_diff, ks = {}, {}
    for c in COLUMNS:
        real, gen = _column(real_metrics, c), _column(gen_metrics, c)
        if len(real) >= 2 and np.std(real) == 0:
            mean_diff[c] = None
        else:
            mean_diff[c] = normalized_mean_diff(real, gen)
        if c == "degree" and real_degrees is not None and gen_degrees is not None:
            ks[c] = ks_statistic(real_degrees, gen_degrees)
        else:
            ks[c] = ks_statistic(real, gen)
    return ComparisonTable([ComparisonRow(name, mean_diff, ks, _fitted_set(fitted))])
