"""Side-by-side tables of quadrature values, asymptotes and optional Monte Carlo."""

import csv
import io
import json
from dataclasses import dataclass, field

from . import terms
from .montecarlo import ExperimentConfig, run_census

COLUMNS = ("n", "s_quad", "a_quad", "b_quad", "s_asym", "a_asym", "b_asym",
           "ratio_s", "ratio_a", "ratio_b")
MC_COLUMNS = ("mc_samples", "mc_s", "mc_s_se", "mc_a", "mc_a_se", "mc_b", "mc_b_se")


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    s_quad: float
    a_quad: float
    b_quad: float
    mc: dict = field(default_factory=dict)

    @property
    def s_asym(self):
        return terms.asymptote("S", self.n)

    @property
    def a_asym(self):
        return terms.asymptote("A", self.n)

    @property
    def b_asym(self):
        return terms.asymptote("B", self.n)

    @property
    def ratio_s(self):
        return self.s_quad / self.s_asym

    @property
    def ratio_a(self):
        return self.a_quad / self.a_asym

    @property
    def ratio_b(self):
        return self.b_quad / self.b_asym

    def as_dict(self):
        out = {name: getattr(self, name) for name in COLUMNS}
        out.update(self.mc)
        return out


def build_row(n, a_source="i", spec=None, mc_samples=None, seed=0, workers=1):
    """Quadrature (and optionally an edges census) for one n.

    ``a_source`` picks the A column: ``"i"`` for the linear intensity I_n,
    ``"exact"`` for A_n itself.
    """
    a_fun = {"i": terms.i_term, "exact": terms.a_term_exact}[a_source]
    results = {"s": terms.s_term(n), "a": a_fun(n, spec), "b": terms.s3_term(n, spec)}
    mc = {}
    if mc_samples:
        rep = run_census(ExperimentConfig(n=n, samples=mc_samples, seed=seed, mode="edges", workers=workers))
        mc = {"mc_samples": mc_samples}
        for key, stat in (("s", "cond_s"), ("a", "cond_a"), ("b", "cond_b")):
            mc[f"mc_{key}"] = rep.mean(stat)
            mc[f"mc_{key}_se"] = rep.std_error(stat)
    row = ComparisonRow(n=n, s_quad=results["s"].value, a_quad=results["a"].value,
                        b_quad=results["b"].value, mc=mc)
    return row, all(r.converged for r in results.values())


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return f"{v:.12g}"


def emit_table(rows, fmt="csv"):
    rows = list(rows)
    if not rows:
        raise ValueError("emit_table needs at least one row")
    cols = list(COLUMNS)
    if any(r.mc for r in rows):
        cols += list(MC_COLUMNS)
    if fmt == "json":
        return json.dumps([{c: r.as_dict().get(c) for c in cols} for r in rows], indent=1)
    if fmt != "csv":
        raise ValueError(f"unknown table format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = r.as_dict()
        w.writerow(["" if d.get(c) is None else _fmt(d[c]) for c in cols])
    return buf.getvalue()
