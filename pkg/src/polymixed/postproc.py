"""Convergence records, rates, and table emission.

Primary error columns follow the superconvergence theory: err_u is
||Q_h u - u_h||_0 and err_q is ||Pi_h q - q_h||_V.  Direct errors against
the exact solution (||u - u_h||, ||q - q_h||_V) are carried as diagnostic
columns; their flux component is the quantity the a-priori bound controls
at rate k+1.
"""

from dataclasses import dataclass, field

import numpy as np

RATE_DASH = "—"  # em dash for undefined rates


@dataclass
class ConvergenceRecord:
    level: int
    err_u: float  # ||Q_h u - u_h||_0
    err_q: float  # ||Pi_h q - q_h||_V
    err_u_direct: float = np.nan  # ||u - u_h||_0
    err_q_direct: float = np.nan  # ||q - q_h||_V
    num_vdofs: int = 0
    num_pdofs: int = 0
    wall_time: float = 0.0
    div_defect: float = np.nan  # ||div(Pi_h q - q_h)|| diagnostic
    rate_u: float = None
    rate_q: float = None
    rate_u_direct: float = None
    rate_q_direct: float = None


def _rate(prev, cur):
    if prev is None:
        return None
    if cur == 0.0 or prev == 0.0:
        return None  # rate undefined on an exactly-zero error
    return float(np.log2(prev / cur))


def rates(records):
    """Fill the rate fields from successive levels (in place; returns the
    list for convenience)."""
    if any(
        b.level <= a.level for a, b in zip(records, records[1:])
    ):
        raise ValueError("records must have strictly increasing levels")
    prev = None
    for rec in records:
        if prev is not None:
            rec.rate_u = _rate(prev.err_u, rec.err_u)
            rec.rate_q = _rate(prev.err_q, rec.err_q)
            rec.rate_u_direct = _rate(prev.err_u_direct, rec.err_u_direct)
            rec.rate_q_direct = _rate(prev.err_q_direct, rec.err_q_direct)
        prev = rec
    return records


def fit_rate(records, column="err_u", last=2):
    """Least-squares slope of log2(err) against level over the trailing
    `last` records (last=2 reduces to the final rate)."""
    recs = records[-last:]
    lv = np.array([r.level for r in recs], dtype=float)
    er = np.array([getattr(r, column) for r in recs], dtype=float)
    if np.any(er <= 0):
        return None
    slope = np.polyfit(lv, np.log2(er), 1)[0]
    return float(-slope)


def _sig4(x):
    """Scientific notation with 4 significant digits."""
    if not np.isfinite(x):
        return ""
    return f"{x:.3e}"


def _fmt_rate(r, csv=False):
    if r is None:
        return "" if csv else RATE_DASH
    return f"{r:.2f}"


def emit_table(records, fmt="markdown", diagnostics=False):
    """Render records as a table mirroring the paper's layout: level,
    err_u, rate, err_q_V, rate (optionally plus direct-error columns)."""
    if not records:
        raise ValueError("no records to emit")
    cols = ["level", "err_u", "rate", "err_qV", "rate"]
    if diagnostics:
        cols += ["err_u_direct", "rate", "err_qV_direct", "rate"]
    rows = []
    for r in records:
        row = [str(r.level), _sig4(r.err_u), r.rate_u, _sig4(r.err_q), r.rate_q]
        if diagnostics:
            row += [
                _sig4(r.err_u_direct),
                r.rate_u_direct,
                _sig4(r.err_q_direct),
                r.rate_q_direct,
            ]
        rows.append(row)
    if fmt == "csv":
        lines = [",".join(cols)]
        for row in rows:
            lines.append(
                ",".join(
                    _fmt_rate(v, csv=True) if isinstance(v, float) or v is None
                    else str(v)
                    for v in row
                )
            )
        return "\n".join(lines) + "\n"
    if fmt != "markdown":
        raise ValueError(f"unknown table format {fmt!r}")
    body = []
    for row in rows:
        body.append(
            [
                _fmt_rate(v) if isinstance(v, float) or v is None else str(v)
                for v in row
            ]
        )
    widths = [
        max(len(c), max(len(b[i]) for b in body)) for i, c in enumerate(cols)
    ]
    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    out = [line(cols), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out.extend(line(b) for b in body)
    return "\n".join(out) + "\n"
