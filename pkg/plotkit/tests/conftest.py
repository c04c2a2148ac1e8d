"""Synthetic diagnostics CSVs for the plot tests.

The writer here mirrors the solver's public file format (versioned comment
line, fixed column order, `.17g` floats, booleans as 0/1) so the tests stay
coupled to the format contract alone.
"""

import numpy as np

HEAD_COLUMNS = [
    "t",
    "total_energy",
    "dissipation",
    "max_Q_norm",
    "Lambda",
    "Qindex",
    "f_t",
    "bkm_integrand",
    "ps_integrand",
]
TAIL_COLUMNS = ["hs_u", "hs_gradQ", "log_bound_ratio", "lambda_truncated"]


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def sample_row(t, q_max=4, **overrides):
    """One plausible time sample of a smoothly decaying run."""
    decay = float(np.exp(-2.0 * t))
    row = dict(
        t=t,
        total_energy=2.0 * decay,
        dissipation=1.5 * decay,
        max_Q_norm=0.5,
        Lambda=4.0,
        Qindex=2,
        f_t=0.4 * decay,
        bkm_integrand=1.1 * decay,
        ps_integrand=3.0 * decay**4,
        crit2=tuple(decay * 0.6 * 0.5**q for q in range(-1, q_max + 1)),
        hs_u=1.2 * decay,
        hs_gradQ=0.8 * decay,
        log_bound_ratio=0.3,
        lambda_truncated=False,
    )
    row.update(overrides)
    return row


def zero_row(t, q_max=4):
    """The sample an all-zero state produces (sentinel Lambda = 1)."""
    return sample_row(
        t, q_max=q_max, total_energy=0.0, dissipation=0.0, max_q_norm=0.0,
        max_Q_norm=0.0, Lambda=1.0, Qindex=0, f_t=0.0, bkm_integrand=0.0,
        ps_integrand=0.0, crit2=(0.0,) * (q_max + 2), hs_u=0.0, hs_gradQ=0.0,
        log_bound_ratio=0.0,
    )


def write_csv(path, rows, n=32, q_max=4, schema=1, r=4.0, c_r=0.01, s=0.6,
              nu=1.0, mu=1.0, a=-0.2, b=-1.0, c=1.0):
    """Write rows (dicts from sample_row) in the solver's CSV layout."""
    shell_columns = [f"crit2_q{q}" for q in range(-1, q_max + 1)]
    header = HEAD_COLUMNS + shell_columns + TAIL_COLUMNS
    meta = (
        f"# qtlp-diagnostics schema={schema} n={n} q_max={q_max} "
        f"r={_fmt(r)} c_r={_fmt(c_r)} s={_fmt(s)} nu={_fmt(nu)} mu={_fmt(mu)} "
        f"a={_fmt(a)} b={_fmt(b)} c={_fmt(c)}"
    )
    lines = [meta, ",".join(header)]
    for row in rows:
        cells = []
        for name in header:
            if name.startswith("crit2_q"):
                shell = int(name[len("crit2_q"):])
                cells.append(_fmt(row["crit2"][shell + 1]))
            else:
                cells.append(_fmt(row[name]))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path
