"""Reading and rendering of qtlp diagnostics CSV files.

The input contract is the versioned CSV the solver writes: a comment line
``# qtlp-diagnostics schema=1 n=... q_max=...`` followed by a header row and
one row per time sample.  This module depends only on that file format, never
on the solver package itself.  Inputs are opened read-only; the only write is
the rendered image.
"""

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMA = 1
PLOT_KINDS = ("energy", "wavenumber", "criteria", "shells")

_HEAD_COLUMNS = [
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
_TAIL_COLUMNS = ["hs_u", "hs_gradQ", "log_bound_ratio", "lambda_truncated"]

_FIGSIZE = (7.0, 4.5)
_DPI = 130


@dataclass(frozen=True)
class PlotSpec:
    """One rendering job: which CSV, which image, which kind of plot."""

    input_csv: str
    output_image: str
    kind: str

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(
                f"unknown plot kind {self.kind!r}; expected one of {', '.join(PLOT_KINDS)}"
            )


def _parse_meta(line):
    """Parse the `# qtlp-diagnostics key=value ...` comment line."""
    prefix = "# qtlp-diagnostics "
    if not line.startswith(prefix):
        raise ValueError("missing qtlp-diagnostics schema line")
    meta = {}
    for token in line[len(prefix):].split():
        key, _, value = token.partition("=")
        if not _:
            raise ValueError(f"malformed schema token {token!r}")
        meta[key] = value
    schema = int(meta.get("schema", -1))
    if schema != SCHEMA:
        raise ValueError(
            f"unsupported diagnostics schema {schema}; this reader understands schema {SCHEMA}"
        )
    for key in ("n", "q_max"):
        if key not in meta:
            raise ValueError(f"schema line is missing {key}")
        meta[key] = int(meta[key])
    for key in ("r", "c_r", "s", "nu", "mu", "a", "b", "c"):
        if key in meta:
            meta[key] = float(meta[key])
    return meta


def read_diagnostics(path):
    """Read a diagnostics CSV; returns (meta dict, column dict).

    Scalar columns come back as float arrays keyed by column name
    (``lambda_truncated`` as bool); the per-shell columns are stacked into
    ``data["crit2"]`` of shape (samples, q_max + 2) with the shell indices
    listed in ``data["shells"]``.
    """
    with open(path, "r", newline="") as handle:
        first = handle.readline().rstrip("\n")
        meta = _parse_meta(first)
        reader = csv.DictReader(handle)
        shell_columns = [f"crit2_q{q}" for q in range(-1, meta["q_max"] + 1)]
        expected = _HEAD_COLUMNS + shell_columns + _TAIL_COLUMNS
        if reader.fieldnames != expected:
            raise ValueError("diagnostics columns do not match schema 1")
        rows = list(reader)
    if not rows:
        raise ValueError("diagnostics file holds no samples")

    data = {}
    for name in _HEAD_COLUMNS + _TAIL_COLUMNS:
        data[name] = np.array([float(row[name]) for row in rows])
    data["lambda_truncated"] = data["lambda_truncated"].astype(bool)
    data["crit2"] = np.array(
        [[float(row[name]) for name in shell_columns] for row in rows]
    )
    data["shells"] = list(range(-1, meta["q_max"] + 1))
    return meta, data


def _new_axes(title):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    ax.set_title(title)
    ax.set_xlabel("t")
    return fig, ax


def _plot_energy(meta, data, ax):
    """Total energy on the left axis, dissipation rate on the right."""
    ax.plot(data["t"], data["total_energy"], color="tab:blue", marker=".",
            label="total energy")
    ax.set_ylabel("total energy", color="tab:blue")
    twin = ax.twinx()
    twin.plot(data["t"], data["dissipation"], color="tab:red", marker=".",
              label="dissipation")
    twin.set_ylabel("dissipation", color="tab:red")
    ax.set_title(f"Energy balance (n={meta['n']}, nu={meta.get('nu', '?')})")


def _plot_wavenumber(meta, data, ax):
    """Dissipation-wavenumber staircase with its shell index alongside."""
    ax.step(data["t"], data["Lambda"], where="post", color="tab:blue",
            marker=".", label="Lambda")
    truncated = data["lambda_truncated"]
    if np.any(truncated):
        ax.plot(data["t"][truncated], data["Lambda"][truncated], "x",
                color="tab:red", label="truncated at grid top")
    ax.set_yscale("log", base=2)
    ax.set_ylabel("Lambda")
    twin = ax.twinx()
    twin.step(data["t"], data["Qindex"], where="post", color="tab:gray",
              marker=".", alpha=0.6, label="Qindex")
    twin.set_ylabel("Qindex")
    ax.legend(loc="upper left")
    ax.set_title("Dissipation wavenumber")


def _plot_criteria(meta, data, ax):
    """The pointwise-in-time regularity-criterion integrands."""
    series = (
        ("f_t", "f(t)"),
        ("bkm_integrand", "sup |curl u|"),
        ("ps_integrand", f"||u||_r^s_exp (r={meta.get('r', '?'):g})"),
        ("log_bound_ratio", "log-bound ratio"),
    )
    for column, label in series:
        ax.plot(data["t"], data[column], marker=".", label=label)
    ax.set_ylabel("integrand value")
    ax.legend()
    ax.set_title("Regularity-criterion integrands")


def _plot_shells(meta, data, ax):
    """Per-shell weighted sup-norm series, one line per dyadic shell."""
    for slot, q in enumerate(data["shells"]):
        ax.plot(data["t"], data["crit2"][:, slot], marker=".", label=f"q={q}")
    ax.set_ylabel("shell integrand")
    ax.legend(ncol=2, fontsize="small")
    ax.set_title("Per-shell criterion integrands")


_RENDERERS = {
    "energy": _plot_energy,
    "wavenumber": _plot_wavenumber,
    "criteria": _plot_criteria,
    "shells": _plot_shells,
}


def render(spec: PlotSpec) -> None:
    """Render one plot kind from a diagnostics CSV to a static image."""
    meta, data = read_diagnostics(spec.input_csv)
    fig, ax = _new_axes("")
    try:
        _RENDERERS[spec.kind](meta, data, ax)
        fig.tight_layout()
        fig.savefig(spec.output_image)
    finally:
        plt.close(fig)
