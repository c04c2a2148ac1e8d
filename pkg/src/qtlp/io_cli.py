"""Run configuration, snapshot files, diagnostics CSV, and the command line.

Exit codes: 0 on success, 2 for configuration/usage/parse errors, 3 when the
time integration blows up, 4 when the verification suite reports a failure.
All randomness flows from the single seed in the run configuration.
"""

from __future__ import annotations

import argparse
import csv
import os
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import (
    BlowUpError,
    SolverConfig,
    State,
    random_state,
    step,
    taylor_green_state,
)
from .lpanalysis import (
    DiagnosticsRecord,
    collect_diagnostics,
    criterion_accumulators,
    shared_ladder,
)
from .qtensor import MaterialParams, QTensorField
from .spectral import Grid, VelocityField
from .verify import verify_suite, write_report_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_VERIFY = 4

SNAPSHOT_MAGIC = b"QTLP"
SNAPSHOT_VERSION = 1
CSV_SCHEMA = 1

_SNAP_HEADER = struct.Struct("<4sII")  # magic, format version, grid size
_SNAP_SCALARS = struct.Struct("<6d")  # t, nu, mu, a, b, c


# ---------------------------------------------------------------------------
# Snapshot files
# ---------------------------------------------------------------------------


def save_snapshot(path, state: State, params: MaterialParams) -> None:
    """Write a state as eight little-endian float64 fields, x varying fastest.

    Field order: u_x, u_y, u_z, Q11, Q12, Q13, Q22, Q23.  A state produced by
    ``load_snapshot`` carries its original payload and is written back byte
    for byte as long as the fields have not been changed since loading.
    """
    grid = state.u.grid
    payload = getattr(state, "physical_payload", None)
    fields = np.concatenate([state.u.physical(), state.q.physical()], axis=0)
    if payload is not None and (
        payload.shape != fields.shape
        or not np.allclose(payload, fields, rtol=0.0, atol=1e-10)
    ):
        payload = None  # the state moved on; the cached payload is stale
    if payload is None:
        payload = fields
    raw = np.ascontiguousarray(payload.transpose(0, 3, 2, 1)).astype("<f8")
    with open(path, "wb") as handle:
        handle.write(_SNAP_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.n))
        handle.write(
            _SNAP_SCALARS.pack(
                state.t, params.nu, params.mu, params.a, params.b, params.c
            )
        )
        handle.write(raw.tobytes())


def load_snapshot(path):
    """Read a snapshot; returns (state, params).

    The exact stored grid values are kept on the state as
    ``state.physical_payload`` so saving an untouched state round-trips byte
    for byte even though the working representation is spectral.
    """
    data = Path(path).read_bytes()
    if len(data) < _SNAP_HEADER.size + _SNAP_SCALARS.size:
        raise ValueError("snapshot file is too short to hold a header")
    magic, version, n = _SNAP_HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}; not a qtlp snapshot")
    if version != SNAPSHOT_VERSION:
        raise ValueError(
            f"unsupported snapshot version {version}; this build reads "
            f"version {SNAPSHOT_VERSION}"
        )
    t, nu, mu, a, b, c = _SNAP_SCALARS.unpack_from(data, _SNAP_HEADER.size)
    body = data[_SNAP_HEADER.size + _SNAP_SCALARS.size :]
    expected = 8 * n**3 * 8
    if len(body) != expected:
        raise ValueError(
            f"snapshot payload holds {len(body)} bytes, expected {expected} "
            f"(8 fields of {n}^3 float64)"
        )
    fields = (
        np.frombuffer(body, dtype="<f8").reshape(8, n, n, n).transpose(0, 3, 2, 1)
    )
    fields = np.ascontiguousarray(fields)
    grid = Grid(n)
    u = VelocityField.from_physical(grid, fields[:3])
    q = QTensorField.from_physical(grid, fields[3:])
    params = MaterialParams(nu=nu, mu=mu, a=a, b=b, c=c)
    state = State(t, u, q)
    state.physical_payload = fields
    return state, params


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

_PRESETS = ("taylor-green", "random", "zero")


@dataclass
class RunConfig:
    """Plain key=value run description; mirrors the solver configuration."""

    n: int = 32
    dt: float = 1e-3
    t_end: float = 0.1
    scheme: str = "rk2-imex"
    r: float = 2.0
    c_r: float = 0.01
    s: float = 0.6
    diag_every: int = 1
    seed: int = 0
    nu: float = 1.0
    mu: float = 1.0
    a: float = -0.2
    b: float = -1.0
    c: float = 1.0
    preset: str = "taylor-green"
    out: str = "."
    snapshot_every: int = 0

    def material_params(self) -> MaterialParams:
        return MaterialParams(nu=self.nu, mu=self.mu, a=self.a, b=self.b, c=self.c)

    def solver_config(self, grid: Grid) -> SolverConfig:
        return SolverConfig(
            grid=grid,
            params=self.material_params(),
            dt=self.dt,
            t_end=self.t_end,
            scheme=self.scheme,
            r=self.r,
            c_r=self.c_r,
            s=self.s,
            diag_every=self.diag_every,
            seed=self.seed,
        )

    def initial_state(self, grid: Grid) -> State:
        if self.preset == "taylor-green":
            return taylor_green_state(grid)
        if self.preset == "random":
            return random_state(grid, self.seed)
        n = grid.n
        u = VelocityField(grid, np.zeros((3, n, n, n), dtype=complex))
        return State(0.0, u, QTensorField.zero(grid))


_INT_KEYS = {"n", "diag_every", "seed", "snapshot_every"}
_FLOAT_KEYS = {"dt", "t_end", "r", "c_r", "s", "nu", "mu", "a", "b", "c"}
_STR_KEYS = {"scheme", "preset", "out"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def parse_run_config(text: str) -> RunConfig:
    """Parse a key=value document; unknown keys and range violations reject.

    Blank lines and lines starting with ``#`` are ignored.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ValueError(
                f"config line {lineno}: unknown key {key!r}; allowed keys: "
                f"{', '.join(sorted(_ALL_KEYS))}"
            )
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ValueError(
                    f"config line {lineno}: key {key!r} expects an integer, "
                    f"got {value!r}"
                ) from None
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError:
                raise ValueError(
                    f"config line {lineno}: key {key!r} expects a number, "
                    f"got {value!r}"
                ) from None
        else:
            values[key] = value

    config = RunConfig(**values)
    _validate_run_config(config)
    return config


def _validate_run_config(config: RunConfig) -> None:
    if config.n < 4:
        raise ValueError("config key n: grid size must be at least 4")
    if config.dt <= 0.0:
        raise ValueError("config key dt: time step must be positive")
    if config.t_end < 0.0:
        raise ValueError("config key t_end: end time must be nonnegative")
    if config.scheme.lower() not in ("rk2-imex", "rk4-explicit"):
        raise ValueError(
            f"config key scheme: must be rk2-imex or rk4-explicit, got "
            f"{config.scheme!r}"
        )
    if not 2.0 <= config.r < 6.0:
        raise ValueError("config key r: must satisfy 2 <= r < 6")
    if not 0.5 < config.s < 1.0:
        raise ValueError("config key s: must satisfy 1/2 < s < 1")
    if not config.r < 3.0 / config.s:
        raise ValueError("config key r: must satisfy r < 3/s for the chosen s")
    if config.c_r <= 0.0:
        raise ValueError("config key c_r: threshold constant must be positive")
    if config.diag_every < 1:
        raise ValueError("config key diag_every: must be a positive integer")
    if config.seed < 0:
        raise ValueError("config key seed: must be nonnegative")
    if config.nu <= 0.0:
        raise ValueError("config key nu: viscosity must be positive")
    if config.mu <= 0.0:
        raise ValueError("config key mu: tensor diffusion must be positive")
    if config.preset not in _PRESETS:
        raise ValueError(
            f"config key preset: must be one of {', '.join(_PRESETS)}, got "
            f"{config.preset!r}"
        )
    if config.snapshot_every < 0:
        raise ValueError("config key snapshot_every: must be nonnegative")


def load_run_config(path) -> RunConfig:
    return parse_run_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Diagnostics CSV
# ---------------------------------------------------------------------------

_PRE_COLUMNS = (
    "t",
    "total_energy",
    "dissipation",
    "max_Q_norm",
    "Lambda",
    "Qindex",
    "f_t",
    "bkm_integrand",
    "ps_integrand",
)
_POST_COLUMNS = ("hs_u", "hs_gradQ", "log_bound_ratio", "lambda_truncated")


def diagnostics_columns(q_max: int):
    """Fixed schema-1 column list for a ladder reaching shell q_max."""
    crit = [f"crit2_q{q}" for q in range(-1, q_max + 1)]
    return list(_PRE_COLUMNS) + crit + list(_POST_COLUMNS)


def write_diagnostics_csv(path, records, *, n, r, c_r, s, params) -> None:
    """One row per diagnostics sample under a schema comment line."""
    rows = list(records)
    if not rows:
        raise ValueError("need at least one diagnostics record")
    q_max = len(rows[0].crit2_shell_integrands) - 2
    meta = (
        f"# qtlp-diagnostics schema={CSV_SCHEMA} n={n} q_max={q_max} "
        f"r={r:.17g} c_r={c_r:.17g} s={s:.17g} nu={params.nu:.17g} "
        f"mu={params.mu:.17g} a={params.a:.17g} b={params.b:.17g} "
        f"c={params.c:.17g}\n"
    )
    columns = diagnostics_columns(q_max)
    with open(path, "w", newline="") as handle:
        handle.write(meta)
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for rec in rows:
            row = {
                "t": f"{rec.t:.17g}",
                "total_energy": f"{rec.total_energy:.17g}",
                "dissipation": f"{rec.dissipation:.17g}",
                "max_Q_norm": f"{rec.max_q_norm:.17g}",
                "Lambda": f"{rec.lam:.17g}",
                "Qindex": rec.q_index,
                "f_t": f"{rec.f_t:.17g}",
                "bkm_integrand": f"{rec.bkm_integrand:.17g}",
                "ps_integrand": f"{rec.ps_integrand:.17g}",
                "hs_u": f"{rec.hs_u:.17g}",
                "hs_gradQ": f"{rec.hs_grad_q:.17g}",
                "log_bound_ratio": f"{rec.log_bound_ratio:.17g}",
                "lambda_truncated": int(rec.lambda_truncated),
            }
            for q, value in zip(range(-1, q_max + 1), rec.crit2_shell_integrands):
                row[f"crit2_q{q}"] = f"{value:.17g}"
            writer.writerow(row)


def read_diagnostics_csv(path):
    """Read a schema-1 diagnostics CSV; returns (records, metadata dict)."""
    with open(path, newline="") as handle:
        first = handle.readline()
        if not first.startswith("# qtlp-diagnostics "):
            raise ValueError("missing qtlp-diagnostics schema line")
        meta = {}
        for token in first[len("# qtlp-diagnostics ") :].split():
            key, _, value = token.partition("=")
            meta[key] = value
        try:
            schema = int(meta["schema"])
        except (KeyError, ValueError):
            raise ValueError("schema line does not declare a schema number") from None
        if schema != CSV_SCHEMA:
            raise ValueError(
                f"unsupported diagnostics schema {schema}; this build reads "
                f"schema {CSV_SCHEMA}"
            )
        for key in ("n", "q_max"):
            meta[key] = int(meta[key])
        for key in ("r", "c_r", "s", "nu", "mu", "a", "b", "c"):
            meta[key] = float(meta[key])
        reader = csv.DictReader(handle)
        expected = diagnostics_columns(meta["q_max"])
        if reader.fieldnames != expected:
            raise ValueError("diagnostics columns do not match the declared schema")
        records = []
        for row in reader:
            crit = tuple(
                float(row[f"crit2_q{q}"]) for q in range(-1, meta["q_max"] + 1)
            )
            records.append(
                DiagnosticsRecord(
                    t=float(row["t"]),
                    total_energy=float(row["total_energy"]),
                    dissipation=float(row["dissipation"]),
                    max_q_norm=float(row["max_Q_norm"]),
                    lam=float(row["Lambda"]),
                    q_index=int(row["Qindex"]),
                    f_t=float(row["f_t"]),
                    bkm_integrand=float(row["bkm_integrand"]),
                    ps_integrand=float(row["ps_integrand"]),
                    crit2_shell_integrands=crit,
                    hs_u=float(row["hs_u"]),
                    hs_grad_q=float(row["hs_gradQ"]),
                    log_bound_ratio=float(row["log_bound_ratio"]),
                    lambda_truncated=bool(int(row["lambda_truncated"])),
                )
            )
    return records, meta


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def _apply_thread_cap() -> None:
    """Honor QTLP_THREADS by capping the numerical backends' thread pools."""
    cap = os.environ.get("QTLP_THREADS")
    if not cap:
        return
    try:
        threads = max(1, int(cap))
    except ValueError:
        print(f"warning: ignoring non-integer QTLP_THREADS={cap!r}", file=sys.stderr)
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, str(threads))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtlp",
        description=(
            "Pseudo-spectral coupled flow/tensor solver with frequency-shell "
            "diagnostics and identity verification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a configured run")
    sim.add_argument("--config", required=True, help="key=value run configuration")
    sim.add_argument("--out", default=None, help="output directory (overrides config)")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")

    diag = sub.add_parser("diagnose", help="one-shot diagnostics for a snapshot")
    diag.add_argument("snapshot", help="snapshot file written by simulate")
    diag.add_argument("--r", type=float, default=2.0, help="shell norm exponent")
    diag.add_argument("--c-r", dest="c_r", type=float, default=0.01)
    diag.add_argument("--s", type=float, default=0.6, help="Sobolev monitor index")

    ver = sub.add_parser("verify", help="run the identity verification suite")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--n", type=int, default=32, help="grid size")
    ver.add_argument("--band", type=float, default=None, help="field band (default n/6)")
    ver.add_argument("--pairs", type=int, default=3, help="number of field draws")
    ver.add_argument("--out", default=None, help="write the report CSV here")

    cri = sub.add_parser("criteria", help="integrate monitors from a diagnostics CSV")
    cri.add_argument("diagnostics", help="diagnostics CSV written by simulate")
    cri.add_argument(
        "--exclude-truncated",
        action="store_true",
        help="drop samples whose shell threshold was still met at the ladder top",
    )
    return parser


def _cmd_simulate(args) -> int:
    try:
        config = load_run_config(args.config)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        config.seed = args.seed
    out_dir = Path(args.out if args.out is not None else config.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    grid = Grid(config.n)
    try:
        solver = config.solver_config(grid)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    params = solver.params
    state = config.initial_state(grid)
    ladder = shared_ladder(grid)

    def observe(st: State) -> DiagnosticsRecord:
        return collect_diagnostics(
            st.u,
            st.q,
            st.t,
            params,
            r=config.r,
            c_r=config.c_r,
            s=config.s,
            ladder=ladder,
        )

    csv_path = out_dir / "diagnostics.csv"
    records = [observe(state)]
    n_steps = int(round(config.t_end / config.dt))
    try:
        for i in range(1, n_steps + 1):
            state = step(state, solver)
            if i % config.diag_every == 0 or i == n_steps:
                records.append(observe(state))
            if config.snapshot_every and i % config.snapshot_every == 0:
                save_snapshot(out_dir / f"snapshot_{i:06d}.qtlp", state, params)
    except BlowUpError as err:
        write_diagnostics_csv(
            csv_path, records, n=config.n, r=config.r, c_r=config.c_r,
            s=config.s, params=params,
        )
        print(f"error: {err}", file=sys.stderr)
        print(f"partial diagnostics written to {csv_path}", file=sys.stderr)
        return EXIT_BLOWUP

    write_diagnostics_csv(
        csv_path, records, n=config.n, r=config.r, c_r=config.c_r,
        s=config.s, params=params,
    )
    save_snapshot(out_dir / "final.qtlp", state, params)
    print(f"wrote {len(records)} diagnostics rows to {csv_path}")
    print(f"final state at t={state.t:.17g} saved to {out_dir / 'final.qtlp'}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    if not 2.0 <= args.r < 6.0:
        print("error: --r must satisfy 2 <= r < 6", file=sys.stderr)
        return EXIT_CONFIG
    if args.c_r <= 0.0:
        print("error: --c-r must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if not 0.5 < args.s < 1.0:
        print("error: --s must satisfy 1/2 < s < 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        state, params = load_snapshot(args.snapshot)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    rec = collect_diagnostics(
        state.u, state.q, state.t, params, r=args.r, c_r=args.c_r, s=args.s
    )
    q_max = len(rec.crit2_shell_integrands) - 2
    print(f"t={rec.t:.17g}")
    print(f"total_energy={rec.total_energy:.17g}")
    print(f"dissipation={rec.dissipation:.17g}")
    print(f"max_Q_norm={rec.max_q_norm:.17g}")
    print(f"Lambda={rec.lam:.17g}")
    print(f"Qindex={rec.q_index}")
    print(f"f_t={rec.f_t:.17g}")
    print(f"bkm_integrand={rec.bkm_integrand:.17g}")
    print(f"ps_integrand={rec.ps_integrand:.17g}")
    for q, value in zip(range(-1, q_max + 1), rec.crit2_shell_integrands):
        print(f"crit2_q{q}={value:.17g}")
    print(f"hs_u={rec.hs_u:.17g}")
    print(f"hs_gradQ={rec.hs_grad_q:.17g}")
    print(f"log_bound_ratio={rec.log_bound_ratio:.17g}")
    print(f"lambda_truncated={int(rec.lambda_truncated)}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.n < 4:
        print("error: --n must be at least 4", file=sys.stderr)
        return EXIT_CONFIG
    if args.pairs < 0:
        print("error: --pairs must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    reports = verify_suite(n=args.n, seed=args.seed, band=args.band, pairs=args.pairs)
    if args.out is not None:
        write_report_csv(reports, args.out)
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        line = (
            f"{status} {rep.name} rel={rep.relative_residual:.3e} "
            f"tol={rep.tolerance:.3e}"
        )
        if rep.warnings:
            line += f"  [{'; '.join(rep.warnings)}]"
        print(line)
    failures = sum(1 for rep in reports if not rep.passed)
    print(f"{len(reports) - failures}/{len(reports)} checks passed")
    return EXIT_VERIFY if failures else EXIT_OK


def _cmd_criteria(args) -> int:
    try:
        records, meta = read_diagnostics_csv(args.diagnostics)
        report = criterion_accumulators(records, exclude_truncated=args.exclude_truncated)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"t_start={report.t_start:.17g}")
    print(f"t_end={report.t_end:.17g}")
    print(f"window_start={report.window_start:.17g}")
    print(f"f_integral={report.f_integral:.17g}")
    print(f"bkm_integral={report.bkm_integral:.17g}")
    print(f"ps_integral={report.ps_integral:.17g}")
    for q, value in zip(report.shells, report.shell_integrals):
        print(f"crit2_q{q}_integral={value:.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "diagnose": _cmd_diagnose,
        "verify": _cmd_verify,
        "criteria": _cmd_criteria,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
