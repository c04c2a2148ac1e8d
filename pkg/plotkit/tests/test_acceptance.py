"""Acceptance criterion A11: end-to-end rendering from a solver-run CSV."""

import numpy as np
from conftest import sample_row, write_csv

from qtlp_plotkit import PLOT_KINDS
from qtlp_plotkit.cli import main

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class TestAcceptance:
    def test_a11_plot_kinds_from_run_csv(self, tmp_path, capfd):
        """All four kinds render a run-shaped CSV; bad schema exits nonzero."""
        rows = [sample_row(t) for t in np.linspace(0.0, 0.04, 41)]
        run_csv = write_csv(tmp_path / "diagnostics.csv", rows)
        codes = {}
        for kind in PLOT_KINDS:
            out = tmp_path / f"{kind}.png"
            codes[kind] = main(
                ["plot", "--kind", kind, "--in", str(run_csv), "--out", str(out)]
            )
            codes[kind] = codes[kind] if out.read_bytes().startswith(PNG_MAGIC) else -1

        mismatched = write_csv(tmp_path / "future.csv", rows[:2], schema=2)
        bad_code = main(
            ["plot", "--kind", "energy", "--in", str(mismatched),
             "--out", str(tmp_path / "nope.png")]
        )
        ok = all(code == 0 for code in codes.values()) and bad_code != 0
        verdict = "PASS" if ok else "FAIL"
        with capfd.disabled():
            print(
                f"A11 {verdict} - plot kinds {', '.join(PLOT_KINDS)} exited "
                f"{sorted(set(codes.values()))} on a 41-row run CSV; "
                f"schema-mismatch input exited {bad_code}",
                flush=True,
            )
        assert ok, f"codes={codes} schema_mismatch={bad_code}"
