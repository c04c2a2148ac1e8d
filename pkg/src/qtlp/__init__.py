"""Pseudo-spectral Q-tensor liquid-crystal solver with Littlewood-Paley diagnostics."""

__version__ = "0.1.0"

from .spectral import (  # noqa: F401
    DyadicLadder,
    Grid,
    SpectralField,
    VelocityField,
    ZeroShellError,
    leray_project,
    lp_norm,
    quadrature_norm,
    random_band_limited,
    random_solenoidal,
)
from .qtensor import (  # noqa: F401
    MaterialParams,
    QTensorField,
    molecular_field,
    total_energy,
)
from .lpanalysis import (  # noqa: F401
    CriterionReport,
    DiagnosticsRecord,
    collect_diagnostics,
    criterion_accumulators,
    dissipation_wavenumber,
    log_bound_monitor,
    shared_ladder,
    shell_lower_bound_check,
)
from .dynamics import (  # noqa: F401
    BlowUpError,
    SolverConfig,
    State,
    random_state,
    run,
    step,
    taylor_green_state,
)
from .verify import (  # noqa: F401
    IdentityReport,
    bony_split,
    cancel_J112_L12,
    cancel_K22_identity,
    cancel_transport_stress,
    commutator_advection,
    commutator_tensor_family,
    verify_suite,
    write_report_csv,
)
from .io_cli import (  # noqa: F401
    RunConfig,
    load_run_config,
    load_snapshot,
    read_diagnostics_csv,
    save_snapshot,
    write_diagnostics_csv,
)
