"""Boundedness analysis of quadratic systems with energy-preserving nonlinearity.

The package certifies boundedness via the trapping-region eigenvalue
program, applies the closed-form two-state classification, tests effective
nonlinearity by exact candidate-subspace verification, verifies quartic
Lyapunov certificates over a fixed monomial lift, and probes trajectories
numerically with an embedded Runge-Kutta integrator.
"""

from .canonical2d import (
    Canonical2D,
    TwoDClass,
    TwoDVerdict,
    canonical_system,
    classify_2d,
    escape_certificate,
    extract_q,
    lmi_feasible_2d,
    to_canonical,
)
from .certificates import (
    CertificateReport,
    QuarticCertificate,
    builtin_counterexample,
    lift,
    lyapunov_rate,
    lyapunov_value,
    make_certificate,
    verify_certificate,
)
from .effectiveness import (
    CandidateCheck,
    EffResult,
    EffectivenessVerdict,
    Subspace,
    affine_invariant_on,
    check_effective,
    generate_candidates,
    is_ineffectiveness_witness,
    phi_vanishes_on,
    subspace_from_vectors,
)
from .errors import (
    DimensionMismatch,
    InconsistentParameterization,
    InvalidDimension,
    MaxIterations,
    NotApplicable,
    NotEnergyPreserving,
    NotSymmetric,
    NotThreeDimensional,
    ParseError,
    QuadboundError,
    TrivialNonlinearity,
    UnboundedBelow,
    WrongDimension,
)
from .simulate import (
    BoundednessProbe,
    IntegratorOptions,
    ProbeVerdict,
    Trajectory,
    TrajectoryStatus,
    energy_rate_check,
    integrate,
    probe_boundedness,
)
from .system import (
    QuadraticSystem,
    ShiftedSystem,
    energy_rate,
    eval_nonlinearity,
    eval_rhs,
    lorenz_system,
    new_system,
    random_system,
    rotate_system,
    shift,
    symmetric_linear_part,
)
from .sysio import (
    dump_certificate,
    dump_system,
    load_certificate,
    load_system,
    parse_certificate,
    parse_system,
    save_certificate,
    save_system,
)
from .trapping import (
    SolverOptions,
    TrapResult,
    TrapStatus,
    feasibility_at,
    jacobi_eigh,
    lambda_max_sym,
    solve,
    verdict,
)

__version__ = "0.1.0"
