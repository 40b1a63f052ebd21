"""Robin torsion solver, rearrangements and comparison checks."""

from ._core import (
    DiscretizationFailure,
    Field,
    Mesh,
    NonConvergence,
    RadialReference,
    Rearrangement,
    Domain,
    build_mesh,
    cli_main,
    compare_field,
    distribution,
    interpolate_radial,
    parse_domain,
    rigidity_probe,
    solve_torsion,
)

__all__ = [
    "DiscretizationFailure",
    "Domain",
    "Field",
    "Mesh",
    "NonConvergence",
    "RadialReference",
    "Rearrangement",
    "build_mesh",
    "cli_main",
    "compare_field",
    "distribution",
    "interpolate_radial",
    "parse_domain",
    "rigidity_probe",
    "solve_torsion",
]
