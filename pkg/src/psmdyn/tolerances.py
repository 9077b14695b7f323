"""Numerical tolerances shared across the package."""

# Orthonormality / group-identity checks on rotations and transforms.
ORTHO_TOL = 1e-12
# Agreement between an implementation and an independent oracle.
ORACLE_TOL = 1e-10
# |sin q|, |sin q1|, |sin q2| below this are treated as singular.
SINGULAR_TOL = 1e-9
# |det A| of the 7x7 actuator-force system below this is singular.
DET_TOL = 1e-12
# Articulated scalar inertia at or below this is non-physical.
ALPHA_TOL = 1e-12
# Geometric closure residual accepted for a loop configuration.
CLOSURE_TOL = 1e-10
# Unit-screw norm check.
SCREW_TOL = 1e-9
