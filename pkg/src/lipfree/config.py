"""Numerical defaults shared by every module.

Each public function that compares floating point values takes a ``tol``
argument; ``None`` means "use :data:`TOL`".
"""

TOL = 1e-9
"""Default absolute tolerance for metric checks, duality gaps and witnesses."""

MERGE_THRESHOLD = 1e-12
"""Distances strictly below this are treated as zero by ``quotient_zero``."""

MOLECULE_SUM_TOL = 1e-12
"""Relative tolerance on the zero-sum condition of a molecule."""

POINT_BUDGET = 10_000
"""Default cap on the size of a Urysohn approximation."""

BASEPOINT_DISTANCE = 2 ** -0.5
"""Distance from the adjoined basepoint to every point of a reduced space."""

SIGNIFICANT_DIGITS = 12
"""Digits kept when numbers are written to JSON reports."""


def resolve(tol):
    return TOL if tol is None else float(tol)
