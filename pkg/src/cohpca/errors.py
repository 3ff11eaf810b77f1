"""Exception types shared across the package.

Two failure families matter to callers: bad inputs (files, shapes, flag
values) and numerical breakdowns discovered mid-computation (rank
deficiency, exhausted candidate pools).  The CLI maps them to distinct
exit codes, so library code should pick the right one.
"""


class DataError(ValueError):
    """Invalid input: malformed file, bad shape, out-of-range parameter."""


class NumericalError(RuntimeError):
    """Computation cannot proceed: rank collapse, empty pools, divergence."""
