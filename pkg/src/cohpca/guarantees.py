"""Closed-form recovery conditions and their empirical validation.

Each condition is a strict inequality lhs > rhs in the problem sizes
(ambient dimension m, rank r, inlier count n1, outlier count n2) plus
model parameters.  When it holds, high-coherence column selection
provably prefers inliers for the matching data model.  Kind names have
three parts: the data model, the coherence power used (l1 or l2), and
the guarantee strength -- "mean" kinds separate expected coherences,
"whp" kinds separate worst cases with probability at least 1 - O(delta).

All constants inside the formulas are fixed by the derivations; nothing
here is tunable.  ``validate_condition_empirically`` closes the loop by
sampling datasets from the matching model and measuring how often the
separation actually occurs; the coherence it inspects is taken on the
raw (unnormalized) columns, which is the quantity the mean and
worst-case bounds control.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import DataError
from .linalg import coherence_gram
from .models import (
    gen_clustered_inliers,
    gen_noisy,
    gen_structured_outliers,
    gen_unstructured,
)

__all__ = [
    "KINDS",
    "ConditionParams",
    "ConditionReport",
    "CoherenceBound",
    "check_condition",
    "expected_coherence",
    "tail_f",
    "t_delta",
    "validate_condition_empirically",
]

KINDS = (
    "unstructured-l1-mean",
    "unstructured-l2-mean",
    "unstructured-l1-whp",
    "unstructured-l2-whp",
    "structured-l1-mean",
    "structured-l1-whp",
    "noisy-l1-mean",
    "noisy-l1-whp",
    "clustered-l1-mean",
)


@dataclass(frozen=True)
class ConditionParams:
    """Problem sizes plus the model parameter the kind calls for.

    ``delta`` only matters for whp kinds; ``mu``/``sigma``/``nu`` are
    required by the structured / noisy / clustered kinds respectively.
    """

    m: int
    r: int
    n1: int
    n2: int
    delta: float = 0.05
    mu: float | None = None
    sigma: float | None = None
    nu: float | None = None


@dataclass(frozen=True)
class ConditionReport:
    kind: str
    params: ConditionParams
    lhs: float
    rhs: float
    holds: bool
    intermediates: dict

    def record_lines(self):
        """Flat key=value lines, one fact per line, for logs and files."""
        p = self.params
        lines = [
            f"kind={self.kind}",
            f"m={p.m}",
            f"r={p.r}",
            f"n1={p.n1}",
            f"n2={p.n2}",
            f"delta={p.delta:.17g}",
        ]
        for name in ("mu", "sigma", "nu"):
            value = getattr(p, name)
            if value is not None:
                lines.append(f"{name}={value:.17g}")
        lines.append(f"lhs={self.lhs:.17g}")
        lines.append(f"rhs={self.rhs:.17g}")
        lines.append(f"holds={str(self.holds).lower()}")
        for key in sorted(self.intermediates):
            lines.append(f"{key}={self.intermediates[key]:.17g}")
        return lines


@dataclass(frozen=True)
class CoherenceBound:
    """A coherence expectation with its direction: exact, lower or upper."""

    value: float
    bound: str


def _require(cond, msg):
    if not cond:
        raise DataError(msg)


def _base_checks(p, kind):
    _require(p.m >= 2, f"m={p.m} must be >= 2")
    _require(1 <= p.r <= p.m, f"r={p.r} must satisfy 1 <= r <= m={p.m}")
    _require(p.n1 >= 1, f"n1={p.n1} must be >= 1")
    _require(p.n2 >= 0, f"n2={p.n2} must be >= 0")
    if kind.endswith("whp"):
        _require(0.0 < p.delta < 1.0, f"delta={p.delta} must lie in (0, 1)")
        _require(p.n2 >= 1, f"n2={p.n2} must be >= 1 for whp kinds")


def _unstructured_l1_mean(p):
    lhs = p.n1 / math.sqrt(p.r) * (math.sqrt(2 / math.pi) - math.sqrt(4 * p.r**2 / p.m))
    rhs = 5 * p.n2 / (4 * math.sqrt(p.m)) + math.sqrt(2 / (math.pi * p.r))
    return lhs, rhs, {}


def _unstructured_l2_mean(p):
    lhs = p.n1 / p.r * (1 - 2 * p.r**2 / p.m)
    rhs = p.n2 / p.m + 1 / p.r
    return lhs, rhs, {}


def _unstructured_l1_whp(p):
    _require(p.r >= 2, "the l1 whp bound needs r >= 2")
    beta = max(8 * math.log(p.n2 / p.delta), 8 * math.pi)
    kappa = p.m / (p.m - 1)
    lhs = (
        p.n1
        / math.sqrt(p.r)
        * (math.sqrt(2 / math.pi) - (p.r + 2 * math.sqrt(beta * kappa * p.r)) / math.sqrt(p.m))
        - 2 * math.sqrt(p.n1)
        - math.sqrt(2 * p.n1 * math.log(p.n1 / p.delta) / (p.r - 1))
    )
    rhs = (
        p.n2 / math.sqrt(p.m)
        + 2 * math.sqrt(p.n2)
        + math.sqrt(2 * p.n2 * math.log(p.n2 / p.delta) / (p.m - 1))
        + 1 / math.sqrt(p.r)
    )
    return lhs, rhs, {"beta": beta, "kappa": kappa}


def _unstructured_l2_whp(p):
    zeta = max(8 * math.pi, 8 * math.log(p.n2 / p.delta))
    kappa = p.m / (p.m - 1)
    log1 = math.log(2 * p.r * p.n1 / p.delta)
    log2 = math.log(2 * p.m * p.n2 / p.delta)
    eta1 = max(4 / 3 * log1, math.sqrt(4 * (p.n1 / p.r) * log1))
    eta2 = max(4 / 3 * log2, math.sqrt(4 * (p.n2 / p.m) * log2))
    lhs = (
        p.n1
        * (1 / p.r - (p.r + 4 * zeta * kappa + 4 * math.sqrt(zeta * p.r * kappa)) / p.m)
        - eta1
    )
    rhs = 2 * eta2 + 1 / p.r
    return lhs, rhs, {"zeta": zeta, "kappa": kappa, "eta1": eta1, "eta2": eta2}


def _structured_l1_mean(p):
    _require(p.mu is not None, "structured kinds need mu")
    _require(0 < p.mu < 1, f"the structured bounds need 0 < mu < 1, got {p.mu}")
    mu = p.mu
    lhs = (p.n1 - 1) * math.sqrt(2 / (math.pi * p.r))
    rhs = 2 * p.n2 / (1 + mu**2) + (
        2 * mu**2 * p.n2
        + 4 * mu * p.n2
        + 2 * p.n1 * math.sqrt(p.r * (1 + mu**2)) * (mu + 1)
    ) / ((1 + mu**2) * math.sqrt(p.m))
    return lhs, rhs, {}


def _structured_l1_whp(p):
    _require(p.mu is not None, "structured kinds need mu")
    _require(0 < p.mu < 1, f"the structured bounds need 0 < mu < 1, got {p.mu}")
    mu = p.mu
    beta = max(8 * math.log(p.n2 / p.delta), 8 * math.pi)
    kappa = p.m / (p.m - 1)
    t_tail = t_delta(p.delta, p.m)
    lhs = (
        math.sqrt(2 / math.pi) * (p.n1 - 1) / math.sqrt(p.r)
        - 2 * math.sqrt(p.n1)
        - math.sqrt(2 * p.n1 * math.log(p.n1 / p.delta) / p.r)
    )
    rhs = (
        p.n2 / (1 + mu**2)
        + ((mu**2 + mu) / (1 + mu**2))
        * (
            p.n2 / math.sqrt(p.m)
            + 2 * math.sqrt(p.n2)
            + math.sqrt(2 * p.n2 * math.log(p.n2 / p.delta) / (p.m - 1))
        )
        + mu * p.n2 * math.sqrt(t_tail) / ((1 + mu**2) * math.sqrt(p.m))
        + p.n1 * (mu + 1) / math.sqrt((1 + mu**2) * p.m)
        * (math.sqrt(p.r) + 2 * math.sqrt(beta * kappa))
    )
    return lhs, rhs, {"beta": beta, "kappa": kappa, "t_delta": t_tail}


def _noisy_l1_mean(p):
    _require(p.sigma is not None, "noisy kinds need sigma")
    _require(p.sigma >= 0, f"sigma={p.sigma} must be >= 0")
    s2 = p.sigma**2
    xi = math.sqrt(2 * s2 / (math.pi * p.m)) * (
        p.n1 / math.sqrt(1 + s2) * (1 + p.sigma * math.sqrt(math.pi / 2) + math.sqrt(p.r))
        + p.n2
        + 2 * p.n1
    )
    lhs = (
        p.n1
        / math.sqrt(p.r)
        * (math.sqrt(2 / (math.pi * (1 + s2))) - math.sqrt(4 * p.r**2 / p.m))
    )
    rhs = p.n2 * math.sqrt(1 + s2) / math.sqrt(p.m) + math.sqrt(2 / (math.pi * p.r)) + xi
    return lhs, rhs, {"xi": xi}


def _noisy_l1_whp(p):
    _require(p.sigma is not None, "noisy kinds need sigma")
    _require(p.sigma > 0, "the noisy whp bound needs sigma > 0")
    _require(p.r >= 2, "the noisy whp bound needs r >= 2")
    sigma = p.sigma
    s2 = sigma**2
    n = p.n1 + p.n2
    c_arg = n / (p.delta * math.sqrt(2 * math.pi) * sigma)
    _require(c_arg > 1.0, f"amplitude bound undefined: n/(delta*sqrt(2*pi)*sigma) = {c_arg:.3g} <= 1")
    c = math.sqrt(2 * math.log(c_arg))
    beta = max(8 * math.pi, 8 * math.log(p.n2 / p.delta))
    beta_in = max(8 * math.pi, 8 * math.log(p.n1 / p.delta))
    varsigma = (
        (c * sigma + c**2 * s2) / math.sqrt(1 + s2) + c * sigma
    ) * (
        p.n1 / math.sqrt(p.m)
        + 2 * math.sqrt(p.n1)
        + math.sqrt(2 * p.n1 * math.log(p.n1 / p.delta) / (p.m - 1))
    ) + (c * p.n1 * sigma / math.sqrt(1 + s2)) * (
        math.sqrt(p.r / p.m) + 2 * math.sqrt(beta_in / (p.m - 1))
    )
    lhs = (
        p.n1
        / math.sqrt(p.r)
        * (
            math.sqrt(2 / (math.pi * (1 + s2)))
            - (p.r + 2 * math.sqrt(beta * p.r)) / math.sqrt(p.m - 1)
        )
        - 2 * math.sqrt(p.n1 / (1 + s2))
        - math.sqrt(2 * p.n1 * math.log(p.n1 / p.delta) / ((p.r - 1) * (1 + s2)))
    )
    rhs = (
        math.sqrt(1 + s2)
        * (
            p.n2 / math.sqrt(p.m)
            + 2 * math.sqrt(p.n2)
            + math.sqrt(2 * p.n2 * math.log(p.n2 / p.delta) / (p.m - 1))
        )
        + 1 / math.sqrt(p.r)
        + varsigma
    )
    inter = {
        "beta": beta,
        "beta_in": beta_in,
        "c": c,
        "omega": c * sigma,
        "varsigma": varsigma,
    }
    return lhs, rhs, inter


def _clustered_l1_mean(p):
    _require(p.nu is not None, "clustered kinds need nu")
    _require(0 < p.nu < 1, f"the clustered bound needs 0 < nu < 1, got {p.nu}")
    nu = p.nu
    lhs = p.n1 * (1 - (nu**2 + 2 * nu) / math.sqrt(p.r))
    rhs = (
        1
        + 2 * p.n1 * (1 + nu) * math.sqrt(p.r * (1 + nu**2)) / math.sqrt(p.m)
        + (p.n2 * math.sqrt(1 + nu**2) / math.sqrt(p.m))
        * (nu - math.sqrt(2 / math.pi) + 2 * math.sqrt(1 + nu**2))
    )
    return lhs, rhs, {}


_CHECKS = {
    "unstructured-l1-mean": _unstructured_l1_mean,
    "unstructured-l2-mean": _unstructured_l2_mean,
    "unstructured-l1-whp": _unstructured_l1_whp,
    "unstructured-l2-whp": _unstructured_l2_whp,
    "structured-l1-mean": _structured_l1_mean,
    "structured-l1-whp": _structured_l1_whp,
    "noisy-l1-mean": _noisy_l1_mean,
    "noisy-l1-whp": _noisy_l1_whp,
    "clustered-l1-mean": _clustered_l1_mean,
}


def check_condition(kind, params):
    """Evaluate one recovery condition; strict inequality decides."""
    if kind not in _CHECKS:
        raise DataError(f"unknown condition kind {kind!r}; choose from {KINDS}")
    _base_checks(params, kind)
    lhs, rhs, inter = _CHECKS[kind](params)
    return ConditionReport(kind, params, float(lhs), float(rhs), bool(lhs > rhs), inter)


def expected_coherence(role, p, m, r, n1, n2):
    """Expected coherence of one column under the unstructured model.

    For the squared power the inlier value is exact; everything else is
    a one-sided bound, and the ``bound`` field says which side.
    """
    _require(role in ("inlier", "outlier"), f"role must be inlier or outlier, got {role!r}")
    _require(p in (1, 2), f"power p must be 1 or 2, got {p}")
    _require(m >= 1 and 1 <= r <= m, f"need 1 <= r <= m, got r={r}, m={m}")
    _require(n1 >= 1, f"n1={n1} must be >= 1")
    _require(n2 >= (1 if role == "outlier" else 0), f"n2={n2} too small for role {role}")
    if p == 2:
        if role == "inlier":
            return CoherenceBound((n1 - 1) / r + n2 / m, "exact")
        return CoherenceBound((r * n1 + n2 - 1) / m, "upper")
    if role == "inlier":
        value = (n1 - 1) * math.sqrt(2 / (math.pi * r)) + n2 * math.sqrt(2 / (math.pi * m))
        return CoherenceBound(value, "lower")
    return CoherenceBound(n1 * math.sqrt(r / m) + (n2 - 1) * math.sqrt(1 / m), "upper")


def _beta_half_integrand(b_exp):
    def f(u):
        if u >= 1.0:
            return 0.0
        return math.exp(b_exp * math.log1p(-u * u)) if b_exp != 0.0 else 1.0

    return f


def _tail_integral(lo, m):
    # integral over [lo, 1] of (1 - u^2)^((m-3)/2), restricted to the
    # window where the integrand is non-negligible so the adaptive rule
    # never misses a narrow spike at large m.
    b_exp = (m - 3) / 2.0
    width = 40.0 / math.sqrt(b_exp) if b_exp > 1.0 else 2.0
    hi = min(1.0, lo + width)
    if hi <= lo:
        return 0.0
    value, _ = quad(_beta_half_integrand(b_exp), lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
    return value


@lru_cache(maxsize=None)
def _tail_norm(m):
    return _tail_integral(0.0, m)


def tail_f(t, m):
    """P(m * (u'v)^2 > t) for independent uniform unit vectors in R^m.

    The squared inner product follows a Beta(1/2, (m-1)/2) law; the tail
    is computed by adaptive quadrature of that density (relative
    tolerance 1e-12), normalized by the same quadrature so that
    tail_f(0, m) is exactly 1.
    """
    m = int(m)
    _require(m >= 3, f"tail probability needs m >= 3, got m={m}")
    _require(t >= 0, f"threshold t={t} must be >= 0")
    if t >= m:
        return 0.0
    return _tail_integral(math.sqrt(t / m), m) / _tail_norm(m)


def t_delta(delta, m):
    """Smallest t with tail_f(t, m) below delta, by bisection to 1e-8."""
    _require(0.0 < delta < 1.0, f"delta={delta} must lie in (0, 1)")
    lo, hi = 0.0, float(m)
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if tail_f(mid, m) < delta:
            hi = mid
        else:
            lo = mid
    return hi


_MODEL_OF_KIND = {
    "unstructured": lambda p, seed: gen_unstructured(p.m, p.r, p.n1, p.n2, seed=seed),
    "structured": lambda p, seed: gen_structured_outliers(
        p.m, p.r, p.n1, p.n2, p.mu, seed=seed
    ),
    "noisy": lambda p, seed: gen_noisy(p.m, p.r, p.n1, p.n2, p.sigma, seed=seed),
    "clustered": lambda p, seed: gen_clustered_inliers(
        p.m, p.r, p.n1, p.n2, p.nu, seed=seed
    ),
}


def validate_condition_empirically(kind, params, trials=20, seed=0):
    """Fraction of sampled datasets showing the separation a kind promises.

    Draws ``trials`` datasets from the model the kind describes and
    computes raw-column coherence at the kind's power.  Mean kinds count
    a trial as separated when the inlier mean exceeds twice the outlier
    mean; whp kinds require the worst inlier to beat the best outlier.
    Datasets without outliers are separated by convention.
    """
    if kind not in _CHECKS:
        raise DataError(f"unknown condition kind {kind!r}; choose from {KINDS}")
    _require(trials >= 1, f"trials={trials} must be >= 1")
    model = _MODEL_OF_KIND[kind.split("-")[0]]
    p = 2 if "-l2-" in kind else 1
    want_worst_case = kind.endswith("whp")
    hits = 0
    for trial in range(trials):
        ds = model(params, (seed, trial))
        if params.n2 == 0:
            hits += 1
            continue
        prof = coherence_gram(ds.d, p).values
        inl = prof[ds.labels == 0]
        out = prof[ds.labels == 1]
        if want_worst_case:
            hits += bool(inl.min() > out.max())
        else:
            hits += bool(inl.mean() > 2 * out.mean())
    return hits / trials
