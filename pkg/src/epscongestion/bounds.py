"""Closed-form price of anarchy / stability bounds for approximate equilibria.

All functions take a multiplicative approximation parameter ``epsilon >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

SQRT3 = math.sqrt(3.0)
# relative slack for the z boundary test z^2 = (1+eps)(z+1) in floating point
_BOUNDARY_RTOL = 1e-12


class DomainError(ValueError):
    pass


def _eps(epsilon) -> float:
    epsilon = float(epsilon)
    if not (epsilon >= 0 and math.isfinite(epsilon)):
        raise DomainError(f"epsilon must be a finite real >= 0, got {epsilon}")
    return epsilon


def _admissible(z: int, epsilon: float) -> bool:
    lhs = z * z
    rhs = (1.0 + epsilon) * (z + 1)
    return lhs <= rhs * (1.0 + _BOUNDARY_RTOL)


def z_of_epsilon(epsilon: float) -> int:
    """Largest integer ``z`` with ``z^2 / (z+1) <= 1 + epsilon``."""
    epsilon = _eps(epsilon)
    z = int(math.floor((1.0 + epsilon + math.sqrt(5.0 + 6.0 * epsilon + epsilon**2)) / 2.0))
    # the closed form can land one off through rounding; settle it on the definition
    while not _admissible(z, epsilon):
        z -= 1
    while _admissible(z + 1, epsilon):
        z += 1
    return z


def is_z_boundary(epsilon: float) -> bool:
    """True when ``z(eps) - 1`` is admissible too, i.e. ``z^2 = (1+eps)(z+1)``."""
    z = z_of_epsilon(epsilon)
    return z >= 2 and abs(z * z - (1.0 + epsilon) * (z + 1)) <= _BOUNDARY_RTOL * z * z


def _atomic_poa_at(z: int, epsilon: float) -> float:
    return (1.0 + epsilon) * (z * z + 3 * z + 1) / (2 * z - epsilon)


def atomic_poa_bound(epsilon: float) -> float:
    """``(1+eps)(z^2+3z+1)/(2z-eps)`` with ``z = z_of_epsilon(eps)``."""
    epsilon = _eps(epsilon)
    z = z_of_epsilon(epsilon)
    value = _atomic_poa_at(z, epsilon)
    if is_z_boundary(epsilon):
        other = _atomic_poa_at(z - 1, epsilon)
        if not math.isclose(value, other, rel_tol=1e-9):
            raise ArithmeticError(
                f"z and z-1 disagree at boundary epsilon={epsilon}: {value} vs {other}"
            )
    return value


def nonatomic_poa_bound(epsilon: float) -> float:
    """``4(1+eps)/(3-eps)`` up to ``eps = 1`` and ``(1+eps)^2`` beyond."""
    epsilon = _eps(epsilon)
    if epsilon <= 1.0:
        return 4.0 * (1.0 + epsilon) / (3.0 - epsilon)
    return (1.0 + epsilon) ** 2


def nonatomic_poa_lambda(epsilon: float, lam: float) -> float:
    """Bound obtained for a particular ``lambda >= 1`` before optimizing it."""
    epsilon = _eps(epsilon)
    if lam < 1.0:
        raise DomainError("lambda must be >= 1")
    denom = 4.0 * lam - 1.0 - epsilon
    if denom <= 0:
        return math.inf
    return 4.0 * lam * lam * (1.0 + epsilon) / denom


def nonatomic_poa_lower_large(epsilon: float) -> float:
    """Lower bound ``(1+eps) z (z+1) / (2z - eps)``, ``z = floor(1+eps)``, for ``eps >= 1``."""
    epsilon = _eps(epsilon)
    if epsilon < 1.0:
        raise DomainError("defined for epsilon >= 1")
    z = math.floor(1.0 + epsilon)
    return (1.0 + epsilon) * z * (z + 1) / (2 * z - epsilon)


def atomic_pos_lower(epsilon: float) -> float:
    """Limit ratio of the dominant-strategy family (lower bound on atomic PoS)."""
    e = _eps(epsilon)
    if e >= 1.0:
        return 1.0
    theta = math.sqrt(3 * e**3 + 3 + e + 2 * e**4)
    num = 3 + e + theta * e**2 + 3 * e**3 + 2 * e**4 + theta + theta * e
    den = 6 + 2 * e + 5 * theta * e + 6 * e**3 + 4 * e**4 - theta * e**3 + 2 * theta * e**2
    return 2.0 * num / den


def atomic_pos_bounds(epsilon: float) -> dict:
    """Atomic price of stability: ``coarse`` 2/(1+eps), ``upper`` and ``lower``.

    For ``epsilon >= 1`` the optimum itself is an epsilon-Nash profile and all
    three values are 1.
    """
    e = _eps(epsilon)
    if e >= 1.0:
        return {"coarse": 1.0, "upper": 1.0, "lower": 1.0}
    return {
        "coarse": 2.0 / (1.0 + e),
        "upper": (SQRT3 + 1.0) / (SQRT3 + e),
        "lower": atomic_pos_lower(e),
    }


def nonatomic_pos_bound(epsilon: float) -> float:
    e = _eps(epsilon)
    if e >= 1.0:
        return 1.0
    return 4.0 / ((3.0 - e) * (1.0 + e))


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    atomic_poa: float
    atomic_pos_upper: float
    atomic_pos_lower: float
    atomic_pos_coarse: float
    nonatomic_poa: float
    nonatomic_poa_lower_large: Optional[float]
    nonatomic_pos: float
    z_atomic: int
    z_nonatomic: int

    def as_dict(self) -> dict:
        return asdict(self)


def bound_report(epsilon: float) -> BoundReport:
    e = _eps(epsilon)
    pos = atomic_pos_bounds(e)
    return BoundReport(
        epsilon=e,
        atomic_poa=atomic_poa_bound(e),
        atomic_pos_upper=pos["upper"],
        atomic_pos_lower=pos["lower"],
        atomic_pos_coarse=pos["coarse"],
        nonatomic_poa=nonatomic_poa_bound(e),
        nonatomic_poa_lower_large=nonatomic_poa_lower_large(e) if e >= 1.0 else None,
        nonatomic_pos=nonatomic_pos_bound(e),
        z_atomic=z_of_epsilon(e),
        z_nonatomic=math.floor(1.0 + e),
    )


# --- arithmetic lemmas -------------------------------------------------------

LEMMAS = ("L3_1", "L4_1", "L5_3", "INEQ_POS")


def _require_nat(name, v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")


def _require_unit(name, v):
    if not 0.0 <= float(v) <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


def _tol(*terms) -> float:
    return 1e-9 * max(1.0, *(abs(t) for t in terms))


def pos_lemma_gamma(epsilon: float) -> float:
    """Mixing weight used with the integer PoS lemma."""
    e = float(epsilon)
    return (3 + 2 * SQRT3) * (e - 3 + 2 * SQRT3) / (3 * e + 3 + 2 * SQRT3)


def pos_lemma_sides(alpha: float, beta: float, epsilon: float, reading: str = "proof"):
    """Left and right sides of the integer PoS lemma.

    ``reading="proof"`` uses the coefficient ``(2 sqrt3 - 3)(1 - eps)/(3 eps + 3 + 2 sqrt3)``
    on ``alpha^2`` as it enters the upper-bound argument; ``reading="literal"``
    uses the printed ``(eps - 1)`` factor, which is negative on ``[0, 1)``.
    """
    e = float(epsilon)
    g = pos_lemma_gamma(e)
    d = 3 * e + 3 + 2 * SQRT3
    lhs = (
        g * beta * beta
        + (1 - g * e) / (1 + e) * beta
        - (g - e) / (1 + e) * alpha
        + (1 - g) * beta * alpha
    )
    if reading == "proof":
        ca = (2 * SQRT3 - 3) * (1 - e) / d
    elif reading == "literal":
        ca = (2 * SQRT3 - 3) * (e - 1) / d
    else:
        raise ValueError(f"unknown reading {reading!r}")
    cb = 2 * (3 + SQRT3) / d
    return lhs, ca * alpha * alpha + cb * beta * beta


def pos_lemma_factored(alpha: float, beta: float) -> float:
    """Completed-square form of the PoS lemma slack at ``eps = 0``, scaled to unit ``alpha^2``."""
    return 0.25 * (2 * SQRT3 + 3 - 4 * beta - 2 * beta * SQRT3 + 2 * alpha) ** 2 + (
        5 + 3 * SQRT3
    ) / 8 * (8 * beta - 3 - 3 * SQRT3)


def pos_lemma_direct_scaled(alpha: float, beta: float) -> float:
    """Direct slack at ``eps = 0`` divided by the ``alpha^2`` coefficient."""
    lhs, rhs = pos_lemma_sides(alpha, beta, 0.0)
    return (rhs - lhs) / ((2 * SQRT3 - 3) / (3 + 2 * SQRT3))


def lemma_slack(lemma: str, **params) -> float:
    """Right side minus left side of the named inequality (after domain checks)."""
    if lemma == "L3_1":
        alpha, beta, z = params["alpha"], params["beta"], params["z"]
        for name, v in (("alpha", alpha), ("beta", beta), ("z", z)):
            _require_nat(name, v)
        # scaled by 2z+1 so the comparison is exact integer arithmetic
        return alpha * alpha + (z * z + 3 * z + 1) * beta * beta - (2 * z + 1) * beta * (alpha + 1)
    if lemma == "L4_1":
        alpha, beta, lam = float(params["alpha"]), float(params["beta"]), float(params["lam"])
        if not lam > 0:
            raise DomainError(f"lam must be > 0, got {lam}")
        return alpha * alpha / (4 * lam) + lam * beta * beta - beta * alpha
    if lemma == "L5_3":
        alpha, beta, eps = params["alpha"], params["beta"], params["epsilon"]
        _require_nat("alpha", alpha)
        _require_nat("beta", beta)
        _require_unit("epsilon", eps)
        lhs, rhs = pos_lemma_sides(alpha, beta, eps, params.get("reading", "proof"))
        return rhs - lhs
    if lemma == "INEQ_POS":
        alpha, beta, eps = float(params["alpha"]), float(params["beta"]), params["epsilon"]
        _require_unit("epsilon", eps)
        e = float(eps)
        return (1 + e) / 4 * alpha * alpha + beta * beta / (1 + e) - alpha * beta
    raise DomainError(f"unknown lemma {lemma!r}; choose from {LEMMAS}")


def lemma_check(lemma: str, **params) -> bool:
    """Whether the named arithmetic inequality holds at ``params``.

    ``L3_1(alpha, beta, z)`` naturals; ``L4_1(alpha, beta, lam)`` reals with
    ``lam > 0``; ``L5_3(alpha, beta, epsilon)`` naturals and ``epsilon`` in
    [0, 1]; ``INEQ_POS(alpha, beta, epsilon)`` reals and ``epsilon`` in [0, 1].
    Floating-point lemmas allow a relative slack of 1e-9 so that equality
    cases are not lost to rounding.
    """
    slack = lemma_slack(lemma, **params)
    if lemma == "L3_1":
        return slack >= 0
    a = float(params["alpha"])
    b = float(params["beta"])
    return slack >= -_tol(a * a, b * b, a * b)
