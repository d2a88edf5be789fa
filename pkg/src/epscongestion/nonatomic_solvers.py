"""Conditional-gradient minimization of the epsilon-potential and of the social cost.

Both objectives are separable convex quadratics in the facility flows,
``sum_e q_e f_e^2 + c_e f_e``, over a product of scaled simplices (one per
commodity).  The linear oracle puts each commodity's whole rate on the
strategy with the smallest gradient sum; steps use exact line search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .atomic import _check_epsilon
from .nonatomic import Flow, NonatomicGame
from .nonatomic import social_cost as flow_cost

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100_000
METHODS = ("pairwise", "vanilla")


class SolverError(RuntimeError):
    pass


@dataclass
class SolveResult:
    flow: Flow
    objective: float
    duality_gap: float
    iterations: int
    converged: bool
    objective_name: str = ""
    epsilon: Optional[float] = None
    method: str = "pairwise"
    gap_trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _coefficients(game: NonatomicGame, objective: str, epsilon: Optional[float]):
    if objective == "potential":
        if epsilon is None:
            raise ValueError("the potential objective needs epsilon")
        eps = _check_epsilon(epsilon)
        return 0.5 * game.a, game.b / (1.0 + eps)
    if objective == "social_cost":
        return game.a.copy(), game.b.copy()
    raise ValueError(f"unknown objective {objective!r}")


def _oracle(game, grad_s):
    """Per commodity, index (within the commodity) of the cheapest strategy."""
    off = game.offsets
    # np.argmin returns the first minimizer: lowest strategy index wins ties
    return [int(np.argmin(grad_s[off[k]:off[k + 1]])) for k in range(len(game.commodities))]


def _vertex(game, picks) -> np.ndarray:
    x = np.zeros(int(game.offsets[-1]))
    for k, (j, c) in enumerate(zip(picks, game.commodities)):
        x[game.offsets[k] + j] = c.rate
    return x


def _line_search(q, lin, fe, de, t_max=1.0):
    # phi(t) = A t^2 + B t + const along fe + t de
    A = float(np.dot(q, de * de))
    B = float(np.dot(2.0 * q * fe + lin, de))
    if A <= 0.0:
        return t_max if B < 0.0 else 0.0
    return min(max(-B / (2.0 * A), 0.0), t_max)


def minimize(
    game: NonatomicGame,
    objective: str = "potential",
    epsilon: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "pairwise",
    trace: bool = False,
) -> SolveResult:
    """Minimize ``objective`` (``"potential"`` at ``epsilon`` or ``"social_cost"``).

    Stops when the Frank-Wolfe gap ``<grad, x - s>`` (an upper bound on the
    suboptimality of ``x``) is at most ``tol``.  ``method="vanilla"`` takes
    plain Frank-Wolfe steps toward the oracle vertex; ``"pairwise"`` moves mass
    from the worst used strategy to the oracle strategy of each commodity,
    which converges much faster when the optimum is not a vertex.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    q, lin = _coefficients(game, objective, epsilon)
    M = game.incidence
    off = game.offsets
    ncom = len(game.commodities)

    def grad_strategies(fe):
        return M.T @ (2.0 * q * fe + lin)

    def value(fe):
        return float(np.dot(q * fe + lin, fe))

    x = _vertex(game, _oracle(game, grad_strategies(np.zeros(M.shape[0]))))
    fe = M @ x
    gaps = []
    gap = math.inf
    it = 0
    converged = False
    while True:
        gs = grad_strategies(fe)
        s = _vertex(game, _oracle(game, gs))
        gap = float(np.dot(gs, x - s))
        if trace:
            gaps.append(gap)
        if gap <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        if method == "vanilla":
            d = s - x
            t = _line_search(q, lin, fe, M @ d)
            x = x + t * d
        else:
            # pairwise step: shift from each commodity's costliest used strategy
            d = s.copy()
            t_max = math.inf
            for k in range(ncom):
                lo, hi = off[k], off[k + 1]
                seg = gs[lo:hi]
                used = np.flatnonzero(x[lo:hi] > 0.0)
                away = int(used[np.argmax(seg[used])])
                d[lo:hi] = 0.0
                j = int(np.argmin(seg))
                if away == j:
                    continue
                d[lo + j] += 1.0
                d[lo + away] -= 1.0
                t_max = min(t_max, x[lo + away])
            if not np.any(d):
                # no commodity can improve; the gap is zero up to rounding
                converged = True
                break
            t = _line_search(q, lin, fe, M @ d, t_max=t_max)
            x = x + t * d
            # exact zeros on drained strategies keep the used-set clean
            x[np.abs(x) < 1e-15 * max(1.0, float(np.max(np.abs(x))))] = 0.0
            x = np.maximum(x, 0.0)
        fe = M @ x
    flow = Flow.from_vector(game, _renormalize(game, x))
    result = SolveResult(
        flow=flow,
        objective=value(M @ flow.vector()),
        duality_gap=gap,
        iterations=it,
        converged=converged,
        objective_name=objective,
        epsilon=None if objective == "social_cost" else float(epsilon),
        method=method,
        gap_trace=gaps,
    )
    if objective == "potential" and game.has_flat_facility():
        result.notes.append("minimizer possibly non-unique in strategy space (some a_e = 0)")
    return result


def _renormalize(game, x):
    x = np.maximum(x, 0.0)
    off = game.offsets
    for k, c in enumerate(game.commodities):
        seg = x[off[k]:off[k + 1]]
        total = seg.sum()
        if total > 0:
            x[off[k]:off[k + 1]] = seg * (c.rate / total)
    return x


@dataclass(frozen=True)
class PosCertificate:
    equilibrium_cost: float
    opt_cost: float
    ratio: float
    equilibrium: SolveResult
    optimum: SolveResult


def pos_certificate(
    game: NonatomicGame, epsilon: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> PosCertificate:
    """Cost of the epsilon-potential minimizer over the optimal cost.

    The minimizer is an epsilon-Wardrop flow, so the ratio bounds the price
    of stability from above.  Raises ``SolverError`` if either solve fails
    to reach ``tol``.
    """
    eq = minimize(game, "potential", epsilon, tol=tol, max_iter=max_iter)
    opt = minimize(game, "social_cost", tol=tol, max_iter=max_iter)
    for name, res in (("potential", eq), ("social cost", opt)):
        if not res.converged:
            raise SolverError(
                f"{name} minimization stopped after {res.iterations} iterations, gap {res.duality_gap:g}"
            )
    c_eq = flow_cost(game, eq.flow)
    c_opt = flow_cost(game, opt.flow)
    if c_opt == 0.0:
        ratio = 1.0 if c_eq == 0.0 else math.inf
    else:
        ratio = c_eq / c_opt
    return PosCertificate(c_eq, c_opt, ratio, eq, opt)
