"""Active-distribution solving and the two capacity formulas.

The active distribution is the entropy maximizer over the polytope of
distributions whose marginals on every tappable subset match the innocent
ones.  Iterative proportional fitting from the uniform distribution
converges to that maximizer (its fixed point is the I-projection of the
uniform onto the marginal polytope, and the constraints are consistent by
construction since they come from one innocent distribution).

The deniable-and-hidable capacity looks like a harder sup-min program, but
every marginal appearing in the min is pinned by the constraints, so on the
feasible polytope the objective is H(p) minus the constant
max_W H(innocent_W).  The same maximizer therefore solves both programs;
the grid-search oracle in the test suite validates this against the
un-simplified objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .model import (
    ScalarDistribution,
    SubsetFamily,
    conditional_entropy,
    entropy,
    marginalize,
    projection_table,
    total_variation,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000

CORNER_POINT_TOL = 1e-9


@dataclass(frozen=True)
class CapacityResult:
    """Capacities of a link system with the achieving distribution."""

    deniable_capacity: float
    hidable_capacity: float
    optimizer: ScalarDistribution
    binding_subset: tuple
    iterations: int
    residual: float


def _ipf(innocent: ScalarDistribution, family: SubsetFamily, tol: float,
         max_iter: int):
    size = len(innocent)
    num_links = innocent.num_links()
    tables = [projection_table(num_links, w) for w in family]
    targets = [marginalize(innocent, w).probs for w in family]
    widths = [len(t) for t in targets]

    # Symbols forced to zero by a zero marginal can never regain mass and
    # would stall the multiplicative updates; drop them before iterating.
    support = np.ones(size, dtype=bool)
    for table, target in zip(tables, targets):
        support &= target[table] > 0
    p = np.where(support, 1.0, 0.0)
    p /= p.sum()

    iterations = 0
    residual = np.inf
    for iterations in range(1, max_iter + 1):
        for table, target, width in zip(tables, targets, widths):
            current = np.bincount(table, weights=p, minlength=width)
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(current > 0, target / current, 0.0)
            p *= scale[table]
        residual = max(
            total_variation(np.bincount(t, weights=p, minlength=w), tgt)
            for t, tgt, w in zip(tables, targets, widths)
        )
        if residual <= tol:
            break
    if residual > tol:
        raise ConvergenceError(
            f"IPF did not reach tolerance {tol} in {max_iter} iterations "
            f"(residual {residual:.3e})",
            residual=residual,
            iterations=iterations,
        )
    # Guard against drift accumulated by the multiplicative updates.
    p = np.maximum(p, 0.0)
    p /= p.sum()
    return ScalarDistribution(p), iterations, residual


def solve_active_distribution(innocent: ScalarDistribution,
                              family: SubsetFamily,
                              tol: float = DEFAULT_TOL,
                              max_iter: int = DEFAULT_MAX_ITER,
                              ) -> ScalarDistribution:
    """Entropy maximizer subject to matching every tapped marginal."""
    dist, _iters, _residual = _ipf(innocent, family, tol, max_iter)
    return dist


def deniable_capacity(innocent: ScalarDistribution,
                      family: SubsetFamily,
                      tol: float = DEFAULT_TOL) -> float:
    """Reliable-deniable capacity: entropy of the active distribution."""
    return entropy(solve_active_distribution(innocent, family, tol=tol))


def hidable_capacity(innocent: ScalarDistribution,
                     family: SubsetFamily,
                     tol: float = DEFAULT_TOL) -> CapacityResult:
    """Reliable-deniable-hidable capacity with optimizer and binding subset.

    The binding subset is the one achieving the min of
    H(active) - H(active on W); ties resolve to the earliest subset in
    family order.
    """
    optimizer, iterations, residual = _ipf(
        innocent, family, tol, DEFAULT_MAX_ITER
    )
    c_deniable = entropy(optimizer)
    marginal_entropies = [entropy(marginalize(innocent, w)) for w in family]
    binding_idx = int(np.argmax(marginal_entropies))
    c_hidable = max(c_deniable - marginal_entropies[binding_idx], 0.0)
    return CapacityResult(
        deniable_capacity=c_deniable,
        hidable_capacity=c_hidable,
        optimizer=optimizer,
        binding_subset=family.subsets[binding_idx],
        iterations=iterations,
        residual=residual,
    )


def detect_corner_point(active: ScalarDistribution, family: SubsetFamily,
                        tol: float = CORNER_POINT_TOL):
    """Does some tappable subset determine the rest of the codeword?

    Returns ``(True, W)`` for the first subset with
    H(X_{W^c} | X_W) <= tol, else ``(False, None)``.
    """
    for w in family:
        if conditional_entropy(active, w) <= tol:
            return True, w
    return False, None
