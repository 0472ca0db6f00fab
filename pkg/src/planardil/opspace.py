"""Lagrange matrices, membership in the interpolation body, and sampled norm bounds.

For an operator ``T`` with distinct eigenvalues ``z_1, ..., z_n`` the
homomorphism ``f -> f(T)`` factors through the value tuple
``(f(z_1), ..., f(z_n))``:

    f(T) = f(z_1) V_1 + ... + f(z_n) V_n

with the Lagrange matrices ``V_i``.  Its norm is therefore the norm of the
linear map ``L_T(w) = sum w_i V_i`` on the set ``I_z`` of value tuples of
unit-ball functions.  Every bound computed here is a lower bound obtained
from sampled points of ``I_z`` (or its matrix analogue).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .domain_kernels import PlanarDomain
from .errors import DegenerateProblemError, ParameterError, UnsupportedDomainError
from .matrix_homomorphisms import GeneralOperator, ModelOperatorA, ModelOperatorB, as_matrix
from .pick_interpolation import (
    DEFAULT_GRID,
    PickProblem,
    feasibility,
    parallel_map,
    pick_matrix,
)
from .domain_kernels import DEFAULT_TRUNCATION, KernelIndex
from .rational import RationalFunction
from .sampling import matrix_sample, sample_rng, scalar_sample

COUNTEREXAMPLE_TOL = 1e-9
ALGEBRA_TOL = 1e-10


@dataclass(frozen=True)
class NodeTuple:
    domain: PlanarDomain
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=complex))
        self.domain.check_interior(*nodes)
        gaps = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(len(nodes))
        if len(nodes) > 1 and gaps.min() < 1e-12:
            raise DegenerateProblemError("nodes must be distinct")
        object.__setattr__(self, "nodes", nodes)

    @property
    def count(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class LagrangeSystem:
    operator: GeneralOperator
    V: list

    @property
    def nodes(self) -> np.ndarray:
        return self.operator.eigenvalues

    def apply(self, values: Sequence[complex]) -> np.ndarray:
        """``sum w_i V_i``."""
        return sum(complex(w) * Vi for w, Vi in zip(values, self.V))

    def apply_matrix(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """``sum V_i (x) W_i``."""
        return sum(np.kron(Vi, Wi) for Vi, Wi in zip(self.V, blocks))

    def partition_defect(self) -> float:
        n = len(self.V)
        return float(np.abs(sum(self.V) - np.eye(n)).max())

    def idempotent_defect(self) -> float:
        worst = 0.0
        for i, Vi in enumerate(self.V):
            for j, Vj in enumerate(self.V):
                target = Vi if i == j else 0.0
                worst = max(worst, float(np.abs(Vi @ Vj - target).max()))
        return worst

    def resolution_defect(self) -> float:
        """``||T - sum z_i V_i||`` entrywise."""
        return float(np.abs(self.operator.matrix - self.apply(self.nodes)).max())


def lagrange_matrices(T) -> LagrangeSystem:
    """``V_i = prod_{j != i} (T - z_j) / (z_i - z_j)`` by polynomial calculus."""
    op = T if isinstance(T, GeneralOperator) else GeneralOperator(as_matrix(T))
    nodes = list(op.eigenvalues)
    V = [RationalFunction.lagrange_basis(nodes, i).at_matrix(op.matrix) for i in range(len(nodes))]
    return LagrangeSystem(op, V)


def membership_report(
    z: NodeTuple,
    targets,
    grid_size: int = DEFAULT_GRID,
    N: int = DEFAULT_TRUNCATION,
    threads: int = 1,
):
    return feasibility(PickProblem(z.domain, z.nodes, targets), grid_size, N, threads=threads)


def membership(z: NodeTuple, targets, grid_size: int = DEFAULT_GRID, N: int = DEFAULT_TRUNCATION) -> bool:
    """Whether ``targets`` lie in ``I_z`` (scalar) or its level-k analogue.

    On the annulus the verdict is necessary-only at the grid resolution.
    """
    return membership_report(z, targets, grid_size, N).feasible


def _min_pick_eigenvalue(domain, nodes, w, grid_size, N) -> float:
    """``min_alpha lambda_min / trace`` over the grid, refined near the worst cell."""
    problem = PickProblem(domain, nodes, w)
    if domain.is_disk:
        pm = pick_matrix(problem, KernelIndex(()), N)
        return pm.min_eigenvalue / pm.trace
    grid = np.arange(grid_size) / grid_size

    def rel(a):
        pm = pick_matrix(problem, KernelIndex.for_domain(domain, a % 1.0), N)
        return pm.min_eigenvalue / pm.trace

    vals = np.array([rel(a) for a in grid])
    k = int(np.argmin(vals))
    h = 1.0 / grid_size
    res = minimize_scalar(rel, bounds=(grid[k] - h, grid[k] + h), method="bounded", options={"xatol": 1e-10})
    return float(min(vals[k], res.fun))


def extremal_values(
    domain: PlanarDomain,
    nodes: Sequence[complex],
    rng: np.random.Generator,
    grid_size: int = 32,
    N: int = 60,
    steps: int = 48,
) -> np.ndarray:
    """Values at ``nodes`` of a (numerically) extremal unit-ball interpolant.

    A random direction, with one coordinate pinned to zero, is scaled to the
    boundary of ``I_z`` by bisection on the Pick criterion and then pulled
    inside by a relative margin of ``1e-9``.
    """
    nodes = np.asarray(nodes, dtype=complex)
    n = len(nodes)
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w[int(rng.integers(n))] = 0.0
    w /= np.abs(w).max()
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if _min_pick_eigenvalue(domain, nodes, mid * w, grid_size, N) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo * (1.0 - 1e-9) * w


@dataclass
class BoundReport:
    bound: float
    level: int
    sample_count: int
    witness_index: int
    witness_kind: str
    witness_values: np.ndarray
    candidate_counterexample: bool
    contractive_verdict: bool | None
    running_max: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        from ._jsonio import cmatrix

        return {
            "bound": self.bound,
            "level": self.level,
            "sample_count": self.sample_count,
            "witness_index": self.witness_index,
            "witness_kind": self.witness_kind,
            "witness_values": cmatrix(self.witness_values),
            "candidate_counterexample": self.candidate_counterexample,
            "contractive_verdict": self.contractive_verdict,
            "tolerance": COUNTEREXAMPLE_TOL,
        }


def _scalar_value_sample(domain, nodes, seed, j, max_degree):
    f = scalar_sample(domain, sample_rng(seed, j, 0), max_degree, nodes)
    return np.array([complex(f(z)) for z in nodes])


def lt_norm_lower_bound(
    system: LagrangeSystem,
    z: NodeTuple,
    sample_count: int,
    max_degree: int = 5,
    seed: int = 0,
    level: int = 1,
    extremal_samples: int = 0,
    contractive_verdict: bool | None = None,
    threads: int = 1,
) -> BoundReport:
    """Running max of ``||sum V_i (x) R(z_i)||`` over sampled unit-ball ``R``.

    Sample ``j`` always contributes its scalar function (stream 0); at
    ``level > 1`` it also contributes a ``level x level`` matrix function
    (stream ``level``), so the level-k bound dominates the level-1 bound on
    the same seed.  On the annulus ``extremal_samples`` further value tuples
    on the boundary of ``I_z`` are appended.  A bound above ``1 + 1e-9`` for
    an operator known to be contractive is flagged as a candidate
    counterexample.
    """
    if level < 1:
        raise ParameterError("level must be at least 1")
    if not isinstance(z.domain, PlanarDomain):
        raise UnsupportedDomainError(f"no sampler for {z.domain!r}")
    nodes = z.nodes
    if not np.allclose(np.sort_complex(nodes), np.sort_complex(system.nodes), atol=1e-8):
        raise ParameterError("node tuple does not match the spectrum of the operator")
    # align V_i with the order of the node tuple
    order = [int(np.argmin(np.abs(system.nodes - x))) for x in nodes]
    V = [system.V[i] for i in order]

    def one(j):
        w = _scalar_value_sample(z.domain, nodes, seed, j, max_degree)
        best = (float(np.linalg.norm(sum(wi * Vi for wi, Vi in zip(w, V)), 2)), "scalar", w)
        if level > 1:
            R = matrix_sample(z.domain, sample_rng(seed, j, level), level, max_degree, nodes)
            blocks = [R(x) for x in nodes]
            val = float(np.linalg.norm(sum(np.kron(Vi, Wi) for Vi, Wi in zip(V, blocks)), 2))
            if val > best[0]:
                best = (val, "matrix", np.array(blocks))
        return best

    def ext(j):
        w = extremal_values(z.domain, nodes, sample_rng(seed, j, 3))
        return float(np.linalg.norm(sum(wi * Vi for wi, Vi in zip(w, V)), 2)), "extremal", w

    results = parallel_map(one, list(range(sample_count)), threads)
    if extremal_samples and not z.domain.is_disk:
        results += parallel_map(ext, list(range(extremal_samples)), threads)
    vals = np.array([r[0] for r in results])
    running = np.maximum.accumulate(vals) if len(vals) else vals
    k = int(np.argmax(vals))
    bound = float(vals[k])
    flag = bool(contractive_verdict) and bound > 1.0 + COUNTEREXAMPLE_TOL
    return BoundReport(
        bound, level, len(results), k, results[k][1], results[k][2], flag, contractive_verdict, running
    )


@dataclass(frozen=True)
class HomEqLinReport:
    rho_max: float
    lt_max: float
    max_discrepancy: float
    agree: bool
    rho_witness: int
    lt_witness: int
    sample_count: int

    def to_json(self) -> dict:
        return {
            "rho_max": self.rho_max,
            "lt_max": self.lt_max,
            "max_discrepancy": self.max_discrepancy,
            "agree": self.agree,
            "rho_witness": self.rho_witness,
            "lt_witness": self.lt_witness,
            "sample_count": self.sample_count,
        }


def homeqlin_check(
    T,
    z: NodeTuple,
    budget: int,
    max_degree: int = 5,
    seed: int = 0,
    tol: float = 1e-6,
) -> HomEqLinReport:
    """Compare ``||f(T)||`` with ``||sum f(z_i) V_i||`` sample by sample.

    ``f(T)`` is computed by the rational functional calculus (the exact
    2x2 formulas for the models), independently of the Lagrange matrices.
    """
    from .matrix_homomorphisms import apply_calculus

    model = T if isinstance(T, (ModelOperatorA, ModelOperatorB)) else None
    op = GeneralOperator(as_matrix(T), nodes=z.nodes)
    system = lagrange_matrices(op)
    rho, lt = np.empty(budget), np.empty(budget)
    for j in range(budget):
        f = scalar_sample(z.domain, sample_rng(seed, j, 0), max_degree, z.nodes)
        fT = apply_calculus(model, f) if model is not None else f.at_matrix(op.matrix)
        rho[j] = np.linalg.norm(fT, 2)
        lt[j] = np.linalg.norm(system.apply([complex(f(x)) for x in z.nodes]), 2)
    disc = float(np.abs(rho - lt).max()) if budget else 0.0
    return HomEqLinReport(
        float(rho.max()), float(lt.max()), disc, disc <= tol,
        int(np.argmax(rho)), int(np.argmax(lt)), budget,
    )
