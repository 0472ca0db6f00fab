"""Abrahamse-Pick matrices, grid feasibility and the two extremal quantities.

Feasibility over the annulus asks for a positive semidefinite Pick matrix
for every character; the characters are scanned on a uniform exponent grid,
so an annulus verdict of "feasible" is necessary-only at the reported
resolution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .domain_kernels import (
    DEFAULT_TRUNCATION,
    PSD_TOL,
    KernelIndex,
    PlanarDomain,
    TruncatedKernel,
    kernel_gram,
)
from .errors import DegenerateProblemError, DomainError, ParameterError

DEFAULT_GRID = 128
MARGINAL_TOL = 1e-8


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Order-preserving map, optionally on a thread pool."""
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def exponent_grid(domain: PlanarDomain, grid_size: int) -> list[KernelIndex]:
    if domain.is_disk:
        return [KernelIndex(())]
    if grid_size < 1:
        raise ParameterError("grid_size must be at least 1")
    return [KernelIndex((j / grid_size,)) for j in range(grid_size)]


@dataclass(frozen=True)
class PickProblem:
    """Interpolation data: nodes ``z_i`` and scalar or ``k x k`` targets ``w_i``.

    Targets outside the closed unit ball are accepted; they simply make the
    problem infeasible.
    """

    domain: PlanarDomain
    nodes: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=complex))
        targets = np.asarray(self.targets, dtype=complex)
        if targets.ndim not in (1, 3) or targets.shape[0] != nodes.shape[0]:
            raise ParameterError("targets must be n scalars or n square matrices")
        if targets.ndim == 3 and targets.shape[1] != targets.shape[2]:
            raise ParameterError("matrix targets must be square")
        self.domain.check_interior(*nodes)
        n = len(nodes)
        for i in range(n):
            for j in range(i + 1, n):
                if abs(nodes[i] - nodes[j]) < 1e-12:
                    raise DegenerateProblemError(f"nodes {i} and {j} coincide")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "targets", targets)

    @property
    def level(self) -> int:
        return 1 if self.targets.ndim == 1 else self.targets.shape[1]

    def target_norms(self) -> np.ndarray:
        if self.targets.ndim == 1:
            return np.abs(self.targets)
        return np.array([np.linalg.norm(W, 2) for W in self.targets])


@dataclass(frozen=True)
class PickMatrix:
    index: KernelIndex
    entries: np.ndarray
    min_eigenvalue: float
    min_eigenvector: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)


def pick_matrix(problem: PickProblem, index: KernelIndex, N: int = DEFAULT_TRUNCATION) -> PickMatrix:
    """``((1 - w_i conj(w_j)) K(z_i, z_j))``, block form ``K(z_i,z_j)(I - W_i W_j^*)``."""
    K = TruncatedKernel(problem.domain, index, N)
    G = kernel_gram(K, problem.nodes)
    W = problem.targets
    if W.ndim == 1:
        M = (1.0 - np.outer(W, W.conj())) * G
    else:
        n, k, _ = W.shape
        M = np.zeros((n * k, n * k), dtype=complex)
        eye = np.eye(k)
        for i in range(n):
            for j in range(n):
                M[i * k : (i + 1) * k, j * k : (j + 1) * k] = G[i, j] * (eye - W[i] @ W[j].conj().T)
    M = 0.5 * (M + M.conj().T)
    vals, vecs = np.linalg.eigh(M)
    return PickMatrix(index, M, float(vals[0]), vecs[:, 0])


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    min_eigenvalue: float
    trace: float
    grid_resolution: float
    marginal: bool
    witness_index: KernelIndex | None = None
    witness_vector: np.ndarray | None = None
    witness_eigenvalue: float | None = None
    profile: list[tuple[float, float]] = field(default_factory=list)


def feasibility(
    problem: PickProblem,
    grid_size: int = DEFAULT_GRID,
    N: int = DEFAULT_TRUNCATION,
    tol: float = PSD_TOL,
    threads: int = 1,
) -> FeasibilityVerdict:
    """Scan the exponent grid and report the worst Pick matrix.

    Each matrix passes when ``min_eig >= -tol * trace``.  The witness is the
    grid index with the most negative relative eigenvalue; ties go to the
    smaller exponent.
    """
    grid = exponent_grid(problem.domain, grid_size)
    mats = parallel_map(lambda idx: pick_matrix(problem, idx, N), grid, threads)
    rel = [pm.min_eigenvalue / max(abs(pm.trace), 1e-300) for pm in mats]
    worst = int(np.argmin(rel))
    pm = mats[worst]
    feasible = rel[worst] >= -tol
    resolution = 0.0 if problem.domain.is_disk else 1.0 / grid_size
    profile = [(idx.shift, m.min_eigenvalue) for idx, m in zip(grid, mats)]
    return FeasibilityVerdict(
        feasible=bool(feasible),
        min_eigenvalue=pm.min_eigenvalue,
        trace=pm.trace,
        grid_resolution=resolution,
        marginal=abs(rel[worst]) <= MARGINAL_TOL,
        witness_index=None if feasible else pm.index,
        witness_vector=None if feasible else pm.min_eigenvector,
        witness_eigenvalue=None if feasible else pm.min_eigenvalue,
        profile=profile,
    )


def kernel_ratio(domain: PlanarDomain, z1: complex, z2: complex, a: float, N: int) -> float:
    """``|K_a(z1,z2)|^2 / (K_a(z1,z1) K_a(z2,z2))`` for exponent ``a``."""
    K = TruncatedKernel(domain, KernelIndex.for_domain(domain, a), N)
    G = kernel_gram(K, [z1, z2])
    return float(abs(G[0, 1]) ** 2 / (G[0, 0].real * G[1, 1].real))


def maximize_ratio(
    domain: PlanarDomain, z1: complex, z2: complex, grid_size: int, N: int
) -> tuple[float, KernelIndex]:
    """Grid scan plus one bounded refinement of the kernel ratio over characters."""
    if domain.is_disk:
        return kernel_ratio(domain, z1, z2, 0.0, N), KernelIndex(())
    grid = np.arange(grid_size) / grid_size
    values = np.array([kernel_ratio(domain, z1, z2, a, N) for a in grid])
    best = int(np.argmax(values))
    a_best, r_best = float(grid[best]), float(values[best])
    h = 1.0 / grid_size
    res = minimize_scalar(
        lambda a: -kernel_ratio(domain, z1, z2, a % 1.0, N),
        bounds=(a_best - h, a_best + h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if -res.fun > r_best:
        a_best, r_best = float(res.x) % 1.0, float(-res.fun)
    return r_best, KernelIndex((a_best,))


@dataclass(frozen=True)
class ExtremalS:
    s_sq: float
    m_sq: float
    alpha0: KernelIndex
    ratio: float


def extremal_s(
    domain: PlanarDomain,
    z1: complex,
    z2: complex,
    grid_size: int = DEFAULT_GRID,
    N: int = DEFAULT_TRUNCATION,
) -> ExtremalS:
    """Two-point extremal data.

    ``m_sq`` is the squared supremum of ``|g(z2)|`` over unit-ball ``g`` with
    ``g(z1) = 0``, computed from the kernel criterion, and
    ``s_sq = 1/m_sq - 1`` is the critical squared coupling of ``A_s``.
    """
    domain.check_interior(z1, z2)
    if abs(complex(z1) - complex(z2)) < 1e-12:
        raise DegenerateProblemError("z1 == z2: use extremal_t for the repeated-node case")
    ratio, alpha0 = maximize_ratio(domain, z1, z2, grid_size, N)
    m_sq = 1.0 - ratio
    return ExtremalS(s_sq=ratio / m_sq, m_sq=m_sq, alpha0=alpha0, ratio=ratio)


def extremal_t(domain: PlanarDomain, z: complex, N: int = DEFAULT_TRUNCATION) -> float:
    """Reciprocal of the Ahlfors extremal derivative, ``1 / K(z, z)`` (Szego)."""
    if not domain.contains(z):
        raise DomainError(f"point {complex(z)!r} is not strictly inside the {domain.kind}")
    K = TruncatedKernel(domain, KernelIndex.trivial(domain), N)
    return float(1.0 / kernel_gram(K, [z])[0, 0].real)
