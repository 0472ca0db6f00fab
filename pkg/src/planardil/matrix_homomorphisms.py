"""Homomorphisms of the planar algebra induced by small matrices.

``A_s`` has distinct eigenvalues and ``B_t`` is a Jordan block; both are
lower triangular.  Contractivity of the induced homomorphisms is decided
exactly through the extremal quantities of :mod:`pick_interpolation`;
random sampling of unit-ball functions only ever yields lower bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .domain_kernels import DEFAULT_TRUNCATION, PlanarDomain
from .errors import ConditioningError, DegenerateProblemError, ParameterError, ShapeError
from .pick_interpolation import DEFAULT_GRID, extremal_s, extremal_t
from .rational import RationalFunction
from .sampling import sample_rng, scalar_sample

EIGEN_GAP = 1e-6
MAX_EIGVEC_COND = 1e8


@dataclass(frozen=True)
class ModelOperatorA:
    z1: complex
    z2: complex
    s: float
    mu: complex

    def __post_init__(self):
        if abs(complex(self.z1) - complex(self.z2)) < 1e-12:
            raise DegenerateProblemError("A_s needs distinct eigenvalues")
        if self.s < 0:
            raise ParameterError("s must be non-negative")

    @property
    def matrix(self) -> np.ndarray:
        z1, z2 = complex(self.z1), complex(self.z2)
        return np.array([[z1, 0.0], [self.s * self.mu * (z1 - z2), z2]], dtype=complex)

    @property
    def nodes(self) -> tuple[complex, complex]:
        return (complex(self.z1), complex(self.z2))


@dataclass(frozen=True)
class ModelOperatorB:
    z: complex
    t: float
    lam: complex

    def __post_init__(self):
        if self.t < 0:
            raise ParameterError("t must be non-negative")

    @property
    def matrix(self) -> np.ndarray:
        z = complex(self.z)
        return np.array([[z, 0.0], [self.t * self.lam, z]], dtype=complex)

    @property
    def nodes(self) -> tuple[complex]:
        return (complex(self.z),)


class GeneralOperator:
    """An ``n x n`` matrix with distinct eigenvalues.

    ``eigenvalues[i]`` pairs with ``adjoint_eigenvectors[:, i]``, a unit vector
    ``v_i`` with ``T^* v_i = conj(z_i) v_i``.  When ``nodes`` is given the
    eigenvalues are matched to it and the exact node values are kept.
    """

    def __init__(self, T, nodes: Sequence[complex] | None = None, domain: PlanarDomain | None = None):
        T = np.asarray(T, dtype=complex)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ShapeError("operator must be a square matrix")
        n = T.shape[0]
        vals, X = np.linalg.eig(T)
        if nodes is not None:
            nodes = np.asarray(nodes, dtype=complex)
            if nodes.shape != (n,):
                raise ShapeError("node count does not match the operator size")
            order = []
            for z in nodes:
                j = int(np.argmin(np.abs(vals - z)))
                if abs(vals[j] - z) > 1e-6 * max(1.0, abs(z)) or j in order:
                    raise ParameterError("eigenvalues of T do not match the given nodes")
                order.append(j)
            vals, X = nodes, X[:, order]
        gaps = np.abs(vals[:, None] - vals[None, :]) + np.eye(n)
        if n > 1 and gaps.min() < EIGEN_GAP:
            raise ConditioningError("eigenvalues are not separated by the required gap")
        if np.linalg.cond(X) > MAX_EIGVEC_COND:
            raise ConditioningError("eigenvector matrix is too ill-conditioned")
        if domain is not None:
            domain.check_interior(*vals)
        # rows of X^{-1} are left eigenvectors; their conjugates are eigenvectors of T^*
        left = np.linalg.inv(X)
        V = left.conj().T
        V = V / np.linalg.norm(V, axis=0)
        if np.linalg.svd(V, compute_uv=False).min() < 1e-10:
            raise ConditioningError("eigenvectors of T^* are numerically dependent")
        self.matrix = T
        self.eigenvalues = np.asarray(vals, dtype=complex)
        self.adjoint_eigenvectors = V

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


Operator = Union[ModelOperatorA, ModelOperatorB, GeneralOperator, np.ndarray]


def as_matrix(T: Operator) -> np.ndarray:
    if isinstance(T, (ModelOperatorA, ModelOperatorB, GeneralOperator)):
        return T.matrix
    return np.asarray(T, dtype=complex)


def spectrum_of(T: Operator) -> tuple[complex, ...]:
    if isinstance(T, (ModelOperatorA, ModelOperatorB)):
        return T.nodes
    if isinstance(T, GeneralOperator):
        return tuple(T.eigenvalues)
    return tuple(np.linalg.eigvals(as_matrix(T)))


def calc_A(A: ModelOperatorA, r: RationalFunction, domain: PlanarDomain | None = None) -> np.ndarray:
    if domain is not None:
        r.check_poles(domain)
    r1, r2 = complex(r(A.z1)), complex(r(A.z2))
    return np.array([[r1, 0.0], [A.s * A.mu * (r1 - r2), r2]], dtype=complex)


def calc_B(B: ModelOperatorB, r: RationalFunction, domain: PlanarDomain | None = None) -> np.ndarray:
    if domain is not None:
        r.check_poles(domain)
    rz = complex(r(B.z))
    drz = complex(r.derivative()(B.z))
    return np.array([[rz, 0.0], [B.t * B.lam * drz, rz]], dtype=complex)


def calc_general(T: Operator, r: RationalFunction, domain: PlanarDomain | None = None) -> np.ndarray:
    if domain is not None:
        r.check_poles(domain)
    return r.at_matrix(as_matrix(T))


def apply_calculus(T: Operator, r: RationalFunction) -> np.ndarray:
    if isinstance(T, ModelOperatorA):
        return calc_A(T, r)
    if isinstance(T, ModelOperatorB):
        return calc_B(T, r)
    return calc_general(T, r)


@dataclass(frozen=True)
class ContractivityVerdict:
    contractive: bool
    reason: str
    value: float
    critical: float
    extra: dict = field(default_factory=dict)


def contractivity_A(
    A: ModelOperatorA,
    domain: PlanarDomain,
    grid_size: int = DEFAULT_GRID,
    N: int = DEFAULT_TRUNCATION,
    tol: float = 1e-12,
) -> ContractivityVerdict:
    """Exact two-point criterion ``s |mu| <= s*`` with ``s*`` from :func:`extremal_s`.

    The extremal problem is posed with the zero at ``z2`` and the value at
    ``z1``; the kernel ratio is symmetric so the order does not matter.
    """
    ext = extremal_s(domain, A.z2, A.z1, grid_size, N)
    s_crit = float(np.sqrt(ext.s_sq))
    value = float(A.s * abs(A.mu))
    ok = value <= s_crit * (1.0 + tol)
    reason = "s*|mu| <= s_critical" if ok else "s*|mu| exceeds s_critical"
    return ContractivityVerdict(
        ok, reason, value, s_crit,
        {"m_sq": ext.m_sq, "alpha0": list(ext.alpha0.exponents)},
    )


def contractivity_B(
    B: ModelOperatorB, domain: PlanarDomain, N: int = DEFAULT_TRUNCATION, tol: float = 1e-12
) -> ContractivityVerdict:
    """``t |lambda| <= 1 / K(z, z)`` with the Szego kernel ``K``."""
    t_crit = extremal_t(domain, B.z, N)
    value = float(B.t * abs(B.lam))
    ok = value <= t_crit * (1.0 + tol)
    reason = "t*|lambda| <= t_critical" if ok else "t*|lambda| exceeds t_critical"
    return ContractivityVerdict(ok, reason, value, t_crit)


@dataclass(frozen=True)
class SampleReport:
    max_norm: float
    witness_index: int
    witness: RationalFunction | None
    sample_count: int
    norms: np.ndarray


def vn_sample_check(
    T: Operator,
    domain: PlanarDomain,
    sample_count: int,
    max_degree: int = 5,
    seed: int = 0,
) -> SampleReport:
    """Largest ``||r(T)||`` over sampled unit-ball rationals ``r``.

    Each sample pins one zero at a point of the spectrum, which loses no
    generality since a disk automorphism moves any value to zero.  The
    result is a lower bound for the norm of the induced homomorphism.
    """
    pins = spectrum_of(T)
    norms = np.empty(sample_count)
    best, best_j, best_f = -np.inf, -1, None
    for j in range(sample_count):
        f = scalar_sample(domain, sample_rng(seed, j), max_degree, pins)
        val = float(np.linalg.norm(apply_calculus(T, f), 2))
        norms[j] = val
        if val > best:
            best, best_j, best_f = val, j, f
    return SampleReport(best, best_j, best_f, sample_count, norms)


@dataclass(frozen=True)
class Rank2Decomposition:
    """``U^* T U = blocks[0] + ... + blocks[k-1] + diag(diagonal)``, in that order."""

    unitary: np.ndarray
    z1: complex
    z2: complex
    singular_values: np.ndarray
    blocks: list
    diagonal: list

    def assembled(self) -> np.ndarray:
        from scipy.linalg import block_diag

        parts = list(self.blocks) + [np.array([[d]]) for d in self.diagonal]
        return block_diag(*parts)

    def models(self) -> list:
        """2x2 summands as lower-triangular model operators.

        Swapping the basis of ``[[z1, c], [0, z2]]`` gives ``[[z2, 0], [c, z1]]``,
        which is ``A_s`` with nodes ``(z2, z1)`` and ``s*mu = c / (z2 - z1)``,
        or ``B_t`` with ``t = c`` when the eigenvalues agree.
        """
        out = []
        for blk in self.blocks:
            c = blk[0, 1]
            if abs(self.z1 - self.z2) < 1e-12:
                out.append(ModelOperatorB(self.z1, float(abs(c)), c / abs(c) if abs(c) else 1.0))
            else:
                smu = c / (self.z2 - self.z1)
                out.append(ModelOperatorA(self.z2, self.z1, float(abs(smu)), smu / abs(smu)))
        return out


def _check_split(T: np.ndarray, p: int, tol: float) -> bool:
    n = T.shape[0]
    if not 0 < p < n:
        return False
    scale = max(1.0, np.abs(T).max())
    z1, z2 = T[0, 0], T[p, p]
    return bool(
        np.abs(T[:p, :p] - z1 * np.eye(p)).max() <= tol * scale
        and np.abs(T[p:, p:] - z2 * np.eye(n - p)).max() <= tol * scale
        and np.abs(T[p:, :p]).max() <= tol * scale
    )


def rank2_decompose(T, p: int | None = None, tol: float = 1e-10) -> Rank2Decomposition:
    """Split ``[[z1 I_p, C], [0, z2 I_q]]`` into 2x2 blocks via the SVD of ``C``.

    The SVD ``C = W diag(sigma) V^*`` makes the coupling diagonal under
    ``W (+) V``; a permutation then pairs the ``i``-th vectors of the two
    halves.  Pairs with ``sigma_i > tol`` give blocks ``[[z1, sigma_i], [0, z2]]``;
    the remaining vectors give diagonal entries.
    """
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ShapeError("operator must be square")
    n = T.shape[0]
    candidates = range(1, n) if p is None else [p]
    p = next((k for k in candidates if _check_split(T, k, tol)), None)
    if p is None:
        raise ShapeError("operator is not of the form [[z1 I, C], [0, z2 I]]")
    q = n - p
    z1, z2 = complex(T[0, 0]), complex(T[p, p])
    C = T[:p, p:]
    W, sig, Vh = np.linalg.svd(C)
    base = np.zeros((n, n), dtype=complex)
    base[:p, :p] = W
    base[p:, p:] = Vh.conj().T
    kept = [i for i in range(min(p, q)) if sig[i] > tol * max(1.0, sig.max(initial=0.0))]
    order = []
    for i in kept:
        order += [i, p + i]
    rest = [i for i in range(p) if i not in kept] + [p + i for i in range(q) if i not in kept]
    U = base[:, order + rest]
    blocks = [np.array([[z1, sig[i]], [0.0, z2]], dtype=complex) for i in kept]
    diagonal = [z1 if i < p else z2 for i in rest]
    return Rank2Decomposition(U, z1, z2, sig, blocks, diagonal)

