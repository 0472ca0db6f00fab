"""Explicit dilations of the 2x2 model operators.

Everything lives in a truncated Hardy space with an orthonormal coordinate
basis.  Kernel functions ``K(., w)`` and their antiholomorphic derivatives are
coordinate vectors, ``M`` is a matrix, and the invariant subspaces of
``M^* (+) M^*`` are pairs of vectors in the doubled coordinate space.

Compressions are always taken of the adjoint: ``compress`` returns the matrix
of ``M^* (+) M^*`` restricted to the span, whose conjugate transpose is the
compression of ``M (+) M`` and is compared with ``A_s`` or ``B_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .domain_kernels import (
    DEFAULT_TRUNCATION,
    BoundaryQuadrature,
    KernelIndex,
    PlanarDomain,
    TruncatedKernel,
    _log_norms,
    section_dvalues,
    section_values,
)
from .errors import ConditioningError, NotCoinvariantError, ParameterError
from .pick_interpolation import DEFAULT_GRID, kernel_ratio, maximize_ratio
from .rational import RationalFunction

COINVARIANCE_TOL = 1e-6
MAX_GRAM_COND = 1e10


@dataclass(frozen=True)
class TruncatedHardyModel:
    """Truncated Hardy space in orthonormal coordinates.

    Coordinates are taken against ``L^{-H} psi`` where ``psi`` are the
    orthonormal sections of the unweighted space and ``L L^H`` is the Gram
    matrix of ``psi`` in the model's inner product (``L is None`` means the
    identity).
    """

    domain: PlanarDomain
    shift: float
    exponents: np.ndarray
    M: np.ndarray
    chol: np.ndarray | None = None
    weight_point: complex | None = None
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def _to_coords(self, raw: np.ndarray) -> np.ndarray:
        if self.chol is None:
            return raw
        return solve_triangular(self.chol, raw, lower=True)

    def coords(self, w: complex) -> np.ndarray:
        """Coordinates of the kernel function at ``w``."""
        raw = np.conj(section_values(self.domain, self.shift, self.exponents, w))
        return self._to_coords(raw)

    def dbar_coords(self, w: complex) -> np.ndarray:
        raw = np.conj(section_dvalues(self.domain, self.shift, self.exponents, w))
        return self._to_coords(raw)

    def kernel(self, z: complex, w: complex) -> complex:
        return complex(np.vdot(self.coords(z), self.coords(w)))

    @property
    def multiplication_excess(self) -> float:
        """``||M|| - 1``; positive values measure truncation or weighting."""
        return float(np.linalg.norm(self.M, 2) - 1.0)


def hardy_model(K: TruncatedKernel) -> TruncatedHardyModel:
    """Model for ``H^2_a`` itself: ``M`` is the weighted shift on sections."""
    exps = K.exponents
    logc = _log_norms(K.domain, exps, K.shift)
    weights = np.exp(0.5 * (logc[1:] - logc[:-1]))
    M = np.diag(weights.astype(complex), -1)
    return TruncatedHardyModel(K.domain, K.shift, exps, M, info={"N": K.N, "kind": "hardy"})


def _as_model(obj) -> TruncatedHardyModel:
    if isinstance(obj, TruncatedHardyModel):
        return obj
    if isinstance(obj, TruncatedKernel):
        return hardy_model(obj)
    raise TypeError(f"expected a kernel or a Hardy model, got {type(obj).__name__}")


def weighted_hardy(
    domain: PlanarDomain,
    z: complex,
    Q: BoundaryQuadrature,
    N: int = 60,
    szego_N: int = DEFAULT_TRUNCATION,
) -> TruncatedHardyModel:
    """Hardy space of the boundary measure ``|S(nu, z)|^2 |d nu|``.

    ``S`` is the Szego kernel.  The Gram matrix of the sections in the
    weighted quadrature inner product is factored by Cholesky; if its
    condition number exceeds ``1e10`` the truncation is lowered until it
    does not.
    """
    domain.check_interior(z)
    S = TruncatedKernel(domain, KernelIndex.trivial(domain), szego_N)
    weight = np.abs(S.sections(Q.nodes) @ np.conj(S.sections(z))) ** 2
    while True:
        if Q.degree < 2 * (N + 1):
            raise ParameterError("quadrature too coarse for the requested truncation")
        lo = 0 if domain.is_disk else -N
        ext = np.arange(lo, N + 2)
        d = len(ext) - 1
        Psi = section_values(domain, 0.0, ext, Q.nodes)
        H = (Psi.conj().T * (Q.weights * weight)) @ Psi  # H[n, m] = <psi_m, psi_n>
        H = 0.5 * (H + H.conj().T)
        cond = np.linalg.cond(H[:d, :d])
        if cond <= MAX_GRAM_COND:
            break
        N = int(N * 0.9)
        if N < 4:
            raise ConditioningError("weighted Gram matrix stays ill-conditioned; reduce N")
    L = np.linalg.cholesky(H[:d, :d])
    logc = _log_norms(domain, ext, 0.0)
    scale = np.exp(0.5 * (logc[1:] - logc[:-1]))
    B = H[:d, 1:] * scale[None, :]  # B[n, m] = <M psi_m, psi_n>
    Linv_B = solve_triangular(L, B, lower=True)
    M = solve_triangular(L, Linv_B.conj().T, lower=True).conj().T
    return TruncatedHardyModel(
        domain, 0.0, ext[:d], M, chol=L, weight_point=complex(z),
        info={"N": N, "kind": "weighted", "gram_condition": float(cond)},
    )


def gram_schmidt_pair(K, z1: complex, z2: complex) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormalize ``K(., z1), K(., z2)`` in that order."""
    model = _as_model(K)
    model.domain.check_interior(z1, z2)
    k1, k2 = model.coords(z1), model.coords(z2)
    K11, K22 = np.vdot(k1, k1).real, np.vdot(k2, k2).real
    K12 = np.vdot(k1, k2)
    D = K11 * K22 - abs(K12) ** 2
    if D <= 1e-12 * K11 * K22:
        raise ConditioningError("kernel Gram determinant is numerically zero")
    e = k1 / np.sqrt(K11)
    f = (K11 * k2 - K12 * k1) / (np.sqrt(K11) * np.sqrt(D))
    return e, f


def gram_schmidt_jet(K, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormalize ``K(., z)`` and its antiholomorphic derivative in ``z``."""
    model = _as_model(K)
    model.domain.check_interior(z)
    k, dk = model.coords(z), model.dbar_coords(z)
    Kzz = np.vdot(k, k).real
    cross = np.vdot(k, dk)
    E = Kzz * np.vdot(dk, dk).real - abs(cross) ** 2
    if E <= 1e-12 * Kzz * np.vdot(dk, dk).real:
        raise ConditioningError("jet Gram determinant is numerically zero")
    e = k / np.sqrt(Kzz)
    f = (Kzz * dk - cross * k) / (np.sqrt(Kzz) * np.sqrt(E))
    return e, f


def _check_contraction_param(x: complex, name: str) -> None:
    if abs(x) > 1.0 + 1e-12:
        raise ParameterError(f"|{name}| must not exceed 1, got {abs(x)}")


def build_subspace_M(K, z1: complex, z2: complex, mu: complex) -> tuple[np.ndarray, np.ndarray]:
    """``h1 = (0, e(z1))`` and ``h2 = (sqrt(1-|mu|^2) e(z2), mu f(z1, z2))``."""
    _check_contraction_param(mu, "mu")
    model = _as_model(K)
    e1, f = gram_schmidt_pair(model, z1, z2)
    k2 = model.coords(z2)
    e2 = k2 / np.linalg.norm(k2)
    zero = np.zeros_like(e1)
    c = np.sqrt(max(0.0, 1.0 - abs(mu) ** 2))
    return np.concatenate([zero, e1]), np.concatenate([c * e2, mu * f])


def build_subspace_N(K, z: complex, lam: complex) -> tuple[np.ndarray, np.ndarray]:
    """``k1 = (0, e(z))`` and ``k2 = (sqrt(1-|lam|^2) e(z), lam f(z))``."""
    _check_contraction_param(lam, "lambda")
    e, f = gram_schmidt_jet(K, z)
    zero = np.zeros_like(e)
    c = np.sqrt(max(0.0, 1.0 - abs(lam) ** 2))
    return np.concatenate([zero, e]), np.concatenate([c * e, lam * f])


def _apply_blockwise(op: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Apply ``op (+) ... (+) op`` to the columns of ``V``."""
    d = op.shape[0]
    copies = V.shape[0] // d
    stacked = V.reshape(copies, d, V.shape[1])
    return np.einsum("ij,cjk->cik", op, stacked).reshape(V.shape)


@dataclass(frozen=True)
class Compression:
    matrix: np.ndarray
    invariance_defect: float
    orthonormality_defect: float


def compress(model, vectors: Sequence[np.ndarray], tol: float = COINVARIANCE_TOL) -> Compression:
    """Matrix of ``M^* (+) ... (+) M^*`` on the span of orthonormal ``vectors``.

    Column ``j`` holds the coordinates of the image of ``vectors[j]``.  Raises
    :class:`NotCoinvariantError` when the image leaves the span by more
    than ``tol``.
    """
    model = _as_model(model)
    V = np.column_stack(vectors)
    if V.shape[0] % model.dim:
        raise ParameterError("vector length is not a multiple of the model dimension")
    ortho = float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max())
    X = _apply_blockwise(model.M.conj().T, V)
    C = V.conj().T @ X
    defect = float(np.linalg.norm(X - V @ C, 2))
    if defect > tol:
        raise NotCoinvariantError(f"span is not co-invariant: defect {defect:.3e}")
    return Compression(C, defect, ortho)


def kernel_pair_data(K, z1: complex, z2: complex) -> tuple[float, float, complex]:
    model = _as_model(K)
    k1, k2 = model.coords(z1), model.coords(z2)
    return np.vdot(k1, k1).real, np.vdot(k2, k2).real, complex(np.vdot(k1, k2))


def s_kernel(K, z1: complex, z2: complex) -> float:
    """``|K(z1,z2)| / (K(z1,z1) K(z2,z2) - |K(z1,z2)|^2)^(1/2)``."""
    K11, K22, K12 = kernel_pair_data(K, z1, z2)
    return float(abs(K12) / np.sqrt(K11 * K22 - abs(K12) ** 2))


def t_kernel(K, z: complex) -> float:
    """``K(z,z) / (K(z,z) ||dK||^2 - |<dK, K>|^2)^(1/2)`` for the jet at ``z``."""
    model = _as_model(K)
    k, dk = model.coords(z), model.dbar_coords(z)
    Kzz = np.vdot(k, k).real
    E = Kzz * np.vdot(dk, dk).real - abs(np.vdot(k, dk)) ** 2
    return float(Kzz / np.sqrt(E))


def closed_form_M(K, z1: complex, z2: complex, mu: complex) -> np.ndarray:
    """Closed-form restriction of ``M^* (+) M^*`` to ``span{h1, h2}``.

    The off-diagonal uses ``|K(z1, z2)|``: the phase of the kernel value is
    absorbed into ``mu``.  The compression of the subspace built with ``mu``
    therefore equals this matrix evaluated at ``absorbed_mu(K, z1, z2, mu)``.
    """
    K11, K22, K12 = kernel_pair_data(K, z1, z2)
    D = K11 * K22 - abs(K12) ** 2
    zb1, zb2 = np.conj(z1), np.conj(z2)
    return np.array([[zb1, mu * (zb2 - zb1) * abs(K12) / np.sqrt(D)], [0.0, zb2]], dtype=complex)


def absorbed_mu(K, z1: complex, z2: complex, mu: complex) -> complex:
    """``mu * K(z1,z2) / |K(z1,z2)|``, the coupling seen by :func:`closed_form_M`."""
    _, _, K12 = kernel_pair_data(K, z1, z2)
    return complex(mu * K12 / abs(K12))


def closed_form_N(K, z: complex, lam: complex) -> np.ndarray:
    zb = np.conj(z)
    return np.array([[zb, lam * t_kernel(K, z)], [0.0, zb]], dtype=complex)


def effective_mu(K, z1: complex, z2: complex, mu: complex) -> complex:
    """``mu'`` with ``A_s(mu').matrix`` equal to the adjoint of the compression (``s = s_K``)."""
    _, _, K12 = kernel_pair_data(K, z1, z2)
    return complex(-np.conj(mu) * np.conj(K12) / abs(K12))


def alpha0_search(
    domain: PlanarDomain,
    z1: complex,
    z2: complex,
    grid_size: int = DEFAULT_GRID,
    N: int = DEFAULT_TRUNCATION,
) -> KernelIndex:
    """Character maximizing ``|K(z1,z2)|^2 / (K(z1,z1) K(z2,z2))``."""
    if domain.is_disk:
        return KernelIndex(())
    return maximize_ratio(domain, z1, z2, grid_size, N)[1]


def grid_maximizers(
    domain: PlanarDomain, z1: complex, z2: complex, grid_size: int, N: int, rtol: float = 1e-12
) -> list[KernelIndex]:
    """All grid characters whose ratio ties the grid maximum within ``rtol``."""
    if domain.is_disk:
        return [KernelIndex(())]
    grid = np.arange(grid_size) / grid_size
    vals = np.array([kernel_ratio(domain, z1, z2, a, N) for a in grid])
    top = vals.max()
    return [KernelIndex((float(a),)) for a, v in zip(grid, vals) if v >= top * (1 - rtol)]


def verify_dilation(
    model,
    vectors: Sequence[np.ndarray],
    T_target: np.ndarray,
    test_functions: Sequence[RationalFunction],
) -> float:
    """Max over ``f`` of ``||P f(M (+) M) P|span - f(T_target)||``.

    ``T_target`` is expressed in the basis ``vectors``; for a co-invariant span
    it should be the conjugate transpose of :func:`compress`.
    """
    model = _as_model(model)
    V = np.column_stack(vectors)
    T_target = np.asarray(T_target, dtype=complex)
    worst = 0.0
    for f in test_functions:
        F = f.at_matrix(model.M)
        D = V.conj().T @ _apply_blockwise(F, V)
        worst = max(worst, float(np.linalg.norm(D - f.at_matrix(T_target), 2)))
    return worst


@dataclass
class DilationWitness:
    vectors: list
    compression: np.ndarray
    target: np.ndarray
    defect: float
    invariance_defect: float
    orthonormality_defect: float
    parameters: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from ._jsonio import cmatrix

        return {
            "vectors": [cmatrix(v) for v in self.vectors],
            "compression": cmatrix(self.compression),
            "target": cmatrix(self.target),
            "defect": self.defect,
            "invariance_defect": self.invariance_defect,
            "orthonormality_defect": self.orthonormality_defect,
            "parameters": self.parameters,
        }


def witness_distinct(model, z1: complex, z2: complex, mu: complex) -> DilationWitness:
    """Build the ``A_s`` subspace, compress, and compare with the closed form."""
    h = build_subspace_M(model, z1, z2, mu)
    comp = compress(model, h)
    target = closed_form_M(model, z1, z2, absorbed_mu(model, z1, z2, mu))
    return DilationWitness(
        list(h), comp.matrix, target, float(np.abs(comp.matrix - target).max()),
        comp.invariance_defect, comp.orthonormality_defect,
        {"s_K": s_kernel(model, z1, z2), "mu_effective": effective_mu(model, z1, z2, mu)},
    )


def witness_jet(model, z: complex, lam: complex) -> DilationWitness:
    k = build_subspace_N(model, z, lam)
    comp = compress(model, k)
    target = closed_form_N(model, z, lam)
    return DilationWitness(
        list(k), comp.matrix, target, float(np.abs(comp.matrix - target).max()),
        comp.invariance_defect, comp.orthonormality_defect,
        {"t_K": t_kernel(model, z)},
    )
