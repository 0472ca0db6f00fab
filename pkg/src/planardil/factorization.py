"""Eigenvector kernels, Pick-type contractivity tests and Schur-product certificates.

For ``T`` with distinct eigenvalues let ``v_i`` be unit vectors with
``T^* v_i = conj(z_i) v_i``.  The Gram matrix ``G[a, b] = <v_b, v_a>`` is a
positive definite function on the nodes, and ``f -> f(T)`` is contractive
iff ``((1 - f(z_a) conj(f(z_b))) G[a, b])`` is positive semidefinite for
every unit-ball ``f``.  If ``G = K_alpha o A`` (entrywise) with ``A``
positive semidefinite, the map ``v_i -> K_alpha(., z_i) (x) a_i`` is an
isometry intertwining ``T^*`` with ``M^* (x) I``, which exhibits a dilation.

Verdicts are ``certified-dilatable`` or ``no-certificate-on-grid``: the
certificate is sufficient only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import schur

from .dilation_builder import compress, hardy_model
from .domain_kernels import (
    DEFAULT_TRUNCATION,
    PSD_TOL,
    KernelIndex,
    PlanarDomain,
    TruncatedKernel,
    kernel_gram,
)
from .errors import ConditioningError, DegenerateProblemError, ParameterError
from .matrix_homomorphisms import (
    ContractivityVerdict,
    GeneralOperator,
    ModelOperatorA,
    ModelOperatorB,
    as_matrix,
    contractivity_A,
    contractivity_B,
)
from .pick_interpolation import DEFAULT_GRID, exponent_grid, parallel_map
from .rational import RationalFunction
from .sampling import sample_rng, scalar_sample

QUOTIENT_ZERO = 1e-14
RECONSTRUCTION_TOL = 1e-8
CERTIFIED = "certified-dilatable"
NO_CERTIFICATE = "no-certificate-on-grid"


@dataclass(frozen=True)
class EigenKernel:
    nodes: np.ndarray
    vectors: np.ndarray
    gram: np.ndarray
    operator: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gram)[0])


def eigen_kernel(T) -> EigenKernel:
    """Gram matrix of the unit eigenvectors of ``T^*``."""
    op = T if isinstance(T, GeneralOperator) else GeneralOperator(as_matrix(T))
    V = op.adjoint_eigenvectors
    G = V.conj().T @ V
    G = 0.5 * (G + G.conj().T)
    if np.linalg.eigvalsh(G)[0] <= 0:
        raise ConditioningError("eigenvector Gram matrix is not positive definite")
    return EigenKernel(op.eigenvalues.copy(), V, G, op.matrix)


def operator_from_kernel(nodes: Sequence[complex], G: np.ndarray) -> np.ndarray:
    """The matrix whose adjoint has eigenvectors with Gram matrix ``G``.

    Factor ``G = V^* V`` and set ``T^* = V diag(conj(z)) V^{-1}``.
    """
    G = np.asarray(G, dtype=complex)
    vals, Q = np.linalg.eigh(0.5 * (G + G.conj().T))
    if vals[0] <= 0:
        raise ParameterError("kernel matrix must be positive definite")
    V = np.sqrt(vals)[:, None] * Q.conj().T
    Tstar = V @ np.diag(np.conj(np.asarray(nodes, dtype=complex))) @ np.linalg.inv(V)
    return Tstar.conj().T


def pick_form(ek: EigenKernel, values: np.ndarray) -> np.ndarray:
    """``((1 - f(z_a) conj(f(z_b))) G[a, b])`` for the value vector of ``f``."""
    w = np.asarray(values, dtype=complex)
    Q = (1.0 - np.outer(w, w.conj())) * ek.gram
    return 0.5 * (Q + Q.conj().T)


def exact_two_point_verdict(T: np.ndarray, domain: PlanarDomain, grid_size: int = DEFAULT_GRID,
                            N: int = DEFAULT_TRUNCATION) -> ContractivityVerdict:
    """Exact verdict for a 2x2 operator via its Schur form and the model criteria."""
    R, _ = schur(np.asarray(T, dtype=complex), output="complex")
    z1, z2, c = R[0, 0], R[1, 1], R[0, 1]
    # [[z1, c], [0, z2]] in the reversed basis is [[z2, 0], [c, z1]]
    if abs(z1 - z2) < 1e-12:
        return contractivity_B(ModelOperatorB(z1, float(abs(c)), 1.0), domain, N)
    smu = c / (z2 - z1)
    return contractivity_A(ModelOperatorA(z2, z1, float(abs(smu)), 1.0), domain, grid_size, N)


@dataclass
class PickTestReport:
    violation_found: bool
    min_relative_eigenvalue: float
    witness_index: int
    witness: RationalFunction | None
    witness_vector: np.ndarray | None
    sample_count: int
    exact_verdict: ContractivityVerdict | None = None
    witness_values: np.ndarray | None = None

    @property
    def verdict(self) -> str:
        return "not-contractive" if self.violation_found else "no-violation-found"

    def to_json(self) -> dict:
        from ._jsonio import cmatrix

        out = {
            "verdict": self.verdict,
            "violation_found": self.violation_found,
            "min_relative_eigenvalue": self.min_relative_eigenvalue,
            "witness_index": self.witness_index,
            "witness": None if self.witness is None else self.witness.to_json(),
            "witness_vector": None if self.witness_vector is None else cmatrix(self.witness_vector),
            "witness_values": None if self.witness_values is None else cmatrix(self.witness_values),
            "sample_count": self.sample_count,
        }
        if self.exact_verdict is not None:
            v = self.exact_verdict
            out["exact"] = {"contractive": v.contractive, "value": v.value, "critical": v.critical}
        return out


def contractivity_pick_test(
    ek: EigenKernel,
    domain: PlanarDomain,
    sample_count: int,
    max_degree: int = 5,
    seed: int = 0,
    tol: float = PSD_TOL,
    include_zero: bool = True,
    extremal_samples: int = 0,
) -> PickTestReport:
    """Sampled positivity test of the Pick form; a violation is a certificate.

    ``include_zero`` adds ``f = 0`` (whose Pick form is ``G`` itself).  On
    the annulus ``extremal_samples`` value tuples on the boundary of the
    interpolation body are added; their witness is reported as values only.
    For 2x2 operators the exact two-point verdict is attached.
    """
    from .opspace import extremal_values

    worst = (np.inf, -1, None, None, None)
    samples = []
    if include_zero:
        samples.append((-1, RationalFunction.constant(0.0)))
    samples += [(j, None) for j in range(sample_count)]
    candidates = []
    for j, f in samples:
        if f is None:
            f = scalar_sample(domain, sample_rng(seed, j), max_degree, ek.nodes)
        candidates.append((j, f, np.array([complex(f(z)) for z in ek.nodes])))
    if extremal_samples and not domain.is_disk:
        for j in range(extremal_samples):
            w = extremal_values(domain, ek.nodes, sample_rng(seed, j, 3))
            candidates.append((sample_count + j, None, w))
    for j, f, w in candidates:
        Q = pick_form(ek, w)
        vals, vecs = np.linalg.eigh(Q)
        rel = float(vals[0] / np.trace(Q).real)
        if rel < worst[0]:
            worst = (rel, j, f, vecs[:, 0], w)
    rel, j, f, vec, w = worst
    violated = rel < -tol
    exact = None
    if ek.size == 2 and ek.operator is not None:
        exact = exact_two_point_verdict(ek.operator, domain)
    return PickTestReport(
        bool(violated), rel, j,
        f if violated else None, vec if violated else None,
        len(candidates), exact, w if violated else None,
    )


@dataclass
class SchurCertificate:
    index: KernelIndex
    quotient: np.ndarray
    min_eigenvalue: float
    vectors: np.ndarray
    reconstruction_defect: float

    def to_json(self) -> dict:
        from ._jsonio import cmatrix

        return {
            "index": list(self.index.exponents),
            "quotient": cmatrix(self.quotient),
            "min_eigenvalue": self.min_eigenvalue,
            "vectors": cmatrix(self.vectors),
            "reconstruction_defect": self.reconstruction_defect,
        }


@dataclass
class SchurScan:
    certificate: SchurCertificate | None
    profile: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    grid_size: int = 0
    tol: float = PSD_TOL

    @property
    def verdict(self) -> str:
        return CERTIFIED if self.certificate is not None else NO_CERTIFICATE

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "profile": [[a, v] for a, v in self.profile],
            "skipped": self.skipped,
            "grid_size": self.grid_size,
            "tolerance": self.tol,
        }


def kernel_on_nodes(domain: PlanarDomain, index: KernelIndex, nodes, N: int) -> np.ndarray:
    return kernel_gram(TruncatedKernel(domain, index, N), nodes)


def quotient_matrix(ek: EigenKernel, domain: PlanarDomain, index: KernelIndex, N: int) -> np.ndarray:
    """``A = G / K_alpha`` entrywise; raises when a kernel entry vanishes."""
    Ka = kernel_on_nodes(domain, index, ek.nodes, N)
    if np.abs(Ka).min() < QUOTIENT_ZERO:
        raise DegenerateProblemError(f"kernel vanishes on a node pair at {index.exponents}")
    A = ek.gram / Ka
    return 0.5 * (A + A.conj().T)


def _factor(A: np.ndarray) -> np.ndarray:
    """Columns ``a_i`` with ``A[a, b] = <a_b, a_a>``; tiny negative eigenvalues are clipped."""
    lam, Q = np.linalg.eigh(A)
    lam = np.clip(lam, 0.0, None)
    return np.sqrt(lam)[:, None] * Q.conj().T


def certificate_at(
    ek: EigenKernel, domain: PlanarDomain, index: KernelIndex, N: int = DEFAULT_TRUNCATION, tol: float = PSD_TOL
) -> SchurCertificate:
    """Certificate at a given character; raises if the quotient is not PSD."""
    A = quotient_matrix(ek, domain, index, N)
    lam = np.linalg.eigvalsh(A)
    if lam[0] < -tol * abs(np.trace(A).real):
        raise ParameterError(f"quotient is not positive semidefinite (min eigenvalue {lam[0]:.3e})")
    vecs = _factor(A)
    Ka = kernel_on_nodes(domain, index, ek.nodes, N)
    recon = Ka * (vecs.conj().T @ vecs)
    defect = float(np.abs(recon - ek.gram).max() / np.abs(ek.gram).max())
    return SchurCertificate(index, A, float(lam[0]), vecs, defect)


def schur_certificate(
    ek: EigenKernel,
    domain: PlanarDomain,
    grid_size: int = DEFAULT_GRID,
    N: int = DEFAULT_TRUNCATION,
    tol: float = PSD_TOL,
    threads: int = 1,
) -> SchurScan:
    """Scan the character grid for a PSD quotient ``G / K_alpha``.

    The first success by smallest exponent is returned with the full profile
    of relative minimum eigenvalues (``None`` for skipped characters).
    """
    grid = exponent_grid(domain, grid_size)

    def probe(idx):
        try:
            A = quotient_matrix(ek, domain, idx, N)
        except DegenerateProblemError:
            return None
        return float(np.linalg.eigvalsh(A)[0] / abs(np.trace(A).real))

    rel = parallel_map(probe, grid, threads)
    profile = [(idx.shift, r) for idx, r in zip(grid, rel)]
    skipped = [idx.shift for idx, r in zip(grid, rel) if r is None]
    cert = None
    for idx, r in zip(grid, rel):
        if r is not None and r >= -tol:
            cert = certificate_at(ek, domain, idx, N, tol)
            break
    return SchurScan(cert, profile, skipped, grid_size if not domain.is_disk else 1, tol)


@dataclass
class Embedding:
    vectors: np.ndarray
    gram_defect: float
    compression: np.ndarray | None = None
    compression_defect: float | None = None
    invariance_defect: float | None = None


def embedding_vectors(
    cert: SchurCertificate,
    ek: EigenKernel,
    domain: PlanarDomain | None = None,
    N: int | None = None,
) -> Embedding:
    """``v_i -> K_alpha(., z_i) (x) a_i`` with its Gram cross-check.

    With ``domain`` and ``N`` the embedding is realized in the truncated
    Hardy model and ``M^* (x) I`` is compressed to the images of the
    standard basis; the result should be ``T^*``.
    """
    if cert.min_eigenvalue < -PSD_TOL * abs(np.trace(cert.quotient).real):
        raise ParameterError("certificate is not positive semidefinite")
    a = cert.vectors
    if domain is None:
        Ka = None
    else:
        Ka = kernel_on_nodes(domain, cert.index, ek.nodes, N or DEFAULT_TRUNCATION)
    if Ka is None:
        return Embedding(a, cert.reconstruction_defect)
    G = Ka * (a.conj().T @ a)
    gram_defect = float(np.abs(G - ek.gram).max())
    K = TruncatedKernel(domain, cert.index, N)
    model = hardy_model(K)
    X = np.column_stack([np.kron(a[:, i], model.coords(z)) for i, z in enumerate(ek.nodes)])
    # images of the standard basis: e_k = sum_i (V^{-1})[i, k] v_i
    Y = X @ np.linalg.inv(ek.vectors)
    Y_cols = [Y[:, k] for k in range(Y.shape[1])]
    comp = compress(model, Y_cols)
    target = ek.operator.conj().T if ek.operator is not None else None
    cdef = None if target is None else float(np.abs(comp.matrix - target).max())
    return Embedding(a, gram_defect, comp.matrix, cdef, comp.invariance_defect)


def bundle_certificate(
    ek: EigenKernel,
    domain: PlanarDomain,
    grid_size: int = 16,
    N: int = DEFAULT_TRUNCATION,
    tol: float = 1e-7,
) -> dict:
    """Search ``G = sum_alpha K_alpha o P_alpha`` with ``P_alpha`` PSD (semidefinite program).

    This is the diagonal-monodromy bundle test: each ``P_alpha`` collects the
    line-bundle summands at character ``alpha``.  Requires ``cvxpy``.
    """
    import cvxpy as cp

    grid = exponent_grid(domain, grid_size)
    Ks = [kernel_on_nodes(domain, idx, ek.nodes, N) for idx in grid]
    n = ek.size
    Ps = [cp.Variable((n, n), hermitian=True) for _ in grid]
    scale = np.abs(ek.gram).max()
    expr = sum(cp.multiply(K, P) for K, P in zip(Ks, Ps))
    prob = cp.Problem(
        cp.Minimize(cp.norm(expr - ek.gram / scale, "fro")), [P >> 0 for P in Ps]
    )
    prob.solve(solver="CLARABEL")
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return {"verdict": NO_CERTIFICATE, "status": prob.status, "residual": None}
    mats = []
    for P in Ps:
        lam, Q = np.linalg.eigh(0.5 * (P.value + P.value.conj().T))
        mats.append((Q * np.clip(lam, 0, None)) @ Q.conj().T * scale)
    recon = sum(K * P for K, P in zip(Ks, mats))
    residual = float(np.abs(recon - ek.gram).max() / scale)
    return {
        "verdict": CERTIFIED if residual <= tol else NO_CERTIFICATE,
        "status": prob.status,
        "residual": residual,
        "tolerance": tol,
        "weights": [[idx.shift, float(np.trace(P).real)] for idx, P in zip(grid, mats)],
    }
