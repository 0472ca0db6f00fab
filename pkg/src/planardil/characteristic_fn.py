"""Characteristic functions of the 2x2 disk models and unitary equivalence.

For ``T = [[z1, 0], [s mu (z1 - z2), z2]]`` on the disk with the critical
coupling ``s``, the characteristic function is

    theta(u) = [[c phi2(u), -mu], [conj(mu) phi1(u) phi2(u), c phi1(u)]]

with ``c = sqrt(1 - |mu|^2)`` and ``phi_i`` the Mobius map vanishing at
``z_i``.  The same expression is used when ``z1 == z2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np
from scipy.optimize import minimize

from .domain_kernels import PlanarDomain
from .errors import DomainError, ParameterError
from .matrix_homomorphisms import ModelOperatorA, ModelOperatorB
from .pick_interpolation import extremal_s
from .rational import RationalFunction
from .sampling import haar_unitary, sample_rng

MODULUS_TOL = 1e-12
COINCIDENCE_TOL = 1e-8
COINCIDENCE_POINTS = 64


@dataclass(frozen=True)
class CharFn:
    z1: complex
    z2: complex
    mu: complex

    def __post_init__(self):
        for z in (self.z1, self.z2):
            if not abs(z) < 1:
                raise DomainError(f"node {z!r} is not inside the unit disk")
        if abs(self.mu) > 1 + MODULUS_TOL:
            raise ParameterError("|mu| must not exceed 1")
        object.__setattr__(self, "z1", complex(self.z1))
        object.__setattr__(self, "z2", complex(self.z2))
        object.__setattr__(self, "mu", complex(self.mu))

    @property
    def phi1(self) -> RationalFunction:
        return RationalFunction.mobius(self.z1)

    @property
    def phi2(self) -> RationalFunction:
        return RationalFunction.mobius(self.z2)

    @property
    def defect(self) -> float:
        return float(np.sqrt(max(0.0, 1.0 - abs(self.mu) ** 2)))

    def entries(self) -> list[list[RationalFunction]]:
        """The four entries of ``theta`` as rational functions."""
        c, mu = self.defect, self.mu
        p1, p2 = self.phi1, self.phi2
        return [
            [c * p2, RationalFunction.constant(-mu)],
            [np.conj(mu) * (p1 * p2), c * p1],
        ]

    def operator(self) -> np.ndarray:
        """The disk model operator with this characteristic function."""
        if abs(self.z1 - self.z2) < 1e-14:
            t = 1.0 - abs(self.z1) ** 2
            return ModelOperatorB(self.z1, t, self.mu).matrix
        s = np.sqrt(extremal_s(PlanarDomain.disk(), self.z1, self.z2).s_sq)
        return ModelOperatorA(self.z1, self.z2, s, self.mu).matrix


def theta_eval(c: CharFn, u: complex) -> np.ndarray:
    if abs(u) > 1 + MODULUS_TOL:
        raise DomainError(f"|u| = {abs(u)} exceeds 1")
    p1 = complex(c.phi1(u))
    p2 = complex(c.phi2(u))
    d, mu = c.defect, c.mu
    return np.array([[d * p2, -mu], [np.conj(mu) * p1 * p2, d * p1]], dtype=complex)


def theta_product_at_node(c: CharFn) -> np.ndarray:
    """``theta(z1) theta(z1)^*``; rank at most one since ``phi1(z1) = 0``."""
    th = theta_eval(c, c.z1)
    return th @ th.conj().T


def boundary_points(count: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(count) / count)


def inner_defect(c: CharFn, count: int = 256) -> float:
    """``max ||theta(u)^* theta(u) - I||`` over equispaced boundary points."""
    worst = 0.0
    for u in boundary_points(count):
        th = theta_eval(c, u)
        worst = max(worst, float(np.linalg.norm(th.conj().T @ th - np.eye(2), 2)))
    return worst


def det_zeros(c: CharFn) -> np.ndarray:
    """Zeros of ``det theta`` in the open disk, located by polynomial root finding."""
    (a, b), (cc, d) = c.entries()
    det = a * d + (-1.0) * (b * cc)
    roots = np.asarray(np.roots(det.num[::-1]) if len(det.num) > 1 else [], dtype=complex)
    return np.sort_complex(roots[np.abs(roots) < 1])


def range_residual(c: CharFn, eta1, eta2) -> float:
    """Residual of the two range conditions for ``(f, g) = theta (eta1, eta2)``.

    ``eta1``, ``eta2`` are scalars or callables.  Any such pair satisfies
    ``c phi1(z2) f(z2) + mu g(z2) = 0`` and ``g(z1) = 0``.
    """
    def val(eta, z):
        return complex(eta(z)) if callable(eta) else complex(eta)

    f2, g2 = theta_eval(c, c.z2) @ np.array([val(eta1, c.z2), val(eta2, c.z2)])
    _, g1 = theta_eval(c, c.z1) @ np.array([val(eta1, c.z1), val(eta2, c.z1)])
    first = c.defect * complex(c.phi1(c.z2)) * f2 + c.mu * g2
    return float(max(abs(first), abs(g1)))


def phase_rotation(psi: float) -> np.ndarray:
    """``D = diag(e^{i psi/2}, e^{-i psi/2})`` with ``theta_{mu e^{i psi}} = D theta_mu D^*``."""
    return np.diag([np.exp(0.5j * psi), np.exp(-0.5j * psi)])


@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    certificate: np.ndarray | None
    certificate_residual: float | None
    invariants_agree: bool
    search_residual: float | None = None

    def to_json(self) -> dict:
        from ._jsonio import cmatrix

        return {
            "equivalent": self.equivalent,
            "certificate": None if self.certificate is None else cmatrix(self.certificate),
            "certificate_residual": self.certificate_residual,
            "invariants_agree": self.invariants_agree,
            "search_residual": self.search_residual,
        }


def pearcy_invariants(T: np.ndarray) -> np.ndarray:
    """``(tr T, tr T^2, tr T^*T)``, a complete unitary invariant for 2x2 matrices."""
    return np.array([np.trace(T), np.trace(T @ T), np.trace(T.conj().T @ T)])


def random_equivalence_search(
    T1: np.ndarray, T2: np.ndarray, budget: int = 10_000, seed: int = 0
) -> float:
    """Smallest ``||U^* T1 U - T2||`` over Haar unitaries, then polished locally."""
    best, best_u = np.inf, None
    for j in range(budget):
        U = haar_unitary(2, sample_rng(seed, j, 7))
        res = np.linalg.norm(U.conj().T @ T1 @ U - T2, 2)
        if res < best:
            best, best_u = res, U

    def unitary(x):
        a, b, g, d = x
        return np.exp(1j * a) * np.array(
            [[np.exp(1j * b) * np.cos(g), np.exp(1j * d) * np.sin(g)],
             [-np.exp(-1j * d) * np.sin(g), np.exp(-1j * b) * np.cos(g)]]
        )

    def loss(x):
        U = unitary(x)
        return np.linalg.norm(U.conj().T @ T1 @ U - T2, "fro") ** 2

    # start the polish from a parametrization close to the best sample
    det = np.linalg.det(best_u)
    V = best_u / np.sqrt(det)
    x0 = [np.angle(np.sqrt(det)), np.angle(V[0, 0]), np.arccos(min(1.0, abs(V[0, 0]))), np.angle(V[0, 1])]
    res = minimize(loss, x0, method="BFGS", options={"gtol": 1e-14})
    return float(min(best, np.sqrt(max(res.fun, 0.0))))


def unitary_equiv(
    mu1: complex,
    mu2: complex,
    z1: complex = 0.3,
    z2: complex = -0.2 + 0.1j,
    search_budget: int = 0,
    seed: int = 0,
) -> EquivalenceReport:
    """Decide whether the models with couplings ``mu1`` and ``mu2`` are unitarily equivalent.

    Equivalence holds exactly when ``|mu1| = |mu2|``; the certificate is
    ``U = diag(1, e^{-i psi})`` with ``psi = arg mu2 - arg mu1``.  The
    verdict is cross-checked against the trace invariants, and optionally
    against a random search over unitaries.
    """
    c1, c2 = CharFn(z1, z2, mu1), CharFn(z1, z2, mu2)
    T1, T2 = c1.operator(), c2.operator()
    equivalent = abs(abs(mu1) - abs(mu2)) <= MODULUS_TOL
    scale = max(1.0, np.abs(T1).max(), np.abs(T2).max())
    agree = bool(np.abs(pearcy_invariants(T1) - pearcy_invariants(T2)).max() <= 1e-10 * scale)
    cert, resid = None, None
    if equivalent:
        psi = (np.angle(mu2) - np.angle(mu1)) if abs(mu1) > 0 else 0.0
        cert = np.diag([1.0, np.exp(-1j * psi)])
        resid = float(np.linalg.norm(cert.conj().T @ T1 @ cert - T2, 2))
    search = random_equivalence_search(T1, T2, search_budget, seed) if search_budget else None
    return EquivalenceReport(bool(equivalent), cert, resid, agree, search)


def _polar(X: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(X)
    return W @ Vh


def coincidence_distance(
    theta1: Callable[[complex], np.ndarray],
    theta2: Callable[[complex], np.ndarray],
    points: int = COINCIDENCE_POINTS,
    family: str = "diagonal",
) -> float:
    """``min`` over constant unitaries ``U, V`` of ``max_u ||U theta1(u) V - theta2(u)||``.

    ``family="diagonal"`` restricts ``U, V`` to diagonal unitaries (three
    phases matter).  ``family="unitary"`` allows all of ``U(2)`` and fits
    ``U, V`` by alternating orthogonal Procrustes steps on the boundary grid.
    """
    us = boundary_points(points)
    A = np.array([theta1(u) for u in us])
    B = np.array([theta2(u) for u in us])

    def sup(U, V):
        return max(np.linalg.norm(U @ a @ V - b, 2) for a, b in zip(A, B))

    if family == "unitary":
        best = np.inf
        for start in range(4):
            V = haar_unitary(A.shape[1], sample_rng(0, start, 11)) if start else np.eye(A.shape[1])
            for _ in range(500):
                U = _polar(np.einsum("kij,klj->il", B, np.conj(A @ V)))
                V_new = _polar(np.einsum("kji,kjl->il", np.conj(U @ A), B))
                done = np.abs(V_new - V).max() < 1e-15
                V = V_new
                if done:
                    break
            best = min(best, float(sup(U, V)))
        return best
    if family != "diagonal":
        raise ParameterError(f"unknown unitary family {family!r}")

    def dist(x):
        return sup(np.diag([1.0, np.exp(1j * x[0])]), np.diag([np.exp(1j * x[1]), np.exp(1j * x[2])]))

    best = np.inf
    # entrywise phase ratios give good starting points
    ratios = np.angle(np.sum(B * np.conj(A), axis=0))
    starts = [np.zeros(3), np.array([ratios[1, 0] - ratios[0, 0], ratios[0, 0], ratios[0, 1]])]
    starts += [np.array(s) for s in np.random.default_rng(0).uniform(0, 2 * np.pi, (6, 3))]
    for x0 in starts:
        res = minimize(dist, x0, method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
        best = min(best, float(res.fun))
        if best < COINCIDENCE_TOL * 1e-2:
            break
    return best


def nagy_foias_theta(T: np.ndarray) -> Callable[[complex], np.ndarray]:
    """``-T + u D_{T*} (I - u T^*)^{-1} D_T`` straight from the definition (strict contraction)."""
    from scipy.linalg import sqrtm

    T = np.asarray(T, dtype=complex)
    eye = np.eye(T.shape[0])
    DT = sqrtm(eye - T.conj().T @ T)
    DTs = sqrtm(eye - T @ T.conj().T)
    return lambda u: -T + u * DTs @ np.linalg.solve(eye - u * T.conj().T, DT)


def theta_grid(c: CharFn, points: int = COINCIDENCE_POINTS) -> list[tuple[complex, np.ndarray]]:
    return [(u, theta_eval(c, u)) for u in boundary_points(points)]


CSV_HEADER = [
    "re_u", "im_u",
    "re_t11", "im_t11", "re_t12", "im_t12",
    "re_t21", "im_t21", "re_t22", "im_t22",
]


def dump_theta_csv(c: CharFn, points: int, stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for u, th in theta_grid(c, points):
        row = [u.real, u.imag]
        for x in th.ravel():
            row += [x.real, x.imag]
        w.writerow([repr(float(v)) for v in row])


def plus_sign_form(z: complex, lam: complex) -> Callable[[complex], np.ndarray]:
    """``[[c phi, lam], [conj(lam) phi^2, c phi]]`` with a plus sign on ``lam``.

    Kept for comparison only; it is not inner when ``0 < |lam| < 1``.
    """
    phi = RationalFunction.mobius(z)
    cdef = np.sqrt(max(0.0, 1.0 - abs(lam) ** 2))

    def ev(u):
        p = complex(phi(u))
        return np.array([[cdef * p, lam], [np.conj(lam) * p * p, cdef * p]], dtype=complex)

    return ev


def models_for(mus: Sequence[complex], z1: complex, z2: complex) -> list[CharFn]:
    return [CharFn(z1, z2, mu) for mu in mus]
