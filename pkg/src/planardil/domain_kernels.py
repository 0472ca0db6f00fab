"""Planar domains, boundary quadrature and truncated reproducing kernels.

Two domains are supported: the unit disk and the annulus ``r < |z| < 1``.
The boundary measure is arclength normalized by ``1/(2*pi)``, so the outer
circle carries mass 1 and the inner circle carries mass ``r``.

For the annulus and a character exponent ``a`` in ``[0, 1)`` the Hardy
space ``H^2_a`` is spanned by the multivalued sections ``z**(n + a)``,
``n`` an integer. These are mutually orthogonal with squared norms

    c_n(a) = 1 + r**(2*(n + a) + 1),

and the reproducing kernel is the series
``K_a(z, w) = sum_n z**(n+a) * conj(w**(n+a)) / c_n(a)``.  The series is
truncated at ``|n| <= N``; powers use the principal branch and are
evaluated in log space so that large negative exponents never overflow.
On the disk the basis is ``z**n``, ``n >= 0``, with unit norms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParameterError, UnsupportedDomainError

DEFAULT_TRUNCATION = 200
PSD_TOL = 1e-10
REPRODUCING_TOL = 1e-8


@dataclass(frozen=True)
class PlanarDomain:
    kind: str
    inner_radius: float | None = None

    def __post_init__(self):
        if self.kind == "disk":
            if self.inner_radius not in (None, 0, 0.0):
                raise ParameterError("the disk takes no inner radius")
            object.__setattr__(self, "inner_radius", None)
        elif self.kind == "annulus":
            r = self.inner_radius
            if r is None or not 0.0 < float(r) < 1.0:
                raise ParameterError(f"annulus needs 0 < inner_radius < 1, got {r!r}")
            object.__setattr__(self, "inner_radius", float(r))
        else:
            raise UnsupportedDomainError(f"unsupported domain kind {self.kind!r}")

    @classmethod
    def disk(cls) -> "PlanarDomain":
        return cls("disk")

    @classmethod
    def annulus(cls, inner_radius: float) -> "PlanarDomain":
        return cls("annulus", inner_radius)

    @property
    def is_disk(self) -> bool:
        return self.kind == "disk"

    @property
    def connectivity(self) -> int:
        """Number of bounded components of the complement."""
        return 0 if self.is_disk else 1

    def contains(self, z, margin: float = 0.0) -> bool:
        """True if every point of ``z`` is strictly inside, with ``margin``."""
        mod = np.abs(np.asarray(z, dtype=complex))
        inside = mod < 1.0 - margin
        if not self.is_disk:
            inside &= mod > self.inner_radius + margin
        return bool(np.all(inside))

    def contains_closed(self, z, margin: float = 0.0) -> np.ndarray:
        """Elementwise membership in the closed domain, enlarged by ``margin``."""
        mod = np.abs(np.asarray(z, dtype=complex))
        inside = mod <= 1.0 + margin
        if not self.is_disk:
            inside &= mod >= self.inner_radius - margin
        return inside

    def check_interior(self, *points) -> None:
        for z in points:
            if not self.contains(z):
                raise DomainError(f"point {complex(z)!r} is not strictly inside the {self.kind}")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if not self.is_disk:
            out["inner_radius"] = self.inner_radius
        return out


@dataclass(frozen=True)
class KernelIndex:
    """Character exponents, one per bounded complementary component."""

    exponents: tuple[float, ...] = ()

    def __post_init__(self):
        exps = tuple(float(a) for a in self.exponents)
        for a in exps:
            if not 0.0 <= a < 1.0:
                raise ParameterError(f"character exponent must lie in [0, 1), got {a}")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def trivial(cls, domain: PlanarDomain) -> "KernelIndex":
        return cls(()) if domain.is_disk else cls((0.0,))

    @classmethod
    def for_domain(cls, domain: PlanarDomain, a: float = 0.0) -> "KernelIndex":
        return cls(()) if domain.is_disk else cls((float(a) % 1.0,))

    @property
    def character(self) -> tuple[complex, ...]:
        return tuple(complex(np.exp(2j * np.pi * a)) for a in self.exponents)

    @property
    def shift(self) -> float:
        return self.exponents[0] if self.exponents else 0.0

    def validate(self, domain: PlanarDomain) -> None:
        if len(self.exponents) != domain.connectivity:
            raise ParameterError(
                f"index has {len(self.exponents)} exponents, domain needs {domain.connectivity}"
            )


@dataclass(frozen=True)
class BoundaryQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    degree: int

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * np.asarray(values)))

    def inner(self, f_vals, g_vals) -> complex:
        """Quadrature inner product ``<f, g>`` from boundary samples."""
        return complex(np.sum(self.weights * np.asarray(f_vals) * np.conj(g_vals)))


def build_quadrature(domain: PlanarDomain, points_per_component: int) -> BoundaryQuadrature:
    """Trapezoidal rule on each boundary circle.

    Label 0 is the outer circle, label 1 the inner one.  The declared
    degree is the largest ``d`` such that ``z**p * conj(z)**q`` is
    integrated exactly whenever ``0 <= p, q <= d``.
    """
    if not isinstance(domain, PlanarDomain):
        raise UnsupportedDomainError(f"unsupported domain {domain!r}")
    P = int(points_per_component)
    if P < 4:
        raise ParameterError("points_per_component must be at least 4")
    circle = np.exp(2j * np.pi * np.arange(P) / P)
    nodes = [circle]
    weights = [np.full(P, 1.0 / P)]
    labels = [np.zeros(P, dtype=int)]
    if not domain.is_disk:
        r = domain.inner_radius
        nodes.append(r * circle)
        weights.append(np.full(P, r / P))
        labels.append(np.ones(P, dtype=int))
    return BoundaryQuadrature(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        labels=np.concatenate(labels),
        degree=P - 1,
    )


def _log_norms(domain: PlanarDomain, exps: np.ndarray, a: float) -> np.ndarray:
    if domain.is_disk:
        return np.zeros(exps.shape, dtype=float)
    e = 2.0 * (exps + a) + 1.0
    return np.logaddexp(0.0, e * math.log(domain.inner_radius))


def section_values(domain: PlanarDomain, a: float, exps: np.ndarray, z) -> np.ndarray:
    """Orthonormal sections ``z**(n+a) / sqrt(c_n)`` at points ``z``.

    Returns an array of shape ``z.shape + (len(exps),)``.  No domain check is
    made here, so boundary points are allowed.
    """
    z = np.asarray(z, dtype=complex)
    exps = np.asarray(exps)
    half_log_c = 0.5 * _log_norms(domain, exps, a)
    if domain.is_disk:
        powers = z[..., None] ** exps
        return powers * np.exp(-half_log_c)
    log_z = np.log(z)[..., None]
    return np.exp((exps + a) * log_z - half_log_c)


def section_dvalues(domain: PlanarDomain, a: float, exps: np.ndarray, z) -> np.ndarray:
    """Complex derivatives ``d/dz`` of :func:`section_values`."""
    z = np.asarray(z, dtype=complex)
    exps = np.asarray(exps)
    half_log_c = 0.5 * _log_norms(domain, exps, a)
    if domain.is_disk:
        lowered = np.maximum(exps - 1, 0)
        powers = np.where(exps > 0, exps * z[..., None] ** lowered, 0.0)
        return powers * np.exp(-half_log_c)
    log_z = np.log(z)[..., None]
    return (exps + a) * np.exp((exps + a - 1.0) * log_z - half_log_c)


@dataclass(frozen=True)
class TruncatedKernel:
    domain: PlanarDomain
    index: KernelIndex = field(default_factory=KernelIndex)
    N: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError("truncation N must be positive")
        if self.index.exponents == () and not self.domain.is_disk:
            object.__setattr__(self, "index", KernelIndex.trivial(self.domain))
        self.index.validate(self.domain)

    @property
    def shift(self) -> float:
        return self.index.shift

    @property
    def exponents(self) -> np.ndarray:
        if self.domain.is_disk:
            return np.arange(0, self.N + 1)
        return np.arange(-self.N, self.N + 1)

    @property
    def norms(self) -> np.ndarray:
        """Squared norms ``c_n`` of the basis sections."""
        return np.exp(_log_norms(self.domain, self.exponents, self.shift))

    def sections(self, z) -> np.ndarray:
        return section_values(self.domain, self.shift, self.exponents, z)

    def dsections(self, z) -> np.ndarray:
        return section_dvalues(self.domain, self.shift, self.exponents, z)

    def coords(self, w) -> np.ndarray:
        """Coordinates of ``K(., w)`` in the orthonormal section basis."""
        return np.conj(self.sections(w))

    def dbar_coords(self, w) -> np.ndarray:
        """Coordinates of the antiholomorphic derivative of ``K(., w)`` in ``w``."""
        return np.conj(self.dsections(w))

    def tail_bound(self, z, w) -> float:
        """Closed-form bound on the terms dropped by the truncation."""
        rho = abs(z) * abs(w)
        a, N = self.shift, self.N
        bound = rho ** (N + 1 + a) / (1.0 - rho)
        if not self.domain.is_disk:
            r = self.domain.inner_radius
            q = r * r / rho
            bound += q ** (N + 1 - a) / (r * (1.0 - q))
        return float(bound)


def _kernel_values(K: TruncatedKernel, z, w) -> complex:
    return complex(np.dot(K.sections(z), np.conj(K.sections(w))))


def kernel_eval(K: TruncatedKernel, z: complex, w: complex) -> complex:
    """Evaluate the truncated kernel ``K(z, w)`` at interior points."""
    K.domain.check_interior(z, w)
    return _kernel_values(K, z, w)


def kernel_dbar_eval(K: TruncatedKernel, z: complex, w: complex) -> complex:
    """``d/d(conj w)`` of ``K(z, w)``, by termwise differentiation."""
    K.domain.check_interior(z, w)
    return complex(np.dot(K.sections(z), np.conj(K.dsections(w))))


def kernel_gram(K: TruncatedKernel, points: Sequence[complex]) -> np.ndarray:
    """Matrix ``G[i, j] = K(z_i, z_j)``."""
    pts = np.asarray(points, dtype=complex)
    K.domain.check_interior(*pts)
    S = K.sections(pts)
    return S @ S.conj().T


def szego_diag(domain: PlanarDomain, z: complex, N: int = DEFAULT_TRUNCATION) -> float:
    """Diagonal ``K(z, z)`` of the Szego kernel (trivial character)."""
    K = TruncatedKernel(domain, KernelIndex.trivial(domain), N)
    return float(kernel_eval(K, z, z).real)


def default_sample_points(domain: PlanarDomain) -> np.ndarray:
    angles = np.array([0.3, 1.7, 2.9, -2.2, -0.8])
    if domain.is_disk:
        radii = np.array([0.0, 0.3, 0.5, 0.2, 0.6])
    else:
        r = domain.inner_radius
        radii = r + (1.0 - r) * np.array([0.35, 0.5, 0.65, 0.45, 0.55])
    return radii * np.exp(1j * angles)


def verify_reproducing(
    K: TruncatedKernel,
    Q: BoundaryQuadrature,
    test_exponents: Iterable[int],
    points: Sequence[complex] | None = None,
) -> float:
    """Largest defect ``|<phi_n, K(., w)>_Q - phi_n(w)|`` over tests and points.

    ``phi_n`` are the unnormalized sections ``z**(n+a)``.  The kernel is
    evaluated on the quadrature nodes through the same truncated series, so
    this checks the norms ``c_n`` independently of how they were derived.
    """
    test_exponents = np.asarray(list(test_exponents), dtype=int)
    if test_exponents.size == 0:
        return 0.0
    exps = K.exponents
    if test_exponents.min() < exps.min() or test_exponents.max() > exps.max():
        raise ParameterError("test exponents must lie within the truncation range")
    pts = default_sample_points(K.domain) if points is None else np.asarray(points, dtype=complex)
    K.domain.check_interior(*pts)
    a = K.shift
    # raw sections z**(n+a): orthonormal values rescaled by sqrt(c_n)
    c_test = np.exp(_log_norms(K.domain, test_exponents, a))
    phi_nodes = section_values(K.domain, a, test_exponents, Q.nodes) * np.sqrt(c_test)
    phi_pts = section_values(K.domain, a, test_exponents, pts) * np.sqrt(c_test)
    kernel_nodes = K.sections(Q.nodes) @ np.conj(K.sections(pts)).T  # (nodes, pts)
    inner = (phi_nodes * Q.weights[:, None]).T @ np.conj(kernel_nodes)  # (tests, pts)
    return float(np.max(np.abs(inner - phi_pts.T)))


def dump_kernel_csv(K: TruncatedKernel, pairs: Iterable[tuple[complex, complex]], stream) -> None:
    """Write kernel values as CSV rows ``re z, im z, re w, im w, re K, im K``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["re_z", "im_z", "re_w", "im_w", "re_K", "im_K"])
    for z, w in pairs:
        val = kernel_eval(K, z, w)
        z, w = complex(z), complex(w)
        writer.writerow([repr(float(x)) for x in (z.real, z.imag, w.real, w.imag, val.real, val.imag)])
