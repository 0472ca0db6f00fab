"""Rational functions with exact derivatives and a matrix functional calculus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import PoleError

POLE_MARGIN = 1e-9


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)


def matrix_polyval(coeffs: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Horner evaluation of an ascending-coefficient polynomial at a matrix."""
    n = T.shape[0]
    out = np.zeros((n, n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    for c in coeffs[::-1]:
        out = out @ T + c * eye
    return out


@dataclass(frozen=True)
class RationalFunction:
    """``p / q`` with coefficient arrays in ascending powers."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num, den = _trim(self.num), _trim(self.den)
        if not np.any(den):
            raise PoleError("denominator is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    # constructors
    @classmethod
    def constant(cls, c: complex) -> "RationalFunction":
        return cls(np.array([c]), np.array([1.0]))

    @classmethod
    def identity(cls) -> "RationalFunction":
        return cls(np.array([0.0, 1.0]), np.array([1.0]))

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex]) -> "RationalFunction":
        return cls(np.asarray(coeffs), np.array([1.0]))

    @classmethod
    def mobius(cls, u: complex) -> "RationalFunction":
        """The disk automorphism ``(z - u) / (1 - conj(u) z)``."""
        u = complex(u)
        return cls(np.array([-u, 1.0]), np.array([1.0, -np.conj(u)]))

    @classmethod
    def blaschke(cls, zeros: Sequence[complex], phase: float = 0.0) -> "RationalFunction":
        num = np.array([np.exp(1j * phase)])
        den = np.array([1.0 + 0j])
        for a in zeros:
            a = complex(a)
            num = P.polymul(num, [-a, 1.0])
            den = P.polymul(den, [1.0, -np.conj(a)])
        return cls(num, den)

    @classmethod
    def lagrange_basis(cls, nodes: Sequence[complex], i: int) -> "RationalFunction":
        """Polynomial equal to 1 at ``nodes[i]`` and 0 at the other nodes."""
        num = np.array([1.0 + 0j])
        scale = 1.0 + 0j
        for j, zj in enumerate(nodes):
            if j == i:
                continue
            num = P.polymul(num, [-zj, 1.0])
            scale *= nodes[i] - zj
        return cls(num / scale, np.array([1.0]))

    # algebra
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return P.polyval(z, self.num) / P.polyval(z, self.den)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            return RationalFunction(self.num * other, self.den)
        return RationalFunction(P.polymul(self.num, other.num), P.polymul(self.den, other.den))

    __rmul__ = __mul__

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(other)
        num = P.polyadd(P.polymul(self.num, other.den), P.polymul(other.num, self.den))
        return RationalFunction(num, P.polymul(self.den, other.den))

    def compose_mobius(self, u: complex) -> "RationalFunction":
        """``phi_u o self`` where ``phi_u`` is the disk automorphism at ``u``."""
        u = complex(u)
        num = P.polysub(self.num, u * self.den)
        den = P.polysub(self.den, np.conj(u) * self.num)
        return RationalFunction(num, den)

    def derivative(self) -> "RationalFunction":
        """Exact derivative by the quotient rule."""
        p, q = self.num, self.den
        num = P.polysub(P.polymul(P.polyder(p), q), P.polymul(p, P.polyder(q)))
        return RationalFunction(num, P.polymul(q, q))

    @property
    def degree(self) -> int:
        return max(len(self.num), len(self.den)) - 1

    def poles(self) -> np.ndarray:
        if len(self.den) < 2:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.den)

    def check_poles(self, domain, margin: float = POLE_MARGIN) -> None:
        """Raise :class:`PoleError` if a pole touches the closed domain."""
        poles = self.poles()
        if poles.size and np.any(domain.contains_closed(poles, margin)):
            raise PoleError(f"pole within {margin} of the closed {domain.kind}")

    def at_matrix(self, T: np.ndarray) -> np.ndarray:
        """``p(T) q(T)^{-1}``."""
        T = np.asarray(T, dtype=complex)
        pT = matrix_polyval(self.num, T)
        qT = matrix_polyval(self.den, T)
        if np.linalg.cond(qT) > 1e12:
            raise PoleError("q(T) is singular to working precision")
        return np.linalg.solve(qT.T, pT.T).T

    def to_json(self) -> dict:
        return {
            "num": [[float(c.real), float(c.imag)] for c in self.num],
            "den": [[float(c.real), float(c.imag)] for c in self.den],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RationalFunction":
        return cls(
            np.array([complex(re, im) for re, im in data["num"]]),
            np.array([complex(re, im) for re, im in data["den"]]),
        )
