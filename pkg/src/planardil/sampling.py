"""Random elements of the unit ball of the planar algebra.

Every sample here has sup norm at most one on the domain by construction:

* disk: finite Blaschke products;
* annulus: products ``b1(z) * b2(r / z)`` of disk Blaschke products, which
  are unimodular on one boundary circle and bounded by one on the other.

Either family may be post-composed with a disk automorphism.  Matrix
samples are ``U diag(b_1, ..., b_k) V`` with Haar unitaries, or products of
Blaschke-Potapov factors.  Randomness is drawn from a counter-based Philox
stream keyed by ``(seed, sample index, stream)``, so a sample never depends
on how many samples precede it or on which thread draws it.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .domain_kernels import PlanarDomain
from .errors import UnsupportedDomainError
from .rational import RationalFunction

MAX_ZERO_RADIUS = 0.95
POST_COMPOSE_PROB = 0.25


def sample_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(index), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def _random_disk_point(rng: np.random.Generator, radius: float = MAX_ZERO_RADIUS) -> complex:
    return complex(radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random()))


def _inverted_factor(a: complex, r: float) -> tuple[list[complex], list[complex]]:
    """Coefficients of ``phi_a(r / z) = (r - a z) / (z - conj(a) r)``."""
    return [r, -a], [-np.conj(a) * r, 1.0]


def scalar_sample(
    domain: PlanarDomain,
    rng: np.random.Generator,
    max_degree: int,
    pins: Sequence[complex] = (),
) -> RationalFunction:
    """Draw one unit-ball rational function.

    If ``pins`` is non-empty one zero is placed at a node chosen uniformly
    from ``pins`` before the optional post-composition.
    """
    if not isinstance(domain, PlanarDomain):
        raise UnsupportedDomainError(f"no sampler for {domain!r}")
    degree = int(rng.integers(1, max(1, max_degree) + 1))
    phase = 2 * np.pi * rng.random()
    num = np.array([np.exp(1j * phase)])
    den = np.array([1.0 + 0j])
    r = domain.inner_radius
    for k in range(degree):
        inverted = (not domain.is_disk) and rng.random() < 0.5
        if k == 0 and len(pins):
            node = complex(pins[int(rng.integers(len(pins)))])
            a = r / node if inverted else node
        else:
            a = _random_disk_point(rng)
        if inverted:
            fn, fd = _inverted_factor(a, r)
        else:
            fn, fd = [-a, 1.0], [1.0, -np.conj(a)]
        num = P.polymul(num, fn)
        den = P.polymul(den, fd)
    f = RationalFunction(num, den)
    if rng.random() < POST_COMPOSE_PROB:
        f = f.compose_mobius(_random_disk_point(rng, 0.9))
    return f


def haar_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``k x k`` unitary via QR with phase fixing."""
    Z = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def matrix_sample(
    domain: PlanarDomain,
    rng: np.random.Generator,
    k: int,
    max_degree: int,
    pins: Sequence[complex] = (),
) -> Callable[[complex], np.ndarray]:
    """Draw a ``k x k`` unit-ball matrix function, returned as an evaluator."""
    U, V = haar_unitary(k, rng), haar_unitary(k, rng)
    if rng.random() < 0.5:
        fs = [scalar_sample(domain, rng, max_degree, pins) for _ in range(k)]

        def evaluate(z):
            return U @ np.diag([complex(f(z)) for f in fs]) @ V

        return evaluate

    factors = []
    for _ in range(int(rng.integers(1, 4))):
        v = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        v /= np.linalg.norm(v)
        a = _random_disk_point(rng)
        factors.append((np.outer(v, v.conj()), RationalFunction.mobius(a)))

    def evaluate(z):
        out = U.copy()
        for proj, phi in factors:
            out = out @ (np.eye(k) - proj + complex(phi(z)) * proj)
        return out @ V

    return evaluate
