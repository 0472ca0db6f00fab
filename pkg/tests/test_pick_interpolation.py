import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planardil.domain_kernels import KernelIndex, PlanarDomain
from planardil.errors import DegenerateProblemError, DomainError
from planardil.pick_interpolation import (
    PickProblem,
    exponent_grid,
    extremal_s,
    extremal_t,
    feasibility,
    kernel_ratio,
    maximize_ratio,
    pick_matrix,
)
from planardil.sampling import sample_rng, scalar_sample

DISK = PlanarDomain.disk()
ANN = PlanarDomain.annulus(0.5)


def pseudo_hyperbolic(z1, z2):
    return abs(z1 - z2) / abs(1 - np.conj(z2) * z1)


def test_disk_extremal_s_closed_form():
    z1, z2 = 0.3, -0.2 + 0.1j
    e = extremal_s(DISK, z1, z2)
    assert np.isclose(e.m_sq, pseudo_hyperbolic(z1, z2) ** 2, rtol=1e-12)
    closed = (1 - abs(z1) ** 2) * (1 - abs(z2) ** 2) / abs(z1 - z2) ** 2
    assert np.isclose(e.s_sq, closed, rtol=1e-12)


def test_disk_extremal_t():
    assert np.isclose(extremal_t(DISK, 0.5), 0.75, rtol=1e-12)
    assert np.isclose(extremal_t(DISK, 0.0), 1.0)


def test_extremal_errors():
    with pytest.raises(DegenerateProblemError):
        extremal_s(DISK, 0.2, 0.2)
    with pytest.raises(DomainError):
        extremal_t(ANN, 0.3)


def test_extremal_s_monotone_in_domain():
    # shrinking the domain enlarges its unit ball, so m grows and s shrinks
    z1, z2 = 0.7, -0.6 + 0.2j
    s_disk = extremal_s(DISK, z1, z2).s_sq
    s_thin = extremal_s(PlanarDomain.annulus(0.3), z1, z2, grid_size=32).s_sq
    s_thinner = extremal_s(PlanarDomain.annulus(0.5), z1, z2, grid_size=32).s_sq
    assert s_thinner < s_thin < s_disk


def test_maximizer_beats_grid():
    z1, z2 = 0.7, -0.6 + 0.2j
    best, idx = maximize_ratio(ANN, z1, z2, 64, 200)
    grid = [kernel_ratio(ANN, z1, z2, a, 200) for a in np.arange(64) / 64]
    assert best >= max(grid) - 1e-15
    assert 0 <= idx.shift < 1


def test_feasibility_disk_classic():
    # two-point Pick: w2 reachable iff |w2| <= pseudo-hyperbolic distance when w1 = 0
    z1, z2 = 0.1, 0.5j
    rho = pseudo_hyperbolic(z1, z2)
    assert feasibility(PickProblem(DISK, [z1, z2], [0, 0.99 * rho])).feasible
    v = feasibility(PickProblem(DISK, [z1, z2], [0, 1.01 * rho]))
    assert not v.feasible
    assert v.witness_vector is not None and v.witness_eigenvalue < 0


def test_target_outside_ball_infeasible():
    v = feasibility(PickProblem(ANN, [0.7, -0.8j], [1.2, 0.0]), grid_size=16)
    assert not v.feasible and v.witness_index is not None


def test_extremal_data_is_marginal():
    z1, z2 = 0.7, -0.6 + 0.2j
    e = extremal_s(ANN, z1, z2)
    m = np.sqrt(e.m_sq)
    pm = pick_matrix(PickProblem(ANN, [z1, z2], [0, m]), e.alpha0)
    assert abs(pm.min_eigenvalue / pm.trace) < 1e-9


def test_coincident_nodes_rejected():
    with pytest.raises(DegenerateProblemError):
        PickProblem(DISK, [0.1, 0.1], [0, 0])


def test_exponent_grid():
    assert len(exponent_grid(ANN, 8)) == 8
    assert exponent_grid(DISK, 8) == [KernelIndex(())]


def test_threads_do_not_change_result():
    p = PickProblem(ANN, [0.7, -0.8j, 0.6 + 0.2j], [0.1, 0.3, -0.2j])
    a = feasibility(p, grid_size=16, N=80, threads=1)
    b = feasibility(p, grid_size=16, N=80, threads=4)
    assert a.profile == b.profile and a.feasible == b.feasible


def test_matrix_targets_block_form():
    W = np.array([np.diag([0.2, 0.1]), np.zeros((2, 2))])
    assert feasibility(PickProblem(DISK, [0.1, 0.8], W)).feasible
    W_big = np.array([np.diag([0.9, 0.1]), np.zeros((2, 2))])
    assert not feasibility(PickProblem(DISK, [0.1, 0.3], W_big)).feasible


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_values_of_unit_ball_functions_are_feasible(seed):
    nodes = np.array([0.7, -0.6 + 0.2j, 0.8j])
    f = scalar_sample(ANN, sample_rng(seed, 0), 4)
    p = PickProblem(ANN, nodes, f(nodes))
    assert feasibility(p, grid_size=16, N=120).feasible
