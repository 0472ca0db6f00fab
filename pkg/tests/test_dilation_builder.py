import numpy as np
import pytest

from planardil.dilation_builder import (
    absorbed_mu,
    alpha0_search,
    build_subspace_M,
    build_subspace_N,
    closed_form_M,
    closed_form_N,
    compress,
    effective_mu,
    gram_schmidt_jet,
    gram_schmidt_pair,
    grid_maximizers,
    hardy_model,
    s_kernel,
    t_kernel,
    verify_dilation,
    weighted_hardy,
    witness_distinct,
)
from planardil.domain_kernels import KernelIndex, PlanarDomain, TruncatedKernel, build_quadrature
from planardil.errors import ConditioningError, NotCoinvariantError, ParameterError, PoleError
from planardil.matrix_homomorphisms import ModelOperatorA, ModelOperatorB
from planardil.pick_interpolation import extremal_s, extremal_t
from planardil.rational import RationalFunction
from planardil.sampling import sample_rng, scalar_sample

DISK = PlanarDomain.disk()
ANN = PlanarDomain.annulus(0.5)
Z1, Z2 = 0.3, -0.2 + 0.1j


def disk_model(N=60):
    return hardy_model(TruncatedKernel(DISK, KernelIndex(()), N))


def test_disk_model_is_shift():
    M = disk_model(10).M
    assert np.allclose(M, np.diag(np.ones(10), -1))
    # isometry except on the last basis vector
    norms = np.linalg.norm(M, axis=0)
    assert np.allclose(norms[:-1], 1) and norms[-1] == 0


def test_gram_schmidt_pair_disk_origin():
    model = disk_model()
    e, f = gram_schmidt_pair(model, 0.0, 0.5)
    assert np.allclose(e, np.eye(len(e))[0])
    # f is orthogonal to K(., 0) = 1
    assert abs(np.vdot(model.coords(0.0), f)) < 1e-14
    assert abs(np.linalg.norm(f) - 1) < 1e-12


def test_gram_schmidt_jet_disk_origin():
    e, f = gram_schmidt_jet(disk_model(), 0.0)
    assert np.allclose(np.abs(f), np.eye(len(f))[1])
    assert abs(np.vdot(e, f)) < 1e-12


def test_gram_schmidt_pair_orthonormal_annulus():
    model = hardy_model(TruncatedKernel(ANN, KernelIndex((0.3,)), 200))
    e, f = gram_schmidt_pair(model, 0.7, -0.6 + 0.2j)
    assert abs(np.linalg.norm(e) - 1) < 1e-12 and abs(np.linalg.norm(f) - 1) < 1e-12
    assert abs(np.vdot(e, f)) < 1e-10


def test_gram_schmidt_degenerate():
    with pytest.raises(ConditioningError):
        gram_schmidt_pair(disk_model(), 0.3, 0.3 + 1e-9)


def test_subspace_special_cases():
    model = disk_model()
    h1, h2 = build_subspace_M(model, Z1, Z2, 0.0)
    d = model.dim
    k2 = model.coords(Z2)
    assert np.allclose(h2[:d], k2 / np.linalg.norm(k2)) and np.allclose(h2[d:], 0)
    _, h2 = build_subspace_M(model, Z1, Z2, 1j)
    assert np.allclose(h2[:d], 0)
    h1, h2 = build_subspace_M(model, Z1, Z2, 0.6 - 0.3j)
    assert abs(np.vdot(h1, h2)) < 1e-10
    with pytest.raises(ParameterError):
        build_subspace_M(model, Z1, Z2, 1.1)
    k1, k2 = build_subspace_N(model, 0.4, 0.5)
    assert abs(np.vdot(k1, k2)) < 1e-10


@pytest.mark.parametrize("mu", [0.0, 0.7, 1.0, 0.5 - 0.5j])
def test_compression_matches_closed_form_disk(mu):
    model = disk_model()
    comp = compress(model, build_subspace_M(model, Z1, Z2, mu))
    assert np.abs(comp.matrix - closed_form_M(model, Z1, Z2, absorbed_mu(model, Z1, Z2, mu))).max() < 1e-6
    # moduli agree with the raw coupling (phase convention)
    assert np.allclose(np.abs(comp.matrix), np.abs(closed_form_M(model, Z1, Z2, mu)), atol=1e-6)


def test_compression_is_adjoint_of_A_s():
    model = disk_model()
    mu = 0.7
    comp = compress(model, build_subspace_M(model, Z1, Z2, mu))
    s_crit = np.sqrt(extremal_s(DISK, Z1, Z2).s_sq)
    assert abs(s_kernel(model, Z1, Z2) - s_crit) < 1e-10
    A = ModelOperatorA(Z1, Z2, s_crit, effective_mu(model, Z1, Z2, mu))
    assert np.abs(comp.matrix.conj().T - A.matrix).max() < 1e-6
    assert abs(abs(effective_mu(model, Z1, Z2, mu)) - mu) < 1e-15


def test_mu_zero_compression_diagonal():
    model = disk_model()
    comp = compress(model, build_subspace_M(model, Z1, Z2, 0.0))
    assert np.allclose(comp.matrix, np.diag(np.conj([Z1, Z2])), atol=1e-12)


def test_jet_compression_disk():
    model = disk_model()
    comp = compress(model, build_subspace_N(model, 0.4, 0.5))
    assert np.abs(comp.matrix - closed_form_N(model, 0.4, 0.5)).max() < 1e-6
    B = ModelOperatorB(0.4, t_kernel(model, 0.4), 0.5)
    assert np.abs(comp.matrix.conj().T - B.matrix).max() < 1e-6
    assert abs(t_kernel(model, 0.4) - (1 - 0.16)) < 1e-10


def test_not_coinvariant():
    model = disk_model()
    e = np.zeros(model.dim, dtype=complex)
    e[1] = 1  # z is not co-invariant: M^* z = 1
    with pytest.raises(NotCoinvariantError):
        compress(model, [np.concatenate([e, 0 * e])])


def test_weighted_hardy_disk_origin_is_plain():
    Q = build_quadrature(DISK, 256)
    m = weighted_hardy(DISK, 0.0, Q, 40)
    assert np.allclose(m.chol, np.eye(m.dim), atol=1e-12)


def test_weighted_hardy_disk_half():
    Q = build_quadrature(DISK, 512)
    m = weighted_hardy(DISK, 0.5, Q, 60)
    assert abs(t_kernel(m, 0.5) - 0.75) < 1e-6


def test_weighted_hardy_annulus_matches_extremal_t():
    Q = build_quadrature(ANN, 1024)
    m = weighted_hardy(ANN, 0.7, Q, 60)
    assert abs(t_kernel(m, 0.7) - extremal_t(ANN, 0.7)) < 1e-5


def test_weighted_hardy_quadrature_check():
    with pytest.raises(ParameterError):
        weighted_hardy(DISK, 0.2, build_quadrature(DISK, 32), 40)


def test_alpha0_search():
    assert alpha0_search(DISK, Z1, Z2) == KernelIndex(())
    a64 = alpha0_search(ANN, 0.7, 0.65, 64)
    a128 = alpha0_search(ANN, 0.7, 0.65, 128)
    d = abs(a64.shift - a128.shift)
    assert min(d, 1 - d) <= 1 / 128


def test_non_uniqueness_over_grid_maximizers():
    # symmetric pair: the ratio may tie at several characters; each gives the same A_s
    z1, z2 = 0.7, -0.7
    mats = []
    for idx in grid_maximizers(ANN, z1, z2, 64, 200, rtol=1e-9):
        model = hardy_model(TruncatedKernel(ANN, idx, 200))
        mats.append(compress(model, build_subspace_M(model, z1, z2, 1.0)).matrix)
    for m in mats[1:]:
        assert np.allclose(np.abs(m), np.abs(mats[0]), atol=1e-6)


def test_verify_dilation_disk():
    model = disk_model(100)
    h = build_subspace_M(model, Z1, Z2, 0.7)
    target = compress(model, h).matrix.conj().T
    assert verify_dilation(model, h, target, [RationalFunction.constant(0.3)]) <= 1e-12
    assert verify_dilation(model, h, target, [RationalFunction.identity()]) <= 1e-12
    fs = [scalar_sample(DISK, sample_rng(9, j), 3) for j in range(5)]
    assert verify_dilation(model, h, target, fs) <= 1e-5


def test_verify_dilation_pole_in_hole():
    model = hardy_model(TruncatedKernel(ANN, KernelIndex((0.0,)), 60))
    h = build_subspace_M(model, 0.7, -0.6 + 0.2j, 0.5)
    f = RationalFunction(np.array([1.0]), np.array([0.0, 1.0]))  # 1/z
    with pytest.raises(PoleError):
        verify_dilation(model, h, np.eye(2), [f])


def test_products_of_compressions():
    # on a co-invariant span, compressing M^2 equals squaring the compression; off it, not
    model = disk_model()
    h = build_subspace_M(model, Z1, Z2, 0.7)
    V = np.column_stack(h)
    C = compress(model, h).matrix
    M2 = np.kron(np.eye(2), (model.M @ model.M).conj().T)
    assert np.allclose(V.conj().T @ M2 @ V, C @ C, atol=1e-10)
    W = np.linalg.qr(np.random.default_rng(0).standard_normal((2 * model.dim, 2)))[0]
    Mh = np.kron(np.eye(2), model.M.conj().T)
    C2 = W.T @ Mh @ W
    assert not np.allclose(W.T @ M2 @ W, C2 @ C2, atol=1e-3)


def test_witness_json():
    w = witness_distinct(disk_model(), Z1, Z2, 0.7)
    js = w.to_json()
    assert js["defect"] < 1e-6 and len(js["vectors"]) == 2
