import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_frame, random_matrix
from spectraset.errors import InvalidInputError
from spectraset.linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    Verdict,
    block2x2_psd,
    complement,
    intersect,
    is_invariant,
    is_reducing,
    kernel_basis,
    numerical_radius,
    numerical_rank,
    principal_angles,
    psd_sqrt,
    subspace_gap,
)

E = np.eye(3)


def same_span(U: Subspace, V: Subspace, tol=1e-8):
    return U.dim == V.dim and (U.dim == 0 or subspace_gap(U, V) <= tol)


def test_tolerances_positive():
    with pytest.raises(ValueError):
        Tolerances(rank=0.0)


def test_numerical_rank_examples():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.eye(4)) == 4
    assert numerical_rank(np.diag([1.0, 1e-14])) == 1


def test_kernel_basis_examples():
    assert kernel_basis(np.eye(3)).is_trivial
    assert kernel_basis(np.zeros((2, 2))).dim == 2
    assert same_span(kernel_basis(np.diag([1.0, 0.0, 2.0])), Subspace.span(E[:, [1]]))


def test_complement_examples():
    e = np.eye(2)
    assert same_span(complement(Subspace.span(e[:, [0]])), Subspace.span(e[:, [1]]))
    assert complement(Subspace.zero(3)).dim == 3
    v = np.array([[1.0], [1.0]]) / np.sqrt(2)
    w = np.array([[1.0], [-1.0]]) / np.sqrt(2)
    assert same_span(complement(Subspace.span(v)), Subspace.span(w))


def test_intersect_examples():
    U = Subspace.span(E[:, [0, 1]])
    V = Subspace.span(E[:, [1, 2]])
    assert same_span(intersect(U, V), Subspace.span(E[:, [1]]))
    assert same_span(intersect(U, U), U)


def projector_oracle_intersection(U, V):
    # eigenvalue-2 eigenspace of P_U + P_V
    w, X = np.linalg.eigh(U.projector() + V.projector())
    return Subspace.span(X[:, w > 2 - 1e-9], U.ambient_dim)


@pytest.mark.parametrize("seed", range(200))
def test_intersect_matches_projector_oracle(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 13))
    common = int(rng.integers(0, d // 2 + 1))
    extra_u = int(rng.integers(0, (d - common) // 2 + 1))
    extra_v = int(rng.integers(0, (d - common - extra_u) + 1))
    Q = random_frame(rng, d, d)
    C = Q[:, :common]
    U = Subspace.span(np.hstack([C, Q[:, common : common + extra_u]]), d)
    # mix V's private directions with U's so the two spans are not orthogonal
    tail = Q[:, common + extra_u : common + extra_u + extra_v]
    if extra_u and tail.shape[1]:
        tail = tail + 0.5 * Q[:, common : common + 1]
    V = Subspace.span(np.hstack([C, tail]), d)
    got = intersect(U, V)
    assert same_span(got, projector_oracle_intersection(U, V))
    assert got.dim == common


def test_principal_angles_examples():
    e = np.eye(2)
    U = Subspace.span(e[:, [0]])
    assert np.allclose(principal_angles(U, U), 0)
    assert np.allclose(principal_angles(U, Subspace.span(e[:, [1]])), [np.pi / 2])
    v = np.array([[1.0], [1.0]]) / np.sqrt(2)
    assert np.allclose(principal_angles(U, Subspace.span(v)), [np.pi / 4])
    assert principal_angles(U, Subspace.zero(2)).size == 0


def test_is_invariant_examples():
    T = np.array([[0, 1], [0, 0]], dtype=complex)
    e = np.eye(2)
    assert is_invariant(random_matrix(np.random.default_rng(0), 2), Subspace.full(2))[0]
    assert is_invariant(np.diag([1.0, 2.0]), Subspace.span(e[:, [0]]))[0]
    assert is_invariant(T, Subspace.span(e[:, [0]]))[0]
    ok, res = is_invariant(T, Subspace.span(e[:, [1]]))
    assert not ok and res == pytest.approx(1.0)


def test_is_reducing_examples(rng):
    T = np.array([[0, 1], [0, 0]], dtype=complex)
    assert not is_reducing(T, Subspace.span(np.eye(2)[:, [0]]))[0]
    B = np.zeros((4, 4), dtype=complex)
    B[:2, :2] = random_matrix(rng, 2)
    B[2:, 2:] = random_matrix(rng, 2)
    assert is_reducing(B, Subspace.span(np.eye(4)[:, :2]))[0]
    V = random_frame(rng, 4, 4)
    U = V @ np.diag(np.exp(1j * np.array([0.1, 0.1, 2.0, 3.0]))) @ V.conj().T
    eig = Subspace.span(V[:, :2])
    assert is_reducing(U, eig)[0]


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(psd_sqrt(np.zeros((2, 2))), 0)
    assert np.allclose(psd_sqrt(np.diag([4.0, 0.25])), np.diag([2.0, 0.5]))


def test_psd_sqrt_errors():
    with pytest.raises(InvalidInputError):
        psd_sqrt(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvalidInputError):
        psd_sqrt(np.diag([1.0, -1e-3]))
    # roundoff-sized negatives are clamped
    assert np.allclose(psd_sqrt(np.diag([1.0, -1e-12])), np.diag([1.0, 0.0]))


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_psd_sqrt_squares_back(seed, d):
    rng = np.random.default_rng(seed)
    X = random_matrix(rng, d)
    M = X @ X.conj().T
    R = psd_sqrt(M)
    assert np.linalg.norm(R @ R - M, 2) <= 10 * DEFAULT_TOL.equality * max(1, np.linalg.norm(M, 2))


def test_block2x2_examples():
    I, Z = np.eye(2), np.zeros((2, 2))
    assert block2x2_psd(I, I, Z).verdict is Verdict.CERTIFIED
    c = block2x2_psd(I, I, I)
    assert c.verdict is Verdict.CERTIFIED and c.evidence["min_eig"] == pytest.approx(0, abs=1e-12)
    c = block2x2_psd(Z, I, np.array([[0, 1], [0, 0]]))
    assert c.verdict is Verdict.FALSIFIED and c.evidence["max_sampled_gap"] > 0
    with pytest.raises(InvalidInputError):
        block2x2_psd(np.eye(2), np.eye(3), np.eye(2))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_block2x2_verdict_is_eigen_sign(seed, d):
    rng = np.random.default_rng(seed)
    X, Y = random_matrix(rng, d), random_matrix(rng, d)
    P, Q = X @ X.conj().T, Y @ Y.conj().T
    A = random_matrix(rng, d) * rng.uniform(0.1, 3)
    c = block2x2_psd(P, Q, A)
    block = np.block([[P, A], [A.conj().T, Q]])
    assert (c.verdict is Verdict.CERTIFIED) == (np.linalg.eigvalsh(block)[0] >= -DEFAULT_TOL.psd_slack)


def dense_radius(M, k=200000):
    th = np.linspace(0, 2 * np.pi, k, endpoint=False)
    H = (np.exp(1j * th)[:, None, None] * M + np.exp(-1j * th)[:, None, None] * M.conj().T) / 2
    return np.linalg.eigvalsh(H)[:, -1].max()


def test_numerical_radius_examples(rng):
    assert numerical_radius(np.eye(3)) == pytest.approx(1)
    assert numerical_radius(np.diag([0.3, -0.9j, 0.5])) == pytest.approx(0.9)
    assert numerical_radius(np.array([[0, 1], [0, 0]])) == pytest.approx(0.5, abs=1e-6)
    M = random_matrix(rng, 5)
    assert numerical_radius(M) == pytest.approx(dense_radius(M), rel=1e-8)
    with pytest.raises(InvalidInputError):
        numerical_radius(np.eye(2), grid_size=4)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_numerical_radius_sandwich(seed, d):
    rng = np.random.default_rng(seed)
    M = random_matrix(rng, d)
    w = numerical_radius(M)
    r = np.abs(np.linalg.eigvals(M)).max()
    assert r - 1e-10 <= w <= np.linalg.norm(M, 2) + 1e-10
    assert numerical_radius(M, grid_size=128) >= numerical_radius(M, grid_size=8) - 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_complement_involution(seed, d):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, d + 1))
    U = Subspace.span(random_frame(rng, d, k), d)
    C = complement(U)
    assert C.dim + U.dim == d
    assert same_span(complement(C), U)
    if U.dim and C.dim:
        assert np.linalg.norm(C.frame.conj().T @ U.frame) <= 1e-12
