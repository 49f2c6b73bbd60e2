import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_frame, random_matrix
from spectraset.asymptotics import (
    asymptotic_limit,
    classify_contraction,
    foguel_subspace,
    isometric_invariant_subspace,
    limits,
    max_unitary_reducing,
    stable_subspace,
)
from spectraset.errors import InvalidInputError, NonConvergenceError
from spectraset.linalg import DEFAULT_TOL, Subspace, complement, is_reducing, subspace_gap


def same_span(U, V, tol=1e-8):
    return U.dim == V.dim and (U.dim == 0 or subspace_gap(U, V) <= tol)


def planted(rng, du, dc, rho=0.9):
    """W (U + C) W* with unitary U and ||C|| = rho < 1; returns (P, unitary frame)."""
    d = du + dc
    W = random_frame(rng, d, d)
    M = np.zeros((d, d), dtype=complex)
    M[:du, :du] = random_frame(rng, du, du) if du else np.zeros((0, 0))
    if dc:
        M[du:, du:] = random_matrix(rng, dc, rho)
    return W @ M @ W.conj().T, W[:, :du]


def test_limit_examples():
    assert np.allclose(asymptotic_limit(np.zeros((3, 3))), 0)
    U = random_frame(np.random.default_rng(1), 4, 4)
    assert np.allclose(asymptotic_limit(U), np.eye(4), atol=1e-10)
    assert np.allclose(asymptotic_limit(np.diag([1.0, 0.5])), np.diag([1.0, 0.0]), atol=1e-12)


def test_limit_errors():
    with pytest.raises(InvalidInputError):
        asymptotic_limit(2 * np.eye(2))
    with pytest.raises(NonConvergenceError) as exc:
        asymptotic_limit(np.diag([1 - 1e-9, 0.5]), max_doublings=3)
    assert exc.value.last_delta > 0


def test_stable_subspace_examples():
    e = np.eye(2)
    assert stable_subspace(np.zeros((2, 2))).dim == 2
    assert stable_subspace(random_frame(np.random.default_rng(2), 3, 3)).is_trivial
    P = np.diag([np.exp(1j * np.pi / 3), 0.9])
    S = stable_subspace(P)
    assert same_span(S, Subspace.span(e[:, [1]]))
    # power-iteration oracle
    assert np.linalg.norm(np.linalg.matrix_power(P, 400) @ S.frame) < 1e-12


def test_unitary_part_examples(rng):
    U = random_frame(rng, 3, 3)
    assert max_unitary_reducing(U).dim == 3
    assert same_span(max_unitary_reducing(np.diag([1.0, 0.5])), Subspace.span(np.eye(2)[:, [0]]))
    P, F = planted(rng, 2, 3)
    assert subspace_gap(max_unitary_reducing(P), Subspace.span(F)) <= 1e-8


def test_isometric_invariant_examples():
    assert isometric_invariant_subspace(random_frame(np.random.default_rng(3), 3, 3)).dim == 3
    assert isometric_invariant_subspace(0.7 * np.eye(2)).is_trivial
    assert same_span(isometric_invariant_subspace(np.diag([1.0, 1.0, 0.3])), Subspace.span(np.eye(3)[:, :2]))


def test_foguel_examples(rng):
    assert foguel_subspace(random_frame(rng, 3, 3)).is_trivial
    assert same_span(foguel_subspace(np.diag([np.exp(0.4j), 0.5])), Subspace.span(np.eye(2)[:, [1]]))
    P, F = planted(rng, 2, 2)
    assert same_span(foguel_subspace(P), complement(Subspace.span(F)))


def test_classify_examples():
    c = classify_contraction(np.eye(2))
    assert c.identity and c.unitary
    c = classify_contraction(np.zeros((2, 2)))
    assert c.strongly_stable and c.pure and c.c00 and c.cnu
    c = classify_contraction(np.diag([1.0, 0.2]))
    assert not c.unitary and not c.cnu and not c.identity and not c.completely_non_identity
    assert c.witness["cnu"] == 1.0


@given(st.integers(0, 2**32 - 1), st.integers(0, 4), st.integers(0, 5))
def test_limit_structure(seed, du, dc):
    if du + dc == 0:
        return
    rng = np.random.default_rng(seed)
    P, F = planted(rng, du, dc, rho=rng.uniform(0.1, 0.95))
    lim = limits(P)
    A = lim.A
    w = np.linalg.eigvalsh(A)
    assert w[0] >= -1e-10 and w[-1] <= 1 + 1e-10
    assert np.linalg.norm(P.conj().T @ A @ P - A, 2) <= DEFAULT_TOL.equality
    assert lim.idempotence_defect <= 10 * DEFAULT_TOL.equality
    assert np.linalg.norm(A - lim.A_star, 2) <= 10 * DEFAULT_TOL.equality
    U = max_unitary_reducing(P, lim=lim)
    assert is_reducing(P, U)[0]
    if U.dim:
        R = U.restrict(P)
        assert np.linalg.norm(R.conj().T @ R - np.eye(U.dim), 2) <= DEFAULT_TOL.equality
    S = stable_subspace(P)
    assert S.dim + U.dim == P.shape[0]
    if S.dim and U.dim:
        assert np.linalg.norm(S.frame.conj().T @ U.frame) <= 1e-8
    c = classify_contraction(P)
    assert c.lattice_violations() == []
