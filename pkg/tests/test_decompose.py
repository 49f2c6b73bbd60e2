import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_frame, random_matrix
from spectraset.decompose import (
    CO_INVARIANT,
    INVARIANT,
    REDUCING,
    SCHEMES,
    canonical_split,
    foguel_split,
    identity_split,
    kubrusly_split,
    levan3_split,
    levan_split,
    orbit_budget,
    scalar_decomposition,
)
from spectraset.errors import HypothesisError, InvalidInputError
from spectraset.linalg import DEFAULT_TOL, Subspace, invariance_residual, subspace_gap

from test_asymptotics import planted


def dims(dec):
    return tuple(p.dim for p in dec.parts)


def same_span(U, V, tol=1e-8):
    return U.dim == V.dim and (U.dim == 0 or subspace_gap(U, V) <= tol)


def test_canonical_examples(rng):
    assert dims(canonical_split(np.eye(3))) == (3, 0)
    assert dims(canonical_split(np.zeros((3, 3)))) == (0, 3)
    P, F = planted(rng, 2, 3)
    dec = canonical_split(P)
    assert subspace_gap(dec.part("unitary").subspace, Subspace.span(F)) <= 1e-8
    assert dec.part("unitary").cls.unitary and dec.part("cnu").cls.cnu


def test_levan_examples(rng):
    assert dims(levan_split(np.zeros((2, 2)))) == (0, 2)
    assert dims(levan_split(np.diag([0.9, 0.5]))) == (0, 2)
    for _ in range(20):
        d = int(rng.integers(2, 13))
        P = random_matrix(rng, d, 1.0)
        # generic non-normal matrices of norm one have spectral radius < 1, hence are c.n.u
        assert np.abs(np.linalg.eigvals(P)).max() < 1 - 1e-6
        assert dims(levan_split(P)) == (0, d)
    with pytest.raises(HypothesisError):
        levan_split(np.diag([1.0, 0.5]))


def test_kubrusly_examples(rng):
    U = random_frame(rng, 3, 3)
    dec = kubrusly_split(U)
    assert dims(dec) == (0, 0, 3)
    dec = kubrusly_split(np.diag([0.5, 1.0]))
    assert dims(dec) == (1, 0, 1)
    e = np.eye(2)
    assert same_span(dec.part("strongly_stable").subspace, Subspace.span(e[:, [0]]))
    assert same_span(dec.part("unitary").subspace, Subspace.span(e[:, [1]]))
    assert [p.label for p in dec.refinements["c00"]] == ["c00", "backward_shift", "shift", "unitary"]
    assert [p.label for p in dec.refinements["two_part"]] == ["c00", "unitary"]
    P, F = planted(rng, 2, 3)
    dec = kubrusly_split(P)
    assert dec.part("shift").dim == 0
    assert subspace_gap(dec.part("unitary").subspace, Subspace.span(F)) <= 1e-8


def test_identity_examples():
    assert dims(identity_split(np.eye(2))) == (2, 0)
    dec = identity_split(np.diag([1.0, 1.0, 0.3]))
    assert same_span(dec.part("identity").subspace, Subspace.span(np.eye(3)[:, :2]))
    assert dims(identity_split(np.zeros((2, 2)))) == (0, 2)
    assert dec.evidence["fixed_space_mismatch"] <= 1e-8


def test_levan3_examples(rng):
    for P in (random_matrix(rng, 5, 1.0), np.zeros((3, 3)), np.diag([0.99, 0.1])):
        dec = levan3_split(P)
        assert dims(dec) == (P.shape[0], 0, 0)
    # orbit predicate at the configured budget
    dec = levan3_split(np.diag([0.99, 0.1]))
    assert orbit_budget(2, DEFAULT_TOL) >= 2 * 2 * np.log(1 / DEFAULT_TOL.equality) - 1
    assert [p.kind for p in dec.parts] == [INVARIANT, CO_INVARIANT, INVARIANT]
    with pytest.raises(HypothesisError):
        levan3_split(np.eye(2))


def test_foguel_examples(rng):
    assert dims(foguel_split(random_frame(rng, 3, 3))) == (0, 3)
    assert dims(foguel_split(np.zeros((3, 3)))) == (3, 0)
    P, F = planted(rng, 2, 2)
    dec = foguel_split(P)
    assert subspace_gap(dec.part("unitary").subspace, Subspace.span(F)) <= 1e-8


def test_unknown_scheme():
    with pytest.raises(InvalidInputError):
        scalar_decomposition(np.eye(2), "wold")


@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(1, 4), st.sampled_from(sorted(SCHEMES)))
def test_parts_orthogonal_spanning_and_reducing(seed, du, dc, scheme):
    rng = np.random.default_rng(seed)
    P, _ = planted(rng, du, dc, rho=rng.uniform(0.05, 0.95))
    d = P.shape[0]
    if scheme in ("levan", "levan_invariant", "levan3") and du:
        with pytest.raises(HypothesisError):
            scalar_decomposition(P, scheme)
        return
    dec = scalar_decomposition(P, scheme)
    assert sum(dims(dec)) == d
    frames = [p.subspace.frame for p in dec.parts if p.dim]
    F = np.hstack(frames)
    assert np.linalg.norm(F.conj().T @ F - np.eye(d)) <= 1e-8
    for p in dec.parts:
        fwd = invariance_residual(P, p.subspace)
        back = invariance_residual(P.conj().T, p.subspace)
        if p.kind == REDUCING:
            assert max(fwd, back) <= DEFAULT_TOL.equality
        elif p.kind == INVARIANT:
            assert fwd <= DEFAULT_TOL.equality
        else:
            assert back <= DEFAULT_TOL.equality


@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(0, 4))
def test_cross_consistency_and_covariance(seed, du, dc):
    if du + dc == 0:
        return
    rng = np.random.default_rng(seed)
    P, _ = planted(rng, du, dc)
    can = canonical_split(P)
    fog = foguel_split(P)
    kub = kubrusly_split(P)
    assert same_span(fog.part("unitary").subspace, can.part("unitary").subspace)
    assert same_span(fog.part("weakly_stable").subspace, can.part("cnu").subspace)
    assert same_span(kub.part("unitary").subspace, can.part("unitary").subspace)
    W = random_frame(rng, du + dc, du + dc)
    moved = canonical_split(W @ P @ W.conj().T).part("unitary").subspace
    if moved.dim:
        assert subspace_gap(moved, Subspace.span(W @ can.part("unitary").subspace.frame)) <= 1e-8
