"""
Strong limits of ``P*^k P^k`` and ``P^k P*^k`` and the subspaces they cut out.

In finite dimension every contraction splits as a unitary part plus a part
with spectral radius below one, so both limits converge in norm to the
orthogonal projection onto the unitary part.  The code does not assume this:
the limits are computed, and the projection structure is checked afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidInputError, NonConvergenceError
from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    adj,
    as_matrix,
    complement,
    hermitian_part,
    intersect,
    kernel_basis,
    opnorm,
)

DEFAULT_MAX_DOUBLINGS = 60


def check_contraction(P: np.ndarray, tol: Tolerances, name: str = "P") -> float:
    norm = opnorm(P)
    if norm > 1.0 + tol.psd_slack:
        raise InvalidInputError(f"{name} is not a contraction (norm {norm:.12g})")
    return norm


def asymptotic_limit(
    P,
    tol: Tolerances = DEFAULT_TOL,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
    adjoint: bool = False,
) -> np.ndarray:
    """
    Limit of ``P*^k P^k`` (or ``P^k P*^k`` with ``adjoint=True``).

    Uses repeated squaring: with ``Q = P^k`` and ``A_k = Q* Q``,
    ``A_{2k} = Q* A_k Q``.  Stops once the Frobenius change between successive
    iterates drops below ``tol.limit_conv`` or below the roundoff floor of
    the squaring itself (each squaring can double the error in ``Q``).
    """
    P = as_matrix(P, "P")
    check_contraction(P, tol)
    if adjoint:
        P = adj(P)
    n = P.shape[0]
    eps = np.finfo(float).eps
    Q = P
    A = adj(Q) @ Q
    delta = np.inf
    for m in range(1, max_doublings + 1):
        A_next = adj(Q) @ A @ Q
        A_next = hermitian_part(A_next)
        delta = float(np.linalg.norm(A_next - A))
        A = A_next
        floor = 8.0 * n * eps * 2.0**m
        if delta <= max(tol.limit_conv, floor):
            return A
        Q = Q @ Q
    raise NonConvergenceError(
        f"strong limit did not converge within {max_doublings} doublings "
        f"(last delta {delta:.3e}); spectral radius too close to 1 for the budget",
        delta,
    )


@dataclass
class Limits:
    """Both strong limits of a contraction, with their projection defects."""

    A: np.ndarray
    A_star: np.ndarray

    @property
    def idempotence_defect(self) -> float:
        return opnorm(self.A @ self.A - self.A)

    @property
    def co_idempotence_defect(self) -> float:
        return opnorm(self.A_star @ self.A_star - self.A_star)


def limits(P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS) -> Limits:
    return Limits(
        asymptotic_limit(P, tol, max_doublings),
        asymptotic_limit(P, tol, max_doublings, adjoint=True),
    )


def _eye_minus(A: np.ndarray) -> np.ndarray:
    return np.eye(A.shape[0]) - A


def stable_subspace(P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS) -> Subspace:
    """``{x : P^k x -> 0}``, computed as the kernel of the strong limit."""
    return kernel_basis(asymptotic_limit(P, tol, max_doublings), tol)


def isometric_invariant_subspace(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS
) -> Subspace:
    """``Ker(I - A)``: vectors whose orbit norms never decrease."""
    return kernel_basis(_eye_minus(asymptotic_limit(P, tol, max_doublings)), tol)


def max_unitary_reducing(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS, lim: Limits | None = None
) -> Subspace:
    """Largest reducing subspace on which ``P`` is unitary."""
    lim = lim or limits(P, tol, max_doublings)
    return intersect(
        kernel_basis(_eye_minus(lim.A), tol),
        kernel_basis(_eye_minus(lim.A_star), tol),
        tol,
    )


def shift_subspace(lim: Limits, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """``Ker(I - A) ∩ Ker(A_*)``; the unilateral-shift slot, {0} in finite dimension."""
    return intersect(kernel_basis(_eye_minus(lim.A), tol), kernel_basis(lim.A_star, tol), tol)


def foguel_subspace(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS, lim: Limits | None = None
) -> Subspace:
    """
    Vectors with weakly null orbits.

    In finite dimension the completely non-unitary part has spectral radius
    below one, so weak and strong stability agree there and this is the
    orthogonal complement of the unitary part.
    """
    return complement(max_unitary_reducing(P, tol, max_doublings, lim))


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


@dataclass
class ContractionClass:
    """
    Predicates of a single contraction, each backed by a number in ``witness``.

    Norm-type witnesses are residual norms; subspace-type witnesses are the
    dimension of the obstructing subspace.
    """

    unitary: bool
    isometry: bool
    co_isometry: bool
    cnu: bool
    cni: bool
    strongly_stable: bool
    weakly_stable: bool
    pure: bool
    c00: bool
    identity: bool
    completely_non_identity: bool
    witness: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def flags(self) -> dict[str, bool]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.type in ("bool", bool)}

    def lattice_violations(self) -> list[str]:
        bad = []
        if self.unitary and not (self.isometry and self.co_isometry):
            bad.append("unitary without isometry/co-isometry")
        if self.c00 and not (self.strongly_stable and self.pure):
            bad.append("c00 without strong stability of P and P*")
        if self.identity and not self.unitary:
            bad.append("identity without unitary")
        return bad


def classify_contraction(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS
) -> ContractionClass:
    P = as_matrix(P, "P")
    check_contraction(P, tol)
    n = P.shape[0]
    eye = np.eye(n)
    lim = limits(P, tol, max_doublings)

    iso_res = opnorm(adj(P) @ P - eye)
    coiso_res = opnorm(P @ adj(P) - eye)
    unitary_part = max_unitary_reducing(P, tol, max_doublings, lim)
    weak = foguel_subspace(P, tol, max_doublings, lim)
    fixed = kernel_basis(eye - P, tol)
    a_norm = opnorm(lim.A)
    a_star_norm = opnorm(lim.A_star)
    id_res = opnorm(P - eye)

    isometry = iso_res <= tol.equality
    co_isometry = coiso_res <= tol.equality
    unitary = isometry and co_isometry
    strongly = a_norm <= tol.equality
    pure = a_star_norm <= tol.equality
    cnu = unitary_part.is_trivial
    return ContractionClass(
        unitary=unitary,
        isometry=isometry,
        co_isometry=co_isometry,
        cnu=cnu,
        # a reducing subspace carrying an isometry carries a unitary in finite dimension
        cni=cnu,
        strongly_stable=strongly,
        weakly_stable=weak.dim == n,
        pure=pure,
        c00=strongly and pure,
        identity=unitary and id_res <= tol.equality,
        completely_non_identity=fixed.is_trivial,
        witness={
            "unitary": max(iso_res, coiso_res),
            "isometry": iso_res,
            "co_isometry": coiso_res,
            "cnu": float(unitary_part.dim),
            "cni": float(unitary_part.dim),
            "strongly_stable": a_norm,
            "weakly_stable": float(n - weak.dim),
            "pure": a_star_norm,
            "c00": max(a_norm, a_star_norm),
            "identity": id_res,
            "completely_non_identity": float(fixed.dim),
            "spectral_radius": spectral_radius(P),
            "norm": opnorm(P),
        },
        notes=["cni coincides with cnu in finite dimension"],
    )
