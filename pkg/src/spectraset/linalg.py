"""
Dense complex linear algebra and subspace arithmetic.

Every operator is a square ``numpy`` array of dtype ``complex128``.  Subspaces
are carried as orthonormal column frames; a frame with zero columns is the
trivial subspace ``{0}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg

from .errors import InvalidInputError

_ABS_RANK_FLOOR = 1e-14
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Tolerances:
    rank: float = 1e-10
    equality: float = 1e-8
    psd_slack: float = 1e-8
    limit_conv: float = 1e-12
    orthonormal: float = 1e-10

    def __post_init__(self):
        for name in ("rank", "equality", "psd_slack", "limit_conv", "orthonormal"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"tolerance {name!r} must be positive, got {value!r}")

    def as_dict(self) -> dict[str, float]:
        return {
            "rank": self.rank,
            "equality": self.equality,
            "psd_slack": self.psd_slack,
            "limit_conv": self.limit_conv,
            "orthonormal": self.orthonormal,
        }


DEFAULT_TOL = Tolerances()


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    CERTIFIED_NECESSARY = "certified-necessary"
    FALSIFIED = "falsified"
    NO_VIOLATION = "no-violation-found"

    def __str__(self):
        return self.value


@dataclass
class Certificate:
    """Named verdict plus the numbers that back it."""

    name: str
    verdict: Verdict
    evidence: dict[str, Any] = field(default_factory=dict)

    @property
    def falsified(self) -> bool:
        return self.verdict is Verdict.FALSIFIED


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce ``M`` to a finite square complex array (scalars become 1x1)."""
    A = np.asarray(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def adj(M: np.ndarray) -> np.ndarray:
    return M.conj().swapaxes(-1, -2)


def opnorm(M: np.ndarray) -> float:
    """Spectral norm; zero for empty matrices."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + adj(M)) / 2


def commutator_norm(X: np.ndarray, Y: np.ndarray) -> float:
    return opnorm(X @ Y - Y @ X)


@dataclass(frozen=True)
class Subspace:
    """Orthonormal column frame of a subspace of ``C^ambient_dim``."""

    frame: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.frame, dtype=complex)
        if F.ndim != 2:
            raise InvalidInputError("subspace frame must be two dimensional")
        object.__setattr__(self, "frame", F)

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0), dtype=complex))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim, dtype=complex))

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        """Orthonormalize the columns of ``vectors`` (rank-revealing)."""
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        if V.shape[1] == 0:
            return cls.zero(V.shape[0] if ambient_dim is None else ambient_dim)
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        r = _rank_from_singular_values(s, tol)
        return cls(U[:, :r])

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def is_trivial(self) -> bool:
        return self.dim == 0

    def projector(self) -> np.ndarray:
        return self.frame @ adj(self.frame)

    def orthonormality_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        return opnorm(adj(self.frame) @ self.frame - np.eye(self.dim))

    def restrict(self, T: np.ndarray) -> np.ndarray:
        """Compression ``frame* T frame`` (the restriction when the subspace is invariant)."""
        return adj(self.frame) @ T @ self.frame


def _cutoff(s: np.ndarray, tol: Tolerances) -> float:
    smax = float(s[0]) if s.size else 0.0
    return max(tol.rank * max(1.0, smax), _ABS_RANK_FLOOR)


def _rank_from_singular_values(s: np.ndarray, tol: Tolerances) -> int:
    if s.size == 0:
        return 0
    return int(np.count_nonzero(s > _cutoff(s, tol)))


def numerical_rank(M, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol.rank * max(1, sigma_max)``."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return _rank_from_singular_values(s, tol)


def null_space(M: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Right null space of a (possibly rectangular) matrix."""
    M = np.asarray(M, dtype=complex)
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return Subspace.full(ncols)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    r = _rank_from_singular_values(s, tol)
    return Subspace(adj(Vh[r:, :]))


def kernel_basis(M, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    return null_space(as_matrix(M), tol)


def range_basis(M, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    M = as_matrix(M)
    U, s, _ = np.linalg.svd(M)
    r = _rank_from_singular_values(s, tol)
    return Subspace(U[:, :r])


def complement(U: Subspace) -> Subspace:
    n, k = U.frame.shape
    if k == 0:
        return Subspace.full(n)
    if k == n:
        return Subspace.zero(n)
    Q, _ = np.linalg.qr(U.frame, mode="complete")
    return Subspace(Q[:, k:])


def direct_sum(*parts: Subspace) -> Subspace:
    frames = [p.frame for p in parts]
    return Subspace(np.hstack(frames))


def intersect(U: Subspace, V: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Intersection as the kernel of the stacked operator ``[I - P_U; I - P_V]``."""
    if U.ambient_dim != V.ambient_dim:
        raise InvalidInputError("subspaces live in different ambient spaces")
    n = U.ambient_dim
    if U.is_trivial or V.is_trivial:
        return Subspace.zero(n)
    eye = np.eye(n)
    stacked = np.vstack([eye - U.projector(), eye - V.projector()])
    return null_space(stacked, tol)


def principal_angles(U: Subspace, V: Subspace) -> np.ndarray:
    """
    Principal angles in nonincreasing order.

    Small angles come from sines rather than arccos of the cosines, so angles
    down to roundoff are resolved.  Returns an empty array when either
    subspace is trivial.
    """
    if U.ambient_dim != V.ambient_dim:
        raise InvalidInputError("subspaces live in different ambient spaces")
    if U.is_trivial or V.is_trivial:
        return np.zeros(0)
    return np.clip(scipy.linalg.subspace_angles(U.frame, V.frame), 0.0, np.pi / 2)


def subspace_gap(U: Subspace, V: Subspace) -> float:
    """Largest principal angle, or pi/2 when the dimensions differ."""
    if U.dim != V.dim:
        return float(np.pi / 2)
    if U.dim == 0:
        return 0.0
    return float(principal_angles(U, V).max())


def invariance_residual(T: np.ndarray, U: Subspace) -> float:
    if U.is_trivial or U.dim == U.ambient_dim:
        return 0.0
    TU = T @ U.frame
    return opnorm(TU - U.frame @ (adj(U.frame) @ TU))


def is_invariant(T, U: Subspace, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, float]:
    T = as_matrix(T)
    if T.shape[0] != U.ambient_dim:
        raise InvalidInputError("operator and subspace dimensions differ")
    r = invariance_residual(T, U)
    return r <= tol.equality, r


def is_reducing(T, U: Subspace, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, tuple[float, float]]:
    T = as_matrix(T)
    ok_fwd, r_fwd = is_invariant(T, U, tol)
    ok_adj, r_adj = is_invariant(adj(T), U, tol)
    return ok_fwd and ok_adj, (r_fwd, r_adj)


def psd_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """
    Positive square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-tol.psd_slack, 0)`` are treated as roundoff and clamped.
    """
    M = as_matrix(M)
    herm_err = opnorm(M - adj(M))
    if herm_err > tol.equality * max(1.0, opnorm(M)):
        raise InvalidInputError(f"matrix is not Hermitian (defect {herm_err:.3e})")
    w, V = np.linalg.eigh(hermitian_part(M))
    if w[0] < -tol.psd_slack:
        raise InvalidInputError(f"matrix is indefinite (min eigenvalue {w[0]:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    return (V * root) @ adj(V)


def block2x2_psd(P, Q, A, tol: Tolerances = DEFAULT_TOL, samples: int = 256, seed: int = 0) -> Certificate:
    """
    Positivity of ``[[P, A], [A*, Q]]`` for PSD ``P``, ``Q``.

    The verdict comes from the smallest eigenvalue of the block matrix.  The
    evidence also carries the largest value of ``|<Ax, y>|^2 - <Py, y><Qx, x>``
    over random unit pairs together with the pair read off the bottom
    eigenvector, which is the violating pair whenever the block is indefinite.
    """
    P, Q, A = as_matrix(P, "P"), as_matrix(Q, "Q"), as_matrix(A, "A")
    if not (P.shape == Q.shape == A.shape):
        raise InvalidInputError("block2x2_psd needs equal dimensions")
    d = P.shape[0]
    block = np.block([[P, A], [adj(A), Q]])
    w, V = np.linalg.eigh(hermitian_part(block))
    min_eig = float(w[0])

    rng = np.random.default_rng(seed)
    xs = _random_unit_vectors(rng, d, samples)
    ys = _random_unit_vectors(rng, d, samples)
    bottom = V[:, 0]
    y0, x0 = bottom[:d], bottom[d:]
    if np.linalg.norm(x0) > 0 and np.linalg.norm(y0) > 0:
        xs = np.vstack([xs, x0 / np.linalg.norm(x0)])
        ys = np.vstack([ys, y0 / np.linalg.norm(y0)])
    gap = _sampled_gap(P, Q, A, xs, ys)
    k = int(np.argmax(gap))
    verdict = Verdict.CERTIFIED if min_eig >= -tol.psd_slack else Verdict.FALSIFIED
    return Certificate(
        "block2x2_psd",
        verdict,
        {
            "min_eig": min_eig,
            "max_sampled_gap": float(gap[k]),
            "witness_x": xs[k],
            "witness_y": ys[k],
        },
    )


def _random_unit_vectors(rng: np.random.Generator, d: int, count: int) -> np.ndarray:
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _sampled_gap(P, Q, A, xs, ys):
    # rows of xs, ys are vectors; returns |<Ax,y>|^2 - <Py,y><Qx,x> per pair
    Ax = xs @ A.T
    axy = np.einsum("ij,ij->i", Ax, ys.conj())
    pyy = np.einsum("ij,ij->i", ys @ P.T, ys.conj()).real
    qxx = np.einsum("ij,ij->i", xs @ Q.T, xs.conj()).real
    return np.abs(axy) ** 2 - pyy * qxx


def _max_re_eig(stack: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # stack (b, d, d), theta (b, g) -> largest eigenvalue of Re(e^{i theta} M), shape (b, g)
    rot = np.exp(1j * theta)[..., None, None] * stack[:, None, :, :]
    return np.linalg.eigvalsh(hermitian_part(rot))[..., -1]


def numerical_radius(M, grid_size: int = 64, tol: float = 1e-12) -> float | np.ndarray:
    """
    Lower bound for the numerical radius ``max_{|x|=1} |<Mx, x>|``.

    Maximizes ``lambda_max(Re(e^{i theta} M))`` over a uniform theta grid and
    then runs one golden-section search around the best grid point.  Accepts a
    stack of matrices with shape ``(..., d, d)`` and returns one value per matrix.
    """
    if grid_size < 8:
        raise InvalidInputError("grid_size must be at least 8")
    arr = np.asarray(M, dtype=complex)
    single = arr.ndim == 2
    if arr.shape[-1] == 0:
        return 0.0 if single else np.zeros(arr.shape[:-2])
    lead = arr.shape[:-2]
    stack = arr.reshape((-1,) + arr.shape[-2:])
    b = stack.shape[0]

    grid = 2 * np.pi * np.arange(grid_size) / grid_size
    values = _max_re_eig(stack, np.broadcast_to(grid, (b, grid_size)))
    best_idx = np.argmax(values, axis=1)
    best = values[np.arange(b), best_idx]

    h = 2 * np.pi / grid_size
    lo = grid[best_idx] - h
    hi = grid[best_idx] + h
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc = _max_re_eig(stack, c[:, None])[:, 0]
    fd = _max_re_eig(stack, d[:, None])[:, 0]
    while np.max(hi - lo) > tol:
        left = fc > fd
        lo = np.where(left, lo, c)
        hi = np.where(left, d, hi)
        probe = np.where(left, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
        f_probe = _max_re_eig(stack, probe[:, None])[:, 0]
        c, d, fc, fd = (
            np.where(left, probe, d),
            np.where(left, c, probe),
            np.where(left, f_probe, fd),
            np.where(left, fc, f_probe),
        )
    best = np.maximum(best, np.maximum(fc, fd))
    best = np.maximum(best, 0.0)
    return float(best[0]) if single else best.reshape(lead)
