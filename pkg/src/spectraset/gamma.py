"""
Commuting tuples ``(S_1, ..., S_{n-1}, P)`` over the closed symmetrized polydisc.

Membership of a tuple is only semi-decidable numerically, so every
contraction verdict here is three valued: structural equalities are decided
within tolerance, pencil positivity and the sampled von Neumann test can
falsify, and nothing short of a structural theorem certifies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg

from . import asymptotics as asy
from .decompose import DecompositionReport, decompose_tuple
from .errors import InvalidInputError, UnsolvableError
from .linalg import (
    DEFAULT_TOL,
    Certificate,
    Tolerances,
    Verdict,
    adj,
    as_matrix,
    commutator_norm,
    hermitian_part,
    numerical_radius,
    opnorm,
)
from .polys import Domain, sobol_params, von_neumann_falsifier


@dataclass
class Budget:
    """Sampling budgets shared by the certificate routines."""

    circle_grid: int = 256
    pencil_radii: int = 16
    max_degree: int = 3
    trials: int = 200
    seed: int = 0
    max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS
    radius_grid: int = 64
    vn_samples: int = 4096


@dataclass
class GammaTuple:
    S: list[np.ndarray]
    P: np.ndarray
    commutator_norm: float = 0.0
    provenance: str | None = None

    @property
    def n(self) -> int:
        return len(self.S) + 1

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    @property
    def matrices(self) -> list[np.ndarray]:
        return [*self.S, self.P]

    def names(self) -> list[str]:
        return [f"S{i}" for i in range(1, self.n)] + ["P"]

    def adjoint(self) -> "GammaTuple":
        return GammaTuple([adj(s) for s in self.S], adj(self.P), self.commutator_norm)

    def compress(self, frame: np.ndarray) -> "GammaTuple":
        return GammaTuple(
            [adj(frame) @ s @ frame for s in self.S], adj(frame) @ self.P @ frame, provenance="restriction"
        )

    def s(self, i: int) -> np.ndarray:
        """``S_i`` with the conventions ``S_0 = I`` and ``S_n = P``."""
        if i == 0:
            return np.eye(self.dim, dtype=complex)
        if i == self.n:
            return self.P
        return self.S[i - 1]


def max_commutator(mats: list[np.ndarray]) -> float:
    worst = 0.0
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            worst = max(worst, commutator_norm(mats[a], mats[b]))
    return worst


def make_gamma_tuple(S, P, tol: Tolerances = DEFAULT_TOL, provenance: str | None = None) -> GammaTuple:
    """Validate and wrap ``(S_1, ..., S_{n-1}, P)``; raises :class:`InvalidInputError`."""
    S = [as_matrix(s, f"S{i + 1}") for i, s in enumerate(S)]
    P = as_matrix(P, "P")
    if not S:
        raise InvalidInputError("a Gamma_n tuple needs n >= 2 (at least one S)")
    if any(s.shape != P.shape for s in S):
        raise InvalidInputError("all matrices of a tuple must have the same size")
    comm = max_commutator([*S, P])
    if comm > tol.equality * max(1.0, max(opnorm(m) for m in [*S, P]) ** 2):
        raise InvalidInputError(f"matrices do not commute (max commutator norm {comm:.3e})")
    asy.check_contraction(P, tol)
    return GammaTuple(S, P, comm, provenance)


def elementary_symmetric(mats: list[np.ndarray]) -> list[np.ndarray]:
    """``[e_0, e_1, ..., e_m]`` of commuting matrices via ``e_k <- e_k + x e_{k-1}``."""
    d = mats[0].shape[0]
    e = [np.eye(d, dtype=complex)] + [np.zeros((d, d), dtype=complex) for _ in mats]
    for m, x in enumerate(mats, start=1):
        for k in range(m, 0, -1):
            e[k] = e[k] + x @ e[k - 1]
    return e


def symmetrize(T, tol: Tolerances = DEFAULT_TOL, provenance: str | None = None) -> GammaTuple:
    """The symmetrization map applied to commuting contractions ``T_1, ..., T_n``."""
    T = [as_matrix(t, f"T{i + 1}") for i, t in enumerate(T)]
    if len(T) < 2:
        raise InvalidInputError("symmetrize needs at least two operators")
    if any(t.shape != T[0].shape for t in T):
        raise InvalidInputError("operators must have equal sizes")
    comm = max_commutator(T)
    if comm > tol.equality:
        raise InvalidInputError(f"operators do not commute (max commutator norm {comm:.3e})")
    for i, t in enumerate(T):
        asy.check_contraction(t, tol, f"T{i + 1}")
    e = elementary_symmetric(T)
    return GammaTuple(e[1:-1], e[-1], max_commutator(e[1:]), provenance)


def pencil_value(t: GammaTuple, i: int, alpha: complex | np.ndarray) -> np.ndarray:
    """
    Hermitian pencil ``Phi_i`` at the scaled tuple ``(alpha S_1, ..., alpha^n P)``.

    ``alpha`` may be an array; the result then has a leading batch axis.
    """
    n = t.n
    if not 1 <= i <= n - 1:
        raise InvalidInputError(f"pencil index must be in 1..{n - 1}, got {i}")
    a = np.asarray(alpha, dtype=complex)
    scalar = a.ndim == 0
    a = a.reshape(-1, 1, 1)
    N = comb(n, i)
    Si = (a**i) * t.s(i)
    Sni = (a ** (n - i)) * t.s(n - i)
    Pt = (a**n) * t.P
    eye = np.eye(t.dim)
    cross = Si - adj(Sni) @ Pt
    phi = N**2 * (eye - adj(Pt) @ Pt) + (adj(Si) @ Si - adj(Sni) @ Sni) - N * cross - N * adj(cross)
    phi = hermitian_part(phi)
    return phi[0] if scalar else phi


@dataclass
class PencilCertificate:
    i: int
    grid: np.ndarray
    min_eig: float
    witness_alpha: complex
    witness_vector: np.ndarray
    verdict: Verdict


def pencil_grid(circle_grid: int, radii: int) -> np.ndarray:
    """``alpha = 0`` plus ``radii`` concentric copies of a uniform circle grid, the last on the unit circle."""
    circle = np.exp(2j * np.pi * np.arange(circle_grid) / circle_grid)
    r = np.arange(1, radii + 1) / radii
    return np.concatenate([[0.0], (r[:, None] * circle[None, :]).ravel()])


def pencil_certificate(
    t: GammaTuple, i: int, circle_grid: int = 256, tol: Tolerances = DEFAULT_TOL, radii: int = 16
) -> PencilCertificate:
    """
    Smallest eigenvalue of ``Phi_i`` over a polar grid of the closed disc.

    The pencil is not harmonic in ``alpha``, so the unit circle alone can miss
    negative values: for the scalar point ``(2.2, 1)`` it vanishes on the whole
    circle and is negative only inside.  Hence the interior radii.
    """
    if circle_grid < 16:
        raise InvalidInputError("circle_grid must be at least 16")
    if radii < 1:
        raise InvalidInputError("radii must be at least 1")
    grid = pencil_grid(circle_grid, radii)
    w, V = np.linalg.eigh(pencil_value(t, i, grid))
    k = int(np.argmin(w[:, 0]))
    min_eig = float(w[k, 0])
    verdict = Verdict.FALSIFIED if min_eig < -tol.psd_slack else Verdict.CERTIFIED
    return PencilCertificate(i, grid, min_eig, complex(grid[k]), V[k][:, 0], verdict)


def pencil_certificates(
    t: GammaTuple, circle_grid: int = 256, tol: Tolerances = DEFAULT_TOL, radii: int = 16
) -> list[PencilCertificate]:
    return [pencil_certificate(t, i, circle_grid, tol, radii) for i in range(1, t.n)]


@dataclass
class DefectSolution:
    """Solutions ``X_k`` of ``R_k = D_P X_k D_P`` on the defect space."""

    frame: np.ndarray
    solutions: list[np.ndarray]
    residuals: list[float]
    off_defect: list[float]
    condition: float | None

    @property
    def defect_dim(self) -> int:
        return self.frame.shape[1]


def defect_operator(P: np.ndarray, tol: Tolerances = DEFAULT_TOL):
    """``D_P = (I - P*P)^{1/2}`` plus an orthonormal frame of its range."""
    M = hermitian_part(np.eye(P.shape[0]) - adj(P) @ P)
    w, V = np.linalg.eigh(M)
    if w[0] < -tol.psd_slack:
        raise InvalidInputError(f"P is not a contraction (I - P*P has eigenvalue {w[0]:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    D = (V * root) @ adj(V)
    # rank is decided on I - P*P itself; the square root would lift roundoff to ~1e-8
    cutoff = max(tol.rank * max(1.0, float(w.max(initial=0.0))), 1e-14)
    frame = V[:, w > cutoff]
    return D, frame


def defect_solve(
    P: np.ndarray,
    rhs: list[np.ndarray],
    tol: Tolerances = DEFAULT_TOL,
    rotation: np.ndarray | None = None,
) -> DefectSolution:
    """
    Solve ``R = D_P X D_P`` for ``X`` on the defect space.

    ``X = Dt^{-1} Q* R Q Dt^{-1}`` with ``Q`` an orthonormal frame of the
    range of ``D_P`` and ``Dt = Q* D_P Q``.  ``rotation`` replaces ``Q`` by
    ``Q W`` for a unitary ``W`` (used to check frame independence).  Raises
    :class:`UnsolvableError` when some ``R`` does not vanish off the defect space.
    """
    D, Q = defect_operator(P, tol)
    if rotation is not None:
        Q = Q @ rotation
    k = Q.shape[1]
    proj_perp = np.eye(P.shape[0]) - Q @ adj(Q)
    Dt = adj(Q) @ D @ Q
    condition = float(np.linalg.cond(Dt)) if k else None
    solutions, residuals, off = [], [], []
    for R in rhs:
        off_res = max(opnorm(R @ proj_perp), opnorm(proj_perp @ R))
        off.append(off_res)
        if k:
            Y = np.linalg.solve(Dt, adj(Q) @ R @ Q)
            X = np.linalg.solve(Dt.T, Y.T).T
        else:
            X = np.zeros((0, 0), dtype=complex)
        solutions.append(X)
        residuals.append(opnorm(R - D @ Q @ X @ adj(Q) @ D))
    worst = max(off, default=0.0)
    if worst > tol.equality:
        raise UnsolvableError(
            f"right-hand side does not vanish off the defect space (residual {worst:.3e})", worst
        )
    return DefectSolution(Q, solutions, residuals, off, condition)


@dataclass
class FOTuple:
    defect_dim: int
    A: list[np.ndarray]
    residuals: list[float]
    radius_margins: list[float]
    frame: np.ndarray
    condition: float | None
    z_samples: int = 64

    def radii(self) -> list[float]:
        n = len(self.A) + 1
        return [comb(n, i) - m for i, m in enumerate(self.radius_margins, start=1)]


def fo_tuple(
    t: GammaTuple,
    tol: Tolerances = DEFAULT_TOL,
    z_samples: int = 64,
    radius_grid: int = 64,
    rotation: np.ndarray | None = None,
) -> FOTuple:
    """
    Fundamental operator tuple ``A_1, ..., A_{n-1}`` on the defect space.

    ``radius_margins[i-1]`` is ``C(n, i)`` minus the largest sampled numerical
    radius of ``A_i + A_{n-i} z`` over ``z_samples`` points of the unit circle.
    """
    n = t.n
    rhs = [t.s(i) - adj(t.s(n - i)) @ t.P for i in range(1, n)]
    sol = defect_solve(t.P, rhs, tol, rotation)
    z = np.exp(2j * np.pi * np.arange(z_samples) / z_samples)
    margins = []
    for i in range(1, n):
        Ai, Ani = sol.solutions[i - 1], sol.solutions[n - i - 1]
        if sol.defect_dim == 0:
            margins.append(float(comb(n, i)))
            continue
        stack = Ai[None] + z[:, None, None] * Ani[None]
        margins.append(float(comb(n, i) - np.max(numerical_radius(stack, radius_grid))))
    return FOTuple(sol.defect_dim, sol.solutions, sol.residuals, margins, sol.frame, sol.condition, z_samples)


def _anchor_points(mats: list[np.ndarray], seed: int) -> np.ndarray:
    """Joint eigenvalues read off the Schur form of a random combination."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(len(mats)) + 1j * rng.standard_normal(len(mats))
    L = sum(ci * m for ci, m in zip(c, mats))
    _, Z = scipy.linalg.schur(L, output="complex")
    return np.stack([np.diag(adj(Z) @ m @ Z) for m in mats], axis=1)


def gamma_points_from_roots(roots: np.ndarray) -> np.ndarray:
    """Symmetrize rows of roots; rows outside the closed disc are pulled onto it."""
    r = np.asarray(roots, dtype=complex)
    mod = np.abs(r)
    r = np.where(mod > 1.0, r / np.where(mod > 0, mod, 1.0), r)
    m, n = r.shape
    e = np.zeros((m, n + 1), dtype=complex)
    e[:, 0] = 1.0
    for j in range(n):
        e[:, 1 : j + 2] = e[:, 1 : j + 2] + r[:, j : j + 1] * e[:, 0 : j + 1]
    return e[:, 1:]


def _roots_of_points(points: np.ndarray) -> np.ndarray:
    n = points.shape[1]
    out = np.empty_like(points)
    for k, pt in enumerate(points):
        coeffs = [1.0] + [(-1) ** j * pt[j - 1] for j in range(1, n + 1)]
        out[k] = np.roots(coeffs) if np.any(np.abs(coeffs[1:]) > 0) else np.zeros(n)
    return out


def gamma_domain(t: GammaTuple, samples: int, seed: int) -> Domain:
    n = t.n
    anchors = gamma_points_from_roots(_roots_of_points(_anchor_points(t.matrices, seed)))
    return Domain(
        nvars=n,
        param_map=lambda theta: gamma_points_from_roots(np.exp(1j * theta)),
        params=sobol_params(n, samples, seed),
        anchors=anchors,
    )


def vn_falsifier_gamma(
    t: GammaTuple,
    max_degree: int = 3,
    trials: int = 200,
    seed: int = 0,
    rtol: float = 1e-6,
    samples: int = 4096,
) -> Certificate:
    """Random polynomials checked against the sup over the distinguished boundary."""
    cert = von_neumann_falsifier(
        "vn_gamma", t.matrices, gamma_domain(t, samples, seed), max_degree, trials, seed, rtol
    )
    return cert


def recursion_tuple(t: GammaTuple) -> list[np.ndarray]:
    """``((n-1)/n S_1, (n-2)/n S_2, ..., 1/n S_{n-1})``."""
    n = t.n
    return [(n - i) / n * t.s(i) for i in range(1, n)]


def recursive_certificate(t: GammaTuple, tol: Tolerances, budget: Budget) -> Certificate:
    mats = recursion_tuple(t)
    if len(mats) == 1:
        norm = opnorm(mats[0])
        verdict = Verdict.CERTIFIED if norm <= 1.0 + tol.psd_slack else Verdict.FALSIFIED
        return Certificate("recursive_gamma", verdict, {"level": 1, "norm": norm})
    last_norm = opnorm(mats[-1])
    if last_norm > 1.0 + tol.psd_slack:
        return Certificate("recursive_gamma", Verdict.FALSIFIED, {"level": t.n - 1, "last_norm": last_norm})
    sub = GammaTuple(mats[:-1], mats[-1], max_commutator(mats))
    pencils = pencil_certificates(sub, budget.circle_grid, tol, budget.pencil_radii)
    vn = vn_falsifier_gamma(sub, budget.max_degree, budget.trials, budget.seed, samples=budget.vn_samples)
    falsified = vn.falsified or any(p.verdict is Verdict.FALSIFIED for p in pencils)
    return Certificate(
        "recursive_gamma",
        Verdict.FALSIFIED if falsified else Verdict.CERTIFIED_NECESSARY,
        {
            "level": t.n - 1,
            "pencil_min_eig": min(p.min_eig for p in pencils),
            "vn_max_ratio": vn.evidence["max_ratio"],
        },
    )


def structural_residuals(t: GammaTuple) -> dict[str, object]:
    """Norms behind the unitary / isometry characterizations."""
    eye = np.eye(t.dim)
    n = t.n
    s_res = [opnorm(t.s(i) - adj(t.s(n - i)) @ t.P) for i in range(1, n)]
    return {
        "p_isometry": opnorm(adj(t.P) @ t.P - eye),
        "p_co_isometry": opnorm(t.P @ adj(t.P) - eye),
        "s_residuals": s_res,
        "max_s_residual": max(s_res),
    }


@dataclass
class GammaReport:
    n: int
    structural: dict[str, object]
    recursive: Certificate
    pencils: list[PencilCertificate]
    vn: Certificate
    fo: FOTuple | None
    fo_error: str | None
    p_class: asy.ContractionClass
    gamma_unitary: Verdict
    gamma_isometry: Verdict
    membership: Verdict
    labels: list[str] = field(default_factory=list)

    @property
    def falsified(self) -> bool:
        return self.membership is Verdict.FALSIFIED


def _structure_verdict(p_ok: bool, s_ok: bool, recursive: Certificate, membership: Verdict) -> Verdict:
    if not (p_ok and s_ok) or recursive.falsified or membership is Verdict.FALSIFIED:
        return Verdict.FALSIFIED
    if recursive.verdict is Verdict.CERTIFIED:
        return Verdict.CERTIFIED
    return Verdict.NO_VIOLATION


def classify_gamma(t: GammaTuple, tol: Tolerances = DEFAULT_TOL, budget: Budget | None = None) -> GammaReport:
    budget = budget or Budget()
    structural = structural_residuals(t)
    recursive = recursive_certificate(t, tol, budget)
    pencils = pencil_certificates(t, budget.circle_grid, tol, budget.pencil_radii)
    vn = vn_falsifier_gamma(t, budget.max_degree, budget.trials, budget.seed, samples=budget.vn_samples)
    try:
        fo, fo_error = fo_tuple(t, tol, radius_grid=budget.radius_grid), None
    except UnsolvableError as exc:
        fo, fo_error = None, str(exc)
    p_class = asy.classify_contraction(t.P, tol, budget.max_doublings)

    falsified = vn.falsified or fo_error is not None or any(p.verdict is Verdict.FALSIFIED for p in pencils)
    if fo is not None and min(fo.radius_margins) < -tol.psd_slack:
        falsified = True
    membership = Verdict.FALSIFIED if falsified else Verdict.NO_VIOLATION

    s_ok = structural["max_s_residual"] <= tol.equality
    unitary = _structure_verdict(
        structural["p_isometry"] <= tol.equality and structural["p_co_isometry"] <= tol.equality,
        s_ok,
        recursive,
        membership,
    )
    isometry = _structure_verdict(structural["p_isometry"] <= tol.equality, s_ok, recursive, membership)

    labels = []
    if membership is Verdict.FALSIFIED:
        labels.append("gamma-contraction: falsified")
    else:
        labels.append("gamma-contraction: no violation found")
    if unitary is not Verdict.FALSIFIED:
        labels.append("gamma-unitary: structural pass")
    elif isometry is not Verdict.FALSIFIED:
        labels.append("gamma-isometry: structural pass")
    for flag in ("unitary", "isometry", "co_isometry", "cnu", "strongly_stable", "weakly_stable", "pure", "c00", "identity", "completely_non_identity"):
        if getattr(p_class, flag):
            labels.append(f"P {flag}")
    return GammaReport(
        t.n, structural, recursive, pencils, vn, fo, fo_error, p_class, unitary, isometry, membership, labels
    )


def _restricted_gamma(ops: dict[str, np.ndarray], P: np.ndarray, tol: Tolerances, max_doublings: int):
    names = sorted((k for k in ops if k != "P"), key=lambda k: int(k[1:]))
    t = GammaTuple([ops[k] for k in names], P)
    structural = structural_residuals(t)
    p_class = asy.classify_contraction(P, tol, max_doublings)
    unitary_pass = (
        structural["p_isometry"] <= tol.equality
        and structural["p_co_isometry"] <= tol.equality
        and structural["max_s_residual"] <= tol.equality
    )
    isometry_pass = structural["p_isometry"] <= tol.equality and structural["max_s_residual"] <= tol.equality
    return {
        "structural": structural,
        "gamma_unitary_structural": unitary_pass,
        "gamma_isometry_structural": isometry_pass,
        "p_class": p_class,
    }


def decompose_gamma(
    t: GammaTuple,
    scheme: str,
    tol: Tolerances = DEFAULT_TOL,
    max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS,
) -> DecompositionReport:
    ops = {f"S{i}": s for i, s in enumerate(t.S, start=1)}
    return decompose_tuple(ops, t.P, scheme, tol, max_doublings, _restricted_gamma, family="gamma")
