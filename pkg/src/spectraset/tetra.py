"""
Commuting triples ``(A, B, P)`` over the closed tetrablock.

Point membership uses the fact that ``1 - z x1 - w x2 + z w x3`` is affine in
``z``: for fixed ``w`` its minimum modulus over the closed ``z``-disc is
``max(|a| - |b|, 0)`` with ``a = 1 - w x2`` and ``b = x1 - w x3``.  Only ``w``
is sampled, then refined locally.

The von Neumann test samples the distinguished boundary, parametrized as
``(conj(b) p, b, p)`` with ``|b| <= 1``, ``|p| = 1`` (equivalently
``(u11, u22, det U)`` for 2x2 unitaries ``U``), and adds points from the
embedded symmetrized bidisc, from 2x2 contractions and from rejection sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import asymptotics as asy
from .decompose import DecompositionReport, decompose_tuple
from .errors import InvalidInputError, UnsolvableError
from .gamma import (
    Budget,
    DefectSolution,
    GammaTuple,
    _anchor_points,
    defect_solve,
    gamma_points_from_roots,
    pencil_certificates,
)
from .linalg import (
    DEFAULT_TOL,
    Certificate,
    Tolerances,
    Verdict,
    adj,
    as_matrix,
    commutator_norm,
    opnorm,
)
from .polys import Domain, sobol_params, von_neumann_falsifier

E_NAMES = ("A", "B", "P")


@dataclass
class ETriple:
    A: np.ndarray
    B: np.ndarray
    P: np.ndarray
    commutator_norm: float = 0.0
    provenance: str | None = None

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    @property
    def matrices(self) -> list[np.ndarray]:
        return [self.A, self.B, self.P]

    def adjoint(self) -> "ETriple":
        return ETriple(adj(self.A), adj(self.B), adj(self.P), self.commutator_norm, self.provenance)


def make_e_triple(A, B, P, tol: Tolerances = DEFAULT_TOL, provenance: str | None = None) -> ETriple:
    mats = [as_matrix(M, name) for M, name in zip((A, B, P), E_NAMES)]
    if len({M.shape for M in mats}) != 1:
        raise InvalidInputError("A, B and P must have the same dimension")
    comm = max(commutator_norm(mats[i], mats[j]) for i in range(3) for j in range(i + 1, 3))
    scale = max(1.0, max(opnorm(M) for M in mats) ** 2)
    if comm > tol.equality * scale:
        raise InvalidInputError(f"A, B, P do not commute (commutator norm {comm:.3e})")
    asy.check_contraction(mats[2], tol)
    return ETriple(*mats, commutator_norm=comm, provenance=provenance)


# ---------------------------------------------------------------- points


@dataclass
class EMembership:
    """Grid-based verdict; ``margin`` is the smallest value of the signed gap seen."""

    verdict: Verdict
    margin: float
    witness_z: complex
    witness_w: complex
    grid: int

    @property
    def falsified(self) -> bool:
        return self.verdict is Verdict.FALSIFIED


def _signed_gap(x1: complex, x2: complex, x3: complex, w: np.ndarray) -> np.ndarray:
    return np.abs(1 - w * x2) - np.abs(x1 - w * x3)


def _w_grid(grid: int) -> np.ndarray:
    # radii crowd toward the unit circle, where the minimum usually sits
    radii = 1.0 - (np.linspace(0.0, 1.0, grid // 4 + 1) ** 2)
    angles = 2 * np.pi * np.arange(grid) / grid
    return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


def e_membership(x1: complex, x2: complex, x3: complex, grid: int = 64, tol: float = 1e-10, closed: bool = False):
    """
    Test ``1 - z x1 - w x2 + z w x3 != 0`` on the closed bidisc.

    Open mode (``closed=False``) asks whether the point lies in the open
    tetrablock and falsifies when the minimal modulus is ``<= tol``.  Closed
    mode falsifies only when the signed gap ``|a| - |b|`` drops below
    ``-tol``, i.e. when a zero lies strictly inside the bidisc.
    """
    if grid < 32:
        raise InvalidInputError("grid must be at least 32")
    x1, x2, x3 = complex(x1), complex(x2), complex(x3)
    ws = _w_grid(grid)
    h = _signed_gap(x1, x2, x3, ws)
    k = int(np.argmin(h))

    def f(v):
        w = complex(v[0], v[1])
        if abs(w) > 1:
            w /= abs(w)
        return float(_signed_gap(x1, x2, x3, np.array([w]))[0])

    res = scipy.optimize.minimize(
        f, [ws[k].real, ws[k].imag], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15}
    )
    w = complex(res.x[0], res.x[1])
    w = w / abs(w) if abs(w) > 1 else w
    hmin = float(_signed_gap(x1, x2, x3, np.array([w]))[0])
    if hmin > h[k]:
        w, hmin = complex(ws[k]), float(h[k])
    a, b = 1 - w * x2, x1 - w * x3
    # z minimizing |a - z b| over the closed disc
    if abs(b) == 0:
        z = 0j
    elif abs(a) <= abs(b):
        z = a / b
    else:
        z = a * abs(b) / (abs(a) * b)
    if closed:
        falsified = hmin < -tol
        margin = hmin
    else:
        margin = max(hmin, 0.0)
        falsified = margin <= tol
    return EMembership(Verdict.FALSIFIED if falsified else Verdict.NO_VIOLATION, margin, complex(z), w, grid)


def e_boundary_points(b: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Distinguished boundary points ``(conj(b) p, b, p)``."""
    return np.stack([np.conj(b) * p, b, p], axis=1)


def _boundary_map(theta: np.ndarray) -> np.ndarray:
    # theta columns: arg p, arg b, radius parameter; radius (1 - cos(t/2)) / 2 keeps |b| <= 1 for any t
    r = (1.0 - np.cos(theta[:, 2] / 2.0)) / 2.0
    r = np.sqrt(np.clip(r, 0.0, 1.0))
    return e_boundary_points(r * np.exp(1j * theta[:, 1]), np.exp(1j * theta[:, 0]))


def gamma_curve_points(roots: np.ndarray) -> np.ndarray:
    """``(s/2, s/2, p)`` for ``(s, p) = pi_2(roots)``."""
    sp = gamma_points_from_roots(roots)
    return np.stack([sp[:, 0] / 2, sp[:, 0] / 2, sp[:, 1]], axis=1)


def contraction_points(M: np.ndarray) -> np.ndarray:
    """``(m11, m22, det M)`` for a stack of 2x2 contractions."""
    return np.stack([M[:, 0, 0], M[:, 1, 1], M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]], axis=1)


def random_contraction_points(rng: np.random.Generator, count: int) -> np.ndarray:
    X = rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2))
    norms = np.linalg.norm(X, ord=2, axis=(1, 2))
    return contraction_points(X / norms[:, None, None] * rng.random(count)[:, None, None] ** 0.25)


def rejection_points(rng: np.random.Generator, count: int, grid: int = 32) -> np.ndarray:
    """Uniform points of the unit polydisc kept when membership is not falsified."""
    raw = np.sqrt(rng.random((count, 3))) * np.exp(2j * np.pi * rng.random((count, 3)))
    keep = [x for x in raw if not e_membership(*x, grid=grid).falsified]
    return np.array(keep, dtype=complex).reshape(-1, 3)


def _triple_anchors(mats: list[np.ndarray], seed: int) -> np.ndarray:
    """
    Joint eigenvalues of the triple, each realized as ``(m11, m22, det)`` of a
    2x2 contraction so that the anchor is a genuine point of the closed set.
    """
    joint = _anchor_points(mats, seed)
    out = []
    for a, b, p in joint:
        a, b = complex(a), complex(b)
        c = a * b - p
        best = None
        for phase in np.exp(2j * np.pi * np.arange(8) / 8):
            x = np.sqrt(abs(c)) * phase
            y = c / x if x != 0 else 0.0
            M = np.array([[a, x], [y, b]])
            nrm = np.linalg.norm(M, 2)
            if best is None or nrm < best[0]:
                best = (nrm, M)
        M = best[1] / max(1.0, best[0])
        out.append(contraction_points(M[None])[0])
    return np.array(out, dtype=complex).reshape(-1, 3)


def e_domain(t: ETriple, samples: int, seed: int, extra: int = 512) -> Domain:
    rng = np.random.default_rng(seed)
    roots = np.sqrt(rng.random((extra, 2))) * np.exp(2j * np.pi * rng.random((extra, 2)))
    anchors = np.vstack(
        [
            _triple_anchors(t.matrices, seed),
            gamma_curve_points(roots),
            random_contraction_points(rng, extra),
            rejection_points(rng, extra // 8),
        ]
    )
    return Domain(nvars=3, param_map=_boundary_map, params=sobol_params(3, samples, seed), anchors=anchors)


def vn_falsifier_e(
    t: ETriple, max_degree: int = 3, trials: int = 200, seed: int = 0, rtol: float = 1e-6, samples: int = 4096
) -> Certificate:
    """Random polynomials in three variables checked against the sampled sup over the closed tetrablock."""
    return von_neumann_falsifier("vn_e", t.matrices, e_domain(t, samples, seed), max_degree, trials, seed, rtol)


# ---------------------------------------------------------------- operators


def gamma_to_e(S, P, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> tuple[ETriple, list[str]]:
    """``(S/2, S/2, P)``; warnings list any failed Gamma_2 pencil."""
    S = as_matrix(S, "S")
    P = as_matrix(P, "P")
    if commutator_norm(S, P) > tol.equality * max(1.0, opnorm(S) * opnorm(P)):
        raise InvalidInputError("S and P do not commute")
    warnings = []
    if check:
        for c in pencil_certificates(GammaTuple([S], P), tol=tol):
            if c.verdict is Verdict.FALSIFIED:
                warnings.append(f"input fails the Gamma_2 pencil (min eigenvalue {c.min_eig:.3e})")
    return make_e_triple(S / 2, S / 2, P, tol, provenance="image of a Gamma_2 pair"), warnings


@dataclass
class FundamentalPair:
    defect_dim: int
    F1: np.ndarray
    F2: np.ndarray
    residuals: tuple[float, float]
    frame: np.ndarray
    condition: float | None


def fundamental_ops(t: ETriple, tol: Tolerances = DEFAULT_TOL, rotation: np.ndarray | None = None) -> FundamentalPair:
    """Solve ``A - B*P = D F1 D`` and ``B - A*P = D F2 D`` on the defect space."""
    rhs = [t.A - adj(t.B) @ t.P, t.B - adj(t.A) @ t.P]
    sol: DefectSolution = defect_solve(t.P, rhs, tol, rotation)
    return FundamentalPair(
        sol.defect_dim, sol.solutions[0], sol.solutions[1], tuple(sol.residuals), sol.frame, sol.condition
    )


def structural_residuals(t: ETriple) -> dict[str, float]:
    eye = np.eye(t.dim)
    return {
        "p_isometry": opnorm(adj(t.P) @ t.P - eye),
        "p_co_isometry": opnorm(t.P @ adj(t.P) - eye),
        "b_norm": opnorm(t.B),
        "a_minus_bstar_p": opnorm(t.A - adj(t.B) @ t.P),
        # the same equality for the adjoint triple
        "astar_minus_b_pstar": opnorm(adj(t.A) - t.B @ adj(t.P)),
    }


@dataclass
class EReport:
    structural: dict[str, float]
    vn: Certificate | None
    fundamental: FundamentalPair | None
    fundamental_error: str | None
    p_class: asy.ContractionClass
    e_unitary: bool
    e_isometry: bool
    e_co_isometry: bool
    membership: Verdict
    labels: list[str] = field(default_factory=list)

    @property
    def falsified(self) -> bool:
        return self.membership is Verdict.FALSIFIED


def _structure_checks(s: dict[str, float], tol: Tolerances) -> tuple[bool, bool, bool]:
    b_ok = s["b_norm"] <= 1.0 + tol.equality
    iso = s["p_isometry"] <= tol.equality and b_ok and s["a_minus_bstar_p"] <= tol.equality
    co_iso = s["p_co_isometry"] <= tol.equality and b_ok and s["astar_minus_b_pstar"] <= tol.equality
    unitary = iso and s["p_co_isometry"] <= tol.equality
    return unitary, iso, co_iso


def classify_e(t: ETriple, tol: Tolerances = DEFAULT_TOL, budget: Budget | None = None, run_vn: bool = True) -> EReport:
    """
    Structural classes decided within tolerance, membership three valued.

    A triple is flagged an E-unitary when ``P`` is unitary, ``||B|| <= 1`` and
    ``A = B*P``; an E-isometry with ``P`` isometric instead; an E-co-isometry
    when the adjoint triple is an E-isometry.
    """
    budget = budget or Budget()
    s = structural_residuals(t)
    p_class = asy.classify_contraction(t.P, tol, budget.max_doublings)
    fundamental, err = None, None
    try:
        fundamental = fundamental_ops(t, tol)
    except UnsolvableError as exc:
        err = str(exc)
    vn = vn_falsifier_e(t, budget.max_degree, budget.trials, budget.seed, samples=budget.vn_samples) if run_vn else None
    falsified = err is not None or (vn is not None and vn.falsified)
    unitary, iso, co_iso = _structure_checks(s, tol)
    membership = Verdict.FALSIFIED if falsified else Verdict.NO_VIOLATION
    labels = ["e-contraction: falsified" if falsified else "e-contraction: no violation found"]
    for name, ok in (("e-unitary", unitary), ("e-isometry", iso), ("e-co-isometry", co_iso)):
        if ok and not falsified:
            labels.append(f"{name}: structural pass")
    for flag in ("unitary", "isometry", "co_isometry", "cnu", "strongly_stable", "weakly_stable", "pure", "c00",
                 "identity", "completely_non_identity"):
        if getattr(p_class, flag):
            labels.append(f"P {flag}")
    return EReport(s, vn, fundamental, err, p_class, unitary and not falsified, iso and not falsified,
                   co_iso and not falsified, membership, labels)


def _restricted_e(ops: dict[str, np.ndarray], P: np.ndarray, tol: Tolerances, max_doublings: int):
    t = ETriple(ops["A"], ops["B"], P)
    s = structural_residuals(t)
    unitary, iso, co_iso = _structure_checks(s, tol)
    return {
        "structural": s,
        "e_unitary_structural": unitary,
        "e_isometry_structural": iso,
        "e_co_isometry_structural": co_iso,
        "p_class": asy.classify_contraction(P, tol, max_doublings),
    }


def decompose_e(
    t: ETriple, scheme: str, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS
) -> DecompositionReport:
    return decompose_tuple({"A": t.A, "B": t.B}, t.P, scheme, tol, max_doublings, _restricted_e, family="e")
