"""
Orthogonal decompositions of a single contraction.

Seven schemes are provided, keyed by name in :data:`SCHEMES`:

``canonical``        unitary part plus completely non-unitary part
``levan``            shift part plus completely non-isometric part (c.n.u input)
``levan_invariant``  maximal isometric invariant subspace plus its complement (c.n.u input)
``levan3``           stable / intermediate / isometric three-way split (c.n.u input)
``kubrusly``         stable / shift / unitary parts read off the strong limits
``identity``         ``Ker(I - P)`` plus the closure of ``Ran(I - P)``
``foguel``           weakly stable part plus unitary part

Finite dimension forces every shift-type slot to be ``{0}``.  Those slots are
still computed and reported so the report shape is the same as in the infinite
dimensional statements; a nonzero result is raised as a numerical anomaly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import asymptotics as asy
from .errors import HypothesisError, InvalidInputError, NumericalAnomalyError
from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    adj,
    as_matrix,
    complement,
    intersect,
    invariance_residual,
    kernel_basis,
    opnorm,
    range_basis,
    subspace_gap,
)

REDUCING = "reducing"
INVARIANT = "invariant"
CO_INVARIANT = "co-invariant"


@dataclass
class Part:
    label: str
    subspace: Subspace
    kind: str = REDUCING
    cls: asy.ContractionClass | None = None

    @property
    def dim(self) -> int:
        return self.subspace.dim


@dataclass
class ScalarDecomposition:
    scheme: str
    parts: list[Part]
    residuals: dict[str, float] = field(default_factory=dict)
    refinements: dict[str, list[Part]] = field(default_factory=dict)
    evidence: dict[str, object] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def part(self, label: str) -> Part:
        for p in self.parts:
            if p.label == label:
                return p
        raise KeyError(label)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p.dim for p in self.parts)


def part_residual(P: np.ndarray, part: Part) -> float:
    """Block off-diagonal norm of ``P`` against the part frame, per the part kind."""
    fwd = invariance_residual(P, part.subspace)
    back = invariance_residual(adj(P), part.subspace)
    if part.kind == INVARIANT:
        return fwd
    if part.kind == CO_INVARIANT:
        return back
    return max(fwd, back)


def partition_defect(parts: list[Part], ambient_dim: int) -> dict[str, float]:
    """Pairwise overlap of the part frames and how far they are from spanning."""
    overlap = 0.0
    for i, a in enumerate(parts):
        for b in parts[i + 1 :]:
            if a.dim and b.dim:
                overlap = max(overlap, opnorm(adj(a.subspace.frame) @ b.subspace.frame))
    return {"overlap": overlap, "dimension_gap": float(ambient_dim - sum(p.dim for p in parts))}


def _finish(
    scheme: str,
    P: np.ndarray,
    parts: list[Part],
    tol: Tolerances,
    max_doublings: int,
    **extra,
) -> ScalarDecomposition:
    for part in parts:
        if part.dim:
            part.cls = asy.classify_contraction(part.subspace.restrict(P), tol, max_doublings)
    dec = ScalarDecomposition(scheme, parts, **extra)
    dec.residuals = {p.label: part_residual(P, p) for p in parts}
    dec.evidence.update(partition_defect(parts, P.shape[0]))
    return dec


def _prepare(P, tol: Tolerances, max_doublings: int, lim: asy.Limits | None):
    P = as_matrix(P, "P")
    asy.check_contraction(P, tol)
    return P, lim or asy.limits(P, tol, max_doublings)


def _require_cnu(P, tol, max_doublings, lim, scheme) -> None:
    unitary = asy.max_unitary_reducing(P, tol, max_doublings, lim)
    if not unitary.is_trivial:
        raise HypothesisError(
            f"{scheme} split needs a completely non-unitary contraction; "
            f"found a unitary part of dimension {unitary.dim}"
        )


def canonical_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    P, lim = _prepare(P, tol, max_doublings, lim)
    unitary = asy.max_unitary_reducing(P, tol, max_doublings, lim)
    return _finish(
        "canonical",
        P,
        [Part("unitary", unitary), Part("cnu", complement(unitary))],
        tol,
        max_doublings,
    )


def levan_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    P, lim = _prepare(P, tol, max_doublings, lim)
    _require_cnu(P, tol, max_doublings, lim, "levan")
    shift = asy.shift_subspace(lim, tol)
    if not shift.is_trivial:
        raise NumericalAnomalyError(f"nonzero c.n.u isometric part (dimension {shift.dim}) in finite dimension")
    return _finish(
        "levan",
        P,
        [Part("cnu_isometry", shift), Part("cni", complement(shift))],
        tol,
        max_doublings,
        notes=["c.n.u isometric part is {0} in finite dimension"],
    )


def levan_invariant_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    P, lim = _prepare(P, tol, max_doublings, lim)
    _require_cnu(P, tol, max_doublings, lim, "levan_invariant")
    iso = kernel_basis(np.eye(P.shape[0]) - lim.A, tol)
    if not iso.is_trivial:
        raise NumericalAnomalyError(
            f"nonzero isometric invariant subspace (dimension {iso.dim}) for a c.n.u matrix"
        )
    return _finish(
        "levan_invariant",
        P,
        [Part("cnu_isometry", iso, INVARIANT), Part("cnu_adjoint", complement(iso), CO_INVARIANT)],
        tol,
        max_doublings,
        notes=["isometric invariant part is {0} in finite dimension"],
    )


def orbit_budget(dim: int, tol: Tolerances) -> int:
    return max(1, math.ceil(2 * dim * math.log(1.0 / tol.equality)))


def _orbit_report(P: np.ndarray, A: np.ndarray, part: Part, budget: int) -> dict[str, float]:
    if part.dim == 0:
        return {"budget_norm_max": 0.0, "limit_min": 0.0, "limit_max": 0.0}
    X = part.subspace.frame
    Pk = np.linalg.matrix_power(P, budget)
    budget_norms = np.linalg.norm(Pk @ X, axis=0)
    limit_sq = np.einsum("ij,ij->j", X.conj(), A @ X).real
    limit = np.sqrt(np.clip(limit_sq, 0.0, None))
    return {
        "budget_norm_max": float(budget_norms.max()),
        "limit_min": float(limit.min()),
        "limit_max": float(limit.max()),
    }


def levan3_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    """
    Stable / intermediate / isometric split of a c.n.u contraction.

    Orbit-norm predicates (limit 0, limit below the norm, limit equal to the
    norm) are spot checked on every frame vector; the limits come from the
    strong limit and the finite power ``orbit_budget`` is reported next to them.
    """
    P, lim = _prepare(P, tol, max_doublings, lim)
    _require_cnu(P, tol, max_doublings, lim, "levan3")
    n = P.shape[0]
    stable = kernel_basis(lim.A, tol)
    iso = kernel_basis(np.eye(n) - lim.A, tol)
    rest = complement(iso)
    # complement of the stable part taken inside the complement of the isometric part
    inner = adj(rest.frame) @ stable.frame
    inner_perp = complement(Subspace.span(inner, rest.dim, tol)) if rest.dim else Subspace.zero(0)
    middle = Subspace(rest.frame @ inner_perp.frame) if rest.dim else Subspace.zero(n)
    parts = [
        Part("strongly_stable", stable, INVARIANT),
        Part("intermediate", middle, CO_INVARIANT),
        Part("isometric", iso, INVARIANT),
    ]
    budget = orbit_budget(n, tol)
    orbits = {p.label: _orbit_report(P, lim.A, p, budget) for p in parts}
    thresh = math.sqrt(tol.equality)
    predicates = {
        "strongly_stable": orbits["strongly_stable"]["limit_max"] <= thresh,
        "intermediate": middle.dim == 0 or orbits["intermediate"]["limit_max"] < 1.0 - thresh,
        "isometric": iso.dim == 0 or abs(orbits["isometric"]["limit_min"] - 1.0) <= thresh,
    }
    return _finish(
        "levan3",
        P,
        parts,
        tol,
        max_doublings,
        evidence={"orbit_budget": budget, "orbits": orbits, "orbit_predicates": predicates},
    )


def kubrusly_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    P, lim = _prepare(P, tol, max_doublings, lim)
    n = P.shape[0]
    eye = np.eye(n)
    bound = 10 * tol.equality
    if lim.idempotence_defect > bound:
        raise HypothesisError(f"strong limit is not idempotent (defect {lim.idempotence_defect:.3e})")
    ker_a = kernel_basis(lim.A, tol)
    ker_i_a = kernel_basis(eye - lim.A, tol)
    ker_a_star = kernel_basis(lim.A_star, tol)
    ker_i_a_star = kernel_basis(eye - lim.A_star, tol)
    shift = intersect(ker_i_a, ker_a_star, tol)
    unitary = intersect(ker_i_a, ker_i_a_star, tol)
    if not shift.is_trivial:
        raise NumericalAnomalyError(f"nonzero unilateral shift part (dimension {shift.dim}) in finite dimension")
    parts = [Part("strongly_stable", ker_a), Part("shift", shift), Part("unitary", unitary)]
    dec = _finish("kubrusly", P, parts, tol, max_doublings)
    dec.evidence["idempotence_defect"] = lim.idempotence_defect
    dec.evidence["co_idempotence_defect"] = lim.co_idempotence_defect
    dec.evidence["limit_asymmetry"] = opnorm(lim.A - lim.A_star)

    if lim.co_idempotence_defect <= bound:
        c00 = intersect(ker_a, ker_a_star, tol)
        backward = intersect(ker_a, ker_i_a_star, tol)
        refined = [
            Part("c00", c00),
            Part("backward_shift", backward),
            Part("shift", shift),
            Part("unitary", unitary),
        ]
        dec.refinements["c00"] = _finish("kubrusly", P, refined, tol, max_doublings).parts
    if opnorm(lim.A - lim.A_star) <= bound:
        two = [Part("c00", ker_a), Part("unitary", ker_i_a)]
        dec.refinements["two_part"] = _finish("kubrusly", P, two, tol, max_doublings).parts
    dec.notes.append("shift and backward-shift slots are {0} in finite dimension")
    return dec


def identity_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    P = as_matrix(P, "P")
    asy.check_contraction(P, tol)
    eye = np.eye(P.shape[0])
    fixed = kernel_basis(eye - P, tol)
    fixed_adj = kernel_basis(eye - adj(P), tol)
    moving = complement(fixed)
    dec = _finish(
        "identity",
        P,
        [Part("identity", fixed), Part("completely_non_identity", moving)],
        tol,
        max_doublings,
    )
    # Ker(I - P) = Ker(I - P*) for contractions; Ran(I - P) closure is the complement
    dec.evidence["fixed_space_mismatch"] = subspace_gap(fixed, fixed_adj)
    dec.evidence["range_mismatch"] = subspace_gap(moving, range_basis(eye - P, tol))
    return dec


def foguel_split(
    P, tol: Tolerances = DEFAULT_TOL, max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS, lim=None
) -> ScalarDecomposition:
    P, lim = _prepare(P, tol, max_doublings, lim)
    weak = asy.foguel_subspace(P, tol, max_doublings, lim)
    dec = _finish(
        "foguel",
        P,
        [Part("weakly_stable", weak), Part("unitary", complement(weak))],
        tol,
        max_doublings,
        notes=["weak stability decided through strong stability of the c.n.u part (finite dimension)"],
    )
    dec.evidence["weak_part_spectral_radius"] = asy.spectral_radius(weak.restrict(P)) if weak.dim else 0.0
    return dec


SCHEMES: dict[str, Callable[..., ScalarDecomposition]] = {
    "canonical": canonical_split,
    "levan": levan_split,
    "kubrusly": kubrusly_split,
    "identity": identity_split,
    "levan_invariant": levan_invariant_split,
    "levan3": levan3_split,
    "foguel": foguel_split,
}


def scalar_decomposition(P, scheme: str, tol: Tolerances = DEFAULT_TOL, **kwargs) -> ScalarDecomposition:
    try:
        split = SCHEMES[scheme]
    except KeyError:
        raise InvalidInputError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}") from None
    return split(P, tol, **kwargs)


# ---------------------------------------------------------------------------
# tuple level: how the parts of P sit against the other operators of a tuple

LEVAN_FAMILY = ("levan", "levan_invariant", "levan3")

STATUS_REDUCES = "reduces all"
STATUS_INVARIANT = "invariant only"
STATUS_CO_INVARIANT = "adjoint-invariant only"
STATUS_VIOLATED = "violated"

_EXPECTED = {REDUCING: STATUS_REDUCES, INVARIANT: STATUS_INVARIANT, CO_INVARIANT: STATUS_CO_INVARIANT}


@dataclass
class PartReport:
    label: str
    subspace: Subspace
    kind: str
    status: str
    ok: bool
    residuals: dict[str, tuple[float, float]]
    p_class: asy.ContractionClass | None = None
    restricted: dict[str, object] | None = None
    description: str = ""

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def reduces(self, name: str, tol: Tolerances) -> bool:
        fwd, back = self.residuals[name]
        return fwd <= tol.equality and back <= tol.equality


@dataclass
class DecompositionReport:
    scheme: str
    family: str
    hypotheses: dict[str, dict[str, object]]
    parts: list[PartReport]
    scalar: ScalarDecomposition | None = None
    candidates: list[PartReport] = field(default_factory=list)
    refinements: dict[str, list[PartReport]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def hypothesis_violated(self) -> bool:
        return any(not h["satisfied"] for h in self.hypotheses.values())

    def part(self, label: str) -> PartReport:
        for p in self.parts:
            if p.label == label:
                return p
        raise KeyError(label)

    def candidate(self, label: str) -> PartReport:
        for p in self.candidates:
            if p.label == label:
                return p
        raise KeyError(label)


def _classify_status(residuals: dict[str, tuple[float, float]], tol: Tolerances) -> str:
    fwd = max((r[0] for r in residuals.values()), default=0.0)
    back = max((r[1] for r in residuals.values()), default=0.0)
    if fwd <= tol.equality and back <= tol.equality:
        return STATUS_REDUCES
    if fwd <= tol.equality:
        return STATUS_INVARIANT
    if back <= tol.equality:
        return STATUS_CO_INVARIANT
    return STATUS_VIOLATED


def _status_meets(status: str, kind: str) -> bool:
    if status == STATUS_REDUCES:
        return True
    return status == _EXPECTED[kind]


def _part_report(
    label: str,
    U: Subspace,
    kind: str,
    ops: dict[str, np.ndarray],
    P: np.ndarray,
    tol: Tolerances,
    max_doublings: int,
    restricted_check,
    p_class=None,
    description: str = "",
) -> PartReport:
    residuals = {
        name: (invariance_residual(X, U), invariance_residual(adj(X), U)) for name, X in {**ops, "P": P}.items()
    }
    op_residuals = {k: v for k, v in residuals.items() if k != "P"}
    status = _classify_status(op_residuals, tol)
    restricted = None
    if U.dim and restricted_check is not None and status != STATUS_VIOLATED:
        frame = U.frame
        restricted = restricted_check(
            {k: adj(frame) @ X @ frame for k, X in ops.items()}, adj(frame) @ P @ frame, tol, max_doublings
        )
    return PartReport(
        label,
        U,
        kind,
        status,
        _status_meets(status, kind),
        residuals,
        p_class,
        restricted,
        description,
    )


def decompose_tuple(
    ops: dict[str, np.ndarray],
    P: np.ndarray,
    scheme: str,
    tol: Tolerances = DEFAULT_TOL,
    max_doublings: int = asy.DEFAULT_MAX_DOUBLINGS,
    restricted_check=None,
    family: str = "gamma",
) -> DecompositionReport:
    """
    Decompose ``P`` by ``scheme`` and measure every other operator against the parts.

    Scheme hypotheses are evaluated first and recorded; a failed hypothesis
    never stops the analysis.  For the Levan-type schemes the report also
    lists candidate subspaces side by side (the reducing and the invariant
    readings of the isometric part, and the one-step isometric subspace
    ``Ker(I - P*P)`` that stands in for them at finite truncation).
    """
    if scheme not in SCHEMES:
        raise InvalidInputError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
    P = as_matrix(P, "P")
    asy.check_contraction(P, tol)
    lim = asy.limits(P, tol, max_doublings)
    n = P.shape[0]
    eye = np.eye(n)

    hypotheses: dict[str, dict[str, object]] = {}
    notes: list[str] = []
    if scheme in LEVAN_FAMILY:
        for name, X in ops.items():
            value = opnorm(adj(X) @ P - P @ adj(X))
            hypotheses[f"adjoint_commutes:{name}"] = {"value": value, "satisfied": value <= tol.equality}
        unitary = asy.max_unitary_reducing(P, tol, max_doublings, lim)
        hypotheses["cnu"] = {"value": float(unitary.dim), "satisfied": unitary.is_trivial}
    if scheme == "kubrusly":
        value = lim.idempotence_defect
        hypotheses["idempotent_limit"] = {"value": value, "satisfied": value <= 10 * tol.equality}

    scalar = None
    parts: list[PartReport] = []
    refinements: dict[str, list[PartReport]] = {}
    try:
        scalar = SCHEMES[scheme](P, tol, max_doublings, lim)
    except (HypothesisError, NumericalAnomalyError) as exc:
        notes.append(f"scalar {scheme} split unavailable: {exc}")
    if scalar is not None:
        notes.extend(scalar.notes)
        parts = [
            _part_report(p.label, p.subspace, p.kind, ops, P, tol, max_doublings, restricted_check, p.cls)
            for p in scalar.parts
        ]
        for key, rparts in scalar.refinements.items():
            refinements[key] = [
                _part_report(p.label, p.subspace, p.kind, ops, P, tol, max_doublings, restricted_check, p.cls)
                for p in rparts
            ]

    candidates: list[PartReport] = []
    if scheme in LEVAN_FAMILY:
        spec = [
            ("reducing_isometric", asy.shift_subspace(lim, tol), "Ker(I - A) ∩ Ker(A_*): reducing isometric part"),
            ("isometric_invariant", kernel_basis(eye - lim.A, tol), "Ker(I - A): maximal isometric invariant subspace"),
            (
                "isometric_one_step",
                kernel_basis(eye - adj(P) @ P, tol),
                "Ker(I - P*P): vectors P maps isometrically; finite-truncation proxy for the isometric part",
            ),
        ]
        for label, U, desc in spec:
            candidates.append(
                _part_report(label, U, REDUCING, ops, P, tol, max_doublings, None, description=desc)
            )
        if any(not h["satisfied"] for h in hypotheses.values()):
            flagged = [c.label for c in candidates if c.status != STATUS_REDUCES]
            if flagged:
                notes.append("hypothesis violated; non-reducing candidate subspaces: " + ", ".join(flagged))
    return DecompositionReport(scheme, family, hypotheses, parts, scalar, candidates, refinements, notes)
