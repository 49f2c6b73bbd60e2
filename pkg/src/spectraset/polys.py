"""
Sampled von Neumann tests: compare ``||f(T)||`` with the sup of ``|f|`` on a domain.

The domain sup is estimated from parametrized boundary samples plus
``anchor`` points (joint eigenvalues pushed into the domain).  A trial whose
ratio exceeds ``1 + rtol`` gets its sup re-estimated by local maximization from
the best samples before it is reported, so a falsification means the ratio
survived both the dense sample and the refinement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.optimize
from scipy.stats import qmc

from .linalg import Certificate, Verdict, opnorm


def monomial_exponents(nvars: int, degree: int) -> list[tuple[int, ...]]:
    exps = [e for e in itertools.product(range(degree + 1), repeat=nvars) if sum(e) <= degree]
    exps.sort(key=lambda e: (sum(e), e))
    return exps


def matrix_monomials(mats: list[np.ndarray], exps: list[tuple[int, ...]]) -> np.ndarray:
    """Stack of ``T^e`` for every exponent tuple (operators commute, so order is free)."""
    d = mats[0].shape[0]
    cache: dict[tuple[int, ...], np.ndarray] = {tuple([0] * len(mats)): np.eye(d, dtype=complex)}
    for e in exps:
        if e in cache:
            continue
        j = next(k for k, ek in enumerate(e) if ek > 0)
        prev = list(e)
        prev[j] -= 1
        cache[e] = cache[tuple(prev)] @ mats[j]
    return np.stack([cache[e] for e in exps])


def point_monomials(points: np.ndarray, exps: list[tuple[int, ...]]) -> np.ndarray:
    E = np.array(exps, dtype=int)
    out = np.ones((points.shape[0], len(exps)), dtype=complex)
    for j in range(points.shape[1]):
        powers = points[:, j : j + 1] ** np.arange(E[:, j].max() + 1)
        out *= powers[:, E[:, j]]
    return out


@dataclass
class Domain:
    """
    Sample description of a compact set for sup estimates.

    ``param_map`` sends an ``(m, q)`` array of real parameters to ``(m, nvars)``
    points of the set; ``params`` are the initial parameter samples; ``anchors``
    are extra points known to lie in the set.
    """

    nvars: int
    param_map: Callable[[np.ndarray], np.ndarray]
    params: np.ndarray
    anchors: np.ndarray

    def points(self) -> np.ndarray:
        pts = self.param_map(self.params)
        if self.anchors.size:
            pts = np.vstack([pts, self.anchors])
        return pts


def sobol_params(dim: int, count: int, seed: int, scale: float = 2 * np.pi) -> np.ndarray:
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    return scale * sampler.random_base2(m)


def _refined_sup(domain: Domain, coef: np.ndarray, exps, start_idx: np.ndarray) -> float:
    def neg_abs(theta):
        val = point_monomials(domain.param_map(theta[None, :]), exps) @ coef
        return -float(np.abs(val[0]))

    best = 0.0
    for k in start_idx:
        res = scipy.optimize.minimize(
            neg_abs, domain.params[k], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000}
        )
        best = max(best, -res.fun)
    return best


def random_polynomial(rng: np.random.Generator, exps, max_degree: int) -> np.ndarray:
    degree = int(rng.integers(1, max_degree + 1))
    coef = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
    keep = np.array([sum(e) <= degree for e in exps]) & (rng.random(len(exps)) < 0.6)
    keep[next(i for i, e in enumerate(exps) if sum(e) == degree)] = True
    coef = np.where(keep, coef, 0.0)
    return coef / np.linalg.norm(coef)


def von_neumann_falsifier(
    name: str,
    mats: list[np.ndarray],
    domain: Domain,
    max_degree: int,
    trials: int,
    seed: int,
    rtol: float = 1e-6,
    probes: list[np.ndarray] | None = None,
) -> Certificate:
    """
    Random-polynomial search for ``||f(T)|| > (1 + rtol) sup |f|``.

    ``probes`` are fixed coefficient vectors tried before the random ones
    (the constant and coordinate functions are always included).
    """
    if max_degree < 1:
        raise ValueError("max_degree must be at least 1")
    exps = monomial_exponents(domain.nvars, max_degree)
    mono_T = matrix_monomials(mats, exps)
    points = domain.points()
    mono_pts = point_monomials(points, exps)
    n_param = domain.params.shape[0]

    fixed = []
    for j in range(len(exps)):
        if sum(exps[j]) <= 1:
            c = np.zeros(len(exps), dtype=complex)
            c[j] = 1.0
            fixed.append(c)
    fixed.extend(probes or [])
    rng = np.random.default_rng(seed)
    coefs = fixed + [random_polynomial(rng, exps, max_degree) for _ in range(trials)]

    worst_ratio = 0.0
    worst = None
    for coef in coefs:
        op_norm = opnorm(np.tensordot(coef, mono_T, axes=1))
        vals = np.abs(mono_pts @ coef)
        sup = float(vals.max())
        if sup <= 0.0:
            ratio = np.inf if op_norm > 0 else 1.0
        else:
            ratio = op_norm / sup
        if ratio > 1.0 + rtol and sup > 0.0:
            starts = np.argsort(vals[:n_param])[-4:]
            sup = max(sup, _refined_sup(domain, coef, exps, starts))
            ratio = op_norm / sup
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst = (coef, op_norm, sup)
        if ratio > 1.0 + rtol:
            break

    coef, op_norm, sup = worst
    verdict = Verdict.FALSIFIED if worst_ratio > 1.0 + rtol else Verdict.NO_VIOLATION
    witness = [
        {"exponents": list(e), "coefficient": [float(c.real), float(c.imag)]}
        for e, c in zip(exps, coef)
        if c != 0
    ]
    return Certificate(
        name,
        verdict,
        {
            "max_ratio": float(worst_ratio),
            "operator_norm": float(op_norm),
            "sampled_sup": float(sup),
            "polynomials_tried": len(coefs),
            "domain_samples": int(points.shape[0]),
            "rtol": rtol,
            "witness_polynomial": witness,
        },
    )
