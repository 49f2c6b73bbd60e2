"""
Command-line front end.

    spectraset analyze   TUPLE.json [flags]
    spectraset decompose TUPLE.json --scheme NAME [flags]
    spectraset generate  --spec SPEC [--out FILE]

Exit codes: 0 no violation, 1 falsified, 2 invalid input, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import enum
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .asymptotics import ContractionClass
from .decompose import SCHEMES, DecompositionReport, PartReport
from .errors import InvalidInputError, NonConvergenceError, SpectrasetError
from .gamma import Budget, GammaTuple, classify_gamma, decompose_gamma, make_gamma_tuple
from .generate import GenSpec, run_spec
from .linalg import Certificate, Subspace, Tolerances
from .tetra import ETriple, classify_e, decompose_e, make_e_triple

EXIT_OK, EXIT_FALSIFIED, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 1, 2, 3

ENV_TOL = {
    "rank": "SPECTRASET_TOL_RANK",
    "equality": "SPECTRASET_TOL_EQ",
    "psd_slack": "SPECTRASET_TOL_PSD_SLACK",
    "limit_conv": "SPECTRASET_TOL_LIMIT_CONV",
}


# ---------------------------------------------------------------- tuple files


def _encode_matrix(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _decode_matrix(data: Any, dim: int, name: str) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"matrix {name}: entries must be [re, im] pairs of numbers") from exc
    if arr.shape != (dim, dim, 2):
        raise InvalidInputError(f"matrix {name}: expected shape ({dim}, {dim}) of [re, im] pairs, got {arr.shape[:-1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"matrix {name}: non-finite entry")
    return arr[..., 0] + 1j * arr[..., 1]


def expected_names(n: int | None) -> list[str]:
    if n is None:
        return ["A", "B", "P"]
    return [f"S{i}" for i in range(1, n)] + ["P"]


def read_tuple(text: str) -> tuple[int | None, dict[str, np.ndarray]]:
    """Parse a tuple file; ``n`` is ``None`` for a tetrablock triple."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "dim" not in doc or "matrices" not in doc:
        raise InvalidInputError("tuple file needs 'dim' and 'matrices'")
    dim, n = doc["dim"], doc.get("n")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InvalidInputError("dim must be a positive integer")
    if n is not None and (not isinstance(n, int) or isinstance(n, bool) or n < 2):
        raise InvalidInputError("n must be an integer >= 2")
    mats = doc["matrices"]
    if not isinstance(mats, dict) or set(mats) != set(expected_names(n)):
        raise InvalidInputError(f"matrices must be exactly {expected_names(n)}")
    return n, {k: _decode_matrix(mats[k], dim, k) for k in expected_names(n)}


def write_tuple(n: int | None, mats: dict[str, np.ndarray]) -> str:
    """Canonical form: fixed key order, one matrix row per line, shortest float repr."""
    names = expected_names(n)
    dim = mats[names[0]].shape[0]
    head = f'{{\n  "dim": {dim},\n'
    if n is not None:
        head += f'  "n": {n},\n'
    blocks = []
    for name in names:
        rows = [json.dumps(r, separators=(", ", ": ")) for r in _encode_matrix(mats[name])]
        blocks.append(f'    "{name}": [\n      ' + ",\n      ".join(rows) + "\n    ]")
    return head + '  "matrices": {\n' + ",\n".join(blocks) + "\n  }\n}\n"


def tuple_to_text(obj: GammaTuple | ETriple) -> str:
    if isinstance(obj, ETriple):
        return write_tuple(None, {"A": obj.A, "B": obj.B, "P": obj.P})
    return write_tuple(obj.n, dict(zip(obj.names(), obj.matrices)))


# ---------------------------------------------------------------- reports


def jsonable(obj: Any) -> Any:
    """Convert report objects to JSON values; non-finite floats become ``null``."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Subspace):
        return {"dim": obj.dim, "basis": _encode_matrix(obj.frame) if obj.dim else []}
    if isinstance(obj, ContractionClass):
        return {"flags": obj.flags(), "witness": jsonable(obj.witness)}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return _encode_matrix(obj)
            return [jsonable(complex(z)) for z in obj.ravel()] if obj.ndim == 1 else jsonable(obj.tolist())
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj


def _cert(name: str, verdict, value_key: str, value: float, witness: Any = None, **extra) -> dict:
    out = {"name": name, "verdict": jsonable(verdict), value_key: jsonable(value)}
    if witness is not None:
        out["witness"] = jsonable(witness)
    out.update({k: jsonable(v) for k, v in extra.items()})
    return out


def _certificate(c: Certificate) -> dict:
    ev = dict(c.evidence)
    witness = ev.pop("witness_polynomial", None)
    key = "max_ratio" if "max_ratio" in ev else next(iter(ev), "value")
    return _cert(c.name, c.verdict, key, ev.pop(key, float("nan")), witness, evidence=ev)


def gamma_report(t: GammaTuple, tol: Tolerances, budget: Budget) -> tuple[dict, bool]:
    r = classify_gamma(t, tol, budget)
    certs = [
        _cert(
            f"pencil_{p.i}",
            p.verdict,
            "min_eig",
            p.min_eig,
            {"alpha": p.witness_alpha, "vector": p.witness_vector},
            grid=len(p.grid),
        )
        for p in r.pencils
    ]
    certs.append(_certificate(r.vn))
    certs.append(_certificate(r.recursive))
    if r.fo is not None:
        certs.append(
            _cert(
                "fo_tuple",
                "falsified" if min(r.fo.radius_margins) < -tol.psd_slack else "certified",
                "residual",
                max(r.fo.residuals, default=0.0),
                None,
                margin=min(r.fo.radius_margins),
                defect_dim=r.fo.defect_dim,
                operators=r.fo.A,
            )
        )
    else:
        certs.append(_cert("fo_tuple", "falsified", "residual", float("nan"), None, error=r.fo_error))
    classification = {
        "mode": "gamma",
        "n": t.n,
        "dim": t.dim,
        "membership": r.membership.value,
        "gamma_unitary": r.gamma_unitary.value,
        "gamma_isometry": r.gamma_isometry.value,
        "labels": r.labels,
        "structural": r.structural,
        "p_class": r.p_class,
        "commutator_norm": t.commutator_norm,
    }
    return {"classification": jsonable(classification), "certificates": certs}, r.falsified


def e_report(t: ETriple, tol: Tolerances, budget: Budget) -> tuple[dict, bool]:
    r = classify_e(t, tol, budget)
    certs = [_certificate(r.vn)]
    if r.fundamental is not None:
        f = r.fundamental
        certs.append(
            _cert(
                "fundamental_ops",
                "certified",
                "residual",
                max(f.residuals, default=0.0),
                None,
                defect_dim=f.defect_dim,
                F1=f.F1,
                F2=f.F2,
            )
        )
    else:
        certs.append(_cert("fundamental_ops", "falsified", "residual", float("nan"), None, error=r.fundamental_error))
    s = r.structural
    for name, flag, value in (
        ("e_unitary", r.e_unitary, max(s["p_isometry"], s["p_co_isometry"], s["a_minus_bstar_p"])),
        ("e_isometry", r.e_isometry, max(s["p_isometry"], s["a_minus_bstar_p"])),
        ("e_co_isometry", r.e_co_isometry, max(s["p_co_isometry"], s["astar_minus_b_pstar"])),
    ):
        certs.append(_cert(name, "certified" if flag else "no-violation-found", "residual", value, None,
                           b_norm=s["b_norm"], holds=flag))
    classification = {
        "mode": "e",
        "dim": t.dim,
        "membership": r.membership.value,
        "labels": r.labels,
        "structural": s,
        "p_class": r.p_class,
        "commutator_norm": t.commutator_norm,
    }
    return {"classification": jsonable(classification), "certificates": certs}, r.falsified


def _part(p: PartReport) -> dict:
    return {
        "label": p.label,
        "kind": p.kind,
        "dim": p.dim,
        "basis": jsonable(p.subspace)["basis"],
        "status": p.status,
        "ok": p.ok,
        "residuals": {k: {"forward": v[0], "adjoint": v[1]} for k, v in p.residuals.items()},
        "p_class": jsonable(p.p_class),
        "restricted": jsonable(p.restricted),
        "description": p.description,
    }


def decomposition_block(d: DecompositionReport) -> dict:
    return jsonable(
        {
            "scheme": d.scheme,
            "family": d.family,
            "hypotheses": d.hypotheses,
            "hypothesis_violated": d.hypothesis_violated,
            "parts": [_part(p) for p in d.parts],
            "candidates": [_part(p) for p in d.candidates],
            "refinements": {k: [_part(p) for p in v] for k, v in d.refinements.items()},
            "evidence": d.scalar.evidence if d.scalar is not None else {},
            "notes": d.notes,
        }
    )


# ---------------------------------------------------------------- config


def resolve_tolerances(args: argparse.Namespace, environ=os.environ) -> Tolerances:
    """Defaults, then ``SPECTRASET_TOL_*`` environment values, then flags."""
    values = Tolerances().as_dict()
    for key, var in ENV_TOL.items():
        if var in environ:
            try:
                values[key] = float(environ[var])
            except ValueError as exc:
                raise InvalidInputError(f"{var} is not a number: {environ[var]!r}") from exc
    for key, flag in (("rank", "tol_rank"), ("equality", "tol_eq"), ("psd_slack", "psd_slack")):
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    try:
        return Tolerances(**values)
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc


def resolve_budget(args: argparse.Namespace) -> Budget:
    b = Budget(
        circle_grid=args.grid,
        max_degree=args.degree,
        trials=args.trials,
        seed=args.seed,
        max_doublings=args.max_doublings,
    )
    if b.circle_grid < 16 or b.max_degree < 1 or b.trials < 0 or b.max_doublings < 1 or b.seed < 0:
        raise InvalidInputError("grid >= 16, degree >= 1, trials >= 0, max-doublings >= 1, seed >= 0 required")
    return b


def load_tuple(path: str, tol: Tolerances) -> tuple[GammaTuple | ETriple, str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidInputError(f"{path} is not UTF-8") from exc
    n, mats = read_tuple(text)
    digest = hashlib.sha256(raw).hexdigest()
    if n is None:
        return make_e_triple(mats["A"], mats["B"], mats["P"], tol, provenance=path), digest
    S = [mats[f"S{i}"] for i in range(1, n)]
    return make_gamma_tuple(S, mats["P"], tol, provenance=path), digest


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report_text(body: dict, command: str, digest: str, tol: Tolerances, budget: Budget) -> str:
    doc = {
        "tool": "spectraset",
        "version": __version__,
        "command": command,
        "input_sha256": digest,
        **body,
        "tolerances": tol.as_dict(),
        "seed": budget.seed,
        "budget": jsonable(budget),
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- commands


def cmd_analyze(args: argparse.Namespace) -> int:
    tol = resolve_tolerances(args)
    budget = resolve_budget(args)
    obj, digest = load_tuple(args.input, tol)
    body, falsified = (e_report if isinstance(obj, ETriple) else gamma_report)(obj, tol, budget)
    _emit(_report_text(body, "analyze", digest, tol, budget), args.out)
    return EXIT_FALSIFIED if falsified else EXIT_OK


def cmd_decompose(args: argparse.Namespace) -> int:
    tol = resolve_tolerances(args)
    budget = resolve_budget(args)
    if args.scheme not in SCHEMES:
        raise InvalidInputError(f"unknown scheme {args.scheme!r}; choose from {sorted(SCHEMES)}")
    obj, digest = load_tuple(args.input, tol)
    if isinstance(obj, ETriple):
        d = decompose_e(obj, args.scheme, tol, budget.max_doublings)
    else:
        d = decompose_gamma(obj, args.scheme, tol, budget.max_doublings)
    body = {"decomposition": decomposition_block(d)}
    _emit(_report_text(body, "decompose", digest, tol, budget), args.out)
    return EXIT_OK


def _load_spec(text: str) -> GenSpec:
    p = Path(text)
    if not text.lstrip().startswith("{") and p.is_file():
        text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"spec is neither a JSON object nor a readable file: {exc}") from exc
    return GenSpec.from_dict(data)


def frames_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + ".frames.json"))


def cmd_generate(args: argparse.Namespace) -> int:
    spec = _load_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    n, mats_named, frames = _run(spec)
    text = write_tuple(n, mats_named)
    _emit(text, args.out)
    if frames is not None:
        doc = {k: _encode_matrix(v) if v.size else [] for k, v in frames.items()}
        if args.out:
            Path(frames_path(args.out)).write_text(json.dumps(doc, indent=1) + "\n")
        else:
            print("planted frames not written: use --out", file=sys.stderr)
    return EXIT_OK


def _run(spec: GenSpec):
    mode, mats, frames = run_spec(spec)
    return (spec.n if mode == "gamma" else None), mats, frames


# ---------------------------------------------------------------- entry point


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-rank", type=float, default=None, help="rank cutoff (default 1e-10)")
    p.add_argument("--tol-eq", type=float, default=None, help="equality tolerance (default 1e-8)")
    p.add_argument("--psd-slack", type=float, default=None, help="PSD slack (default 1e-8)")
    p.add_argument("--grid", type=int, default=256, help="circle grid size for pencils")
    p.add_argument("--degree", type=int, default=3, help="max polynomial degree for the von Neumann test")
    p.add_argument("--trials", type=int, default=200, help="random polynomials per test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-doublings", type=int, default=60, help="squarings allowed for strong limits")
    p.add_argument("--out", default=None, help="write to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectraset", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="classify a tuple and run its certificates")
    a.add_argument("input")
    _add_common(a)
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("decompose", help="split a tuple along a decomposition of P")
    d.add_argument("input")
    d.add_argument("--scheme", required=True, help=", ".join(sorted(SCHEMES)))
    _add_common(d)
    d.set_defaults(func=cmd_decompose)

    g = sub.add_parser("generate", help="write a generated tuple file")
    g.add_argument("--spec", required=True, help="GenSpec JSON object or path to one")
    g.add_argument("--seed", type=int, default=None, help="override the spec seed")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the invalid-input code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (InvalidInputError, SpectrasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
