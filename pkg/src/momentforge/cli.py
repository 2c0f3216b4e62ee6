"""Command-line front end.

Exit status: 0 on success, 1 when a computation fails, 2 when an argument or
spec string does not parse.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from fractions import Fraction

import numpy as np

from . import ifs as ifs_mod
from . import measures, orthopoly, spectral
from .errors import MomentForgeError, SpecParseError
from .identities import binomial_identity, identity_checks
from .linalg import (
    HankelMatrix,
    is_exact,
    matrix_from_json,
    matrix_to_json,
)

log = logging.getLogger("momentforge")

COMMANDS = (
    "moments", "matrix", "transform", "ifs-solve", "ifs-iterate", "ifs-chaos",
    "orthopoly", "jacobi", "spectrum", "verify",
)


class ParseFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseFailure(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", default="lebesgue01")
    common.add_argument("--ifs")
    common.add_argument("--map", dest="map_spec")
    common.add_argument("--n", type=int, default=4)
    common.add_argument("--iters", type=int, default=200)
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--weights", default="unweighted")
    common.add_argument("--precision", choices=("rational", "f64"), default="rational")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--output")
    common.add_argument("--input")

    parser = _Parser(prog="momentforge", description="Moment matrices, IFS measures and their spectra.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "spectrum":
            p.add_argument("--method", choices=("truncated", "nystrom", "closed-form"), default="truncated")
            p.add_argument("--nodes", type=int, default=128)
            p.add_argument("--terms", type=int)
            p.add_argument("--family", help="zero_one:T or zero_b:b for --method closed-form")
    return parser


# ---------------------------------------------------------------- formatting

def _cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return v


def _json_cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _matrix_csv(A) -> str:
    A = np.asarray(A)
    return _csv([f"c{j}" for j in range(A.shape[1])], A.tolist())


def _dump(payload) -> str:
    return json.dumps(payload) + "\n"


# ---------------------------------------------------------------- spec helpers

def _exact_decimal(x):
    return Fraction(repr(x)) if isinstance(x, float) else x


def _rationalize_model(model):
    """Read decimal literals as the decimal fractions they spell."""
    if isinstance(model, measures.Dirac):
        return measures.Dirac(_exact_decimal(model.b))
    if isinstance(model, measures.DiracMixture):
        return measures.DiracMixture(tuple((_exact_decimal(x), _exact_decimal(a)) for x, a in model.atoms))
    if isinstance(model, measures.Gaussian):
        return measures.Gaussian(_exact_decimal(model.p))
    if isinstance(model, measures.IFSEquilibrium):
        return measures.IFSEquilibrium(_rationalize_ifs(model.ifs))
    return model


def _rationalize_ifs(system):
    return ifs_mod.AffineIFS(
        tuple(ifs_mod.AffineMap(_exact_decimal(m.c), _exact_decimal(m.b)) for m in system.maps),
        tuple(_exact_decimal(p) for p in system.probs),
    )


def _model(args):
    model = measures.parse_model(args.model)
    return _rationalize_model(model) if args.precision == "rational" else model


def _ifs(args):
    if not args.ifs:
        raise SpecParseError("--ifs is required", token="--ifs", position=0)
    text = args.ifs if args.ifs.lower().startswith("ifs:") else "ifs:" + args.ifs
    system = ifs_mod.parse_ifs(text)
    return _rationalize_ifs(system) if args.precision == "rational" else system


def _parse_map(text: str):
    if not text:
        raise SpecParseError("--map is required", token="--map", position=0)
    head, _, rest = text.partition(":")
    try:
        if head == "affine":
            c_tok, b_tok = rest.split(",")
            return ifs_mod.AffineMap(c_tok, b_tok)
        if head == "square":
            return ifs_mod.SquarePlusB(rest)
    except (ValueError, ZeroDivisionError):
        raise SpecParseError("bad map parameters", token=rest, position=len(head) + 1) from None
    raise SpecParseError("maps look like affine:c,b or square:b", token=head, position=0)


def _moment_values(model, count: int, precision: str) -> list:
    out = []
    warned = False
    for k in range(count):
        v = measures.moment(model, k)
        if precision == "rational":
            if v.is_rational:
                out.append(v.exact)
                continue
            if not warned:
                log.warning("%s has irrational moments; falling back to floating point", model.spec())
                warned = True
        out.append(v.approx)
    return out


def _hankel(model, n: int, precision: str) -> HankelMatrix:
    return HankelMatrix(tuple(_moment_values(model, 2 * n + 1, precision)))


def _read_input(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------- commands

def cmd_moments(args) -> str:
    if args.ifs:
        model = measures.IFSEquilibrium(_ifs(args))
    else:
        model = _model(args)
    vals = _moment_values(model, 2 * args.n + 1, args.precision)
    if args.format == "csv":
        return _csv(["k", "m_k"], list(enumerate(vals)))
    exact = [isinstance(v, Fraction) for v in vals]
    mode = "rational" if all(exact) else ("mixed" if any(exact) else "f64")
    return _dump({"model": model.spec(), "mode": mode, "moments": [_json_cell(v) for v in vals]})


def cmd_matrix(args) -> str:
    if args.input:
        A = matrix_from_json(_read_input(args.input))
    else:
        A = _hankel(_model(args), args.n, args.precision).to_array()
    if args.format == "csv":
        return _matrix_csv(A)
    return matrix_to_json(A) + "\n"


def cmd_transform(args) -> str:
    model = _model(args)
    tau = _parse_map(args.map_spec)
    n = args.n
    if isinstance(tau, ifs_mod.AffineMap):
        A = ifs_mod.encode_affine(tau, n)
        M = _hankel(model, n, args.precision).to_array()
    else:
        A = ifs_mod.encode_square_plus_b(tau.b, n, rows=2 * n + 1)
        M = _hankel(model, 2 * n, args.precision).to_array()
    out = ifs_mod.transform_moment_matrix(A, M)
    if args.format == "csv":
        return _matrix_csv(out)
    return matrix_to_json(out) + "\n"


def cmd_ifs_solve(args) -> str:
    system = _ifs(args)
    vals = ifs_mod.solve_equilibrium_moments(system, args.n)
    if args.format == "csv":
        return _csv(["k", "m_k"], list(enumerate(vals)))
    mode = "rational" if all(is_exact(v) for v in vals) else "f64"
    return _dump({"moments": [_json_cell(v) for v in vals], "mode": mode, "ifs": system.spec()})


def cmd_ifs_iterate(args) -> str:
    system = _ifs(args)
    if args.input:
        M0 = matrix_from_json(_read_input(args.input))
    else:
        M0 = measures.moment_matrix(measures.Dirac(0), args.n).to_array()
        if args.precision == "f64":
            M0 = M0.astype(float)
    iterates = ifs_mod.fixed_point_iterate(system, M0, args.n, iters=args.iters)
    last = iterates[-1]
    if args.format == "csv":
        return _matrix_csv(last)
    payload = json.loads(matrix_to_json(last))
    payload["iterations"] = len(iterates) - 1
    payload["ifs"] = system.spec()
    return _dump(payload)


def cmd_ifs_chaos(args) -> str:
    system = _ifs(args)
    rng = np.random.default_rng(args.seed)
    res = ifs_mod.chaos_game_moments(system, args.n, args.samples, rng)
    if args.format == "csv":
        return _csv(["k", "m_k", "stderr"], [(k, float(m), float(s)) for k, (m, s) in
                                             enumerate(zip(res.moments, res.stderr))])
    return _dump({
        "moments": [float(v) for v in res.moments],
        "stderr": [float(v) for v in res.stderr],
        "samples": res.samples,
        "seed": args.seed,
        "ifs": system.spec(),
    })


def cmd_orthopoly(args) -> str:
    H = _hankel(_model(args), args.n, args.precision)
    basis = orthopoly.orthonormal_polys(H)
    if args.format == "csv":
        return _csv(["k"] + [f"x^{j}" for j in range(basis.G.shape[1])],
                    [[k] + list(row) for k, row in enumerate(basis.G)])
    payload = json.loads(matrix_to_json(basis.G))
    payload["n"] = basis.n
    payload["rank"] = basis.rank
    payload["norms"] = [_json_cell(h) for h in basis.norms]
    return _dump(payload)


def cmd_jacobi(args) -> str:
    data = _read_input(args.input) if args.input else None
    if data is not None and "diag" in data:
        J = orthopoly.JacobiMatrix.from_json(data)
        H = orthopoly.hankel_from_banded(J, args.n)
        if args.format == "csv":
            return _csv(["k", "m_k"], list(enumerate(H.seq)))
        mode = "rational" if H.mode == "rational" else "f64"
        return _dump({"moments": [_json_cell(v) for v in H.seq], "mode": mode})
    H = matrix_from_json(data) if data is not None else _hankel(_model(args), args.n, args.precision)
    J = orthopoly.jacobi_from_moments(H, allow_finite_rank=True)
    if args.format == "csv":
        return J.to_csv()
    return J.to_json() + "\n"


def cmd_spectrum(args) -> str:
    if args.method == "closed-form":
        if not args.family or ":" not in args.family:
            raise SpecParseError("--family must be zero_one:T or zero_b:b", token=args.family or "", position=0)
        kind, _, val = args.family.partition(":")
        try:
            value = float(Fraction(val)) if "/" in val else float(val)
        except (ValueError, ZeroDivisionError):
            raise SpecParseError("bad family parameter", token=val, position=len(kind) + 1) from None
        res = spectral.closed_form_two_atom_spectrum(kind, value)
        if args.format == "csv":
            return _csv(list(res), [list(res.values())])
        return _dump(res)
    model = _model(args)
    scheme = spectral.parse_weights(args.weights, model=model)
    if args.method == "truncated":
        rep = spectral.truncated_spectrum(model, scheme, args.n)
    else:
        rep = spectral.nystrom_kernel_spectrum(model, scheme, args.nodes, args.terms)
    if args.format == "csv":
        return _csv(["index", "eigenvalue"], list(enumerate(float(v) for v in rep.eigenvalues)))
    return rep.to_json(sweeps=rep.meta.get("sweeps")) + "\n"


def _invariant_suite():
    """Quick versions of the library invariants, as (name, status, summary) rows."""
    rows = []
    half = Fraction(1, 2)
    mu = measures.DiracMixture(((0, half), (1, half)))
    tau = ifs_mod.AffineMap(Fraction(1, 3), Fraction(2, 5))
    lhs = ifs_mod.transform_moment_matrix(ifs_mod.encode_affine(tau, 6), measures.moment_matrix(mu, 6))
    rhs = measures.moment_matrix(ifs_mod.pushforward(mu, tau), 6).to_array()
    rows.append(("affine_intertwining", bool((lhs == rhs).all()), "A*MA equals the pushforward moment matrix"))

    cantor = ifs_mod.solve_equilibrium_moments(ifs_mod.cantor_ifs(), 2)
    rows.append(("cantor_moments", cantor[1:] == [half, Fraction(3, 8)], "m1 = 1/2, m2 = 3/8"))
    leb = ifs_mod.solve_equilibrium_moments(ifs_mod.lebesgue_ifs(), 10)
    rows.append(("lebesgue_ifs_moments", leb == [Fraction(1, k + 1) for k in range(11)], "m_k = 1/(k+1), k <= 10"))

    H = measures.moment_matrix(measures.Semicircle(), 6)
    J = orthopoly.jacobi_from_moments(H)
    rows.append(("semicircle_jacobi", set(J.diag) == {0} and set(J.offdiag) == {1}
                 and orthopoly.hankel_from_banded(J, 6) == H, "diag 0, offdiag 1, moments reconstruct"))

    cf = spectral.closed_form_two_atom_spectrum("zero_one", 2.0)
    rep = spectral.truncated_spectrum(mu, spectral.WeightScheme.powers_of_two(), 40)
    err = max(abs(rep.eigenvalues[0] - cf["lambda_plus"]), abs(rep.eigenvalues[1] - cf["lambda_minus"]))
    rows.append(("two_atom_spectrum", err < 1e-10, f"max deviation {err:.2e}"))

    worst = 0.0
    for model in (measures.Lebesgue01(), measures.Semicircle(), measures.Secant(),
                  measures.HalfSecant(), measures.Gaussian(1), measures.ExpDecay()):
        for k in range(0, 21):
            exact = measures.moment(model, k).approx
            quad = measures.quadrature_moment(model, k, 64)
            worst = max(worst, abs(exact - quad) / max(1.0, abs(exact)))
    rows.append(("quadrature_concordance", worst <= 1e-8, f"max relative deviation {worst:.2e}"))
    return rows


def cmd_verify(args) -> str:
    report = identity_checks()
    b = binomial_identity()
    fail = b["printed_first_failure"]
    for it in report["items"]:
        if it["name"] == "binomial_identity" and fail is not None and b["corrected_matches"]:
            it["summary"] = f"corrected form matches, paper form fails at ({fail[0]},{fail[1]})"
    invariants = [{"name": name, "status": "pass" if ok else "fail", "summary": text}
                  for name, ok, text in _invariant_suite()]
    everything = report["items"] + invariants
    passed = all(it["status"] == "pass" for it in everything)
    args.failed = not passed
    if args.format == "csv":
        return _csv(["name", "status", "summary"], [(it["name"], it["status"], it["summary"]) for it in everything])
    if args.format == "text":
        width = max(len(it["name"]) for it in everything)
        lines = [f"{it['name']}: {it['summary']}".ljust(width + 60) + f"[{it['status']}]" for it in everything]
        lines.append(f"overall: {'pass' if passed else 'fail'}")
        return "\n".join(lines) + "\n"
    return _dump({"identities": report["items"], "invariants": invariants, "passed": passed})


HANDLERS = {
    "moments": cmd_moments,
    "matrix": cmd_matrix,
    "transform": cmd_transform,
    "ifs-solve": cmd_ifs_solve,
    "ifs-iterate": cmd_ifs_iterate,
    "ifs-chaos": cmd_ifs_chaos,
    "orthopoly": cmd_orthopoly,
    "jacobi": cmd_jacobi,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
}


def _configure_logging():
    level = os.environ.get("MOMENTFORGE_LOG", "error").lower()
    logging.basicConfig(
        level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.n < 0:
            raise ParseFailure("--n must be >= 0")
    except ParseFailure as exc:
        print(f"momentforge: error: {exc}", file=sys.stderr)
        return 2
    try:
        text = HANDLERS[args.command](args)
    except SpecParseError as exc:
        print(f"momentforge: parse error: {exc}", file=sys.stderr)
        return 2
    except (MomentForgeError, OSError, ValueError, KeyError, ZeroDivisionError) as exc:
        print(f"momentforge: error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if getattr(args, "failed", False) else 0


if __name__ == "__main__":
    sys.exit(main())
