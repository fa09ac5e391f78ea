"""Command-line interface: validate fixture files, compute signature
certificates, product and parity witnesses, duality-path certificates,
multiplicativity checks, and the seeded propagation suite.

Reports are canonical JSON (schema hpsig-report/1) and byte-stable for fixed
inputs, tolerances, and seed; wall time goes to stderr only so that report
bytes stay deterministic.  Exit codes: 0 pass, 1 check failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from hashlib import sha256
from pathlib import Path

import numpy as np

from . import coarse, family, products, rho, signature, simplicial
from .hpc_core import (DEFAULT_TOL, DomainError, DualityDegenerateError,
                       HPComplex, StructuralError, Tolerances,
                       hpcomplex_from_json, validate)

SCHEMA = "hpsig-report/1"
EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_INPUT_ERROR = 2


def _digest(path: str) -> str:
    return sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StructuralError(f"cannot parse {path}: {exc}") from exc


def _sniff(doc: dict) -> str:
    if "facets" in doc:
        return "triangulation"
    if "base" in doc and "fiber" in doc:
        return "fibered"
    if "source" in doc and "target" in doc:
        return "homotopy_equivalence"
    if "dims" in doc and "n" in doc:
        return "complex"
    raise StructuralError("unrecognized document: expected a triangulation, "
                          "complex, homotopy equivalence, or fibered complex")


def _complex_from_path(path: str, tol: Tolerances) -> HPComplex:
    doc = _load_json(path)
    kind = _sniff(doc)
    if kind == "triangulation":
        return simplicial.cap_duality(simplicial.load_simplicial(doc), tol)
    if kind == "complex":
        return hpcomplex_from_json(doc)
    raise StructuralError(f"{path}: expected a complex or triangulation, got {kind}")


def _report(command: str, inputs: dict[str, str], tol: Tolerances, seed: int,
            checks: list[dict], data: dict) -> dict:
    outcome = "pass" if all(c.get("passed") for c in checks) else "fail"
    return {
        "schema": SCHEMA,
        "command": command,
        "inputs": inputs,
        "tolerances": tol.to_dict(),
        "seed": seed,
        "generator": "numpy.random.Generator(PCG64)",
        "checks": checks,
        "data": data,
        "outcome": outcome,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args, tol: Tolerances) -> tuple[dict, int]:
    doc = _load_json(args.path)
    kind = _sniff(doc)
    checks: list[dict] = []
    data: dict = {"kind": kind}
    if kind == "triangulation":
        sm = simplicial.load_simplicial(doc)
        checks.append({"name": "closed_oriented", "passed": True})
        c = simplicial.cap_duality(sm, tol)
        rep = validate(c, tol)
        checks.append({"name": "cap_duality_validates", "passed": rep.passed,
                       "report": rep.to_dict()})
        data["betti"] = list(simplicial.betti_numbers(sm))
        data["duality_construction"] = c.meta.get("duality")
        if sm.n % 2 == 0:
            form = simplicial.intersection_form_oracle(sm, tol)
            data["oracle_signature"] = form.signature
            checks.append({"name": "oracle_nondegenerate", "passed": True,
                           "rank": form.rank})
    elif kind == "complex":
        c = hpcomplex_from_json(doc)
        if c.S is None:
            resid = float(np.abs(c.d_total @ c.d_total).max())
            checks.append({"name": "d_squared_zero", "passed": resid <= tol.chain,
                           "residual": resid})
            data["note"] = "no duality operator; chain checks only"
        else:
            rep = validate(c, tol)
            checks.append({"name": "axioms", "passed": rep.passed,
                           "report": rep.to_dict()})
            data["tier_achieved"] = rep.tier_achieved
    elif kind == "homotopy_equivalence":
        he = rho.he_from_json(doc)
        rep = rho.validate_homotopy_equivalence(he, tol)
        checks.append({"name": "homotopy_identities", "passed": rep.passed,
                       "report": rep.to_dict()})
    else:
        fc = family.fibered_from_json(doc)
        rep = family.validate_fibered(fc, tol)
        checks.append({"name": "fibered_gluing", "passed": rep.passed,
                       "report": rep.to_dict()})
        data["duality_compatible"] = rep.duality_compatible
    report = _report("check", {args.path: _digest(args.path)}, tol, args.seed,
                     checks, data)
    return report, EXIT_PASS if report["outcome"] == "pass" else EXIT_CHECK_FAILURE


def cmd_sgn(args, tol: Tolerances) -> tuple[dict, int]:
    c = _complex_from_path(args.path, tol)
    schedule = signature.localized_signature_path(
        c, t_max=args.t_max, samples=args.samples_schedule, tol=tol)
    data = signature.signature_report(c, tol, schedule)
    checks = [{"name": "localization_schedule", "passed": schedule.passed,
               "constant": schedule.constant}]
    if c.n % 2 == 0:
        sig = signature.signature_even(c, tol)
        checks.append({"name": "signature_even", "passed": True, "value": sig})
    else:
        rep = signature.odd_index_representative(c, tol)
        checks.append({"name": "odd_certificate", "passed": rep.passed,
                       "min_singular": rep.certificate.min_singular})
    report = _report("sgn", {args.path: _digest(args.path)}, tol, args.seed,
                     checks, data)
    return report, EXIT_PASS if report["outcome"] == "pass" else EXIT_CHECK_FAILURE


def cmd_product(args, tol: Tolerances) -> tuple[dict, int]:
    a = _complex_from_path(args.path_a, tol)
    b = _complex_from_path(args.path_b, tol)
    sig_rep = products.product_signature_check(a, b, tol)
    checks = [{"name": "signature_multiplicative", "passed": sig_rep.passed,
               "extras": sig_rep.extras}]
    data = {"sign_rule": products.derive_sign_rule(a.n, b.n).to_dict(),
            "case": sig_rep.case, "k_normalization": sig_rep.k_normalization,
            "signature_product": sig_rep.to_dict()}
    strict = (validate(a, tol).tier_achieved == "strict"
              and validate(b, tol).tier_achieved == "strict")
    if strict and a.n % 2 == 0 and b.n % 2 == 1:
        wit = products.witness_even_odd(a, b, samples=args.samples_witness, tol=tol)
        checks.append({"name": "even_odd_witness", "passed": wit.passed})
        data["witness"] = wit.to_dict()
    elif strict and a.n % 2 == 1 and b.n % 2 == 0:
        wit = products.witness_odd_even(a, b, tol=tol)
        checks.append({"name": "odd_even_witness", "passed": wit.passed})
        data["witness"] = wit.to_dict()
    inputs = {args.path_a: _digest(args.path_a), args.path_b: _digest(args.path_b)}
    report = _report("product", inputs, tol, args.seed, checks, data)
    return report, EXIT_PASS if report["outcome"] == "pass" else EXIT_CHECK_FAILURE


def cmd_rho(args, tol: Tolerances) -> tuple[dict, int]:
    he = rho.he_from_json(_load_json(args.path))
    her = rho.validate_homotopy_equivalence(he, tol)
    checks = [{"name": "homotopy_identities", "passed": her.passed}]
    data: dict = {}
    path = rho.rho_path(he, samples=args.samples, tol=tol)
    data["path"] = path.to_dict()
    checks.append({"name": "duality_path_invertible", "passed": path.passed,
                   "failed_at": path.failed_at})
    if path.passed:
        if he.n % 2 == 0:
            cert = rho.rho_certificate_even(he, samples=args.samples_cert, tol=tol)
            checks.append({"name": "projection_ranks_constant", "passed": cert.passed})
            data["theta"] = {"ranks_plus": list(cert.ranks_plus),
                             "ranks_minus": list(cert.ranks_minus),
                             "constant": cert.constant, "equal": cert.equal}
        else:
            cert = rho.rho_certificate_odd(he, samples=args.samples_cert, tol=tol)
            checks.append({"name": "odd_family_invertible", "passed": cert.passed})
            data["odd_family"] = {"min_singulars_min": min(cert.min_singulars),
                                  "failed_at": cert.failed_at}
    report = _report("rho", {args.path: _digest(args.path)}, tol, args.seed,
                     checks, data)
    return report, EXIT_PASS if report["outcome"] == "pass" else EXIT_CHECK_FAILURE


def cmd_chs(args, tol: Tolerances) -> tuple[dict, int]:
    fc = family.fibered_from_json(_load_json(args.path))
    rep = family.validate_fibered(fc, tol)
    checks = [{"name": "fibered_gluing", "passed": rep.passed}]
    mono = family.monodromy_homology_action(fc, tol)
    data: dict = {"monodromy": mono.to_dict()}
    chs = family.chs_check(fc, tol)
    data["chs"] = chs.to_dict()
    # hypothesis_not_met is a correct diagnosis, not a failed check
    checks.append({"name": "multiplicativity", "passed": chs.outcome != "fail",
                   "outcome": chs.outcome})
    report = _report("chs", {args.path: _digest(args.path)}, tol, args.seed,
                     checks, data)
    return report, EXIT_PASS if report["outcome"] == "pass" else EXIT_CHECK_FAILURE


def _random_band_operator(rng: np.random.Generator, space: coarse.FiniteMetricSpace,
                          bandwidth: int) -> coarse.SupportedOperator:
    n = space.size
    m = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(max(0, i - bandwidth), min(n, i + bandwidth + 1)):
            m[i, j] = complex(rng.standard_normal(), rng.standard_normal())
    return coarse.SupportedOperator(space, m, 0.0)


def cmd_coarse(args, tol: Tolerances) -> tuple[dict, int]:
    rng = np.random.default_rng(args.seed)
    n_pts = 12
    space = coarse.path_space(n_pts)
    sub_ok = ten_ok = base_ok = sum_ok = 0
    for _ in range(args.instances):
        ba = int(rng.integers(0, 4))
        bb = int(rng.integers(0, 4))
        a = _random_band_operator(rng, space, ba)
        b = _random_band_operator(rng, space, bb)
        if coarse.compose(a, b).propagation <= a.propagation + b.propagation + 1e-9:
            sub_ok += 1
        if coarse.add(a, b).propagation <= max(a.propagation, b.propagation) + 1e-9:
            sum_ok += 1
        small = coarse.path_space(4)
        c = _random_band_operator(rng, small, int(rng.integers(0, 3)))
        t = coarse.tensor(a, c, metric=args.metric)
        if args.metric == "l2":
            bound = float(np.hypot(a.propagation, c.propagation))
        else:
            bound = max(a.propagation, c.propagation)
        if t.propagation <= bound + 1e-9:
            ten_ok += 1
        if coarse.prop_along_base(t) <= t.propagation + 1e-9:
            base_ok += 1
    # almost-projection product on a shrinking-propagation pair of paths
    times = tuple(float(t) for t in range(1, 6))
    f_ops, g_ops = [], []
    small = coarse.path_space(6)
    for k, t in enumerate(times):
        proj = np.zeros((6, 6))
        proj[0, 0] = 1.0
        width = max(0, 2 - k)
        if width:
            proj[1, 1 + width] = proj[1 + width, 1] = 0.09
        f_ops.append(coarse.SupportedOperator(small, proj, 1e-15))
        g = np.eye(6) if k == 0 else np.eye(6) * 0.0 + np.diag([1, 1, 1, 0, 0, 0])
        g_ops.append(coarse.SupportedOperator(small, g, 1e-15))
    f_path = coarse.LocalizationPath(times, tuple(f_ops))
    g_path = coarse.LocalizationPath(times, tuple(g_ops))
    _, prod_rep = coarse.almost_projection_product(f_path, g_path, r=10.0,
                                                   metric=args.metric)
    checks = [
        {"name": "composition_subadditive", "passed": sub_ok == args.instances,
         "ok": sub_ok, "total": args.instances},
        {"name": "sum_support_bound", "passed": sum_ok == args.instances,
         "ok": sum_ok, "total": args.instances},
        {"name": "tensor_metric_bound", "passed": ten_ok == args.instances,
         "ok": ten_ok, "total": args.instances},
        {"name": "base_propagation_bound", "passed": base_ok == args.instances,
         "ok": base_ok, "total": args.instances},
        {"name": "almost_projection_product", "passed": prod_rep["passed"],
         "max_defect": prod_rep["max_defect"]},
    ]
    report = _report("coarse", {}, tol, args.seed, checks,
                     {"instances": args.instances, "metric": args.metric})
    return report, EXIT_PASS if report["outcome"] == "pass" else EXIT_CHECK_FAILURE


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-sym", type=float, default=DEFAULT_TOL.sym)
    common.add_argument("--tol-inv", type=float, default=DEFAULT_TOL.inv)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json-out", default=None, help="write the report here")
    common.add_argument("--metric", choices=("l2", "max"), default="l2")

    parser = argparse.ArgumentParser(
        prog="hpsig",
        description="certified signature calculus on finite duality complexes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common],
                       help="validate a fixture file of any kind")
    p.add_argument("path")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("sgn", parents=[common],
                       help="signature / odd certificate with localization schedule")
    p.add_argument("path")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--samples-schedule", type=int, default=10)
    p.set_defaults(fn=cmd_sgn)

    p = sub.add_parser("product", parents=[common],
                       help="graded product, multiplicativity, parity witnesses")
    p.add_argument("path_a")
    p.add_argument("path_b")
    p.add_argument("--samples-witness", type=int, default=11)
    p.set_defaults(fn=cmd_product)

    p = sub.add_parser("rho", parents=[common],
                       help="duality path and parity certificate for an equivalence")
    p.add_argument("path")
    p.add_argument("--samples", type=int, default=601)
    p.add_argument("--samples-cert", type=int, default=121)
    p.set_defaults(fn=cmd_rho)

    p = sub.add_parser("chs", parents=[common],
                       help="total complex, monodromy, multiplicativity of signatures")
    p.add_argument("path")
    p.set_defaults(fn=cmd_chs)

    p = sub.add_parser("coarse", parents=[common],
                       help="seeded propagation property suite")
    p.add_argument("--instances", type=int, default=100)
    p.set_defaults(fn=cmd_coarse)
    return parser


def render_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    tol = Tolerances(sym=args.tol_sym, inv=args.tol_inv)
    started = time.monotonic()
    try:
        report, code = args.fn(args, tol)
    except (StructuralError, DomainError, DualityDegenerateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    text = render_report(report)
    sys.stdout.write(text)
    if args.json_out:
        Path(args.json_out).write_text(text)
    print(f"# wall_time_s={time.monotonic() - started:.3f}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
