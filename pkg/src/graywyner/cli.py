"""Command-line front end.

Subcommands: discrete (finite-alphabet solver), gaussian (closed form),
wyner (common information), sweep (CSV tables), verify (invariant corpus).
Exit codes: 0 success, 1 validation/usage error, 2 flagged non-convergence
with a partial result. All quantities are computed in nats; --bits converts
at the presentation layer only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import ba as ba_mod
from .ba import BaConfig, default_prior, kt_check, minimize_lagrangian, mu_sums
from .gaussian import (
    GaussianSpec,
    RegimeError,
    solve_gaussian_rd,
    tradeoff_rows,
    wyner_ci,
)
from .model import (
    DegenerateInputError,
    DimensionMismatchError,
    JointPmf,
    Multipliers,
    Weights,
    discretize_gaussian,
    dsbs,
    expected_distortions,
    hamming_distortion,
    load_source,
)
from .solver import (
    SWEEP_CSV_HEADER,
    OuterConfig,
    rd_from_multipliers,
    solve_rd,
    sweep,
)

LN2 = math.log(2.0)


class CliError(Exception):
    """Validation/usage failure mapped to exit code 1."""


def _scale(value, bits):
    return value / LN2 if bits else value


def _emit(text, output):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _weights(ns):
    try:
        return Weights(*ns.alpha)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid weights: {exc}")


def _json_dumps(obj):
    # repr-precision floats round-trip bit-exactly
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n",
                            extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _load_ba_config(ns):
    cfg = BaConfig()
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                cfg = BaConfig.from_json(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CliError(f"bad config file {ns.config}: {exc}")
    overrides = {}
    for attr, key in (
        ("epsilon", "epsilon"),
        ("max_iterations", "max_iterations"),
        ("u_size", "u_size"),
        ("seed", "init"),
    ):
        val = getattr(ns, attr.replace("-", "_"), None)
        if val is not None:
            overrides[key] = val
    if overrides:
        import dataclasses

        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _rd_result_dict(result, bits):
    d1, d2 = result.achieved
    return {
        "rd" + ("_bits" if bits else "_nats"): _scale(result.rd_value, bits),
        "R0": _scale(result.rate_triple[0], bits),
        "R1": _scale(result.rate_triple[1], bits),
        "R2": _scale(result.rate_triple[2], bits),
        "D1": d1,
        "D2": d2,
        "beta1": result.multipliers.b1,
        "beta2": result.multipliers.b2,
        "lagrangian": _scale(result.lagrangian_value, bits),
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_state.iteration,
        "converged": result.converged,
        "notes": list(result.notes),
    }


def _rd_result_text(data):
    lines = [f"{key}: {val}" for key, val in data.items()]
    return "\n".join(lines) + "\n"


def run_discrete(ns):
    try:
        with open(ns.source) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read source file: {exc}")
    except ValueError as exc:
        raise CliError(f"source file is not valid JSON: {exc}")
    try:
        pmf, dist = load_source(data)
    except (DimensionMismatchError, DegenerateInputError, ValueError) as exc:
        raise CliError(str(exc))
    weights = _weights(ns)
    cfg = _load_ba_config(ns)
    if ns.beta is not None and ns.targets is not None:
        raise CliError("give either --targets or --beta, not both")
    if ns.beta is not None:
        mult = Multipliers(*ns.beta)
        result = rd_from_multipliers(pmf, dist, weights, mult, cfg)
    elif ns.targets is not None:
        outer = OuterConfig(inner=cfg)
        result = solve_rd(pmf, dist, weights, tuple(ns.targets), outer)
    else:
        raise CliError("discrete requires --targets or --beta")
    if ns.trace:
        trace_rows = [
            {"iteration": i, "lagrangian_nats": v}
            for i, v in enumerate(result.inner_state.trace)
        ]
        _emit(_csv_text(["iteration", "lagrangian_nats"], trace_rows),
              ns.trace)
    data = _rd_result_dict(result, ns.bits)
    if ns.format == "json":
        _emit(_json_dumps(data), ns.output)
    elif ns.format == "csv":
        _emit(_csv_text(list(data.keys())[:-1], [data]), ns.output)
    else:
        _emit(_rd_result_text(data), ns.output)
    return 0 if result.converged else 2


def _gaussian_dict(sol, bits):
    cert = None
    if sol.certificate is not None:
        c = sol.certificate
        cert = {
            "H": [list(map(float, row)) for row in c.H],
            "b": c.b,
            "omega1": c.omega1, "omega2": c.omega2,
            "eta1": c.eta1, "eta2": c.eta2,
            "gamma1": c.gamma1, "gamma2": c.gamma2,
            "beta1": c.b1, "beta2": c.b2,
            "K0": c.K0,
            "sigma_v1_sq": c.sigma_v1_sq, "sigma_v2_sq": c.sigma_v2_sq,
            "det_H": c.det_H, "det_G1": c.det_G1, "det_G2": c.det_G2,
        }
    unit = "_bits" if bits else "_nats"
    return {
        "region": sol.region,
        "m1": sol.m1,
        "m2": sol.m2,
        "sigma0sq": sol.sigma0sq,
        "rd" + unit: _scale(sol.rd_value, bits),
        "R0": _scale(sol.rate_triple[0], bits),
        "R1": _scale(sol.rate_triple[1], bits),
        "R2": _scale(sol.rate_triple[2], bits),
        "representable": sol.representable,
        "notes": list(sol.notes),
        "certificate": cert,
    }


def run_gaussian(ns):
    weights = _weights(ns)
    if ns.targets is None:
        raise CliError("gaussian requires --targets")
    try:
        spec = GaussianSpec(ns.rho)
        sol = solve_gaussian_rd(weights, tuple(ns.targets), spec)
    except RegimeError as exc:
        raise CliError(str(exc))
    data = _gaussian_dict(sol, ns.bits)
    exit_code = 0
    if ns.check is not None:
        points = ns.check
        pmf, dist = discretize_gaussian(ns.rho, 4.0, points)
        outer = OuterConfig(inner=BaConfig(
            epsilon=1e-6, max_iterations=200, u_size=2 * points - 1,
            init=ns.seed or 0))
        result = solve_rd(pmf, dist, weights, tuple(ns.targets), outer)
        data["check"] = {
            "grid_points": points,
            "ba_rd" + ("_bits" if ns.bits else "_nats"): _scale(
                result.rd_value, ns.bits
            ),
            "difference": _scale(result.rd_value - sol.rd_value, ns.bits),
            "converged": result.converged,
        }
        if not result.converged:
            exit_code = 2
    if ns.format == "text":
        _emit(_rd_result_text(data), ns.output)
    else:
        _emit(_json_dumps(data), ns.output)
    return exit_code


def run_wyner(ns):
    if ns.targets is None:
        raise CliError("wyner requires --targets")
    try:
        spec = GaussianSpec(ns.rho)
        value, case = wyner_ci(tuple(ns.targets), spec)
    except RegimeError as exc:
        raise CliError(str(exc))
    unit = "_bits" if ns.bits else "_nats"
    data = {"C_W" + unit: _scale(value, ns.bits), "case": case}
    if ns.format == "text":
        _emit(_rd_result_text(data), ns.output)
    else:
        _emit(_json_dumps(data), ns.output)
    return 0


def _axis_values(ns):
    if ns.values:
        vals = [float(v) for v in ns.values.split(",") if v.strip()]
    elif ns.start is not None and ns.stop is not None and ns.num:
        vals = list(np.linspace(ns.start, ns.stop, ns.num))
    else:
        vals = []
    if not vals:
        raise CliError("empty sweep grid: give --values or --start/--stop/--num")
    return vals


def run_sweep(ns):
    values = _axis_values(ns)
    if ns.targets is None:
        raise CliError("sweep requires --targets (fixed D values)")
    targets = tuple(ns.targets)
    if ns.tradeoff:
        if ns.rho is None:
            raise CliError("--tradeoff requires --rho")
        rows = tradeoff_rows(ns.rho, targets[1], values)
        header = ["axis_value", "R0", "R1plusR2", "rd_nats", "case",
                  "wyner_point"]
        _emit(_csv_text(header, rows), ns.output)
        return 0
    weights = _weights(ns)
    if ns.source:
        with open(ns.source) as fh:
            pmf, dist = load_source(json.load(fh))
        cfg = OuterConfig(inner=_load_ba_config(ns))
        rows = sweep(pmf, dist, weights, targets, ns.axis, values, cfg)
        failed = any(not row["converged"] for row in rows)
        _emit(_csv_text(SWEEP_CSV_HEADER.split(","), rows), ns.output)
        return 2 if failed else 0
    if ns.rho is None:
        raise CliError("sweep requires --source or --rho")
    spec = GaussianSpec(ns.rho)
    rows = []
    for v in values:
        d1, d2 = targets
        w = weights
        if ns.axis == "D1":
            d1 = v
        elif ns.axis == "D2":
            d2 = v
        else:
            w = Weights(weights.a0 * v, weights.a1 * v, weights.a2 * v)
        try:
            sol = solve_gaussian_rd(w, (d1, d2), spec)
            cert = sol.certificate
            rows.append({
                "axis_value": v,
                "rd_nats": sol.rd_value,
                "R0_nats": sol.rate_triple[0],
                "R1_nats": sol.rate_triple[1],
                "R2_nats": sol.rate_triple[2],
                "D1": d1, "D2": d2,
                "beta1": cert.b1 if cert else float("nan"),
                "beta2": cert.b2 if cert else float("nan"),
                "outer_iters": 0,
                "converged": True,
            })
        except RegimeError as exc:
            rows.append({
                "axis_value": v, "rd_nats": float("nan"),
                "R0_nats": float("nan"), "R1_nats": float("nan"),
                "R2_nats": float("nan"), "D1": d1, "D2": d2,
                "beta1": float("nan"), "beta2": float("nan"),
                "outer_iters": 0, "converged": False,
                "error": str(exc),
            })
    failed = any(not row["converged"] for row in rows)
    _emit(_csv_text(SWEEP_CSV_HEADER.split(","), rows), ns.output)
    return 2 if failed else 0


def _verify_checks(tamper=False, seed=7):
    """The built-in verification corpus: (name, passed, detail) triples."""
    checks = []
    pmf, dist = dsbs(0.2), hamming_distortion(2)
    weights = Weights(1.0, 1.0, 1.0)
    mult = Multipliers(4.0, 4.0)
    cfg = BaConfig(epsilon=1e-9, max_iterations=2000, init=seed)
    state = minimize_lagrangian(pmf, dist, weights, mult, cfg)
    kt = kt_check(pmf, state.prior, dist, weights, mult, tol=1e-3)
    if tamper:
        # perturb the converged prior to demonstrate KT sensitivity
        q_u = state.prior.q_u.copy()
        q_u[0] += 0.2
        q_u /= q_u.sum()
        from .model import ReproductionPrior

        bad_prior = ReproductionPrior(q_u, state.prior.q1, state.prior.q2)
        kt = kt_check(pmf, bad_prior, dist, weights, mult, tol=1e-3)
    checks.append(("kt-dsbs", kt.passed,
                   f"max mu-sum excesses {kt.max_v0 - 1:.2e}/"
                   f"{kt.max_v1 - 1:.2e}/{kt.max_v2 - 1:.2e}"))
    f_conv = ba_mod.update_f(state.prior, dist, weights, mult)
    v0, v1, v2 = mu_sums(pmf, f_conv)
    mu_ok = (
        v0.max() <= 1.0 + 1e-3
        and (v1.max(axis=1) <= v0 + 1e-4).all()
        and (v2.max(axis=1) <= v0 + 1e-4).all()
    )
    checks.append(("mu-sums-dsbs", bool(mu_ok), f"max v0 {v0.max():.6f}"))
    descent = all(
        state.trace[i + 1] <= state.trace[i] + 1e-9
        for i in range(len(state.trace) - 1)
    )
    checks.append(("lagrangian-descent", descent,
                   f"{len(state.trace)} iterations"))
    # closed-form certificate identities
    spec = GaussianSpec(0.5)
    cert_ok = True
    detail = ""
    for aw, D in [((1, 1, 1), (0.3, 0.3)), ((1, 0.9, 0.8), (0.4, 0.5)),
                  ((1, 1, 1), (0.9, 0.5))]:
        sol = solve_gaussian_rd(Weights(*aw), D, spec)
        c = sol.certificate
        if c is None:
            continue
        a0, a1, a2 = aw
        slack = max(abs(c.gamma1 * (c.b1 / a1 - c.omega1)),
                    abs(c.gamma2 * (c.b2 / a2 - c.omega2)))
        drec = max(
            abs(c.eta1 / (2 * (c.gamma1 + c.b1 / a1 * c.eta1)) - D[0]),
            abs(c.eta2 / (2 * (c.gamma2 + c.b2 / a2 * c.eta2)) - D[1]),
        )
        ident = abs(
            0.5 * a0 * math.log(1 - 0.25)
            + 0.5 * (a0 - a1 - a2) * math.log(c.det_H)
            + 0.5 * a1 * math.log(c.det_G1)
            + 0.5 * a2 * math.log(c.det_G2)
            - sol.rd_value
        )
        if slack > 1e-8 or drec > 1e-8 or ident > 1e-9:
            cert_ok = False
            detail = f"at {aw}, {D}: slack {slack:.1e} drec {drec:.1e} id {ident:.1e}"
    checks.append(("gaussian-certificates", cert_ok, detail or "3 points"))
    # BA vs closed form on a coarse discretized Gaussian
    pmf_g, dist_g = discretize_gaussian(0.5, 4.0, 33)
    outer = OuterConfig(inner=BaConfig(epsilon=1e-5, max_iterations=120,
                                       u_size=33, init=seed))
    result = solve_rd(pmf_g, dist_g, Weights(1, 1, 1), (0.3, 0.3), outer)
    analytic = solve_gaussian_rd(Weights(1, 1, 1), (0.3, 0.3), spec).rd_value
    diff = abs(result.rd_value - analytic)
    checks.append(("ba-vs-analytic", diff <= 5e-2,
                   f"|BA - closed form| = {diff:.4f} nats"))
    return checks


def run_verify(ns):
    if ns.corpus not in ("default",):
        raise CliError(f"unknown corpus {ns.corpus!r}")
    checks = _verify_checks(tamper=ns.tamper, seed=ns.seed or 7)
    lines = []
    all_ok = True
    for name, ok, detail in checks:
        all_ok = all_ok and ok
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name:24s}  {detail}")
    lines.append(f"{'PASS' if all_ok else 'FAIL'}  overall")
    _emit("\n".join(lines) + "\n", ns.output)
    return 0 if all_ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graywyner",
        description="Weighted Gray-Wyner rate-distortion solver",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, alpha=True, targets=True):
        if alpha:
            p.add_argument("--alpha", type=float, nargs=3, required=True,
                           metavar=("A0", "A1", "A2"))
        if targets:
            p.add_argument("--targets", type=float, nargs=2,
                           metavar=("D1", "D2"))
        p.add_argument("--bits", action="store_true",
                       help="present rates in bits instead of nats")
        p.add_argument("--format", choices=("json", "csv", "text"),
                       default="json")
        p.add_argument("--output", default=None,
                       help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("discrete", help="finite-alphabet iterative solver")
    common(p)
    p.add_argument("--source", required=True, help="source JSON file")
    p.add_argument("--beta", type=float, nargs=2, metavar=("B1", "B2"),
                   help="fixed multipliers instead of distortion targets")
    p.add_argument("--config", help="solver config JSON file")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--u-size", type=int, default=None)
    p.add_argument("--trace", help="write iteration trace CSV to this path")
    p.set_defaults(func=run_discrete)

    p = sub.add_parser("gaussian", help="closed-form bivariate Gaussian")
    common(p)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--check", type=int, nargs="?", const=33, default=None,
                   metavar="POINTS",
                   help="cross-check against the iterative solver on an "
                        "N-point discretization")
    p.set_defaults(func=run_gaussian)

    p = sub.add_parser("wyner", help="lossy common information")
    common(p, alpha=False)
    p.add_argument("--rho", type=float, required=True)
    p.set_defaults(func=run_wyner)

    p = sub.add_parser("sweep", help="parameter sweep CSV")
    common(p, alpha=False)
    p.add_argument("--alpha", type=float, nargs=3, default=(1.0, 1.0, 1.0),
                   metavar=("A0", "A1", "A2"))
    p.add_argument("--axis", choices=("D1", "D2", "alpha_scale"),
                   default="D1")
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--num", type=int, default=None)
    p.add_argument("--source", help="discrete source JSON (else --rho)")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--config", help="solver config JSON file")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--u-size", type=int, default=None)
    p.add_argument("--tradeoff", action="store_true",
                   help="emit the R0 vs R1+R2 tradeoff table at unit weights")
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("verify", help="run the invariant corpus")
    p.add_argument("--corpus", default="default")
    p.add_argument("--tamper", action="store_true",
                   help="perturb one update to demonstrate KT sensitivity")
    p.add_argument("--output", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=run_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return ns.func(ns)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (DimensionMismatchError, DegenerateInputError, RegimeError,
            ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
