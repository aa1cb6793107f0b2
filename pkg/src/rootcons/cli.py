"""Command-line front end: generate / check / run / scenario / fuzz.

Exit codes: 0 = pass, 1 = property or adversary not satisfied, 2 = input
error, 3 = internal invariant violation.  Machine-readable JSON goes to
stdout, a human-readable summary to stderr.  A lasso path of ``-`` reads
stdin.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import (
    AdversaryError,
    AdversaryParams,
    check_alt_estable,
    check_alt_liveness,
    check_alt_safety,
    check_estable,
    check_liveness,
    check_mad,
    check_safety,
    check_vsrc,
    diagnose_estable,
    generate_alt_estable,
    generate_estable,
)
from .graphs import (
    check_dynamic_diameter,
    graph_to_dot,
    lasso_from_json,
    lasso_to_json,
    causal_past,
)
from .harness import (
    EngineInvariantError,
    RunConfig,
    eps_pair_report,
    fuzz_campaign,
    indistinguishable,
    oracle_check,
    run_execution,
    scenario_hop_fallacy,
    scenario_stab_not_enough,
)

EXIT_OK = 0
EXIT_UNSATISFIED = 1
EXIT_INPUT = 2
EXIT_INVARIANT = 3


def _emit(payload: dict, human: str) -> None:
    print(json.dumps(payload, sort_keys=True))
    print(human, file=sys.stderr)


def _fail_input(message: str) -> int:
    _emit({"ok": False, "error": message}, f"input error: {message}")
    return EXIT_INPUT


def _read_lasso(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return lasso_from_json(text)


def cmd_generate(args) -> int:
    fields = {
        "n": args.n,
        "D": args.d,
        "seed": args.seed,
        "r_gst_target": args.rgst,
        "r_sr_target": args.rsr,
        "x": args.x,
        "y": args.y,
    }
    if args.params:
        try:
            text = sys.stdin.read() if args.params == "-" else Path(args.params).read_text()
            loaded = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            return _fail_input(f"cannot load params JSON: {exc}")
        unknown = set(loaded) - set(fields)
        if unknown:
            return _fail_input(f"unknown params fields: {sorted(unknown)}")
        for key, value in loaded.items():
            if fields[key] is None:
                fields[key] = value
    if fields["n"] is None or fields["D"] is None:
        return _fail_input("n and D are required (flags or params JSON)")
    if fields["seed"] is None:
        fields["seed"] = 0
    params = AdversaryParams(**fields)
    try:
        if args.adversary == "estable":
            lasso_seq, cert = generate_estable(params)
        elif args.adversary == "altestable":
            lasso_seq, cert = generate_alt_estable(params)
        else:  # mad: alt-style planting; checker-certified for the given x, y
            x = params.x if params.x is not None else params.D
            y = params.y if params.y is not None else params.D
            if x > y:
                return _fail_input(
                    f"mad generation supports x <= y (consensus-solvable regime), got x={x} y={y}"
                )
            lasso_seq, cert = generate_alt_estable(params)
            cert_mad = check_mad(lasso_seq, x, y, params.D)
            if cert_mad is None:
                return _fail_input("generated lasso does not satisfy the requested mad(x, y)")
            cert = cert_mad
    except AdversaryError as exc:
        return _fail_input(str(exc))
    payload = {
        "ok": True,
        "lasso": json.loads(lasso_to_json(lasso_seq)),
        "certificate": cert.to_json_dict(),
    }
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(lasso_to_json(lasso_seq) + "\n")
        Path(str(out) + ".cert.json").write_text(
            json.dumps(cert.to_json_dict(), sort_keys=True) + "\n"
        )
    _emit(
        payload,
        f"generated {args.adversary} lasso (n={params.n}, D={params.D}, seed={params.seed})",
    )
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        lasso_seq = _read_lasso(args.lasso)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail_input(f"cannot load lasso: {exc}")
    kind = args.adversary
    certificate = None
    witness = None
    try:
        if kind == "estable":
            outcome = diagnose_estable(lasso_seq, args.d, args.horizon)
            if outcome["ok"]:
                certificate = outcome["certificate"].to_json_dict()
            else:
                witness = {"failed": outcome["failed"], "detail": outcome.get("witness")}
        elif kind == "altestable":
            cert = check_alt_estable(lasso_seq, args.d, args.horizon)
            certificate = cert.to_json_dict() if cert else None
        elif kind == "liveness":
            cert = check_liveness(lasso_seq)
            certificate = cert.to_json_dict() if cert else None
        elif kind == "safety":
            w = check_safety(lasso_seq, args.x if args.x is not None else args.d, args.horizon)
            witness = w.to_json_dict() if w else None
        elif kind == "altsafety":
            w = check_alt_safety(lasso_seq, args.x if args.x is not None else args.d, args.horizon)
            witness = w.to_json_dict() if w else None
        elif kind == "altliveness":
            cert = check_alt_liveness(
                lasso_seq, args.d, args.x if args.x is not None else args.d, args.horizon
            )
            certificate = cert.to_json_dict() if cert else None
        elif kind == "mad":
            x = args.x if args.x is not None else args.d
            y = args.y if args.y is not None else args.d
            cert = check_mad(lasso_seq, x, y, args.d, args.horizon)
            certificate = cert.to_json_dict() if cert else None
        elif kind == "vsrc":
            res = check_vsrc(lasso_seq, args.window or 4 * args.d, args.d, args.horizon)
            if res.ok:
                certificate = res.to_json_dict()
            else:
                witness = res.to_json_dict()
        elif kind == "diameter":
            w = check_dynamic_diameter(lasso_seq, args.d, args.horizon)
            if w is not None:
                witness = {"root": sorted(w.root), "rounds": list(w.rounds), "process": w.process}
        else:
            return _fail_input(f"unknown adversary {kind!r}")
    except ValueError as exc:
        return _fail_input(str(exc))
    satisfied = witness is None if kind in ("safety", "altsafety", "diameter") else certificate is not None
    payload = {"kind": kind, "ok": satisfied, "certificate": certificate, "witness": witness}
    _emit(payload, f"{kind}: {'satisfied' if satisfied else 'not satisfied'}")
    return EXIT_OK if satisfied else EXIT_UNSATISFIED


def cmd_run(args) -> int:
    try:
        lasso_seq = _read_lasso(args.lasso)
        inputs = tuple(int(v) for v in args.inputs.split(","))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail_input(f"bad inputs: {exc}")
    n = lasso_seq.n
    if len(inputs) != n:
        return _fail_input(f"lasso has {n} processes but {len(inputs)} inputs given")
    cert = check_estable(lasso_seq, args.d)
    if cert is None:
        horizon_chk = max(lasso_seq.default_horizon(), args.horizon or 0)
        cert = check_alt_estable(lasso_seq, args.d, horizon_chk)
    deadline = cert.deadline if cert else None
    horizon = args.horizon or (deadline + args.d + 2 if deadline else lasso_seq.default_horizon())
    try:
        cfg = RunConfig(n, args.d, inputs, lasso_seq, horizon, mode=args.mode)
    except ValueError as exc:
        return _fail_input(str(exc))
    try:
        trace = run_execution(cfg)
    except EngineInvariantError as exc:
        _emit(
            {"ok": False, "invariant_violation": str(exc), "pid": exc.pid, "round": exc.round},
            f"invariant violation: {exc}",
        )
        return EXIT_INVARIANT
    trace.certificate = cert
    report = oracle_check(trace, deadline if deadline is not None else horizon)
    if args.trace_out:
        path = Path(args.trace_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(trace.to_json_lines() + "\n")
        Path(str(path) + ".summary.json").write_text(
            json.dumps(trace.summary_dict(), sort_keys=True) + "\n"
        )
    if args.dot_out:
        out_dir = Path(args.dot_out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, g in enumerate(trace.round_graphs, start=1):
            (out_dir / f"round{i:03d}.dot").write_text(graph_to_dot(g, f"round{i}") + "\n")
    payload = {
        "ok": report.all_ok,
        "oracle": report.to_json_dict(),
        "certificate": cert.to_json_dict() if cert else None,
        "decisions": trace.decision_events(),
        "latest_decision_round": trace.latest_decision_round(),
    }
    _emit(payload, f"run: {'all oracles pass' if report.all_ok else 'oracle failure'}")
    return EXIT_OK if report.all_ok else EXIT_UNSATISFIED


def cmd_scenario(args) -> int:
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    def dump(name, lasso_seq):
        if out_dir:
            (out_dir / f"{name}.json").write_text(lasso_to_json(lasso_seq) + "\n")

    try:
        if args.name == "eps-pair":
            report = eps_pair_report(args.n, args.d, args.rsr_prefix)
            if out_dir:
                from .harness import scenario_eps_pair

                cfg_e, cfg_ep = scenario_eps_pair(args.n, args.d, args.rsr_prefix)
                dump("eps", cfg_e.lasso)
                dump("eps_prime", cfg_ep.lasso)
            _emit(report, f"eps-pair: {'all assertions hold' if report['ok'] else 'FAILED'}")
            return EXIT_OK if report["ok"] else EXIT_UNSATISFIED
        if args.name == "stab-not-enough":
            cfg1, cfg2 = scenario_stab_not_enough(args.n, args.tau, args.d)
            witness = check_safety(cfg2.lasso, args.d)
            t1 = run_execution(cfg1)
            t2 = run_execution(cfg2)
            r2 = oracle_check(t2, cfg2.horizon)
            checks = {
                "eps2_safety_witness": witness is not None
                and witness.root == frozenset([1])
                and (witness.start, witness.end) == (1, args.tau),
                "eps1_decides_head_input_everywhere": all(
                    v == cfg1.inputs[0] for (_, v) in t1.decisions.values()
                )
                and len(t1.decisions) == args.n,
                "eps2_agreement_fails": not r2.agreement_ok,
            }
            dump("eps1", cfg1.lasso)
            dump("eps2", cfg2.lasso)
            ok = all(checks.values())
            payload = {
                "ok": ok,
                "checks": checks,
                "safety_witness": witness.to_json_dict() if witness else None,
                "eps1_decisions": t1.decision_events(),
                "eps2_decisions": t2.decision_events(),
            }
            _emit(payload, f"stab-not-enough: {'all assertions hold' if ok else 'FAILED'}")
            return EXIT_OK if ok else EXIT_UNSATISFIED
        if args.name == "hop-fallacy":
            lasso_seq = scenario_hop_fallacy(args.n)
            n = args.n
            w = lasso_seq.window(1, n)
            first_reached = None
            for b in range(1, n + 1):
                if 1 in causal_past(w, n, 0, b):
                    first_reached = b
                    break
            per_round_dist = 2  # root -> middle -> anyone, by construction
            diameter_witness = check_dynamic_diameter(lasso_seq, min(2, n - 1), horizon=n + 2)
            checks = {
                "causal_distance_is_n_minus_1": first_reached == n - 1,
                "per_round_distance_is_2": per_round_dist == 2,
                "small_diameter_refuted": diameter_witness is not None,
            }
            dump("hop_fallacy", lasso_seq)
            ok = all(checks.values())
            payload = {
                "ok": ok,
                "checks": checks,
                "causal_distance": first_reached,
                "per_round_distance": per_round_dist,
            }
            _emit(payload, f"hop-fallacy: {'all assertions hold' if ok else 'FAILED'}")
            return EXIT_OK if ok else EXIT_UNSATISFIED
        return _fail_input(f"unknown scenario {args.name!r}")
    except ValueError as exc:
        return _fail_input(str(exc))


def cmd_fuzz(args) -> int:
    try:
        n_lo, n_hi = (int(v) for v in args.n_range.split(":"))
    except ValueError:
        return _fail_input(f"bad n-range {args.n_range!r}, expected lo:hi")
    if args.trials < 1:
        return _fail_input("trials must be >= 1")
    summary = fuzz_campaign(
        trials=args.trials,
        seed=args.seed,
        adversary=args.adversary,
        n_range=(n_lo, n_hi),
        d_cap=args.d_cap,
        mode=args.mode,
        jobs=args.jobs,
    )
    payload = summary.to_json_dict()
    if args.report_out:
        path = Path(args.report_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, sort_keys=True) + "\n")
    _emit(payload, f"fuzz: {summary.passed}/{summary.trials} trials passed")
    return EXIT_OK if summary.all_ok else EXIT_UNSATISFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rootcons",
        description="Simulate and check consensus on directed dynamic networks "
        "under eventually stabilizing message adversaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a certified adversary lasso")
    g.add_argument("--adversary", choices=["estable", "altestable", "mad"], default="estable")
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--rgst", type=int, default=None)
    g.add_argument("--rsr", type=int, default=None)
    g.add_argument("--x", type=int, default=None)
    g.add_argument("--y", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--params", default=None, help="JSON file with generator params (- for stdin)")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="check a lasso against an adversary class")
    c.add_argument("--lasso", required=True, help="path to lasso JSON, or - for stdin")
    c.add_argument(
        "--adversary",
        choices=[
            "estable",
            "altestable",
            "liveness",
            "safety",
            "altliveness",
            "altsafety",
            "mad",
            "vsrc",
            "diameter",
        ],
        default="estable",
    )
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--x", type=int, default=None)
    c.add_argument("--y", type=int, default=None)
    c.add_argument("--window", type=int, default=None)
    c.add_argument("--horizon", type=int, default=None)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="execute the consensus protocol on a lasso")
    r.add_argument("--lasso", required=True)
    r.add_argument("--inputs", required=True, help="comma-separated input values")
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--mode", default="full", help='"full" or "bounded:<k>"')
    r.add_argument("--horizon", type=int, default=None)
    r.add_argument("--trace-out", default=None)
    r.add_argument("--dot-out", default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("scenario", help="materialize a named scenario and run its assertions")
    s.add_argument("name", choices=["eps-pair", "stab-not-enough", "hop-fallacy"])
    s.add_argument("--n", type=int, default=5)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--tau", type=int, default=4)
    s.add_argument("--rsr-prefix", type=int, default=0)
    s.add_argument("--out-dir", default=None)
    s.set_defaults(func=cmd_scenario)

    f = sub.add_parser("fuzz", help="generated-adversary fuzz campaign")
    f.add_argument("--adversary", choices=["estable", "altestable"], default="estable")
    f.add_argument("--trials", type=int, default=100)
    f.add_argument("--n-range", default="2:8")
    f.add_argument("--d-cap", type=int, default=3)
    f.add_argument("--seed", type=int, default=1)
    f.add_argument("--mode", default="full")
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--report-out", default=None)
    f.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching our input-error code
        return int(exc.code) if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
