"""The `mcm` command line tool.

Subcommands mirror the library layers: `schedule` prints exponent schedules
with their twist ledgers, `build` writes family files, `verify` runs the
identity checkers, `scan` runs the finite-field scans, `coup` exposes the
degree arithmetic, and `run`/`replay` drive config-based pipelines. Every
subcommand emits a canonical JSON report on stdout (and to --json PATH when
given); the exit code is 0 iff nothing FAILed.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .exact_algebra import Field, QQ, from_literal
from .finite_geometry import (
    base_locus_scan,
    characterization_crosscheck,
    rank_condition_census,
    smoothness_check,
)
from .identity_verifier import (
    verify_cramer,
    verify_gluing,
    verify_hidden,
    verify_surjectivity,
    verify_transition,
)
from .pipeline import (
    RunConfig,
    _glue_units,
    _transition_units,
    parse_config,
    replay,
    report_to_json,
    run_pipeline,
    standard_forms,
)
from .product_coup import (
    NoRepresentation,
    effective_bound_NN2,
    frobenius_split,
    verify_product_decomposition,
    verify_semigroup_bound,
)
from .schedule import (
    ProblemShape,
    build_schedule,
    effective_bound_report,
    ledger_to_dict,
    schedule_to_dict,
    twist_ledger,
    validate_schedule,
)
from .section_builder import build_sections, load_family, save_family


def _csv_ints(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    return tuple(int(x) for x in text.replace(",", " ").split())


def _shape(text: str) -> ProblemShape:
    parts = _csv_ints(text)
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("shape must be N,c[,r]")
    return ProblemShape(*parts) if len(parts) == 3 else ProblemShape(parts[0], parts[1], 0)


def _field(text: str) -> Field:
    return QQ if text in ("Q", "QQ", "0") else Field(int(text))


def _emit(report: dict, json_path: Optional[str]) -> None:
    text = report_to_json(report)
    sys.stdout.write(text)
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(text)


def _exit_code(report: dict) -> int:
    return 0 if report.get("ok", True) else 1


def _build_family_from_args(args) -> object:
    field = _field(args.field)
    if args.mode == "mcm":
        sched = build_schedule(args.shape, heart=args.heart, eps=_csv_ints(args.eps))
        return build_sections(args.shape, "mcm", field=field, schedule=sched,
                              seed=args.seed)
    return build_sections(args.shape, "general_fermat", field=field,
                          lambdas=_csv_ints(args.lambdas),
                          degrees=_csv_ints(args.degrees), seed=args.seed)


# ----- subcommand handlers -----


def _cmd_schedule(args) -> int:
    shape = ProblemShape(args.N, args.c, args.r)
    sched = build_schedule(shape, heart=args.heart, eps=_csv_ints(args.eps))
    validation = validate_schedule(sched)
    ledger = ledger_to_dict(twist_ledger(sched))
    info = schedule_to_dict(sched)
    report = {
        "op": "schedule",
        "shape": info["shape"],
        "delta": info["delta"],
        "mu": info["mu"],
        "d": info["d"],
        "heart": info["heart"],
        "eps": info["eps"],
        "ledger": ledger,
        "bounds": effective_bound_report(sched),
        "validation": validation,
        "ok": validation["ok"] and ledger["ok"],
    }
    _emit(report, args.json)
    return _exit_code(report)


def _cmd_build(args) -> int:
    fam = _build_family_from_args(args)
    save_family(fam, args.out)
    report = {
        "op": "build",
        "out": args.out,
        "mode": fam.mode,
        "field": args.field,
        "seed": args.seed,
        "sections": len(fam.sections),
        "degrees": [F.z_degree() for F in fam.sections],
        "ok": True,
    }
    _emit(report, args.json)
    return _exit_code(report)


def _cmd_verify(args) -> int:
    if args.what in ("forms", "gluing"):
        fam = load_family(args.family)
        cfg = RunConfig(shape=fam.shape, mode=fam.mode, seed=args.seed)
        checks = []
        ok = True
        for u in _glue_units(cfg, fam):
            rep = verify_gluing(fam, u["selection"], u["j1"], u["j2"],
                                which=u["which"], mode=args.mode,
                                trials=args.trials, seed=args.seed)
            checks.extend(rep["checks"])
            ok = ok and rep["ok"]
        report = {"op": "verify-forms", "family": args.family,
                  "checks": checks, "ok": ok}
    elif args.what == "transition":
        fam = load_family(args.family)
        cfg = RunConfig(shape=fam.shape, mode=fam.mode, seed=args.seed)
        checks = []
        ok = True
        for u in _transition_units(cfg, fam):
            rep = verify_transition(fam, u["selection"], u["omit"], u["l1"],
                                    u["l2"], which=u["which"], kind=u["kind"],
                                    trials=args.trials, seed=args.seed)
            checks.extend(rep["checks"])
            ok = ok and rep["ok"]
        report = {"op": "verify-transition", "family": args.family,
                  "checks": checks, "ok": ok}
    elif args.what == "cramer":
        report = verify_cramer(args.rows, seed=args.seed, trials=args.trials)
    elif args.what == "surjectivity":
        report = verify_surjectivity(args.N, args.d, trials=args.trials,
                                     seed=args.seed)
    elif args.what == "hidden":
        fam = load_family(args.family)
        report = verify_hidden(fam, _csv_ints(args.vanished) or (),
                               _csv_ints(args.selection) or ())
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.what)
    _emit(report, args.json)
    return _exit_code(report)


def _cmd_scan(args) -> int:
    if args.what == "census":
        report = rank_condition_census(args.a, args.b, args.q, mode=args.mode,
                                   sample_size=args.sample, seed=args.seed,
                                   budget=args.budget_census)
    else:
        fam = load_family(args.family)
        q = args.q if args.q else fam.field.p
        if not q:
            raise SystemExit("scan over a rational family needs --q")
        if args.what == "smooth":
            report = smoothness_check(fam, q)
        elif args.what == "base-locus":
            forms = standard_forms(fam)
            report = base_locus_scan(fam, forms, q,
                                     vanished=_csv_ints(args.vanished) or ())
            report["forms"] = len(forms)
        elif args.what == "crosscheck":
            report = characterization_crosscheck(fam, q, sample=args.sample,
                                                 seed=args.seed)
        else:  # pragma: no cover - argparse restricts choices
            raise ValueError(args.what)
    _emit(report, args.json)
    return _exit_code(report)


def _cmd_coup(args) -> int:
    if args.what == "split":
        try:
            p, q = frobenius_split(args.d, args.s)
            report = {"op": "coup-split", "d": args.d, "s": args.s,
                      "p": p, "q": q, "ok": True}
        except NoRepresentation as exc:
            report = {"op": "coup-split", "d": args.d, "s": args.s,
                      "error": str(exc), "ok": False}
    elif args.what == "bound":
        report = effective_bound_NN2(args.N)
    elif args.what == "semigroup":
        report = verify_semigroup_bound(args.s, args.horizon)
    elif args.what == "decompose":
        field = _field(args.field)
        N = args.shape.N
        factors = [[from_literal(lit.strip(), N, field)
                    for lit in group.split(";")]
                   for group in args.factors]
        report = verify_product_decomposition(factors, args.shape, args.q)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.what)
    _emit(report, args.json)
    return _exit_code(report)


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget_terms is not None:
        cfg.max_terms = args.budget_terms
    if args.budget_points is not None:
        cfg.max_points = args.budget_points
    if args.budget_census is not None:
        cfg.max_census = args.budget_census
    report = run_pipeline(cfg)
    _emit(report, args.json)
    return _exit_code(report)


def _cmd_replay(args) -> int:
    with open(args.witness) as fh:
        witness = json.load(fh)
    report = replay(witness)
    _emit(report, args.json)
    return _exit_code(report)


# ----- parser -----


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcm",
        description="Exact construction and verification of negatively "
                    "twisted symmetric differential forms.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="build and validate an exponent schedule")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--heart", type=int, default=2)
    p.add_argument("--eps", help="comma-separated slack offsets")
    p.add_argument("--json", help="also write the report to this path")
    p.set_defaults(fn=_cmd_schedule)

    p = sub.add_parser("build", help="build a section family and save it")
    p.add_argument("--shape", type=_shape, required=True, help="N,c,r")
    p.add_argument("--mode", choices=("mcm", "general_fermat"), default="mcm")
    p.add_argument("--field", default="5", help="prime p, or Q for rationals")
    p.add_argument("--heart", type=int, default=2)
    p.add_argument("--eps")
    p.add_argument("--lambdas", help="explicit exponents (general_fermat)")
    p.add_argument("--degrees", help="section degrees (general_fermat)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="family file to write")
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("verify", help="run identity checks")
    p.add_argument("what", choices=("forms", "gluing", "cramer", "transition",
                                    "surjectivity", "hidden"))
    p.add_argument("--family", help="family file (forms/transition/hidden)")
    p.add_argument("--mode", choices=("exact", "probabilistic"), default="exact")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rows", type=int, default=4, help="matrix size (cramer)")
    p.add_argument("--N", type=int, default=2, help="ambient dim (surjectivity)")
    p.add_argument("--d", type=int, default=3, help="degree (surjectivity)")
    p.add_argument("--vanished", help="coordinates set to zero (hidden)")
    p.add_argument("--selection", help="differential rows (hidden)")
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("scan", help="finite-field scans")
    p.add_argument("what", choices=("base-locus", "smooth", "census", "crosscheck"))
    p.add_argument("--family")
    p.add_argument("--q", type=int, help="field size (defaults to the family's)")
    p.add_argument("--a", type=int, default=2, help="census row pairs")
    p.add_argument("--b", type=int, default=2, help="census rows")
    p.add_argument("--mode", choices=("exhaustive", "sample"), default="exhaustive")
    p.add_argument("--sample", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-census", type=int, default=2 ** 28)
    p.add_argument("--vanished", help="coordinates set to zero (base-locus)")
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_scan)

    p = sub.add_parser("coup", help="product-coup degree arithmetic")
    p.add_argument("what", choices=("split", "bound", "semigroup", "decompose"))
    p.add_argument("--d", type=int, default=0)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--shape", type=_shape, help="N,c,r (decompose)")
    p.add_argument("--q", type=int, default=3, help="field size (decompose)")
    p.add_argument("--field", default="3")
    p.add_argument("--factors", action="append", default=[],
                   help="factors of one section, ';'-separated literals; "
                        "repeat per section")
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_coup)

    p = sub.add_parser("run", help="run a config-driven pipeline")
    p.add_argument("--config", required=True, help="INI config path")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--budget-terms", type=int)
    p.add_argument("--budget-points", type=int)
    p.add_argument("--budget-census", type=int)
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("replay", help="re-run the unit behind a failure witness")
    p.add_argument("--witness", required=True, help="witness JSON path")
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_replay)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
