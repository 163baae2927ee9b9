"""Command-line front end: run schemes, audits, and identity checks.

Exit codes: 0 success, 2 scenario validation/parse problems, 3 scheme or
domain errors.  With a fixed seed every command writes byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .audit import (
    Condition,
    Table1Config,
    build_table1,
    check_c1_linearity,
    check_c2,
    check_c3,
    check_collective_adapted,
    contextuality_witness,
    demonstrate_nogo,
)
from .errors import ParseError, QworklabError, ValidationError
from .linalg import HERMITICITY_TOL, UNITARITY_TOL
from .pointer import PointerConfig, gaussian_meter, interpolation_sweep
from .scenario import load_scenario
from .schemes import (
    SchemeId,
    W_MERGE_TOL,
    WorkDistribution,
    distribution,
    random_pure_decomposition,
    spectral_pure_decomposition,
)
from .thermo import identity_suite

TOLERANCES = {
    "hermiticity": HERMITICITY_TOL,
    "unitarity": UNITARITY_TOL,
    "work_merge": W_MERGE_TOL,
}

_CONVENTION_FLAGS = {
    SchemeId.STATE_DEPENDENT: (
        "initial energy of a rho eigenstate taken as its energy expectation value"
    ),
    SchemeId.CONSISTENT_HISTORIES: (
        "driving compiled with midpoint-rule factors on the history grid"
    ),
    SchemeId.COLLECTIVE_TWO_COPY: "auto lambda maximizes POVM validity (lambda_max)",
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _metadata(seed) -> dict:
    return {"tool": "qworklab", "version": __version__, "seed": seed,
            "tolerances": TOLERANCES}


def emit_distribution(dist: WorkDistribution, fmt: str, seed=None) -> str:
    """Render a distribution as CSV (work,weight) or JSON with metadata."""
    if fmt == "csv":
        lines = ["work,weight"]
        lines += [f"{_fmt(w)},{_fmt(p)}" for w, p in dist.atoms]
        return "\n".join(lines) + "\n"
    doc = {
        "scheme": dist.scheme.value,
        "is_quasi": dist.is_quasi,
        "atoms": [[w, p] for w, p in dist.atoms],
        "metadata": _metadata(seed),
    }
    note = _CONVENTION_FLAGS.get(dist.scheme)
    if note:
        doc["conventions"] = [note]
    return json.dumps(doc, indent=2) + "\n"


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_dist(args) -> int:
    s = load_scenario(args.scenario)
    scheme = SchemeId(args.scheme.replace("-", "_"))
    opts = {}
    if scheme is SchemeId.CONSISTENT_HISTORIES:
        opts["k_steps"] = args.k_steps
    if scheme is SchemeId.COLLECTIVE_TWO_COPY and args.lam != "auto":
        opts["lam"] = float(args.lam)
    if scheme is SchemeId.SUB_ENSEMBLE:
        if args.members:
            opts["decomposition"] = random_pure_decomposition(s.rho, args.members, args.seed)
        else:
            opts["decomposition"] = spectral_pure_decomposition(s.rho)
    dist = distribution(scheme, s, **opts)
    _write(emit_distribution(dist, args.format, seed=args.seed), args.out)
    return 0


def _cmd_audit(args) -> int:
    scheme = SchemeId(args.scheme.replace("-", "_"))
    wanted = {"c1": [Condition.C1_LINEAR_POVM], "c2": [Condition.C2_TPM_AGREEMENT],
              "c3": [Condition.C3_FIRST_LAW]}.get(args.condition)
    checks = {
        Condition.C1_LINEAR_POVM: check_c1_linearity,
        Condition.C2_TPM_AGREEMENT: check_c2,
        Condition.C3_FIRST_LAW: check_c3,
    }
    conditions = wanted or list(checks)
    verdicts = [checks[c](scheme, args.dim, args.samples, args.seed).to_dict()
                for c in conditions]
    doc = {"scheme": scheme.value, "dim": args.dim, "samples": args.samples,
           "verdicts": verdicts, "metadata": _metadata(args.seed)}
    note = _CONVENTION_FLAGS.get(scheme)
    if note:
        doc["conventions"] = [note]
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_table1(args) -> int:
    report = build_table1(Table1Config(dim=args.dim, samples=args.samples, seed=args.seed))
    doc = report.to_dict()
    doc["metadata"] = _metadata(args.seed)
    doc["conventions"] = sorted(set(_CONVENTION_FLAGS.values()))
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_nogo(args) -> int:
    report = demonstrate_nogo(args.dim, args.seed)
    doc = report.to_dict()
    doc["metadata"] = _metadata(args.seed)
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_witness(args) -> int:
    witness = contextuality_witness(args.budget, args.seed)
    doc = {"found": witness is not None, "metadata": _metadata(args.seed)}
    if witness is not None:
        doc["witness"] = witness.to_dict()
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_thermo(args) -> int:
    report = identity_suite(args.samples, args.seed)
    doc = {"check": args.check, "report": report, "metadata": _metadata(args.seed)}
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0 if report["pass"] else 3


def _cmd_collective(args) -> int:
    report = check_collective_adapted(args.dim, args.samples, args.seed)
    doc = report.to_dict()
    doc["metadata"] = _metadata(args.seed)
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_pointer_sweep(args) -> int:
    s = load_scenario(args.scenario)
    if args.density:
        cfg = PointerConfig.for_scenario(s, args.coupling, args.spread)
        readout = gaussian_meter(s, cfg)
        if args.format == "csv":
            lines = ["x,density,work,work_density"]
            for x, px, w, pw in zip(readout.xs, readout.density,
                                    readout.work_axis(), readout.work_density()):
                lines.append(f"{_fmt(x)},{_fmt(px)},{_fmt(w)},{_fmt(pw)}")
            _write("\n".join(lines) + "\n", args.out)
        else:
            doc = {"coupling": args.coupling, "spread": args.spread,
                   "xs": readout.xs.tolist(), "density": readout.density.tolist(),
                   "metadata": _metadata(args.seed)}
            _write(json.dumps(doc, indent=2) + "\n", args.out)
        return 0
    ratios = np.logspace(np.log10(args.ratio_min), np.log10(args.ratio_max), args.points)
    sweep = interpolation_sweep(s, args.coupling, ratios)
    if args.format == "csv":
        lines = ["spread_over_coupling,l1_to_tpm,l1_to_margenau_hill"]
        lines += [f"{_fmt(r)},{_fmt(dt)},{_fmt(dm)}" for r, dt, dm in sweep]
        _write("\n".join(lines) + "\n", args.out)
    else:
        doc = {"sweep": [{"ratio": r, "l1_to_tpm": dt, "l1_to_margenau_hill": dm}
                         for r, dt, dm in sweep],
               "metadata": _metadata(args.seed)}
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qworklab",
        description="Quantum work-distribution laboratory: schemes, audits, identities.",
    )
    parser.add_argument("--version", action="version", version=f"qworklab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    scheme_names = [s.value.replace("_", "-") for s in SchemeId
                    if s is not SchemeId.GAUSSIAN_POINTER]

    p = sub.add_parser("dist", help="evaluate one scheme on a scenario file")
    p.add_argument("--scheme", required=True, choices=scheme_names)
    p.add_argument("--scenario", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-steps", type=int, default=8, help="history grid steps")
    p.add_argument("--lam", default="auto", help="collective mixing parameter or 'auto'")
    p.add_argument("--members", type=int, default=0,
                   help="random sub-ensemble size (0 = spectral decomposition)")
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser("audit", help="run condition checks for one scheme")
    p.add_argument("--scheme", required=True, choices=scheme_names)
    p.add_argument("--condition", choices=["c1", "c2", "c3", "all"], default="all")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_audit)

    p = sub.add_parser("table1", help="audit every scheme and print the survey table")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_table1)

    p = sub.add_parser("nogo", help="numerically reproduce the no-go argument")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_nogo)

    p = sub.add_parser("witness", help="search for a negative joint quasi-probability")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_witness)

    p = sub.add_parser("thermo", help="run the free-energy/coherence identity suite")
    p.add_argument("--check", choices=["all"], default="all")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_thermo)

    p = sub.add_parser("collective", help="adapted two-copy condition report")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_collective)

    p = sub.add_parser("pointer-sweep",
                       help="pointer-scheme interpolation sweep or meter density")
    p.add_argument("--scenario", required=True)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--ratio-min", type=float, default=0.1)
    p.add_argument("--ratio-max", type=float, default=20.0)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--density", action="store_true",
                   help="emit the meter readout density instead of the sweep")
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_pointer_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        path = getattr(exc, "path", "")
        sys.stderr.write(f"scenario error{f' at {path!r}' if path else ''}: {exc}\n")
        return 2
    except QworklabError as exc:
        sys.stderr.write(f"scheme error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
