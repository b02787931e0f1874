"""Command-line interface: ``corrgeom <command> ...``.

Exit codes: 0 success or equivalent, 1 inequivalent or asymmetric,
2 inconclusive, 64 usage or input error, 66 missing input file, 70
numerical failure.

Every command writes a run report (inputs with content hashes, parameters,
outputs, seed, verdicts, wall time) to ``--report``, to ``<output>.report.json``
when ``-o`` is given, or else to stderr. Everything in the report except the
``timing`` block is deterministic.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from pathlib import Path

import numpy as np

from .correlation import pushforward, regularity_report, resolution_study
from .equivalence import (
    Equivalent,
    Inconclusive,
    check_equivalence,
    check_symmetry,
    diffeo_check,
    dirac_gauge_check,
    gauge_check,
    induced_translation_unitary,
    verdict_witness,
)
from .errors import CorrGeomError, NumericalError, UsageError
from .jsonio import dumps, pairs_to_complex, read_json, sha256_bytes, sha256_file
from .mixing import MixSpec, mix, mixture_diagnostics
from .model import (
    LatticeDiracModel,
    circle_plane_waves,
    circle_reflection,
    circle_rotation,
    circle_trig_pair,
    gauge_function,
    lattice_dirac_sea,
    model_from_dict,
    torus_tetrads,
)
from .operator_space import SignatureBound, fpq_dimension, fpq_rank_check
from .serialize import geometry_from_dict, geometry_to_dict

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_NOINPUT, EXIT_SOFTWARE = 64, 66, 70

BUILTINS = ("circle-plane-waves", "circle-trig-pair", "torus-tetrads", "lattice-dirac-sea")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Run:
    """Collects the run report while a command executes."""

    def __init__(self, args):
        self.args = args
        self.inputs: list[dict] = []
        self.outputs: list[str] = []
        self.verdicts: list = []

    def read(self, path):
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(str(path))
        self.inputs.append({"path": str(path), "sha256": sha256_file(path)})
        return read_json(path)

    def emit(self, payload) -> None:
        text = dumps(payload)
        out = getattr(self.args, "output", None)
        if out:
            Path(out).write_text(text, encoding="utf-8")
            self.outputs.append(str(out))
        else:
            sys.stdout.write(text)
            self.outputs.append(f"stdout:sha256:{sha256_bytes(text.encode())}")

    def emit_text(self, text: str) -> None:
        out = getattr(self.args, "output", None)
        if out:
            Path(out).write_text(text, encoding="utf-8")
            self.outputs.append(str(out))
        else:
            sys.stdout.write(text)
            self.outputs.append(f"stdout:sha256:{sha256_bytes(text.encode())}")

    def report(self, wall_time: float, exit_code: int) -> None:
        params = {
            k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "report", "output", "command") and v is not None
        }
        payload = {
            "command": self.args.command,
            "inputs": self.inputs,
            "parameters": params,
            "outputs": self.outputs,
            "seed": getattr(self.args, "seed", None),
            "verdicts": self.verdicts,
            "exit_code": exit_code,
            "timing": {"wall_time_s": wall_time},
        }
        text = dumps(payload)
        if self.args.report:
            Path(self.args.report).write_text(text, encoding="utf-8")
        elif getattr(self.args, "output", None):
            Path(f"{self.args.output}.report.json").write_text(text, encoding="utf-8")
        else:
            sys.stderr.write(text)


# ------------------------------------------------------------------ models


def _builtin_model(args):
    name = args.builtin
    n = args.n
    if name == "circle-plane-waves":
        return circle_plane_waves(n or 32, args.kmax, radius=args.radius)
    if name == "circle-trig-pair":
        return circle_trig_pair(n or 64, radius=args.radius)
    if name == "torus-tetrads":
        return torus_tetrads(n or 4)
    if name == "lattice-dirac-sea":
        return lattice_dirac_sea(_lattice_params(args), args.m_fields)
    raise UsageError(f"unknown builtin {name!r}")


def _lattice_params(args, run: _Run | None = None) -> LatticeDiracModel:
    sites = args.n or 16
    potential = (0.0,) * sites
    if getattr(args, "potential_file", None):
        data = run.read(args.potential_file) if run else read_json(args.potential_file)
        potential = tuple(float(a) for a in data)
    return LatticeDiracModel(sites, args.spacing, args.mass, args.charge, potential)


def _load_model(args, run: _Run):
    if args.builtin and args.model:
        raise UsageError("give either a model file or --builtin, not both")
    if args.builtin:
        return _builtin_model(args)
    if not args.model:
        raise UsageError("a model file or --builtin is required")
    return model_from_dict(run.read(args.model))


def _load_geometry(path, run: _Run):
    return geometry_from_dict(run.read(path))


def _verdict_exit(verdict) -> int:
    if isinstance(verdict, Equivalent):
        return EXIT_OK
    if isinstance(verdict, Inconclusive):
        return EXIT_INCONCLUSIVE
    return EXIT_NEGATIVE


def _summary(verdict) -> dict:
    return {"verdict": verdict.verdict, "residual": verdict.residual}


# ---------------------------------------------------------------- commands


def cmd_build(args, run: _Run) -> int:
    model = _load_model(args, run)
    geom = pushforward(model, args.agg_tol)
    run.emit(geometry_to_dict(geom))
    run.verdicts.append({"atom_count": len(geom), "total_mass": geom.total_mass})
    return EXIT_OK


def cmd_compare(args, run: _Run) -> int:
    g1 = _load_geometry(args.geometry1, run)
    g2 = _load_geometry(args.geometry2, run)
    verdict = check_equivalence(g1, g2, args.tol, args.seed)
    run.emit(verdict.to_dict())
    run.verdicts.append(_summary(verdict))
    return _verdict_exit(verdict)


def _gauge_chi(args, model, run: _Run):
    if args.chi_file:
        data = run.read(args.chi_file)
        chi = np.asarray(data["chi"], dtype=float)
        grad = None if data.get("grad") is None else np.asarray(data["grad"], dtype=float)
        return chi, grad
    return gauge_function(model, args.chi, const=args.chi_const, seed=args.seed)


def cmd_gauge_check(args, run: _Run) -> int:
    if args.builtin == "lattice-dirac-sea":
        params = _lattice_params(args, run)
        model = lattice_dirac_sea(params, args.m_fields)
        chi, _ = _gauge_chi(args, model, run)
        report = dirac_gauge_check(params, chi, args.m_fields, args.tol, args.agg_tol, args.seed)
    else:
        model = _load_model(args, run)
        chi, grad = _gauge_chi(args, model, run)
        report = gauge_check(
            model,
            chi,
            args.q,
            args.tol,
            chi_grad=grad,
            agg_tol=args.agg_tol,
            seed=args.seed,
            allow_noncovariant=args.allow_noncovariant,
        )
    run.emit(report.to_dict())
    run.verdicts.append({**_summary(report.verdict), "deviation": report.deviation})
    return _verdict_exit(report.verdict)


def cmd_diffeo_check(args, run: _Run) -> int:
    model = _load_model(args, run)
    n = model.n_points
    chosen = sum(x is not None and x is not False for x in (args.rotate, args.reflect or None, args.diffeo_file))
    if chosen != 1:
        raise UsageError("choose exactly one of --rotate, --reflect, --diffeo-file")
    if args.rotate is not None:
        perm, jac = circle_rotation(n, args.rotate)
    elif args.reflect:
        perm, jac = circle_reflection(n)
    else:
        data = run.read(args.diffeo_file)
        perm = np.asarray(data["perm"], dtype=int)
        jac = np.asarray(data["jacobians"], dtype=float)
    verdict = diffeo_check(model, perm, jac, args.tol, args.agg_tol, args.seed)
    run.emit(verdict.to_dict())
    run.verdicts.append(_summary(verdict))
    return _verdict_exit(verdict)


def cmd_symmetry_check(args, run: _Run) -> int:
    if args.geometry:
        if args.builtin or args.model:
            raise UsageError("give either --geometry or a model, not both")
        if not args.unitary:
            raise UsageError("--geometry needs --unitary")
        geom = _load_geometry(args.geometry, run)
        data = run.read(args.unitary)
        u = pairs_to_complex(data, (geom.f, geom.f))
        shifts = [None]
    else:
        model = _load_model(args, run)
        geom = pushforward(model, args.agg_tol)
        shifts = list(range(model.n_points)) if args.all_shifts else [args.shift]
    results = []
    for s in shifts:
        if s is not None:
            u = induced_translation_unitary(model, s)
        rep = check_symmetry(geom, u, args.tol)
        entry = {"shift": s, **rep.to_dict()}
        entry.pop("pairing")
        results.append(entry)
    ok = all(r["symmetric"] for r in results)
    run.emit({"symmetric": ok, "checks": results})
    run.verdicts.append({"symmetric": ok, "max_discrepancy": max(r["discrepancy"] for r in results)})
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_mix(args, run: _Run) -> int:
    g1 = _load_geometry(args.geometry1, run)
    g2 = _load_geometry(args.geometry2, run)
    aligner = None
    if args.aligner_from:
        aligner = verdict_witness(run.read(args.aligner_from))
    out = mix(g1, g2, MixSpec(args.tau, aligner), args.agg_tol)
    provenance = {
        "tau": args.tau,
        "parents": [run.inputs[0]["sha256"], run.inputs[1]["sha256"]],
    }
    if args.aligner_from:
        provenance["aligner"] = run.inputs[2]["sha256"]
    run.emit(geometry_to_dict(out, provenance))
    run.verdicts.append({"atom_count": len(out), "total_mass": out.total_mass})
    return EXIT_OK


def cmd_inspect(args, run: _Run) -> int:
    geom = _load_geometry(args.geometry, run)
    payload = {"diagnostics": mixture_diagnostics(geom), "regularity": regularity_report(geom)}
    run.emit(payload)
    return EXIT_OK


def cmd_dim_check(args, run: _Run) -> int:
    bound = SignatureBound(args.p, args.q)
    expected = fpq_dimension(args.f, bound)
    measured = fpq_rank_check(args.f, bound, trials=args.trials, seed=args.seed)
    payload = {"f": args.f, "p": args.p, "q": args.q, "formula": expected, "measured_rank": measured}
    if args.output:
        run.emit(payload)
    else:
        run.emit_text(f"{expected}\nmeasured rank {measured}\n")
    run.verdicts.append({"formula": expected, "measured_rank": measured})
    return EXIT_OK if expected == measured else EXIT_NEGATIVE


def cmd_resolution(args, run: _Run) -> int:
    try:
        ns = [int(x) for x in args.ns.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--ns must be a comma-separated list of integers: {exc}") from exc
    name = args.builtin

    def family(n):
        args.n = n
        return _builtin_model(args)

    rows = resolution_study(family, ns, args.agg_tol)
    args.n = None
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["N", "atom_count", "min_separation"], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else repr(v)) for k, v in row.items()})
        run.emit_text(buf.getvalue())
    else:
        run.emit({"family": name, "rows": rows})
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _common(p, seed=True, output=True):
    p.add_argument("--tol", type=float, default=1e-8, help="equivalence tolerance (relative to atom scale)")
    p.add_argument("--agg-tol", type=float, default=1e-8, help="atom aggregation tolerance")
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if output:
        p.add_argument("-o", "--output", help="output file (default stdout)")
    p.add_argument("--report", help="run report path")


def _model_args(p, positional=True):
    if positional:
        p.add_argument("model", nargs="?", help="model JSON file")
    p.add_argument("--builtin", choices=BUILTINS)
    p.add_argument("--n", type=int, help="sites (circle, lattice) or sites per dimension (torus)")
    p.add_argument("--kmax", type=int, default=1)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--spacing", type=float, default=1.0, help="lattice spacing")
    p.add_argument("--mass", type=float, default=0.5, help="lattice mass")
    p.add_argument("--charge", type=float, default=1.0, help="lattice charge")
    p.add_argument("--m-fields", type=int, default=8, help="lattice sea size")
    p.add_argument("--potential-file", help="JSON list of lattice link potentials")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corrgeom", description="Correlation geometries of discrete effective models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="pushforward geometry of a model")
    _model_args(p)
    _common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("compare", help="unitary equivalence of two geometries")
    p.add_argument("geometry1")
    p.add_argument("geometry2")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gauge-check", help="U(1) gauge invariance of a model's geometry")
    _model_args(p)
    p.add_argument("--chi", choices=("zero", "const", "sin", "random"), default="sin")
    p.add_argument("--chi-const", type=float, default=0.7)
    p.add_argument("--chi-file", help='JSON {"chi": [...], "grad": [[...]]?}')
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--allow-noncovariant", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_gauge_check)

    p = sub.add_parser("diffeo-check", help="equivalence under a discrete diffeomorphism")
    _model_args(p)
    p.add_argument("--rotate", type=int, help="circle rotation by this many sites")
    p.add_argument("--reflect", action="store_true", help="circle reflection")
    p.add_argument("--diffeo-file", help='JSON {"perm": [...], "jacobians": [...]}')
    _common(p)
    p.set_defaults(func=cmd_diffeo_check)

    p = sub.add_parser("symmetry-check", help="invariance of a geometry under a unitary")
    _model_args(p)
    p.add_argument("--geometry", help="geometry file (with --unitary)")
    p.add_argument("--unitary", help="JSON flat row-major [re, im] pairs")
    p.add_argument("--shift", type=int, default=1, help="induced lattice translation")
    p.add_argument("--all-shifts", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_symmetry_check)

    p = sub.add_parser("mix", help="convex combination of two geometries")
    p.add_argument("geometry1")
    p.add_argument("geometry2")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--aligner-from", help="equivalence verdict whose witness aligns geometry1")
    _common(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("inspect", help="descriptive statistics of a geometry")
    p.add_argument("geometry")
    _common(p, seed=False)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("dim-check", help="dimension formula versus measured tangent rank")
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--trials", type=int, default=8)
    _common(p)
    p.set_defaults(func=cmd_dim_check)

    p = sub.add_parser("resolution", help="atom count and separation versus sampling")
    _model_args(p, positional=False)
    p.add_argument("--ns", default="8,16,32,64")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _common(p, seed=False)
    p.set_defaults(func=cmd_resolution)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "resolution" and not args.builtin:
        parser.error("resolution needs --builtin")
    run = _Run(args)
    start = time.perf_counter()
    try:
        code = args.func(args, run)
    except FileNotFoundError as exc:
        print(f"corrgeom: missing input: {exc}", file=sys.stderr)
        code = EXIT_NOINPUT
    except UsageError as exc:
        print(f"corrgeom: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"corrgeom: numerical failure: {exc}", file=sys.stderr)
        code = EXIT_SOFTWARE
    except CorrGeomError as exc:
        print(f"corrgeom: {exc}", file=sys.stderr)
        code = EXIT_SOFTWARE
    run.report(time.perf_counter() - start, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
