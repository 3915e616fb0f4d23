"""Command-line entry point: ``proofdoors <subcommand> ...``.

Exit codes: 0 ok, 2 input error, 3 size blow-up or exhausted budget,
4 validation failure.  ``solve`` additionally uses 10 (SAT) and 20 (UNSAT).
Diagnostics go to stderr; stdout stays empty unless ``--json-to-stdout``.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
import time
from importlib import metadata

from . import absorption, door, perturb, scaling
from .chunking import ChunkError, ChunkSpec, build_chunked, var_chunk_map
from .cnf import CnfFormula, DimacsError, read_dimacs, write_dimacs
from .interpolation import (DEFAULT_BVE_THRESHOLD, DEFAULT_CAP, KINDS, CutProblem, emit_qdimacs,
                            validate_interpolant)
from .solver import (DratError, ExternalSolverError, SolverConfig, Status, check_drat, read_drat,
                     run_external_solver, solve)

log = logging.getLogger("proofdoors")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_INVALID = 4
EXIT_SAT = 10
EXIT_UNSAT = 20

LATTICE = "lattice"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


class Run:
    """Per-invocation provenance collected into the run manifest."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.monotonic()
        self.inputs: dict = {}
        self.outputs: list = []
        self.result: dict = {}

    def input(self, path):
        if path and os.path.isfile(path):
            with open(path, "rb") as fh:
                self.inputs[str(path)] = hashlib.sha256(fh.read()).hexdigest()
        return path

    def output(self, path):
        self.outputs.append(str(path))
        return path

    def manifest(self, code: int) -> dict:
        params = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        try:
            version = metadata.version("artifact")
        except metadata.PackageNotFoundError:
            version = None
        return {
            "command": self.args.command,
            "parameters": params,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": version,
            "python": sys.version.split()[0],
            "wall_time_s": round(time.monotonic() - self.t0, 6),
            "exit_code": code,
            "result": self.result,
        }


# -- input helpers -----------------------------------------------------------------

def _need_file(path, what: str):
    if path is None:
        raise CliError(f"missing {what}")
    if not os.path.isfile(path):
        raise CliError(f"{what} not found: {path}")
    return path


def _load_cnf(run: Run, path) -> CnfFormula:
    _need_file(path, "CNF file")
    run.input(path)
    return read_dimacs(path)


def _load_chunked(run: Run, cnf_path, map_path):
    f = _load_cnf(run, cnf_path)
    _need_file(map_path, "chunk map")
    run.input(map_path)
    return build_chunked(f, ChunkSpec.load(map_path))


def _caps(args) -> door.Caps:
    return door.Caps(args.clause_cap, args.bve_threshold, args.max_conflicts, not args.no_validate)


def _emit(args, payload: dict):
    if args.json_to_stdout:
        json.dump(payload, sys.stdout, indent=1)
        sys.stdout.write("\n")


# -- subcommands ---------------------------------------------------------------------

def cmd_solve(args, run: Run) -> int:
    f = _load_cnf(run, args.cnf)
    if args.external is not None:
        res = run_external_solver(f, args.external or None, args.time_limit)
    else:
        res = solve(f, SolverConfig(max_conflicts=args.max_conflicts, time_limit=args.time_limit))
    if args.proof and res.status is Status.UNSAT:
        res.trace.write(run.output(args.proof))
    print(f"s {res.status.value}", file=sys.stderr)
    run.result = {"status": res.status.value, "stats": res.stats}
    payload = {"status": res.status.value}
    if res.sat and res.model is not None:
        payload["model"] = res.model.true_literals()
    _emit(args, payload)
    return {Status.SAT: EXIT_SAT, Status.UNSAT: EXIT_UNSAT}.get(res.status, EXIT_BUDGET)


def _write_door(pd: door.Proofdoor, cf, out_dir, args, run: Run) -> int:
    params = None
    if pd.complete and args.params:
        params = door.measure_params(pd, cf, args.max_conflicts)
    path = door.write_archive(pd, out_dir, params)
    run.output(path)
    if pd.failures:
        for t, msg in pd.failures:
            log.error("%s: cut %d failed: %s", pd.kind, t, msg)
        return EXIT_BUDGET
    if not args.no_validate and not pd.all_valid():
        bad = [t for t, v in enumerate(pd.validations) if v is None or not v.ok]
        log.error("%s: interpolant validation failed at cuts %s", pd.kind, bad)
        return EXIT_INVALID
    return EXIT_OK


def cmd_proofdoor(args, run: Run) -> int:
    cf = _load_chunked(run, args.cnf, args.chunks)
    caps = _caps(args)
    kinds = KINDS if args.kind == LATTICE else (args.kind,)
    codes, summary = [], {}
    for kind in kinds:
        out_dir = os.path.join(args.out, kind) if args.kind == LATTICE else args.out
        try:
            pd = door.build_proofdoor(cf, kind, caps)
        except door.ProofdoorError as e:
            log.error("%s: %s", kind, e)
            codes.append(EXIT_INVALID)
            summary[kind] = {"error": str(e)}
            continue
        codes.append(_write_door(pd, cf, out_dir, args, run))
        summary[kind] = {"sizes": pd.sizes, "complete": pd.complete, "archive": out_dir}
    run.result = summary
    _emit(args, summary)
    return max(codes)


def _load_door(run: Run, directory) -> list[CnfFormula]:
    manifest = os.path.join(directory, "manifest.json")
    _need_file(manifest, "proofdoor manifest")
    run.input(manifest)
    itps, _ = door.read_archive(directory)
    return itps


def cmd_absorb(args, run: Run) -> int:
    cf = _load_chunked(run, args.cnf, args.chunks)
    f = cf.base
    if args.solve:
        res = solve(f, SolverConfig(max_conflicts=args.max_conflicts))
        if res.status is Status.SAT:
            raise CliError("formula is satisfiable; there is no refutation to partition", EXIT_INVALID)
        if res.status is Status.UNKNOWN:
            raise CliError("solver budget exhausted", EXIT_BUDGET)
        trace = res.trace
    else:
        trace = read_drat(run.input(_need_file(args.drat, "DRAT proof")))
    check = check_drat(f, trace)
    if not check:
        raise CliError(f"DRAT check failed at addition {check.failed_index}: {check.reason}")
    if args.door:
        itps = _load_door(run, args.door)
    else:
        pd = door.strongest_proofdoor(cf, _caps(args))
        if pd.failures:
            raise CliError(f"strongest proofdoor failed at cut {pd.failure_index}", EXIT_BUDGET)
        itps = pd.interpolants
    pp = absorption.partition_trace(trace, var_chunk_map(cf), cf.k, f, args.empty_clause)
    try:
        h = absorption.heatmap(pp, itps, jobs=args.jobs)
    except ValueError as e:
        raise CliError(str(e)) from None
    os.makedirs(args.out, exist_ok=True)
    for name, text in (("heatmap.csv", h.to_csv()), ("heatmap.svg", h.to_svg()), ("absorption.json", h.to_json())):
        with open(run.output(os.path.join(args.out, name)), "w") as fh:
            fh.write(text)
    summary = h.summary()
    run.result = {"incrementality_score": summary["incrementality_score"]}
    log.info("incrementality score %.4f", summary["incrementality_score"])
    _emit(args, summary)
    return EXIT_OK


def cmd_classify(args, run: Run) -> int:
    _need_file(args.csv, "timing CSV")
    run.input(args.csv)
    families = scaling.read_timing_csv(args.csv, args.size_measure)
    fn = scaling.classify_parity if args.parity else scaling.classify
    if args.jobs > 1 and len(families) > 1:
        from concurrent.futures import ProcessPoolExecutor
        names = sorted(families)
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reps = list(ex.map(fn, [families[n] for n in names], [args.degree] * len(names)))
        reports = dict(zip(names, reps))
    else:
        reports = {name: fn(families[name], args.degree) for name in sorted(families)}
    text = scaling.report_json(reports)
    if args.out:
        with open(run.output(args.out), "w") as fh:
            fh.write(text + "\n")
    if args.svg_dir:
        os.makedirs(args.svg_dir, exist_ok=True)
        for name, rep in reports.items():
            safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)
            path = os.path.join(args.svg_dir, f"{safe}.svg")
            with open(run.output(path), "w") as fh:
                fh.write(scaling.plot_svg(families[name], rep))
    run.result = {name: rep.label for name, rep in reports.items()}
    for name, rep in reports.items():
        extra = f" parity={rep.parity_labels}" if rep.parity_labels else ""
        log.info("%s: %s%s", name, rep.label, extra)
    _emit(args, json.loads(text))
    return EXIT_OK


def cmd_scramble(args, run: Run) -> int:
    out = args.out
    sidecar = out + ".scramble.json"
    if args.undo:
        f = _load_cnf(run, args.cnf)
        rec = perturb.ScrambleRecord.load(run.input(_need_file(args.undo, "scramble record")))
        write_dimacs(perturb.unscramble(f, rec), run.output(out))
        return EXIT_OK
    if args.kind == perturb.BY_ITERATION:
        if not args.chunks:
            raise CliError("by-iteration scrambling needs --chunks")
        cf = _load_chunked(run, args.cnf, args.chunks)
        g, rec = perturb.scramble_by_iteration(cf, args.seed)
        spec = perturb.scrambled_chunk_spec(cf, rec)
        spec.dump(run.output(out + ".chunks.json"))
    else:
        f = _load_cnf(run, args.cnf)
        g, rec = perturb.scramble_by_clause(f, args.seed)
    write_dimacs(g, run.output(out), [f"{rec.kind} scramble, seed {rec.seed}"])
    rec.dump(run.output(sidecar))
    run.result = {"kind": rec.kind, "seed": rec.seed}
    _emit(args, rec.to_json())
    return EXIT_OK


def cmd_validate_itp(args, run: Run) -> int:
    a = _load_cnf(run, args.a)
    b = _load_cnf(run, args.b)
    p = CutProblem.of(a, b)
    if args.qdimacs:
        with open(run.output(args.qdimacs), "w") as fh:
            fh.write(emit_qdimacs(p))
    if args.itp is None:
        return EXIT_OK
    i = _load_cnf(run, args.itp)
    v = validate_interpolant(p, i, args.max_conflicts)
    run.result = {"validation": v.to_json()}
    _emit(args, {"implied": v.implied, "refutes": v.refutes, "scoped": v.scoped, "ok": v.ok})
    if v.ok:
        return EXIT_OK
    if None in v:
        log.error("validation indeterminate (budget): %s", v)
        return EXIT_BUDGET
    log.error("interpolant conditions violated: %s", v)
    return EXIT_INVALID


def cmd_report(args, run: Run) -> int:
    """Collect proofdoor manifests and absorption summaries under a directory."""
    if not os.path.isdir(args.dir):
        raise CliError(f"not a directory: {args.dir}")
    doors, absorb = {}, {}
    for root, _dirs, files in sorted(os.walk(args.dir)):
        rel = os.path.relpath(root, args.dir)
        if "manifest.json" in files:
            with open(run.input(os.path.join(root, "manifest.json"))) as fh:
                m = json.load(fh)
            doors[rel] = {k: m.get(k) for k in ("kind", "k", "sizes", "complete", "final_check", "params")}
        if "absorption.json" in files:
            with open(run.input(os.path.join(root, "absorption.json"))) as fh:
                absorb[rel] = json.load(fh)
    report = {"proofdoors": doors, "absorption": absorb}
    lines = []
    for rel, d in doors.items():
        lines.append(f"proofdoor {rel}: kind={d['kind']} k={d['k']} max|I|={max(d['sizes'] or [0])} "
                     f"complete={d['complete']} params={d['params']}")
    for rel, a in absorb.items():
        lines.append(f"absorption {rel}: {a['rows']}x{a['cols']} score={a['incrementality_score']:.4f}")
    for line in lines:
        print(line, file=sys.stderr)
    if args.out:
        with open(run.output(args.out), "w") as fh:
            json.dump(report, fh, indent=1)
    _emit(args, report)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------------

def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-to-stdout", action="store_true", help="print the result JSON on stdout")
    common.add_argument("--config", help="key=value file supplying defaults; flags win")
    common.add_argument("--manifest", help="where to write the run manifest JSON")
    common.add_argument("--jobs", type=_positive(int), default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--max-conflicts", type=_positive(int), default=None, help="conflict budget per solver call")

    caps = argparse.ArgumentParser(add_help=False, parents=[budget])
    caps.add_argument("--clause-cap", type=_positive(int), default=DEFAULT_CAP)
    caps.add_argument("--bve-threshold", type=_positive(int), default=DEFAULT_BVE_THRESHOLD)
    caps.add_argument("--no-validate", action="store_true", help="skip interpolant validation")

    p = argparse.ArgumentParser(prog="proofdoors", description="Proofdoor and absorption analysis of unsatisfiable CNF.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common, budget], help="CDCL solve; exit 10 SAT, 20 UNSAT")
    s.add_argument("cnf")
    s.add_argument("proof", nargs="?", help="write a DRAT proof here on UNSAT")
    s.add_argument("--time-limit", type=_positive(float), default=None)
    s.add_argument("--external", nargs="?", const="", default=None,
                   help="use an external solver command (default $PROOFDOOR_SOLVER)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("proofdoor", parents=[common, caps], help="compute a proofdoor archive")
    s.add_argument("cnf")
    s.add_argument("--chunks", required=False, help="chunk-map JSON")
    s.add_argument("--kind", choices=KINDS + (LATTICE,), default=KINDS[0])
    s.add_argument("--out", required=True, help="archive directory")
    s.add_argument("--params", action="store_true", help="measure (c, w, s) and store them in the manifest")
    s.set_defaults(func=cmd_proofdoor)

    s = sub.add_parser("absorb", parents=[common, caps], help="absorption heatmap of a refutation")
    s.add_argument("cnf")
    s.add_argument("--chunks")
    s.add_argument("--door", help="proofdoor archive directory (default: compute the strongest)")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--drat", help="plain-text DRAT proof")
    g.add_argument("--solve", action="store_true", help="produce the proof with the built-in solver")
    s.add_argument("--empty-clause", choices=(absorption.EMPTY_TO_LAST, absorption.EMPTY_TO_FIRST),
                   default=absorption.EMPTY_TO_LAST, help="chunk receiving the final empty clause")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_absorb)

    s = sub.add_parser("classify", parents=[common], help="label timing families by scaling class")
    s.add_argument("csv")
    s.add_argument("--degree", type=_positive(int), default=scaling.DEFAULT_DEGREE)
    s.add_argument("--parity", action="store_true", help="also classify odd and even depths separately")
    s.add_argument("--size-measure", choices=("clauses", "vars"), default="clauses")
    s.add_argument("--out", help="report JSON path")
    s.add_argument("--svg-dir", help="write one envelope plot per family here")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("scramble", parents=[common], help="seeded clause-order scrambling")
    s.add_argument("cnf")
    s.add_argument("--kind", choices=(perturb.BY_ITERATION, perturb.BY_CLAUSE), default=perturb.BY_CLAUSE)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--chunks", help="chunk-map JSON (by-iteration only)")
    s.add_argument("--undo", help="scramble record to invert instead of scrambling")
    s.add_argument("--out", required=True, help="output DIMACS path")
    s.set_defaults(func=cmd_scramble)

    s = sub.add_parser("validate-itp", parents=[common, budget], help="check interpolant conditions")
    s.add_argument("--a", required=True, help="A side CNF")
    s.add_argument("--b", required=True, help="B side CNF")
    s.add_argument("--itp", help="candidate interpolant CNF")
    s.add_argument("--qdimacs", help="also export A with its local variables existentially quantified")
    s.set_defaults(func=cmd_validate_itp)

    s = sub.add_parser("report", parents=[common], help="summarize archives and heatmaps under a directory")
    s.add_argument("dir")
    s.add_argument("--out", help="report JSON path")
    s.set_defaults(func=cmd_report)
    return p


def _config_defaults(parser: argparse.ArgumentParser, command: str, path) -> dict:
    """Typed defaults from a key=value file, validated against the subcommand's options."""
    _need_file(path, "config file")
    cp = configparser.ConfigParser(interpolation=None)
    with open(path) as fh:
        try:
            cp.read_string("[run]\n" + fh.read())
        except configparser.Error as e:
            raise CliError(f"config file {path}: {e}") from None
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[command]
    actions = {a.dest: a for a in subparser._actions if a.option_strings}
    out = {}
    for key, raw in cp["run"].items():
        dest = key.strip().replace("-", "_")
        if dest not in actions or dest in ("config", "manifest"):
            raise CliError(f"config file {path}: unknown key {key!r} for {command}")
        act = actions[dest]
        if isinstance(act, (argparse._StoreTrueAction,)):
            out[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                out[dest] = act.type(raw.strip())
            except (argparse.ArgumentTypeError, ValueError) as e:
                raise CliError(f"config file {path}: {key}: {e}") from None
        else:
            out[dest] = raw.strip()
        if act.choices is not None and out[dest] not in act.choices:
            raise CliError(f"config file {path}: {key} must be one of {list(act.choices)}")
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    run = Run(args)
    try:
        if args.config:
            defaults = _config_defaults(parser, args.command, args.config)
            run.input(args.config)
            # re-parse so explicit flags override the file
            sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
            sub.choices[args.command].set_defaults(**defaults)
            args = parser.parse_args(argv)
            run.args = args
            log.info("config %s supplied %s", args.config, sorted(defaults))
        code = args.func(args, run)
    except CliError as e:
        log.error("%s", e)
        code = e.code
    except (DimacsError, ChunkError, DratError, scaling.SchemaError, perturb.ScrambleError,
            json.JSONDecodeError, OSError) as e:
        log.error("input error: %s", e)
        code = EXIT_INPUT
    except ExternalSolverError as e:
        log.error("external solver: %s", e)
        code = EXIT_INPUT
    target = args.manifest
    if target is None and os.path.isdir(getattr(args, "out", None) or ""):
        target = os.path.join(args.out, "run_manifest.json")
    if target:
        try:
            with open(target, "w") as fh:
                json.dump(run.manifest(code), fh, indent=1, default=str)
        except OSError as e:
            log.error("cannot write run manifest: %s", e)
    return code


if __name__ == "__main__":
    sys.exit(main())
