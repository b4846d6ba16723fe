"""Command-line pipeline: evaluate -> build -> solve / oracle / band, plus exports.

Every command reads an optional JSON config (``--config``); flags override the
file.  Artifacts go to ``--output-dir`` (default ``$HANDQUBO_OUTPUT_DIR`` or
``./handqubo-out``).

Exit codes: 0 success, 2 invalid configuration or arguments, 3 unparsable input
file, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .catalog import HandParameters, build_catalog
from .errors import DomainError, HandQuboError, ParseError
from .metrics import EvaluationTable, evaluate_catalog
from .qubo import PenaltyConfig, QuboMatrix, build_qubo, decode, read_coo, write_coo
from .solvers import (
    SaParams,
    band_statistics,
    exhaustive_feasible_min,
    infeasible_dominance_check,
    simulated_anneal,
    write_band_csv,
    write_report_json,
)
from .workspace import chain_grid, fingertip_cloud, reachable_voxels, write_points_csv, write_voxel_csv

EXIT_OK, EXIT_VALIDATION, EXIT_PARSE, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "HANDQUBO_OUTPUT_DIR"

# Reference outcome used for the reproduction diagnostic printed by `oracle`.
REFERENCE_DESIGN = ("t4", "i1", "m6", "r2", "l2")
REFERENCE_OBJECTIVE = -54.770
REFERENCE_TOLERANCE = 0.25

_ANGLE = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<num>\d+(?:\.\d*)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_angle(text) -> float:
    """Parse ``"pi/36"``, ``"-pi/6"``, ``"2*pi/3"`` or a plain number (radians)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    m = _ANGLE.match(str(text).lower())
    if m:
        value = math.pi * float(m.group("num") or 1.0)
        if m.group("den"):
            value /= float(m.group("den"))
        return -value if m.group("sign") == "-" else value
    try:
        return float(text)
    except (TypeError, ValueError):
        raise DomainError(f"cannot parse angle {text!r}") from None


@dataclass
class RunConfig:
    resolution: float = math.pi / 36
    voxel_size: float = 0.05
    penalties: PenaltyConfig = field(default_factory=PenaltyConfig)
    sa: SaParams = field(default_factory=SaParams)
    output_dir: Path = Path("handqubo-out")
    d_h_override: Optional[int] = None
    hand: HandParameters = field(default_factory=HandParameters)
    threads: int = 1

    def validate(self) -> None:
        if not (math.isfinite(self.resolution) and self.resolution > 0):
            raise DomainError(f"resolution: must be positive, got {self.resolution!r}")
        if not (math.isfinite(self.voxel_size) and self.voxel_size > 0):
            raise DomainError(f"voxel_size: must be positive, got {self.voxel_size!r}")
        if self.d_h_override is not None and self.d_h_override < 1:
            raise DomainError(f"d_h_override: must be >= 1, got {self.d_h_override!r}")
        if self.threads < 1:
            raise DomainError(f"threads: must be >= 1, got {self.threads!r}")

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "voxel_size": self.voxel_size,
            "penalties": self.penalties.to_dict(),
            "sa": asdict(self.sa),
            "d_h_override": self.d_h_override,
            "hand": self.hand.to_dict(),
        }

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {"resolution", "voxel_size", "penalties", "sa", "output_dir", "d_h_override", "hand", "threads"}
        unknown = set(doc) - known
        if unknown:
            raise DomainError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        cfg = cls()
        for name, build in (
            ("resolution", parse_angle),
            ("voxel_size", float),
            ("penalties", lambda d: PenaltyConfig.from_dict(d)),
            ("sa", lambda d: SaParams(**d)),
            ("output_dir", Path),
            ("d_h_override", lambda v: None if v is None else int(v)),
            ("hand", lambda d: HandParameters.from_dict(d)),
            ("threads", int),
        ):
            if name in doc:
                try:
                    setattr(cfg, name, build(doc[name]))
                except (TypeError, ValueError) as exc:
                    raise DomainError(f"{name}: {exc}") from None
        return cfg


def _provenance(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.digest(), "tool_version": __version__}


def load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ParseError(f"{args.config}: expected a JSON object")
        cfg = RunConfig.from_dict(doc)
    else:
        doc = {}
        cfg = RunConfig()
    if "output_dir" not in doc and os.environ.get(OUTPUT_ENV):
        cfg.output_dir = Path(os.environ[OUTPUT_ENV])
    if args.output_dir is not None:
        cfg.output_dir = Path(args.output_dir)
    if getattr(args, "resolution", None) is not None:
        cfg.resolution = parse_angle(args.resolution)
    if getattr(args, "voxel_size", None) is not None:
        cfg.voxel_size = args.voxel_size
    if getattr(args, "d_h", None) is not None:
        cfg.d_h_override = args.d_h
    if getattr(args, "three_dof_mode", None) is not None:
        cfg.hand = replace(cfg.hand, three_dof_mode=args.three_dof_mode)
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    overrides = {name: getattr(args, name, None) for name in PenaltyConfig.__dataclass_fields__}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg.penalties = replace(cfg.penalties, **overrides)
    sa = {}
    for flag, name in (("reads", "num_reads"), ("sweeps", "sweeps_per_read"), ("beta_initial", "beta_initial"),
                       ("beta_final", "beta_final"), ("seed", "seed")):
        if getattr(args, flag, None) is not None:
            sa[name] = getattr(args, flag)
    if sa:
        cfg.sa = replace(cfg.sa, **sa)
    cfg.validate()
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def load_qubo(path, cfg: RunConfig) -> QuboMatrix:
    path = Path(path)
    if not path.exists():
        raise OSError(f"{path}: no such file")
    if path.suffix == ".coo":
        return read_coo(path, penalties=cfg.penalties)
    return QuboMatrix.read_json(path)


def cmd_evaluate(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    catalog = build_catalog(cfg.hand)
    table = evaluate_catalog(catalog, cfg.resolution, cfg.voxel_size, cfg.d_h_override, cfg.threads)
    table.provenance.update(_provenance(cfg))
    table.write_json(out / "evaluation.json")
    table.write_csv(out / "evaluation.csv")
    print(f"{'id':<4} {'dof':>3} {'manipulability':>15} {'score':>9} {'voxels':>7}")
    for cid in table.ids:
        print(f"{cid:<4} {table.dof[cid]:>3} {table.raw_manipulability[cid]:>15.6f} "
              f"{table.score(cid):>9.5f} {table.provenance['voxel_counts'][cid]:>7}")
    print(f"D_H = {table.d_h}; {len(table.ids)} candidates, {len(table.raw_overlap)} thumb-finger pairs")
    print(f"wrote {out / 'evaluation.json'} and {out / 'evaluation.csv'}")
    return EXIT_OK


def cmd_build(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    path = Path(args.evaluation) if args.evaluation else out / "evaluation.json"
    if not path.exists():
        raise OSError(f"{path}: no such file")
    table = EvaluationTable.read_json(path)
    q = build_qubo(table, cfg.penalties)
    q.provenance.update(_provenance(cfg))
    q.write_json(out / "qubo.json")
    write_coo(q, out / "qubo.coo")
    print(f"QUBO: n={q.n}, {q.n} diagonal entries, {len(q.offdiag)} off-diagonal entries, "
          f"constant offset {q.constant_offset}")
    print(f"wrote {out / 'qubo.json'} and {out / 'qubo.coo'}")
    return EXIT_OK


def _selection_row(q: QuboMatrix, bits) -> str:
    sel = decode(bits, q.layout)
    cells = "  ".join(f"{f}={'+'.join(v) or '-'}" for f, v in sel.chosen.items())
    return f"{cells}  one-hot={sel.one_hot_ok}  pairwise={sel.pairwise_ok}"


def cmd_solve(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    q = load_qubo(args.qubo or out / "qubo.json", cfg)
    report = simulated_anneal(q, cfg.sa)
    doc = report.to_dict(q, timing=args.timing)
    doc["provenance"] = _provenance(cfg)
    target = Path(args.report) if args.report else out / "report.json"
    write_report_json(target, doc)
    best = report.best
    print(f"reads={cfg.sa.num_reads} seed={cfg.sa.seed} distinct={len(report.samples)}")
    print(f"best     {_selection_row(q, best.assignment)}  objective={best.objective:.6f}  "
          f"frequency={best.frequency}")
    top = report.most_frequent
    print(f"frequent {_selection_row(q, top.assignment)}  objective={top.objective:.6f}  "
          f"frequency={top.frequency}")
    print(f"wrote {target}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    q = load_qubo(args.qubo or out / "qubo.json", cfg)
    res = exhaustive_feasible_min(q)
    penalty = q.penalty_part(res.assignment)
    reward = penalty - res.objective
    sel = decode(res.assignment, q.layout)
    design = tuple(v[0] for v in sel.chosen.values())
    print(f"one_hot_count={res.one_hot_count} feasible_count={res.feasible_count}")
    print(f"best {_selection_row(q, res.assignment)}  objective={res.objective:.6f}")
    print(f"penalty part={penalty:.6f} reward part={reward:.6f}")
    matches = design == REFERENCE_DESIGN
    near = abs(res.objective - REFERENCE_OBJECTIVE) <= REFERENCE_TOLERANCE
    print(f"reference design {REFERENCE_DESIGN}: {'match' if matches else 'differs'}; "
          f"objective within {REFERENCE_TOLERANCE} of {REFERENCE_OBJECTIVE}: {near}")
    doc = {
        "format": "handqubo-oracle-report",
        "version": 1,
        "one_hot_count": res.one_hot_count,
        "feasible_count": res.feasible_count,
        "best": "".join(map(str, res.assignment.tolist())),
        "selection": sel.chosen,
        "objective": res.objective,
        "penalty_part": penalty,
        "reward_part": reward,
        "reference": {"design_match": matches, "objective_within_tolerance": near},
        "provenance": _provenance(cfg),
    }
    if args.check_infeasible:
        dom = infeasible_dominance_check(q, res.objective, args.check_infeasible, cfg.sa.seed, res.assignment)
        doc["dominance"] = dom.to_dict()
        print(f"dominance: {dom.trials} trials, {dom.descents} descents, lowest infeasible "
              f"{dom.lowest_infeasible:.6f}, undercuts feasible minimum: {dom.undercuts}")
    target = out / "oracle.json"
    write_report_json(target, doc)
    print(f"wrote {target}")
    return EXIT_OK


def _nor_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DomainError(f"nor-list: expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise DomainError(f"nor-list: expected a non-empty list of positive integers, got {text!r}")
    return values


def cmd_band(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    nors = _nor_list(args.nor_list)
    if args.runs < 1:
        raise DomainError(f"runs: must be >= 1, got {args.runs}")
    q = load_qubo(args.qubo or out / "qubo.json", cfg)
    rows = band_statistics(q, nors, args.runs, cfg.sa.seed, cfg.sa)
    target = out / "band.csv"
    write_band_csv(target, rows)
    print(f"{'nor':>7} {'min':>11} {'max':>11} {'mean':>11} {'width':>9}")
    for row in rows:
        print(f"{row.nor:>7} {row.minimum:>11.5f} {row.maximum:>11.5f} {row.mean:>11.5f} {row.width:>9.5f}")
    widths = [row.width for row in rows]
    if any(b > a for a, b in zip(widths, widths[1:])):
        print("note: band width is not non-increasing across the read counts")
    print(f"wrote {target}")
    return EXIT_OK


def cmd_export(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    if args.kind == "coo":
        q = load_qubo(args.qubo or out / "qubo.json", cfg)
        target = Path(args.path) if args.path else out / "qubo.coo"
        write_coo(q, target)
    else:
        if not args.candidate:
            raise DomainError("candidate: required for voxel and point exports")
        catalog = build_catalog(cfg.hand)
        try:
            cand = catalog[args.candidate]
        except KeyError:
            raise DomainError(f"candidate: unknown id {args.candidate!r}") from None
        grid = chain_grid(cand.chain, cfg.resolution)
        target = Path(args.path) if args.path else out / f"{cand.id}_{args.kind}.csv"
        if args.kind == "voxels":
            write_voxel_csv(target, reachable_voxels(cand.chain, grid, cfg.voxel_size))
        else:
            write_points_csv(target, fingertip_cloud(cand.chain, grid))
    print(f"wrote {target}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handqubo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output-dir", help=f"artifact directory (default ${OUTPUT_ENV} or ./handqubo-out)")
    common.add_argument("--threads", type=int, help="upper bound on internal worker threads")

    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", parents=[common], help="evaluate all design candidates")
    ev.add_argument("--resolution", help="joint sampling step, e.g. pi/36")
    ev.add_argument("--voxel-size", type=float)
    ev.add_argument("--d-h", type=int, help="override the maximum hand DoF")
    ev.add_argument("--three-dof-mode", choices=("two_segment", "frozen_distal"))
    ev.set_defaults(func=cmd_evaluate)

    bu = sub.add_parser("build", parents=[common], help="assemble the QUBO from an evaluation file")
    bu.add_argument("--evaluation", help="evaluation JSON (default <output-dir>/evaluation.json)")
    for name in PenaltyConfig.__dataclass_fields__:
        bu.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    bu.set_defaults(func=cmd_build)

    so = sub.add_parser("solve", parents=[common], help="simulated annealing")
    so.add_argument("--qubo", help="QUBO JSON or .coo file (default <output-dir>/qubo.json)")
    so.add_argument("--reads", type=int)
    so.add_argument("--seed", type=int)
    so.add_argument("--sweeps", type=int)
    so.add_argument("--beta-initial", type=float)
    so.add_argument("--beta-final", type=float)
    so.add_argument("--report", help="report path (default <output-dir>/report.json)")
    so.add_argument("--timing", action="store_true", help="record wall time in the report")
    so.set_defaults(func=cmd_solve)

    orc = sub.add_parser("oracle", parents=[common], help="exhaustive search of the feasible space")
    orc.add_argument("--qubo")
    orc.add_argument("--seed", type=int)
    orc.add_argument("--check-infeasible", type=int, metavar="TRIALS")
    orc.set_defaults(func=cmd_oracle)

    ba = sub.add_parser("band", parents=[common], help="best-objective bands across read counts")
    ba.add_argument("--qubo")
    ba.add_argument("--nor-list", default="100,1000,2000,5000,10000")
    ba.add_argument("--runs", type=int, default=10)
    ba.add_argument("--seed", type=int)
    ba.add_argument("--sweeps", type=int)
    ba.add_argument("--beta-initial", type=float)
    ba.add_argument("--beta-final", type=float)
    ba.set_defaults(func=cmd_band)

    ex = sub.add_parser("export", parents=[common], help="voxel/point CSVs or a COO file")
    ex.add_argument("kind", choices=("voxels", "points", "coo"))
    ex.add_argument("--candidate", help="candidate id for voxel/point exports, e.g. t4")
    ex.add_argument("--resolution")
    ex.add_argument("--voxel-size", type=float)
    ex.add_argument("--qubo")
    ex.add_argument("--path", help="output file")
    ex.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, HandQuboError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
