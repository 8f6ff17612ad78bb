"""Command-line driver for uniform and adaptive studies."""
import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from .adapt import AdaptConfig, Mode, StudyRecord, run_study
from .problems import PROBLEM_IDS
from .spaces import Family
from .system import SolverError, write_matrix

log = logging.getLogger("faultdarcy")

_INT_FIELDS = {"iteration", "n_cells", "n_dofs", "n_marked"}


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _theta(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float {text!r}")
    if not (0.0 < v <= 1.0):
        raise argparse.ArgumentTypeError(f"theta must lie in (0, 1], got {text}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float {text!r}")
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return v


def _mesh_n(text):
    v = _positive_int(text)
    if v % 4:
        raise argparse.ArgumentTypeError(f"must be a multiple of 4, got {text}")
    return v


def build_parser():
    p = argparse.ArgumentParser(
        prog="faultdarcy",
        description="Mixed FEM for Darcy flow with a Robin-type fault: uniform/adaptive studies.")
    p.add_argument("--problem", choices=PROBLEM_IDS, default="manufactured")
    p.add_argument("--family", choices=[f.value for f in Family], default=Family.BDM1.value)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ADAPTIVE.value)
    p.add_argument("--theta", type=_theta, default=0.5, help="Doerfler bulk fraction in (0, 1]")
    p.add_argument("--alpha", type=_positive_float, default=None,
                   help="interface coefficient (problem default if omitted)")
    p.add_argument("--n", type=_mesh_n, default=8, help="initial mesh is n x n squares")
    p.add_argument("--iters", type=_positive_int, default=5)
    p.add_argument("--max-dofs", type=_positive_int, default=200_000)
    p.add_argument("--out", type=Path, default=Path("results.csv"))
    p.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    p.add_argument("--dump-mesh", action="store_true")
    p.add_argument("--dump-matrix", action="store_true")
    p.add_argument("--dump-estimator", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def write_results(path, config, records, as_json=False):
    path = Path(path)
    cfg = config.to_dict() if hasattr(config, "to_dict") else dict(config)
    if as_json:
        payload = {"config": cfg,
                   "records": [{k: getattr(r, k) for k in StudyRecord.columns()} for r in records]}
        # repr-based float output round-trips exactly
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return
    with path.open("w", newline="") as fh:
        fh.write("# config " + json.dumps(cfg, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(StudyRecord.columns())
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in StudyRecord.columns()])


def _parse_value(key, text):
    if text == "" or text is None:
        return None
    return int(text) if key in _INT_FIELDS else float(text)


def read_results(path):
    """Inverse of :func:`write_results`; returns ``(config_dict, records)``."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        return payload["config"], [StudyRecord(**r) for r in payload["records"]]
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# config "):
        raise ValueError(f"{path}: missing config header")
    config = json.loads(lines[0][len("# config "):])
    reader = csv.DictReader(lines[1:])
    records = [StudyRecord(**{k: _parse_value(k, v) for k, v in row.items()}) for row in reader]
    return config, records


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = AdaptConfig(problem=args.problem, family=args.family, mode=args.mode,
                             theta=args.theta, n=args.n, max_iterations=args.iters,
                             max_dofs=args.max_dofs, alpha=args.alpha).resolved()
    except ValueError as exc:
        parser.error(str(exc))

    out = args.out
    stem = out.with_suffix("")

    def on_iteration(rec, mesh, solution, report):
        i = rec.iteration
        if args.dump_mesh:
            mesh.dump(f"{stem}_mesh_{i:03d}.txt")
        if args.dump_matrix:
            write_matrix(solution.system, f"{stem}_matrix_{i:03d}.txt")
        if args.dump_estimator:
            Path(f"{stem}_estimator_{i:03d}.json").write_text(json.dumps(report.to_dict()) + "\n")

    try:
        records = run_study(config, on_iteration)
    except SolverError as exc:
        print(f"faultdarcy: solver failure: {exc}", file=sys.stderr)
        return 1
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    write_results(out, config, records, as_json=args.json)
    return 0


if __name__ == "__main__":
    sys.exit(main())
