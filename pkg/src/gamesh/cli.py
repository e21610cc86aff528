"""Pipeline orchestration and the ``gamesh`` command-line tool."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import io
from .augmentation import DEFAULT_EPSILON
from .mesh_core import topology_summary
from .metrics import MetricsConfig, evaluate, sample_surface
from .pipeline import StageError, gamesh
from .simplification import simplify_quadric

log = logging.getLogger("gamesh")

SCHEMA = 1


@dataclass(frozen=True)
class PipelineConfig:
    prior: str
    points: str
    out: str
    grid_res: int | None = None
    epsilon: float = DEFAULT_EPSILON
    snap_tol: float | None = None  # absolute; default scales with the prior
    seed: int = 0
    gt: str | None = None  # optional ground truth; enables metrics
    metrics: MetricsConfig = MetricsConfig()
    verbosity: int = 0

    def __post_init__(self):
        for name in ("prior", "points", "out"):
            if not getattr(self, name):
                raise ValueError(f"{name} path is empty")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.snap_tol is not None and self.snap_tol <= 0:
            raise ValueError("snap_tol must be > 0")
        if self.grid_res is not None and self.grid_res < 2:
            raise ValueError("grid_res must be >= 2")


@dataclass
class RunReport:
    n_prior_vertices: int
    n_prior_faces: int
    n_points: int
    n_output_vertices: int
    n_output_faces: int
    n_substituted: int
    timings: dict[str, float]
    collapses: dict
    prior_topology: dict
    output_topology: dict
    metrics: dict | None = None
    schema: int = SCHEMA
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def run_gamesh(config: PipelineConfig) -> RunReport:
    """Read inputs, mesh, write the output; raises ``StageError`` on failure."""
    try:
        prior = io.read_mesh(config.prior)
        points = io.read_points(config.points)
    except (OSError, ValueError) as exc:
        raise StageError("read", exc) from exc
    if prior.n_faces == 0:
        raise StageError("read", ValueError("no faces"))
    result = gamesh(prior, points, config.grid_res, config.epsilon, config.snap_tol)
    out = result.mesh
    if out.n_vertices != len(points):
        raise StageError("unproject", RuntimeError("output vertex count differs from input"))
    if result.log.forced:
        log.warning("%d collapse(s) had to be forced", result.log.forced)
    try:
        io.write_mesh(out, config.out)
    except OSError as exc:
        raise StageError("write", exc) from exc

    metrics = None
    if config.gt:
        gt = io.read_mesh(config.gt)
        metrics = evaluate(gt, out, config.metrics, points).as_dict()
    return RunReport(
        n_prior_vertices=prior.n_vertices,
        n_prior_faces=prior.n_faces,
        n_points=len(points),
        n_output_vertices=out.n_vertices,
        n_output_faces=out.n_faces,
        n_substituted=result.n_substituted,
        timings={k: round(v, 6) for k, v in result.timings.items()},
        collapses=result.log.as_dict(),
        prior_topology=topology_summary(prior).as_dict(),
        output_topology=topology_summary(out).as_dict(),
        metrics=metrics,
    )


# ------------------------------------------------------------------ commands

def _emit(payload: dict, dest: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if dest in (None, "-"):
        print(text)
    else:
        Path(dest).write_text(text + "\n")


def _cmd_mesh(args) -> int:
    cfg = PipelineConfig(
        prior=args.prior, points=args.points, out=args.out, grid_res=args.grid_res,
        epsilon=args.epsilon, snap_tol=args.snap_tol, seed=args.seed, gt=args.gt,
        metrics=MetricsConfig(seed=args.seed), verbosity=args.verbose,
    )
    report = run_gamesh(cfg)
    if args.report:
        _emit(report.as_dict(), args.report)
    return 0


def _cmd_eval(args) -> int:
    gt, pred = io.read_mesh(args.gt), io.read_mesh(args.pred)
    points = io.read_points(args.points) if args.points else None
    cfg = MetricsConfig(args.samples, args.tau, args.scale, args.seed)
    rep = evaluate(gt, pred, cfg, points).as_dict()
    rep["schema"] = SCHEMA
    if args.json:
        _emit(rep, None)
    else:
        for k, v in rep.items():
            print(f"{k}: {v}")
    return 0


def _cmd_sample(args) -> int:
    io.write_points(sample_surface(io.read_mesh(args.mesh), args.n, args.seed), args.out)
    return 0


def _cmd_simplify(args) -> int:
    io.write_mesh(simplify_quadric(io.read_mesh(args.mesh), args.target_vertices), args.out)
    return 0


def _cmd_topology(args) -> int:
    d = topology_summary(io.read_mesh(args.mesh)).as_dict()
    if args.json:
        d["schema"] = SCHEMA
        _emit(d, None)
    else:
        print(" ".join(f"{k}={v}" for k, v in d.items()))
    return 0


def _batch_one(job: tuple[str, str, str, str]) -> tuple[str, dict | str]:
    name, prior, points, out = job
    try:
        report = run_gamesh(PipelineConfig(prior=prior, points=points, out=out))
        return name, report.as_dict()
    except Exception as exc:  # reported per shape, the batch goes on
        return name, str(exc)


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("GAMESH_THREADS")
    n = requested or os.cpu_count() or 1
    if env:
        n = min(n, max(1, int(env)))
    return n


def _cmd_batch(args) -> int:
    """Mesh every ``<name>.xyz`` in --points-dir against ``<name>.obj`` in --prior-dir."""
    prior_dir, points_dir, out_dir = Path(args.prior_dir), Path(args.points_dir), Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for pts in sorted(points_dir.glob("*.xyz")):
        prior = next((prior_dir / (pts.stem + ext) for ext in (".obj", ".off")
                      if (prior_dir / (pts.stem + ext)).exists()), None)
        if prior is None:
            log.warning("no prior for %s", pts.name)
            continue
        jobs.append((pts.stem, str(prior), str(pts), str(out_dir / (pts.stem + ".obj"))))
    n = worker_count(args.workers)
    if n == 1:
        results = [_batch_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(n) as pool:
            results = list(pool.map(_batch_one, jobs))
    summary = {"schema": SCHEMA, "shapes": dict(results)}
    _emit(summary, args.report)
    return int(any(isinstance(r, str) for _, r in results))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gamesh", description="Mesh a point cloud with the connectivity of a mesh prior.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="mesh points using a prior")
    m.add_argument("--prior", required=True)
    m.add_argument("--points", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--grid-res", type=int)
    m.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    m.add_argument("--snap-tol", type=float)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--gt", help="ground-truth mesh; adds metrics to the report")
    m.add_argument("--report", help="write the JSON run report here ('-' for stdout)")
    m.set_defaults(func=_cmd_mesh)

    e = sub.add_parser("eval", help="Chamfer and F1 between two meshes")
    e.add_argument("--gt", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--points")
    e.add_argument("--samples", type=int, default=10000)
    e.add_argument("--tau", type=float, default=1e-4)
    e.add_argument("--scale", type=float, default=0.57)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=_cmd_eval)

    s = sub.add_parser("sample", help="area-weighted surface samples")
    s.add_argument("--mesh", required=True)
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sample)

    q = sub.add_parser("simplify", help="quadric decimation")
    q.add_argument("--mesh", required=True)
    q.add_argument("--target-vertices", type=int, required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_simplify)

    t = sub.add_parser("topology", help="Euler characteristic, genus and defects")
    t.add_argument("--mesh", required=True)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=_cmd_topology)

    b = sub.add_parser("batch", help="mesh a directory of shapes")
    b.add_argument("--prior-dir", required=True)
    b.add_argument("--points-dir", required=True)
    b.add_argument("--out-dir", required=True)
    b.add_argument("--workers", type=int)
    b.add_argument("--report")
    b.set_defaults(func=_cmd_batch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (StageError, ValueError, OSError) as exc:
        print(f"gamesh: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
