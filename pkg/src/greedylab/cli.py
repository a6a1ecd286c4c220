"""``gbl``: batch runs of the estimators and checks.

Every subcommand reads an optional JSON config (``--config``) and applies
flag overrides on top. Reports are deterministic for a given config and seed.

Exit codes: 0 success, 1 a check failed, 2 usage or parse error, 3 an
enumeration cap was exceeded (a partial report is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import NAMES, TAU_NAMES, ConstantEstimate, estimate
from .core import EnumerationCapExceeded, Vec
from .corpus import Corpus, build_corpus
from .norms import make_engine
from .verify import CHECK_IDS, run_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

#: constants defined by a corpus of vectors; the rest use the coefficient grid
CORPUS_CONSTANTS = ("Kb", "Ksu", "ConsecUnc", "C_ell_tau", "C_tq", "C_g_con_tau", "P_g_con_tau")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    space: dict = field(default_factory=lambda: {"norm": "lp", "q": 1})
    dim: int = 6
    seed: int = 0
    taus: list = field(default_factory=lambda: [1.0])
    checks: list | str = "all"
    constants: list | str = "all"
    caps: dict = field(default_factory=dict)
    out: str = "gbl-out"
    t: float = 0.5

    def validate(self) -> "RunConfig":
        if not isinstance(self.dim, int) or self.dim < 2:
            raise UsageError(f"dim must be an integer >= 2, got {self.dim!r}")
        for tau in self.taus:
            if not (isinstance(tau, (int, float)) and 0.0 < tau <= 1.0):
                raise UsageError(f"tau must lie in (0, 1], got {tau!r}")
        if not 0.0 < self.t <= 1.0:
            raise UsageError(f"t must lie in (0, 1], got {self.t!r}")
        if self.checks != "all":
            unknown = [c for c in self.checks if c not in CHECK_IDS]
            if unknown:
                raise UsageError(f"unknown check ids: {unknown}")
        if self.constants != "all":
            unknown = [c for c in self.constants if c not in NAMES]
            if unknown:
                raise UsageError(f"unknown constants: {unknown}")
        try:
            make_engine(self.space)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad space config: {exc}") from exc
        return self

    def corpus(self) -> Corpus:
        kw = {}
        if "sign_budget" in self.caps:
            kw["sign_budget"] = self.caps["sign_budget"]
        if "structured_budget" in self.caps:
            kw["structured_budget"] = self.caps["structured_budget"]
        return build_corpus(self.dim, seed=self.seed, **kw)


def load_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise UsageError(f"unknown config keys: {sorted(extra)}")
    cfg = RunConfig(**data)
    if getattr(args, "space", None):
        try:
            cfg.space = json.loads(args.space)
        except json.JSONDecodeError:
            cfg.space = {"norm": args.space}
    for name in ("dim", "seed", "out"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "tau", None):
        cfg.taus = list(args.tau)
    if getattr(args, "checks", None):
        cfg.checks = "all" if args.checks == ["all"] else list(args.checks)
    if getattr(args, "constants", None):
        cfg.constants = "all" if args.constants == ["all"] else list(args.constants)
    return cfg.validate()


def resolve_jobs(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("GBL_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"GBL_JOBS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _pool_map(fn, tasks, jobs: int):
    """Ordered map; results are aggregated in task order whatever the pool size."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_outputs(out: Path, rows: list[dict], csv_fields: list[str], witnesses: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(_dumps(rows))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=csv_fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k) for k in csv_fields})
    (out / "summary.csv").write_text(buf.getvalue())
    wdir = out / "witnesses"
    wdir.mkdir(exist_ok=True)
    for name, wit in witnesses.items():
        (wdir / f"{name}.json").write_text(_dumps(wit))


# -- norm ---------------------------------------------------------------------

def cmd_norm(args) -> int:
    cfg = load_config(args)
    engine = make_engine(cfg.space)
    try:
        x = Vec.from_json(args.vector)
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad vector literal: {exc}") from exc
    print(f"{engine.norm(x):.12g}")
    return EXIT_OK


# -- constants ------------------------------------------------------------------

def _constant_task(task):
    space, name, tau, dim, seed, caps = task
    cfg = RunConfig(space=space, dim=dim, seed=seed, caps=caps)
    engine = make_engine(space)
    try:
        est = estimate(engine, name, cfg.corpus(), tau)
    except EnumerationCapExceeded as exc:
        return {"name": name, "tau": tau, "value": None, "instances": 0, "witness": None,
                "cap_exceeded": str(exc)}
    return dict(est.to_row(), cap_exceeded=None)


def _constant_tasks(cfg: RunConfig):
    names = NAMES if cfg.constants == "all" else cfg.constants
    tasks = []
    for name in names:
        taus = cfg.taus if name in TAU_NAMES else [None]
        for tau in taus:
            tasks.append((cfg.space, name, tau, cfg.dim, cfg.seed, cfg.caps))
    return tasks


def _witness_key(name, tau):
    return name if tau is None else f"{name}_tau{tau:g}"


def cmd_constants(args) -> int:
    cfg = load_config(args)
    rows = _pool_map(_constant_task, _constant_tasks(cfg), resolve_jobs(args.jobs))
    wits = {_witness_key(r["name"], r["tau"]): r["witness"] for r in rows if r["witness"]}
    _write_outputs(Path(cfg.out), rows, ["name", "tau", "value", "instances", "cap_exceeded"], wits)
    for r in rows:
        print(f"{_witness_key(r['name'], r['tau'])}: {r['value']}")
    return EXIT_CAP if any(r["cap_exceeded"] for r in rows) else EXIT_OK


# -- check ------------------------------------------------------------------

def _check_task(task):
    space, check_id, tau, t, dim, seed, caps = task
    cfg = RunConfig(space=space, dim=dim, seed=seed, caps=caps)
    engine = make_engine(space)
    try:
        return run_check(check_id, engine, cfg.corpus(), tau, t).to_dict()
    except EnumerationCapExceeded as exc:
        return {"check_id": check_id, "engine": engine.label, "status": "cap_exceeded",
                "note": str(exc), "instances_tested": 0, "worst_slack": None}


def cmd_check(args) -> int:
    cfg = load_config(args)
    ids = CHECK_IDS if cfg.checks == "all" else cfg.checks
    tasks = [(cfg.space, c, tau, cfg.t, cfg.dim, cfg.seed, cfg.caps)
             for tau in cfg.taus for c in ids]
    rows = _pool_map(_check_task, tasks, resolve_jobs(args.jobs))
    for r, task in zip(rows, tasks):
        r["tau"] = task[2]
    wits = {f"{r['check_id']}_tau{r['tau']:g}": {"worst": r.get("worst_witness"),
                                                 "failures": r.get("failures", [])}
            for r in rows}
    _write_outputs(Path(cfg.out), rows,
                   ["check_id", "engine", "tau", "instances_tested", "worst_slack", "status"], wits)
    for r in rows:
        print(f"{r['check_id']} (tau={r['tau']:g}): {r['status']}  "
              f"instances={r['instances_tested']} worst_slack={r['worst_slack']}")
    if any(r["status"] == "cap_exceeded" for r in rows):
        return EXIT_CAP
    return EXIT_OK if all(r["status"] == "pass" for r in rows) else EXIT_FAIL


# -- search -----------------------------------------------------------------

SEARCH_BATCH = 256
SEARCH_VALUES = (-3.0, -2.0, -1.0, 1.0, 2.0, 3.0)


def _random_batch(rng, dim, n, best: np.ndarray | None):
    """Half fresh draws, half perturbations of the incumbent."""
    X = np.zeros((n, dim))
    for i in range(n):
        if best is not None and i % 2:
            x = best.copy()
            j = int(rng.integers(dim))
            x[j] = rng.choice(SEARCH_VALUES) if rng.random() < 0.5 else round(rng.uniform(-3, 3), 4)
            X[i] = x
            continue
        k = int(rng.integers(1, dim + 1))
        supp = rng.choice(dim, size=k, replace=False)
        if rng.random() < 0.5:
            X[i, supp] = rng.choice(SEARCH_VALUES, size=k)
        else:
            X[i, supp] = np.round(rng.uniform(-3, 3, size=k), 4)
    return X


def search_constant(engine, name: str, dim: int, iterations: int, seed: int,
                    tau: float | None = None) -> tuple[ConstantEstimate, list[dict]]:
    """Randomized maximization of a corpus constant, seeded by the structured stratum.

    Returns the best estimate and the trail of improvements. Grid constants
    are already exhaustive over their family, so they are returned directly.
    """
    base = build_corpus(dim, seed=seed, n_random=0)
    best = estimate(engine, name, base, tau)
    trail = [{"batch": -1, "source": "structured stratum", "value": _num(best.value),
              "witness": best.witness}]
    if name not in CORPUS_CONSTANTS:
        trail[0]["source"] = "exhaustive grid family"
        return best, trail
    rng = np.random.default_rng(seed)
    total = best.instances
    incumbent = None
    if best.witness and "x" in best.witness:
        incumbent = Vec.from_json(best.witness["x"], dim=dim).dense().copy()
    done, batch = 0, 0
    while done < iterations:
        n = min(SEARCH_BATCH, iterations - done)
        X = _random_batch(rng, dim, n, incumbent)
        vecs = [Vec.from_dense(r) for r in X if r.any()]
        if vecs:
            est = estimate(engine, name, Corpus(tuple(vecs), dim=dim), tau)
            total += est.instances
            if est.value > best.value:
                best = est
                incumbent = Vec.from_json(est.witness["x"], dim=dim).dense().copy()
                trail.append({"batch": batch, "source": "random", "value": _num(est.value),
                              "witness": est.witness})
        done += n
        batch += 1
    best.instances = total
    return best, trail


def _num(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else v


def cmd_search(args) -> int:
    cfg = load_config(args)
    if args.objective not in NAMES:
        raise UsageError(f"unknown objective {args.objective!r}")
    if args.iterations < 0:
        raise UsageError("iterations must be nonnegative")
    engine = make_engine(cfg.space)
    tau = cfg.taus[0] if args.objective in TAU_NAMES else None
    try:
        best, trail = search_constant(engine, args.objective, cfg.dim, args.iterations,
                                      cfg.seed, tau)
    except EnumerationCapExceeded as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CAP
    row = dict(best.to_row(), seed=cfg.seed, iterations=args.iterations)
    key = _witness_key(args.objective, tau)
    _write_outputs(Path(cfg.out), [row], ["name", "tau", "value", "instances", "seed", "iterations"],
                   {key: best.witness, f"{key}_trail": {"seed": cfg.seed, "trail": trail}})
    print(f"{key}: {row['value']}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, out=True) -> None:
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--space", help='norm config, e.g. \'{"norm": "lp", "q": 1}\' or "sup"')
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float, action="append", help="repeatable")
    if out:
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, help="worker processes (default $GBL_JOBS or all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gbl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("norm", help="print the norm of a vector literal")
    _common(p, out=False)
    p.add_argument("vector", help='JSON object, e.g. \'{"1": 3, "2": -1}\'')
    p.set_defaults(func=cmd_norm)
    p = sub.add_parser("constants", help="estimate basis constants")
    _common(p)
    p.add_argument("--constants", nargs="+", help="constant names or 'all'")
    p.set_defaults(func=cmd_constants)
    p = sub.add_parser("check", help="run verification checks")
    _common(p)
    p.add_argument("--checks", nargs="+", help="check ids or 'all'")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("search", help="randomized witness search for one constant")
    _common(p)
    p.add_argument("objective", help="constant name")
    p.add_argument("--iterations", type=int, default=10_000)
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gbl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
