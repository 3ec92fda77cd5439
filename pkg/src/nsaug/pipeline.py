"""End-to-end runs: snapshots -> augment -> basis -> evaluate.

Every stage writes its artifacts into the output directory together with a
``<stage>.done`` stamp holding a fingerprint of the settings it depends on
(chained with the upstream stamps). A stage whose stamp matches is loaded
from disk instead of being recomputed.
"""

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import io
from .augment import STRATEGIES, AugmentConfig, augment_dataset
from .errors import ConfigError, NsaugError, StageError
from .fom import FomSolution, SolveCounter, newton_solve
from .pod import ARTIFICIAL, SnapshotSet, build_basis
from .problems import make_problem, parameter_grid
from .rom import RomSolution, qoi, rom_solve, select_local_snapshots

__all__ = ["RunConfig", "ErrorRecord", "Report", "run_pipeline", "export_run", "evaluate_errors", "STAGES"]

STAGES = ("snapshots", "augment", "basis", "evaluate")


def _parse_points(text, n_p=None):
    text = text.strip()
    if not text or text.lower() == "none":
        return np.zeros((0, n_p or 1))
    pts = [[float(v) for v in chunk.split()] for chunk in text.split(",") if chunk.strip()]
    if len({len(p) for p in pts}) != 1:
        raise ConfigError(f"inconsistent point dimensions in {text!r}")
    return np.array(pts)


def _parse_grid(text):
    axes = []
    for chunk in text.split(","):
        parts = chunk.strip().split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid axis must be lo:hi:n, got {chunk.strip()!r}")
        axes.append((float(parts[0]), float(parts[1]), int(parts[2])))
    return parameter_grid([a[:2] for a in axes], [a[2] for a in axes])


def _parse_floats(text):
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    if ":" in text:
        lo, hi, n = text.split(":")
        return tuple(np.round(np.linspace(float(lo), float(hi), int(n)), 12))
    return tuple(float(v) for v in text.split(","))


@dataclass
class RunConfig:
    """Settings of one run.

    ``strategy`` is ``none`` or one of the augmentation strategies.
    ``local_k`` selects a local basis of the k nearest training points per
    test point (augmented on that neighbourhood only).
    """

    problem: str
    train_params: np.ndarray
    test_params: np.ndarray = None
    mesh_level: int = 0
    eps_u: float = 1e-3
    eps_p: float = 0.25
    strategy: str = "none"
    alphas: tuple = tuple(np.round(np.arange(1, 10) * 0.1, 12))
    positivity_shift_floor: float = 1.0
    local_k: int = None
    output_dir: str = "nsaug_run"
    seed: int = 0
    newton_tol: float = 1e-8
    scaling_u: str = "none"
    scaling_p: str = "none"

    KEYS = (
        "problem", "mesh_level", "train_params", "train_grid", "test_params", "test_grid", "eps_u",
        "eps_p", "strategy", "alphas", "positivity_shift_floor", "local_k", "output_dir", "seed",
        "newton_tol", "scaling_u", "scaling_p",
    )

    def __post_init__(self):
        self.train_params = np.atleast_2d(np.asarray(self.train_params, float))
        n_p = self.train_params.shape[1]
        tp = np.zeros((0, n_p)) if self.test_params is None else np.asarray(self.test_params, float)
        self.test_params = tp.reshape(-1, n_p)
        if self.strategy not in ("none",) + STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.strategy != "none":
            AugmentConfig(self.strategy, self.alphas, self.positivity_shift_floor)
        self.alphas = tuple(float(a) for a in self.alphas)
        for name in ("eps_u", "eps_p"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.eps_u >= self.eps_p:
            warnings.warn(
                f"eps_u={self.eps_u} is not below eps_p={self.eps_p}; the reduced velocity space "
                "may be too poor to control the pressure modes",
                stacklevel=2,
            )
        if self.local_k is not None and not 1 <= self.local_k <= len(self.train_params):
            raise ConfigError(f"local_k={self.local_k} must be between 1 and the number of training points")
        if len(self.train_params) < 1:
            raise ConfigError("no training parameters")

    @classmethod
    def from_mapping(cls, raw):
        unknown = set(raw) - set(cls.KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "problem" not in raw:
            raise ConfigError("config needs a 'problem' key")
        kw = {"problem": raw["problem"].strip()}
        try:
            if "train_grid" in raw and "train_params" in raw:
                raise ConfigError("give either train_params or train_grid, not both")
            if "train_grid" in raw:
                kw["train_params"] = _parse_grid(raw["train_grid"])
            elif "train_params" in raw:
                kw["train_params"] = _parse_points(raw["train_params"])
            else:
                raise ConfigError("config needs train_params or train_grid")
            n_p = kw["train_params"].shape[1]
            if "test_grid" in raw:
                kw["test_params"] = _parse_grid(raw["test_grid"])
            elif "test_params" in raw:
                kw["test_params"] = _parse_points(raw["test_params"], n_p)
            for k in ("eps_u", "eps_p", "positivity_shift_floor", "newton_tol"):
                if k in raw:
                    kw[k] = float(raw[k])
            for k in ("mesh_level", "seed"):
                if k in raw:
                    kw[k] = int(raw[k])
            for k in ("strategy", "output_dir", "scaling_u", "scaling_p"):
                if k in raw:
                    kw[k] = raw[k].strip()
            if "alphas" in raw:
                kw["alphas"] = _parse_floats(raw["alphas"])
            if "local_k" in raw and raw["local_k"].strip().lower() != "none":
                kw["local_k"] = int(raw["local_k"])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from exc
        return cls(**kw)

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(io.read_config(path))

    def to_mapping(self):
        pts = lambda a: ", ".join(" ".join(repr(float(v)) for v in row) for row in a) or "none"
        return {
            "problem": self.problem,
            "mesh_level": self.mesh_level,
            "train_params": pts(self.train_params),
            "test_params": pts(self.test_params),
            "eps_u": repr(self.eps_u),
            "eps_p": repr(self.eps_p),
            "strategy": self.strategy,
            "alphas": ", ".join(repr(a) for a in self.alphas) or "none",
            "positivity_shift_floor": repr(self.positivity_shift_floor),
            "local_k": "none" if self.local_k is None else self.local_k,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "newton_tol": repr(self.newton_tol),
            "scaling_u": self.scaling_u,
            "scaling_p": self.scaling_p,
        }


@dataclass
class ErrorRecord:
    mu: np.ndarray
    velocity: float
    pressure: float
    drag: float
    lift: float
    drag_absolute: bool = False
    lift_absolute: bool = False


@dataclass
class Report:
    problem: str
    strategy: str
    records: list = field(default_factory=list)
    n_pod_u: list = field(default_factory=list)
    n_pod_p: list = field(default_factory=list)
    n_train: int = 0
    n_artificial: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    rom_iterations: list = field(default_factory=list)
    bc_deviation: list = field(default_factory=list)
    force_tags: tuple = ()

    CSV_HEADER = ("index", "mu", "n_pod_u", "n_pod_p", "err_velocity", "err_pressure", "err_drag", "err_lift",
                  "drag_absolute", "lift_absolute", "rom_iterations", "bc_deviation")

    def csv_rows(self):
        rows = []
        for t, r in enumerate(self.records):
            rows.append((
                t, " ".join(repr(float(v)) for v in r.mu), self.n_pod_u[t], self.n_pod_p[t],
                r.velocity, r.pressure, r.drag, r.lift, int(r.drag_absolute), int(r.lift_absolute),
                self.rom_iterations[t], self.bc_deviation[t],
            ))
        return rows

    def summary(self):
        out = {
            "problem": self.problem,
            "strategy": self.strategy,
            "n_train": self.n_train,
            "n_artificial": " ".join(str(n) for n in self.n_artificial),
            "n_pod_u": " ".join(str(n) for n in self.n_pod_u),
            "n_pod_p": " ".join(str(n) for n in self.n_pod_p),
            "force_tags": " ".join(self.force_tags),
        }
        for stage, c in sorted(self.counters.items()):
            for k, v in c.items():
                out[f"solves.{stage}.{k}"] = v
        return out


def evaluate_errors(problem, rom, fom):
    """Relative Euclidean errors of velocity, recovered pressure, drag and lift.

    A force component that is exactly zero in the reference is compared in
    absolute terms and flagged.
    """

    def rel(a, b):
        nb = np.linalg.norm(b)
        return (float(np.linalg.norm(a - b) / nb), False) if nb > 0 else (float(np.linalg.norm(a - b)), True)

    e_u, _ = rel(rom.velocity, fom.velocity)
    e_p, _ = rel(rom.recovered_pressure, fom.pressure)
    if problem.force_tags:
        d_r, l_r = qoi(problem, rom)
        d_f, l_f = qoi(problem, fom)
        e_d, abs_d = rel(np.array(d_r), np.array(d_f))
        e_l, abs_l = rel(np.array(l_r), np.array(l_f))
    else:
        e_d = e_l = float("nan")
        abs_d = abs_l = False
    return ErrorRecord(np.asarray(fom.mu, float), e_u, e_p, e_d, e_l, abs_d, abs_l)


# -- stage plumbing -------------------------------------------------------------


def _digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


class _Run:
    def __init__(self, config, stage_only=False):
        self.cfg = config
        self.stage_only = stage_only
        self.out = config.output_dir
        self.problem = make_problem(config.problem, config.mesh_level)
        for pt in np.vstack([config.train_params, config.test_params]):
            self.problem.check_mu(pt)
        os.makedirs(self.out, exist_ok=True)
        m = config.to_mapping()
        fp = {}
        fp["snapshots"] = _digest([m[k] for k in ("problem", "mesh_level", "train_params", "newton_tol")])
        fp["augment"] = _digest([fp["snapshots"]] + [m[k] for k in ("strategy", "alphas", "positivity_shift_floor", "local_k")]
                                + ([m["test_params"]] if config.local_k else []))
        fp["basis"] = _digest([fp["augment"]] + [m[k] for k in ("eps_u", "eps_p", "scaling_u", "scaling_p", "test_params")])
        fp["evaluate"] = _digest([fp["basis"], m["test_params"]])
        self.fp = fp

    def path(self, name):
        return os.path.join(self.out, name)

    def done(self, stage):
        p = self.path(f"{stage}.done")
        return os.path.exists(p) and open(p).read().strip() == self.fp[stage]

    def mark(self, stage):
        with open(self.path(f"{stage}.done"), "w") as fh:
            fh.write(self.fp[stage] + "\n")

    def require(self, stage):
        if not self.done(stage):
            raise StageError(stage, ConfigError(f"artifacts of stage '{stage}' are missing or stale in {self.out}"))

    def save_counter(self, stage, counter):
        io.write_config(self.path(f"solves_{stage}.txt"), counter.as_dict())

    def load_counter(self, stage):
        raw = io.read_config(self.path(f"solves_{stage}.txt"))
        return SolveCounter(**{k: int(v) for k, v in raw.items()})

    @property
    def groups(self):
        """Training-column groups: one global group, or one per test point."""
        cfg = self.cfg
        if cfg.local_k is None:
            return [np.arange(len(cfg.train_params))]
        return [
            np.sort(select_local_snapshots(cfg.train_params, mu, cfg.local_k, self.problem.parameter_box))
            for mu in cfg.test_params
        ]

    def suffix(self, g):
        return "" if self.cfg.local_k is None else f"_t{g}"


def _stage_snapshots(run):
    cfg, P = run.cfg, run.problem
    c = SolveCounter()
    sols = [newton_solve(P, mu, tol=cfg.newton_tol, counter=c) for mu in cfg.train_params]
    io.write_snapshots(run.path("snapshots_velocity.snap"),
                       SnapshotSet("velocity", np.column_stack([s.velocity for s in sols]), cfg.train_params))
    io.write_snapshots(run.path("snapshots_pressure.snap"),
                       SnapshotSet("pressure", np.column_stack([s.pressure for s in sols]), cfg.train_params))
    run.save_counter("snapshots", c)


def _stage_augment(run):
    cfg, P = run.cfg, run.problem
    U = io.read_snapshots(run.path("snapshots_velocity.snap"), "velocity")
    c = SolveCounter()
    for g, idx in enumerate(run.groups):
        sub = U.subset(idx)
        if cfg.strategy == "none" or len(idx) < 2:
            extra = SnapshotSet("velocity", np.zeros((U.ndof, 0)), np.zeros((0, U.parameters.shape[1])), [])
        else:
            aug = augment_dataset(sub, P, AugmentConfig(cfg.strategy, cfg.alphas, cfg.positivity_shift_floor), c)
            extra = aug.subset(np.arange(len(idx), aug.n_snapshots))
        io.write_snapshots(run.path(f"artificial_velocity{run.suffix(g)}.snap"), extra)
    run.save_counter("augment", c)


def _load_training(run, g, idx):
    U = io.read_snapshots(run.path("snapshots_velocity.snap"), "velocity").subset(idx)
    Pp = io.read_snapshots(run.path("snapshots_pressure.snap"), "pressure").subset(idx)
    art = io.read_snapshots(run.path(f"artificial_velocity{run.suffix(g)}.snap"), "velocity", ARTIFICIAL)
    if art.n_snapshots:
        U = U.extended(art.data, art.parameters, ARTIFICIAL)
    return U, Pp


def _stage_basis(run):
    cfg = run.cfg
    for g, idx in enumerate(run.groups):
        U, Pp = _load_training(run, g, idx)
        io.save_basis(run.path(f"basis_u{run.suffix(g)}.npz"), build_basis(U, cfg.eps_u, cfg.scaling_u))
        io.save_basis(run.path(f"basis_p{run.suffix(g)}.npz"), build_basis(Pp, cfg.eps_p, cfg.scaling_p))


def _stage_evaluate(run):
    cfg, P = run.cfg, run.problem
    c = SolveCounter()
    refs = [newton_solve(P, mu, tol=cfg.newton_tol, counter=c) for mu in cfg.test_params]
    roms = []
    for t, mu in enumerate(cfg.test_params):
        g = 0 if cfg.local_k is None else t
        bu = io.load_basis(run.path(f"basis_u{run.suffix(g)}.npz"))
        bp = io.load_basis(run.path(f"basis_p{run.suffix(g)}.npz"))
        roms.append(rom_solve(P, mu, bu, bp))
    n = len(cfg.test_params)
    for name, cols in (
        ("reference_velocity", [r.velocity for r in refs]),
        ("reference_pressure", [r.pressure for r in refs]),
        ("rom_velocity", [r.velocity for r in roms]),
        ("rom_pressure", [r.recovered_pressure for r in roms]),
    ):
        kind = "velocity" if name.endswith("velocity") else "pressure"
        ndof = P.fe.nu_dofs if kind == "velocity" else P.fe.np_dofs
        data = np.column_stack(cols) if n else np.zeros((ndof, 0))
        io.write_snapshots(run.path(f"{name}.snap"), SnapshotSet(kind, data, cfg.test_params))
    meta = {"iterations": [r.iterations for r in roms], "bc_deviation": [repr(float(r.bc_deviation)) for r in roms]}
    io.write_config(run.path("rom_meta.txt"), {k: " ".join(map(str, v)) or "none" for k, v in meta.items()})
    run.save_counter("reference", c)


_STAGE_FUNCS = {
    "snapshots": _stage_snapshots,
    "augment": _stage_augment,
    "basis": _stage_basis,
    "evaluate": _stage_evaluate,
}


def _build_report(run, upto):
    cfg, P = run.cfg, run.problem
    rep = Report(cfg.problem, cfg.strategy, n_train=len(cfg.train_params), force_tags=tuple(P.force_tags))
    rep.counters["snapshots"] = run.load_counter("snapshots").as_dict()
    if STAGES.index(upto) >= 1:
        rep.counters["augment"] = run.load_counter("augment").as_dict()
        rep.n_artificial = [
            io.read_snapshots(run.path(f"artificial_velocity{run.suffix(g)}.snap")).n_snapshots
            for g in range(len(run.groups))
        ]
    if STAGES.index(upto) >= 2:
        for g in range(len(run.groups)):
            rep.n_pod_u.append(io.load_basis(run.path(f"basis_u{run.suffix(g)}.npz")).n)
            rep.n_pod_p.append(io.load_basis(run.path(f"basis_p{run.suffix(g)}.npz")).n)
    if upto == "evaluate" and len(cfg.test_params):
        rep.counters["reference"] = run.load_counter("reference").as_dict()
        ref_u = io.read_snapshots(run.path("reference_velocity.snap"))
        ref_p = io.read_snapshots(run.path("reference_pressure.snap"), "pressure")
        rom_u = io.read_snapshots(run.path("rom_velocity.snap"))
        rom_p = io.read_snapshots(run.path("rom_pressure.snap"), "pressure")
        meta = io.read_config(run.path("rom_meta.txt"))
        rep.rom_iterations = [int(v) for v in meta["iterations"].split()]
        rep.bc_deviation = [float(v) for v in meta["bc_deviation"].split()]
        for t, mu in enumerate(cfg.test_params):
            fom = FomSolution(mu, ref_u.data[:, t], ref_p.data[:, t], [], True)
            rom = RomSolution(mu, None, None, rom_u.data[:, t], None, rom_p.data[:, t], rep.rom_iterations[t])
            rep.records.append(evaluate_errors(P, rom, fom))
        if cfg.local_k is None:
            rep.n_pod_u = rep.n_pod_u * len(cfg.test_params)
            rep.n_pod_p = rep.n_pod_p * len(cfg.test_params)
        io.write_csv(run.path("report.csv"), Report.CSV_HEADER, rep.csv_rows())
    io.write_config(run.path("summary.txt"), rep.summary())
    return rep


def run_pipeline(config, upto="evaluate", stage_only=False):
    """Run (or resume) the stages up to ``upto`` and return the report.

    With ``stage_only`` only the ``upto`` stage runs; its prerequisites must
    already be on disk.
    """
    if upto not in STAGES:
        raise ConfigError(f"unknown stage {upto!r}")
    run = _Run(config, stage_only)
    last = STAGES.index(upto)
    for k, stage in enumerate(STAGES[: last + 1]):
        if stage_only and k < last:
            run.require(stage)
            continue
        if run.done(stage) and not (stage_only and k == last):
            continue
        try:
            _STAGE_FUNCS[stage](run)
        except StageError:
            raise
        except NsaugError as exc:
            raise StageError(stage, exc) from exc
        run.mark(stage)
    return _build_report(run, upto)


def export_run(config, refine=False):
    """VTK files for the training snapshots and, when evaluated, every test point."""
    run = _Run(config)
    run.require("snapshots")
    P = run.problem
    U = io.read_snapshots(run.path("snapshots_velocity.snap"))
    Pp = io.read_snapshots(run.path("snapshots_pressure.snap"), "pressure")
    written = []
    for k in range(U.n_snapshots):
        p = run.path(f"snapshot_{k:03d}.vtk")
        io.write_vtk(P.mesh, {"velocity": U.data[:, k], "pressure": Pp.data[:, k]}, p, refine=refine)
        written.append(p)
    if run.done("evaluate") and len(config.test_params):
        names = ("reference_velocity", "reference_pressure", "rom_velocity", "rom_pressure")
        data = {n: io.read_snapshots(run.path(f"{n}.snap"), "pressure" if n.endswith("pressure") else "velocity")
                for n in names}
        for t in range(len(config.test_params)):
            p = run.path(f"test_{t:03d}.vtk")
            io.write_vtk(P.mesh, {n: data[n].data[:, t] for n in names}, p, refine=refine)
            written.append(p)
    return written
