"""Dataset generation and loading.

A dataset directory holds one geometry, graph and set of augmented
trajectories per simulated source, a manifest listing them, and the
normalization statistics fitted on every trajectory:

    manifest.json
    norm_stats.json
    geometries/<source>.json
    graphs/<source>.json
    trajectories/<source>_o<i>.json
    logs/gen.log
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from hemo_gnn.config.settings import DatagenSettings, SolverConfig, WallConfig
from hemo_gnn.datagen.loading import prepend_loading, resample_trajectory
from hemo_gnn.datagen.perturb import PerturbedBcs, perturb_bcs
from hemo_gnn.datagen.templates import GeneratedGeometry, GeometrySpec, InflowSpec, centerline_graph, generate_geometry
from hemo_gnn.errors import ContractError, DatasetError, HemoError
from hemo_gnn.graph.centerline import CenterlineGraph
from hemo_gnn.graph.io import (
    load_graph,
    load_norm_stats,
    load_trajectory,
    save_geometry,
    save_graph,
    save_norm_stats,
    save_trajectory,
)
from hemo_gnn.graph.normalization import NormStats, fit_normalization
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.hemo1d.solver import simulate
from hemo_gnn.hemo1d.wall import WallModel
from hemo_gnn.training.augment import augment_offsets
from hemo_gnn.utils.constants import SCHEMA_VERSION
from hemo_gnn.utils.executor import parallel_map
from hemo_gnn.utils.logging import log_run_event

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.json"
NORM_STATS_FILENAME = "norm_stats.json"
CONSERVATION_TOL = 1e-8  # cm^3/s


class ManifestEntry(BaseModel):
    """One simulated source: its files, perturbation factors and status."""

    model_config = ConfigDict(extra="forbid")

    source_id: str
    geometry_id: str
    perturbation: int
    factors: Dict[str, float] = Field(default_factory=dict)
    inflow: Optional[InflowSpec] = None
    geometry: Optional[str] = None
    graph: Optional[str] = None
    trajectories: List[str] = Field(default_factory=list)
    diagnostics: Dict[str, float] = Field(default_factory=dict)
    status: Literal["ok", "failed"] = "ok"
    error: Optional[str] = None


class DatasetManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    id: str
    dt: float
    seed: int
    n_perturbations: int
    loading_time: float
    n_offsets: int
    solver: SolverConfig
    wall: WallConfig
    specs: List[GeometrySpec]
    norm_stats: Optional[str] = None
    entries: List[ManifestEntry] = Field(default_factory=list)

    @property
    def ok_entries(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.status == "ok"]

    @property
    def failed_entries(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.status == "failed"]

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "DatasetManifest":
        path = Path(path)
        if not path.exists():
            raise DatasetError(f"Manifest not found: {path}")
        try:
            manifest = cls.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise DatasetError(f"Invalid manifest {path}:\n{e}") from e
        if manifest.schema_version != SCHEMA_VERSION:
            raise DatasetError(f"Manifest {path} has schema version {manifest.schema_version}")
        return manifest


# ----------------------------------------------------------------------
# Generation
# ----------------------------------------------------------------------


def _steps_per(duration: float, dt: float, what: str) -> int:
    n = int(round(duration / dt))
    if n < 1 or abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ContractError(f"{what} {duration} s is not a multiple of dt={dt}")
    return n


def simulate_source(
    generated: GeneratedGeometry,
    perturbed: PerturbedBcs,
    wall: WallModel,
    settings: DatagenSettings,
    solver: SolverConfig,
    source_id: str,
) -> Tuple[CenterlineGraph, Trajectory]:
    """Simulate n_cycles cycles, keep the last one, resample it and prepend the loading ramp.

    Returns:
        Centerline graph with the perturbed conditions, p_min/p_max of the kept cycle
        and its inflow at the dataset dt, and the trajectory on that graph
    """
    T_cc = perturbed.inflow.T_cc
    solver_steps = _steps_per(T_cc, solver.dt, "Cardiac cycle")
    _steps_per(T_cc, settings.dt, "Cardiac cycle")
    n_steps = settings.n_cycles * solver_steps

    series = perturbed.inflow.sample(solver.dt, n_steps)
    full = simulate(generated.geometry, wall, perturbed.bcs, series, n_steps * solver.dt, solver)
    imbalance = full.meta["max_junction_imbalance"]
    if imbalance > CONSERVATION_TOL:
        raise DatasetError(f"Junction flow imbalance {imbalance:.3e} cm^3/s exceeds {CONSERVATION_TOL:g}")

    last = n_steps - solver_steps
    cycle = Trajectory(
        states=full.states[last:],
        dt=solver.dt,
        inlet_flow=full.inlet_flow[last:],
        graph_ref=source_id,
        id=source_id,
        meta=dict(full.meta),
    )
    cycle = resample_trajectory(cycle, settings.dt)
    p_min = float(cycle.pressure.min())
    p_max = float(cycle.pressure.max())
    graph = centerline_graph(
        generated.geometry,
        perturbed.bcs,
        T_cc=T_cc,
        p_min=p_min,
        p_max=p_max,
        dt=settings.dt,
        inflow=cycle.inlet_flow[:-1],
        id=source_id,
    )
    return graph, prepend_loading(cycle, p_min, settings.loading_time)


@dataclass
class _EntryTask:
    spec: GeometrySpec
    generated: GeneratedGeometry
    perturbation: int
    settings: DatagenSettings
    solver: SolverConfig
    seed: np.random.SeedSequence


@dataclass
class _EntryResult:
    entry: ManifestEntry
    perturbed: Optional[PerturbedBcs] = None
    graph: Optional[CenterlineGraph] = None
    trajectories: List[Trajectory] = field(default_factory=list)
    duration_ms: float = 0.0


def _run_entry(task: _EntryTask) -> _EntryResult:
    source_id = f"{task.spec.id}_p{task.perturbation:03d}"
    entry = ManifestEntry(source_id=source_id, geometry_id=task.spec.id, perturbation=task.perturbation)
    rng = np.random.default_rng(task.seed)
    settings = task.settings
    start = time.perf_counter()

    perturbed = perturb_bcs(
        task.spec.inflow,
        task.generated.bcs,
        rng,
        low=settings.perturbation_low,
        high=settings.perturbation_high,
    )
    entry.factors = perturbed.factors
    entry.inflow = perturbed.inflow
    result = _EntryResult(entry=entry, perturbed=perturbed)
    wall = WallModel(**settings.wall.model_dump())
    try:
        graph, trajectory = simulate_source(task.generated, perturbed, wall, settings, task.solver, source_id)
        result.graph = graph
        result.trajectories = augment_offsets(trajectory, settings.n_offsets, p_min=graph.p_min)
        entry.diagnostics = {k: float(v) for k, v in trajectory.meta.items()}
    except HemoError as e:
        entry.status = "failed"
        entry.error = str(e)
        logger.warning(f"Simulation {source_id} failed: {e}")
    result.duration_ms = (time.perf_counter() - start) * 1000
    return result


def build_dataset(
    specs: Sequence[GeometrySpec],
    n_perturbations: int,
    out_dir: Path,
    settings: Optional[DatagenSettings] = None,
    solver: Optional[SolverConfig] = None,
    seed: int = 0,
    dataset_id: str = "dataset",
    workers: Optional[int] = None,
) -> DatasetManifest:
    """Generate a dataset directory and return its manifest.

    Every spec gets its own child seed; the geometry and each perturbation
    draw from further children, so the output does not depend on the
    worker count. Failed simulations are recorded in the manifest and the
    build goes on.
    """
    if not specs:
        raise ContractError("Dataset generation needs at least one geometry spec")
    if n_perturbations < 1:
        raise ContractError(f"n_perturbations must be at least 1, got {n_perturbations}")
    settings = settings or DatagenSettings()
    solver = solver or SolverConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for spec, spec_seed in zip(specs, np.random.SeedSequence(seed).spawn(len(specs))):
        children = spec_seed.spawn(n_perturbations + 1)
        generated = generate_geometry(spec, np.random.default_rng(children[0]))
        for i in range(n_perturbations):
            tasks.append(_EntryTask(spec, generated, i, settings, solver, children[i + 1]))

    logger.info(f"Simulating {len(tasks)} sources from {len(specs)} geometries")
    results = parallel_map(_run_entry, tasks, workers=workers or settings.workers, processes=True)

    wall = WallModel(**settings.wall.model_dump())
    entries = []
    pairs = []
    for task, result in zip(tasks, results):
        entry = result.entry
        if entry.status == "ok":
            entry.geometry = f"geometries/{entry.source_id}.json"
            entry.graph = f"graphs/{entry.source_id}.json"
            save_geometry(task.generated.geometry, wall, result.perturbed.bcs, out_dir / entry.geometry)
            save_graph(result.graph, out_dir / entry.graph)
            for trajectory in result.trajectories:
                relative = f"trajectories/{trajectory.id}.json"
                save_trajectory(trajectory, out_dir / relative)
                entry.trajectories.append(relative)
                pairs.append((result.graph, trajectory))
        entries.append(entry)
        log_run_event(
            out_dir / "logs",
            "gen",
            "simulation",
            {"source_id": entry.source_id, "status": entry.status, **entry.diagnostics},
            duration_ms=result.duration_ms,
            error=entry.error,
        )

    manifest = DatasetManifest(
        id=dataset_id,
        dt=settings.dt,
        seed=seed,
        n_perturbations=n_perturbations,
        loading_time=settings.loading_time,
        n_offsets=settings.n_offsets,
        solver=solver,
        wall=settings.wall,
        specs=list(specs),
        entries=entries,
    )
    if pairs:
        save_norm_stats(fit_normalization(pairs), out_dir / NORM_STATS_FILENAME)
        manifest.norm_stats = NORM_STATS_FILENAME
    else:
        logger.warning("Every simulation failed; no normalization statistics were written")
    manifest.save(out_dir / MANIFEST_FILENAME)
    logger.info(
        f"Dataset {dataset_id}: {len(manifest.ok_entries)} sources ok, {len(manifest.failed_entries)} failed, "
        f"{len(pairs)} trajectories"
    )
    return manifest


# ----------------------------------------------------------------------
# Loading
# ----------------------------------------------------------------------


class Dataset:
    """Trajectories with their graphs, addressed by trajectory id."""

    def __init__(
        self,
        trajectories: Sequence[Trajectory],
        graphs: Mapping[str, CenterlineGraph],
        geometry_ids: Optional[Mapping[str, str]] = None,
        manifest: Optional[DatasetManifest] = None,
        root: Optional[Path] = None,
        stats: Optional[NormStats] = None,
    ):
        self._trajectories = {t.id: t for t in trajectories}
        if len(self._trajectories) != len(trajectories):
            raise DatasetError("Trajectory ids must be unique within a dataset")
        for trajectory in trajectories:
            graph = graphs.get(trajectory.graph_ref)
            if graph is None:
                raise DatasetError(f"Trajectory {trajectory.id} refers to unknown graph '{trajectory.graph_ref}'")
            if graph.n_nodes != trajectory.n_nodes:
                raise DatasetError(f"Trajectory {trajectory.id} does not match graph {graph.id}")
        self.graphs = dict(graphs)
        self.geometry_ids = dict(geometry_ids or {})
        self.manifest = manifest
        self.root = root
        self.stats = stats

    def __len__(self) -> int:
        return len(self._trajectories)

    @property
    def ids(self) -> List[str]:
        return list(self._trajectories)

    @property
    def sources(self) -> List[str]:
        return [t.source_id for t in self._trajectories.values()]

    @property
    def dt(self) -> float:
        dts = {t.dt for t in self._trajectories.values()}
        if len(dts) != 1:
            raise DatasetError(f"Dataset trajectories do not share one dt: {sorted(dts)}")
        return dts.pop()

    def trajectory(self, trajectory_id: str) -> Trajectory:
        try:
            return self._trajectories[trajectory_id]
        except KeyError:
            raise DatasetError(f"Unknown trajectory '{trajectory_id}'") from None

    def graph_of(self, trajectory_id: str) -> CenterlineGraph:
        return self.graphs[self.trajectory(trajectory_id).graph_ref]

    def geometry_of(self, trajectory_id: str) -> str:
        graph_ref = self.trajectory(trajectory_id).graph_ref
        return self.geometry_ids.get(graph_ref, graph_ref)

    @property
    def geometries(self) -> List[str]:
        return sorted({self.geometry_of(i) for i in self.ids})

    @property
    def n_geometries(self) -> int:
        return len(self.geometries)

    def pairs(self, ids: Optional[Sequence[str]] = None) -> List[Tuple[CenterlineGraph, Trajectory]]:
        ids = self.ids if ids is None else ids
        return [(self.graph_of(i), self.trajectory(i)) for i in ids]

    def subset(self, ids: Sequence[str]) -> "Dataset":
        trajectories = [self.trajectory(i) for i in ids]
        refs = {t.graph_ref for t in trajectories}
        return Dataset(
            trajectories,
            {ref: self.graphs[ref] for ref in refs},
            geometry_ids={ref: self.geometry_ids[ref] for ref in refs if ref in self.geometry_ids},
            manifest=self.manifest,
            root=self.root,
            stats=self.stats,
        )

    def for_geometry(self, geometry_id: str) -> "Dataset":
        ids = [i for i in self.ids if self.geometry_of(i) == geometry_id]
        if not ids:
            raise DatasetError(f"No trajectories for geometry '{geometry_id}'")
        return self.subset(ids)

    def source_subset(self, sources: Sequence[str]) -> "Dataset":
        """Trajectories whose source id is listed, augmented variants included."""
        wanted = set(sources)
        return self.subset([i for i in self.ids if self.trajectory(i).source_id in wanted])

    def entry_of(self, trajectory_id: str) -> ManifestEntry:
        if self.manifest is None:
            raise DatasetError("Dataset has no manifest")
        source = self.trajectory(trajectory_id).source_id
        for entry in self.manifest.entries:
            if entry.source_id == source:
                return entry
        raise DatasetError(f"No manifest entry for source '{source}'")


def load_dataset(root: Path) -> Dataset:
    """Load every successful entry of a dataset directory."""
    root = Path(root)
    manifest = DatasetManifest.load(root / MANIFEST_FILENAME)
    graphs: Dict[str, CenterlineGraph] = {}
    geometry_ids: Dict[str, str] = {}
    trajectories: List[Trajectory] = []
    for entry in manifest.ok_entries:
        if entry.graph is None:
            raise DatasetError(f"Entry {entry.source_id} has no graph file")
        graph = load_graph(root / entry.graph)
        graphs[graph.id] = graph
        geometry_ids[graph.id] = entry.geometry_id
        for relative in entry.trajectories:
            trajectories.append(load_trajectory(root / relative))
    if not trajectories:
        raise DatasetError(f"Dataset {root} has no successful trajectories")
    stats = load_norm_stats(root / manifest.norm_stats) if manifest.norm_stats else None
    logger.debug(f"Loaded {len(trajectories)} trajectories on {len(graphs)} graphs from {root}")
    return Dataset(trajectories, graphs, geometry_ids=geometry_ids, manifest=manifest, root=root, stats=stats)
