"""
Command-line interface for the terrain mapping pipeline.
Provides the run, eval, ablate, synth and plan verbs using click and rich.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
import pandas as pd
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from ..bgk.inference import TerrainModel
from ..dataio.readers import DataFormatError, SequenceReader, read_grid_csv
from ..dataio.writers import (
    write_frame_outputs, write_grid_csv, write_metrics_jsonl, write_path_csv, write_sequence,
)
from ..evaluation.ground_truth import ground_truth_for_frame
from ..evaluation.metrics import evaluate_frame, summarize_reports
from ..evaluation.scene import PRESETS, preset_scene, synth_scene, synth_sequence
from ..evaluation.schema import MetricReport, SceneSpec
from ..geometry.core import GridIndex, InvalidArgumentError
from ..pipeline.ablation import CELL_SIZES, evaluate_run, run_ablation
from ..pipeline.runner import FrameResult, run_pipeline
from ..pipeline.schema import PipelineConfig
from ..traversability.analysis import CostMap, attach_edges
from ..traversability.planner import PathInfeasibleError, path_cost, plan_path
from ..utils.config import Config, ConfigurationError
from ..utils.logging import PerformanceMonitor, ProductionLogger, setup_logging

VERSION = "1.0.0"


class CLIError(Exception):
    """Base exception for CLI operations."""
    pass


def parse_assignments(pairs: Sequence[str]) -> Dict[str, str]:
    """``KEY=VALUE`` strings to a dict; raises CLIError on a bad entry."""
    result = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise CLIError(f"Override '{pair}' is not of the form KEY=VALUE")
        result[key.strip().upper()] = value.strip()
    return result


def parse_cell(text: str) -> GridIndex:
    """``ROW,COL`` to a GridIndex."""
    try:
        row, col = (int(v) for v in text.split(","))
    except ValueError:
        raise CLIError(f"Cell '{text}' is not of the form ROW,COL")
    return GridIndex(row, col)


class TerrainCLI:
    """
    CLI application for the terrain mapping pipeline.

    Features:
    - Sequence processing with per-frame map outputs
    - Evaluation against labelled or synthetic ground truth
    - Ablation over the fusion and inference variants
    - Synthetic sequence generation
    - Path planning on stored cost maps
    """

    def __init__(self, config_file: Optional[Path] = None,
                 overrides: Optional[Dict[str, str]] = None,
                 console: Optional[Console] = None):
        """Initialize CLI application."""
        self.console = console or Console()
        self.config_file = config_file
        self.overrides = overrides or {}
        self.config: Optional[Config] = None
        self.pipeline_config: Optional[PipelineConfig] = None
        self.logger: Optional[ProductionLogger] = None
        self.performance_monitor: Optional[PerformanceMonitor] = None

    def _initialize_components(self):
        """Load and validate configuration, then set up logging."""
        try:
            self.config = Config(self.config_file, self.overrides)
            self.config.validate_configuration()
            self.pipeline_config = self.config.pipeline_config()
            self.logger = setup_logging(self.config)
            self.performance_monitor = PerformanceMonitor(self.logger.get_logger('terrain.performance'))
            self.logger.info("CLI components initialized successfully")
        except ConfigurationError as e:
            self.console.print(f"[red]Configuration Error: {escape(str(e))}[/red]")
            raise CLIError(f"Configuration error: {e}")

    @property
    def output_dir(self) -> Path:
        return Path(self.pipeline_config.output_dir)

    def _print_header(self, title: str):
        self.console.print(Panel.fit(
            f"[bold blue]Terrain Mapping[/bold blue]\n[dim]{title}[/dim]",
            border_style="blue",
        ))

    def _write_timing(self, results: Sequence[FrameResult]) -> Optional[Path]:
        if not results or not self.pipeline_config.timing_enabled:
            return None
        rows = [{"frame_id": r.frame_id, "points": r.points, **r.timing} for r in results]
        path = self.output_dir / "timing.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(rows).to_csv(path, index=False, float_format="%.3f")
        return path

    def _print_metrics(self, summary: pd.DataFrame, title: str = "Metrics"):
        table = Table(title=title, show_header=True, header_style="bold magenta")
        for column in summary.columns:
            table.add_column(str(column), style="cyan" if column == "variant" else None)
        for _, row in summary.iterrows():
            table.add_row(*[f"{v:.4f}" if isinstance(v, float) else str(v) for v in row.tolist()])
        self.console.print(table)

    def run_sequence(self, manifest: Path, write_outputs: bool = True) -> List[FrameResult]:
        """Process a sequence and write elevation, variance and cost grids per frame."""
        cfg = self.pipeline_config
        try:
            reader = SequenceReader(manifest)
        except DataFormatError as e:
            raise CLIError(str(e))

        results = []
        with self.performance_monitor.measure_time("run_sequence"):
            for result in run_pipeline(cfg, reader, self.logger, self.performance_monitor):
                if write_outputs:
                    write_frame_outputs(self.output_dir, result, cfg.invalid_sentinel)
                results.append(result)
                self.console.print(
                    f"Frame {result.frame_id}: {int(result.costmap.traversable.sum())} traversable cells, "
                    f"{result.timing.get('total', 0.0):.1f} ms"
                )
        self._write_timing(results)
        self.performance_monitor.log_system_resources()
        self._print_performance()
        return results

    def _print_performance(self):
        summary = self.performance_monitor.get_performance_summary()
        self.logger.info(f"PERFORMANCE frames={summary['frames']} uptime_s={summary['uptime_seconds']:.2f}")
        if not summary["mean_stage_ms"]:
            return
        table = Table(title="Mean stage time", show_header=True, header_style="bold magenta")
        table.add_column("stage", style="cyan")
        table.add_column("ms", justify="right")
        for stage, ms in summary["mean_stage_ms"].items():
            table.add_row(stage, f"{ms:.2f}")
        self.console.print(table)

    def show_configuration(self):
        """Print the validated configuration summary without processing anything."""
        table = Table(title="Configuration", show_header=True, header_style="bold magenta")
        table.add_column("group", style="cyan")
        table.add_column("setting")
        table.add_column("value")
        for group, values in self.config.get_summary().items():
            if isinstance(values, dict):
                for key, value in values.items():
                    table.add_row(group, key, str(value))
            else:
                table.add_row(group, "", str(values))
        self.console.print(table)

    def evaluate_sequence(self, manifest: Path, radius: float) -> List[MetricReport]:
        """Score every frame of a labelled sequence against ground truth assembled from its labels."""
        cfg = self.pipeline_config
        try:
            reader = SequenceReader(manifest)
        except DataFormatError as e:
            raise CLIError(str(e))
        if reader.manifest.labels is None:
            raise CLIError(f"Manifest {manifest} has no labels entry; evaluation needs labels")

        frames = []
        for record in reader:
            try:
                frames.append(record.load())
            except DataFormatError as e:
                self.console.print(f"[yellow]Skipping malformed frame: {e}[/yellow]")
        index_of = {f.frame_id: i for i, f in enumerate(frames)}

        reports = []
        results = []
        for result in run_pipeline(cfg, frames, self.logger, self.performance_monitor):
            gt = ground_truth_for_frame(frames, index_of[result.frame_id], result.terrain.anchor,
                                        radius=radius, overhang_height=cfg.overhang_threshold)
            reports.append(evaluate_frame(result.costmap, result.terrain, gt, frame_id=result.frame_id,
                                          variant=cfg.variant_name(),
                                          include_invalid=cfg.include_invalid_in_error,
                                          sentinel=cfg.invalid_sentinel))
            results.append(result)
        write_metrics_jsonl(self.output_dir / "metrics.jsonl", reports)
        self._write_timing(results)
        return reports

    def evaluate_scene(self, spec: SceneSpec) -> List[MetricReport]:
        """Score a synthetic sequence against its exact ground truth."""
        cfg = self.pipeline_config
        terrain, frames = synth_sequence(spec)
        reports, results = evaluate_run(cfg, frames, terrain, variant=cfg.variant_name())
        write_metrics_jsonl(self.output_dir / "metrics.jsonl", reports)
        self._write_timing(results)
        return reports

    def synthesize(self, spec: SceneSpec, out_dir: Path) -> Path:
        """Write a synthetic sequence plus the ground truth around its first pose."""
        cfg = self.pipeline_config
        _, frames = synth_sequence(spec)
        manifest = write_sequence(out_dir, frames)
        _, gt = synth_scene(spec, cfg.map_size_m, cfg.cell_size_m, cfg.kinematic_limits())
        write_grid_csv(out_dir / "ground_truth" / "labels.csv", gt.labels.astype(float))
        write_grid_csv(out_dir / "ground_truth" / "elevation.csv", gt.elevation,
                       gt.traversable, cfg.invalid_sentinel)
        return manifest

    def ablate(self, spec: SceneSpec, cell_sizes: Sequence[float]) -> pd.DataFrame:
        table = run_ablation(self.pipeline_config, spec, cell_sizes, self.performance_monitor)
        path = self.output_dir / "ablation.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        table.drop(columns=["mean_frame_ms"]).to_csv(path, index=False, float_format="%.6f")
        table[["variant", "mean_frame_ms"]].to_csv(self.output_dir / "ablation_timing.csv",
                                                   index=False, float_format="%.3f")
        return table

    def plan(self, cost_csv: Path, start: GridIndex, goal: GridIndex,
             elevation_csv: Optional[Path] = None) -> Tuple[List[GridIndex], float]:
        """
        Plan on a stored cost grid; sentinel cells are impassable.

        With an elevation grid (given, or the ``elevation/`` sibling that run
        writes next to ``cost/``) moves also respect the edge test on it.
        """
        cfg = self.pipeline_config
        if elevation_csv is None:
            sibling = cost_csv.parent.parent / "elevation" / cost_csv.name
            if cost_csv.parent.name == "cost" and sibling.is_file():
                elevation_csv = sibling
        try:
            cost = read_grid_csv(cost_csv, cfg.invalid_sentinel)
            costmap = CostMap.from_costs(cost, cfg.cell_size_m)
            if elevation_csv is not None:
                elevation = read_grid_csv(elevation_csv, cfg.invalid_sentinel)
                model = TerrainModel.from_elevation(elevation, cfg.cell_size_m)
                costmap = attach_edges(costmap, model, cfg.kinematic_limits())
                if self.logger:
                    self.logger.info(f"Planning with edge results from {elevation_csv}")
        except (DataFormatError, InvalidArgumentError) as e:
            raise CLIError(str(e))
        try:
            path = plan_path(costmap, start, goal, cfg.planner_cost_weight)
        except PathInfeasibleError as e:
            raise CLIError(str(e))
        return path, path_cost(costmap, path, cfg.planner_cost_weight)


def _load_scene(scene: str, scene_file: Optional[Path], frames: int, seed: int) -> SceneSpec:
    if scene_file is not None:
        try:
            return SceneSpec.model_validate_json(Path(scene_file).read_text())
        except (OSError, ValueError) as e:
            raise CLIError(f"Cannot load scene file {scene_file}: {e}")
    return preset_scene(scene, frames=frames, seed=seed)


def _app(ctx: click.Context) -> TerrainCLI:
    app: TerrainCLI = ctx.obj
    app._initialize_components()
    return app


def _fail(ctx: click.Context, app_console: Console, error: Exception):
    app_console.print(f"[red]Error: {escape(str(error))}[/red]")
    ctx.exit(1)


# Click commands for CLI entry points
@click.group()
@click.version_option(version=VERSION, prog_name="terrain-mapping")
@click.option("--config", "config_file", type=click.Path(dir_okay=False, path_type=Path),
              help="Key-value configuration file")
@click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE",
              help="Override any configuration key")
@click.option("--map-size", type=float, help="W, map side length (m)")
@click.option("--cell-size", type=float, help="ω, cell size (m)")
@click.option("--fusion-mode", type=click.Choice(["ndt", "kf"]), help="Temporal fusion filter")
@click.option("--bilateral-filter/--no-bilateral-filter", default=None, help="Bilateral weighting")
@click.option("--estimated-variance/--no-estimated-variance", default=None, help="Variance-weighted BGK")
@click.option("--seed", type=int, help="Random seed")
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--single-threaded", is_flag=True, default=None, help="Force single-threaded FFTs")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.pass_context
def cli(ctx, config_file, assignments, map_size, cell_size, fusion_mode, bilateral_filter,
        estimated_variance, seed, output_dir, single_threaded, log_level):
    """Terrain Mapping - dense elevation and traversability maps from LiDAR sequences."""
    console = Console()
    try:
        overrides = parse_assignments(assignments)
    except CLIError as e:
        _fail(ctx, console, e)
    flags = {
        "MAP_SIZE_M": map_size,
        "CELL_SIZE_M": cell_size,
        "FUSION_MODE": fusion_mode,
        "BILATERAL_FILTER": bilateral_filter,
        "ESTIMATED_VARIANCE": estimated_variance,
        "SEED": seed,
        "OUTPUT_DIR": output_dir,
        "SINGLE_THREADED": single_threaded,
        "LOG_LEVEL": log_level,
    }
    overrides.update({k: str(v).lower() if isinstance(v, bool) else str(v)
                      for k, v in flags.items() if v is not None})
    ctx.obj = TerrainCLI(config_file, overrides, console)


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--no-write", is_flag=True, help="Process without writing map files")
@click.option("--dry-run", is_flag=True, help="Validate and print the configuration, then stop")
@click.pass_context
def run(ctx, manifest, no_write, dry_run):
    """Build terrain and cost maps for every frame of a sequence."""
    app: TerrainCLI = ctx.obj
    try:
        _app(ctx)
        app._print_header(f"run {manifest}")
        if dry_run:
            app.show_configuration()
            return
        results = app.run_sequence(manifest, write_outputs=not no_write)
    except CLIError as e:
        _fail(ctx, app.console, e)
    app.console.print(f"[green]Processed {len(results)} frame(s)[/green]")


@cli.command(name="eval")
@click.argument("manifest", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--scene", type=click.Choice(PRESETS), default=None, help="Evaluate a synthetic preset instead")
@click.option("--scene-file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Synthetic scene as JSON")
@click.option("--frames", default=5, show_default=True, help="Frames of a synthetic preset")
@click.option("--radius", default=50.0, show_default=True, help="Assembly radius for labelled ground truth (m)")
@click.pass_context
def evaluate(ctx, manifest, scene, scene_file, frames, radius):
    """Score a sequence with P, R, F1, E, RMSE and coverage."""
    app: TerrainCLI = ctx.obj
    try:
        _app(ctx)
        if manifest is not None:
            reports = app.evaluate_sequence(manifest, radius)
        elif scene is not None or scene_file is not None:
            spec = _load_scene(scene or "flat", scene_file, frames, app.pipeline_config.seed)
            reports = app.evaluate_scene(spec)
        else:
            raise CLIError("Give a manifest, --scene or --scene-file")
    except CLIError as e:
        _fail(ctx, app.console, e)
    app._print_metrics(summarize_reports(reports))


@cli.command()
@click.option("--scene", type=click.Choice(PRESETS), default="curb", show_default=True)
@click.option("--scene-file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--frames", default=5, show_default=True)
@click.option("--cell-sizes", default=",".join(f"{c:g}" for c in CELL_SIZES), show_default=True,
              help="Comma-separated ω values")
@click.pass_context
def ablate(ctx, scene, scene_file, frames, cell_sizes):
    """Compare NDT/KF, bilateral filter and estimated variance across cell sizes."""
    app: TerrainCLI = ctx.obj
    try:
        _app(ctx)
        try:
            sizes = [float(v) for v in cell_sizes.split(",") if v.strip()]
        except ValueError:
            raise CLIError(f"Bad cell size list '{cell_sizes}'")
        spec = _load_scene(scene, scene_file, frames, app.pipeline_config.seed)
        table = app.ablate(spec, sizes)
    except (CLIError, ConfigurationError, ValueError) as e:
        _fail(ctx, app.console, e)
    app._print_metrics(table, title="Ablation")


@cli.command()
@click.argument("preset", type=click.Choice(PRESETS))
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--frames", default=5, show_default=True)
@click.option("--scene-file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Use a JSON scene instead of the preset")
@click.pass_context
def synth(ctx, preset, out_dir, frames, scene_file):
    """Write a synthetic labelled sequence with its manifest and ground truth."""
    app: TerrainCLI = ctx.obj
    try:
        _app(ctx)
        spec = _load_scene(preset, scene_file, frames, app.pipeline_config.seed)
        manifest = app.synthesize(spec, out_dir)
    except CLIError as e:
        _fail(ctx, app.console, e)
    app.console.print(f"[green]Wrote {manifest}[/green]")


@cli.command()
@click.argument("cost_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--start", required=True, help="Start cell ROW,COL")
@click.option("--goal", required=True, help="Goal cell ROW,COL")
@click.option("--elevation", "elevation_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Elevation grid for the edge test (default: elevation/ next to cost/ when present)")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Path CSV (default: <output>/path.csv)")
@click.pass_context
def plan(ctx, cost_csv, start, goal, elevation_csv, out):
    """Cost-aware A* between two cells of a stored cost map."""
    app: TerrainCLI = ctx.obj
    try:
        _app(ctx)
        path, total = app.plan(cost_csv, parse_cell(start), parse_cell(goal), elevation_csv)
    except CLIError as e:
        _fail(ctx, app.console, e)
    target = write_path_csv(out or app.output_dir / "path.csv", path)
    app.console.print(f"[green]Path of {len(path)} cells, cost {total:.4f}, written to {target}[/green]")


if __name__ == "__main__":
    cli()
