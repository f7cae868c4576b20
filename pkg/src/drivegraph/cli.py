"""Pipeline CLI: each stage reads and writes plain files so any step can be
re-run and diffed in isolation.

Exit codes: 0 success, 2 validation failure, 3 quota shortfall (a partial
corpus is still written).
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import calibration, metadata as metadata_mod, rendering
from .graph import ThresholdSet, build_graph, export_graph, parse_graph
from .qa import (
    GeneratorConfig,
    TASK_IDS,
    build_contexts,
    generate_all,
    read_corpus,
    write_corpus,
)
from .schema import (
    InvariantError,
    Scene,
    SchemaError,
    dumps_canonical,
    parse_canonical,
    serialize,
)
from .scoring import cohen_kappa, read_predictions, score
from .service import ServiceConfig, VerificationStore, create_app

SCENE_SUFFIX = ".scene.json"
GRAPH_SUFFIX = ".graph.json"


def _scene_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    return sorted(path.glob(f"*{SCENE_SUFFIX}"))


def _load_scenes(path: Path) -> list[Scene]:
    return [parse_canonical(p.read_text(encoding="utf-8")) for p in _scene_files(path)]


def _write_scene(scene: Scene, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{scene.scene_id}{SCENE_SUFFIX}"
    path.write_text(serialize(scene), encoding="utf-8")
    return path


def _load_config(config_path: str | None) -> dict:
    if not config_path:
        return {}
    return json.loads(Path(config_path).read_text(encoding="utf-8"))


def _parallel(jobs: int, fn, values):
    if jobs <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, values))


@click.group()
def main():
    """Scene-graph construction and QA synthesis pipeline."""


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def ingest(in_path: Path, out_dir: Path):
    """Validate raw scene documents and write canonicalized copies."""
    count = 0
    for path in _scene_files(in_path):
        try:
            scene = parse_canonical(path.read_text(encoding="utf-8"))
        except (SchemaError, InvariantError) as exc:
            click.echo(f"{path}: {exc}", err=True)
            sys.exit(2)
        _write_scene(scene, out_dir)
        count += 1
    click.echo(f"ingested {count} scenes -> {out_dir}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--alpha", default="auto", show_default=True,
              help="rotation in radians, or 'auto' to use the source table")
@click.option("--jobs", default=1, show_default=True)
def calibrate(in_path: Path, out_dir: Path, alpha: str, jobs: int):
    """Rotate scenes into the reference convention."""
    scenes = _load_scenes(in_path)

    def run(scene: Scene):
        value = (
            calibration.SOURCE_ALPHA[scene.metadata.source] if alpha == "auto" else float(alpha)
        )
        return calibration.calibrate_scene(scene, value)

    try:
        out = _parallel(jobs, run, scenes)
    except calibration.AlreadyCalibrated as exc:
        click.echo(f"already calibrated: {exc}", err=True)
        sys.exit(2)
    for scene in out:
        _write_scene(scene, out_dir)
    click.echo(f"calibrated {len(out)} scenes -> {out_dir}")


@main.command("complete-metadata")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--asset-dir", type=click.Path(path_type=Path), default=None,
              help="where scene-type BEV inputs are rendered")
@click.option("--jobs", default=1, show_default=True)
def complete_metadata_cmd(in_path: Path, out_dir: Path, asset_dir: Path | None, jobs: int):
    """Fill missing weather / time-of-day / scene-type labels via the
    deterministic stub clients."""
    scenes = _load_scenes(in_path)
    clients = metadata_mod.default_clients()

    def run(scene: Scene):
        return metadata_mod.complete_metadata(scene, clients, asset_dir=asset_dir)

    results = _parallel(jobs, run, scenes)
    failures = 0
    for result in results:
        _write_scene(result.scene, out_dir)
        for field_name, message in result.errors:
            failures += 1
            click.echo(f"{result.scene.scene_id}.{field_name}: {message}", err=True)
    click.echo(f"completed metadata for {len(results)} scenes -> {out_dir}")
    if failures:
        sys.exit(2)


@main.command("build-graph")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--thresholds", "thresholds_json", default=None,
              help="JSON object overriding threshold defaults")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--jobs", default=1, show_default=True)
def build_graph_cmd(in_path: Path, out_dir: Path, thresholds_json: str | None,
                    config_path: str | None, jobs: int):
    """Construct the multi-relational graph for every scene."""
    config = _load_config(config_path)
    overrides = dict(config.get("thresholds", {}))
    if thresholds_json:
        overrides.update(json.loads(thresholds_json))
    thresholds = ThresholdSet(**overrides)
    scenes = _load_scenes(in_path)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(scene: Scene):
        graph = build_graph(scene, thresholds)
        (out_dir / f"{scene.scene_id}{GRAPH_SUFFIX}").write_text(
            export_graph(graph), encoding="utf-8"
        )
        return graph

    graphs = _parallel(jobs, run, scenes)
    click.echo(f"built {len(graphs)} graphs -> {out_dir}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--frame", default=None, type=int, help="frame index (default: middle)")
@click.option("--kind", "kinds", multiple=True, default=("bev", "multiview"), show_default=True)
@click.option("--jobs", default=1, show_default=True)
def render(in_path: Path, out_dir: Path, frame: int | None, kinds: tuple[str, ...], jobs: int):
    """Render BEV maps and camera composites for inspection."""
    scenes = _load_scenes(in_path)

    def run(scene: Scene):
        t = frame if frame is not None else len(scene.frames) // 2
        target = out_dir / scene.scene_id / str(t)
        target.mkdir(parents=True, exist_ok=True)
        if "bev" in kinds:
            rendering.save_png(rendering.render_bev(scene, t), target / "bev.png")
        if "multiview" in kinds:
            rendering.save_png(rendering.render_multiview(scene, t).image, target / "multiview.png")
        return scene.scene_id

    done = _parallel(jobs, run, scenes)
    click.echo(f"rendered {len(done)} scenes -> {out_dir}")


@main.command("generate-qa")
@click.option("--scenes", "scenes_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--graphs", "graphs_path", default=None, type=click.Path(exists=True, path_type=Path),
              help="directory of graph exports; omitted graphs are rebuilt")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--assets", "assets_dir", default=None, type=click.Path(path_type=Path))
@click.option("--report", "report_path", default=None, type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True)
@click.option("--quotas", "quotas_json", default=None,
              help='JSON: {"task_id": n, ...} or {"*": n}; default 5 per task')
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--no-assets", is_flag=True, help="skip rendering asset files")
def generate_qa(scenes_path: Path, graphs_path: Path | None, out_path: Path,
                assets_dir: Path | None, report_path: Path | None, seed: int,
                quotas_json: str | None, config_path: str | None, no_assets: bool):
    """Generate the QA corpus from calibrated scenes (+ graphs)."""
    config = _load_config(config_path)
    quota_spec = config.get("quotas", {})
    if quotas_json:
        quota_spec = json.loads(quotas_json)
    default_quota = quota_spec.get("*", 5 if not quota_spec else 0)
    quotas = {t: int(quota_spec.get(t, default_quota)) for t in TASK_IDS}

    scenes = _load_scenes(scenes_path)
    graphs = {}
    if graphs_path:
        for p in sorted(graphs_path.glob(f"*{GRAPH_SUFFIX}")):
            graph = parse_graph(p.read_text(encoding="utf-8"))
            graphs[graph.scene_id] = graph
    thresholds = ThresholdSet(**config.get("thresholds", {}))
    contexts = build_contexts(scenes, thresholds, graphs)

    cfg = GeneratorConfig(
        seed=int(config.get("seed", seed) if seed == 0 else seed),
        render_assets=not no_assets and assets_dir is not None,
        asset_dir=str(assets_dir) if assets_dir else None,
    )
    items, report = generate_all(contexts, quotas, cfg)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(items, out_path)
    if report_path:
        report_path.write_text(
            dumps_canonical(report.to_dict()) + "\n", encoding="utf-8"
        )
    click.echo(f"wrote {len(items)} items -> {out_path}")
    for task_id, task in sorted(report.tasks.items()):
        if task.shortfall:
            click.echo(
                f"shortfall {task_id}: {task.generated}/{task.quota} "
                f"(rejections: {dict(sorted(task.rejections.items()))})",
                err=True,
            )
    if report.has_shortfall:
        sys.exit(3)


@main.command("score")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--predictions", "pred_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--scenes", "scenes_path", default=None, type=click.Path(exists=True, path_type=Path),
              help="scene pool for condition breakdowns")
@click.option("--out-dir", "out_dir", required=True, type=click.Path(path_type=Path))
def score_cmd(corpus_path: Path, pred_path: Path, scenes_path: Path | None, out_dir: Path):
    """Score a prediction file; writes JSON + text tables and figures."""
    from .qa.templates import ABILITIES
    from . import reporting

    items = read_corpus(corpus_path)
    preds = read_predictions(pred_path)
    metadata_by_scene = None
    if scenes_path:
        metadata_by_scene = {
            s.scene_id: {
                "weather": s.metadata.weather,
                "time_of_day": s.metadata.time_of_day,
                "scene_type": s.metadata.scene_type,
                "source": s.metadata.source,
            }
            for s in _load_scenes(scenes_path)
        }
    try:
        report = score(items, preds, metadata_by_scene=metadata_by_scene)
    except Exception as exc:
        click.echo(f"scoring failed: {exc}", err=True)
        sys.exit(2)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        dumps_canonical(report.to_dict()) + "\n", encoding="utf-8"
    )
    (out_dir / "report.txt").write_text(report.to_text() + "\n", encoding="utf-8")
    reporting.accuracy_by_task_figure(report, ABILITIES, out_dir / "accuracy_by_task.png")
    reporting.ability_summary_figure(report, out_dir / "ability_summary.png")
    if report.condition_breakdown:
        reporting.condition_breakdown_figure(report, out_dir / "condition_breakdown.png")
    click.echo(report.to_text())
    click.echo(f"report -> {out_dir}")


@main.command("kappa")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--preds-a", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--preds-b", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", "out_dir", required=True, type=click.Path(path_type=Path))
def kappa_cmd(corpus_path: Path, preds_a: Path, preds_b: Path, out_dir: Path):
    """Cohen's kappa between two responders, per ability."""
    from . import reporting

    items = read_corpus(corpus_path)
    a = read_predictions(preds_a)
    b = read_predictions(preds_b)
    rows: dict[str, tuple[float, str]] = {}
    for ability in ("Const", "Unders", "Reas"):
        subset = [i for i in items if i.ability == ability and i.answer_type == "option"]
        if not subset:
            continue
        ids = {i.item_id for i in subset}
        rows[ability] = cohen_kappa(
            [p for p in a if p.item_id in ids],
            [p for p in b if p.item_id in ids],
            subset,
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {k: {"kappa": v[0], "band": v[1]} for k, v in rows.items()}
    (out_dir / "kappa.json").write_text(dumps_canonical(payload) + "\n", encoding="utf-8")
    reporting.kappa_figure(rows, out_dir / "kappa.png")
    for ability, (value, band) in rows.items():
        click.echo(f"{ability}: {value:.4f} ({band})")


@main.command("serve")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--scenes", "scenes_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--port", default=None, type=int)
@click.option("--log", "log_path", default=None, type=click.Path(path_type=Path))
@click.option("--assets", "asset_root", default=None, type=click.Path(path_type=Path))
@click.option("--quorum", default=None, type=int)
def serve(corpus_path: Path, scenes_path: Path, config_path: str | None, port: int | None,
          log_path: Path | None, asset_root: Path | None, quorum: int | None):
    """Run the verification service."""
    import uvicorn

    config = ServiceConfig.load(config_path)
    if port is not None:
        config.port = port
    if log_path is not None:
        config.log_path = str(log_path)
    if asset_root is not None:
        config.asset_root = str(asset_root)
    if quorum is not None:
        config.quorum = quorum

    items = read_corpus(corpus_path)
    scenes = _load_scenes(scenes_path)
    store = VerificationStore(items, scenes, config)
    uvicorn.run(create_app(store), host="127.0.0.1", port=config.port)


@main.command("export")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--scenes", "scenes_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--stats-out", "stats_path", default=None, type=click.Path(path_type=Path))
@click.option("--quorum", default=1, show_default=True)
def export_cmd(corpus_path: Path, scenes_path: Path, log_path: Path, out_path: Path,
               stats_path: Path | None, quorum: int):
    """Offline export of verified items plus QC statistics."""
    config = ServiceConfig(log_path=str(log_path), quorum=quorum)
    store = VerificationStore(read_corpus(corpus_path), _load_scenes(scenes_path), config)
    records, stats = store.export_accepted()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_canonical(record) + "\n")
    if stats_path:
        stats_path.write_text(dumps_canonical(stats) + "\n", encoding="utf-8")
    click.echo(
        f"exported {len(records)} items (strict pass rate: {stats['pass_rate_strict']}, "
        f"with edits: {stats['pass_rate_with_edits']})"
    )


if __name__ == "__main__":
    main()
