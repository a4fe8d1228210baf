"""Command-line interface: simulate, train, init, serve, refine, eval, e2e."""
from __future__ import annotations

import json
import logging
import socket
import threading
import time
from pathlib import Path

import click
import httpx

from . import report as report_mod
from .chat_ingest import parse_chat_log, parse_labels, write_chat_log, write_labels
from .extractor import ExtractorConfig, TypeLabel
from .initializer import InitializerModel, initialize, train_initializer
from .service import (
    DATA_DIR_ENV,
    HOST_ENV,
    PORT_ENV,
    create_app,
    default_type_classifier,
    run_refinement,
)
from .simulator import SimConfig, plant_highlights, simulate_chat, simulate_plays
from .store import VideoStore
from .types import GroundTruth, HighlightSpan, VideoMeta

logger = logging.getLogger(__name__)


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Highlight markers for recorded live streams: place, refine, evaluate."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)


@main.command()
@click.option("--seed", type=int, required=True, help="Base seed; video i uses seed+i.")
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--videos", "n_videos", type=int, default=1, show_default=True)
@click.option("--highlights", "n_highlights", type=int, default=10, show_default=True)
@click.option("--length", "video_length", type=float, default=2400.0, show_default=True)
@click.option("--rate", "chat_rate", type=float, default=10.0, show_default=True, help="Messages per minute.")
@click.option("--multiplier", type=float, default=10.0, show_default=True)
@click.option("--delay", type=float, default=20.0, show_default=True, help="Mean burst delay in seconds.")
@click.option("--span-min", type=float, default=15.0, show_default=True)
@click.option("--span-max", type=float, default=25.0, show_default=True)
def simulate(
    seed: int,
    out_dir: Path,
    n_videos: int,
    n_highlights: int,
    video_length: float,
    chat_rate: float,
    multiplier: float,
    delay: float,
    span_min: float,
    span_max: float,
) -> None:
    """Write seeded chat logs and matching label files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(n_videos):
        video_seed = seed + i
        spans = plant_highlights(
            video_seed, n_highlights, video_length, length_range=(span_min, span_max)
        )
        cfg = SimConfig(
            seed=video_seed,
            video_length_s=video_length,
            highlights=spans,
            chat_rate_per_min=chat_rate,
            burst_multiplier=multiplier,
            burst_delay_mean_s=delay,
        )
        meta, messages, truth = simulate_chat(cfg)
        chat_path = out_dir / f"chat_{meta.video_id}.jsonl"
        labels_path = out_dir / f"labels_{meta.video_id}.json"
        write_chat_log(chat_path, meta, messages)
        write_labels(labels_path, truth)
        click.echo(f"{meta.video_id}: {len(messages)} messages -> {chat_path}")


@main.command()
@click.option("--chat", "chat_paths", type=click.Path(exists=True, path_type=Path), multiple=True, required=True)
@click.option("--labels", "label_paths", type=click.Path(exists=True, path_type=Path), multiple=True, required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--window", "window_s", type=float, default=25.0, show_default=True)
@click.option("--delta-sep", "min_separation", type=float, default=120.0, show_default=True)
def train(
    chat_paths: tuple[Path, ...],
    label_paths: tuple[Path, ...],
    out_path: Path,
    window_s: float,
    min_separation: float,
) -> None:
    """Train the window model and adjustment constant from labeled videos."""
    if len(chat_paths) != len(label_paths):
        raise click.UsageError("--chat and --labels must be given the same number of times")
    corpus = []
    for chat_path, labels_path in zip(chat_paths, label_paths):
        log = parse_chat_log(chat_path)
        corpus.append((log.messages, parse_labels(labels_path)))
    model = train_initializer(corpus, window_s=window_s, min_separation_s=min_separation)
    model.save(out_path)
    click.echo(f"model -> {out_path} (adjustment {model.adjustment_s:.0f}s)")


@main.command("init")
@click.option("--chat", "chat_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def init_command(chat_path: Path, model_path: Path, k: int, out_path: Path | None) -> None:
    """Place initial red dots for one chat log and print or save them."""
    log = parse_chat_log(chat_path)
    if log.meta is None:
        raise click.UsageError(f"{chat_path} has no metadata header line")
    model = InitializerModel.load(model_path, k=k)
    dots = initialize(log.meta, log.messages, model)
    result = report_mod.ExtractionResult(
        video_id=log.meta.video_id,
        items=tuple(
            report_mod.ExtractionItem(
                red_dot_id=f"rd-{i}",
                position_s=dot.position_s,
                window=dot.source_window,
                probability=dot.probability,
                state=dot.state.value,
            )
            for i, dot in enumerate(dots, start=1)
        ),
    )
    if out_path is not None:
        result.save(out_path)
        click.echo(f"{len(dots)} red dots -> {out_path}")
    else:
        click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--data-dir", type=click.Path(path_type=Path), default=None, envvar=DATA_DIR_ENV)
@click.option("--host", default="127.0.0.1", envvar=HOST_ENV, show_default=True)
@click.option("--port", type=int, default=8300, envvar=PORT_ENV, show_default=True)
def serve(data_dir: Path | None, host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    app = create_app(data_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command()
@click.option("--data-dir", type=click.Path(exists=True, path_type=Path), required=True, envvar=DATA_DIR_ENV)
@click.option("--video-id", required=True)
def refine(data_dir: Path, video_id: str) -> None:
    """Run one refinement iteration directly against the store."""
    store = VideoStore(data_dir)
    report = run_refinement(store, video_id, ExtractorConfig(), default_type_classifier())
    click.echo(json.dumps({"video_id": video_id, "refined": report}, indent=2, sort_keys=True))


@main.command("eval")
@click.option("--results", "result_paths", type=click.Path(exists=True, path_type=Path), multiple=True, required=True)
@click.option("--labels", "label_paths", type=click.Path(exists=True, path_type=Path), multiple=True, required=True)
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--kmax", type=int, default=10, show_default=True)
def eval_command(
    result_paths: tuple[Path, ...],
    label_paths: tuple[Path, ...],
    out_dir: Path,
    kmax: int,
) -> None:
    """Score extraction results against labels; write CSV, JSON, and a figure."""
    if len(result_paths) != len(label_paths):
        raise click.UsageError("--results and --labels must be given the same number of times")
    pairs = []
    for result_path, labels_path in zip(result_paths, label_paths):
        pairs.append((report_mod.ExtractionResult.load(result_path), parse_labels(labels_path)))
    summary = report_mod.evaluate_and_report(pairs, out_dir, ks=list(range(1, kmax + 1)))
    for row in summary["corpus_average"]:
        click.echo(
            f"k={row['k']}: chat={row['chat_precision']:.3f} "
            f"start={row['video_precision_start']:.3f} end={row['video_precision_end']:.3f}"
        )
    click.echo(f"report -> {out_dir}")


class _ServerThread:
    """Uvicorn on an ephemeral localhost port, torn down on exit."""

    def __init__(self, app):
        import uvicorn

        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            self.port = s.getsockname()[1]
        self.config = uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="warning")
        self.server = uvicorn.Server(self.config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self) -> "_ServerThread":
        self.thread.start()
        deadline = time.time() + 15
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server failed to start")
            time.sleep(0.05)
        return self

    def __exit__(self, *exc) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)


def _nearest_span(position_s: float, truth: GroundTruth) -> HighlightSpan | None:
    best = None
    best_dist = float("inf")
    for span in truth.highlights:
        dist = abs(position_s - span.start_s)
        if dist < best_dist:
            best, best_dist = span, dist
    return best if best_dist <= 120.0 else None


@main.command()
@click.option("--workdir", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=101, show_default=True)
@click.option("--videos", "n_videos", type=int, default=3, show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--viewers", type=int, default=40, show_default=True)
@click.option("--iterations", type=int, default=8, show_default=True)
def e2e(workdir: Path, seed: int, n_videos: int, k: int, viewers: int, iterations: int) -> None:
    """Full loop: simulate, train, init, serve, drive viewers, refine, eval.

    Spins the real HTTP service on an ephemeral port, registers simulated
    videos against it, posts simulated viewer interactions between refine
    calls, then scores the refined dots and writes the report artifacts plus
    a summary.json into the workdir.
    """
    workdir.mkdir(parents=True, exist_ok=True)
    sim_dir = workdir / "sim"
    sim_dir.mkdir(exist_ok=True)

    # One extra video for training, n_videos for the service loop.
    corpora = []
    for i in range(n_videos + 1):
        video_seed = seed + i
        spans = plant_highlights(video_seed, k, 2400.0, length_range=(15.0, 25.0))
        cfg = SimConfig(
            seed=video_seed,
            video_length_s=2400.0,
            highlights=spans,
            viewers=viewers,
        )
        meta, messages, truth = simulate_chat(cfg)
        write_chat_log(sim_dir / f"chat_{meta.video_id}.jsonl", meta, messages)
        write_labels(sim_dir / f"labels_{meta.video_id}.json", truth)
        corpora.append((cfg, meta, messages, truth))

    train_cfg, _, train_messages, train_truth = corpora[0]
    model = train_initializer([(train_messages, train_truth)], k=k)
    model_path = workdir / "model.json"
    model.save(model_path)
    click.echo(f"trained model (adjustment {model.adjustment_s:.0f}s) -> {model_path}")

    classifier = default_type_classifier()
    app = create_app(workdir / "data", classifier=classifier)
    converged = total = 0
    pairs = []
    with _ServerThread(app) as server, httpx.Client(base_url=server.base_url, timeout=30.0) as client:
        for cfg, meta, messages, truth in corpora[1:]:
            resp = client.post(
                "/videos",
                json={
                    "chat_log_path": str(sim_dir / f"chat_{meta.video_id}.jsonl"),
                    "model_path": str(model_path),
                    "k": k,
                },
            )
            resp.raise_for_status()

            for iteration in range(1, iterations + 1):
                dots = client.get(f"/videos/{meta.video_id}/reddots").json()
                pending = [d for d in dots if d["state"] != "converged"]
                if not pending:
                    break
                batch = []
                for dot in pending:
                    span = _nearest_span(dot["position_s"], truth)
                    if span is None:
                        continue
                    events = simulate_plays(
                        cfg,
                        dot["position_s"],
                        span,
                        red_dot_id=dot["red_dot_id"],
                        salt=iteration * 1000,
                    )
                    batch.extend(
                        {key: val for key, val in ev.to_dict().items() if key != "video_id"}
                        for ev in events
                    )
                if batch:
                    client.post(f"/videos/{meta.video_id}/interactions", json=batch).raise_for_status()
                client.post(f"/videos/{meta.video_id}/refine").raise_for_status()

            final = client.get(f"/videos/{meta.video_id}/reddots").json()
            total += len(final)
            converged += sum(1 for d in final if d["state"] == "converged")

            store = VideoStore(workdir / "data")
            state = store.load_state(meta.video_id)
            items = []
            for record in state.red_dots:
                window = None
                if record.window_start_s is not None:
                    from .types import Window

                    window = Window(start_s=record.window_start_s, end_s=record.window_end_s)
                items.append(
                    report_mod.ExtractionItem(
                        red_dot_id=record.red_dot_id,
                        position_s=record.position_s,
                        window=window,
                        span=record.span,
                        probability=record.probability,
                        state=record.state,
                    )
                )
            result = report_mod.ExtractionResult(video_id=meta.video_id, items=tuple(items))
            result.save(workdir / f"results_{meta.video_id}.json")
            pairs.append((result, truth))

    summary = report_mod.evaluate_and_report(pairs, workdir / "report", ks=list(range(1, k + 1)))
    convergence = converged / total if total else 0.0
    top = [row for row in summary["corpus_average"] if row["k"] == k][0]
    out = {
        "videos": n_videos,
        "red_dots": total,
        "converged": converged,
        "convergence_rate": convergence,
        "precision_at_k": top,
    }
    (workdir / "summary.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    click.echo(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
