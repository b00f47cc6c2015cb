"""Command-line entry points for the full pipeline."""

from __future__ import annotations

import json
import sys

import click

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .evaluate import RobotLabelerConfig, evaluate, run_scripted_session
from .mnist import binarize, load_dataset, make_splits, strip_labels
from .offline import OfflineConfig, train_labels_offline
from .rbm import LabeledRbm, with_labels
from .session import SessionConfig, read_frame_log, start_session, write_frame_log
from .training import TrainConfig, train_supervised_baseline, train_unsupervised


@click.group()
def main():
    """Train, label, and evaluate classification RBMs on MNIST-style data."""


def _emit_report(report_json: str, report_path):
    if report_path:
        with open(report_path, "w") as f:
            f.write(report_json + "\n")
    else:
        click.echo(report_json)


def _load_labeled_checkpoint(path) -> LabeledRbm:
    try:
        model, _ = load_checkpoint(path)
    except (CheckpointError, OSError) as e:
        raise click.ClickException(f"cannot load checkpoint {path}: {e}")
    if not isinstance(model, LabeledRbm):
        model = with_labels(model, 10)
    return model


train_options = [
    click.option("--data-dir", "data_dir", required=True, type=click.Path(exists=True)),
    click.option("--hidden", "n_hidden", default=225, show_default=True),
    click.option("--cd", "cd_steps", default=10, show_default=True),
    click.option("--epochs", default=5, show_default=True),
    click.option("--lr", default=0.05, show_default=True),
    click.option("--batch-size", default=10, show_default=True),
    click.option("--seed", default=0, show_default=True),
    click.option("--limit", default=0, help="Cap the training images (0 = all)."),
    click.option("--out", "out_path", required=True, type=click.Path()),
    click.option("--report", "report_path", type=click.Path(), default=None),
]


def _with_options(options):
    def wrap(f):
        for option in reversed(options):
            f = option(f)
        return f

    return wrap


def _training_config(n_hidden, cd_steps, epochs, lr, batch_size, seed, **extra):
    return TrainConfig(
        n_hidden=n_hidden,
        cd_steps=cd_steps,
        epochs=epochs,
        lr=lr,
        batch_size=batch_size,
        seed=seed,
        **extra,
    )


def _load_train_split(data_dir, seed, limit):
    full = load_dataset(data_dir, train=True)
    train, _ = make_splits(full, seed)
    if limit:
        from .mnist import Dataset

        train = Dataset(train.images[:limit],
                        None if train.labels is None else train.labels[:limit],
                        train.provenance)
    return train


@main.command("train-unsup")
@_with_options(train_options)
def train_unsup_cmd(data_dir, n_hidden, cd_steps, epochs, lr, batch_size, seed, limit,
                    out_path, report_path):
    """Unsupervised CD-N pretraining of the regular weights."""
    train = strip_labels(_load_train_split(data_dir, seed, limit))
    cfg = _training_config(n_hidden, cd_steps, epochs, lr, batch_size, seed)
    _, report = train_unsupervised(cfg, train, out_path=out_path)
    _emit_report(report.to_json(), report_path)


@main.command("train-baseline")
@_with_options(train_options)
@click.option("--labeled-fraction", default=1.0, show_default=True)
def train_baseline_cmd(data_dir, n_hidden, cd_steps, epochs, lr, batch_size, seed,
                       limit, out_path, report_path, labeled_fraction):
    """(Semi-)supervised baseline with a label-extended visible layer."""
    train = _load_train_split(data_dir, seed, limit)
    cfg = _training_config(
        n_hidden, cd_steps, epochs, lr, batch_size, seed,
        labeled_fraction=labeled_fraction,
    )
    _, report = train_supervised_baseline(cfg, train, out_path=out_path)
    _emit_report(report.to_json(), report_path)


@main.command("train-labels")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--frames", "frames_path", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=10, show_default=True)
@click.option("--lr", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--no-shuffle", is_flag=True, default=False)
@click.option("--out", "out_path", required=True, type=click.Path())
def train_labels_cmd(ckpt_path, frames_path, epochs, lr, seed, no_shuffle, out_path):
    """Offline label-weight training over a recorded frame log."""
    model = _load_labeled_checkpoint(ckpt_path)
    frames, nv, nh, nl = read_frame_log(frames_path)
    if (nv, nh) != (model.n_visible, model.n_hidden):
        raise click.ClickException(
            f"frame log geometry ({nv}, {nh}) does not match checkpoint "
            f"({model.n_visible}, {model.n_hidden})"
        )
    cfg = OfflineConfig(epochs=epochs, lr=lr, seed=seed, shuffle=not no_shuffle)
    trained, report = train_labels_offline(model, frames, cfg)
    save_checkpoint(out_path, trained, {"kind": "offline-labels", "epochs": epochs})
    click.echo(json.dumps({"mean_abs_delta_per_epoch": report}, indent=2))


@main.command("eval")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--test-dir", "test_dir", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", type=click.Path(), default=None)
def eval_cmd(ckpt_path, test_dir, report_path):
    """Error rate and confusion matrix on the labeled test set."""
    model = _load_labeled_checkpoint(ckpt_path)
    test = load_dataset(test_dir, train=False)
    report = evaluate(model, test)
    _emit_report(report.to_json(), report_path)


@main.command("simulate")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--robot-ckpt", "robot_ckpt", required=True, type=click.Path(exists=True))
@click.option("--data-dir", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--frames", "n_frames", default=2000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--confidence-floor", default=0.6, show_default=True)
@click.option("--robot-error-rate", default=0.0, show_default=True)
@click.option("--skip-if-sure", is_flag=True, default=False)
@click.option("--out-frames", "out_frames", required=True, type=click.Path())
@click.option("--out-ckpt", "out_ckpt", required=True, type=click.Path())
def simulate_cmd(ckpt_path, robot_ckpt, data_dir, n_frames, seed, confidence_floor,
                 robot_error_rate, skip_if_sure, out_frames, out_ckpt):
    """Robot-labeled session standing in for the interactive GUI."""
    model = _load_labeled_checkpoint(ckpt_path)
    reference = _load_labeled_checkpoint(robot_ckpt)
    pool = binarize(strip_labels(_load_train_split(data_dir, seed, 0)).images)
    session_cfg = SessionConfig(seed=seed, skip_if_sure_enabled=skip_if_sure)
    robot_cfg = RobotLabelerConfig(
        reference=reference,
        confidence_floor=confidence_floor,
        error_rate=robot_error_rate,
        seed=seed + 1,
    )
    result = run_scripted_session(model, pool, session_cfg, robot_cfg, n_frames)
    count = write_frame_log(
        out_frames, result.frames, model.n_visible, model.n_hidden, model.n_labels
    )
    save_checkpoint(out_ckpt, result.model, {"kind": "session", "frames": count})
    click.echo(
        json.dumps(
            {
                "frames": count,
                "labeling_seconds": result.elapsed_s,
                "counters": result.counters,
            },
            indent=2,
        )
    )


@main.command("serve")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--data-dir", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--fps", default=6.0, show_default=True)
@click.option("--sure-threshold", default=0.8, show_default=True)
@click.option("--undo-depth", default=5, show_default=True)
@click.option("--online-lr", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-frames", "out_frames", type=click.Path(), default="session.frms")
@click.option("--out-ckpt", "out_ckpt", type=click.Path(), default="session.ckpt")
@click.option("--out-events", "out_events", type=click.Path(), default=None)
@click.option("--ui-dir", "ui_dir", type=click.Path(exists=True), default=None,
              help="Serve the built browser UI from this directory at /ui.")
def serve_cmd(ckpt_path, data_dir, bind, fps, sure_threshold, undo_depth, online_lr,
              seed, out_frames, out_ckpt, out_events, ui_dir):
    """Serve the labeling session to the browser UI."""
    from .service import SessionService, serve

    model = _load_labeled_checkpoint(ckpt_path)
    pool = binarize(strip_labels(_load_train_split(data_dir, seed, 0)).images)
    cfg = SessionConfig(
        base_fps=fps,
        fps_min=min(2.0, fps),
        fps_max=max(12.0, fps),
        sure_threshold=sure_threshold,
        undo_depth=undo_depth,
        online_lr=online_lr,
        seed=seed,
    )
    state = start_session(model, pool, cfg)
    service = SessionService(
        state, out_frames=out_frames, out_ckpt=out_ckpt, out_events=out_events
    )
    host, _, port = bind.rpartition(":")
    try:
        serve(service, host or "127.0.0.1", int(port), ui_dir=ui_dir)
    except OSError as e:
        click.echo(f"cannot bind {bind}: {e}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
