"""Interactive labeling session over a live Gibbs chain.

The session owns a LabeledRbm, advances one Gibbs step per displayed frame,
reseeds the chain from the image pool every reinit_after_steps steps, applies
online label updates while a class is active, and keeps a bounded undo buffer
so an opinion change can revert the last few updates bitwise. Every displayed
frame is recorded for offline label training.

A session is a pure function of (model, pool, config, seed, event script):
replaying the same script reproduces the final model and frame log exactly.
Base weights are never modified.
"""

from __future__ import annotations

import json
import struct
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .rbm import (
    LabeledRbm,
    hidden_probs,
    label_probs,
    label_update_online,
    revert_label_update,
    sample_bernoulli,
    visible_probs,
)

UNSURE = -1

FRAMELOG_MAGIC = b"FRMS"
FRAMELOG_VERSION = 1

EVENT_SET_LABEL = "set_label"
EVENT_SET_UNSURE = "set_unsure"
EVENT_SET_SPEED = "set_speed"
EVENT_TOGGLE_AUTOSPEED = "toggle_autospeed"
EVENT_TOGGLE_SKIP_IF_SURE = "toggle_skip_if_sure"
EVENT_STOP = "stop"

_EVENT_KINDS = {
    EVENT_SET_LABEL,
    EVENT_SET_UNSURE,
    EVENT_SET_SPEED,
    EVENT_TOGGLE_AUTOSPEED,
    EVENT_TOGGLE_SKIP_IF_SURE,
    EVENT_STOP,
}


@dataclass(frozen=True)
class SessionEvent:
    kind: str
    arg: float | int | None = None

    def __post_init__(self):
        if self.kind not in _EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == EVENT_SET_LABEL and self.arg is None:
            raise ValueError("set_label needs a label argument")
        if self.kind == EVENT_SET_SPEED and self.arg is None:
            raise ValueError("set_speed needs an fps argument")


def set_label(k: int) -> SessionEvent:
    return SessionEvent(EVENT_SET_LABEL, int(k))


def set_unsure() -> SessionEvent:
    return SessionEvent(EVENT_SET_UNSURE)


def set_speed(fps: float) -> SessionEvent:
    return SessionEvent(EVENT_SET_SPEED, float(fps))


def toggle_autospeed() -> SessionEvent:
    return SessionEvent(EVENT_TOGGLE_AUTOSPEED)


def toggle_skip_if_sure() -> SessionEvent:
    return SessionEvent(EVENT_TOGGLE_SKIP_IF_SURE)


def stop() -> SessionEvent:
    return SessionEvent(EVENT_STOP)


@dataclass
class SessionConfig:
    base_fps: float = 6.0
    fps_min: float = 2.0
    fps_max: float = 12.0
    reinit_after_steps: int = 30
    sure_threshold: float = 0.80
    skip_if_sure_enabled: bool = False   # meant to be toggled on after warm-up
    autospeed_enabled: bool = True
    undo_depth: int = 5
    online_lr: float = 0.05
    seed: int = 0
    skip_retry_bound: int = 50
    warmup_reminder_s: float = 300.0

    def __post_init__(self):
        if not self.fps_min <= self.base_fps <= self.fps_max:
            raise ValueError("need fps_min <= base_fps <= fps_max")
        if self.fps_min <= 0:
            raise ValueError("fps_min must be positive")
        if not 0.5 < self.sure_threshold < 1.0:
            raise ValueError("sure_threshold must be in (0.5, 1)")
        if self.undo_depth < 1:
            raise ValueError("undo_depth must be >= 1")
        if self.reinit_after_steps < 1:
            raise ValueError("reinit_after_steps must be >= 1")
        if self.online_lr <= 0:
            raise ValueError("online_lr must be positive")
        if self.skip_retry_bound < 1:
            raise ValueError("skip_retry_bound must be >= 1")


@dataclass
class LabeledFrame:
    """One displayed sample plus the label it carries in the log.

    visible_probs/hidden_probs are the snapshots persisted to the frame log;
    label_probs and the reinit fields are in-memory extras for the transport
    and for skip-if-sure accounting.
    """

    frame_id: int
    visible_probs: np.ndarray
    hidden_probs: np.ndarray
    assigned_label: int
    chain_step: int
    source_index: int
    timestamp_ms: int
    label_probs: np.ndarray | None = None
    reinit: bool = False
    first_pass_max_label_prob: float | None = None
    retry_exhausted: bool = False


@dataclass
class SessionState:
    model: LabeledRbm
    cfg: SessionConfig
    pool: np.ndarray
    rng: np.random.Generator
    v: np.ndarray
    source_index: int
    chain_step: int = 0
    active_label: int = UNSURE
    undo_buffer: deque = field(default_factory=deque)
    frame_log: list[LabeledFrame] = field(default_factory=list)
    frames_shown: int = 0
    labels_applied: int = 0
    skips: int = 0
    undos: int = 0
    reinits: int = 0
    retry_exhaustions: int = 0
    clock_ms: float = 0.0
    stopped: bool = False

    def counters(self) -> dict:
        return {
            "frames_shown": self.frames_shown,
            "labels_applied": self.labels_applied,
            "skips": self.skips,
            "undos": self.undos,
            "reinits": self.reinits,
            "retry_exhaustions": self.retry_exhaustions,
        }


def start_session(model: LabeledRbm, pool: np.ndarray, cfg: SessionConfig) -> SessionState:
    """Seed the chain with a randomly chosen pool image."""
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise ValueError("image pool is empty")
    if pool.shape[1] != model.n_visible:
        raise ValueError(
            f"pool width {pool.shape[1]} != model n_visible {model.n_visible}"
        )
    rng = np.random.default_rng(cfg.seed)
    idx = int(rng.integers(pool.shape[0]))
    return SessionState(
        model=model,
        cfg=replace(cfg),  # private copy; events mutate it
        pool=pool,
        rng=rng,
        v=pool[idx].copy(),
        source_index=idx,
    )


def _first_pass_max_label_prob(state: SessionState, image: np.ndarray) -> float:
    h = hidden_probs(state.model.base, image)
    return float(np.max(label_probs(state.model, h)))


def _pick_pool_image(state: SessionState):
    """Draw the next chain seed; with skip-if-sure on, pass over images the
    model is already confident about, up to the retry bound."""
    cfg = state.cfg
    idx = int(state.rng.integers(state.pool.shape[0]))
    if not cfg.skip_if_sure_enabled:
        return idx, False
    for _ in range(cfg.skip_retry_bound):
        if _first_pass_max_label_prob(state, state.pool[idx]) <= cfg.sure_threshold:
            return idx, False
        state.skips += 1
        idx = int(state.rng.integers(state.pool.shape[0]))
    state.retry_exhaustions += 1
    return idx, True


def autospeed_interval(cfg: SessionConfig, frame_label_probs: np.ndarray) -> float:
    """Seconds to display a frame: linear ramp from fps_min at max label
    prob <= 0.5 up to fps_max at the sure threshold; base_fps when disabled."""
    if not cfg.autospeed_enabled:
        return 1.0 / cfg.base_fps
    top = float(np.max(frame_label_probs))
    t = (top - 0.5) / (cfg.sure_threshold - 0.5)
    fps = cfg.fps_min + (cfg.fps_max - cfg.fps_min) * min(max(t, 0.0), 1.0)
    return 1.0 / fps


def next_frame(state: SessionState) -> tuple[LabeledFrame, float]:
    """Advance the chain one Gibbs step and emit the resulting frame.

    Reinitializes from the pool when the per-image step budget is spent,
    applies an online label update when a class is active, and returns the
    frame together with its display interval.
    """
    if state.stopped:
        raise RuntimeError("session is stopped")
    cfg = state.cfg

    reinit = False
    retry_exhausted = False
    if state.chain_step >= cfg.reinit_after_steps:
        idx, retry_exhausted = _pick_pool_image(state)
        state.source_index = idx
        state.v = state.pool[idx].copy()
        state.chain_step = 0
        state.reinits += 1
        reinit = True

    h_act = hidden_probs(state.model.base, state.v)
    h_sample = sample_bernoulli(h_act, state.rng)
    v_probs = visible_probs(state.model.base, h_sample)
    state.v = sample_bernoulli(v_probs, state.rng)
    if not reinit:
        # the reinit frame shows the fresh image's first pass as step 0, so
        # each pool image is displayed for one seed frame plus the full
        # per-image step budget
        state.chain_step += 1

    frame_label_probs = label_probs(state.model, h_act)
    frame = LabeledFrame(
        frame_id=state.frames_shown,
        visible_probs=v_probs,
        hidden_probs=h_act,
        assigned_label=state.active_label,
        chain_step=state.chain_step,
        source_index=state.source_index,
        timestamp_ms=int(round(state.clock_ms)),
        label_probs=frame_label_probs,
        reinit=reinit,
        first_pass_max_label_prob=float(np.max(frame_label_probs)) if reinit else None,
        retry_exhausted=retry_exhausted,
    )
    state.frames_shown += 1
    state.frame_log.append(frame)

    if state.active_label != UNSURE:
        state.model, delta = label_update_online(
            state.model, h_act, state.active_label, cfg.online_lr
        )
        state.undo_buffer.append((frame.frame_id, delta))
        while len(state.undo_buffer) > cfg.undo_depth:
            state.undo_buffer.popleft()
        state.labels_applied += 1

    interval = autospeed_interval(cfg, frame_label_probs)
    state.clock_ms += interval * 1000.0
    return frame, interval


def _revert_undo_buffer(state: SessionState) -> None:
    for frame_id, delta in reversed(state.undo_buffer):
        state.model = revert_label_update(state.model, delta)
        state.frame_log[frame_id].assigned_label = UNSURE
        state.undos += 1
    state.undo_buffer.clear()


def apply_event(state: SessionState, event: SessionEvent) -> SessionState:
    """Apply one user action.

    Changing opinion (a different class, or class -> unsure) reverts every
    update in the undo buffer, relabeling the affected frames as unsure.
    """
    cfg = state.cfg
    if event.kind == EVENT_SET_LABEL:
        k = int(event.arg)
        if not 0 <= k < state.model.n_labels:
            raise ValueError(f"label {k} out of range [0, {state.model.n_labels})")
        if k != state.active_label:
            if state.active_label != UNSURE:
                _revert_undo_buffer(state)
            state.active_label = k
    elif event.kind == EVENT_SET_UNSURE:
        if state.active_label != UNSURE:
            _revert_undo_buffer(state)
            state.active_label = UNSURE
    elif event.kind == EVENT_SET_SPEED:
        cfg.base_fps = min(max(float(event.arg), cfg.fps_min), cfg.fps_max)
    elif event.kind == EVENT_TOGGLE_AUTOSPEED:
        cfg.autospeed_enabled = not cfg.autospeed_enabled
    elif event.kind == EVENT_TOGGLE_SKIP_IF_SURE:
        cfg.skip_if_sure_enabled = not cfg.skip_if_sure_enabled
    elif event.kind == EVENT_STOP:
        state.stopped = True
    return state


# --- frame-log container (FRAMES/1) ---------------------------------------
#
# Header: magic b"FRMS", then u32 LE: version, n_visible, n_hidden, n_labels.
# Records are length-prefixed (u32 byte length), each:
#   frame_id u64, source_index u32, chain_step u16, label i16 (-1 = unsure),
#   timestamp_ms u64, visible then hidden snapshots as f64 LE.

_RECORD_HEAD = struct.Struct("<QIHhQ")  # id, source, step, label, timestamp


def _record_struct_fields(frame: LabeledFrame) -> bytes:
    return _RECORD_HEAD.pack(
        frame.frame_id,
        frame.source_index,
        frame.chain_step,
        frame.assigned_label,
        frame.timestamp_ms,
    )


def write_frame_log(path, frames, n_visible: int, n_hidden: int, n_labels: int) -> int:
    """Write frames in FRAMES/1 format; returns the number written."""
    count = 0
    with open(path, "wb") as f:
        f.write(FRAMELOG_MAGIC)
        f.write(struct.pack("<IIII", FRAMELOG_VERSION, n_visible, n_hidden, n_labels))
        for frame in frames:
            body = (
                _record_struct_fields(frame)
                + np.ascontiguousarray(frame.visible_probs, dtype="<f8").tobytes()
                + np.ascontiguousarray(frame.hidden_probs, dtype="<f8").tobytes()
            )
            f.write(struct.pack("<I", len(body)))
            f.write(body)
            count += 1
    return count


class FrameLogError(ValueError):
    pass


def read_frame_log(path):
    """Read a FRAMES/1 file; returns (frames, n_visible, n_hidden, n_labels)."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != FRAMELOG_MAGIC:
        raise FrameLogError("bad magic: not a FRAMES file")
    if len(data) < 20:
        raise FrameLogError("truncated header")
    version, n_visible, n_hidden, n_labels = struct.unpack("<IIII", data[4:20])
    if version != FRAMELOG_VERSION:
        raise FrameLogError(f"unsupported frame-log version {version}")

    expected_body = _RECORD_HEAD.size + 8 * (n_visible + n_hidden)
    frames = []
    pos = 20
    while pos < len(data):
        if pos + 4 > len(data):
            raise FrameLogError("truncated record length")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if length != expected_body:
            raise FrameLogError(f"record length {length} != expected {expected_body}")
        if pos + length > len(data):
            raise FrameLogError("truncated record body")
        frame_id, source, step, label, ts = _RECORD_HEAD.unpack_from(data, pos)
        off = pos + _RECORD_HEAD.size
        visible = np.frombuffer(data, dtype="<f8", count=n_visible, offset=off).astype(np.float64)
        hidden = np.frombuffer(
            data, dtype="<f8", count=n_hidden, offset=off + 8 * n_visible
        ).astype(np.float64)
        frames.append(
            LabeledFrame(
                frame_id=frame_id,
                visible_probs=visible,
                hidden_probs=hidden,
                assigned_label=label,
                chain_step=step,
                source_index=source,
                timestamp_ms=ts,
            )
        )
        pos += length
    return frames, n_visible, n_hidden, n_labels


def export_frames(state: SessionState, path) -> int:
    """Persist a stopped session's frame log; returns the record count."""
    if not state.stopped:
        raise RuntimeError("session must be stopped before export")
    m = state.model
    return write_frame_log(path, state.frame_log, m.n_visible, m.n_hidden, m.n_labels)


# --- event scripts ---------------------------------------------------------
#
# JSON lines {"t_ms": <session clock ms>, "event": <kind>, "arg": <arg>}.
# An event applies before the first frame whose pre-frame clock is >= t_ms.


def write_event_script(path, entries) -> None:
    with open(path, "w") as f:
        for entry in entries:
            f.write(json.dumps(entry) + "\n")


def read_event_script(path) -> list[dict]:
    entries = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            entries.append(
                {
                    "t_ms": float(raw["t_ms"]),
                    "event": str(raw["event"]),
                    "arg": raw.get("arg"),
                }
            )
    return entries


def replay_session(
    model: LabeledRbm,
    pool: np.ndarray,
    cfg: SessionConfig,
    script: list[dict],
    max_frames: int | None = None,
) -> SessionState:
    """Re-run a session from a recorded event script.

    Events fire once the session clock reaches their t_ms, in script order,
    checked before every frame. Runs until a stop event or max_frames.
    """
    state = start_session(model, pool, cfg)
    pending = list(script)
    while not state.stopped:
        while pending and pending[0]["t_ms"] <= state.clock_ms:
            entry = pending.pop(0)
            apply_event(state, SessionEvent(entry["event"], entry.get("arg")))
        if state.stopped:
            break
        if max_frames is not None and state.frames_shown >= max_frames:
            break
        next_frame(state)
    return state
