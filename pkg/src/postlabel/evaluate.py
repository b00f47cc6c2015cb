"""Test-set evaluation and the scripted robot labeler.

The robot substitutes for the human at desk scale: a reference model
classifies each displayed frame and presses the corresponding button with
a configurable confidence floor, reaction delay, and injected error rate.
Time is always simulated (sum of display intervals), never wall clock.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .mnist import Dataset, binarize
from .rbm import LabeledRbm, batch_classify, classify
from .session import (
    LabeledFrame,
    SessionConfig,
    SessionEvent,
    SessionState,
    apply_event,
    next_frame,
    set_label,
    set_unsure,
    start_session,
)


@dataclass
class EvalReport:
    error_rate: float
    confusion: np.ndarray  # (k, k) counts, rows = true label
    n_test: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "error_rate": self.error_rate,
                "n_test": self.n_test,
                "confusion": self.confusion.tolist(),
            },
            indent=2,
        )


def evaluate(
    m: LabeledRbm,
    test: Dataset,
    binarize_mode: str = "threshold",
    binarize_threshold: float = 0.5,
    binarize_seed: int = 0,
) -> EvalReport:
    """Classify every test image and tally the confusion matrix."""
    if test.labels is None:
        raise ValueError("evaluation requires labels")
    if len(test) == 0:
        raise ValueError("empty test set")
    vectors = binarize(
        test.images, mode=binarize_mode, threshold=binarize_threshold, seed=binarize_seed
    )
    preds, _ = batch_classify(m, vectors)
    k = m.n_labels
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (test.labels.astype(int), preds), 1)
    correct = int(np.trace(confusion))
    return EvalReport(
        error_rate=1.0 - correct / len(test),
        confusion=confusion,
        n_test=len(test),
    )


@dataclass
class RobotLabelerConfig:
    reference: LabeledRbm
    confidence_floor: float = 0.6
    reaction_delay_frames: int = 0
    error_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error_rate must be in [0, 1]")
        if self.reaction_delay_frames < 0:
            raise ValueError("reaction_delay_frames must be >= 0")


class RobotLabeler:
    """Stateful scripted labeler; owns the seeded error-injection stream."""

    def __init__(self, cfg: RobotLabelerConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.mistakes = 0
        self.decisions = 0

    def decide(self, frame: LabeledFrame) -> SessionEvent:
        """Label the frame the way the reference model sees it, or unsure."""
        top, probs = classify(self.cfg.reference, frame.visible_probs)
        self.decisions += 1
        if probs[top] < self.cfg.confidence_floor:
            return set_unsure()
        if self.cfg.error_rate > 0 and self.rng.random() < self.cfg.error_rate:
            k = self.cfg.reference.n_labels
            wrong = int(self.rng.integers(k - 1))
            if wrong >= top:
                wrong += 1
            self.mistakes += 1
            return set_label(wrong)
        return set_label(top)


def robot_label(robot: RobotLabeler, frame: LabeledFrame) -> SessionEvent:
    return robot.decide(frame)


@dataclass
class ScriptedSessionResult:
    model: LabeledRbm
    state: SessionState
    frames: list[LabeledFrame]
    elapsed_s: float
    snapshots: dict[int, LabeledRbm] = field(default_factory=dict)

    @property
    def counters(self) -> dict:
        return self.state.counters()


def run_scripted_session(
    model: LabeledRbm,
    pool: np.ndarray,
    session_cfg: SessionConfig,
    robot_cfg: RobotLabelerConfig,
    duration_frames: int,
    snapshot_at: tuple[int, ...] = (),
) -> ScriptedSessionResult:
    """Drive a session with robot events for a fixed number of frames.

    The robot sees every emitted frame and its event takes effect
    reaction_delay_frames later (delay 0: before the next frame). Label
    parameters can be snapshotted at chosen frame counts for trend checks.
    Deterministic under the session and robot seeds.
    """
    state = start_session(model, pool, session_cfg)
    robot = RobotLabeler(robot_cfg)
    pending: list[tuple[int, SessionEvent]] = []
    snapshots: dict[int, LabeledRbm] = {}
    wanted = set(snapshot_at)

    for i in range(duration_frames):
        while pending and pending[0][0] <= i:
            apply_event(state, pending.pop(0)[1])
        frame, _ = next_frame(state)
        pending.append((i + 1 + robot_cfg.reaction_delay_frames, robot.decide(frame)))
        if state.frames_shown in wanted:
            snapshots[state.frames_shown] = state.model

    apply_event(state, SessionEvent("stop"))
    return ScriptedSessionResult(
        model=state.model,
        state=state,
        frames=state.frame_log,
        elapsed_s=state.clock_ms / 1000.0,
        snapshots=snapshots,
    )
