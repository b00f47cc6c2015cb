import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from postlabel.checkpoint import load_checkpoint
from postlabel.service import SessionService, create_app, quantize_pixels
from postlabel.session import (
    SessionConfig,
    read_event_script,
    read_frame_log,
    replay_session,
    start_session,
)

from conftest import random_labeled_rbm


def fast_cfg(**kwargs):
    # high frame rate keeps wall-clock pacing out of the test budget
    defaults = dict(
        base_fps=100.0, fps_min=50.0, fps_max=200.0, autospeed_enabled=False, seed=13
    )
    defaults.update(kwargs)
    return SessionConfig(**defaults)


@pytest.fixture
def setup(rng, tmp_path):
    model = random_labeled_rbm(rng, 9, 4, 3, scale=0.3)
    pool = rng.integers(0, 2, size=(6, 9)).astype(float)
    cfg = fast_cfg()
    state = start_session(model, pool, cfg)
    service = SessionService(
        state,
        out_frames=tmp_path / "s.frms",
        out_ckpt=tmp_path / "s.ckpt",
        out_events=tmp_path / "s.events.jsonl",
    )
    return model, pool, cfg, service


class TestStatusAndFrames:
    def test_status_before_any_client(self, setup):
        *_, service = setup
        with TestClient(create_app(service)) as client:
            data = client.get("/status").json()
            assert data["frames_shown"] == 0
            assert data["stopped"] is False
            assert data["active_label"] == -1

    def test_frames_flow_without_events(self, setup):
        model, _, _, service = setup
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/session") as ws:
                hello = ws.receive_json()
                assert hello["kind"] == "status"
                assert hello["role"] == "labeler"
                assert hello["width"] == 3 and hello["height"] == 3
                frames = [ws.receive_json() for _ in range(10)]
        assert all(f["kind"] == "frame" for f in frames)
        ids = [f["frame_id"] for f in frames]
        assert ids == sorted(ids)
        pixels = base64.b64decode(frames[0]["pixels"])
        assert len(pixels) == 9
        assert len(frames[0]["label_probs"]) == 3
        # no events sent: the label weights are untouched
        assert np.array_equal(service.state.model.label_weights, model.label_weights)

    def test_quantization_round(self):
        probs = np.array([0.0, 0.5, 1.0, 0.249, 0.251])
        assert list(quantize_pixels(probs)) == [0, 128, 255, 63, 64]


class TestEvents:
    def test_label_events_update_model(self, setup):
        model, _, _, service = setup
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/session") as ws:
                ws.receive_json()
                ws.send_json({"kind": "event", "event": "set_label", "arg": 1})
                for _ in range(10):
                    ws.receive_json()
        assert not np.array_equal(
            service.state.model.label_weights, model.label_weights
        )
        assert service.state.labels_applied > 0

    def test_invalid_label_gets_error_message(self, setup):
        *_, service = setup
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/session") as ws:
                ws.receive_json()
                ws.send_json({"kind": "event", "event": "set_label", "arg": 99})
                while True:
                    msg = ws.receive_json()
                    if msg["kind"] == "error":
                        assert "out of range" in msg["message"]
                        break

    def test_second_client_is_read_only(self, setup):
        *_, service = setup
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/session") as ws1:
                ws1.receive_json()
                with client.websocket_connect("/session") as ws2:
                    hello2 = ws2.receive_json()
                    assert hello2["role"] == "observer"
                    ws2.send_json({"kind": "event", "event": "set_label", "arg": 0})
                    while True:
                        msg = ws2.receive_json()
                        if msg["kind"] == "error":
                            assert "read-only" in msg["message"]
                            break
                    # observer still receives frames
                    while True:
                        msg = ws2.receive_json()
                        if msg["kind"] == "frame":
                            break


class TestStopAndReplay:
    def test_stop_writes_outputs(self, setup, tmp_path):
        *_, service = setup
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/session") as ws:
                ws.receive_json()
                for _ in range(5):
                    ws.receive_json()
            result = client.post("/stop").json()
        assert result["frames_shown"] >= 5
        assert "frames_written" in result
        frames, nv, nh, nl = read_frame_log(tmp_path / "s.frms")
        assert (nv, nh, nl) == (9, 4, 3)
        assert len(frames) == result["frames_written"]
        loaded, meta = load_checkpoint(tmp_path / "s.ckpt")
        assert meta["kind"] == "session"

    def test_replay_reproduces_checkpoint(self, setup, tmp_path):
        model, pool, cfg, service = setup
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/session") as ws:
                ws.receive_json()
                seen = 0
                sent = {3: {"event": "set_label", "arg": 1},
                        9: {"event": "set_label", "arg": 2},
                        15: {"event": "set_unsure", "arg": None}}
                while seen < 25:
                    msg = ws.receive_json()
                    if msg["kind"] != "frame":
                        continue
                    seen += 1
                    if seen in sent:
                        ws.send_json({"kind": "event", **sent[seen]})
            result = client.post("/stop").json()

        script = read_event_script(tmp_path / "s.events.jsonl")
        assert script[-1]["event"] == "stop"
        replayed = replay_session(model, pool, cfg, script)
        assert replayed.frames_shown == result["frames_shown"]

        live_model, _ = load_checkpoint(tmp_path / "s.ckpt")
        assert np.array_equal(replayed.model.label_weights, live_model.label_weights)
        assert np.array_equal(replayed.model.label_bias, live_model.label_bias)

        live_frames, *_ = read_frame_log(tmp_path / "s.frms")
        assert len(live_frames) == len(replayed.frame_log)
        for a, b in zip(live_frames, replayed.frame_log):
            assert a.assigned_label == b.assigned_label
            assert np.array_equal(a.visible_probs, b.visible_probs)
            assert np.array_equal(a.hidden_probs, b.hidden_probs)

    def test_stop_without_clients(self, setup):
        *_, service = setup
        with TestClient(create_app(service)) as client:
            result = client.post("/stop").json()
            assert result["frames_shown"] == 0
            assert client.get("/status").json()["stopped"] is True
