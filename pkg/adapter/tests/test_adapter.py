import base64
import json

import numpy as np
import pytest
import torch

from gestalt_adapter import (
    AdapterConfig,
    AdapterError,
    DigitConvNet,
    bundled_weights,
    load_checkpoint,
    save_checkpoint,
)
from gestalt_adapter.serve import preprocess, respond


def request_line(pixels, req_id=0):
    if pixels.ndim == 2:
        h, w = pixels.shape
        c = 1
    else:
        h, w, c = pixels.shape
    return json.dumps(
        {
            "id": req_id,
            "width": w,
            "height": h,
            "channels": c,
            "pixels": base64.b64encode(pixels.tobytes()).decode(),
        }
    )


@pytest.fixture(scope="module")
def model_and_cfg():
    model, ckpt = load_checkpoint(bundled_weights())
    cfg = AdapterConfig(bundled_weights(), mean=ckpt["mean"], std=ckpt["std"])
    return model, cfg


class TestConfig:
    def test_zero_std_rejected(self):
        with pytest.raises(AdapterError):
            AdapterConfig("w.pt", std=0.0)

    def test_bad_resize_rejected(self):
        with pytest.raises(AdapterError):
            AdapterConfig("w.pt", resize=(0, 28))


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = DigitConvNet(7)
        save_checkpoint(model, 7, tmp_path / "m.pt", mean=0.3, std=0.2)
        loaded, ckpt = load_checkpoint(tmp_path / "m.pt")
        assert ckpt["class_count"] == 7
        assert ckpt["mean"] == 0.3
        x = torch.zeros(1, 1, 28, 28)
        with torch.no_grad():
            assert torch.equal(model(x), loaded(x))

    def test_missing_file(self, tmp_path):
        with pytest.raises(AdapterError, match="not found"):
            load_checkpoint(tmp_path / "absent.pt")

    def test_garbage_file(self, tmp_path):
        p = tmp_path / "junk.pt"
        p.write_bytes(b"not a checkpoint")
        with pytest.raises(AdapterError):
            load_checkpoint(p)

    def test_bundled_weights_load(self):
        model, ckpt = load_checkpoint(bundled_weights())
        assert ckpt["class_count"] == 10
        assert not model.training


class TestPreprocess:
    def test_shape_and_normalization(self, model_and_cfg):
        _, cfg = model_and_cfg
        t = preprocess(np.zeros((28, 28), dtype=np.uint8), cfg)
        assert t.shape == (1, 1, 28, 28)
        assert float(t.min()) == pytest.approx((0 - cfg.mean) / cfg.std)

    def test_resizes_other_dims(self, model_and_cfg):
        _, cfg = model_and_cfg
        t = preprocess(np.zeros((64, 40), dtype=np.uint8), cfg)
        assert t.shape == (1, 1, 28, 28)

    def test_rgb_reduced_to_gray(self, model_and_cfg):
        _, cfg = model_and_cfg
        t = preprocess(np.full((28, 28, 3), 255, dtype=np.uint8), cfg)
        assert t.shape == (1, 1, 28, 28)
        assert float(t.max()) == pytest.approx((1 - cfg.mean) / cfg.std)


class TestRespond:
    def test_scores_sum_to_one(self, model_and_cfg):
        model, cfg = model_and_cfg
        pixels = np.random.default_rng(0).integers(0, 256, (28, 28), dtype=np.uint8)
        resp = json.loads(respond(request_line(pixels, 3), model, cfg, 10))
        assert resp["id"] == 3
        assert len(resp["scores"]) == 10
        assert sum(resp["scores"]) == pytest.approx(1.0, abs=1e-6)

    def test_identical_requests_identical_scores(self, model_and_cfg):
        model, cfg = model_and_cfg
        pixels = np.random.default_rng(1).integers(0, 256, (28, 28), dtype=np.uint8)
        a = respond(request_line(pixels, 0), model, cfg, 10)
        b = respond(request_line(pixels, 0), model, cfg, 10)
        assert a == b

    def test_wrong_byte_length_is_error_line(self, model_and_cfg):
        model, cfg = model_and_cfg
        req = json.loads(request_line(np.zeros((28, 28), dtype=np.uint8), 9))
        req["width"] = 99
        resp = json.loads(respond(json.dumps(req), model, cfg, 10))
        assert resp["id"] == 9
        assert "error" in resp and "scores" not in resp

    def test_unparseable_line_is_error_line(self, model_and_cfg):
        model, cfg = model_and_cfg
        resp = json.loads(respond("{oops", model, cfg, 10))
        assert "error" in resp
        assert resp["id"] is None

    def test_bad_base64_is_error_line(self, model_and_cfg):
        model, cfg = model_and_cfg
        req = json.loads(request_line(np.zeros((28, 28), dtype=np.uint8)))
        req["pixels"] = "!!!not base64!!!"
        resp = json.loads(respond(json.dumps(req), model, cfg, 10))
        assert "error" in resp
