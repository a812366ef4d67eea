"""Spawned-process tests: handshake, framing, and an end-to-end sweep
driven by the gestalt-probe CLI."""
import base64
import json
import subprocess
import sys

import numpy as np
import pytest

ADAPTER_CMD = [sys.executable, "-m", "gestalt_adapter.serve"]


def start_adapter(*extra):
    return subprocess.Popen(
        ADAPTER_CMD + list(extra),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        bufsize=1,
    )


def request_line(pixels, req_id):
    h, w = pixels.shape
    return json.dumps(
        {
            "id": req_id,
            "width": w,
            "height": h,
            "channels": 1,
            "pixels": base64.b64encode(pixels.tobytes()).decode(),
        }
    )


class TestProcess:
    def test_handshake_line(self):
        proc = start_adapter()
        try:
            assert proc.stdout.readline().rstrip() == "gestalt-proto 1 10"
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_golden_transcript_framing(self):
        """One request line in, exactly one JSON line out, id echoed,
        10 finite scores summing to 1 +/- 1e-6."""
        pixels = np.zeros((28, 28), dtype=np.uint8)
        pixels[10:18, 10:18] = 255
        proc = start_adapter()
        try:
            assert proc.stdout.readline().startswith("gestalt-proto 1 ")
            proc.stdin.write(request_line(pixels, 42) + "\n")
            proc.stdin.flush()
            raw = proc.stdout.readline()
            assert raw.endswith("\n") and "\n" not in raw[:-1]
            resp = json.loads(raw)
            assert set(resp) == {"id", "scores"}
            assert resp["id"] == 42
            assert len(resp["scores"]) == 10
            assert all(np.isfinite(resp["scores"]))
            assert sum(resp["scores"]) == pytest.approx(1.0, abs=1e-6)
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_survives_malformed_request(self):
        proc = start_adapter()
        try:
            proc.stdout.readline()
            proc.stdin.write("this is not json\n")
            proc.stdin.flush()
            err = json.loads(proc.stdout.readline())
            assert "error" in err
            # still alive and serving
            proc.stdin.write(request_line(np.zeros((28, 28), dtype=np.uint8), 1) + "\n")
            proc.stdin.flush()
            resp = json.loads(proc.stdout.readline())
            assert resp["id"] == 1 and len(resp["scores"]) == 10
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_bad_weights_exit_before_handshake(self, tmp_path):
        bad = tmp_path / "bad.pt"
        bad.write_bytes(b"nope")
        proc = start_adapter("--weights", str(bad))
        out, err = proc.communicate(timeout=30)
        assert proc.returncode == 1
        assert out == ""
        assert "adapter error" in err

    def test_class_count_mismatch_rejected(self):
        proc = start_adapter("--class-count", "3")
        out, err = proc.communicate(timeout=30)
        assert proc.returncode == 1
        assert "class_count" in err


class TestEndToEnd:
    def test_closure_sweep_through_adapter(self, tmp_path):
        from gestalt_probe.synth import digit_arrays
        from gestalt_probe import write_idx

        images, labels = digit_arrays(40, seed=7)
        write_idx(images, labels, tmp_path / "i.idx", tmp_path / "l.idx")
        out = tmp_path / "report.csv"
        cmd = " ".join(ADAPTER_CMD)
        cp = subprocess.run(
            [
                "gestalt-probe", "sweep",
                "--idx", str(tmp_path / "i.idx"), str(tmp_path / "l.idx"),
                "--principle", "closure", "--grid", "0:60:30", "--seed", "5",
                "--classifier", cmd, "--out", str(out),
            ],
            capture_output=True, text=True, timeout=300,
        )
        assert cp.returncode == 0, cp.stderr
        text = out.read_text()
        assert text.startswith("# gestalt-report v1\n")
        rows = [l for l in text.splitlines() if l and not l.startswith(("#", "g,"))]
        assert len(rows) == 3
        h0 = float(rows[0].split(",")[3])
        assert h0 > 0.8  # the bundled model actually recognizes the digits
