"""HTTP control API: params session, render cache, error statuses, parity.

Runs the FastAPI app in-process through its test client; the CLI-parity
check renders the same file both ways and compares output bytes.
"""

import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from scipy.io import wavfile

from centaur import __version__
from centaur.analysis import guitar_like
from centaur.cli import main
from centaur.service import create_app

DEFAULTS = {"gain": 0.5, "treble": 0.5, "level": 0.5, "engine": "traditional"}


@pytest.fixture()
def client():
    return TestClient(create_app())


def wav_bytes(samples, fs=44100, dtype=np.float32):
    buf = io.BytesIO()
    wavfile.write(buf, fs, np.asarray(samples, dtype=dtype))
    return buf.getvalue()


def upload(client, payload):
    return client.post("/api/process",
                       files={"file": ("clip.wav", payload, "audio/wav")})


# ---------------------------------------------------------------------------
# params session
# ---------------------------------------------------------------------------

def test_params_start_at_documented_defaults(client):
    resp = client.get("/api/params")
    assert resp.status_code == 200
    assert resp.json() == DEFAULTS


def test_params_partial_update_keeps_other_knobs(client):
    resp = client.post("/api/params", json={"gain": 0.8})
    assert resp.status_code == 200
    assert resp.json() == {**DEFAULTS, "gain": 0.8}
    assert client.get("/api/params").json()["gain"] == 0.8

    resp = client.post("/api/params", json={"engine": "neural", "level": 0.1})
    body = resp.json()
    assert body["engine"] == "neural"
    assert body["level"] == 0.1
    assert body["gain"] == 0.8


def test_params_reject_out_of_range(client):
    assert client.post("/api/params", json={"treble": 2}).status_code == 422
    assert client.post("/api/params", json={"gain": -0.5}).status_code == 422
    assert client.post("/api/params", json={"engine": "valve"}).status_code == 422
    # the failed updates must not have touched the session
    assert client.get("/api/params").json() == DEFAULTS


# ---------------------------------------------------------------------------
# processing and the render cache
# ---------------------------------------------------------------------------

def test_process_result_round_trip(client):
    payload = wav_bytes(guitar_like(0.5))
    resp = upload(client, payload)
    assert resp.status_code == 200
    body = resp.json()
    assert body["cached"] is False
    result = client.get(f"/api/result/{body['job_id']}")
    assert result.status_code == 200
    assert result.headers["content-type"].startswith("audio/wav")
    fs, samples = wavfile.read(io.BytesIO(result.content))
    assert fs == 44100
    assert samples.dtype == np.float32
    assert len(samples) == len(guitar_like(0.5))


def test_repeat_upload_hits_cache(client):
    payload = wav_bytes(guitar_like(0.25))
    first = upload(client, payload).json()
    second = upload(client, payload).json()
    assert second["cached"] is True
    assert second["job_id"] == first["job_id"]


def test_param_change_invalidates_cache(client):
    payload = wav_bytes(guitar_like(0.25))
    first = upload(client, payload).json()
    client.post("/api/params", json={"treble": 0.9})
    # old render is gone, a fresh upload renders anew
    assert client.get(f"/api/result/{first['job_id']}").status_code == 404
    again = upload(client, payload).json()
    assert again["cached"] is False
    assert again["job_id"] != first["job_id"]


def test_no_op_param_update_keeps_cache(client):
    payload = wav_bytes(guitar_like(0.25))
    first = upload(client, payload).json()
    client.post("/api/params", json={"gain": 0.5})  # same as current
    assert upload(client, payload).json()["cached"] is True
    assert client.get(f"/api/result/{first['job_id']}").status_code == 200


def test_pcm16_upload_mirrors_encoding(client):
    ints = (8000.0 * np.sin(np.linspace(0.0, 60.0, 22050))).astype(np.int16)
    resp = upload(client, wav_bytes(ints, dtype=np.int16))
    job = resp.json()["job_id"]
    result = client.get(f"/api/result/{job}")
    _, samples = wavfile.read(io.BytesIO(result.content))
    assert samples.dtype == np.int16


# ---------------------------------------------------------------------------
# error statuses
# ---------------------------------------------------------------------------

def test_unsupported_encoding_is_415(client):
    resp = upload(client, wav_bytes(np.zeros(256, dtype=np.int32),
                                    dtype=np.int32))
    assert resp.status_code == 415
    assert "encoding" in resp.json()["detail"]


def test_malformed_wav_is_400(client):
    resp = upload(client, b"RIFF but nothing like audio")
    assert resp.status_code == 400


def test_neural_at_foreign_rate_is_409(client):
    client.post("/api/params", json={"engine": "neural"})
    resp = upload(client, wav_bytes(np.zeros(4800), fs=48000))
    assert resp.status_code == 409
    assert "44100" in resp.json()["detail"]


def test_unknown_job_is_404(client):
    resp = client.get("/api/result/doesnotexist")
    assert resp.status_code == 404


# ---------------------------------------------------------------------------
# response / bench / meta
# ---------------------------------------------------------------------------

def test_response_endpoint_returns_curves(client):
    resp = client.get("/api/response", params={"treble": 0.5, "points": 12})
    assert resp.status_code == 200
    body = resp.json()
    assert body["engine"] == "traditional"
    assert body["treble"] == 0.5
    assert len(body["frequencies"]) == 12
    assert len(body["magnitudes"]) == 12
    assert len(body["analog_tone_magnitudes"]) == 12
    assert all(np.isfinite(body["magnitudes"]))
    assert list(body["frequencies"]) == sorted(body["frequencies"])


def test_response_endpoint_validates_treble(client):
    assert client.get("/api/response", params={"treble": 2}).status_code == 422


def test_bench_endpoint_caps_and_reports(client):
    resp = client.get("/api/bench",
                      params={"duration_s": 0.15, "repetitions": 1})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["rows"]) == 20
    assert body["duration_s"] == 0.15
    assert client.get("/api/bench",
                      params={"duration_s": 31}).status_code == 422
    assert client.get("/api/bench",
                      params={"repetitions": 0}).status_code == 422


def test_meta_reports_version_and_rates(client):
    body = client.get("/api/meta").json()
    assert body["version"] == __version__
    assert body["neural_fs"] == 44100
    assert body["engines"] == ["traditional", "neural"]
    assert body["gain_grid"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(body["block_sizes"]) == 10


# ---------------------------------------------------------------------------
# CLI parity
# ---------------------------------------------------------------------------

def test_service_matches_cli_bytes(tmp_path, client, capsys):
    src = tmp_path / "clip.wav"
    src.write_bytes(wav_bytes(guitar_like(1.0)))
    out = tmp_path / "out.wav"
    code = main(["process", str(src), str(out),
                 "--engine", "neural", "--gain", "0.75", "--treble", "0.25"])
    assert code == 0
    capsys.readouterr()

    client.post("/api/params", json={"engine": "neural", "gain": 0.75,
                                     "treble": 0.25})
    job = upload(client, src.read_bytes()).json()["job_id"]
    served = client.get(f"/api/result/{job}").content
    assert served == out.read_bytes()
