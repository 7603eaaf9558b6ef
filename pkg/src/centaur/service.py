"""Local HTTP control API backing the browser control surface.

All processing goes through the same `render_wav` path as the command line,
so a given (file, params) pair produces identical bytes either way. One
session per server: a single set of knob values, a render cache keyed by
(file digest, params), and a lock serializing processing. Localhost-only by
design; there is no auth.

Endpoints:
    GET  /api/params                current knob values and engine
    POST /api/params                partial update; 422 on out-of-range
    POST /api/process               multipart WAV upload -> {"job_id"}
    GET  /api/result/{job_id}       processed WAV bytes
    GET  /api/response              small-signal response curve (JSON)
    GET  /api/bench                 block-size benchmark (JSON; slow)
    GET  /api/meta                  version, rates, engine availability
"""

from __future__ import annotations

import hashlib
import io
import threading
import uuid
from dataclasses import asdict
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query, UploadFile
from fastapi.responses import Response
from pydantic import BaseModel, Field

from . import __version__, rnn
from .analysis import BLOCK_SIZES, benchmark, freq_response, log_frequencies
from .config import default_config
from .filters import ToneComponents, tone_analog_prototype
from .pedal import (
    NEURAL_FS,
    PedalParams,
    SampleRateError,
    create_pedal,
    render_wav,
)
from .wavio import WavEncodingError, WavFormatError, read_wav, write_wav


class ParamsUpdate(BaseModel):
    """Partial knob update; omitted fields keep their current values."""

    gain: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    treble: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    level: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    engine: Optional[Literal["traditional", "neural"]] = None


class SessionState:
    """Current params plus the render artifacts they produced."""

    def __init__(self, config: dict, bank: rnn.ModelBank | None):
        self.config = config
        self.bank = bank if bank is not None else rnn.load_demo_bank()
        self.params = PedalParams()
        self.results: dict[str, bytes] = {}
        self.cache: dict[tuple, str] = {}
        self.lock = threading.Lock()

    def params_dict(self) -> dict:
        return asdict(self.params)

    def apply_update(self, update: ParamsUpdate) -> dict:
        with self.lock:
            changed = False
            for name in ("gain", "treble", "level", "engine"):
                value = getattr(update, name)
                if value is not None and value != getattr(self.params, name):
                    setattr(self.params, name, value)
                    changed = True
            if changed:
                # params are part of every cache key; drop stale renders
                self.cache.clear()
                self.results.clear()
            return self.params_dict()

    def cache_key(self, payload: bytes) -> tuple:
        digest = hashlib.sha256(payload).hexdigest()
        p = self.params
        return (digest, p.gain, p.treble, p.level, p.engine)


def create_app(config: dict | None = None, bank: rnn.ModelBank | None = None,
               static_dir=None) -> FastAPI:
    """Build the service; config/bank default to the packaged ones."""
    app = FastAPI(title="centaur", version=__version__)
    session = SessionState(config if config is not None else default_config(),
                           bank)
    app.state.session = session

    @app.get("/api/params")
    def get_params() -> dict:
        return session.params_dict()

    @app.post("/api/params")
    def post_params(update: ParamsUpdate) -> dict:
        return session.apply_update(update)

    @app.post("/api/process")
    async def post_process(file: UploadFile) -> dict:
        payload = await file.read()
        with session.lock:
            key = session.cache_key(payload)
            cached = session.cache.get(key)
            if cached is not None:
                return {"job_id": cached, "cached": True}
            try:
                wav = read_wav(io.BytesIO(payload))
            except WavEncodingError as exc:
                raise HTTPException(status_code=415, detail=str(exc)) from None
            except WavFormatError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            try:
                rendered = render_wav(wav, session.params,
                                      config=session.config, bank=session.bank)
            except SampleRateError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            buf = io.BytesIO()
            write_wav(buf, rendered)
            job_id = uuid.uuid4().hex
            session.results[job_id] = buf.getvalue()
            session.cache[key] = job_id
            return {"job_id": job_id, "cached": False}

    @app.get("/api/result/{job_id}")
    def get_result(job_id: str) -> Response:
        data = session.results.get(job_id)
        if data is None:
            raise HTTPException(status_code=404,
                                detail=f"no result for job {job_id!r}")
        return Response(content=data, media_type="audio/wav")

    @app.get("/api/response")
    def get_response(
        treble: float = Query(default=0.5, ge=0.0, le=1.0),
        engine: Literal["traditional", "neural"] = Query(default="traditional"),
        points: int = Query(default=60, ge=4, le=400),
    ) -> dict:
        # Small-signal probe of the full chain at the session's gain, the
        # requested treble/engine, and level pinned to 1 so the curve shows
        # the filters rather than the volume knob.
        with session.lock:
            gain = session.params.gain
        fs = NEURAL_FS
        pedal = create_pedal(config=session.config, fs=fs, bank=session.bank)
        params = PedalParams(gain=gain, treble=treble, level=1.0, engine=engine)
        freqs = log_frequencies(20.0, 18000.0, points)
        curve = freq_response(
            lambda block: pedal.process_block(params, block), freqs, fs)
        cfg = session.config
        tone = ToneComponents(
            r21=cfg["tone.r21"], r22=cfg["tone.r22"], r23=cfg["tone.r23"],
            r24=cfg["tone.r24"], rv2=cfg["tone.rv2"], c14=cfg["tone.c14"])
        proto = tone_analog_prototype(tone, treble)
        analog = [
            20.0 * float(np.log10(proto.eval_mag(f)))
            for f in curve.frequencies
        ]
        return {
            "engine": engine,
            "treble": treble,
            "gain": gain,
            "frequencies": curve.frequencies.tolist(),
            "magnitudes": curve.magnitudes.tolist(),
            "analog_tone_magnitudes": analog,
        }

    @app.get("/api/bench")
    def get_bench(
        duration_s: float = Query(default=5.0, gt=0.0, le=30.0),
        repetitions: int = Query(default=5, ge=1, le=20),
    ) -> dict:
        def factory(engine: str):
            pedal = create_pedal(config=session.config, fs=NEURAL_FS,
                                 bank=session.bank)
            params = PedalParams(engine=engine)
            return lambda block: pedal.process_block(params, block)

        with session.lock:
            report = benchmark(factory, engines=("traditional", "neural"),
                               block_sizes=BLOCK_SIZES, duration_s=duration_s,
                               repetitions=repetitions)
        return report.to_json_dict()

    @app.get("/api/meta")
    def get_meta() -> dict:
        return {
            "version": __version__,
            "neural_fs": int(NEURAL_FS),
            "engines": ["traditional", "neural"],
            "gain_grid": list(rnn.GAIN_GRID),
            "block_sizes": list(BLOCK_SIZES),
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")
    return app
