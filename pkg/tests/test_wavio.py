"""WAV decode/encode: round trips, downmixing, and rejection paths."""

import io

import numpy as np
import pytest
from scipy.io import wavfile

from centaur.wavio import (
    PCM16_SCALE,
    WavData,
    WavEncodingError,
    WavFormatError,
    read_wav,
    write_wav,
)


def test_pcm16_round_trip_is_sample_exact(tmp_path):
    rng = np.random.default_rng(1)
    ints = rng.integers(-32768, 32768, size=2048, dtype=np.int16)
    src = tmp_path / "in.wav"
    wavfile.write(src, 44100, ints)

    wav = read_wav(src)
    assert wav.fs == 44100
    assert wav.encoding == "pcm16"
    assert wav.channels == 1
    assert np.array_equal(wav.samples, ints.astype(np.float64) / PCM16_SCALE)

    dst = tmp_path / "out.wav"
    write_wav(dst, wav)
    _, back = wavfile.read(dst)
    assert back.dtype == np.int16
    assert np.array_equal(back, ints)


def test_float32_round_trip_is_sample_exact(tmp_path):
    samples = np.random.default_rng(2).uniform(-1.0, 1.0, 1024).astype(np.float32)
    src = tmp_path / "in.wav"
    wavfile.write(src, 48000, samples)

    wav = read_wav(src)
    assert wav.fs == 48000
    assert wav.encoding == "float32"
    assert np.array_equal(wav.samples, samples.astype(np.float64))

    dst = tmp_path / "out.wav"
    write_wav(dst, wav)
    _, back = wavfile.read(dst)
    assert back.dtype == np.float32
    assert np.array_equal(back, samples)


def test_reads_from_binary_file_object():
    samples = np.zeros(64, dtype=np.float32)
    buf = io.BytesIO()
    wavfile.write(buf, 44100, samples)
    buf.seek(0)
    wav = read_wav(buf)
    assert wav.fs == 44100
    assert len(wav.samples) == 64


def test_stereo_downmixes_by_averaging(tmp_path):
    left = np.full(512, 0.5, dtype=np.float32)
    right = np.full(512, -0.25, dtype=np.float32)
    src = tmp_path / "stereo.wav"
    wavfile.write(src, 44100, np.stack([left, right], axis=1))
    wav = read_wav(src)
    assert wav.channels == 2
    assert np.allclose(wav.samples, 0.125, atol=1e-12)


def test_pcm16_write_clips_and_rounds(tmp_path):
    wav = WavData(fs=44100, samples=np.array([0.0, 1.5, -1.5, 0.25]),
                  encoding="pcm16")
    dst = tmp_path / "clip.wav"
    write_wav(dst, wav)
    _, back = wavfile.read(dst)
    assert back[0] == 0
    assert back[1] == 32767  # clipped, not wrapped
    assert back[2] == -32768
    assert back[3] == int(round(0.25 * PCM16_SCALE))


def test_rejects_unsupported_encoding(tmp_path):
    src = tmp_path / "int32.wav"
    wavfile.write(src, 44100, np.zeros(128, dtype=np.int32))
    with pytest.raises(WavEncodingError, match="supported"):
        read_wav(src)
    with pytest.raises(WavEncodingError, match="supported"):
        write_wav(tmp_path / "bad.wav",
                  WavData(fs=44100, samples=np.zeros(4), encoding="pcm24"))


def test_rejects_too_many_channels(tmp_path):
    src = tmp_path / "quad.wav"
    wavfile.write(src, 44100, np.zeros((64, 4), dtype=np.float32))
    with pytest.raises(WavFormatError, match="channel"):
        read_wav(src)


def test_rejects_garbage_and_truncated_files(tmp_path):
    garbage = tmp_path / "garbage.wav"
    garbage.write_bytes(b"this is not audio at all")
    with pytest.raises(WavFormatError, match="readable"):
        read_wav(garbage)

    whole = tmp_path / "whole.wav"
    wavfile.write(whole, 44100, np.zeros(4096, dtype=np.int16))
    cut = tmp_path / "cut.wav"
    cut.write_bytes(whole.read_bytes()[:40])
    with pytest.raises(WavFormatError):
        read_wav(cut)


def test_encoding_error_is_a_format_error():
    assert issubclass(WavEncodingError, WavFormatError)
    assert issubclass(WavFormatError, ValueError)
