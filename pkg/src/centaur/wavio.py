"""WAV reading/writing: PCM 16-bit and IEEE float 32-bit, mono or stereo in.

Stereo inputs are downmixed by averaging (the modeled pedal is mono); other
channel counts and sample encodings are rejected with distinct errors.
Samples are normalized floats in the package (PCM scaled by 1/32768), and
the write path mirrors the read scaling, so a PCM16 read/write round trip is
sample-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

ENCODINGS = ("pcm16", "float32")
PCM16_SCALE = 32768.0


class WavFormatError(ValueError):
    """Not a readable WAV file, or an unsupported channel layout."""


class WavEncodingError(WavFormatError):
    """WAV is readable but not PCM16 or float32."""


@dataclass
class WavData:
    """Decoded mono audio plus enough provenance to mirror it on write."""

    fs: int
    samples: np.ndarray
    encoding: str
    channels: int = 1


def read_wav(source) -> WavData:
    """Decode a WAV path or binary file object to normalized mono float64."""
    try:
        fs, data = wavfile.read(source)
    except (ValueError, EOFError, struct.error) as exc:
        # struct.error escapes the decoder on truncated chunk headers
        raise WavFormatError(f"not a readable WAV file: {exc}") from None

    if data.dtype == np.int16:
        encoding = "pcm16"
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        encoding = "float32"
        samples = data.astype(np.float64)
    else:
        raise WavEncodingError(
            f"unsupported sample encoding {data.dtype}; "
            f"supported: PCM 16-bit, IEEE float 32-bit"
        )

    if samples.ndim == 1:
        channels = 1
    elif samples.ndim == 2 and samples.shape[1] in (1, 2):
        channels = samples.shape[1]
        samples = samples.mean(axis=1)
    else:
        raise WavFormatError(
            f"unsupported channel layout {samples.shape}; expected mono or stereo"
        )
    return WavData(fs=int(fs), samples=samples, encoding=encoding,
                   channels=channels)


def write_wav(dest, wav: WavData) -> None:
    """Encode mono float samples back to the WavData's stated encoding."""
    if wav.encoding not in ENCODINGS:
        raise WavEncodingError(
            f"unsupported output encoding {wav.encoding!r}; supported: {ENCODINGS}"
        )
    x = np.asarray(wav.samples, dtype=np.float64)
    if wav.encoding == "pcm16":
        ints = np.clip(np.rint(x * PCM16_SCALE), -32768, 32767).astype(np.int16)
        wavfile.write(dest, wav.fs, ints)
    else:
        wavfile.write(dest, wav.fs, x.astype(np.float32))
