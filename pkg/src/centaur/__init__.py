"""Dual-engine virtual-analog emulation of the Klon Centaur overdrive.

Two interchangeable gain-stage engines behind one pedal interface: a
component-level circuit simulation (first-order nodal stages plus wave
digital filter trees) and a recurrent neural model (8-unit GRU bank with
gain crossfading), with shared input/tone/output stages, measurement
tooling, a command line, and a local HTTP control API.
"""

__version__ = "0.1.0"

from .analysis import BenchReport, EsrReport, ResponseCurve, benchmark, esr, freq_response
from .config import default_config, load_config, parse_si
from .pedal import (
    Pedal,
    PedalParams,
    SampleRateError,
    create_pedal,
    process_block,
    render_wav,
)
from .rnn import ModelBank, bank_process, demo_bank, load_demo_bank, load_model_bank
from .wavio import WavData, read_wav, write_wav

__all__ = [
    "__version__",
    "BenchReport", "EsrReport", "ResponseCurve", "benchmark", "esr",
    "freq_response",
    "default_config", "load_config", "parse_si",
    "Pedal", "PedalParams", "SampleRateError", "create_pedal",
    "process_block", "render_wav",
    "ModelBank", "bank_process", "demo_bank", "load_demo_bank",
    "load_model_bank",
    "WavData", "read_wav", "write_wav",
]
