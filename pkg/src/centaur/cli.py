"""Command-line entry point: process / response / bench / serve.

Exit codes, one per error class:

    0  success
    2  usage or parameter validation error
    3  missing or unreadable input file (including malformed WAV)
    4  WAV readable but sample encoding unsupported
    5  engine unavailable (neural at a non-44100 rate, bad weight file)
    6  numerical failure during processing
    7  requested port unavailable
"""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import BLOCK_SIZES, benchmark, freq_response, log_frequencies
from .config import ConfigError, load_config
from .filters import FirstOrderFilter, stage_coeffs, tone_analog_prototype, ToneComponents
from .pedal import (
    InvalidParamsError,
    PedalParams,
    SampleRateError,
    create_pedal,
    render_wav,
    tone_stage_config,
)
from .rnn import WeightFormatError, load_model_bank
from .wavio import WavEncodingError, WavFormatError, read_wav, write_wav
from .wdf import ConvergenceError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_WAV = 4
EXIT_ENGINE = 5
EXIT_NUMERIC = 6
EXIT_PORT = 7

DEFAULT_PORT = 8765


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centaur",
        description="Dual-engine Klon Centaur overdrive emulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="component-value overrides file")
        p.add_argument("--weights", type=Path, default=None,
                       help="neural weight bank JSON (default: packaged demo)")

    p = sub.add_parser(
        "process",
        help="process a WAV file (stereo downmixed to mono by averaging)")
    p.add_argument("input", type=Path, help="input WAV (PCM16 or float32)")
    p.add_argument("output", type=Path, help="output WAV (mirrors input encoding)")
    p.add_argument("--engine", choices=("traditional", "neural"),
                   default="traditional")
    p.add_argument("--gain", type=float, default=0.5)
    p.add_argument("--treble", type=float, default=0.5)
    p.add_argument("--level", type=float, default=0.5)
    add_common(p)

    p = sub.add_parser(
        "response",
        help="tone-stage frequency response CSV: digital vs analog prototype")
    p.add_argument("output", type=Path, help="output CSV path")
    p.add_argument("--treble", default="0,0.5,1",
                   help="comma-separated treble settings (default 0,0.5,1)")
    p.add_argument("--engine", choices=("traditional", "neural"),
                   default="traditional",
                   help="accepted for interface symmetry; the tone stage is "
                        "the same for both engines")
    p.add_argument("--points", type=int, default=120)
    p.add_argument("--fs", type=float, default=44100.0)
    add_common(p)

    p = sub.add_parser("bench", help="block-size benchmark over both engines")
    p.add_argument("--duration", type=float, default=5.0,
                   help="seconds of audio per measurement (>= 5 recommended)")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--json", type=Path, default=None, help="also write JSON here")
    p.add_argument("--text", type=Path, default=None,
                   help="also write the text table here")
    add_common(p)

    p = sub.add_parser("serve", help="serve the HTTP control API on localhost")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    add_common(p)

    return parser


def _load_setup(args):
    config = load_config(args.config)
    bank = load_model_bank(args.weights) if args.weights is not None else None
    return config, bank


def cmd_process(args) -> int:
    config, bank = _load_setup(args)
    wav = read_wav(args.input)
    params = PedalParams(gain=args.gain, treble=args.treble, level=args.level,
                         engine=args.engine)
    params.validate()
    out = render_wav(wav, params, config=config, bank=bank)
    write_wav(args.output, out)
    peak = float(np.max(np.abs(out.samples))) if out.samples.size else 0.0
    print(f"wrote {args.output} ({out.encoding}, {out.fs} Hz, "
          f"{out.samples.size} samples), peak level {peak:.4f}")
    if peak >= 1.0:
        print("warning: output clips (peak >= 1.0); lower --level")
    return EXIT_OK


def _parse_treble_grid(text: str) -> list[float]:
    try:
        grid = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise InvalidParamsError(f"bad treble grid {text!r}") from None
    if not grid or any(not 0.0 <= t <= 1.0 for t in grid):
        raise InvalidParamsError(f"treble settings must be in [0, 1]: {text!r}")
    return grid


def cmd_response(args) -> int:
    config, _ = _load_setup(args)
    grid = _parse_treble_grid(args.treble)
    fs = args.fs
    freqs = log_frequencies(20.0, min(18000.0, 0.45 * fs), args.points)

    columns = []
    frequencies = None
    for treble in grid:
        filt = FirstOrderFilter(stage_coeffs(tone_stage_config(config, treble), fs))
        curve = freq_response(filt.process, freqs, fs)
        frequencies = curve.frequencies
        columns.append(curve.magnitudes)
    analog_cols = []
    tone = ToneComponents(
        r21=config["tone.r21"], r22=config["tone.r22"], r23=config["tone.r23"],
        r24=config["tone.r24"], rv2=config["tone.rv2"], c14=config["tone.c14"])
    for treble in grid:
        proto = tone_analog_prototype(tone, treble)
        mags = [20.0 * np.log10(proto.eval_mag(f)) for f in frequencies]
        analog_cols.append(np.asarray(mags))

    header = ["freq_hz"]
    header += [f"digital_t{t:.2f}" for t in grid]
    header += [f"analog_t{t:.2f}" for t in grid]
    lines = [",".join(header)]
    for i, f in enumerate(frequencies):
        row = [f"{f:.6f}"]
        row += [f"{col[i]:.6f}" for col in columns]
        row += [f"{col[i]:.6f}" for col in analog_cols]
        lines.append(",".join(row))
    args.output.write_text("\n".join(lines) + "\n")
    print(f"wrote {args.output} ({len(frequencies)} frequencies, "
          f"treble grid {grid})")
    return EXIT_OK


def cmd_bench(args) -> int:
    config, bank = _load_setup(args)

    def factory(engine: str):
        pedal = create_pedal(config=config, fs=44100.0, bank=bank)
        params = PedalParams(engine=engine)
        return lambda block: pedal.process_block(params, block)

    report = benchmark(factory, engines=("traditional", "neural"),
                       block_sizes=BLOCK_SIZES, duration_s=args.duration,
                       repetitions=args.repetitions)
    text = report.to_text()
    print(text)
    if args.text is not None:
        args.text.write_text(text + "\n")
    if args.json is not None:
        import json

        args.json.write_text(json.dumps(report.to_json_dict(), indent=1) + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config, bank = _load_setup(args)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind(("127.0.0.1", args.port))
    except OSError:
        print(f"error: port {args.port} unavailable", file=sys.stderr)
        return EXIT_PORT
    finally:
        probe.close()

    static = Path("frontend/dist")
    app = create_app(config=config, bank=bank,
                     static_dir=static if static.is_dir() else None)
    try:
        uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    except OSError:
        print(f"error: port {args.port} unavailable", file=sys.stderr)
        return EXIT_PORT
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    handlers = {
        "process": cmd_process,
        "response": cmd_response,
        "bench": cmd_bench,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (InvalidParamsError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WavEncodingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WAV
    except (FileNotFoundError, IsADirectoryError, PermissionError,
            WavFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except (SampleRateError, WeightFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def run() -> None:
    """Console-script entry."""
    sys.exit(main())


if __name__ == "__main__":
    run()
