"""Command-line interface.

Every option can also come from a JSON config file (``--config``) whose keys
are the long option names (``min-errors`` or ``min_errors``).  Precedence is
command-line flag, then config file, then the built-in default.  Failures
print a JSON object ``{"error": ..., "message": ...}`` on stderr and exit
with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .codes import CrcCode, frame_build, frame_parse, load_code
from .decoders import DECODERS, DEFAULT_ALPHA, DEFAULT_IMAX, DEFAULT_MRB_ORDER
from .detection import (
    PerWeightCrcProfile,
    PerWeightLdpcProfile,
    codeword_list_text,
    combine_ucer,
    crc_profile,
    exhaustive_crc_profile,
    parse_codeword_list,
)
from .errors import LdpcCrcError, MissingInput, MissingWeightData
from .gf2 import BitVector
from .report import FIGURES, ReportBundle, report_figures
from .simulator import (
    RunConfig,
    default_workers,
    end_to_end_sweep,
    ldpc_profiles_csv,
    records_to_csv,
    records_to_json,
    run_sweep,
)
from .spectrum import (
    WeightSpectrum,
    ccsds_reference_spectrum,
    error_floor,
    exhaustive_spectrum,
    low_weight_search,
    union_bound_cer,
)

# built-in defaults; argparse itself defaults everything to None so that a
# config file value can be told apart from an omitted flag
DEFAULTS = {
    "seed": 0,
    "threads": None,
    "out_dir": ".",
    "format": "csv",
    "code": "ccsds-128-64",
    "decoder": "spa",
    "imax": DEFAULT_IMAX,
    "alpha": DEFAULT_ALPHA,
    "mrb_order": DEFAULT_MRB_ORDER,
    "snr": "3.0",
    "min_errors": 100,
    "max_frames": None,
    "stop_on": "errors",
    "crc": None,
    "end_to_end": False,
    "payload_bits": None,
    "fill": "alternating",
    "all_zero": False,
    "noiseless": False,
    "chunk_size": 1000,
    "ldpc_profile_out": None,
    "out": None,
    "budget": 512,
    "w_max": None,
    "order": 4,
    "codewords_out": None,
    "spectrum": None,
    "rate": None,
    "snr_range": "0:8:0.5",
    "k": None,
    "exhaustive": False,
    "from_codewords": None,
    "reference": False,
    "ldpc_profile": None,
    "crc_profile": None,
    "jmin": None,
    "jmax": None,
    "payload": None,
    "blocks": None,
    "input": None,
    "figures": None,
}


def parse_snrs(text: str) -> tuple[float, ...]:
    """``a:b:step`` (inclusive), ``a,b,c`` or a single value."""
    text = str(text)
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("SNR step must be positive")
        count = int(np.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + i * step, 10) for i in range(count))
    return tuple(float(x) for x in text.split(",") if x.strip())


class Settings:
    """Resolved option values: flag > config file > default."""

    def __init__(self, args: argparse.Namespace):
        config = {}
        if getattr(args, "config", None):
            raw = json.loads(Path(args.config).read_text())
            config = {k.replace("-", "_"): v for k, v in raw.items()}
        self._args, self._config = args, config

    def __getattr__(self, name):
        value = getattr(self._args, name, None)
        if value is not None:
            return value
        if name in self._config:
            return self._config[name]
        return DEFAULTS.get(name)

    def out_path(self, name: str | None) -> Path | None:
        if name is None:
            return None
        p = Path(name)
        return p if p.is_absolute() else Path(self.out_dir) / p


def _emit(s: Settings, text: str, path: str | None = None) -> None:
    target = s.out_path(path if path is not None else s.out)
    if target is None:
        sys.stdout.write(text)
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


def _table(s: Settings, header: list[str], rows: list[list]) -> str:
    if s.format == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    lines = [",".join(header)] + [",".join(str(x) for x in r) for r in rows]
    return "\n".join(lines) + "\n"


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(s: Settings) -> None:
    cfg = RunConfig(
        code=s.code, decoder=s.decoder, i_max=int(s.imax), alpha=float(s.alpha), mrb_order=int(s.mrb_order),
        snrs=parse_snrs(s.snr), min_errors=s.min_errors, max_frames=s.max_frames, stop_on=s.stop_on,
        seed=int(s.seed), crc=s.crc, payload_bits=s.payload_bits, fill=s.fill,
        workers=int(s.threads or default_workers()), all_zero=bool(s.all_zero), noiseless=bool(s.noiseless),
        chunk_size=int(s.chunk_size),
    )
    if s.decoder not in DECODERS:
        raise ValueError(f"unknown decoder {s.decoder!r}")
    records = end_to_end_sweep(cfg) if s.end_to_end else run_sweep(cfg)
    _emit(s, records_to_json(records) + "\n" if s.format == "json" else records_to_csv(records))
    if s.ldpc_profile_out:
        _emit(s, ldpc_profiles_csv(records), s.ldpc_profile_out)


def _spectrum_out(s: Settings, spec: WeightSpectrum) -> None:
    if s.format == "json":
        rows = [{"weight": w, "multiplicity": a, "exactness": spec.exactness.get(w)} for w, a in sorted(spec.entries.items())]
        _emit(s, json.dumps(rows, indent=2) + "\n")
    else:
        _emit(s, spec.to_csv())


def cmd_spectrum_enumerate(s: Settings) -> None:
    _spectrum_out(s, exhaustive_spectrum(load_code(s.code)))


def cmd_spectrum_search(s: Settings) -> None:
    code = load_code(s.code)
    rng = np.random.default_rng(int(s.seed))
    res = low_weight_search(code, int(s.budget), rng, w_max=s.w_max, order=int(s.order))
    _spectrum_out(s, res.spectrum)
    if s.codewords_out:
        words = [w for weight in sorted(res.codewords) for w in res.words(weight)]
        _emit(s, codeword_list_text(words, code.n), s.codewords_out)


def cmd_spectrum_union_bound(s: Settings) -> None:
    if s.spectrum:
        spec = WeightSpectrum.from_csv(Path(s.spectrum).read_text())
        rate = float(s.rate) if s.rate else None
        if rate is None:
            raise ValueError("--rate is required with --spectrum")
    else:
        code = load_code(s.code)
        spec = ccsds_reference_spectrum() if code.name == "ccsds-128-64" else exhaustive_spectrum(code)
        rate = float(s.rate) if s.rate else code.rate
    rows = []
    for snr in parse_snrs(s.snr_range):
        rows.append([snr, repr(union_bound_cer(spec, rate, snr)), repr(error_floor(spec, rate, snr))])
    _emit(s, _table(s, ["snr_db", "cer_union_bound", "error_floor"], rows))


def cmd_detect_profile(s: Settings) -> None:
    if not s.crc:
        raise ValueError("--crc is required")
    code = load_code(s.code)
    crc = CrcCode.from_mask(s.crc)
    k = int(s.k or code.k)
    if s.from_codewords:
        words = parse_codeword_list(Path(s.from_codewords).read_text())
        reference = None
        if s.reference and code.name == "ccsds-128-64":
            ref = ccsds_reference_spectrum()
            reference = {w: a for w, a in ref.entries.items() if ref.is_exact(w)}
        prof = crc_profile(set(words), k, crc, reference=reference)
    elif s.exhaustive:
        prof = exhaustive_crc_profile(code, crc, k)
    else:
        raise ValueError("choose --exhaustive or --from-codewords")
    if s.format == "json":
        rows = [{"weight": j, "L": e.L, "A": e.A, "ratio": float(e.ratio), "exactness": e.exactness}
                for j, e in sorted(prof.entries.items())]
        _emit(s, json.dumps(rows, indent=2) + "\n")
    else:
        _emit(s, prof.to_csv())


def cmd_detect_combine(s: Settings) -> None:
    if not s.ldpc_profile or not s.crc_profile:
        raise MissingInput([n for n, v in (("ldpc-profile", s.ldpc_profile), ("crc-profile", s.crc_profile)) if not v])
    ldpc = PerWeightLdpcProfile.from_csv(Path(s.ldpc_profile).read_text())
    crc = PerWeightCrcProfile.from_csv(Path(s.crc_profile).read_text())
    jmin = int(s.jmin) if s.jmin is not None else None
    jmax = int(s.jmax) if s.jmax is not None else None
    results = []
    for prof in ldpc:
        comb = combine_ucer(prof, crc, jmin, jmax)
        results.append({"snr_db": prof.snr_db, **json.loads(comb.to_json())})
    _emit(s, json.dumps(results[0] if len(results) == 1 else results, indent=2, sort_keys=True) + "\n")


def cmd_frame_build(s: Settings) -> None:
    if s.payload is None or s.payload_bits is None or not s.crc:
        raise ValueError("--payload, --payload-bits and --crc are required")
    payload = BitVector.from_hex(s.payload, int(s.payload_bits))
    k = int(s.k or 64)
    blocks = frame_build(payload, k, CrcCode.from_mask(s.crc), fill=s.fill)
    _emit(s, _table(s, ["block", "bits"], [[i, b.hex()] for i, b in enumerate(blocks)]))


def cmd_frame_parse(s: Settings) -> None:
    if s.blocks is None or s.payload_bits is None or not s.crc:
        raise ValueError("--blocks, --payload-bits and --crc are required")
    k = int(s.k or 64)
    blocks = [BitVector.from_hex(h, k) for h in s.blocks.split(",")]
    payload, ok = frame_parse(blocks, int(s.payload_bits), CrcCode.from_mask(s.crc))
    _emit(s, _table(s, ["payload", "crc_ok"], [[payload.hex(), str(ok).lower()]]))


def cmd_report(s: Settings) -> None:
    inputs = {}
    for item in s.input or []:
        name, _, path = item.partition("=")
        if not path:
            raise ValueError(f"--input expects name=path, got {item!r}")
        inputs[name] = path
    figures = s.figures.split(",") if isinstance(s.figures, str) else s.figures
    written = report_figures(ReportBundle.from_paths(inputs), s.out_dir, figures)
    sys.stdout.write(json.dumps({"written": [str(p) for p in written]}) + "\n")


# -- parser -----------------------------------------------------------------------


def _global(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, help="master RNG seed (default 0)")
    g.add_argument("--threads", type=int, help="worker processes (default: $LDPCCRC_THREADS or CPU count)")
    g.add_argument("--out-dir", help="directory for relative output paths (default .)")
    g.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    g.add_argument("--config", help="JSON file with option values")


class _JsonErrorParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": "UsageError", "message": message}) + "\n")
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonErrorParser(prog="ldpccrc", description="LDPC + CRC undetected error analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo CER/UCER simulation")
    _global(p)
    p.add_argument("--code", help="bundled code name or base-matrix file (default ccsds-128-64)")
    p.add_argument("--decoder", choices=DECODERS, help="decoder (default spa)")
    p.add_argument("--imax", type=int, help=f"max BP iterations (default {DEFAULT_IMAX})")
    p.add_argument("--alpha", type=float, help=f"normalized min-sum factor (default {DEFAULT_ALPHA})")
    p.add_argument("--mrb-order", type=int, help=f"MRB reprocessing order (default {DEFAULT_MRB_ORDER})")
    p.add_argument("--snr", help="Eb/N0 in dB: a:b:step, a,b,c or a single value")
    p.add_argument("--min-errors", type=int, help="stop after this many errors (default 100)")
    p.add_argument("--max-frames", type=int, help="stop after this many frames")
    p.add_argument("--stop-on", choices=("errors", "undetected"), help="which count --min-errors applies to")
    p.add_argument("--crc", help="CRC generator as a hex mask, e.g. 11021 (end-to-end runs)")
    p.add_argument("--end-to-end", action="store_true", default=None, help="simulate LDPC + CRC transfer frames")
    p.add_argument("--payload-bits", type=int, help="payload length for end-to-end runs (default k - P)")
    p.add_argument("--fill", choices=("alternating", "zeros"), help="stuffing pattern")
    p.add_argument("--all-zero", action="store_true", default=None, help="send the all-zero message")
    p.add_argument("--noiseless", action="store_true", default=None, help="disable channel noise")
    p.add_argument("--chunk-size", type=int, help="frames per RNG chunk (default 1000)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--ldpc-profile-out", help="also write the per-weight undetected-error profile CSV")
    p.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("spectrum", help="weight spectrum tools").add_subparsers(dest="action", required=True)
    p = sp.add_parser("enumerate", help="exhaustive weight spectrum (k <= 28)")
    _global(p)
    p.add_argument("--code", help="bundled code name or base-matrix file")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_spectrum_enumerate)
    p = sp.add_parser("search", help="randomized low-weight codeword search")
    _global(p)
    p.add_argument("--code", help="bundled code name or base-matrix file")
    p.add_argument("--budget", type=int, help="number of trials (default 512)")
    p.add_argument("--w-max", type=int, help="largest weight kept (default d_min + 6)")
    p.add_argument("--order", type=int, help="reprocessing order per trial (default 4)")
    p.add_argument("--out", help="spectrum output file (default stdout)")
    p.add_argument("--codewords-out", help="write the found codewords as a codeword list")
    p.set_defaults(func=cmd_spectrum_search)
    p = sp.add_parser("union-bound", help="union bound on the ML codeword error rate")
    _global(p)
    p.add_argument("--code", help="code whose known or enumerated spectrum is used")
    p.add_argument("--spectrum", help="spectrum CSV (weight,multiplicity,exactness)")
    p.add_argument("--rate", type=float, help="code rate (default: from --code)")
    p.add_argument("--snr-range", help="a:b:step in dB (default 0:8:0.5)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_spectrum_union_bound)

    dp = sub.add_parser("detect", help="CRC divisibility analysis").add_subparsers(dest="action", required=True)
    p = dp.add_parser("profile", help="per-weight L_j / A_j table")
    _global(p)
    p.add_argument("--code", help="bundled code name or base-matrix file")
    p.add_argument("--crc", help="CRC generator as a hex mask")
    p.add_argument("--k", type=int, help="information part length (default: code dimension)")
    p.add_argument("--exhaustive", action="store_true", default=None, help="enumerate every codeword")
    p.add_argument("--from-codewords", help="codeword list file")
    p.add_argument("--reference", action="store_true", default=None,
                   help="mark weights exact when the list matches the known exact multiplicity")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_detect_profile)
    p = dp.add_parser("combine", help="overall UCER from LDPC and CRC profiles")
    _global(p)
    p.add_argument("--ldpc-profile", help="per-weight LDPC undetected-error CSV")
    p.add_argument("--crc-profile", help="per-weight CRC profile CSV")
    p.add_argument("--jmin", type=int, help="lowest weight summed (default: lowest available)")
    p.add_argument("--jmax", type=int, help="highest weight summed (default: highest available)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_detect_combine)

    fp = sub.add_parser("frame", help="transfer frame construction").add_subparsers(dest="action", required=True)
    p = fp.add_parser("build", help="append CRC, split into blocks and stuff")
    _global(p)
    p.add_argument("--payload", help="payload as hex (bit i = bit i of the integer)")
    p.add_argument("--payload-bits", type=int, help="payload length in bits")
    p.add_argument("--crc", help="CRC generator as a hex mask")
    p.add_argument("--k", type=int, help="LDPC information length (default 64)")
    p.add_argument("--fill", choices=("alternating", "zeros"), help="stuffing pattern")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_frame_build)
    p = fp.add_parser("parse", help="reassemble blocks and check the CRC")
    _global(p)
    p.add_argument("--blocks", help="comma-separated hex blocks")
    p.add_argument("--payload-bits", type=int, help="payload length in bits")
    p.add_argument("--crc", help="CRC generator as a hex mask")
    p.add_argument("--k", type=int, help="LDPC information length (default 64)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_frame_parse)

    p = sub.add_parser("report", help="per-figure CSVs from result tables")
    _global(p)
    p.add_argument("--input", action="append", help=f"name=path; names: {', '.join(sorted({t for v in FIGURES.values() for t in v} | {'ccsds_ms', 'ccsds_nms', 'toy_e2e'}))}")
    p.add_argument("--figures", help=f"comma-separated subset of {', '.join(FIGURES)}")
    p.set_defaults(func=cmd_report)
    return parser


def _error_payload(exc: BaseException) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, MissingInput):
        out["missing"] = exc.missing
    if isinstance(exc, MissingWeightData):
        out["weights"] = exc.weights
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(Settings(args))
    except (LdpcCrcError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps(_error_payload(exc)) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
