"""Turn simulation, spectrum and CRC-profile tables into per-figure CSVs.

Input tables (CSV text, keyed by name):

    ccsds_spa, ccsds_ms, ccsds_nms, ccsds_mrb   simulate output for the (128,64) code
    ccsds_spectrum                              weight spectrum of the (128,64) code
    ccsds_crc_profile                           CRC-16 per-weight profile
    toy_mrb                                     simulate output for the (32,16) code, MRB
    toy_crc_profile                             CRC-8 per-weight profile
    toy_e2e                                     optional end-to-end run for the (32,16) code

Every output row carries the config hash of the table it came from.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .detection import PerWeightCrcProfile, combine_ucer, conventional_estimate
from .errors import MissingInput
from .simulator import SimRecord, records_from_csv
from .spectrum import WeightSpectrum, union_bound_cer

CCSDS_RATE = 0.5
CCSDS_CRC_P = 16
TOY_CRC_P = 8

FIGURES = {
    "fig2_cer.csv": ("ccsds_spa", "ccsds_mrb", "ccsds_spectrum"),
    "fig3_ucer.csv": ("ccsds_spa", "ccsds_mrb"),
    "fig4_ucer_by_weight.csv": ("toy_mrb",),
    "fig5_hist_mrb.csv": ("ccsds_mrb",),
    "fig6_ucer_overall_toy.csv": ("toy_mrb", "toy_crc_profile"),
    "fig7_hist_spa.csv": ("ccsds_spa",),
    "fig8_ucer.csv": ("ccsds_spa", "ccsds_mrb", "ccsds_crc_profile"),
}

UB_GRID = tuple(float(x) for x in np.round(np.arange(0.0, 8.0 + 1e-9, 0.25), 2))


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ReportBundle:
    tables: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_paths(cls, paths: dict[str, str | Path]) -> ReportBundle:
        return cls({name: Path(p).read_text() for name, p in paths.items()})

    def records(self, name: str) -> list[SimRecord]:
        return records_from_csv(self.tables[name])

    def metadata(self) -> dict:
        seeds = {}
        for name, text in self.tables.items():
            if "config_hash" in text.split("\n", 1)[0]:
                seeds[name] = sorted({r.seed for r in records_from_csv(text)})
        return {
            "version": __version__,
            "inputs": {name: _digest(text) for name, text in sorted(self.tables.items())},
            "seeds": seeds,
        }


def _write(path: Path, header: list[str], rows: list[list]) -> Path:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    path.write_text(buf.getvalue())
    return path


def _fig2(b: ReportBundle) -> tuple[list[str], list[list]]:
    rows = []
    for dec in ("spa", "ms", "nms", "mrb"):
        name = f"ccsds_{dec}"
        if name in b.tables:
            for r in b.records(name):
                lo, hi = r.cer_ci
                rows.append([r.snr_db, dec, repr(r.cer), repr(lo), repr(hi), r.frames, r.Q, r.config_hash])
    spec = WeightSpectrum.from_csv(b.tables["ccsds_spectrum"])
    h = _digest(b.tables["ccsds_spectrum"])
    for s in UB_GRID:
        rows.append([s, "union_bound", repr(union_bound_cer(spec, CCSDS_RATE, s)), "", "", "", "", h])
    return ["snr_db", "curve", "cer", "cer_ci_lo", "cer_ci_hi", "frames", "Q", "config_hash"], rows


def _fig3(b: ReportBundle):
    rows = []
    for dec in ("spa", "mrb"):
        for r in b.records(f"ccsds_{dec}"):
            lo, hi = r.ucer_ci
            rows.append([r.snr_db, dec, repr(r.ucer), repr(lo), repr(hi), r.frames, r.Q_u, r.config_hash])
    return ["snr_db", "decoder", "ucer", "ucer_ci_lo", "ucer_ci_hi", "frames", "Q_u", "config_hash"], rows


def _fig4(b: ReportBundle):
    rows = []
    for r in b.records("toy_mrb"):
        for w, c in sorted(r.hist.items()):
            rows.append([r.snr_db, w, repr(c / r.frames), c, r.frames, r.config_hash])
    return ["snr_db", "weight", "ucer_ldpc_j", "count", "frames", "config_hash"], rows


def _hist(b: ReportBundle, name: str):
    rows = []
    for r in b.records(name):
        for w, c in sorted(r.hist.items()):
            rows.append([r.snr_db, w, c, r.Q_u, r.config_hash])
    return ["snr_db", "weight", "count", "Q_u", "config_hash"], rows


def _overall(records: list[SimRecord], profile: PerWeightCrcProfile, P: int, label: str | None):
    rows = []
    for r in records:
        comb = combine_ucer(r.ldpc_profile(), profile)
        estimated = sorted(j for j, p in comb.provenance.items() if p != "exact" and comb.per_weight_terms[j])
        row = [r.snr_db] + ([label] if label else []) + [
            repr(r.ucer), repr(comb.ucer), repr(comb.ci[0]), repr(comb.ci[1]),
            repr(conventional_estimate(r.ucer, P)),
            f"{comb.truncation[0]}-{comb.truncation[1]}", " ".join(map(str, estimated)), r.config_hash,
        ]
        rows.append(row)
    return rows


OVERALL_COLUMNS = ["ucer_ldpc", "ucer_combined", "combined_ci_lo", "combined_ci_hi", "ucer_conventional",
                   "truncation", "estimated_weights", "config_hash"]


def _fig6(b: ReportBundle):
    prof = PerWeightCrcProfile.from_csv(b.tables["toy_crc_profile"])
    rows = _overall(b.records("toy_mrb"), prof, TOY_CRC_P, None)
    header = ["snr_db"] + OVERALL_COLUMNS
    if "toy_e2e" in b.tables:
        e2e = {r.snr_db: r for r in b.records("toy_e2e")}
        header = header + ["ucer_end_to_end", "e2e_ci_lo", "e2e_ci_hi"]
        for row in rows:
            r = e2e.get(row[0])
            row += [repr(r.ucer), *map(repr, r.ucer_ci)] if r else ["", "", ""]
    return header, rows


def _fig8(b: ReportBundle):
    prof = PerWeightCrcProfile.from_csv(b.tables["ccsds_crc_profile"])
    rows = []
    for dec in ("mrb", "spa"):
        rows += _overall(b.records(f"ccsds_{dec}"), prof, CCSDS_CRC_P, dec)
    return ["snr_db", "decoder"] + OVERALL_COLUMNS, rows


_BUILDERS = {
    "fig2_cer.csv": _fig2,
    "fig3_ucer.csv": _fig3,
    "fig4_ucer_by_weight.csv": _fig4,
    "fig5_hist_mrb.csv": lambda b: _hist(b, "ccsds_mrb"),
    "fig6_ucer_overall_toy.csv": _fig6,
    "fig7_hist_spa.csv": lambda b: _hist(b, "ccsds_spa"),
    "fig8_ucer.csv": _fig8,
}


def report_figures(bundle: ReportBundle, out_dir: str | Path, figures: list[str] | None = None) -> list[Path]:
    """Write the requested figure CSVs (all by default) plus ``report_meta.json``.

    Raises MissingInput naming every absent table before writing anything.
    Output depends only on the input tables, so reruns are byte-identical.
    """
    figures = list(FIGURES) if figures is None else figures
    unknown = [f for f in figures if f not in FIGURES]
    if unknown:
        raise ValueError(f"unknown figures {unknown}")
    missing = sorted({t for f in figures for t in FIGURES[f] if t not in bundle.tables})
    if missing:
        raise MissingInput(missing)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write(out / f, *_BUILDERS[f](bundle)) for f in figures]
    meta = out / "report_meta.json"
    meta.write_text(json.dumps({**bundle.metadata(), "figures": figures}, indent=2, sort_keys=True) + "\n")
    return written + [meta]
