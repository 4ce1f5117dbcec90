"""CSV serialisation of sweep rows.

Column order: ``h_m, h_over_rho, N, tau_D_exact_s, tau_D_asym_s, tau_micro_s``,
optional Monte Carlo ``tau_D`` columns, then ``model_<name>_rate``,
``model_<name>_tau_meso_s``, ``model_<name>_relerr`` (plus ``_mc_mean_s`` and
``_mc_stderr_s`` when Monte Carlo columns are on) per model, then ``flags``.
Missing values are empty cells; flags are ``;``-separated.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .sweeps import ModelResult, SweepRow

BASE_COLUMNS = ("h_m", "h_over_rho", "N", "tau_D_exact_s", "tau_D_asym_s", "tau_micro_s")
MC_TAU_D_COLUMNS = ("tau_D_mc_mean_s", "tau_D_mc_stderr_s")
MODEL_FIELDS = (("rate", "rate"), ("tau_meso_s", "tau_meso"), ("relerr", "relerr"))
MODEL_MC_FIELDS = (("mc_mean_s", "mc_mean"), ("mc_stderr_s", "mc_stderr"))


def _fmt(x) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12e}"


def _parse(s: str):
    return None if s == "" else float(s)


def _layout(rows):
    models = list(rows[0].models)
    mc_tau_D = any(r.tau_D_mc_mean is not None for r in rows)
    mc_models = any(m.mc_mean is not None for r in rows for m in r.models.values())
    return models, mc_tau_D, mc_models


def header(models, mc_tau_D=False, mc_models=False) -> list[str]:
    cols = list(BASE_COLUMNS)
    if mc_tau_D:
        cols += MC_TAU_D_COLUMNS
    fields = MODEL_FIELDS + (MODEL_MC_FIELDS if mc_models else ())
    for name in models:
        cols += [f"model_{name}_{suffix}" for suffix, _ in fields]
    cols.append("flags")
    return cols


def format_csv(rows) -> str:
    """CSV text for ``rows`` in descending ``h``."""
    if not rows:
        raise ValueError("no rows to write")
    models, mc_tau_D, mc_models = _layout(rows)
    fields = MODEL_FIELDS + (MODEL_MC_FIELDS if mc_models else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(models, mc_tau_D, mc_models))
    for r in sorted(rows, key=lambda r: r.h, reverse=True):
        line = [_fmt(r.h), _fmt(r.h_over_rho), str(r.n_voxels), _fmt(r.tau_D_exact), _fmt(r.tau_D_asym),
                _fmt(r.tau_micro)]
        if mc_tau_D:
            line += [_fmt(r.tau_D_mc_mean), _fmt(r.tau_D_mc_stderr)]
        for name in models:
            m = r.models[name]
            line += [_fmt(getattr(m, attr)) for _, attr in fields]
        line.append(";".join(r.flags))
        w.writerow(line)
    return buf.getvalue()


def write_csv(rows, path) -> Path:
    path = Path(path)
    text = format_csv(rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def parse_csv(text: str) -> list[SweepRow]:
    reader = csv.reader(io.StringIO(text))
    cols = next(reader)
    if tuple(cols[: len(BASE_COLUMNS)]) != BASE_COLUMNS or cols[-1] != "flags":
        raise ValueError("not a sweep CSV")
    models = []
    for c in cols:
        if c.startswith("model_") and c.endswith("_rate"):
            models.append(c[len("model_"): -len("_rate")])
    rows = []
    for line in reader:
        rec = dict(zip(cols, line))
        r = SweepRow(
            h=float(rec["h_m"]),
            h_over_rho=float(rec["h_over_rho"]),
            n_voxels=int(rec["N"]),
            tau_D_exact=_parse(rec["tau_D_exact_s"]),
            tau_D_asym=_parse(rec["tau_D_asym_s"]),
            tau_micro=float(rec["tau_micro_s"]),
            flags=tuple(f for f in rec["flags"].split(";") if f),
            tau_D_mc_mean=_parse(rec.get("tau_D_mc_mean_s", "")),
            tau_D_mc_stderr=_parse(rec.get("tau_D_mc_stderr_s", "")),
        )
        for name in models:
            kwargs = {}
            for suffix, attr in MODEL_FIELDS + MODEL_MC_FIELDS:
                kwargs[attr] = _parse(rec.get(f"model_{name}_{suffix}", ""))
            r.models[name] = ModelResult(**kwargs)
        rows.append(r)
    return rows


def read_csv(path) -> list[SweepRow]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))
