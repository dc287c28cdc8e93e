"""Command-line front end.

Reads a whitespace-separated sample file (or synthesizes one), runs the
requested fits, and writes a JSON report holding one cell per
(family, metric) pair plus optional CSV plot data (histogram bars with the
fitted curve).  Exit status: 0 all cells fitted and converged, 2 input
problems, 3 estimation trouble (failed or non-converged cells; completed
cells are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import jsonschema
import numpy as np

from .distributions import GGParams, sample_gg, sample_gnb, gnb_pmf_batch, nb_pmf, gamma_pdf, gg_pdf
from .errors import ParseError
from .fitting import FitRequest, FitResult, Sample, SampleKind, fit
from .histogram import BinRule, Histogram, bin_fd, bin_integer
from .objectives import MetricKind, ModelFamily

__all__ = ["RunConfig", "SynthSpec", "parse_input", "run", "main", "load_report_schema"]

_METRIC_ORDER = (MetricKind.L1, MetricKind.L2, MetricKind.LINF)
_INT_TOKEN = re.compile(r"^[+-]?[0-9]+$")


@dataclass(frozen=True)
class SynthSpec:
    """Parsed --synth flag: generating family, its parameters, and n."""

    family: str
    r: float
    gamma_exp: float
    mu: float
    n: int
    raw: str


@dataclass(frozen=True)
class RunConfig:
    input_path: Optional[str]
    synth: Optional[SynthSpec]
    family: str
    metrics: tuple
    fix_r: Optional[float]
    out_path: str
    plot_csv_path: Optional[str]
    seed: Optional[int]


def load_report_schema() -> dict:
    """The JSON schema every successful report validates against."""
    text = resources.files("gnbfit").joinpath("schema/fit_report.schema.json").read_text()
    return json.loads(text)


def parse_input(path) -> Sample:
    """Read whitespace/newline-separated decimal numbers into a Sample.

    Blank lines and lines starting with '#' are ignored; integer-only
    content makes a discrete sample, anything else a continuous one.
    """
    values = []
    all_int = True
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            for tok in text.split():
                if _INT_TOKEN.match(tok):
                    v = float(int(tok))
                else:
                    try:
                        v = float(tok)
                    except ValueError:
                        raise ParseError(
                            f"non-numeric token {tok!r} at line {lineno}", line=lineno
                        ) from None
                    all_int = False
                if v < 0:
                    raise ParseError(f"negative value {tok} at line {lineno}", line=lineno)
                values.append(v)
    if not values:
        raise ParseError("no numeric data found in input", line=None)
    arr = np.asarray(values, dtype=float)
    if all_int:
        return Sample(values=arr.astype(np.int64), kind=SampleKind.DISCRETE, source=str(path))
    return Sample(values=arr, kind=SampleKind.CONTINUOUS, source=str(path))


def _parse_synth(text: str) -> SynthSpec:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty --synth specification")
    family = parts[0].lower()
    if family not in ("nb", "gnb", "gamma", "gg"):
        raise ValueError(f"unknown synth family {parts[0]!r} (use nb|gnb|gamma|gg)")
    kv = {}
    for item in parts[1:]:
        if "=" not in item:
            raise ValueError(f"expected key=value in --synth, got {item!r}")
        key, val = item.split("=", 1)
        kv[key.strip().lower()] = val.strip()
    try:
        r = float(kv.pop("r"))
        mu = float(kv.pop("mu"))
        n = int(kv.pop("n"))
        gamma_exp = float(kv.pop("gamma", "1.0"))
    except KeyError as exc:
        raise ValueError(f"--synth is missing required key {exc}") from None
    if kv:
        raise ValueError(f"unknown --synth keys: {sorted(kv)}")
    if n < 1:
        raise ValueError("--synth needs n >= 1")
    return SynthSpec(family=family, r=r, gamma_exp=gamma_exp, mu=mu, n=n, raw=text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnbfit",
        description="Minimum-distance fitting of (generalized) negative binomial "
        "and (generalized) gamma distributions to a data sample.",
    )
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="PATH", help="sample file of whitespace-separated numbers")
    src.add_argument(
        "--synth",
        metavar="FAMILY,r=..,gamma=..,mu=..,n=..",
        help="synthesize the sample instead of reading one (gamma defaults to 1)",
    )
    parser.add_argument(
        "--family",
        choices=["nb", "gnb", "gamma", "gg", "auto-pair"],
        default="auto-pair",
        help="model family to fit; auto-pair fits the classical and generalized "
        "pair matching the data kind (default)",
    )
    parser.add_argument(
        "--metric",
        action="append",
        choices=["l1", "l2", "linf"],
        help="objective metric; repeatable, defaults to all three",
    )
    parser.add_argument("--fix-r", type=float, default=None, metavar="REAL",
                        help="fix the shape parameter and fit the rest")
    parser.add_argument("--out", required=True, metavar="PATH", help="JSON report output path")
    parser.add_argument("--plot-csv", default=None, metavar="PATH",
                        help="also write per-bin plot data (bars plus fitted curve)")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed for --synth (synthetic mode only)")
    return parser


def parse_args(argv=None) -> RunConfig:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.seed is not None and ns.synth is None:
        parser.error("--seed applies to synthetic mode only (use it with --synth)")
    synth = None
    if ns.synth is not None:
        try:
            synth = _parse_synth(ns.synth)
        except ValueError as exc:
            parser.error(str(exc))
    metrics = []
    for name in ns.metric or ["l1", "l2", "linf"]:
        kind = MetricKind(name)
        if kind not in metrics:
            metrics.append(kind)
    metrics.sort(key=_METRIC_ORDER.index)
    return RunConfig(
        input_path=ns.input,
        synth=synth,
        family=ns.family,
        metrics=tuple(metrics),
        fix_r=ns.fix_r,
        out_path=ns.out,
        plot_csv_path=ns.plot_csv,
        seed=ns.seed,
    )


def _synthesize(spec: SynthSpec, seed) -> Sample:
    params = GGParams(spec.r, spec.gamma_exp, spec.mu)
    if spec.family in ("nb", "gnb"):
        values = sample_gnb(params, spec.n, seed)
        return Sample(values=values, kind=SampleKind.DISCRETE, source=None)
    values = sample_gg(params, spec.n, seed)
    return Sample(values=values, kind=SampleKind.CONTINUOUS, source=None)


def _families_for(config: RunConfig, sample: Sample):
    if config.family != "auto-pair":
        fam = ModelFamily(config.family)
        if fam.is_discrete != (sample.kind is SampleKind.DISCRETE):
            print(
                f"warning: fitting {fam.value} to {sample.kind.value} data "
                "(family flag overrides autodetection)",
                file=sys.stderr,
            )
        return [fam]
    if sample.kind is SampleKind.DISCRETE:
        return [ModelFamily.NB, ModelFamily.GNB]
    return [ModelFamily.GAMMA, ModelFamily.GG]


def _sig15(x: float) -> float:
    return float(f"{x:.15g}")


def _params_json(result: FitResult) -> dict:
    p = result.params
    if result.family is ModelFamily.NB:
        return {"r": _sig15(p.r), "p": _sig15(p.p)}
    if result.family is ModelFamily.GAMMA:
        return {"r": _sig15(p.r), "mu": _sig15(p.mu)}
    return {"r": _sig15(p.r), "gamma": _sig15(p.gamma_exp), "mu": _sig15(p.mu)}


def _fitted_curve(result: FitResult, hist: Histogram) -> np.ndarray:
    if result.family.is_discrete:
        ks = np.rint(hist.midpoints).astype(int)
        if result.family is ModelFamily.NB:
            return nb_pmf(ks, result.params)
        return gnb_pmf_batch(result.params, int(ks.max()))[ks]
    mids = hist.midpoints
    if result.family is ModelFamily.GAMMA:
        return gamma_pdf(mids, result.params)
    return gg_pdf(mids, result.params)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gnbfit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def run(config: RunConfig) -> int:
    """Execute one CLI run; returns the process exit status."""
    try:
        if config.synth is not None:
            seed = config.seed if config.seed is not None else 0
            sample = _synthesize(config.synth, seed)
        else:
            sample = parse_input(config.input_path)
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    families = _families_for(config, sample)
    if families[0].is_discrete:
        hist = bin_integer(sample.values)
    else:
        hist = bin_fd(np.asarray(sample.values, dtype=float))

    cells = []
    results = {}
    failures = []
    for family in families:
        for metric in config.metrics:
            try:
                result = fit(sample, FitRequest(family=family, metric=metric, fix_r=config.fix_r))
            except Exception as exc:
                failures.append((family, metric))
                print(f"error: cell ({family.value}, {metric.value}) failed: {exc}", file=sys.stderr)
                continue
            results[(family, metric)] = result
            cells.append({
                "family": family.value,
                "metric": metric.value,
                "params": _params_json(result),
                "errors": {m.value: _sig15(result.errors[m]) for m in _METRIC_ORDER},
                "converged": bool(result.converged),
            })

    input_block = {
        "n": int(len(sample.values)),
        "binning": hist.rule.value,
        "N_b": int(hist.n_bins),
    }
    if config.synth is not None:
        input_block["synth"] = config.synth.raw
    else:
        input_block["path"] = str(config.input_path)
    document = {"input": input_block, "cells": cells}
    try:
        jsonschema.validate(document, load_report_schema())
    except jsonschema.ValidationError as exc:
        print(f"error: report failed schema validation: {exc.message}", file=sys.stderr)
        return 3
    _write_atomic(config.out_path, json.dumps(document, indent=2) + "\n")

    if config.plot_csv_path is not None:
        plot_result = _choose_plot_cell(results, families, config.metrics)
        if plot_result is None:
            print("warning: no successful cell; plot CSV not written", file=sys.stderr)
        else:
            curve = _fitted_curve(plot_result, hist)
            lines = ["bin_left,bin_right,height,fitted"]
            for lo, hi, h, c in zip(hist.edges[:-1], hist.edges[1:], hist.heights, curve):
                lines.append(f"{lo:.15g},{hi:.15g},{h:.15g},{c:.15g}")
            _write_atomic(config.plot_csv_path, "\n".join(lines) + "\n")

    if failures:
        return 3
    if any(not r.converged for r in results.values()):
        bad = [f"({f.value}, {m.value})" for (f, m), r in results.items() if not r.converged]
        print(f"warning: cells did not converge: {', '.join(bad)}", file=sys.stderr)
        return 3
    return 0


def _choose_plot_cell(results, families, metrics) -> Optional[FitResult]:
    # prefer the generalized family (fitted last) under the first metric
    for family in reversed(families):
        for metric in metrics:
            if (family, metric) in results:
                return results[(family, metric)]
    return None


def main(argv=None) -> None:
    sys.exit(run(parse_args(argv)))
