"""Command-line interface.

Commands
--------
test       runs test on a CSV dataset (``t,y`` or ``t,residual``)
simulate   Monte Carlo run-count histograms and mode-centered CIs
compare    repeated-measures vs evenly spaced comparison with Sidak control
reproduce-paper
           every calibration family, the stability check and the thresholds

The seed is taken from ``--seed``, else from the ``TIERUNS_SEED``
environment variable, else drawn at random; it is always printed.

Exit status: 0 success, 1 usage or parse error, 2 degenerate data.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path

from . import _backend
from .comparison import compare_family, sidak_threshold
from .errors import DegenerateDataError, TierunsError
from .regression import ModelSpec
from .reproduce import reproduce
from .simulation import (DEFAULT_TRIALS, SimulationCase, lookup_case, read_case_file,
                         registry_cases, summarize)
from .ties import ZeroPolicy, extended_runs_test, make_observations

SEED_ENV = "TIERUNS_SEED"


class UsageError(TierunsError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    seed: int
    seed_source: str
    args: argparse.Namespace


def resolve_seed(explicit: int | None) -> tuple[int, str]:
    if explicit is not None:
        return explicit, "flag"
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env, 0), "environment"
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return secrets.randbits(64), "generated"


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def read_dataset(path, model: ModelSpec | None):
    """Observations from a CSV with header ``t,y`` or ``t,residual``."""
    want = "residual" if model is None else "y"
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise UsageError(f"{path}: empty file") from None
        if header[:1] != ["t"] or want not in header:
            raise UsageError(f"{path}:1: header must be 't,{want}' for model "
                             f"{'none' if model is None else model}, got {','.join(header)}")
        ti, vi = header.index("t"), header.index(want)
        t, v = [], []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise UsageError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                a, b = float(row[ti]), float(row[vi])
            except ValueError:
                raise UsageError(f"{path}:{lineno}: non-numeric value in {row}") from None
            t.append(a)
            v.append(b)
    if not t:
        raise UsageError(f"{path}: no data rows")
    try:
        if model is None:
            return make_observations(t, [0.0] * len(t), v)
        return make_observations(t, v)
    except TierunsError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit(cfg: RunConfig, payload: dict, human: str, out=None):
    out = out or sys.stdout
    if cfg.args.format == "json":
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(human)


def _ci(lo, hi):
    return "N/A" if lo is None else f"{lo}-{hi}"


def cmd_test(cfg: RunConfig) -> int:
    a = cfg.args
    model = ModelSpec.parse(a.model)
    data = read_dataset(a.input, model)
    report = extended_runs_test(data, model, seed=cfg.seed, replicates=a.replicates,
                                tolerance=a.tolerance, zero_policy=a.zero_policy)
    head = report.headline
    payload = {
        "command": "test",
        "input": str(a.input),
        "model": str(model) if model else "none",
        "seed": cfg.seed,
        "seed_source": cfg.seed_source,
        "observations": len(data),
        "replicates": [r.as_dict() for r in report.results],
        "p_two_sided_summary": report.p_summary(),
        "significant_0.05": head.p_two_sided < 0.05,
    }
    lines = [f"seed: {cfg.seed} ({cfg.seed_source})",
             f"model: {payload['model']}  observations: {len(data)}",
             "replicate\truns\tn1\tn2\tmethod\tp_two_sided\tp_too_few\tp_too_many"]
    for i, r in enumerate(report.results):
        s = r.statistic
        lines.append(f"{i}\t{s.r}\t{s.n1}\t{s.n2}\t{r.method.value}\t"
                     f"{r.p_two_sided:.6g}\t{r.p_too_few:.6g}\t{r.p_too_many:.6g}")
    if len(report.results) > 1:
        ps = report.p_summary()
        lines.append(f"p_two_sided min/median/max: {ps['min']:.6g} / {ps['median']:.6g} / {ps['max']:.6g}")
    verdict = "non-random residual signs (p < 0.05)" if payload["significant_0.05"] else "no evidence against the fit (p >= 0.05)"
    lines.append(f"replicate 0: {verdict}")
    _emit(cfg, payload, "\n".join(lines) + "\n")
    return 0


def _cases(cfg: RunConfig) -> list[SimulationCase]:
    a = cfg.args
    trials = a.trials or DEFAULT_TRIALS
    if a.case_file:
        return read_case_file(a.case_file, trials, cfg.seed)
    if a.registry:
        return registry_cases(a.registry, cfg.seed, trials)
    if a.case:
        if set(a.case) <= set("0123456789,"):
            counts = tuple(int(c) for c in a.case.split(","))
            return [SimulationCase(counts, trials=trials, seed=cfg.seed, name=a.case)]
        return [lookup_case(a.case, cfg.seed, trials)]
    raise UsageError("give --case, --registry or --case-file")


def cmd_simulate(cfg: RunConfig) -> int:
    a = cfg.args
    summaries = [summarize(c, workers=a.workers, backend=a.backend) for c in _cases(cfg)]
    if a.histogram_dir:
        out_dir = Path(a.histogram_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for s in summaries:
            (out_dir / f"{s.case.label.replace(',', '_')}.hist.txt").write_text(s.histogram.to_text())
            (out_dir / f"{s.case.label.replace(',', '_')}.summary.json").write_text(s.to_json() + "\n")
    payload = {"command": "simulate", "seed": cfg.seed, "seed_source": cfg.seed_source,
               "cases": [s.as_dict() for s in summaries]}
    lines = [f"seed: {cfg.seed} ({cfg.seed_source})"]
    for s in summaries:
        lines.append(f"case {s.case.label}: points={s.case.total_points} trials={s.histogram.trials} "
                     f"seed={s.case.seed} mode={s.histogram.mode} "
                     f"CI95={s.ci95} CI99={s.ci99}")
        if not a.histogram_dir:
            lines.extend("  " + ln for ln in s.histogram.to_text().splitlines())
    _emit(cfg, payload, "\n".join(lines) + "\n")
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    a = cfg.args
    cases = _cases(cfg)
    rep = compare_family(cases, alpha=a.alpha, escalate=not a.no_escalate,
                         workers=a.workers, backend=a.backend)
    payload = {"command": "compare", "seed": cfg.seed, "seed_source": cfg.seed_source, **rep.as_dict()}
    lines = [f"seed: {cfg.seed} ({cfg.seed_source})", rep.to_table().rstrip("\n")]
    for s in rep.thresholds:
        lines.append(f"Sidak threshold alpha={s.alpha} k={s.k}: {s.threshold:.4f} ({s.threshold:.6g})")
    _emit(cfg, payload, "\n".join(lines) + "\n")
    return 0


def _reproduction_text(r) -> str:
    out = [f"seed: {r.seed}", ""]
    ref = r.reference
    out.append(f"reference case 4 per timepoint x 4 timepoints ({ref.histogram.trials} trials)")
    out.append("runs\ttrials")
    out += [f"{k}\t{v}" for k, v in ref.histogram.as_dict().items()]
    out.append(f"mode {ref.histogram.mode}  CI95 {ref.ci95}  CI99 {ref.ci99}")
    for title, fam in (("constant repeats per timepoint", r.constant),
                       ("unequal repeats per timepoint", r.unequal)):
        out += ["", title, "case\tpoints\tCI95\tCI99\tp\tescalated p"]
        for rec in fam.records:
            s = rec.repeated
            esc = f"{rec.escalated.p:.4f}" if rec.escalated else ""
            out.append(f"{rec.case.label}\t{rec.case.total_points}\t{s.ci95}\t{s.ci99}\t{rec.p:.4f}\t{esc}")
        thr = "/".join(f"{s.threshold:.4f}" for s in fam.thresholds)
        out.append(f"Sidak thresholds (alpha 0.05/0.01, k={fam.k}): {thr}")
    out += ["", "stability", "case\tpoints\tCI95 base\tCI99 base\tCI95 large\tCI99 large\tunchanged"]
    for row in r.stability:
        out.append(f"{row.case_id}\t{row.base.case.total_points}\t{row.base.ci95}\t{row.base.ci99}\t"
                   f"{row.large.ci95}\t{row.large.ci99}\t{'yes' if row.unchanged else 'no'}")
    return "\n".join(out) + "\n"


def cmd_reproduce(cfg: RunConfig) -> int:
    a = cfg.args
    trials = a.trials or DEFAULT_TRIALS
    large = a.large_trials or 10 * trials

    def progress(item):
        label = getattr(getattr(item, "case", None), "label", None) or getattr(item, "case_id", "")
        print(f"done {label}", file=sys.stderr, flush=True)

    r = reproduce(cfg.seed, trials, large, workers=a.workers, backend=a.backend,
                  progress=progress if a.verbose else None)
    payload = {"command": "reproduce-paper", "seed_source": cfg.seed_source,
               "trials": trials, "large_trials": large, **r.as_dict()}
    if a.output:
        Path(a.output).mkdir(parents=True, exist_ok=True)
        Path(a.output, "report.json").write_text(json.dumps(payload, indent=2) + "\n")
        Path(a.output, "constant_repeats.tsv").write_text(r.constant.to_table())
        Path(a.output, "unequal_repeats.tsv").write_text(r.unequal.to_table())
        Path(a.output, "reference.hist.txt").write_text(r.reference.histogram.to_text())
    _emit(cfg, payload, _reproduction_text(r))
    return 0


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "compare": cmd_compare,
            "reproduce-paper": cmd_reproduce}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tieruns", description="Runs test for regression residuals with repeated measurements.")
    p.add_argument("--version", action="version", version=f"%(prog)s (kernel: {_backend.BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_seed, help=f"64-bit seed (else ${SEED_ENV}, else random)")
    common.add_argument("--format", choices=["human", "json"], default="human")

    sim = _Parser(add_help=False)
    sim.add_argument("--case", help="comma-separated counts per timepoint, or a registry case id")
    sim.add_argument("--registry", choices=["table1", "grid", "unequal", "stability"])
    sim.add_argument("--case-file", help="case table: '<counts> [trials] [seed] [name]' per line")
    sim.add_argument("--trials", type=int, help=f"trials per case (default {DEFAULT_TRIALS})")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--backend", choices=sorted(_backend.BACKENDS))

    t = sub.add_parser("test", parents=[common], help="runs test on a dataset")
    t.add_argument("--input", required=True)
    t.add_argument("--model", default="poly:0,1", help="poly:<exponents> or none (precomputed residuals)")
    t.add_argument("--replicates", type=int, default=1)
    t.add_argument("--tolerance", type=float, default=0.0)
    t.add_argument("--zero-policy", choices=[z.value for z in ZeroPolicy], default="error")

    s = sub.add_parser("simulate", parents=[common, sim], help="run-count histograms")
    s.add_argument("--histogram-dir", help="write <case>.hist.txt and <case>.summary.json here")

    c = sub.add_parser("compare", parents=[common, sim], help="equivalence comparisons")
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--no-escalate", action="store_true")

    r = sub.add_parser("reproduce-paper", parents=[common], help="all calibration tables")
    r.add_argument("--trials", type=int)
    r.add_argument("--large-trials", type=int, help="trials of the stability rerun (default 10x)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--backend", choices=sorted(_backend.BACKENDS))
    r.add_argument("--output", help="directory for report.json and tables")
    r.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed, source = resolve_seed(args.seed)
        if source == "generated":
            print(f"tieruns: using generated seed {seed}", file=sys.stderr)
        return COMMANDS[args.command](RunConfig(args.command, seed, source, args))
    except DegenerateDataError as exc:
        print(f"tieruns: {exc}", file=sys.stderr)
        return 2
    except (TierunsError, OSError) as exc:
        print(f"tieruns: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
