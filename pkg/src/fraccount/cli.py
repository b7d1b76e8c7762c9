"""Batch pipeline: one subcommand per stage, file inputs and outputs."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .corpus import (
    CorpusError,
    compute_processing_stats,
    read_corpus,
    read_journal_master,
    serialize_corpus,
    serialize_journal_master,
)
from .counting import NormalizationScope, accumulate
from .glmm import GLMMError, model_report_csv, run_model_suite
from .indicators import build_indicator_table
from .netclass import citation_graph, density_report, density_report_csv, export_pajek, significance_graph
from .simgen import SimSpec, SimSpecError, generate
from .stats import (
    GroupSample,
    StatsError,
    anova_oneway,
    correlation_matrix,
    dunnett_c,
    kruskal_wallis,
    levene,
    pairwise_csv,
    tukey_hsd,
)

log = logging.getLogger("fraccount")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING_INPUT = 4
EXIT_DATA = 5
EXIT_COMPUTE = 6

SUBCOMMANDS = ("stats", "tally", "indicators", "correlate", "posthoc", "network", "models", "simulate", "all")


class ConfigError(ValueError):
    pass


class MissingInput(FileNotFoundError):
    pass


@dataclass
class RunConfig:
    corpus: str | None = None
    master: str | None = None
    output_dir: str = "out"
    citing_year: int | None = None
    window_length: int = 2
    matched_only: bool = False
    alpha: float = 0.05
    n_quadrature: int = 15
    seed: int | None = None
    workers: int = 1
    strict: bool = False
    posthoc_journals: list[str] | None = None
    partition: dict[str, str] | None = None
    network_top: int = 20
    sim_spec: dict | str | None = None

    def validate(self) -> None:
        if self.window_length < 1:
            raise ConfigError("window_length must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.n_quadrature < 1:
            raise ConfigError("n_quadrature must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def window(self) -> tuple[int, int]:
        return (self.citing_year - self.window_length, self.citing_year - 1)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data: dict = {}
    if path:
        p = Path(path)
        if not p.is_file():
            raise MissingInput(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {p}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {p}: top level must be an object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Outputs:
    """Writes output files and keeps ``manifest.tsv`` in sync, one line per file."""

    def __init__(self, cfg: RunConfig, inputs: list[Path]):
        self.dir = Path(cfg.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        # locations and worker count do not affect results; inputs are identified by hash
        params = {k: v for k, v in asdict(cfg).items() if k not in ("output_dir", "workers", "corpus", "master")}
        self.params = json.dumps(params, sort_keys=True, separators=(",", ":"))
        self.inputs = ";".join(f"{p.name}={_sha256(p)}" for p in inputs)

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text, encoding="utf-8", newline="\n")
        manifest = self.dir / "manifest.tsv"
        lines = {}
        if manifest.exists():
            for line in manifest.read_text(encoding="utf-8").splitlines()[1:]:
                if line:
                    lines[line.split("\t", 1)[0]] = line
        lines[name] = "\t".join([name, hashlib.sha256(text.encode()).hexdigest(), self.inputs, self.params])
        body = "output\tsha256\tinputs\tparameters\n" + "".join(lines[k] + "\n" for k in sorted(lines))
        manifest.write_text(body, encoding="utf-8", newline="\n")
        log.info("wrote %s", path)
        return path


def _require(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} path not configured")
    p = Path(path)
    if not p.is_file():
        raise MissingInput(f"{what} file not found: {p}")
    return p


class _Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._corpus = self._master = self._table = None

    @property
    def corpus(self):
        if self._corpus is None:
            corpus, report = read_corpus(_require(self.cfg.corpus, "corpus"), strict=self.cfg.strict)
            if report.rejections:
                log.warning("%d corpus lines rejected", len(report.rejections))
            self._corpus, self.report = corpus, report
        return self._corpus

    @property
    def master(self):
        if self._master is None:
            self._master = read_journal_master(_require(self.cfg.master, "master"))
        return self._master

    @property
    def citing_year(self) -> int:
        if self.cfg.citing_year is None:
            raise ConfigError("citing_year not configured")
        return self.cfg.citing_year

    @property
    def table(self):
        if self._table is None:
            self._table = build_indicator_table(
                self.corpus, self.master, self.citing_year, self.cfg.window_length,
                matched_only=self.cfg.matched_only, workers=self.cfg.workers,
            )
        return self._table

    def inputs(self) -> list[Path]:
        return [Path(p) for p in (self.cfg.corpus, self.cfg.master) if p and Path(p).is_file()]


def cmd_stats(ctx: _Context, out: Outputs) -> None:
    st = compute_processing_stats(ctx.corpus, ctx.master, ctx.cfg.window)
    out.write("processing_stats.tsv", "statistic\tvalue\n" + "".join(f"{k}\t{v}\n" for k, v in st.as_rows()))
    out.write("rejections.tsv", "line_number\treason\n" + ctx.report.to_tsv())


def cmd_tally(ctx: _Context, out: Outputs) -> None:
    citing = [d for d in ctx.corpus if d.pub_year == ctx.citing_year]
    scope = NormalizationScope.window_refs(ctx.cfg.window, ctx.cfg.matched_only)
    t = accumulate(citing, ctx.master, scope, workers=ctx.cfg.workers)
    out.write("tally_window.tsv", t.to_tsv())
    t_all = accumulate(citing, ctx.master, NormalizationScope.all_refs(ctx.cfg.matched_only), workers=ctx.cfg.workers)
    out.write("tally_all.tsv", t_all.to_tsv())


def cmd_indicators(ctx: _Context, out: Outputs) -> None:
    out.write("indicators.csv", ctx.table.to_csv())
    out.write("exclusions.tsv", ctx.table.exclusions_tsv())


def cmd_correlate(ctx: _Context, out: Outputs) -> None:
    rows = ctx.table.rows
    candidates = {
        "reference_if": [r.reference_if for r in rows],
        "quasi_if_integer": [r.quasi_if_integer for r in rows],
        "quasi_if_fractional_allrefs": [r.quasi_if_fractional_allrefs for r in rows],
        "quasi_if_fractional": [r.quasi_if_fractional for r in rows],
        "cp_fractional": [r.cp_fractional for r in rows],
    }
    keep = [i for i in range(len(rows)) if all(v[i] is not None for k, v in candidates.items() if any(x is not None for x in v))]
    cols = {k: [v[i] for i in keep] for k, v in candidates.items() if any(x is not None for x in v)}
    names, m = correlation_matrix(cols)
    lines = ["variable," + ",".join(names)]
    for i, n in enumerate(names):
        lines.append(n + "," + ",".join(f"{m[i, j]:.6f}" for j in range(len(names))))
    out.write("correlations.csv", "\n".join(lines) + "\n")


def _window_samples(ctx: _Context, journals: list[str], integer: bool, total_cites: bool = False):
    citing = [d for d in ctx.corpus if d.pub_year == ctx.citing_year]
    if total_cites:
        scope, window = NormalizationScope.all_refs(ctx.cfg.matched_only), None
    else:
        scope = NormalizationScope.window_refs(ctx.cfg.window, ctx.cfg.matched_only)
        window = ctx.cfg.window
    t = accumulate(citing, ctx.master, scope, cited_window=window, keep_per_doc=True, workers=ctx.cfg.workers)
    samples = []
    for j in journals:
        if j not in t or len(t[j].per_doc) < 2:
            log.warning("journal %s has fewer than two citing documents; skipped", j)
            continue
        obs = t[j].multiplicities() if integer else t[j].weights()
        samples.append(GroupSample(j, obs))
    return samples


def cmd_posthoc(ctx: _Context, out: Outputs) -> None:
    journals = ctx.cfg.posthoc_journals
    if not journals:
        ranked = sorted(ctx.table.rows, key=lambda r: (-r.quasi_if_integer, r.journal_id))
        journals = [r.journal_id for r in ranked[:5]]
    samples = _window_samples(ctx, list(journals), integer=False)
    if len(samples) < 2:
        raise StatsError("fewer than two journals with usable citation distributions")
    lines = ["test,statistic,df,p_value,degenerate"]
    for res in (levene(samples), anova_oneway(samples), kruskal_wallis(samples)):
        df = " ".join(str(d) for d in res.df)
        lines.append(f"{res.test_name},{res.statistic:.9f},{df},{res.p_value:.9g},{int(res.degenerate)}")
    out.write("omnibus.csv", "\n".join(lines) + "\n")
    out.write("dunnett_c.csv", pairwise_csv(dunnett_c(samples, ctx.cfg.alpha)))
    out.write("tukey_hsd.csv", pairwise_csv(tukey_hsd(samples, ctx.cfg.alpha)))


def _default_partition(ctx: _Context) -> dict[str, str]:
    by_field: dict[str, list] = {}
    for r in ctx.table.rows:
        if r.field_id is not None:
            by_field.setdefault(r.field_id, []).append(r)
    fields_ = sorted(by_field)[:2]
    if len(fields_) < 2:
        raise ConfigError("network needs a partition or at least two fields in the indicator table")
    part = {}
    for f in fields_:
        ranked = sorted(by_field[f], key=lambda r: (-r.quasi_if_integer, r.journal_id))
        for r in ranked[: ctx.cfg.network_top]:
            part[r.journal_id] = f
    return part


def cmd_network(ctx: _Context, out: Outputs) -> None:
    partition = ctx.cfg.partition or _default_partition(ctx)
    journals = sorted(partition)
    g = citation_graph(ctx.corpus, journals, ctx.master, ctx.cfg.window, citing_year=ctx.citing_year)
    out.write("citation_graph.net", export_pajek(g))
    reports = {}
    for label, integer, total in (
        ("if_numerator_fractional", False, False),
        ("if_numerator_integer", True, False),
        ("total_cites_fractional", False, True),
        ("total_cites_integer", True, True),
    ):
        samples = _window_samples(ctx, journals, integer=integer, total_cites=total)
        sg = significance_graph(samples, ctx.cfg.alpha, "dunnett_c")
        out.write(f"significance_{label}.net", export_pajek(sg))
        part = {n: partition[n] for n in sg.nodes}
        reports[label] = density_report(sg, part)
    out.write("density_report.csv", density_report_csv(reports))


def cmd_models(ctx: _Context, out: Outputs) -> None:
    suite = run_model_suite(ctx.table.rows, ctx.master.field_map(), n_quadrature=ctx.cfg.n_quadrature)
    out.write("model_report.csv", model_report_csv(suite))
    lines = ["comparison,sigma2_base,sigma2_alt,reduction_percent"]
    for mid, c in suite.comparisons.items():
        lines.append(f"{mid}_vs_M2,{c.sigma2_base:.6f},{c.sigma2_alt:.6f},{c.reduction_percent:.4f}")
    out.write("variance_reduction.csv", "\n".join(lines) + "\n")
    if suite.notices:
        out.write("model_notices.txt", "\n".join(suite.notices) + "\n")


def cmd_simulate(cfg: RunConfig) -> None:
    if cfg.sim_spec is None:
        raise ConfigError("simulate needs a sim_spec section in the config")
    if isinstance(cfg.sim_spec, str):
        path = Path(cfg.sim_spec)
        if not path.is_file():
            raise MissingInput(f"simulation spec not found: {path}")
        try:
            spec_dict = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"simulation spec {path}: {exc}") from exc
    else:
        spec_dict = dict(cfg.sim_spec)
    if cfg.seed is not None:
        spec_dict["seed"] = cfg.seed
    spec = SimSpec.from_dict(spec_dict)
    corpus, master = generate(spec)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "corpus.jsonl").write_text(serialize_corpus(corpus), encoding="utf-8", newline="\n")
    (outdir / "master.tsv").write_text(serialize_journal_master(master), encoding="utf-8", newline="\n")
    out = Outputs(cfg, [])
    out.write("sim_spec.json", json.dumps(spec_dict, sort_keys=True, indent=2) + "\n")
    log.info("simulated %d documents, %d journals", len(corpus), len(master))


COMMANDS = {
    "stats": cmd_stats,
    "tally": cmd_tally,
    "indicators": cmd_indicators,
    "correlate": cmd_correlate,
    "posthoc": cmd_posthoc,
    "network": cmd_network,
    "models": cmd_models,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraccount", description=__doc__)
    p.add_argument("subcommand", choices=SUBCOMMANDS, help="pipeline stage to run ('all' runs every analysis stage)")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--corpus", help="line-delimited JSON corpus")
    p.add_argument("--master", help="tab-separated journal master file")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--citing-year", dest="citing_year", type=int)
    p.add_argument("--window-length", dest="window_length", type=int)
    p.add_argument("--matched-only", dest="matched_only", action="store_const", const=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-quadrature", dest="n_quadrature", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--strict", action="store_const", const=True)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config", "verbose")}
    try:
        cfg = load_config(args.config, overrides)
        log.info(
            "fraccount %s, python %s, numpy %s, scipy %s, config sha256 %s",
            __version__, platform.python_version(), np.__version__, scipy.__version__, cfg.digest(),
        )
        if args.subcommand == "simulate":
            cmd_simulate(cfg)
            return EXIT_OK
        ctx = _Context(cfg)
        ctx.corpus, ctx.master  # load and validate inputs before writing anything
        out = Outputs(cfg, ctx.inputs())
        names = list(COMMANDS) if args.subcommand == "all" else [args.subcommand]
        for name in names:
            COMMANDS[name](ctx, out)
    except MissingInput as exc:
        return _fail(EXIT_MISSING_INPUT, "missing_input", exc)
    except (ConfigError, SimSpecError) as exc:
        return _fail(EXIT_CONFIG, "invalid_config", exc)
    except CorpusError as exc:
        return _fail(EXIT_DATA, "data_error", exc)
    except (StatsError, GLMMError) as exc:
        return _fail(EXIT_COMPUTE, "computation_error", exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
