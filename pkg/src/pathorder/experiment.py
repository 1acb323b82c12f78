"""Order-recovery experiments: grids, replications, aggregation, artifacts.

One experiment cell is a (data_size, replication) pair.  Each cell draws
its own random graph and ground-truth model, generates a dataset of the
requested size, fits against the configured constraint (the true graph,
a perturbed union graph, or the complete graph as the unconstrained
baseline), scores all candidate orders once, and applies every
configured selection method.  Cells are pure functions of the master
seed, so results are identical for any worker count.

Failed cells (for example a graph pruned to nothing) are recorded with
an error status, excluded from aggregation, and counted in metadata.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import ceil, log10
from typing import Iterator, Sequence

from pathorder import __version__ as _version
from pathorder import _toml
from pathorder.constraint import complete_digraph
from pathorder.errors import DomainError, ParseError, PathOrderError, UsageError
from pathorder.numerics import backend_name, derive_seed
from pathorder.pathdata import count
from pathorder.selection import (
    OrderPrior,
    evidence_threshold,
    score_all,
    select_bf,
    select_ic,
    select_lr,
    wilson_interval,
)
from pathorder.synth import (
    PathLengthLaw,
    generate_paths,
    perturb_constraint,
    random_gnm,
    sample_ground_truth,
)

_CONSTRAINT_MODES = ("true_graph", "perturbed", "complete")
_PRIOR_KINDS = ("uniform", "exponential_df")


@dataclass(frozen=True)
class MethodSpec:
    """One selection method with its thresholds.

    Textual forms: `aic`, `bic`, `edc`, `lr:<p>`, `bf:<evidence>` and
    `bf:<evidence>:<prior>` (per-method prior override).  The text is
    the method's name in records and tables.
    """

    name: str
    kind: str
    p_thres: float | None = None
    evidence: str | None = None
    prior_kind: str | None = None

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        parts = text.split(":")
        kind = parts[0]
        if kind in ("aic", "bic", "edc"):
            if len(parts) != 1:
                raise ParseError(f"{kind} takes no parameters: {text!r}")
            return cls(text, kind)
        if kind == "lr":
            if len(parts) != 2:
                raise ParseError(f"expected lr:<p_thres>, got {text!r}")
            try:
                p = float(parts[1])
            except ValueError:
                raise ParseError(f"bad p threshold in {text!r}") from None
            if not 0.0 < p < 1.0:
                raise ParseError(f"p threshold outside (0,1) in {text!r}")
            return cls(text, "lr", p_thres=p)
        if kind == "bf":
            if len(parts) not in (2, 3):
                raise ParseError(
                    f"expected bf:<evidence>[:<prior>], got {text!r}")
            evidence = parts[1]
            if evidence not in ("positive", "very_strong"):
                raise ParseError(f"unknown evidence level in {text!r}")
            prior_kind = None
            if len(parts) == 3:
                prior_kind = parts[2]
                if prior_kind not in _PRIOR_KINDS:
                    raise ParseError(f"unknown prior in {text!r}")
            return cls(text, "bf", evidence=evidence, prior_kind=prior_kind)
        raise ParseError(f"unknown method {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    m: int
    k_gt: int
    k_max: int
    data_sizes: tuple[int, ...]
    replications: int
    methods: tuple[MethodSpec, ...]
    master_seed: int
    prior: OrderPrior = OrderPrior("uniform")
    alpha0: float = 1.0
    perturb_extra_m: int = 0
    constraint_mode: str = "true_graph"
    length_law: PathLengthLaw | None = None
    lr_mode: str = "all"
    z: float = 1.959964

    def law(self) -> PathLengthLaw:
        if self.length_law is not None:
            return self.length_law
        return PathLengthLaw("constant", self.k_gt + 3)

    def validate(self) -> "ExperimentConfig":
        if self.n < 0 or self.m < 0:
            raise DomainError("n and m must be nonnegative")
        if self.k_gt < 0:
            raise DomainError("k_gt must be nonnegative")
        if self.k_max < self.k_gt:
            raise DomainError("k_max must be at least k_gt")
        if not self.data_sizes:
            raise DomainError("data_sizes must be nonempty")
        prev = 0
        for s in self.data_sizes:
            if s <= prev:
                raise DomainError("data_sizes must be strictly increasing "
                                  "positive integers")
            prev = s
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if not self.methods:
            raise DomainError("methods must be nonempty")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise DomainError("duplicate method specs")
        if self.constraint_mode not in _CONSTRAINT_MODES:
            raise DomainError(
                f"unknown constraint_mode {self.constraint_mode!r}")
        if self.perturb_extra_m < 0:
            raise DomainError("perturb_extra_m must be nonnegative")
        if self.constraint_mode != "perturbed" and self.perturb_extra_m:
            raise UsageError(
                "perturb_extra_m requires constraint_mode = 'perturbed'")
        if self.alpha0 <= 0.0:
            raise DomainError("alpha0 must be positive")
        if self.lr_mode not in ("all", "adjacent"):
            raise DomainError(f"unknown lr_mode {self.lr_mode!r}")
        if self.z <= 0.0:
            raise DomainError("z must be positive")
        self.law()  # validates bounds on construction
        return self

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "k_gt": self.k_gt,
            "k_max": self.k_max,
            "data_sizes": list(self.data_sizes),
            "replications": self.replications,
            "methods": [m.name for m in self.methods],
            "master_seed": self.master_seed,
            "prior": self.prior.kind,
            "alpha0": self.alpha0,
            "perturb_extra_m": self.perturb_extra_m,
            "constraint_mode": self.constraint_mode,
            "length_law": self.law().format(),
            "lr_mode": self.lr_mode,
            "z": self.z,
        }


_REQUIRED_KEYS = ("n", "m", "k_gt", "k_max", "data_sizes", "replications",
                  "methods", "master_seed")
_OPTIONAL_KEYS = ("prior", "alpha0", "perturb_extra_m", "constraint_mode",
                  "length_law", "lr_mode", "z")


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build and validate a config from parsed key-value data."""
    unknown = set(data) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS)
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(sorted(unknown))}")
    missing = [k for k in _REQUIRED_KEYS if k not in data]
    if missing:
        raise ParseError(f"missing config keys: {', '.join(missing)}")

    def want_int(key):
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"config key {key!r} must be an integer")
        return v

    sizes = data["data_sizes"]
    if not isinstance(sizes, list) or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in sizes):
        raise ParseError("data_sizes must be a list of integers")
    raw_methods = data["methods"]
    if not isinstance(raw_methods, list) or not all(
            isinstance(s, str) for s in raw_methods):
        raise ParseError("methods must be a list of strings")
    methods = tuple(MethodSpec.parse(s) for s in raw_methods)
    prior_kind = data.get("prior", "uniform")
    if prior_kind not in _PRIOR_KINDS:
        raise ParseError(f"unknown prior {prior_kind!r}")
    law = None
    if "length_law" in data:
        if not isinstance(data["length_law"], str):
            raise ParseError("length_law must be a string like 'constant:5'")
        law = PathLengthLaw.parse(data["length_law"])
    alpha0 = data.get("alpha0", 1.0)
    z = data.get("z", 1.959964)
    if isinstance(alpha0, int) and not isinstance(alpha0, bool):
        alpha0 = float(alpha0)
    if isinstance(z, int) and not isinstance(z, bool):
        z = float(z)
    if not isinstance(alpha0, float) or not isinstance(z, float):
        raise ParseError("alpha0 and z must be numbers")
    mode = data.get("constraint_mode", "true_graph")
    lr_mode = data.get("lr_mode", "all")
    if not isinstance(mode, str) or not isinstance(lr_mode, str):
        raise ParseError("constraint_mode and lr_mode must be strings")
    cfg = ExperimentConfig(
        n=want_int("n"),
        m=want_int("m"),
        k_gt=want_int("k_gt"),
        k_max=want_int("k_max"),
        data_sizes=tuple(sizes),
        replications=want_int("replications"),
        methods=methods,
        master_seed=want_int("master_seed"),
        prior=OrderPrior(prior_kind),
        alpha0=alpha0,
        perturb_extra_m=data.get("perturb_extra_m", 0),
        constraint_mode=mode,
        length_law=law,
        lr_mode=lr_mode,
        z=z,
    )
    return cfg.validate()


def parse_config(text: str) -> ExperimentConfig:
    return config_from_dict(_toml.parse_flat_toml(text))


def load_config(path: str, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read a config file, then apply `key=value` command-line overrides."""
    with open(path, "r", encoding="utf-8") as fh:
        data = _toml.parse_flat_toml(fh.read())
    for assignment in overrides:
        key, sep, value = assignment.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"override must be key=value, got {assignment!r}")
        data[key] = _toml._parse_value(value.strip(), 0)
    return config_from_dict(data)


@dataclass(frozen=True)
class ResultRecord:
    """Outcome of one method on one experiment cell."""

    method: str
    data_size: int
    replication: int
    selected_K: int | None
    seed: int
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.selected_K is not None


@dataclass(frozen=True)
class AggregateRow:
    method: str
    data_size: int
    K: int
    count: int
    total: int
    frequency: float
    wilson_lo: float
    wilson_hi: float


@dataclass(frozen=True)
class DetectionRange:
    """Largest contiguous grid interval where a method detects the truth."""

    method: str
    min_size: int | None
    max_size: int | None


def _apply_method(spec: MethodSpec, report, config: ExperimentConfig) -> int:
    if spec.kind in ("aic", "bic", "edc"):
        return select_ic(report, spec.kind)
    if spec.kind == "lr":
        return select_lr(report, spec.p_thres, config.lr_mode)
    prior = OrderPrior(spec.prior_kind or config.prior.kind)
    return select_bf(report, prior, evidence_threshold(spec.evidence))


def _run_cell(config: ExperimentConfig, size_index: int,
              replication: int) -> list[ResultRecord]:
    size = config.data_sizes[size_index]
    cell_seed = derive_seed(config.master_seed, size_index, replication)

    def fail_all(message: str) -> list[ResultRecord]:
        return [ResultRecord(m.name, size, replication, None, cell_seed,
                             error=message) for m in config.methods]

    try:
        g = random_gnm(config.n, config.m, derive_seed(cell_seed, 0))
        if g.n_nodes == 0:
            raise DomainError("graph pruned to empty")
        gt = sample_ground_truth(g, config.k_gt, derive_seed(cell_seed, 1))
        data = generate_paths(gt, size, config.law(), derive_seed(cell_seed, 2))
        if config.constraint_mode == "true_graph":
            fit_g = g
        elif config.constraint_mode == "perturbed":
            fit_g = perturb_constraint(g, config.perturb_extra_m,
                                       derive_seed(cell_seed, 3)).union
        else:
            fit_g = complete_digraph(g.labels, self_loops=True)
        tc = count(data, fit_g, config.k_max)
        report = score_all(tc, fit_g, config.k_max, config.alpha0)
    except PathOrderError as exc:
        return fail_all(str(exc))
    records = []
    for spec in config.methods:
        try:
            selected = _apply_method(spec, report, config)
            records.append(ResultRecord(spec.name, size, replication,
                                        selected, cell_seed))
        except PathOrderError as exc:
            records.append(ResultRecord(spec.name, size, replication,
                                        None, cell_seed, error=str(exc)))
    return records


def _run_cell_args(args) -> list[ResultRecord]:
    return _run_cell(*args)


def run(config: ExperimentConfig, workers: int = 1) -> list[ResultRecord]:
    """Run every cell of the grid; deterministic for any worker count."""
    config.validate()
    tasks = [(config, si, ri)
             for si in range(len(config.data_sizes))
             for ri in range(config.replications)]
    if workers <= 1:
        batches = [_run_cell_args(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_cell_args, tasks, chunksize=chunk))
    records = []
    for batch in batches:
        records.extend(batch)
    return records


def aggregate(records: Sequence[ResultRecord], K_max: int,
              z: float = 1.959964) -> list[AggregateRow]:
    """Selection-frequency table with Wilson intervals.

    One row per (method, data_size, K) including zero-count orders.
    Failed records are excluded; a cell with no successful records emits
    no rows.
    """
    groups: dict[tuple[str, int], list[int]] = {}
    for r in records:
        if r.ok:
            groups.setdefault((r.method, r.data_size), []).append(r.selected_K)
    rows = []
    for method, size in sorted(groups):
        selections = groups[(method, size)]
        total = len(selections)
        for K in range(K_max + 1):
            cnt = sum(1 for s in selections if s == K)
            lo, hi = wilson_interval(cnt, total, z)
            rows.append(AggregateRow(method, size, K, cnt, total,
                                     cnt / total, lo, hi))
    return rows


def _qualifies(spec: MethodSpec, selections: list[int], k_gt: int) -> bool:
    if not selections:
        return False
    if spec.kind == "lr":
        # Detection tolerates type-I overfitting below the significance
        # threshold, but no underfitting.
        if any(s < k_gt for s in selections):
            return False
        over = sum(1 for s in selections if s > k_gt)
        return over / len(selections) < spec.p_thres
    return all(s == k_gt for s in selections)


def detection_ranges(records: Sequence[ResultRecord],
                     config: ExperimentConfig) -> list[DetectionRange]:
    """Largest contiguous run of grid sizes where each method detects K_gt.

    Ties between equally long runs go to the one at larger data sizes.
    """
    by_cell: dict[tuple[str, int], list[int]] = {}
    for r in records:
        if r.ok:
            by_cell.setdefault((r.method, r.data_size), []).append(r.selected_K)
    out = []
    for spec in config.methods:
        flags = [_qualifies(spec, by_cell.get((spec.name, size), []),
                            config.k_gt)
                 for size in config.data_sizes]
        best: tuple[int, int] | None = None
        start = None
        for i, flag in enumerate(flags + [False]):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                run_span = (start, i - 1)
                if (best is None
                        or run_span[1] - run_span[0] >= best[1] - best[0]):
                    best = run_span
                start = None
        if best is None:
            out.append(DetectionRange(spec.name, None, None))
        else:
            out.append(DetectionRange(spec.name,
                                      config.data_sizes[best[0]],
                                      config.data_sizes[best[1]]))
    return out


def _sanitize(text: str) -> str:
    return text.replace(",", ";").replace("\n", " ").replace("\r", " ")


def records_csv_lines(records: Sequence[ResultRecord]) -> Iterator[str]:
    yield "method,data_size,replication,selected_K,seed,status"
    for r in records:
        sel = "" if r.selected_K is None else str(r.selected_K)
        status = "ok" if r.ok else f"failed: {_sanitize(r.error)}"
        yield f"{r.method},{r.data_size},{r.replication},{sel},{r.seed},{status}"


def results_csv_lines(table: Sequence[AggregateRow]) -> Iterator[str]:
    yield "method,data_size,K,count,total,frequency,wilson_lo,wilson_hi"
    for row in table:
        yield (f"{row.method},{row.data_size},{row.K},{row.count},"
               f"{row.total},{row.frequency!r},{row.wilson_lo!r},"
               f"{row.wilson_hi!r}")


def ranges_csv_lines(ranges: Sequence[DetectionRange]) -> Iterator[str]:
    yield "method,min_size,max_size"
    for r in ranges:
        lo = "" if r.min_size is None else str(r.min_size)
        hi = "" if r.max_size is None else str(r.max_size)
        yield f"{r.method},{lo},{hi}"


def parse_results_csv(lines) -> list[AggregateRow]:
    """Read back a results CSV (the `plot` command's input)."""
    rows = []
    header = None
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if header is None:
            header = text
            if header != "method,data_size,K,count,total,frequency,wilson_lo,wilson_hi":
                raise ParseError("unrecognized results CSV header", line=lineno)
            continue
        parts = text.split(",")
        if len(parts) != 8:
            raise ParseError("expected 8 columns", line=lineno)
        try:
            rows.append(AggregateRow(
                method=parts[0],
                data_size=int(parts[1]),
                K=int(parts[2]),
                count=int(parts[3]),
                total=int(parts[4]),
                frequency=float(parts[5]),
                wilson_lo=float(parts[6]),
                wilson_hi=float(parts[7]),
            ))
        except ValueError:
            raise ParseError("bad numeric field", line=lineno) from None
    if header is None:
        raise ParseError("empty results CSV")
    return rows


def write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def emit_csv(table: Sequence[AggregateRow], path: str) -> None:
    write_lines(path, results_csv_lines(table))


def config_hash(config: ExperimentConfig) -> str:
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def metadata_dict(config: ExperimentConfig,
                  records: Sequence[ResultRecord]) -> dict:
    failures: dict[str, int] = {}
    for r in records:
        if not r.ok:
            failures[r.method] = failures.get(r.method, 0) + 1
    return {
        "tool": "pathorder",
        "version": _version,
        "backend": backend_name,
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "master_seed": config.master_seed,
        "length_law": config.law().format(),
        "records": len(records),
        "failed_records": sum(failures.values()),
        "failures_by_method": dict(sorted(failures.items())),
    }


def write_metadata(config: ExperimentConfig, records: Sequence[ResultRecord],
                   path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(metadata_dict(config, records), fh, indent=1, sort_keys=True)
        fh.write("\n")


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def render_svg(table: Sequence[AggregateRow]) -> str:
    """Selection-frequency curves, one panel per method, log-size x axis.

    Each order K gets a polyline plus a translucent Wilson band.  The
    markup is self-contained (inline styles, no scripts or links).
    """
    methods = sorted({row.method for row in table})
    ks = sorted({row.K for row in table})
    sizes = sorted({row.data_size for row in table})
    pw, ph = 280, 200
    mleft, mtop, hgap, vgap = 60, 48, 40, 64
    cols = min(3, max(1, len(methods)))
    rows_n = ceil(len(methods) / cols) if methods else 1
    width = mleft + cols * (pw + hgap) + 140
    height = mtop + rows_n * (ph + vgap) + 20
    if sizes:
        lo = log10(sizes[0])
        hi = log10(sizes[-1])
        if hi - lo < 1e-9:
            lo -= 0.5
            hi += 0.5
    else:
        lo, hi = 0.0, 1.0

    def sx(size: float, x0: float) -> float:
        return x0 + (log10(size) - lo) / (hi - lo) * pw

    def sy(freq: float, y0: float) -> float:
        return y0 + (1.0 - freq) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{mleft}" y="24" font-family="sans-serif" font-size="15" '
        f'fill="#222">Selected-order frequency vs. dataset size</text>',
    ]
    by_method: dict[str, list[AggregateRow]] = {}
    for row in table:
        by_method.setdefault(row.method, []).append(row)
    for mi, method in enumerate(methods):
        x0 = mleft + (mi % cols) * (pw + hgap)
        y0 = mtop + (mi // cols) * (ph + vgap)
        parts.append(f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" '
                     f'fill="none" stroke="#444" stroke-width="1"/>')
        parts.append(f'<text x="{x0}" y="{y0 - 8}" font-family="sans-serif" '
                     f'font-size="12" fill="#222">{_esc(method)}</text>')
        for frac, label in ((0.0, "0"), (0.5, "0.5"), (1.0, "1")):
            yy = sy(frac, y0)
            parts.append(f'<line x1="{x0 - 4}" y1="{yy:.2f}" x2="{x0}" '
                         f'y2="{yy:.2f}" stroke="#444" stroke-width="1"/>')
            parts.append(f'<text x="{x0 - 8}" y="{yy + 4:.2f}" '
                         f'font-family="sans-serif" font-size="10" '
                         f'fill="#222" text-anchor="end">{label}</text>')
        decade = ceil(lo)
        while decade <= hi + 1e-9:
            xx = sx(10.0 ** decade, x0)
            parts.append(f'<line x1="{xx:.2f}" y1="{y0 + ph}" x2="{xx:.2f}" '
                         f'y2="{y0 + ph + 4}" stroke="#444" stroke-width="1"/>')
            parts.append(f'<text x="{xx:.2f}" y="{y0 + ph + 16}" '
                         f'font-family="sans-serif" font-size="10" '
                         f'fill="#222" text-anchor="middle">1e{decade}</text>')
            decade += 1
        rows_m = by_method.get(method, [])
        for K in ks:
            pts = sorted(((r.data_size, r) for r in rows_m if r.K == K))
            if not pts:
                continue
            color = _PALETTE[K % len(_PALETTE)]
            band = []
            for size, r in pts:
                band.append(f"{sx(size, x0):.2f},{sy(r.wilson_hi, y0):.2f}")
            for size, r in reversed(pts):
                band.append(f"{sx(size, x0):.2f},{sy(r.wilson_lo, y0):.2f}")
            parts.append(f'<polygon points="{" ".join(band)}" fill="{color}" '
                         f'fill-opacity="0.15" stroke="none"/>')
            line = " ".join(f"{sx(size, x0):.2f},{sy(r.frequency, y0):.2f}"
                            for size, r in pts)
            parts.append(f'<polyline points="{line}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
    lx = mleft + cols * (pw + hgap) + 10
    parts.append(f'<text x="{lx}" y="{mtop}" font-family="sans-serif" '
                 f'font-size="12" fill="#222">order K</text>')
    for i, K in enumerate(ks):
        yy = mtop + 16 + i * 18
        color = _PALETTE[K % len(_PALETTE)]
        parts.append(f'<line x1="{lx}" y1="{yy}" x2="{lx + 22}" y2="{yy}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 28}" y="{yy + 4}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'fill="#222">K={K}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def emit_svg(table: Sequence[AggregateRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(table))
        fh.write("\n")
