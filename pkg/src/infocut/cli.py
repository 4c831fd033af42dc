"""Command-line front end: infocut {generate,cuts,errors,search-estar,compare,rerun}.

Every output file carries the format version and the full run configuration
(including the argv that produced it), so ``infocut rerun FILE`` reproduces
it byte for byte.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diffusion import PriorKind, build_kernel, make_prior
from .errors import InfocutError, InvalidInput
from .experiments import CutObjective, estar_local_search, run_comparison
from .graph import (
    Graph,
    graph_to_dict,
    is_connected,
    load_graph,
    sample_connected_sbm,
    solve_sbm_spec,
)
from .mixing import DEFAULT_GRID, TimeGrid, fast_mixing_stats, fmt
from .partition import (
    Bisection,
    Partition,
    average_cut,
    cut,
    load_partition,
    normalized_cut,
    quadratic_forms,
    regularized_cut,
)

FORMAT_VERSION = "infocut/1"


@dataclass
class RunConfig:
    command: str
    argv: list[str]
    params: dict = field(default_factory=dict)
    format: str = FORMAT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def header_lines(self) -> list[str]:
        return [f"format: {self.format}", f"config: {self.to_json()}"]


def parse_seeds(text: str) -> list[int]:
    """'3', '0..9' (inclusive), or comma-separated mixtures of both."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)\.\.(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise InvalidInput(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        elif re.fullmatch(r"\d+", part):
            seeds.append(int(part))
        else:
            raise InvalidInput(f"bad seed list {text!r}; use e.g. 0..9 or 1,2,5")
    return seeds


def parse_priors(text: str) -> list[PriorKind]:
    out = []
    for part in text.split(","):
        try:
            kind = PriorKind(part.strip())
        except ValueError:
            raise InvalidInput(f"unknown prior {part!r}; choose uniform or degree") from None
        if kind not in out:
            out.append(kind)
    return out


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise InvalidInput(f"bad number list {text!r}") from None


_NUMBER_ARRAY = re.compile(r"\[\s*(-?[\d.eE+-]+(?:,\s*-?[\d.eE+-]+)*)\s*\]")


def _dump_json(obj) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)
    # keep arrays of plain numbers (edges, assignments) on one line
    text = _NUMBER_ARRAY.sub(lambda m: "[" + ", ".join(re.split(r",\s*", m.group(1))) + "]", text)
    return text + "\n"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    print(path)
    return path


def _csv(header: list[str], columns: list[str], rows) -> str:
    lines = [f"# {h}" for h in header]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _num_tag(x: float) -> str:
    return format(x, "g")


def _load_bisection(g: Graph, partition_path: str | None, metadata: dict) -> Bisection:
    if partition_path is not None:
        p = load_partition(partition_path)
    elif "block_assignment" in metadata:
        p = Partition(2, np.array(metadata["block_assignment"], dtype=np.int64))
    else:
        raise InvalidInput("no --partition given and the graph file carries no block_assignment")
    if p.k != 2:
        raise InvalidInput(f"error curves need a bisection (k=2), got k={p.k}")
    if p.n != g.n:
        raise InvalidInput(f"partition covers {p.n} nodes, graph has {g.n}")
    p.require_nonempty()
    return Bisection.from_partition(p)


# --- commands ---------------------------------------------------------------


def cmd_generate(args, cfg: RunConfig) -> int:
    spec = solve_sbm_spec(args.n, args.p_minus, seed=args.seed)
    g, draws = sample_connected_sbm(spec)
    meta = {
        "p_minus": spec.p_minus,
        "p_plus": spec.p_plus,
        "seed": spec.seed,
        "connected": is_connected(g),
        "connectivity_filter": "resample until connected; with p_minus=0 the two blocks must be the components",
        "draws": draws,
        "block_assignment": spec.block_assignment.tolist(),
        "format": FORMAT_VERSION,
        "config": cfg.to_dict(),
    }
    path = Path(args.output) if args.output else Path(args.out) / (
        f"sbm_n{args.n}_pminus{_num_tag(args.p_minus)}_seed{args.seed}.json"
    )
    _write(path, _dump_json(graph_to_dict(g, meta)))
    return 0


def cmd_cuts(args, cfg: RunConfig) -> int:
    g, _ = load_graph(args.graph)
    p = load_partition(args.partition)
    if p.n != g.n:
        raise InvalidInput(f"partition covers {p.n} nodes, graph has {g.n}")
    p.require_nonempty()
    per, crossing = cut(g, p)
    report = {
        "format": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "k": p.k,
        "c": crossing,
        "cluster_cuts": per.tolist(),
        "A": average_cut(g, p),
        "N": normalized_cut(g, p),
        "C": {},
    }
    for kind in PriorKind:
        try:
            report["C"][kind.value] = regularized_cut(g, p, make_prior(g, kind))
        except InfocutError as exc:
            report["C"][kind.value] = None
            report.setdefault("notes", []).append(f"C[{kind.value}]: {exc}")
    if p.k == 2:
        q = quadratic_forms(g, Bisection.from_partition(p))
        report["quadratic_forms"] = {
            "hLh": q.hLh,
            "residual_hLh_minus_4c": q.hLh - 4 * crossing,
            "residual_A": q.average_cut - report["A"],
            "residual_N": q.normalized_cut - report["N"],
        }
    text = _dump_json(report)
    if args.out:
        _write(Path(args.out) / "cuts.json", text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_errors(args, cfg: RunConfig) -> int:
    g, meta = load_graph(args.graph)
    b = _load_bisection(g, args.partition, meta)
    grid = TimeGrid.parse(args.grid)
    summary = {"format": FORMAT_VERSION, "config": cfg.to_dict(), "grid": args.grid, "priors": {}}
    for kind in parse_priors(args.prior):
        k = build_kernel(g, make_prior(g, kind))
        curve = fast_mixing_stats(k, b, grid)
        _write(Path(args.out) / f"errors_{kind.value}.csv",
               curve.to_csv(cfg.header_lines() + [f"prior: {kind.value}"]))
        s = curve.summary()
        s["prior"] = kind.value
        s["grid_resolution_log10"] = float(np.log10(grid.t_tilde[1] / grid.t_tilde[0])) if grid.count > 1 else None
        summary["priors"][kind.value] = s
    _write(Path(args.out) / "errors_summary.json", _dump_json(summary))
    return 0


SCATTER_COLUMNS = [
    "seed", "n", "prior", "estar", "tstar_minus", "tstar_plus", "tau",
    "t_minus", "t_plus", "initial_estar", "steps",
]


def cmd_search_estar(args, cfg: RunConfig) -> int:
    grid = TimeGrid.parse(args.grid)
    seeds = parse_seeds(args.seeds)
    rows = []
    for kind in parse_priors(args.prior):
        for seed in seeds:
            spec = solve_sbm_spec(args.n, args.p_minus, seed=seed)
            g, _ = sample_connected_sbm(spec)
            b = Bisection.from_labels(spec.block_assignment)
            r = estar_local_search(g, b, kind, grid, max_steps=args.max_steps)
            rows.append([
                str(seed), str(args.n), kind.value, r.estar, r.tstar_minus, r.tstar_plus, r.tau,
                r.tstar_minus * r.tau, r.tstar_plus * r.tau, r.initial_estar, str(len(r.steps)),
            ])
    name = f"estar_n{args.n}_pminus{_num_tag(args.p_minus)}_{args.prior.replace(',', '-')}.csv"
    _write(Path(args.out) / name, _csv(cfg.header_lines(), SCATTER_COLUMNS, rows))
    return 0


def cmd_compare(args, cfg: RunConfig) -> int:
    grid = TimeGrid.parse(args.grid)
    kind = PriorKind(args.prior)
    for pm in parse_floats(args.p_minus):
        spec = solve_sbm_spec(args.n, pm, seed=args.seed)
        res = run_comparison(spec, args.n_graphs, grid, objective=args.objective, prior=kind,
                             maximize_info=not args.minimize_info)
        header = cfg.header_lines() + [
            f"p_minus: {fmt(pm)}",
            f"p_plus: {fmt(spec.p_plus)}",
            f"n_graphs: {res.n_graphs}",
            f"seeds: {res.seeds[0]}..{res.seeds[-1]}",
            f"objective: {res.objective.value}",
            f"prior: {res.prior.value}",
            f"info_sense: {'maximize' if not args.minimize_info else 'minimize'}",
        ]
        rows = zip(grid.t_tilde, res.disagreement, res.stderr)
        _write(Path(args.out) / f"compare_n{args.n}_pminus{_num_tag(pm)}.csv",
               _csv(header, ["t_tilde", "disagreement", "stderr"], rows))
    return 0


def read_config(path) -> dict:
    """Pull the embedded RunConfig out of a JSON or CSV output file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        cfg = obj.get("config") or obj.get("metadata", {}).get("config")
        if cfg is None:
            raise InvalidInput(f"{path} carries no run configuration")
        return cfg
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise InvalidInput(f"{path} carries no run configuration")


def cmd_rerun(args, cfg: RunConfig) -> int:
    stored = read_config(args.file)
    if stored.get("format") != FORMAT_VERSION:
        raise InvalidInput(f"unsupported format {stored.get('format')!r}")
    return main(list(stored["argv"]))


# --- argument parsing -------------------------------------------------------


def _shared(p: argparse.ArgumentParser, prior_default: str = "degree", out_default: str | None = "."):
    p.add_argument("--prior", default=prior_default, help="uniform, degree, or a comma list")
    p.add_argument("--grid", default=DEFAULT_GRID, help="normalized time grid, log|lin:lo:hi:count")
    p.add_argument("--out", default=out_default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infocut", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a connected SBM graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p-minus", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--output", help="explicit file path (overrides --out)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cuts", help="cut, average/normalized/regularized cut of a partition")
    p.add_argument("graph")
    p.add_argument("partition")
    p.add_argument("--out", default=None, help="write cuts.json here instead of stdout")
    p.set_defaults(func=cmd_cuts)

    p = sub.add_parser("errors", help="E0/E1/E_inf/E curves of a bisection")
    p.add_argument("graph")
    p.add_argument("--partition", help="partition JSON; defaults to the graph's block_assignment")
    _shared(p, prior_default="uniform,degree")
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("search-estar", help="local-move search for E* minima over SBM seeds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p-minus", type=float, required=True)
    p.add_argument("--seeds", default="0")
    p.add_argument("--max-steps", type=int, default=10_000)
    _shared(p)
    p.set_defaults(func=cmd_search_estar)

    p = sub.add_parser("compare", help="disagreement between h_inf(t) and h_cut")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p-minus", required=True, help="one value or a comma list")
    p.add_argument("--n-graphs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="graph i uses seed + i")
    p.add_argument("--objective", choices=[o.value for o in CutObjective], default=None,
                   help="defaults to the cut matching the prior")
    p.add_argument("--minimize-info", action="store_true", help="flip the information descent sense")
    _shared(p, prior_default="uniform")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rerun", help="rerun the command recorded in an output file")
    p.add_argument("file")
    p.set_defaults(func=cmd_rerun)
    return parser


def _params(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(command=args.command, argv=argv, params=_params(args))
    try:
        return args.func(args, cfg)
    except InfocutError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
