"""Command-line entry point: ``socnetgen {personas,generate,eval,compare}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    WS_P_GRID,
    barabasi_albert,
    erdos_renyi,
    fit_ba_m,
    fit_er_p,
    fit_ws_k,
    watts_strogatz,
    ws_clustering_curve,
)
from .compare import COLUMNS, ComparisonTable, summarize
from .generators import (
    BatchGenerationError,
    GenerationError,
    GenerationSpec,
    batch_seeds,
    generate_batch,
)
from .graph import EdgeListError
from .homophily import LabeledGraph, homophily_report, pairwise_csv, pairwise_ratio
from .llm import BackendConfig, BackendError, MockBackend, OpenAIChatBackend
from .metrics import (
    METRIC_NAMES,
    metric_vector,
    normalized_degrees,
    pooled_degree_histogram,
)
from .persona import (
    ConfigError,
    DemographicConfig,
    InterestGenerationError,
    PersonaSet,
    attach_interests,
    bundled_personas,
    project,
    sample_personas,
    shuffle_demographics,
)
from .references import ReferenceSet, load_network, network_files, save_network

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3
LLM_METHODS = ("global", "local", "sequential")
BASELINE_METHODS = ("er", "ba", "ws")
VIEW_FLAGS = {"degree": "degree", "friends": "friend_list"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ helpers

def _write_json(path: Path, data) -> None:
    """Write JSON atomically (temp file, then rename)."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _persona_digest(pset: PersonaSet) -> str:
    canon = json.dumps(pset.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _emit_personas(pset: PersonaSet, out) -> None:
    if out:
        pset.save(out)
    else:
        sys.stdout.write(json.dumps(pset.to_json(), indent=1) + "\n")


def _load_config(path) -> DemographicConfig:
    return DemographicConfig.load(path) if path else DemographicConfig.bundled()


def _make_backend(args):
    if args.backend == "mock":
        return MockBackend(seed=args.mock_seed, degree_bonus=args.mock_degree_bonus)
    config = BackendConfig.load(args.backend_config) if args.backend_config else BackendConfig()
    return OpenAIChatBackend(config)


def _personas_for(args) -> tuple[PersonaSet, dict]:
    if args.personas:
        pset = PersonaSet.load(args.personas)
        return pset, {"personas_file": str(args.personas)}
    if args.n_personas:
        config = _load_config(args.config)
        pset = sample_personas(config, args.n_personas, args.seed)
        return pset, {"personas_sampled": args.n_personas, "config_hash": config.digest}
    return bundled_personas(), {"personas": "bundled"}


# ----------------------------------------------------------------- personas

def cmd_personas(args) -> int:
    if args.action == "sample":
        pset = sample_personas(_load_config(args.config), args.n, args.seed)
    else:
        if not args.input:
            raise UsageError(f"personas {args.action} needs --in")
        pset = PersonaSet.load(args.input)
        if args.action == "shuffle":
            pset = shuffle_demographics(pset, args.seed)
        elif args.action == "project":
            if not args.vars:
                raise UsageError("personas project needs --vars")
            pset = project(pset, [v.strip() for v in args.vars.split(",") if v.strip()])
        else:
            backend = _make_backend(args)
            pset = attach_interests(pset, backend, args.seed)
    _emit_personas(pset, args.out)
    return EXIT_OK


# ----------------------------------------------------------------- generate

def _baseline_params(args, n: int) -> dict:
    refs = ReferenceSet.load(args.fit) if args.fit else ReferenceSet.bundled()
    params: dict = {"references": str(refs.root)}
    if args.method == "er":
        params["p"] = args.p if args.p is not None else fit_er_p(refs.densities)
    elif args.method == "ba":
        params["m"] = args.m if args.m is not None else fit_ba_m(n, refs.mean_density)
    else:
        k = args.k if args.k is not None else fit_ws_k(n, refs.mean_density)
        p = args.p
        if p is None:
            if refs.mean_avg_clustering is None:
                raise ValueError("reference set has no mean clustering to fit p on")
            curve = ws_clustering_curve(n, k, args.seed, args.fit_trials)
            p = WS_P_GRID[int(np.argmin(np.abs(curve - refs.mean_avg_clustering)))]
        params.update(k=k, p=float(p))
    return params


def _baseline_graph(method: str, n: int, params: dict, seed: int):
    if method == "er":
        return erdos_renyi(n, params["p"], seed)
    if method == "ba":
        return barabasi_albert(n, params["m"], seed)
    return watts_strogatz(n, params["k"], params["p"], seed)


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    manifest: dict = {
        "version": __version__,
        "argv": args.argv,
        "method": args.method,
        "seed": args.seed,
        "count": args.count,
        "networks": [],
    }
    if args.method in BASELINE_METHODS:
        for flag in ("view", "lam", "subset"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag.replace('lam', 'lambda')} does not apply to baselines")
        n = args.n_personas or len(bundled_personas())
        params = _baseline_params(args, n)
        manifest.update(n_nodes=n, params=params)
        for i, s in enumerate(batch_seeds(args.seed, args.count)):
            g = _baseline_graph(args.method, n, params, s)
            name = f"net_{i:03d}"
            save_network(g, out / f"{name}.edges")
            manifest["networks"].append({"name": name, "seed": s, "n_edges": g.n_edges})
        manifest["status"] = "complete"
        _write_json(out / "manifest.json", manifest)
        print(f"wrote {args.count} {args.method} networks to {out}")
        return EXIT_OK

    if args.method != "sequential" and args.view is not None:
        raise UsageError("--view only applies to --method sequential")
    pset, source = _personas_for(args)
    spec = GenerationSpec(
        method=args.method,
        network_view=VIEW_FLAGS[args.view] if args.view else None,
        lam=args.lam,
        subset_size=args.subset,
        reasons=args.reasons,
        retry_cap=args.retry_cap,
    )
    pset.save(out / "personas.json")
    manifest.update(source)
    manifest.update(
        n_nodes=len(pset),
        personas_hash=_persona_digest(pset),
        spec={"method": spec.method, "network_view": spec.network_view, "lam": spec.lam,
              "subset_size": spec.subset_size, "reasons": spec.reasons,
              "retry_cap": spec.retry_cap},
        backend=args.backend,
    )
    if args.backend == "mock":
        manifest["mock"] = {"seed": args.mock_seed, "degree_bonus": args.mock_degree_bonus}
    elif args.backend_config:
        manifest["backend_config_hash"] = _file_digest(args.backend_config)

    backend = _make_backend(args)
    failure = None
    try:
        results = generate_batch(list(pset), backend, spec, args.count, args.seed, args.workers)
    except BatchGenerationError as exc:
        results, failure = exc.results, exc
    finally:
        if hasattr(backend, "close"):
            backend.close()

    for i, r in enumerate(results):
        name = f"net_{i:03d}"
        save_network(r.graph, out / f"{name}.edges")
        _write_json(out / f"{name}.turns.json",
                    {"assignment_order": list(r.assignment_order),
                     "turns": [t.to_dict() for t in r.turns]})
        _write_json(out / f"{name}.ledger.json", r.ledger.to_dict())
        manifest["networks"].append({"name": name, "seed": r.seed, "n_edges": r.graph.n_edges})
    manifest["status"] = "complete" if failure is None else "failed"
    if failure is not None:
        manifest["error"] = str(failure)
    _write_json(out / "manifest.json", manifest)
    if failure is not None:
        print(f"error: {failure}; {len(results)} completed networks kept in {out}", file=sys.stderr)
        return EXIT_BACKEND
    print(f"wrote {len(results)} {args.method} networks to {out}")
    return EXIT_OK


# --------------------------------------------------------------------- eval

def _load_networks(source, n_nodes=None) -> dict:
    """Name -> graph for a directory of network files, or the bundled references."""
    if source == "bundled":
        return ReferenceSet.bundled().graphs()
    root = Path(source)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {root}")
    graphs = {p.stem: load_network(p, n_nodes) for p in network_files(root)}
    if not graphs:
        raise FileNotFoundError(f"no network files in {root}")
    return graphs


def _eval(graphs: dict, seed: int) -> dict:
    return {name: metric_vector(g, seed) for name, g in graphs.items()}


def cmd_eval(args) -> int:
    pset = PersonaSet.load(args.personas) if args.personas else None
    graphs = _load_networks(args.networks, len(pset) if pset else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    vectors = _eval(graphs, args.seed)
    hist = pooled_degree_histogram(list(graphs.values()))
    report: dict = {
        "networks": args.networks,
        "seed": args.seed,
        "metrics": {k: v.to_dict() for k, v in vectors.items()},
        "degree_histogram": hist.to_dict(),
    }
    if args.networks == "bundled":
        refs = ReferenceSet.bundled()
        report["reference_counts"] = [
            {"name": r.name, "n_nodes": r.n_nodes, "n_edges": r.n_edges, "density": r.density}
            for r in refs.networks]
    lines = ["network," + ",".join(METRIC_NAMES)]
    for name, v in vectors.items():
        d = v.to_dict()
        lines.append(name + "," + ",".join(repr(float(d[m])) for m in METRIC_NAMES))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "degree_histogram.csv").write_text(hist.to_csv(), encoding="utf-8")

    if pset is not None:
        homophily = {}
        for name, g in graphs.items():
            if g.n_nodes != len(pset):
                raise ValueError(f"{name}: {g.n_nodes} nodes but {len(pset)} personas")
            lg = LabeledGraph.from_personas(g, list(pset))
            homophily[name] = homophily_report(lg, args.min_group).to_dict()
            for var in lg.labels:
                try:
                    groups, mat = pairwise_ratio(lg, var, args.min_group)
                except ValueError:
                    continue
                (out / f"{name}.pairwise_{var}.csv").write_text(pairwise_csv(groups, mat),
                                                                encoding="utf-8")
        report["homophily"] = homophily
    _write_json(out / "report.json", report)
    print(f"evaluated {len(graphs)} networks; report in {out}")
    return EXIT_OK


# ------------------------------------------------------------------ compare

def _ensemble(source, seed):
    graphs = _load_networks(source)
    vectors = list(_eval(graphs, seed).values())
    degrees = np.concatenate([normalized_degrees(g) for g in graphs.values()])
    return vectors, degrees


def cmd_compare(args) -> int:
    fitted = [f.strip() for f in args.fitted.split(",") if f.strip()] if args.fitted else []
    unknown = set(fitted) - set(COLUMNS)
    if unknown:
        raise UsageError(f"unknown --fitted metrics {sorted(unknown)}; choose from {COLUMNS}")
    real, real_deg = _ensemble(args.real, args.seed)
    if len(real) < 2:
        raise ValueError(f"need at least two real networks, found {len(real)} in {args.real}")
    table = ComparisonTable()
    for gen_dir in args.gen:
        gen, gen_deg = _ensemble(gen_dir, args.seed)
        name = Path(gen_dir).name or str(gen_dir)
        table.rows.extend(summarize(real, gen, fitted, name, real_deg, gen_deg).rows)
    text = table.to_text()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "comparison.json", table.to_dict())
        (out / "comparison.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="socnetgen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def backend_flags(p):
        p.add_argument("--backend", choices=("mock", "http"), default="mock")
        p.add_argument("--backend-config", help="JSON file of HTTP backend settings")
        p.add_argument("--mock-seed", type=int, default=0)
        p.add_argument("--mock-degree-bonus", type=float, default=0.0)

    p = sub.add_parser("personas", help="sample, shuffle, project or enrich persona sets")
    p.add_argument("action", choices=("sample", "shuffle", "project", "interests"))
    p.add_argument("--config", help="demographic config JSON (default: bundled)")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="input", help="input persona JSON")
    p.add_argument("--vars", help="comma-separated variables to keep")
    p.add_argument("--out", help="output file (default: stdout)")
    backend_flags(p)
    p.set_defaults(func=cmd_personas)

    p = sub.add_parser("generate", help="generate a batch of networks")
    p.add_argument("--method", required=True, choices=LLM_METHODS + BASELINE_METHODS)
    p.add_argument("--view", choices=tuple(VIEW_FLAGS))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--subset", type=int)
    p.add_argument("--reasons", action="store_true")
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--personas", help="persona JSON (default: bundled 50)")
    p.add_argument("--n-personas", type=int, help="sample this many personas instead")
    p.add_argument("--config", help="demographic config for --n-personas")
    p.add_argument("--retry-cap", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--fit", help="reference directory for baseline fits (default: bundled)")
    p.add_argument("--fit-trials", type=int, default=30)
    p.add_argument("--p", type=float, help="explicit ER/WS probability")
    p.add_argument("--m", type=int, help="explicit BA attachment count")
    p.add_argument("--k", type=int, help="explicit WS neighbour count")
    p.add_argument("--out", default="networks")
    backend_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="structural metrics and homophily of a network directory")
    p.add_argument("--networks", required=True, help="directory, or 'bundled'")
    p.add_argument("--personas", help="persona JSON labelling the nodes")
    p.add_argument("--min-group", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="Louvain seed")
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="compare generated ensembles with real networks")
    p.add_argument("--real", required=True, help="directory, or 'bundled'")
    p.add_argument("--gen", required=True, action="append", help="generated directory (repeatable)")
    p.add_argument("--fitted", help=f"comma-separated fitted metrics from {','.join(COLUMNS)}")
    p.add_argument("--seed", type=int, default=0, help="Louvain seed")
    p.add_argument("--out", help="directory for comparison.json and comparison.txt")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BackendError, GenerationError, InterestGenerationError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ConfigError, EdgeListError, FileNotFoundError, KeyError, ValueError,
            json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
