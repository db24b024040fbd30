"""Global, Local and Sequential network generation over a chat backend."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Graph
from .llm import (
    BackendError,
    CostLedger,
    ParseError,
    parse_friend_reply,
    parse_global_reply,
    parse_reasoned_reply,
    render_global_prompt,
    render_local_prompt,
    render_sequential_prompt,
)
from .persona import Persona

METHODS = ("global", "local", "sequential")
VIEWS = ("degree", "friend_list")


class GenerationError(RuntimeError):
    """A turn kept failing after the retry cap was exhausted."""

    def __init__(self, message: str, ledger: CostLedger | None = None, turns=()):
        super().__init__(message)
        self.ledger = ledger
        self.turns = list(turns)


class BatchGenerationError(RuntimeError):
    """One batch member failed; ``results`` holds every member that completed."""

    def __init__(self, index: int, results: list, cause: Exception):
        super().__init__(f"network {index} failed: {cause}")
        self.index = index
        self.results = results
        self.cause = cause


@dataclass(frozen=True)
class GenerationSpec:
    """What to generate.

    ``lam`` switches on the target-count variant: each subject is asked to choose
    exactly ``max(1, round(x))`` friends with ``x ~ Exponential(lam)``.
    ``subset_size`` offers each subject a uniform random subset of the others.
    """

    method: str = "sequential"
    network_view: str | None = None
    lam: float | None = None
    subset_size: int | None = None
    reasons: bool = False
    retry_cap: int = 5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.method == "sequential":
            if self.network_view is None:
                object.__setattr__(self, "network_view", "degree")
            elif self.network_view not in VIEWS:
                raise ValueError(f"network_view must be one of {VIEWS}")
        elif self.network_view is not None:
            raise ValueError("network_view only applies to the sequential method")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.subset_size is not None and self.subset_size < 1:
            raise ValueError("subset_size must be positive")
        if self.method == "global" and (self.lam or self.subset_size or self.reasons):
            raise ValueError("target counts, subsets and reasons need a per-persona method")
        if self.retry_cap < 0:
            raise ValueError("retry_cap must be non-negative")


@dataclass(frozen=True)
class TurnRecord:
    subject: int | None
    offered: tuple[int, ...]
    chosen: tuple[int, ...]
    shown: tuple | None = None
    target: int | None = None
    reasons: dict[int, str] | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.shown is not None:
            d["shown"] = [list(x) if isinstance(x, tuple) else x for x in self.shown]
        if self.reasons is not None:
            d["reasons"] = {str(k): v for k, v in self.reasons.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TurnRecord":
        shown = d.get("shown")
        if shown is not None:
            shown = tuple(tuple(x) if isinstance(x, list) else x for x in shown)
        reasons = d.get("reasons")
        return cls(
            d["subject"], tuple(d["offered"]), tuple(d["chosen"]), shown, d.get("target"),
            None if reasons is None else {int(k): v for k, v in reasons.items()},
        )


@dataclass
class GenerationResult:
    graph: Graph
    ledger: CostLedger
    spec: GenerationSpec
    seed: int
    assignment_order: tuple[int, ...] = ()
    turns: list[TurnRecord] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n_nodes": self.graph.n_nodes,
            "edges": [list(e) for e in self.graph.edges],
            "ledger": self.ledger.to_dict(),
            "spec": asdict(self.spec),
            "seed": self.seed,
            "assignment_order": list(self.assignment_order),
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_json(cls, d: dict) -> "GenerationResult":
        return cls(
            Graph.from_edges(d["n_nodes"], [tuple(e) for e in d["edges"]]),
            CostLedger.from_dict(d["ledger"]),
            GenerationSpec(**d["spec"]),
            d["seed"],
            tuple(d["assignment_order"]),
            [TurnRecord.from_dict(t) for t in d["turns"]],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")


def sample_target_counts(lam: float, n: int, seed) -> list[int]:
    """``n`` draws of ``max(1, round(x))`` with ``x ~ Exponential(rate=lam)``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.random.default_rng(seed).exponential(1.0 / lam, size=n)
    return [int(c) for c in np.maximum(1, np.rint(x))]


def _check_personas(personas: Sequence[Persona]) -> list[Persona]:
    personas = list(personas)
    if len(personas) < 2:
        raise ValueError("need at least two personas")
    for i, p in enumerate(personas):
        if p.id != i:
            raise ValueError("persona ids must be 0..N-1 in order")
    return personas


def _attempt(backend, system, user, ledger, parse, retry_cap, what):
    last = None
    for _ in range(retry_cap + 1):
        try:
            reply = backend.complete(system, user)
            parsed = parse(reply.text)
        except (ParseError, BackendError) as exc:
            ledger.record_failure()
            last = exc
            continue
        ledger.record_success(reply)
        return parsed
    raise GenerationError(f"{what} failed after {retry_cap + 1} attempts: {last}", ledger)


def generate_global(personas: Sequence[Persona], backend, seed: int,
                    spec: GenerationSpec | None = None) -> GenerationResult:
    """Ask for the whole network in one prompt, personas listed in random order."""
    spec = spec or GenerationSpec("global")
    personas = _check_personas(personas)
    rng = np.random.default_rng(seed)
    order = [int(i) for i in rng.permutation(len(personas))]
    system, user = render_global_prompt(personas, order)
    ledger = CostLedger(expected_turns=1)
    valid = range(len(personas))
    pairs = _attempt(backend, system, user, ledger, lambda t: parse_global_reply(t, valid),
                     spec.retry_cap, "global prompt")
    graph = Graph.from_edges(len(personas), pairs)
    turn = TurnRecord(None, tuple(order), tuple(sorted({x for e in pairs for x in e})))
    return GenerationResult(graph, ledger, spec, seed, (), [turn])


def _generate_per_persona(personas, backend, spec: GenerationSpec, seed: int) -> GenerationResult:
    personas = _check_personas(personas)
    n = len(personas)
    if spec.subset_size is not None and spec.subset_size >= n:
        raise ValueError("subset_size must be smaller than the number of personas")
    rng = np.random.default_rng(seed)
    assignment = [int(i) for i in rng.permutation(n)]
    targets = None
    if spec.lam is not None:
        targets = sample_target_counts(spec.lam, n, int(rng.integers(2**63)))
    adj: list[set[int]] = [set() for _ in range(n)]
    ledger = CostLedger(expected_turns=n)
    turns: list[TurnRecord] = []
    sequential = spec.method == "sequential"

    for subject in assignment:
        others = [i for i in range(n) if i != subject]
        if spec.subset_size is not None:
            others = sorted(int(i) for i in rng.choice(others, spec.subset_size, replace=False))
        listing = [int(i) for i in rng.permutation(len(others))]
        offered = tuple(others[i] for i in listing)
        others_p = [personas[i] for i in others]
        target = None
        if targets is not None:
            target = min(targets[subject], len(others))
        shown = None
        if sequential:
            if spec.network_view == "degree":
                info = {i: len(adj[i]) for i in others}
            else:
                info = {i: tuple(sorted(adj[i])) for i in others}
            shown = tuple(info[i] for i in offered)
            system, user = render_sequential_prompt(
                personas[subject], others_p, spec.network_view, info, listing, target, spec.reasons)
        else:
            system, user = render_local_prompt(personas[subject], others_p, listing, target,
                                               spec.reasons)

        if spec.reasons:
            def parse(text, offered=offered, subject=subject, target=target):
                return parse_reasoned_reply(text, offered, subject, target)
        else:
            def parse(text, offered=offered, subject=subject, target=target):
                return parse_friend_reply(text, offered, subject, target)

        try:
            parsed = _attempt(backend, system, user, ledger, parse, spec.retry_cap,
                              f"turn for persona {subject}")
        except GenerationError as exc:
            exc.turns = turns
            raise
        chosen = tuple(sorted(parsed))
        for j in chosen:
            adj[subject].add(j)
            adj[j].add(subject)
        turns.append(TurnRecord(subject, offered, chosen, shown, target,
                                dict(parsed) if spec.reasons else None))

    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return GenerationResult(Graph.from_edges(n, edges), ledger, spec, seed, tuple(assignment), turns)


def generate_local(personas: Sequence[Persona], backend, seed: int,
                   spec: GenerationSpec | None = None) -> GenerationResult:
    """One turn per persona in random order; an edge exists if either side chose it."""
    spec = spec or GenerationSpec("local")
    if spec.method != "local":
        raise ValueError("spec.method must be 'local'")
    return _generate_per_persona(personas, backend, spec, seed)


def generate_sequential(personas: Sequence[Persona], backend, spec: GenerationSpec,
                        seed: int) -> GenerationResult:
    """Like :func:`generate_local`, but each prompt shows the network built so far."""
    if spec.method != "sequential":
        raise ValueError("spec.method must be 'sequential'")
    return _generate_per_persona(personas, backend, spec, seed)


def generate(personas: Sequence[Persona], backend, spec: GenerationSpec, seed: int) -> GenerationResult:
    if spec.method == "global":
        return generate_global(personas, backend, seed, spec)
    if spec.method == "local":
        return generate_local(personas, backend, seed, spec)
    return generate_sequential(personas, backend, spec, seed)


def batch_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0] >> 1) for c in children]


def generate_batch(personas: Sequence[Persona], backend, spec: GenerationSpec, count: int,
                   seed: int, max_workers: int = 1) -> list[GenerationResult]:
    """``count`` independent networks over the same personas.

    Member seeds are derived from ``seed``; a failing member raises
    :class:`BatchGenerationError` carrying the members that did finish.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    seeds = batch_seeds(seed, count)
    results: list[GenerationResult | None] = [None] * count
    errors: dict[int, Exception] = {}

    def run(i):
        try:
            results[i] = generate(personas, backend, spec, seeds[i])
        except (GenerationError, BackendError) as exc:
            errors[i] = exc

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            list(pool.map(run, range(count)))
    else:
        for i in range(count):
            run(i)
            if errors:
                break
    if errors:
        first = min(errors)
        raise BatchGenerationError(first, [r for r in results if r is not None], errors[first])
    return results  # type: ignore[return-value]


def replay_union(n_nodes: int, turns: Sequence[TurnRecord]) -> Graph:
    """Graph implied by a turn log under the either-side-chose rule."""
    return Graph.from_edges(n_nodes, [(t.subject, c) for t in turns for c in t.chosen])
