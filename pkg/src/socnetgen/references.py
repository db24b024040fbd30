"""Reference (real) network collections and network file IO."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Graph, load_edge_list, threshold_positive
from .metrics import avg_clustering, density

NETWORK_SUFFIXES = (".edges", ".wedges", ".json")
_N_NODES = re.compile(r"^#\s*n_nodes\s*[:=]?\s*(\d+)\s*$")


@dataclass(frozen=True)
class ReferenceNetwork:
    name: str
    n_nodes: int
    n_edges: int
    edges_file: str | None = None

    @property
    def density(self) -> float:
        return 2.0 * self.n_edges / (self.n_nodes * (self.n_nodes - 1))


@dataclass(frozen=True)
class ReferenceSet:
    """Counts for every network, edge lists where available, mean clustering."""

    root: Path
    networks: tuple[ReferenceNetwork, ...]
    mean_avg_clustering: float | None = None

    @property
    def densities(self) -> list[float]:
        return [r.density for r in self.networks]

    @property
    def mean_density(self) -> float:
        return float(np.mean(self.densities))

    def graphs(self) -> dict[str, Graph]:
        """Graphs of the networks whose edge lists are present."""
        return {r.name: load_network(self.root / r.edges_file)
                for r in self.networks if r.edges_file}

    @classmethod
    def load(cls, root) -> "ReferenceSet":
        """Read ``stats.json`` if present, else measure every network file in ``root``."""
        root = Path(root)
        if not root.is_dir():
            raise FileNotFoundError(f"not a directory: {root}")
        stats = root / "stats.json"
        if stats.exists():
            d = json.loads(stats.read_text(encoding="utf-8"))
            nets = tuple(ReferenceNetwork(n["name"], int(n["n_nodes"]), int(n["n_edges"]),
                                          n.get("edges_file")) for n in d["networks"])
            return cls(root, nets, d.get("mean_avg_clustering"))
        nets, clustering = [], []
        for path in network_files(root):
            g = load_network(path)
            nets.append(ReferenceNetwork(path.stem, g.n_nodes, g.n_edges, path.name))
            clustering.append(avg_clustering(g))
        if not nets:
            raise FileNotFoundError(f"no network files in {root}")
        return cls(root, tuple(nets), float(np.mean(clustering)))

    @classmethod
    def bundled(cls) -> "ReferenceSet":
        return cls.load(bundled_reference_dir())


def bundled_reference_dir() -> Path:
    return Path(str(resources.files("socnetgen.data").joinpath("references")))


def network_files(root) -> list[Path]:
    root = Path(root)
    return sorted(p for p in root.iterdir()
                  if p.suffix in NETWORK_SUFFIXES and p.name not in ("stats.json", "manifest.json", "personas.json")
                  and not p.name.endswith(".turns.json") and not p.name.endswith(".ledger.json"))


def _declared_nodes(path: Path) -> int | None:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            m = _N_NODES.match(line.strip())
            if m:
                return int(m.group(1))
    return None


def load_network(path, n_nodes: int | None = None) -> Graph:
    """Load ``.edges`` (plain), ``.wedges`` (weighted, positive kept) or ``.json``.

    A ``# n_nodes K`` header in a plain file (or ``n_nodes``) keeps integer node
    labels as ids, so isolated nodes ``0..K-1`` survive the round trip.
    """
    path = Path(path)
    if path.suffix == ".json":
        d = json.loads(path.read_text(encoding="utf-8"))
        return Graph.from_edges(int(d["n_nodes"]), [tuple(e) for e in d["edges"]])
    if path.suffix == ".wedges":
        return threshold_positive(load_edge_list(path, "weighted"))
    g = load_edge_list(path)
    n = n_nodes if n_nodes is not None else _declared_nodes(path)
    if n is None:
        return g
    edges = [(g.label(u), g.label(v)) for u, v in g.edges]
    try:
        return Graph.from_edges(n, [(int(u), int(v)) for u, v in edges])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: labels are not node ids 0..{n - 1}") from exc


def save_network(graph: Graph, path) -> None:
    """Plain edge list with a ``# n_nodes`` header; node ids are written as is."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n_nodes {graph.n_nodes}\n")
        fh.writelines(f"{u} {v}\n" for u, v in graph.edges)


def mean_reference_density(graphs: Sequence[Graph]) -> float:
    return float(np.mean([density(g) for g in graphs]))
