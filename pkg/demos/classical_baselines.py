"""Fit the three classical models to the reference statistics and compare.

ER takes the mean reference density as its edge probability, BA the
attachment count whose closed-form density is nearest, and WS fits k on density
and then sweeps the rewiring probability to match mean clustering. Each model's
ensemble is then scored against a mock Sequential ensemble standing in for
the real networks, the same way generated networks are scored against real ones.

    python3 demos/classical_baselines.py
"""

from socnetgen import GenerationSpec, generate_batch, metric_vector
from socnetgen.baselines import barabasi_albert, erdos_renyi, fit_ba_m, fit_er_p, fit_ws, watts_strogatz
from socnetgen.compare import ComparisonTable, summarize
from socnetgen.generators import batch_seeds
from socnetgen.llm import MockBackend
from socnetgen.metrics import pooled_normalized_degrees
from socnetgen.persona import bundled_personas
from socnetgen.references import ReferenceSet

N = 50

if __name__ == "__main__":
    refs = ReferenceSet.bundled()
    p = fit_er_p(refs.densities)
    m = fit_ba_m(N, refs.mean_density)
    k, ws_p = fit_ws(N, refs.mean_density, refs.mean_avg_clustering, trials_per_p=30, seed=0)
    print(f"fitted: ER p={p:.4f}, BA m={m}, WS k={k} p={ws_p:.2f}")

    seeds = batch_seeds(0, 30)
    models = {
        "Random graph": ([erdos_renyi(N, p, s) for s in seeds], ["density"]),
        "Preferential attachment": ([barabasi_albert(N, m, s) for s in seeds], ["density"]),
        "Small world": ([watts_strogatz(N, k, ws_p, s) for s in seeds],
                        ["density", "avg_clustering"]),
    }
    target = [r.graph for r in generate_batch(list(bundled_personas()), MockBackend(degree_bonus=2.0),
                                               GenerationSpec("sequential"), 30, seed=1)]
    target_mv = [metric_vector(g) for g in target]
    table = ComparisonTable()
    for name, (graphs, fitted) in models.items():
        row = summarize(target_mv, [metric_vector(g) for g in graphs], fitted, name,
                        pooled_normalized_degrees(target), pooled_normalized_degrees(graphs))
        table.rows.extend(row.rows)
    print(table.to_text())
