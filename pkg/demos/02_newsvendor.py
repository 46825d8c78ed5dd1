"""Newsvendor: likelihood-robust stock levels against the usual baselines.

Run with ``python3 demos/02_newsvendor.py``. Takes a second or two.
"""
from lro import ObservationSet
from lro.apps import DemandModel, NewsvendorInstance, compare_methods

for spec in ("trunc-normal:50,50", "trunc-exp:0.02"):
    model = DemandModel.parse(spec, 0, 200)
    obs = ObservationSet.from_samples(model.sample(1000, seed=7), support=model.grid())
    cmp = compare_methods(NewsvendorInstance(b=1.0, h_cost=1.0, observations=obs), true_pmf=model.pmf())

    print(f"\n== demand {spec}, 1000 draws, gamma = {cmp.gamma:.2f} ({cmp.dof} dof)")
    print(f"{'method':<16}{'stock':>6}{'true cost':>12}{'worst-case cost':>18}")
    for m, x in cmp.decisions.items():
        print(f"{m:<16}{x:>6}{cmp.true_cost[m]:>12.3f}{cmp.lro_cost[m]:>18.3f}")

    # how far each worst-case distribution sits from the data, in total variation
    print("TV to the empirical histogram:", {m: round(v, 3) for m, v in cmp.tv_to_empirical.items()})
