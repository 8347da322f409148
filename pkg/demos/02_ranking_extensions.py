"""
Ranking-aware MinCq
===================

When the goal is a good ranking (MAP) rather than low risk, pairwise
slack terms punish every negative example scored above a positive one.
``mincq_pw`` uses one slack per (positive, negative) pair and ``mincq_pwav``
one slack per positive against the average negative.
"""

# %%
from fusionq import baselines, metrics, mincq, ranking, synth

spec = synth.SynthSpec(m=300, quality=(0.8, 0.5, 0.3, 0.2), noise=(1, 1, 1, 1),
                       noise_group=(0, 0, -1, -1), mixing=(0.7, 0.7, 0, 0),
                       positive_ratio=0.15)
train, test = synth.generate(spec, 2), synth.generate(spec, 3)

# %%
models = {
    "mincq": mincq.train(train, 0.01),
    "mincq_pw": ranking.train_pw(train, 0.01, beta=10.0),
    "mincq_pwav": ranking.train_pwav(train, 0.01, beta=10.0),
}
for name, model in models.items():
    h = mincq.vote_scores(model, test)
    print(f"{name:11s} MAP {metrics.mean_average_precision(h, test.labels):.3f} "
          f"pairwise loss {ranking.pairwise_loss(model, test):.4f}")

# %%
# Fixed fusion rules for comparison.
print("sum        ", metrics.mean_average_precision(baselines.sum_vote(test), test.labels))
print("map-weight ", metrics.mean_average_precision(
    baselines.map_weighted_vote(train, test), test.labels))
print("best-conf  ", metrics.mean_average_precision(baselines.best_confidence_vote(test), test.labels))

# %%
# For any fixed weighting the averaged slacks never add up to more than
# the pairwise ones.
q = models["mincq"].weights.q
print(ranking.slack_totals(q, test))
