"""
Learning a majority vote with MinCq
===================================

Three noisy voters score the same examples; one of them is wired
backwards. MinCq learns signed weights that fix a first margin moment and
minimise the second one, which also minimises the C-bound on the vote's risk.
"""

# %%
import numpy as np

from fusionq import metrics, mincq, synth

spec = synth.SynthSpec(m=500, quality=(0.9, 0.9, 0.9), noise=(1, 1, 1),
                       flipped=(False, False, True))
train = synth.generate(spec, seed=0)
test = synth.generate(spec, seed=1)
print(train.scores[:5].round(2), train.labels[:5])

# %%
# The flipped voter gets a negative weight, so it still helps the vote.
model = mincq.train(train, mu=0.05)
print("signed weights q:", model.weights.q.round(4))

# %%
vote = mincq.vote_scores(model, test)
report = metrics.evaluate(vote, test)
print(f"test risk {report.risk:.3f}  C-bound {report.c_bound:.3f}  MAP {report.map:.3f}")

# %%
# The second moment can be read off the voter agreement matrix.
div = metrics.diversity_matrix(test)
print(np.isclose(metrics.second_moment_via_diversity(model.weights, div), report.second_moment))

# %%
# With only three voters, mu mostly rescales the weights; the sign pattern
# and the risk stay put. Beyond the voters' own margins there is no solution.
from fusionq.exceptions import InfeasibleMarginError

for mu in (0.01, 0.1, 0.3, 2.0):
    try:
        q = mincq.train(train, mu).weights.q
    except InfeasibleMarginError as exc:
        print(mu, "->", exc)
        continue
    print(mu, q.round(3), metrics.empirical_risk(test.scores @ q, test.labels))
