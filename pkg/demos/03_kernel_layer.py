"""
A kernel layer for non-linear fusion
====================================

If the label depends on how two scores interact (here: their signs agree),
no weighted sum of the scores ranks well. Turning every training example
into an RBF voter over the standardised score vectors fixes that.
"""

# %%
import numpy as np

from fusionq import kernel, metrics, mincq, selection, synth

spec = synth.SynthSpec(m=800, quality=(1, 1), noise=(0.1, 0.1), pattern="xor")
s = synth.generate(spec, 0)
train, test = s.take(np.arange(400)), s.take(np.arange(400, 800))

# %%
linear = mincq.train(train, 0.01)
rbf = selection.fit(train, "mincq", {"mu": 0.01, "gamma": 0.5})
for name, model in (("linear", linear), ("rbf", rbf)):
    h = mincq.vote_scores(model, test)
    print(f"{name:6s} risk {metrics.empirical_risk(h, test.labels):.3f}")

# %%
# The layer itself: one voter per anchor, values in (0, 1].
layer = kernel.fit(train, gamma=0.5, max_anchors=100, seed=0)
expanded = layer.transform(test)
print(expanded.scores.shape, expanded.scores.min() > 0, expanded.scores.max() <= 1)
