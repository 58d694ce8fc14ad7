"""
Sensitivity to the kNN size
===========================

``k`` controls how many neighbours each node keeps in the two kNN graphs.
Too few and the graphs drop useful structure; too many and they blur it.
Labels here live only in the attributes, so the kNN graphs are what the
model learns from.
"""
# %%
import numpy as np

from graphaug import SyntheticSpec, TrainConfig, generate_synthetic, make_splits
from graphaug.evaluation import sweep_k

graph = generate_synthetic(SyntheticSpec(correlation_mode="attributes"), np.random.default_rng(1))
splits = make_splits(graph, 20, 10, 20, np.random.default_rng(1))
result = sweep_k(graph, splits, TrainConfig(h1=64, h2=32, epochs=1000, patience=100), k_values=range(2, 10), seeds=[0, 1])

# %%
for k in range(2, 10):
    print(f"k={k}: mean test accuracy {result.mean_accuracy(k):.3f}")
