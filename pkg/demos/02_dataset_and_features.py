"""
From traces to records to features
==================================

Turn a simulation trace into labeled traffic records and see which columns
PCA and SVD consider informative.
"""

# %%
import numpy as np

from fogshield.dataset import extract_records, train_test_split
from fogshield.features import pca_fit, rank_features, select_features, variance_contribution
from fogshield.network import DeploymentConfig
from fogshield.simulator import run_simulation

mix = {"Flooding": 0.1, "BlackHole": 0.1, "SelectiveForwarding": 0.1, "GrayHole": 0.1}
trace = run_simulation(DeploymentConfig(sensor_count=100, fog_count=4, rounds=300, seed=2), attack_mix=mix)
ds = extract_records(trace, sample_every=2)
print(len(ds), "records")
print(ds.class_counts())

# %%
# The label-restating columns (N_n, C_n, I_fn) never enter the feature matrix.
train, test = train_test_split(ds, 0.8, seed=0)
X, names = train.feature_matrix()
print(X.shape, names)

# %%
# Standardize first so that large-valued columns (ids, times) do not swamp
# the spectrum, then look at how fast the variance accumulates.
Z = (X - X.mean(axis=0)) / np.where(X.std(axis=0) > 0, X.std(axis=0), 1)
model = pca_fit(Z)
print([round(variance_contribution(model, y), 3) for y in range(1, len(names) + 1)])

# %%
# Rankings score original columns, so PCA and SVD picks can be merged.
for method in ("PCA", "SVD"):
    r = rank_features(X, method)
    print(method, [names[i] for i in r.top(5)])
print("multi20:", select_features(X, names, "multi20"))
