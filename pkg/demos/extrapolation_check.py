"""
How far is a test case from the training data
=============================================

A kernel density over five standardized features scores each test point:
0 sits inside the training cloud, 1 lies far outside it.
"""
import numpy as np

from anisouq.extrapolation import correlation_report, default_indices, fit_kde, kde_distance
from anisouq.features import fit_scaler
from anisouq.forest import ForestParams, fit_forest, predict
from anisouq.synthetic import synthetic_cases

cases = synthetic_cases(seed=3)
train_ids = ["channel_550", "channel_1000"]
X_train = np.vstack([cases[c][0] for c in train_ids])
y_train = np.concatenate([cases[c][1] for c in train_ids])
stats = fit_scaler(X_train)
cols = default_indices()
kde = fit_kde(stats.transform(X_train)[:, cols])
model = fit_forest(X_train, y_train, ForestParams(n_trees=20), seed=3)

# %%
for case_id, (X, y) in cases.items():
    d = kde_distance(kde, stats.transform(X)[:, cols])
    err = np.abs(predict(model, X, clip=True) - y)
    print(f"{case_id:14s} mean d {d.mean():.3f}  mean |error| {err.mean():.4f}")

# %%
# Pooled over all cases: is a larger distance a warning of larger error?
X_all = np.vstack([X for X, _ in cases.values()])
y_all = np.concatenate([y for _, y in cases.values()])
d_all = kde_distance(kde, stats.transform(X_all)[:, cols])
print(correlation_report(d_all, np.abs(predict(model, X_all, clip=True) - y_all)))
