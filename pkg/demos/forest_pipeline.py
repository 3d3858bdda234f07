"""
Learning the perturbation magnitude
===================================

Synthetic channel cases stand in for paired RANS and reference data.  A
forest is trained on three of them and scored on the fourth, and the
permutation importance ranks the features it leans on.
"""
import numpy as np

from anisouq.features import FEATURE_NAMES
from anisouq.forest import ForestParams, fit_forest, leave_one_case_out, permutation_importance, predict, rmse
from anisouq.synthetic import synthetic_cases

cases = synthetic_cases(seed=1)
for name, (X, y) in cases.items():
    print(f"{name:14s} n={len(y):4d}  p in [{y.min():.3f}, {y.max():.3f}]")

# %%
# Hold out the highest Reynolds number
held = "channel_2000"
X_train = np.vstack([X for c, (X, _) in cases.items() if c != held])
y_train = np.concatenate([y for c, (_, y) in cases.items() if c != held])
model = fit_forest(X_train, y_train, ForestParams(), seed=1, feature_names=FEATURE_NAMES)
X_test, y_test = cases[held]
print(f"\ntrain rmse {rmse(predict(model, X_train), y_train):.4f}")
print(f"test  rmse {rmse(predict(model, X_test, clip=True), y_test):.4f}")

# %%
# Which features matter.  The target was built from q2 and q8.
imp = permutation_importance(model, X_test, y_test, n_repeats=3, seed=1)
for j in np.argsort(imp)[::-1][:5]:
    print(f"{FEATURE_NAMES[j]:6s} {imp[j]:.4f}")

# %%
# Leave-one-case-out over the whole suite
for row in leave_one_case_out(cases, ForestParams(), seed=1):
    print(f"held out {row.held_out:14s} train {row.train_rmse:.4f}  test {row.test_rmse:.4f}")
