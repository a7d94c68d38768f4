"""
Four detectors side by side
===========================

Train the tree, boosted trees, logistic regression and linear SVM on the
same split, then compare their test reports and one-vs-rest ROC curves.
"""

# %%
import numpy as np

from fogshield.dataset import extract_records, train_test_split
from fogshield.evaluation import cross_validate, evaluate, roc_points
from fogshield.models import fit_model
from fogshield.network import DeploymentConfig
from fogshield.simulator import run_simulation

mix = {"Flooding": 0.1, "BlackHole": 0.1, "SelectiveForwarding": 0.1, "GrayHole": 0.1}
trace = run_simulation(DeploymentConfig(sensor_count=100, fog_count=4, rounds=400, seed=3), attack_mix=mix)
train, test = train_test_split(extract_records(trace, sample_every=4), 0.8, seed=0)
Xtr, names = train.feature_matrix()
Xte, _ = test.feature_matrix()
classes = train.class_names

# %%
# Smaller budgets than the reference run keep this quick.
params = {"tree": {}, "gbt": {"n_rounds": 30}, "logistic": {"epochs": 50}, "svm": {"epochs": 50}}
models = {k: fit_model(k, Xtr, train.y, names, classes, p) for k, p in params.items()}
for kind, m in models.items():
    rep = evaluate(test.y, m.predict(Xte), classes)
    print(f"{kind:<9} accuracy {rep.accuracy:.4f}  cost {rep.overall['cost']:.4f}")

# %%
print(evaluate(test.y, models["gbt"].predict(Xte), classes, title="boosted trees, test set").to_text())

# %%
# Area under the one-vs-rest ROC curve of each class.
for kind, m in models.items():
    scores = m.scores(Xte)
    aucs = [roc_points(scores[:, k], test.y == k)[1] for k in range(len(classes))]
    print(f"{kind:<9}", "  ".join(f"{a:.3f}" for a in aucs))

# %%
# Three-fold cross-validation of the tree on the training side only.
cv = cross_validate(Xtr, train.y, lambda X, y: fit_model("tree", X, y, names, classes), classes, K=3)
print([round(f.accuracy, 4) for f in cv.folds], round(cv.mean.accuracy, 4))
