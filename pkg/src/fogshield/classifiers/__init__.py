"""From-scratch classifiers: entropy tree, gradient boosting, logistic regression, linear SVM."""
from .gbt import GbtModel, gbt_objective, gbt_predict, leaf_weight, train_gbt
from .linear import (DivergenceError, LogisticModel, SvmModel, logistic_loss_and_grad,
                     logistic_predict, sigmoid, svm_predict, train_logistic, train_svm)
from .tree import DecisionTreeModel, TreeNode, entropy, train_decision_tree, tree_predict

__all__ = [
    "DecisionTreeModel", "DivergenceError", "GbtModel", "LogisticModel", "SvmModel", "TreeNode",
    "entropy", "gbt_objective", "gbt_predict", "leaf_weight", "logistic_loss_and_grad",
    "logistic_predict", "sigmoid", "svm_predict", "train_decision_tree", "train_gbt",
    "train_logistic", "train_svm", "tree_predict",
]
