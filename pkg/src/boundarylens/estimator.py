"""scikit-learn estimator wrapper around the dense-classifier training loop.

The estimator keeps the usual fit/predict/get_params contract so it drops
into pipelines and model selection; the fitted attributes `network_spec_`
and `params_` feed directly into the curvature and alignment modules.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import network
from .datasets import LabeledDataset
from .losses import LossKind
from .training import InitOptions, OptimizerConfig, StopCriteria, make_init, train


class FeedForwardClassifier(BaseEstimator, ClassifierMixin):
    """Small fully-connected classifier with deterministic seeded training.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Widths of the hidden layers.
    activation : {"relu", "sigmoid"}
        Hidden activation; the output layer stays linear.
    optimizer : {"sgd", "adam", "adamw", "rmsprop"}
    learning_rate, batch_size, max_epochs : training loop settings.
    loss : {"cross_entropy", "nll"}
    reduction : {"mean", "sum"}
    loss_window, loss_tol, require_full_train_accuracy : stopping rule.
    init_scheme : {"normal", "adversarial", "large_norm", "wide_margin"}
    init_target_norm : parameter norm used by the large_norm scheme.
    random_state : seed for initialization, label redraws, and shuffling.
    """

    def __init__(self, hidden_layer_sizes=(32, 32), activation="relu",
                 optimizer="sgd", learning_rate=0.2, batch_size=64,
                 max_epochs=5000, loss="cross_entropy", reduction="mean",
                 loss_window=20, loss_tol=1e-5,
                 require_full_train_accuracy=True, init_scheme="normal",
                 init_target_norm=100.0, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.loss = loss
        self.reduction = reduction
        self.loss_window = loss_window
        self.loss_tol = loss_tol
        self.require_full_train_accuracy = require_full_train_accuracy
        self.init_scheme = init_scheme
        self.init_target_norm = init_target_norm
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        data = LabeledDataset(X, encoded, len(self.classes_))
        spec = network.NetworkSpec(
            (X.shape[1], *self.hidden_layer_sizes, len(self.classes_)),
            self.activation,
        )
        loss = LossKind(self.loss, self.reduction)
        seed = 0 if self.random_state is None else int(self.random_state)
        theta0 = make_init(
            self.init_scheme, spec, data, seed,
            InitOptions(target_norm=self.init_target_norm, loss=loss),
        )
        opt = OptimizerConfig(
            kind=self.optimizer, learning_rate=self.learning_rate,
            batch_size=self.batch_size, shuffle_seed=seed,
        )
        stop = StopCriteria(
            max_epochs=self.max_epochs, loss_window=self.loss_window,
            loss_tol=self.loss_tol,
            require_full_train_accuracy=self.require_full_train_accuracy,
        )
        self.params_, self.report_ = train(spec, theta0, data, opt, stop, loss=loss)
        self.network_spec_ = spec
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = self.report_.epochs_run
        return self

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return network.forward(self.network_spec_, self.params_, X)

    def predict_proba(self, X):
        return network.softmax(self.decision_function(X))

    def predict(self, X):
        logits = self.decision_function(X)
        return self.classes_[np.argmax(logits, axis=1)]
