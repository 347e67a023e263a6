"""
Estimator-style wrapper around :func:`reconstruct`.
"""

from dataclasses import fields

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ValidationError
from .forward import Dataset, SceneModel, predict_dataset
from .grid import ComplexField
from .optimization import ReconstructionConfig, loss_gradient, reconstruct


class FusionReconstructor(BaseEstimator):
    """Reconstruct an object from a multi-sensor :class:`Dataset`.

    Hyperparameters mirror :class:`ReconstructionConfig`; see there for
    their meaning.

    Attributes
    ----------
    object_ : ComplexField
        Reconstructed object after :meth:`fit`.
    probe_ : ComplexField
        Probe after :meth:`fit` (unchanged unless ``optimize_probe``).
    loss_history_ : list of LossReport

    Examples
    --------
    >>> est = FusionReconstructor(epochs=40, batch_size=1)  # doctest: +SKIP
    >>> est.fit(dataset, probe=probe).object_                # doctest: +SKIP
    """

    def __init__(self, epochs=40, learning_rate=0.01, adam_beta1=0.9, adam_beta2=0.999,
                 adam_epsilon=1e-8, gamma_initial=0.0, gamma_final=0.5, gamma_switch_epoch=20,
                 optimize_probe=False, rng_seed=0, batch_size=None, lr_decay=1.0,
                 learning_rate_after_switch=None, reset_optimizer_at_switch=False, init_noise=0.0):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.gamma_initial = gamma_initial
        self.gamma_final = gamma_final
        self.gamma_switch_epoch = gamma_switch_epoch
        self.optimize_probe = optimize_probe
        self.rng_seed = rng_seed
        self.batch_size = batch_size
        self.lr_decay = lr_decay
        self.learning_rate_after_switch = learning_rate_after_switch
        self.reset_optimizer_at_switch = reset_optimizer_at_switch
        self.init_noise = init_noise

    @classmethod
    def from_config(cls, config):
        return cls(**{f.name: getattr(config, f.name) for f in fields(config)})

    def to_config(self):
        return ReconstructionConfig(**{k: getattr(self, k) for k in ReconstructionConfig.field_names()})

    def fit(self, X, y=None, probe=None, initial_object=None):
        """Reconstruct from dataset ``X``.

        Parameters
        ----------
        X : Dataset
        y : ignored
        probe : ComplexField
            Known (or initial) probe on the dataset grid.
        initial_object : ComplexField, optional
            Starting guess; defaults to a transparent object.
        """
        if not isinstance(X, Dataset):
            raise ValidationError("X must be a Dataset")
        if probe is None:
            raise ValidationError("fit requires the probe")
        if initial_object is None:
            grid = X.grid.resized(*X.object_shape)
            initial_object = ComplexField(grid, np.ones(grid.shape))
        scene = SceneModel(initial_object, probe, X.scan, X.sensors, X.origin_px)
        result = reconstruct(X, scene, self.to_config())
        self.object_ = result.object
        self.probe_ = result.probe
        self.loss_history_ = result.history
        self.n_epochs_ = len(result.history)
        return self

    def _check_fitted(self):
        if not hasattr(self, "object_"):
            raise ValidationError("estimator is not fitted; call fit first")

    def predict(self, X):
        """Noiseless frames for the geometry of ``X`` from the fitted object."""
        self._check_fitted()
        scene = SceneModel(self.object_, self.probe_, X.scan, X.sensors, X.origin_px)
        return predict_dataset(scene)

    def score(self, X, y=None):
        """Negative final mixed loss on ``X``."""
        self._check_fitted()
        scene = SceneModel(self.object_, self.probe_, X.scan, X.sensors, X.origin_px)
        return -loss_gradient(scene, X, self.gamma_final).report.loss
