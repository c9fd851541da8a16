"""Estimator-style front end to the bifurcation search.

``BifurcationSearch().fit(config)`` runs the eigencurve scan and stores the
accepted points; ``transform(thetas)`` evaluates the eigencurves of the fitted
configuration at arbitrary angles.  There is no training data here, so ``fit``
takes the configuration in place of ``X``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .bifurcation import (
    DEFAULT_GRID,
    continue_alpha,
    find_bifurcation_points,
    rescue_sweep,
)
from .config import Config, config_from_dict, load_config
from .dispersion import assemble_R, mode_data


def check_config(X) -> Config:
    """Accept a :class:`Config`, a mapping in the JSON schema, or a path to one."""
    if isinstance(X, Config):
        return X
    if isinstance(X, dict):
        return config_from_dict(X)
    if isinstance(X, (str, Path)):
        return load_config(X)
    raise TypeError(f"cannot interpret {type(X).__name__} as a configuration")


class BifurcationSearch(BaseEstimator):
    """Locate bifurcation points of a layered Beltrami flow.

    Parameters
    ----------
    grid : int
        Number of theta samples over [0, pi).
    verify : bool
        Check all parts of the existence assumption for each point.
    rescue : bool
        Rescale the tensions when only the lattice scan fails.
    alpha_target : array-like or None
        If given, search at alpha = 0 and continue every point to this vorticity.
    steps : int
        Continuation steps.
    """

    def __init__(self, grid: int = DEFAULT_GRID, verify: bool = True, rescue: bool = False,
                 alpha_target=None, steps: int = 10):
        self.grid = grid
        self.verify = verify
        self.rescue = rescue
        self.alpha_target = alpha_target
        self.steps = steps

    def fit(self, X, y=None):
        cfg = check_config(X)
        if not isinstance(self.grid, (int, np.integer)) or self.grid < 64:
            raise ValueError("grid must be an integer >= 64")
        fs, lat = cfg.fluid, cfg.lattice
        if self.alpha_target is not None:
            fs0 = fs.replace(alpha=np.zeros(fs.n + 1))
            found = find_bifurcation_points(fs0, lat, self.grid, verify=self.verify)
            points = [continue_alpha(fs0, lat, p, self.alpha_target, self.steps)
                      for p in found.points]
            fs = fs0.replace(alpha=np.asarray(self.alpha_target, dtype=float))
        else:
            found = find_bifurcation_points(fs, lat, self.grid, verify=self.verify)
            points = found.points
        if self.rescue:
            points = [self._rescue(fs, lat, p) for p in points]
        self.config_ = cfg
        self.fluid_ = fs
        self.scan_ = found.scan
        self.points_ = points
        self.rejections_ = found.rejections
        self.n_points_ = len(points)
        return self

    @staticmethod
    def _rescue(fs, lat, point):
        rep = point.report
        if rep is None or rep.ok or not (rep.part1["ok"] and rep.part2["ok"]):
            return point
        if not lat.is_symmetric():
            return point
        try:
            _, _, rescued = rescue_sweep(fs, lat, point)
        except RuntimeError:
            return point
        return rescued

    def transform(self, X):
        """Ascending eigenvalues of R(k1, theta) and R(k2, theta); shape (len(X), 2n)."""
        check_is_fitted(self, "points_")
        thetas = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_all_finite=True)[:, 0]
        fs, lat = self.fluid_, self.config_.lattice
        out = []
        for k in (lat.k1, lat.k2):
            R = assemble_R(fs, thetas, k, mode_data(fs, float(np.hypot(*k))))
            out.append(np.linalg.eigvalsh(R))
        return np.hstack(out)

    def accepted(self) -> list:
        """Points whose kernels are one-dimensional and whose nu matrix is invertible."""
        check_is_fitted(self, "points_")
        return [p for p in self.points_
                if p.report is None or (p.report.part1["ok"] and p.report.part2["ok"])]
