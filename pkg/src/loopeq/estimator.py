"""scikit-learn style wrapper around the equilibrium and loop-equation solvers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .equilibrium import solve_equilibrium
from .loop import choose_probe_m, extract_eg_derivatives, solve_hierarchy
from .model import build_field


def build_solved(upsilon, t, probe_m=None, g_max=2, laurent_depth=12, taylor_dirs=(), taylor_order=0,
                 jet_order=None):
    """Solve the equilibrium problem and the hierarchy up to ``g_max``.

    Returns (field, hierarchy). ``probe_m=None`` picks the probe count from the
    roots of h so that truncation of the vertex operator is below 1e-10.
    """
    t = tuple(t) if t is not None else (0.0,) * upsilon
    base = build_field(upsilon, t)
    if probe_m is None:
        probe_m = choose_probe_m(solve_equilibrium(base, check=False), laurent_depth)
    probe_m = max(int(probe_m), upsilon)
    jet_order = g_max if jet_order is None else max(int(jet_order), g_max)
    field = build_field(upsilon, t, probe_m, jet_order, tuple(taylor_dirs), taylor_order)
    return field, solve_hierarchy(field, g_max, laurent_depth)


def _points(Z) -> np.ndarray:
    Z = np.asarray(Z)
    if Z.ndim == 2:
        if Z.shape[1] != 1:
            raise ValueError("Z must be a column of complex points")
        Z = Z[:, 0]
    return np.atleast_1d(Z).astype(complex)


class OneCutLoopSolver(TransformerMixin, BaseEstimator):
    """Genus expansion of the one-cut resolvent for a polynomial external field.

    ``fit`` ignores its data arguments: the model is fixed by the couplings.
    ``transform(Z)`` returns the columns P_0(z) .. P_gmax(z) and
    ``predict(Z, N)`` the truncated series sum_g N^(-2g) P_g(z).
    """

    def __init__(self, upsilon=4, t=None, probe_m=None, g_max=2, laurent_depth=12,
                 taylor_dirs=(), taylor_order=0):
        self.upsilon = upsilon
        self.t = t
        self.probe_m = probe_m
        self.g_max = g_max
        self.laurent_depth = laurent_depth
        self.taylor_dirs = taylor_dirs
        self.taylor_order = taylor_order

    def fit(self, X=None, y=None):
        self.field_, self.hierarchy_ = build_solved(
            self.upsilon, self.t, self.probe_m, self.g_max, self.laurent_depth,
            self.taylor_dirs, self.taylor_order,
        )
        self.equilibrium_ = self.hierarchy_.eq
        self.eg_table_ = (
            extract_eg_derivatives(self.hierarchy_)
            if self.laurent_depth >= self.upsilon + 1 else None
        )
        self.n_features_out_ = self.g_max + 1
        return self

    def transform(self, Z):
        check_is_fitted(self, "hierarchy_")
        z = _points(Z)
        P = self.hierarchy_.pointwise(z)["P"]
        return np.stack([P[g][:, 0] for g in range(self.g_max + 1)], axis=1)

    def predict(self, Z, N):
        cols = self.transform(Z)
        w = float(N) ** (-2.0 * np.arange(cols.shape[1]))
        return cols @ w

    def laurent_table(self, g: int):
        check_is_fitted(self, "hierarchy_")
        return self.hierarchy_.laurent_table(g)

    def get_feature_names_out(self, input_features=None):
        return np.array([f"P_{g}" for g in range(self.g_max + 1)], dtype=object)
