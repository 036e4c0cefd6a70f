"""Piecewise Chebyshev functions on [0, 1] in the variable u = 1 - t.

The layout is uniform on u in [0.5, 1] and geometric (ratio 2) on
[u_min, 0.5], plus one last panel [0, u_min], with u_min = 1e-30 by
default.  Working in u keeps full relative precision next to t = 1,
where the singular ODE lives.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

DEGREE = 24


@lru_cache(maxsize=None)
def panel_edges(u_min=1e-30, uniform=8):
    geo = [0.5]
    while geo[-1] / 2 > u_min:
        geo.append(geo[-1] / 2)
    geo.append(u_min)
    edges = sorted(set([0.0] + geo + list(np.linspace(0.5, 1.0, uniform + 1))))
    return np.array(edges)


@lru_cache(maxsize=None)
def cheb_points(deg=DEGREE):
    j = np.arange(deg + 1)
    return np.cos((2 * j + 1) * np.pi / (2 * (deg + 1)))[::-1]


@dataclass(frozen=True)
class Layout:
    edges: np.ndarray
    deg: int = DEGREE

    @property
    def count(self):
        return self.edges.size - 1

    def nodes(self):
        """u-nodes, shape (panels, deg+1)."""
        x = cheb_points(self.deg)
        lo, hi = self.edges[:-1, None], self.edges[1:, None]
        return lo + 0.5 * (hi - lo) * (x[None, :] + 1.0)

    def fit(self, values):
        x = cheb_points(self.deg)
        V = C.chebvander(x, self.deg)
        return np.linalg.solve(V, np.asarray(values, float).T).T


def default_layout(deg=DEGREE, u_min=1e-30):
    return Layout(panel_edges(u_min), deg)


class PanelFunction:
    """f(u) stored as Chebyshev coefficients per panel (shape (panels, deg+1))."""

    def __init__(self, layout: Layout, coef):
        self.layout = layout
        self.coef = np.asarray(coef, float)

    @classmethod
    def from_values(cls, layout, values):
        return cls(layout, layout.fit(values))

    @classmethod
    def from_callable_u(cls, layout, f):
        return cls.from_values(layout, f(layout.nodes()))

    def values(self):
        return self.coef @ C.chebvander(cheb_points(self.layout.deg), self.layout.deg).T

    def eval_u(self, u):
        u = np.asarray(u, float)
        e = self.layout.edges
        idx = np.clip(np.searchsorted(e, u, side="right") - 1, 0, e.size - 2)
        lo, hi = e[idx], e[idx + 1]
        x = 2.0 * (u - lo) / (hi - lo) - 1.0
        c = self.coef[idx]
        # Clenshaw over the trailing coefficient axis
        b1 = np.zeros(u.shape)
        b2 = np.zeros(u.shape)
        for k in range(self.coef.shape[1] - 1, 0, -1):
            b1, b2 = 2 * x * b1 - b2 + c[..., k], b1
        out = x * b1 - b2 + c[..., 0]
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        """Value at t = 1 - u."""
        return self.eval_u(1.0 - np.asarray(t, float))

    def derivative_u(self):
        w = np.diff(self.layout.edges)[:, None]
        d = np.array([C.chebder(c) for c in self.coef]) * (2.0 / w)
        d = np.concatenate([d, np.zeros((d.shape[0], 1))], axis=1)
        return PanelFunction(self.layout, d)

    def integral_from_zero(self):
        """F(u) = int_0^u f, as values at the layout nodes."""
        w = np.diff(self.layout.edges)
        ints = np.array([C.chebint(c, lbnd=-1) for c in self.coef])
        x = cheb_points(self.layout.deg)
        part = (C.chebvander(x, self.layout.deg + 1) @ ints.T).T * (0.5 * w[:, None])
        full = C.chebval(1.0, ints.T) * 0.5 * w
        before = np.concatenate([[0.0], np.cumsum(full)[:-1]])
        return before[:, None] + part, float(np.sum(full))

    def integral_to_one(self):
        """G(u) = int_u^1 f, as values at the layout nodes."""
        w = np.diff(self.layout.edges)
        ints = np.array([C.chebint(c, lbnd=1) for c in self.coef])
        x = cheb_points(self.layout.deg)
        part = -(C.chebvander(x, self.layout.deg + 1) @ ints.T).T * (0.5 * w[:, None])
        full = -C.chebval(-1.0, ints.T) * 0.5 * w
        after = np.concatenate([np.cumsum(full[::-1])[::-1][1:], [0.0]])
        return after[:, None] + part
