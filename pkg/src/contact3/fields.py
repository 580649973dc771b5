"""Vector fields, one-forms and (1,1)-tensor fields on a 3-dimensional chart.

Components are numpy object arrays of :class:`~contact3.expr.Expr`, so the
usual ``@`` and ``+`` work symbolically. Tensors carry mixed indices with the
row as the output (upper) index.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .expr import Compiled, Expr, as_expr, diff, parse

DIM = 3


def expr_array(items, shape=None, coords=None) -> np.ndarray:
    """Object array of Exprs from nested numbers / strings / Exprs."""
    shape = np.shape(np.asarray(items, dtype=object)) if shape is None else shape
    out = np.empty(shape, dtype=object)
    flat = np.asarray(items, dtype=object).reshape(-1)
    for i, item in enumerate(flat):
        if isinstance(item, str):
            item = parse(item, coords or ("x", "y", "z"))
        out.flat[i] = as_expr(item)
    return out


def zeros(shape) -> np.ndarray:
    return expr_array(np.zeros(shape), shape)


def identity() -> np.ndarray:
    return expr_array(np.eye(DIM), (DIM, DIM))


def grad_components(f: Expr, coords: Sequence[str]) -> np.ndarray:
    return expr_array([diff(f, c) for c in coords], (len(coords),))


class _Field:
    shape: tuple = ()

    def __init__(self, components, coords: Sequence[str] = ("x", "y", "z")):
        self.coords = tuple(coords)
        comps = components.components if isinstance(components, _Field) else components
        self.components = expr_array(comps, self.shape, self.coords)
        if len(self.coords) != DIM:
            raise ValueError("charts are 3-dimensional")

    def __repr__(self):
        return f"{type(self).__name__}({self.components.tolist()!r})"

    def __eq__(self, other):
        return type(self) is type(other) and all(
            a is b for a, b in zip(self.components.flat, other.components.flat))

    __hash__ = None

    def evaluate(self, points) -> np.ndarray:
        return Compiled(self.components, self.coords)(points)


class VectorField(_Field):
    shape = (DIM,)

    def __call__(self, f: Expr) -> Expr:
        return directional_derivative(self, f)

    def __add__(self, other):
        return VectorField(self.components + other.components, self.coords)

    def __sub__(self, other):
        return VectorField(self.components - other.components, self.coords)

    def __neg__(self):
        return VectorField(-self.components, self.coords)

    def scale(self, f) -> "VectorField":
        f = as_expr(f)
        return VectorField(np.array([f * c for c in self.components], dtype=object), self.coords)

    @classmethod
    def coordinate(cls, k: int, coords=("x", "y", "z")) -> "VectorField":
        comps = [0, 0, 0]
        comps[k] = 1
        return cls(comps, coords)


class OneForm(_Field):
    shape = (DIM,)

    def __call__(self, V: VectorField) -> Expr:
        return _dot(self.components, V.components)


class TensorField11(_Field):
    shape = (DIM, DIM)

    def __call__(self, V: VectorField) -> VectorField:
        return VectorField(self.components @ V.components, self.coords)

    def __matmul__(self, other):
        return TensorField11(self.components @ other.components, self.coords)

    def __add__(self, other):
        return TensorField11(self.components + other.components, self.coords)

    def __sub__(self, other):
        return TensorField11(self.components - other.components, self.coords)

    def scale(self, f) -> "TensorField11":
        f = as_expr(f)
        return TensorField11(np.vectorize(lambda c: f * c, otypes=[object])(self.components), self.coords)

    def trace(self) -> Expr:
        return self.components[0, 0] + self.components[1, 1] + self.components[2, 2]


def _dot(a, b) -> Expr:
    out = as_expr(0)
    for x, y in zip(a, b):
        out = out + x * y
    return out


def directional_derivative(V: VectorField, f: Expr) -> Expr:
    """V(f) = sum_i V^i df/dx^i."""
    return _dot(V.components, [diff(f, c) for c in V.coords])


def lie_bracket(V: VectorField, W: VectorField) -> VectorField:
    """[V, W]^i = V(W^i) - W(V^i)."""
    return VectorField(
        [directional_derivative(V, w) - directional_derivative(W, v)
         for v, w in zip(V.components, W.components)],
        V.coords,
    )


def lie_derivative_11(V: VectorField, T: TensorField11) -> TensorField11:
    """(L_V T)(X) = [V, TX] - T[V, X], in components

    (L_V T)^i_j = V(T^i_j) - T^k_j d_k V^i + T^i_k d_j V^k.
    """
    coords = V.coords
    dV = np.array([[diff(v, c) for c in coords] for v in V.components], dtype=object)  # dV[i, k] = d_k V^i
    Tc = T.components
    out = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            term = directional_derivative(V, Tc[i, j])
            for k in range(DIM):
                term = term - Tc[k, j] * dV[i, k] + Tc[i, k] * dV[k, j]
            out[i, j] = term
    return TensorField11(out, coords)


def exterior_derivative_components(omega: OneForm) -> np.ndarray:
    """(d omega)_ij = d_i omega_j - d_j omega_i (no 1/2 factor)."""
    c = omega.components
    out = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            out[i, j] = diff(c[j], omega.coords[i]) - diff(c[i], omega.coords[j])
    return out


def d_oneform(omega: OneForm):
    """Return an evaluator ``(X, Y, point) -> d omega(X, Y)``.

    ``X`` and ``Y`` are either VectorFields or plain component triples (taken
    as constant-coefficient fields). Convention:
    d omega(X, Y) = X(omega(Y)) - Y(omega(X)) - omega([X, Y]).
    """
    dcomp = Compiled(exterior_derivative_components(omega), omega.coords)

    def evaluate(X, Y, point):
        p = np.asarray(point, dtype=float).reshape(1, -1)
        xv = X.evaluate(p)[0] if isinstance(X, VectorField) else np.asarray(X, dtype=float)
        yv = Y.evaluate(p)[0] if isinstance(Y, VectorField) else np.asarray(Y, dtype=float)
        d = dcomp(p)[0]
        # pairwise form keeps d(X, X) = 0 exactly
        return float(sum(d[i, j] * (xv[i] * yv[j] - xv[j] * yv[i])
                         for i in range(DIM) for j in range(i + 1, DIM)))

    return evaluate
