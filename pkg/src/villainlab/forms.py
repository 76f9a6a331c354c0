"""Discrete differential forms on a box and the calculus on them.

A k-form is stored as a dense array of shape (n_sites, C(d,k)) holding
the values on positively oriented k-cells whose base site lies in the
box; the form is zero on every other cell of Z^d.  Reversing a cell's
orientation negates its value.

Operations: gradient, Laplacian and its powers (with Dirichlet
zero-extension), exterior derivative d, codifferential d* (adjoint of d
for the cellwise scalar product), inner products and norms, lazy tensor
products of 2-forms, and a flat binary serialization.

Sign conventions: Delta u(x) = sum_{y~x} (u(y) - u(x)) equals
divergence(gradient(u)) exactly under zero-extension, so (-Delta) is the
positive operator and sum_x |grad^n phi(x)|^2 == (phi, (-Delta)^n phi).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import LatticeBox, OrientedCell, cell_boundary, component_index, component_tuples

__all__ = [
    "Form",
    "zeros",
    "delta",
    "random_form",
    "gradient",
    "divergence",
    "laplacian",
    "laplacian_power",
    "laplacian_power_ambient",
    "exterior_d",
    "codifferential_d_star",
    "inner_product",
    "norm_l1",
    "norm_l2",
    "norm_linf",
    "embed",
    "restrict",
    "common_box",
    "TensorProduct",
    "tensor_product",
    "gradient_tensor",
    "grad_tower_energy",
    "save_form",
    "load_form",
    "dump_text",
]


@dataclass
class Form:
    """Degree-graded field on the positively oriented k-cells of a box."""

    degree: int
    box: LatticeBox
    values: np.ndarray  # shape (n_sites, C(d, degree))

    def __post_init__(self):
        ncomp = len(component_tuples(self.box.dimension, self.degree))
        expected = (self.box.n_sites, ncomp)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape}, expected {expected}")

    @property
    def d(self) -> int:
        return self.box.dimension

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    def grid(self) -> np.ndarray:
        """View shaped (side,)*d + (n_components,)."""
        side = self.box.side
        return self.values.reshape((side,) * self.d + (self.n_components,))

    def copy(self) -> "Form":
        return Form(self.degree, self.box, self.values.copy())

    def value_on(self, cell: OrientedCell) -> float:
        """Value on an arbitrary oriented cell (zero outside the box)."""
        if cell.degree != self.degree:
            raise ValueError("cell degree mismatch")
        if not self.box.contains_site(cell.base):
            return self.values.dtype.type(0)
        ci = component_index(self.d, self.degree)[cell.directions]
        return cell.sign * self.values[self.box.site_index(cell.base), ci]

    def set_value(self, cell: OrientedCell, value) -> None:
        ci = component_index(self.d, self.degree)[cell.directions]
        self.values[self.box.site_index(cell.base), ci] = cell.sign * value

    def support_cells(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """(base site, directions) of cells carrying a nonzero value."""
        comps = component_tuples(self.d, self.degree)
        out = []
        for flat, ci in zip(*np.nonzero(self.values)):
            out.append((self.box.site_from_index(int(flat)), comps[ci]))
        return out

    def __add__(self, other: "Form") -> "Form":
        _check_compatible(self, other)
        return Form(self.degree, self.box, self.values + other.values)

    def __sub__(self, other: "Form") -> "Form":
        _check_compatible(self, other)
        return Form(self.degree, self.box, self.values - other.values)

    def __neg__(self) -> "Form":
        return Form(self.degree, self.box, -self.values)

    def __mul__(self, scalar) -> "Form":
        return Form(self.degree, self.box, self.values * scalar)

    __rmul__ = __mul__


def _check_compatible(f: Form, g: Form) -> None:
    if f.degree != g.degree:
        raise ValueError(f"degree mismatch: {f.degree} vs {g.degree}")
    if f.box != g.box:
        raise ValueError(f"box mismatch: {f.box} vs {g.box}")


def zeros(box: LatticeBox, degree: int, dtype=np.float64) -> Form:
    ncomp = len(component_tuples(box.dimension, degree))
    return Form(degree, box, np.zeros((box.n_sites, ncomp), dtype=dtype))


def delta(box: LatticeBox, cell: OrientedCell, dtype=None) -> Form:
    """Indicator form of a single oriented cell."""
    if dtype is None:
        dtype = np.int64
    f = zeros(box, cell.degree, dtype=dtype)
    f.set_value(cell, 1)
    return f


def random_form(box: LatticeBox, degree: int, rng: np.random.Generator,
                integer: bool = False, lo: int = -3, hi: int = 3) -> Form:
    ncomp = len(component_tuples(box.dimension, degree))
    shape = (box.n_sites, ncomp)
    if integer:
        vals = rng.integers(lo, hi + 1, size=shape).astype(np.int64)
    else:
        vals = rng.standard_normal(shape)
    return Form(degree, box, vals)


# ---------------------------------------------------------------------------
# shift helpers: forms are zero-extended outside their box
# ---------------------------------------------------------------------------

def _shift(grid: np.ndarray, axis: int, step: int) -> np.ndarray:
    """grid evaluated at (x + step*e_axis), zero beyond the box edge."""
    if step == 0:
        return grid
    out = np.zeros_like(grid)
    src = [slice(None)] * grid.ndim
    dst = [slice(None)] * grid.ndim
    if step > 0:
        src[axis] = slice(step, None)
        dst[axis] = slice(None, -step)
    else:
        src[axis] = slice(None, step)
        dst[axis] = slice(-step, None)
    out[tuple(dst)] = grid[tuple(src)]
    return out


def gradient(u: Form) -> Form:
    """Forward-difference gradient of a 0-form: result(x, i) = u(x+e_i) - u(x)
    with zero-extension outside the box.

    The result lives on a box enlarged by 1 so that edges reaching into the
    box from one step below keep their values (no support is cropped).
    """
    if u.degree != 0:
        raise ValueError("gradient expects a 0-form")
    ub = embed(u, u.box.half_side + 1)
    g = ub.grid()[..., 0]
    d = u.d
    comps = [_shift(g, ax, 1) - g for ax in range(d)]
    vals = np.stack([c.ravel() for c in comps], axis=1)
    return Form(1, ub.box, vals)


def divergence(h: Form) -> Form:
    """Adjoint of gradient up to sign: div(h)(x) = sum_i h(x;i) - h(x-e_i;i),
    on a box enlarged by 1."""
    if h.degree != 1:
        raise ValueError("divergence expects a 1-form")
    hb = embed(h, h.box.half_side + 1)
    g = hb.grid()
    d = h.d
    out = np.zeros(g.shape[:-1], dtype=h.values.dtype)
    for ax in range(d):
        out += g[..., ax] - _shift(g[..., ax], ax, -1)
    return Form(0, hb.box, out.reshape(-1, 1))


def laplacian(f: Form) -> Form:
    """Componentwise Delta f(x) = sum_{y~x} (f(y) - f(x)), Dirichlet extension."""
    g = f.grid()
    d = f.d
    out = (-2 * d) * g
    for ax in range(d):
        out = out + _shift(g, ax, 1) + _shift(g, ax, -1)
    return Form(f.degree, f.box, out.reshape(f.values.shape))


def laplacian_power(f: Form, n: int) -> Form:
    """n-fold application of the Dirichlet-extended Laplacian (the form is
    re-read as zero outside its box after every application)."""
    if n < 1:
        raise ValueError(f"power must be >= 1, got {n}")
    out = f
    for _ in range(n):
        out = laplacian(out)
    return out


def laplacian_power_ambient(f: Form, n: int) -> Form:
    """n-th power of the full-lattice Laplacian applied to the zero-extended
    form, without intermediate cropping; result on a box enlarged by n.

    This is the operator of the quadratic form sum_x |grad^n f(x)|^2:
    grad_tower_energy(f, n) == (-1)^n * (f, laplacian_power_ambient(f, n)).
    """
    if n < 1:
        raise ValueError(f"power must be >= 1, got {n}")
    out = embed(f, f.box.half_side + n)
    for _ in range(n):
        out = laplacian(out)
    return out


def exterior_d(f: Form) -> Form:
    """Exterior derivative of a 1- or 2-form; result lives on a box enlarged by 1.

    (df)(c) = sum of f over the oriented boundary of c.  The enlarged box
    is needed because d of a box-supported form can be nonzero on cells
    whose base site sits one step below the box.
    """
    if f.degree not in (1, 2):
        raise ValueError("exterior_d expects a 1-form or 2-form")
    d = f.d
    big = LatticeBox(d, f.box.half_side + 1)
    fb = embed(f, big.half_side)
    g = fb.grid()
    k = f.degree
    in_idx = component_index(d, k)
    out_comps = component_tuples(d, k + 1)
    pieces = []
    for dirs in out_comps:
        acc = np.zeros(g.shape[:-1], dtype=f.values.dtype)
        for a, i in enumerate(dirs):
            rest = dirs[:a] + dirs[a + 1:]
            ci = in_idx[rest]
            s = 1 if a % 2 == 0 else -1
            acc += s * (_shift(g[..., ci], i - 1, 1) - g[..., ci])
        pieces.append(acc.ravel())
    return Form(k + 1, big, np.stack(pieces, axis=1))


def codifferential_d_star(f: Form) -> Form:
    """Codifferential of a 2-form: (d*f)(e) = sum over faces whose boundary
    holds e, with incidence signs; result on a box enlarged by 1.

    Adjoint to exterior_d: (dh, k) = (h, d*k) for finite-support forms.
    """
    if f.degree != 2:
        raise ValueError("codifferential expects a 2-form")
    d = f.d
    big = LatticeBox(d, f.box.half_side + 1)
    fb = embed(f, big.half_side)
    g = fb.grid()
    in_idx = component_index(d, 2)
    pieces = []
    for i in range(1, d + 1):
        acc = np.zeros(g.shape[:-1], dtype=f.values.dtype)
        for j in range(1, d + 1):
            if j == i:
                continue
            dirs = (i, j) if i < j else (j, i)
            ci = in_idx[dirs]
            comp = g[..., ci]
            term = comp - _shift(comp, j - 1, -1)
            acc += term if i < j else -term
        pieces.append(acc.ravel())
    return Form(1, big, np.stack(pieces, axis=1))


def inner_product(f: Form, g: Form):
    """(f, g) = sum over positively oriented cells of f * g."""
    _check_compatible(f, g)
    return np.sum(f.values * g.values)


def norm_l1(f: Form):
    """Entrywise L1 over positively oriented cells."""
    return np.sum(np.abs(f.values))


def norm_l2(f: Form) -> float:
    return float(np.sqrt(np.sum(np.asarray(f.values, dtype=np.float64) ** 2)))


def norm_linf(f: Form):
    if f.values.size == 0:
        return f.values.dtype.type(0)
    return np.max(np.abs(f.values))


def embed(f: Form, half_side: int) -> Form:
    """Zero-pad a form into a larger box (same geometric values)."""
    if half_side < f.box.half_side:
        raise ValueError("cannot embed into a smaller box")
    if half_side == f.box.half_side:
        return f
    big = LatticeBox(f.d, half_side)
    out = zeros(big, f.degree, dtype=f.values.dtype)
    pad = half_side - f.box.half_side
    side = f.box.side
    sl = tuple(slice(pad, pad + side) for _ in range(f.d))
    out.grid()[sl + (slice(None),)] = f.grid()
    return out


def restrict(f: Form, half_side: int) -> Form:
    """Crop a form to a smaller box, discarding values of cells based outside."""
    if half_side > f.box.half_side:
        raise ValueError("cannot restrict to a larger box")
    if half_side == f.box.half_side:
        return f
    small = LatticeBox(f.d, half_side)
    pad = f.box.half_side - half_side
    sl = tuple(slice(pad, pad + small.side) for _ in range(f.d))
    vals = f.grid()[sl + (slice(None),)].reshape(small.n_sites, f.n_components)
    return Form(f.degree, small, vals.copy())


def common_box(f: Form, g: Form) -> tuple[Form, Form]:
    L = max(f.box.half_side, g.box.half_side)
    return embed(f, L), embed(g, L)


# ---------------------------------------------------------------------------
# tensor product of 2-forms and the gradient tower
# ---------------------------------------------------------------------------

class TensorProduct:
    """Lazy (k ⊗ l)(x, y) = outer(k(x), l(y)); never materialized globally."""

    def __init__(self, k: Form, l: Form):
        if k.degree != 2 or l.degree != 2:
            raise ValueError("tensor_product expects 2-forms")
        if k.box != l.box:
            raise ValueError("box mismatch")
        self.k = k
        self.l = l

    def __call__(self, x, y) -> np.ndarray:
        box = self.k.box
        kx = (self.k.values[box.site_index(x)] if box.contains_site(x)
              else np.zeros(self.k.n_components, dtype=self.k.values.dtype))
        ly = (self.l.values[box.site_index(y)] if box.contains_site(y)
              else np.zeros(self.l.n_components, dtype=self.l.values.dtype))
        return np.outer(kx, ly)


def tensor_product(k: Form, l: Form) -> TensorProduct:
    return TensorProduct(k, l)


def gradient_tensor(f: Form, order: int) -> np.ndarray:
    """order-fold forward-difference gradient with zero-extension.

    Returns an array of shape (pad_side,)*d + (d,)*order + (ncomp,) on a
    box enlarged by ``order`` so no support is cropped.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    big = embed(f, f.box.half_side + order)
    g = big.grid()
    d = f.d
    for _ in range(order):
        g = np.stack([_shift(g, ax, 1) - g for ax in range(d)], axis=d)
        # keep the new direction axis right after the spatial axes
    return g


def grad_tower_energy(f: Form, order: int) -> float:
    """sum_x |grad^order f(x)|^2 (squared Frobenius norm of the tensor).

    Equals (f, (-Delta)^order f) exactly under zero-extension; both paths
    are kept so one can test the other.
    """
    t = gradient_tensor(f, order)
    return float(np.sum(np.asarray(t, dtype=np.float64) ** 2))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = b"VLF1"
_DTYPES = {0: np.float64, 1: np.int64}
_DTYPE_CODES = {np.dtype(np.float64): 0, np.dtype(np.int64): 1}


def save_form(f: Form, path) -> None:
    """Flat binary layout: magic, degree, d, L, dtype code, then raw values
    in canonical cell order."""
    code = _DTYPE_CODES.get(f.values.dtype)
    if code is None:
        raise ValueError(f"unsupported dtype {f.values.dtype}")
    header = _MAGIC + struct.pack("<4i", f.degree, f.d, f.box.half_side, code)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values).tobytes())


def load_form(path) -> Form:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        degree, d, L, code = struct.unpack("<4i", fh.read(16))
        box = LatticeBox(d, L)
        ncomp = len(component_tuples(d, degree))
        vals = np.frombuffer(fh.read(), dtype=_DTYPES[code]).reshape(box.n_sites, ncomp)
    return Form(degree, box, vals.copy())


def dump_text(f: Form, limit: int | None = None) -> str:
    """Human-readable dump of nonzero cells, for debugging."""
    lines = [f"# form degree={f.degree} d={f.d} L={f.box.half_side}"]
    comps = component_tuples(f.d, f.degree)
    nz = list(zip(*np.nonzero(f.values)))
    if limit is not None:
        nz = nz[:limit]
    for flat, ci in nz:
        site = f.box.site_from_index(int(flat))
        lines.append(f"{site} {comps[ci]} {f.values[flat, ci]}")
    return "\n".join(lines)
