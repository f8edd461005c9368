"""Representable right-hand sides: piecewise-constant vectors plus atom values.

Members of the weighted L2 space are handled through a concrete family:
constant vector values on finitely many pieces of a window, together with an
explicit value at every atom of the weight there.  The atom values matter
because the weight sees single points; between atoms only the piece values
enter any integral.
"""

from __future__ import annotations

import numpy as np

from .coefficients import MeasureMatrix
from .errors import DimensionMismatch, NotRepresentable, OutOfInterval, WindowMismatch

_SIDES = ("left", "right", "balanced")


def _as_vector(v, n: int | None, what: str) -> np.ndarray:
    vec = np.asarray(v, dtype=complex).reshape(-1)
    if n is not None and vec.size != n:
        raise DimensionMismatch(f"{what} must have length {n}, got {vec.size}")
    if not np.all(np.isfinite(vec.view(float))):
        raise ValueError(f"{what} contains non-finite entries")
    return vec


class L2Function:
    """A vector-valued function on a window, constant between breakpoints.

    ``values[i]`` is the value on the open piece (breakpoints[i],
    breakpoints[i+1]); ``atom_values`` maps selected positions to the value
    the function takes exactly there (the representative chosen at a point
    the weight charges).  Where no atom value is stored, the value at a
    breakpoint is the balanced average of the two neighbouring pieces.
    """

    def __init__(self, window, breakpoints, values, atom_values=None):
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise WindowMismatch(f"empty window ({lo}, {hi})")
        self._window = (lo, hi)
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or bp[0] != lo or bp[-1] != hi:
            raise NotRepresentable("breakpoints must run from the window start to its end")
        if not np.all(np.diff(bp) > 0):
            raise NotRepresentable("breakpoints must be strictly increasing")
        if len(values) != bp.size - 1:
            raise DimensionMismatch("need one value per piece between breakpoints")
        vals = np.stack([_as_vector(v, None, "piece value") for v in values])
        self._n = vals.shape[1]
        if any(v.size != self._n for v in vals):
            raise DimensionMismatch("piece values must all have the same length")

        items = sorted((float(x), _as_vector(v, self._n, "atom value"))
                       for x, v in (atom_values or {}).items())
        for x, _ in items:
            if not (lo <= x <= hi):
                raise OutOfInterval(f"atom value position {x} outside [{lo}, {hi}]")
        self._atom_positions = np.asarray([x for x, _ in items], dtype=float)
        self._atom_values = (np.stack([v for _, v in items])
                             if items else np.zeros((0, self._n), dtype=complex))
        self._breakpoints = bp
        self._values = vals
        for a in (self._breakpoints, self._values, self._atom_positions, self._atom_values):
            a.flags.writeable = False

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, window, value, w: MeasureMatrix | None = None) -> "L2Function":
        """The constant function; atom values filled in from w if given."""
        value = np.asarray(value, dtype=complex).reshape(-1)
        f = cls(window, [window[0], window[1]], [value])
        return f.refined_against(w) if w is not None else f

    @classmethod
    def from_pieces(cls, window, pieces, atom_values=None,
                    w: MeasureMatrix | None = None) -> "L2Function":
        """Build from (from, to, value) triples that tile the window."""
        lo, hi = float(window[0]), float(window[1])
        pieces = sorted(((float(p0), float(p1), v) for p0, p1, v in pieces),
                        key=lambda t: t[0])
        if not pieces:
            raise NotRepresentable("at least one piece is required")
        bp = [pieces[0][0]]
        vals = []
        for p0, p1, v in pieces:
            if p0 != bp[-1]:
                raise NotRepresentable(
                    f"pieces must tile the window; gap or overlap at {p0}")
            if not p1 > p0:
                raise NotRepresentable(f"piece ({p0}, {p1}) is empty")
            bp.append(p1)
            vals.append(v)
        if bp[0] != lo or bp[-1] != hi:
            raise NotRepresentable("pieces must cover exactly the window")
        f = cls(window, bp, vals, atom_values)
        return f.refined_against(w) if w is not None else f

    @classmethod
    def zero(cls, window, n: int) -> "L2Function":
        return cls.constant(window, np.zeros(n, dtype=complex))

    def refined_against(self, w: MeasureMatrix) -> "L2Function":
        """Insert w's structure into the breakpoints and pin w-atom values.

        Atoms of w inside the window that carry no explicit value get the
        balanced piece value, so that integrals against w are reproducible.
        """
        lo, hi = self._window
        cuts = w.structure_points()
        cuts = cuts[(cuts > lo) & (cuts < hi)]
        bp = np.unique(np.concatenate([self._breakpoints, cuts]))
        values = [self.value(0.5 * (bp[i] + bp[i + 1])) for i in range(bp.size - 1)]
        atom_values = {float(x): self._atom_values[i]
                       for i, x in enumerate(self._atom_positions)}
        positions, _ = w.atoms_between(lo, hi)
        for x in positions:
            atom_values.setdefault(float(x), self.value(float(x), "balanced"))
        return L2Function(self._window, bp, values, atom_values)

    # -- queries ----------------------------------------------------------------

    @property
    def n(self) -> int:
        return self._n

    @property
    def window(self) -> tuple[float, float]:
        return self._window

    @property
    def breakpoints(self) -> np.ndarray:
        return self._breakpoints

    @property
    def piece_values(self) -> np.ndarray:
        return self._values

    @property
    def atom_positions(self) -> np.ndarray:
        return self._atom_positions

    def atom_value_map(self) -> dict[float, np.ndarray]:
        return {float(x): self._atom_values[i]
                for i, x in enumerate(self._atom_positions)}

    def structure_points(self) -> np.ndarray:
        return np.unique(np.concatenate([self._breakpoints, self._atom_positions]))

    def covers(self, lo: float, hi: float) -> bool:
        return self._window[0] <= lo and hi <= self._window[1]

    def value(self, x: float, side: str = "balanced") -> np.ndarray:
        """Value at x; 'left'/'right' give the one-sided piece limits.

        The stored atom value overrides the balanced value only: one-sided
        limits always come from the neighbouring pieces.
        """
        if side not in _SIDES:
            raise ValueError(f"side must be one of {_SIDES}")
        lo, hi = self._window
        if not (lo <= x <= hi):
            raise OutOfInterval(f"value requested at {x}, outside [{lo}, {hi}]")
        if side == "balanced":
            idx = np.searchsorted(self._atom_positions, x)
            if idx < self._atom_positions.size and self._atom_positions[idx] == x:
                return self._atom_values[idx]
        bp = self._breakpoints
        k = int(np.searchsorted(bp, x))
        if k < bp.size and bp[k] == x:
            left = self._values[k - 1] if k > 0 else self._values[0]
            right = self._values[k] if k < self._values.shape[0] else self._values[-1]
            if side == "left":
                return left
            if side == "right":
                return right
            return 0.5 * (left + right)
        k = max(0, min(k - 1, self._values.shape[0] - 1))
        return self._values[k]

    # -- linear structure (used by tests and the fuzzer) ------------------------

    @staticmethod
    def linear_combination(coeffs, funcs) -> "L2Function":
        """sum(c_i * f_i) over functions sharing one window."""
        funcs = list(funcs)
        if not funcs:
            raise ValueError("need at least one function")
        window = funcs[0].window
        if any(f.window != window for f in funcs):
            raise WindowMismatch("all functions must share the window")
        bp = np.unique(np.concatenate([f.breakpoints for f in funcs]))
        values = []
        for i in range(bp.size - 1):
            mid = 0.5 * (bp[i] + bp[i + 1])
            values.append(sum(c * f.value(mid) for c, f in zip(coeffs, funcs)))
        atom_positions = np.unique(np.concatenate(
            [f.atom_positions for f in funcs]))
        atom_values = {
            float(x): sum(c * f.value(float(x), "balanced")
                          for c, f in zip(coeffs, funcs))
            for x in atom_positions
        }
        return L2Function(window, bp, values, atom_values)
