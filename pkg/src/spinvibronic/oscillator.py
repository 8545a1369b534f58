"""Truncated two-dimensional harmonic-oscillator basis and mode operators.

States |n_x, n_y> with n_x + n_y <= cutoff are enumerated shell by shell
(ascending total quanta, then ascending n_x), giving dim = (N+1)(N+2)/2.
Position-type operators are assembled from exact ladder matrix elements, so
the only truncation effect is the missing coupling out of the top shells;
there are no O(1/N) artifacts from squaring truncated matrices.

The point-group operations on the mode plane are also provided: the rotation
by 2*pi/3 (built per shell in the circular, angular-momentum basis where it
is diagonal, hence exactly unitary) and the reflection Q_y -> -Q_y, which is
diagonal with entries (-1)**n_y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

# total spin-vibronic dimension 4*dim(basis) must stay below this by default
DEFAULT_DIM_BUDGET = 200_000

_SQRT2 = math.sqrt(2.0)


class BasisSizeError(ValueError):
    """Raised when a requested cutoff exceeds the matrix-size budget."""


@dataclass(frozen=True)
class OscBasis:
    """Index bookkeeping for the truncated |n_x, n_y> basis."""

    cutoff: int
    n_x: np.ndarray
    n_y: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_x.size

    def index(self, nx: int, ny: int) -> int:
        """Position of |nx, ny> in the enumeration (shell-major, n_x minor)."""
        n = nx + ny
        if nx < 0 or ny < 0 or n > self.cutoff:
            raise IndexError(f"state ({nx}, {ny}) outside basis with cutoff {self.cutoff}")
        return n * (n + 1) // 2 + nx


def build_basis(cutoff: int, dim_budget: int = DEFAULT_DIM_BUDGET) -> OscBasis:
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    dim = (cutoff + 1) * (cutoff + 2) // 2
    if 4 * dim > dim_budget:
        raise BasisSizeError(
            f"cutoff {cutoff} gives spin-vibronic dimension {4 * dim} "
            f"exceeding the budget {dim_budget}"
        )
    n_x = np.concatenate([np.arange(n + 1) for n in range(cutoff + 1)])
    n_y = np.concatenate([np.full(n + 1, n) - np.arange(n + 1) for n in range(cutoff + 1)])
    return OscBasis(cutoff=cutoff, n_x=n_x, n_y=n_y)


def _collect(basis: OscBasis, entries) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for r, c, v in entries:
        rows.append(r)
        cols.append(c)
        vals.append(v)
    m = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))
    return m.tocsr()


def position_operator(basis: OscBasis, axis: str) -> sp.csr_matrix:
    """X or Y, i.e. (a^dag + a)/sqrt(2) along the requested axis."""
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    quanta = basis.n_x if axis == "x" else basis.n_y
    entries = []
    for k in range(basis.dim):
        nx, ny, n = int(basis.n_x[k]), int(basis.n_y[k]), int(quanta[k])
        # raising element <n+1|a^dag|n>; the lowering partner comes from symmetry
        if nx + ny < basis.cutoff:
            up = basis.index(nx + 1, ny) if axis == "x" else basis.index(nx, ny + 1)
            v = math.sqrt(n + 1) / _SQRT2
            entries.append((up, k, v))
            entries.append((k, up, v))
    return _collect(basis, entries)


def quadratic_operators(basis: OscBasis) -> dict[str, sp.csr_matrix]:
    """X2, Y2 and XY from exact second-quantized matrix elements.

    X^2 = (a^dag^2 + a^2 + 2n + 1)/2 along each axis; XY factorizes into the
    two commuting single-axis ladder factors.
    """
    x2_entries, y2_entries, xy_entries = [], [], []
    for k in range(basis.dim):
        nx, ny = int(basis.n_x[k]), int(basis.n_y[k])
        n_tot = nx + ny
        x2_entries.append((k, k, nx + 0.5))
        y2_entries.append((k, k, ny + 0.5))
        if n_tot <= basis.cutoff - 2:
            ux = basis.index(nx + 2, ny)
            v = math.sqrt((nx + 1) * (nx + 2)) / 2.0
            x2_entries.append((ux, k, v))
            x2_entries.append((k, ux, v))
            uy = basis.index(nx, ny + 2)
            v = math.sqrt((ny + 1) * (ny + 2)) / 2.0
            y2_entries.append((uy, k, v))
            y2_entries.append((k, uy, v))
            uxy = basis.index(nx + 1, ny + 1)
            v = math.sqrt((nx + 1) * (ny + 1)) / 2.0
            xy_entries.append((uxy, k, v))
            xy_entries.append((k, uxy, v))
        # the (n_x+1, n_y-1) channel of XY stays within the shell
        if nx + 1 <= basis.cutoff and ny - 1 >= 0:
            u = basis.index(nx + 1, ny - 1)
            v = math.sqrt((nx + 1) * ny) / 2.0
            xy_entries.append((u, k, v))
            xy_entries.append((k, u, v))
    return {
        "X2": _collect(basis, x2_entries),
        "Y2": _collect(basis, y2_entries),
        "XY": _collect(basis, xy_entries),
    }


def number_operator(basis: OscBasis) -> sp.csr_matrix:
    return sp.diags((basis.n_x + basis.n_y).astype(float)).tocsr()


def _circular_block(n: int) -> np.ndarray:
    """Unitary <n_x, n_y | n_+, n_-> within the shell of total quanta n.

    The circular states are (a_+^dag)^{n_+} (a_-^dag)^{n_-} |0> with
    a_+/-^dag = (a_x^dag +/- i a_y^dag)/sqrt(2); the binomial coefficients are
    accumulated in exact integer arithmetic before normalization so the block
    is unitary to machine precision at any shell.
    """
    u = np.zeros((n + 1, n + 1), dtype=complex)
    for col, n_plus in enumerate(range(n, -1, -1)):
        n_minus = n - n_plus
        # integer accumulators for the real/imag parts per power of a_x^dag
        re = [0] * (n + 1)
        im = [0] * (n + 1)
        for p in range(n_plus + 1):
            cp = math.comb(n_plus, p)
            for q in range(n_minus + 1):
                cq = math.comb(n_minus, q)
                # i^(n_plus - p) * (-i)^(n_minus - q)
                phase = ((n_plus - p) - (n_minus - q)) % 4
                term = cp * cq
                j = p + q  # power of a_x^dag
                if phase == 0:
                    re[j] += term
                elif phase == 1:
                    im[j] += term
                elif phase == 2:
                    re[j] -= term
                else:
                    im[j] -= term
        norm = Fraction(math.factorial(n_plus) * math.factorial(n_minus)) * 2**n
        for j in range(n + 1):
            # row index: |n_x = j, n_y = n - j>
            amp = math.sqrt(
                float(Fraction(math.factorial(j) * math.factorial(n - j)) / norm)
            )
            u[j, col] = complex(re[j], im[j]) * amp
    return u


def c3_rotation(basis: OscBasis) -> sp.csr_matrix:
    """Rotation of the mode plane by 2*pi/3, block diagonal in total quanta.

    Within each shell the rotation is diagonal in the circular basis with
    phases exp(-i * 2*pi/3 * ell), ell = n_+ - n_-; transforming back to the
    Cartesian basis gives a real orthogonal block.
    """
    blocks = []
    for n in range(basis.cutoff + 1):
        u = _circular_block(n)
        ell = np.arange(n, -n - 1, -2)
        phases = np.exp(-1j * (2.0 * np.pi / 3.0) * ell)
        block = (u * phases) @ u.conj().T
        if np.max(np.abs(block.imag)) > 1e-12:
            raise AssertionError("rotation block acquired a spurious imaginary part")
        blocks.append(block.real)
    return sp.block_diag(blocks, format="csr")


def c2prime_reflection(basis: OscBasis) -> sp.csr_matrix:
    """Reflection (Q_x, Q_y) -> (Q_x, -Q_y): diagonal with (-1)**n_y."""
    signs = np.where(basis.n_y % 2 == 0, 1.0, -1.0)
    return sp.diags(signs).tocsr()


def build_operators(basis: OscBasis) -> dict[str, sp.csr_matrix]:
    """All labeled mode operators used by the Hamiltonian and the analysis."""
    ops = {
        "X": position_operator(basis, "x"),
        "Y": position_operator(basis, "y"),
        "N": number_operator(basis),
        "C3": c3_rotation(basis),
        "C2prime": c2prime_reflection(basis),
    }
    ops.update(quadratic_operators(basis))
    return ops
