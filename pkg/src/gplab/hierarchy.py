"""Marginal-hierarchy diagnostics: residuals, collision terms, series.

Kernels follow the DensityMatrix convention of `gplab.manybody`: a k-particle
kernel K(x_1..x_k; x'_1..x'_k) is stored as an (M^(d k), M^(d k)) matrix with
row-major multi-indices, and norms carry the grid measure per slot pair, so a
factorized projector built from a normalized orbital has norm and trace 1.

The discrete point interaction is (dx)^(-d) times the Kronecker indicator at
coincident grid points, the unique grid weight whose cell sum is 1; with it
the contracted collision term has the same closed form as in the continuum:

    Tr_last [delta(x_j - z), gamma^(k+1)](x; x')
        = gamma^(k+1)(x, x_j; x', x_j) - gamma^(k+1)(x, x'_j; x', x'_j).

Truncated series terms are iterated time-simplex integrals of collision and
free-flight factors applied to the initial family; for factorized families
every integrand is a short sum of rank-one products of single-particle
fields, which is how orders one and two stay affordable.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, DomainError, GridMismatchError
from .grids import GridSpec, WaveFunction, ensure_same_grid, free_evolve
from .manybody import MAX_KERNEL_ENTRIES, DensityMatrix
from .potential import PotentialModel

_LETTERS = string.ascii_lowercase


# --- kernel plumbing ------------------------------------------------------


def factorized_kernel(phi: WaveFunction, k: int) -> np.ndarray:
    """Kernel of the pure k-fold product of one orbital."""
    if k < 1:
        raise DomainError("k must be >= 1")
    v = phi.values.ravel()
    single = np.outer(v, v.conj())
    kernel = single
    for _ in range(k - 1):
        kernel = np.kron(kernel, single)
    return kernel


def kernel_norm(kernel: np.ndarray, grid: GridSpec, k: int) -> float:
    return float(np.sqrt(np.sum(np.abs(kernel) ** 2)) * grid.cell_volume**k)


def kernel_distance(a: np.ndarray, b: np.ndarray, grid: GridSpec, k: int) -> float:
    return kernel_norm(a - b, grid, k)


def _per_axis(kernel: np.ndarray, grid: GridSpec, k: int) -> np.ndarray:
    return kernel.reshape(grid.shape * (2 * k))


def _k2_broadcast(grid: GridSpec, k: int, block: int) -> np.ndarray:
    """Sum of squared wavenumbers over one k-particle axis block (block 0 is
    the row block, 1 the column block), broadcastable over the 2k-block."""
    k2_axis = grid.k_axis() ** 2
    n_axes = 2 * k * grid.dim
    total = np.zeros((1,) * n_axes)
    for a in range(k * grid.dim):
        shape = [1] * n_axes
        shape[block * k * grid.dim + a] = grid.points_per_axis
        total = total + k2_axis.reshape(shape)
    return total


def free_propagate_kernel(kernel: np.ndarray, grid: GridSpec, k: int, t: float) -> np.ndarray:
    """Conjugate a k-particle kernel by the free flow exp(i t Laplacian)."""
    shape = kernel.shape
    work = _per_axis(kernel, grid, k)
    d = grid.dim
    rows = tuple(range(k * d))
    cols = tuple(range(k * d, 2 * k * d))
    phase_rows = np.exp(-1j * t * _k2_broadcast(grid, k, 0))
    phase_cols = np.exp(1j * t * _k2_broadcast(grid, k, 1))
    work = np.fft.ifftn(np.fft.fftn(work, axes=rows) * phase_rows, axes=rows)
    work = np.fft.fftn(np.fft.ifftn(work, axes=cols) * phase_cols, axes=cols)
    return work.reshape(shape)


def free_propagate(dm: DensityMatrix, t: float) -> DensityMatrix:
    """Free-flow conjugation; preserves trace, hermiticity and spectrum."""
    return DensityMatrix(dm.grid, dm.k, free_propagate_kernel(dm.kernel, dm.grid, dm.k, t))


def kinetic_commutator(kernel: np.ndarray, grid: GridSpec, k: int) -> np.ndarray:
    """[-Laplacian_total, kernel], computed spectrally on both slots."""
    shape = kernel.shape
    work = _per_axis(kernel, grid, k)
    d = grid.dim
    rows = tuple(range(k * d))
    cols = tuple(range(k * d, 2 * k * d))
    left = np.fft.ifftn(np.fft.fftn(work, axes=rows) * _k2_broadcast(grid, k, 0), axes=rows)
    right = np.fft.fftn(np.fft.ifftn(work, axes=cols) * _k2_broadcast(grid, k, 1), axes=cols)
    return (left - right).reshape(shape)


# --- collision operator ---------------------------------------------------


def collision_apply(gamma_next: DensityMatrix, sigma: float, j: int) -> np.ndarray:
    """j-th summand of the contact collision term applied to a (k+1)-kernel.

    Returns the k-particle kernel -i sigma [gamma(x, x_j; x', x_j) -
    gamma(x, x'_j; x', x'_j)]; traceless and anti-hermitian-consistent by
    construction.  The general path keeps the full kernel in memory and is
    restricted to one-dimensional grids; use the factorized fast path for
    product families in higher dimension.
    """
    grid = gamma_next.grid
    if grid.dim != 1:
        raise ConfigurationError("general collision path supports d = 1 only")
    k = gamma_next.k - 1
    if k < 1:
        raise DomainError("gamma_next must have at least two particles")
    if not 0 <= j < k:
        raise DomainError(f"summand index must lie in 0..{k - 1}")
    m = grid.points_per_axis
    work = gamma_next.kernel.reshape((m,) * (2 * k + 2))
    rows, cols, z = _LETTERS[:k], _LETTERS[k : 2 * k], "z"
    src = rows + z + cols + z
    # evaluate the traced slot at x_j resp. x'_j (diagonal extraction, no sum)
    first = np.einsum(src.replace(z, rows[j]) + "->" + rows + cols, work)
    second = np.einsum(src.replace(z, cols[j]) + "->" + rows + cols, work)
    # the delta's (dx)^-d weight cancels the partial trace's (dx)^d measure
    out = (-1j * sigma) * (first - second)
    return out.reshape(m**k, m**k)


def collision_apply_factorized(
    phi: WaveFunction, k: int, sigma: float, j: int
) -> np.ndarray:
    """Closed form of the j-th collision summand on the (k+1)-fold product.

    The traced slot contracts to the orbital density, leaving
    -i sigma (|phi(x_j)|^2 - |phi(x'_j)|^2) times the k-fold product kernel.
    Valid on grids of any dimension.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if not 0 <= j < k:
        raise DomainError(f"summand index must lie in 0..{k - 1}")
    v = phi.values.ravel()
    g = (np.abs(v) ** 2) * v
    plain = np.outer(v, v.conj())
    dressed = np.outer(g, v.conj()) - np.outer(v, g.conj())
    kernel = np.array([[-1j * sigma]])
    for slot in range(k):
        kernel = np.kron(kernel, dressed if slot == j else plain)
    return kernel


# --- hierarchy residuals --------------------------------------------------


def _frame(frames: Mapping[float, object], time: float):
    for key, value in frames.items():
        if abs(key - time) <= 1e-9 * max(1.0, abs(time)):
            return value
    raise ConfigurationError(f"missing trajectory frame at t = {time!r}")


def bbgky_residual(
    gamma_frames: Mapping[float, DensityMatrix],
    gamma_next: DensityMatrix,
    pair: PotentialModel,
    n_particles: int,
    t: float,
    dt: float,
) -> float:
    """Normalized defect of the exact k-particle marginal equation.

    The time derivative is the central difference of the k-particle kernels
    at t -+ dt; the right side is the kinetic commutator, the intra-group
    interaction commutator and (n - k) times the collision term built from
    the (k+1)-marginal against the pair potential.  Exact marginals satisfy
    the spatially discretized identity, so the residual decays at second
    order in dt.
    """
    from .manybody import pair_displacement_distance

    if dt <= 0:
        raise DomainError("dt must be positive")
    before = _frame(gamma_frames, t - dt)
    center = _frame(gamma_frames, t)
    after = _frame(gamma_frames, t + dt)
    grid, k = center.grid, center.k
    if grid.dim != 1:
        raise ConfigurationError("marginal-equation residual supports d = 1 only")
    if gamma_next.k != k + 1:
        raise ConfigurationError("gamma_next must hold one more particle")
    ensure_same_grid(grid, gamma_next.grid)
    lhs = 1j * (after.kernel - before.kernel) / (2.0 * dt)
    rhs = kinetic_commutator(center.kernel, grid, k)
    m = grid.points_per_axis
    pair_matrix = np.asarray(pair(pair_displacement_distance(grid)), dtype=float)
    if k >= 2:
        work = center.kernel.reshape((m,) * (2 * k))
        for i in range(k):
            for jj in range(i + 1, k):
                shape_r = [1] * (2 * k)
                shape_r[i], shape_r[jj] = m, m
                shape_c = [1] * (2 * k)
                shape_c[k + i], shape_c[k + jj] = m, m
                cube = pair_matrix.reshape(m, m)
                rhs += (
                    cube.reshape(shape_r) * work - work * cube.reshape(shape_c)
                ).reshape(rhs.shape)
    # collision with the pair potential through the (k+1)-marginal
    work_next = gamma_next.kernel.reshape((m,) * (2 * k + 2))
    rows, cols, z = _LETTERS[:k], _LETTERS[k : 2 * k], "z"
    diag = np.einsum(rows + z + cols + z + "->" + rows + cols + z, work_next)
    collision = np.zeros_like(rhs).reshape((m,) * (2 * k))
    for j in range(k):
        t1 = np.einsum(rows[j] + "z," + rows + cols + "z->" + rows + cols, pair_matrix, diag)
        t2 = np.einsum(cols[j] + "z," + rows + cols + "z->" + rows + cols, pair_matrix, diag)
        collision += t1 - t2
    rhs += (n_particles - k) * grid.cell_volume * collision.reshape(rhs.shape)
    defect = kernel_norm(lhs - rhs, grid, k)
    scale = kernel_norm(rhs, grid, k)
    if scale < 1e-12:
        return defect
    return defect / scale


def infinite_hierarchy_residual(
    orbital_frames: Mapping[float, WaveFunction],
    k: int,
    sigma: float,
    t: float,
    dt: float,
) -> float:
    """Normalized defect of the limiting hierarchy on a factorized family.

    Builds the k-fold product kernels from the orbital at t -+ dt, central-
    differences them in time, and subtracts the kinetic commutator plus the
    contact collision term of strength sigma.  The defect vanishes at second
    order in dt exactly when the orbital solves the nonlinear equation with
    the same sigma.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if k < 1:
        raise DomainError("k must be >= 1")
    before = _frame(orbital_frames, t - dt)
    center = _frame(orbital_frames, t)
    after = _frame(orbital_frames, t + dt)
    ensure_same_grid(before.grid, center.grid)
    ensure_same_grid(after.grid, center.grid)
    grid = center.grid
    size_k = grid.size**k
    if size_k * size_k > MAX_KERNEL_ENTRIES:
        raise ConfigurationError(f"{k}-particle kernel exceeds the memory budget")
    kernel_t = factorized_kernel(center, k)
    lhs = 1j * (factorized_kernel(after, k) - factorized_kernel(before, k)) / (2.0 * dt)
    rhs = kinetic_commutator(kernel_t, grid, k)
    density = (np.abs(center.values) ** 2).ravel()
    work = rhs.reshape((grid.size,) * (2 * k))
    kernel_view = kernel_t.reshape((grid.size,) * (2 * k))
    for j in range(k):
        shape_r = [1] * (2 * k)
        shape_r[j] = grid.size
        shape_c = [1] * (2 * k)
        shape_c[k + j] = grid.size
        bracket = density.reshape(shape_r) - density.reshape(shape_c)
        work = work + sigma * bracket * kernel_view
    rhs = work.reshape(rhs.shape)
    defect = kernel_norm(lhs - rhs, grid, k)
    scale = kernel_norm(rhs, grid, k)
    if scale < 1e-12:
        return defect
    return defect / scale


# --- truncated series -----------------------------------------------------


@dataclass
class HierarchyFamily:
    """Indexed family of marginals sharing one coupling constant.

    Families built from an orbital keep it; series terms then run on
    rank-one products of single-particle fields and never materialize
    kernels above level k, which is what makes second-order terms viable.
    """

    grid: GridSpec
    sigma: float
    k_max: int
    orbital: WaveFunction | None = None
    entries: dict = field(default_factory=dict)

    @classmethod
    def from_orbital(cls, phi: WaveFunction, k_max: int, sigma: float) -> "HierarchyFamily":
        if k_max < 1:
            raise DomainError("k_max must be >= 1")
        return cls(phi.grid, float(sigma), k_max, orbital=phi)

    @classmethod
    def from_marginals(cls, entries: Mapping[int, DensityMatrix], sigma: float) -> "HierarchyFamily":
        if not entries:
            raise ConfigurationError("need at least one marginal")
        grids = {dm.grid for dm in entries.values()}
        if len(grids) != 1:
            raise GridMismatchError("marginals live on different grids")
        return cls(
            grids.pop(), float(sigma), max(entries), entries=dict(entries)
        )

    def entry(self, k: int) -> DensityMatrix:
        if not 1 <= k <= self.k_max:
            raise DomainError(f"k must lie in 1..{self.k_max}")
        if k in self.entries:
            return self.entries[k]
        if self.orbital is None:
            raise ConfigurationError(f"family holds no level-{k} marginal")
        size_k = self.grid.size**k
        if size_k * size_k > MAX_KERNEL_ENTRIES:
            raise ConfigurationError(
                f"level-{k} kernel exceeds the memory budget; "
                "series terms use the factorized path instead"
            )
        dm = DensityMatrix(self.grid, k, factorized_kernel(self.orbital, k))
        self.entries[k] = dm
        return dm


@dataclass
class DysonTerm:
    """One term of the truncated collision expansion (not trace-normalized)."""

    k: int
    m: int
    value: np.ndarray
    quadrature: dict

    def norm(self, grid: GridSpec) -> float:
        return kernel_norm(self.value, grid, self.k)


def _midpoints(upper: float, n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) * (upper / n)


def _collide_terms(terms: list, sigma: float) -> list:
    """Apply the collision operator to rank-one product terms, dropping the
    last slot into slot j for every j (two signed terms each)."""
    out = []
    for coeff, slots in terms:
        *kept, (a_last, b_last) = slots
        weight_x = a_last * np.conj(b_last)
        for j in range(len(kept)):
            plus = list(kept)
            a_j, b_j = plus[j]
            plus[j] = (a_j * weight_x, b_j)
            out.append((coeff * (-1j * sigma), plus))
            minus = list(kept)
            a_j, b_j = minus[j]
            minus[j] = (a_j, b_j * np.conj(weight_x))
            out.append((coeff * (1j * sigma), minus))
    return out


def _evolve_terms(terms: list, grid: GridSpec, tau: float) -> list:
    if tau == 0.0:
        return terms
    out = []
    for coeff, slots in terms:
        out.append(
            (
                coeff,
                [
                    (
                        free_evolve(WaveFunction(grid, a), tau).values,
                        free_evolve(WaveFunction(grid, b), tau).values,
                    )
                    for a, b in slots
                ],
            )
        )
    return out


def _assemble_terms(terms: list, size: int) -> np.ndarray:
    k = len(terms[0][1])
    total = np.zeros((size**k, size**k), dtype=complex)
    for coeff, slots in terms:
        kernel = np.array([[coeff]])
        for a, b in slots:
            kernel = np.kron(kernel, np.outer(a.ravel(), b.ravel().conj()))
        total += kernel
    return total


def dyson_term(
    family: HierarchyFamily,
    k: int,
    m: int,
    t: float,
    quad_points: int = 16,
) -> DysonTerm:
    """Order-m term of the collision expansion at level k.

    Order zero is the free flight of the level-k entry; orders one and two
    are midpoint-rule integrals over the time simplex with `quad_points`
    nodes per axis.  Orders above two are unsupported (cost grows with the
    level that must be carried).
    """
    if m not in (0, 1, 2):
        raise ConfigurationError("series order must be 0, 1 or 2")
    if k < 1:
        raise DomainError("k must be >= 1")
    if k + m > family.k_max:
        raise ConfigurationError(f"term needs level {k + m} > k_max = {family.k_max}")
    if quad_points < 4:
        raise ConfigurationError("quad_points < 4 is too coarse for the t^2 checks")
    grid = family.grid
    quad = {"points_per_axis": quad_points, "t": t, "rule": "midpoint"}
    if m == 0:
        value = free_propagate_kernel(family.entry(k).kernel, grid, k, t)
        return DysonTerm(k, 0, value, quad)
    size = grid.size
    if family.sigma == 0.0:
        return DysonTerm(k, m, np.zeros((size**k, size**k), dtype=complex), quad)
    if family.orbital is not None:
        phi = family.orbital
        total = np.zeros((size**k, size**k), dtype=complex)
        if m == 1:
            weight = t / quad_points
            for s in _midpoints(t, quad_points):
                phi_s = free_evolve(phi, s)
                terms = [(1.0, [(phi_s.values, phi_s.values)] * (k + 1))]
                terms = _collide_terms(terms, family.sigma)
                terms = _evolve_terms(terms, grid, t - s)
                total += weight * _assemble_terms(terms, size)
        else:
            for s1 in _midpoints(t, quad_points):
                weight = (t / quad_points) * (s1 / quad_points)
                for s2 in _midpoints(s1, quad_points):
                    phi_s2 = free_evolve(phi, s2)
                    terms = [(1.0, [(phi_s2.values, phi_s2.values)] * (k + 2))]
                    terms = _collide_terms(terms, family.sigma)
                    terms = _evolve_terms(terms, grid, s1 - s2)
                    terms = _collide_terms(terms, family.sigma)
                    terms = _evolve_terms(terms, grid, t - s1)
                    total += weight * _assemble_terms(terms, size)
        return DysonTerm(k, m, total, quad)
    if m == 2:
        raise ConfigurationError(
            "order-two terms need a factorized family (general kernels at "
            "level k+2 exceed the memory budget)"
        )
    entry_next = family.entry(k + 1)
    total = np.zeros((size**k, size**k), dtype=complex)
    weight = t / quad_points
    for s in _midpoints(t, quad_points):
        propagated = free_propagate(entry_next, s)
        summed = np.zeros_like(total)
        for j in range(k):
            summed += collision_apply(propagated, family.sigma, j)
        total += weight * free_propagate_kernel(summed, grid, k, t - s)
    return DysonTerm(k, 1, total, quad)


def dyson_partial_sum(
    family: HierarchyFamily,
    k: int,
    n: int,
    t: float,
    quad_points: int = 16,
) -> np.ndarray:
    """Sum of the series terms of orders 0..n-1 at level k (n <= 3)."""
    if not 1 <= n <= 3:
        raise ConfigurationError("partial sums support n in 1..3")
    total = None
    for m in range(n):
        term = dyson_term(family, k, m, t, quad_points)
        total = term.value if total is None else total + term.value
    return total


# --- regularity norm and power counting -----------------------------------


def sobolev_trace_norm(dm: DensityMatrix) -> float:
    """Trace of the kernel against the product of (1 - Laplacian_j) factors.

    Equals (1 + int |grad phi|^2)^k on the k-fold product of a normalized
    orbital, and is invariant under the free flow.
    """
    grid, k = dm.grid, dm.k
    work = _per_axis(dm.kernel, grid, k)
    rows = tuple(range(k * grid.dim))
    k2_axis = grid.k_axis() ** 2
    weight = np.ones((1,) * (2 * k * grid.dim))
    for particle in range(k):
        part = np.zeros((1,) * (2 * k * grid.dim))
        for a in range(grid.dim):
            shape = [1] * (2 * k * grid.dim)
            shape[particle * grid.dim + a] = grid.points_per_axis
            part = part + k2_axis.reshape(shape)
        weight = weight * (1.0 + part)
    work = np.fft.ifftn(np.fft.fftn(work, axes=rows) * weight, axes=rows)
    kernel = work.reshape(dm.kernel.shape)
    return float(np.real(np.trace(kernel)) * grid.cell_volume**k)


def power_counting_margin(k: int, m: int) -> tuple[int, int, int]:
    """Ultraviolet exponent bookkeeping for the order-m, level-k graphs.

    With all momenta cut at beta and frequencies at beta^2, the integration
    volume grows as beta^(4k + 15m) = beta^(3*(3m) + 2*(2k + 3m)); the
    vertex delta functions, the 2k + 3m propagators and the level-(k+m)
    regularity bound supply beta^-(5m), beta^-(2(2k+3m)) and beta^-(5(k+m)),
    a total decay exponent of 9k + 16m.  The margin 5k + m is positive for
    every k >= 1, m >= 0, so each graph is ultraviolet convergent.
    """
    if k < 1 or m < 0:
        raise DomainError("need k >= 1 and m >= 0")
    volume_exp = 4 * k + 15 * m
    decay_exp = 5 * m + 2 * (2 * k + 3 * m) + 5 * (k + m)
    return volume_exp, decay_exp, decay_exp - volume_exp
