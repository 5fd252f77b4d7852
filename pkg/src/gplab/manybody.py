"""Exact few-boson dynamics on tensor-product grids.

A state of n particles in d dimensions is a complex tensor of rank n*d on
the per-particle grid; particle j owns the axis block [j*d, (j+1)*d).  The
tensor grows as M^(d*n), so a hard budget of 2^28 amplitudes caps the
reachable regimes; the thermodynamic statements behind these diagnostics are
probed as monotone trends over small finite families, never as limits.

The one-dimensional analog family used for cheap mean-field trend checks
scales V_n(x) = V(n x) at unchanged amplitude, so that n * V_n tends to a
point interaction of weight b0 = int V dx, mirroring the three-dimensional
family's bookkeeping; outputs produced this way are flagged `analog1d`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, SolverError
from .grids import GridSpec, WaveFunction, ensure_same_grid
from .potential import PotentialModel, TrapModel

MAX_STATE_AMPLITUDES = 2**28
MAX_KERNEL_ENTRIES = 2**28

PairProfile = Callable[[np.ndarray], np.ndarray]


def _check_state_budget(grid: GridSpec, n_particles: int) -> None:
    amplitudes = grid.size**n_particles
    if amplitudes > MAX_STATE_AMPLITUDES:
        raise ConfigurationError(
            f"state of {n_particles} particles on {grid.points_per_axis}^{grid.dim} "
            f"points needs {amplitudes} amplitudes; budget is 2^28 = {MAX_STATE_AMPLITUDES}"
        )


@dataclass
class ManyBodyState:
    """Symmetric n-particle field, normalized with the grid measure."""

    grid: GridSpec
    n_particles: int
    values: np.ndarray
    #: L2 norm of the raw tensor before normalization (1.0 for product builds)
    prenormalization: float = 1.0

    @property
    def measure(self) -> float:
        return self.grid.cell_volume**self.n_particles

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.measure))

    def normalized(self) -> "ManyBodyState":
        n = self.norm()
        if n == 0.0 or not np.isfinite(n):
            raise DomainError("cannot normalize a zero or non-finite state")
        return ManyBodyState(self.grid, self.n_particles, self.values / n, n)

    def symmetry_defect(self) -> float:
        """Largest deviation under any adjacent particle transposition."""
        worst = 0.0
        for i in range(self.n_particles - 1):
            swapped = exchange_particles(self.values, i, i + 1, self.grid.dim)
            worst = max(worst, float(np.max(np.abs(self.values - swapped))))
        return worst


def exchange_particles(values: np.ndarray, i: int, j: int, dim: int) -> np.ndarray:
    axes = list(range(values.ndim))
    for a in range(dim):
        axes[i * dim + a], axes[j * dim + a] = axes[j * dim + a], axes[i * dim + a]
    return np.transpose(values, axes)


def pair_displacement_distance(grid: GridSpec) -> np.ndarray:
    """Matrix of periodically wrapped distances |x_a - x_b| between all pairs
    of per-particle grid points, shape (M^d, M^d)."""
    coords = np.stack([c.ravel() for c in grid.coordinate_mesh()], axis=-1)
    delta = coords[:, None, :] - coords[None, :, :]
    length = grid.box_length
    delta = (delta + 0.5 * length) % length - 0.5 * length
    return np.sqrt(np.sum(delta**2, axis=-1))


def _pair_axes_view(matrix: np.ndarray, grid: GridSpec, n: int, i: int, j: int) -> np.ndarray:
    """Reshape an (M^d, M^d) pair matrix so it broadcasts over the full
    n-particle tensor with its two slots on particles i and j.  Only valid
    for symmetric matrices (all pair quantities here depend on |x_i - x_j|)."""
    if i > j:
        i, j = j, i
    d, m = grid.dim, grid.points_per_axis
    shape = [1] * (n * d)
    for a in range(d):
        shape[i * d + a] = m
        shape[j * d + a] = m
    return matrix.reshape(shape)


def total_potential(
    grid: GridSpec,
    n_particles: int,
    pair: PotentialModel | None,
    trap: TrapModel | None,
) -> np.ndarray:
    """Sampled interaction + trap energy on the full tensor grid."""
    d = grid.dim
    total = np.zeros(grid.shape * n_particles)
    if trap is not None and trap.confining:
        v1 = trap.sample(grid)
        for i in range(n_particles):
            shape = [1] * (n_particles * d)
            for a in range(d):
                shape[i * d + a] = grid.points_per_axis
            total = total + v1.reshape(shape)
    if pair is not None:
        matrix = pair(pair_displacement_distance(grid))
        for i, j in itertools.combinations(range(n_particles), 2):
            total = total + _pair_axes_view(matrix, grid, n_particles, i, j)
    return total


def pair_profile_factor(
    grid: GridSpec, n_particles: int, profile: PairProfile, i: int, j: int
) -> np.ndarray:
    """profile(|x_i - x_j|) broadcast over the n-particle tensor."""
    matrix = np.asarray(profile(pair_displacement_distance(grid)), dtype=float)
    return _pair_axes_view(matrix, grid, n_particles, i, j)


# --- initial states -----------------------------------------------------


def product_state(phi: WaveFunction, n_particles: int) -> ManyBodyState:
    """phi tensored n times (uncorrelated initial data)."""
    _check_state_budget(phi.grid, n_particles)
    values = np.array(1.0, dtype=complex)
    for _ in range(n_particles):
        values = np.tensordot(values, phi.values, axes=0)
    state = ManyBodyState(phi.grid, n_particles, values)
    return state.normalized()


def jastrow_product_state(
    phi: WaveFunction, n_particles: int, pair_profile: PairProfile
) -> ManyBodyState:
    """Product orbital dressed with the short-range pair factor on every pair."""
    _check_state_budget(phi.grid, n_particles)
    raw = product_state(phi, n_particles).values
    for i, j in itertools.combinations(range(n_particles), 2):
        raw = raw * pair_profile_factor(phi.grid, n_particles, pair_profile, i, j)
    state = ManyBodyState(phi.grid, n_particles, raw)
    return state.normalized()


def build_initial(
    kind: str,
    phi: WaveFunction,
    n_particles: int,
    pair_profile: PairProfile | None = None,
) -> ManyBodyState:
    if kind == "product":
        return product_state(phi, n_particles)
    if kind == "jastrow_product":
        if pair_profile is None:
            raise ConfigurationError("jastrow_product needs a pair profile")
        return jastrow_product_state(phi, n_particles, pair_profile)
    raise ConfigurationError(f"unknown initial-state kind {kind!r}")


def random_symmetric_state(grid: GridSpec, n_particles: int, seed: int) -> ManyBodyState:
    """Bosonic trial state: symmetrized complex Gaussian noise."""
    _check_state_budget(grid, n_particles)
    rng = np.random.default_rng(seed)
    shape = grid.shape * n_particles
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    sym = np.zeros_like(raw)
    for perm in itertools.permutations(range(n_particles)):
        axes = []
        for p in perm:
            axes.extend(range(p * grid.dim, (p + 1) * grid.dim))
        sym += np.transpose(raw, axes)
    return ManyBodyState(grid, n_particles, sym).normalized()


# --- dynamics -----------------------------------------------------------


def _many_body_k_squared(grid: GridSpec, n_particles: int) -> np.ndarray:
    k2_axis = grid.k_axis() ** 2
    total = np.zeros(grid.shape * n_particles)
    for axis in range(n_particles * grid.dim):
        shape = [1] * (n_particles * grid.dim)
        shape[axis] = grid.points_per_axis
        total = total + k2_axis.reshape(shape)
    return total


def evolve_manybody(
    psi0: ManyBodyState,
    pair: PotentialModel | None,
    trap: TrapModel | None,
    t: float,
    dt: float,
    callback: Callable[[int, float, ManyBodyState], None] | None = None,
) -> ManyBodyState:
    """Unitary split-step evolution under kinetic + trap + pair interaction.

    Symmetric splitting: half kinetic, full potential, half kinetic; every
    factor is a phase so the norm and the exchange symmetry are preserved
    exactly.  Negative t runs the evolution backwards.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if not np.all(np.isfinite(psi0.values)):
        raise SolverError("initial state contains non-finite values")
    if t == 0.0:
        return ManyBodyState(psi0.grid, psi0.n_particles, psi0.values.copy())
    steps = max(1, int(round(abs(t) / dt)))
    dt_eff = t / steps
    grid, n = psi0.grid, psi0.n_particles
    half_kinetic = np.exp(-1j * _many_body_k_squared(grid, n) * (dt_eff / 2.0))
    potential_phase = np.exp(-1j * total_potential(grid, n, pair, trap) * dt_eff)
    values = psi0.values.astype(complex, copy=True)
    for step in range(steps):
        values = np.fft.ifftn(np.fft.fftn(values) * half_kinetic)
        values *= potential_phase
        values = np.fft.ifftn(np.fft.fftn(values) * half_kinetic)
        if callback is not None:
            callback(step + 1, (step + 1) * dt_eff, ManyBodyState(grid, n, values))
    if not np.all(np.isfinite(values)):
        raise SolverError("evolution produced non-finite values")
    return ManyBodyState(grid, n, values)


def energy_moment(
    psi: ManyBodyState,
    pair: PotentialModel | None,
    trap: TrapModel | None,
    order: int = 1,
) -> float:
    """<psi, H^order psi> with spectral kinetic part and sampled potentials."""
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    k2 = _many_body_k_squared(psi.grid, psi.n_particles)
    w = total_potential(psi.grid, psi.n_particles, pair, trap)
    h_psi = np.fft.ifftn(np.fft.fftn(psi.values) * k2) + w * psi.values
    if order == 1:
        return float(np.real(np.sum(np.conj(psi.values) * h_psi)) * psi.measure)
    return float(np.sum(np.abs(h_psi) ** 2) * psi.measure)


# --- reduced density matrices -------------------------------------------


@dataclass
class DensityMatrix:
    """k-particle marginal as a kernel over the k-particle grid index set.

    The kernel follows the continuum convention: the operator acts as
    (gamma f)(x) = sum_y kernel[x, y] f(y) dx^(d k), and the trace is the
    diagonal sum with the same measure, normalized to 1.
    """

    grid: GridSpec
    k: int
    kernel: np.ndarray

    @property
    def measure(self) -> float:
        return self.grid.cell_volume**self.k

    def trace(self) -> float:
        return float(np.real(np.trace(self.kernel)) * self.measure)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.kernel - self.kernel.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        """Occupation numbers, descending."""
        vals = np.linalg.eigvalsh(self.kernel) * self.measure
        return vals[::-1]

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupations (descending) and orbitals (columns), each orbital's
        first non-negligible component rotated to the positive real axis."""
        vals, vecs = np.linalg.eigh(self.kernel)
        vals = vals[::-1] * self.measure
        vecs = vecs[:, ::-1] / np.sqrt(self.measure)
        for col in range(vecs.shape[1]):
            v = vecs[:, col]
            idx = np.argmax(np.abs(v) > 1e-12 * np.max(np.abs(v)))
            phase = v[idx] / abs(v[idx])
            vecs[:, col] = v / phase
        return vals, vecs


def marginal(psi: ManyBodyState, k: int) -> DensityMatrix:
    """Partial trace of |psi><psi| over particles k+1..n, trace one."""
    n = psi.n_particles
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in 1..{n}, got {k}")
    rows = psi.grid.size**k
    if rows * rows > MAX_KERNEL_ENTRIES:
        raise ConfigurationError(
            f"{k}-particle kernel needs {rows * rows} entries; "
            f"budget is 2^28 = {MAX_KERNEL_ENTRIES}"
        )
    mat = psi.values.reshape(rows, -1)
    kernel = (mat @ mat.conj().T) * psi.grid.cell_volume ** (n - k)
    return DensityMatrix(psi.grid, k, kernel)


def partial_trace(dm: DensityMatrix) -> DensityMatrix:
    """Trace out the last particle of a k-particle kernel."""
    if dm.k < 2:
        raise DomainError("need k >= 2 to trace out a particle")
    m = dm.grid.size
    rows = dm.grid.size ** (dm.k - 1)
    four = dm.kernel.reshape(rows, m, rows, m)
    kernel = np.einsum("acbc->ab", four) * dm.grid.cell_volume**dm.grid.dim
    return DensityMatrix(dm.grid, dm.k - 1, kernel)


def condensate_overlap(dm: DensityMatrix, phi: WaveFunction) -> float:
    """<phi, gamma phi> in [0, 1]; 1 - overlap is the depletion diagnostic."""
    if dm.k != 1:
        raise DomainError("condensate overlap is defined for one-particle marginals")
    ensure_same_grid(dm.grid, phi.grid)
    v = phi.values.ravel()
    value = np.real(np.vdot(v, dm.kernel @ v)) * dm.grid.cell_volume**2
    return float(value)


def factorization_distance(psi: ManyBodyState, phi: WaveFunction, k: int) -> float:
    """Distance from psi to the closest state with its first k slots in phi.

    Equals sqrt(1 - |P psi|^2) where P projects onto phi^(tensor k) in the
    first k slots; 0 for a pure product of phi, 1 when the contraction
    vanishes.
    """
    ensure_same_grid(psi.grid, phi.grid)
    if not 1 <= k < psi.n_particles:
        raise DomainError("k must satisfy 1 <= k < n_particles")
    rows = psi.grid.size**k
    phi_k = np.array(1.0, dtype=complex)
    for _ in range(k):
        phi_k = np.tensordot(phi_k, phi.values, axes=0)
    mat = psi.values.reshape(rows, -1)
    chi = (phi_k.ravel().conj() @ mat) * psi.grid.cell_volume**k
    chi_norm_sq = np.sum(np.abs(chi) ** 2) * psi.grid.cell_volume ** (
        psi.n_particles - k
    )
    return float(np.sqrt(max(0.0, 1.0 - chi_norm_sq)))


# --- regularity diagnostics ----------------------------------------------


def correlation_quotient(
    psi: ManyBodyState,
    pair_profile: PairProfile | None,
    i: int,
    j: int,
) -> float:
    """Mixed-gradient energy of psi divided pointwise by the pair profile.

    Returns int |grad_i grad_j (psi / f(x_i - x_j))|^2, the profile-relative
    smoothness of the pair (i, j); pass None for the undivided integral.
    Computed spectrally: the weight is |k_i|^2 |k_j|^2 in Fourier space.
    """
    n, grid = psi.n_particles, psi.grid
    if n < 2 or i == j or not (0 <= i < n and 0 <= j < n):
        raise DomainError("need two distinct particle indices on an n >= 2 state")
    values = psi.values
    if pair_profile is not None:
        factor = pair_profile_factor(grid, n, pair_profile, i, j)
        if np.any(factor <= 0.0) or not np.all(np.isfinite(factor)):
            raise DomainError("pair profile must be positive on the whole grid")
        values = values / factor
    hat = np.fft.fftn(values)
    k2_axis = grid.k_axis() ** 2

    def particle_k2(p: int) -> np.ndarray:
        total = np.zeros(grid.shape * n)
        for a in range(grid.dim):
            shape = [1] * (n * grid.dim)
            shape[p * grid.dim + a] = grid.points_per_axis
            total = total + k2_axis.reshape(shape)
        return total

    weight = particle_k2(i) * particle_k2(j)
    total_points = grid.size**n
    return float(
        np.sum(weight * np.abs(hat) ** 2) * psi.measure / total_points
    )


def hardy_check(phi: WaveFunction) -> tuple[float, float]:
    """Both sides of the three-dimensional inverse-square inequality.

    Returns (<phi, |r|^-2 phi>, 4 <grad phi, grad phi>).  The origin cell's
    weight is the average of its face neighbors' |r|^-2, an underestimate of
    the in-cell average, which can only make the left side smaller.
    """
    if phi.grid.dim != 3:
        raise ConfigurationError("the inverse-square inequality check needs d = 3")
    grid = phi.grid
    r2 = grid.radius_squared_mesh()
    weight = np.empty_like(r2)
    nonzero = r2 > 0
    weight[nonzero] = 1.0 / r2[nonzero]
    weight[~nonzero] = 1.0 / grid.spacing**2  # face neighbors all sit at |r| = dx
    lhs = float(np.sum(weight * np.abs(phi.values) ** 2) * grid.cell_volume)
    hat = np.fft.fftn(phi.values)
    kinetic = float(
        np.sum(grid.k_squared_mesh() * np.abs(hat) ** 2) * grid.cell_volume / grid.size
    )
    return lhs, 4.0 * kinetic


def scale_potential_analog1d(model: PotentialModel, n: int) -> PotentialModel:
    """One-dimensional analog family: V_n(x) = V(n x), unchanged amplitude.

    Then int V_n = b0/n and n V_n concentrates to weight b0, matching the
    bookkeeping of the three-dimensional family at this dimension.
    """
    return model.scaled_analog1d(n)
