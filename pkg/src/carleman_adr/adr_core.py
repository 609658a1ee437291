"""Finite-difference core for the 1D advection-diffusion-reaction equation.

Periodic lattice, central differences in space, explicit Euler in time:

    d(phi)/dt = D d2(phi)/dx2 - d(U phi)/dx - a phi + b phi^2

The linear part (diffusion + advection + linear reaction) is assembled as a
banded periodic matrix A; the quadratic reaction b phi^2 is kept separate so
that the same A feeds both the classical integrator and the Carleman
embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Sites where |phi| falls below this are excluded from relative-error maxima.
RELATIVE_ERROR_GUARD = 1e-12


# --- parameters -------------------------------------------------------------


@dataclass(frozen=True)
class AdrParams:
    """Physical and numerical parameters of one ADR setup.

    velocity is either a scalar (uniform advection) or an array of N
    per-site values; in the latter case the advection term is discretized
    in conservation form, which adds the local velocity gradient to the
    diagonal.
    """

    n_sites: int
    diffusion: float
    velocity: float | np.ndarray
    reaction_a: float
    reaction_b: float
    dx: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be at least 1")
        if self.dx <= 0 or self.dt < 0:
            raise ValueError("dx must be positive and dt non-negative")
        if self.diffusion < 0:
            raise ValueError("diffusion must be non-negative")
        v = self.velocity
        if isinstance(v, np.ndarray):
            if v.shape != (self.n_sites,):
                raise ValueError("velocity profile must have one value per site")
            # freeze the array so the frozen dataclass stays hashable-by-contract
            v.setflags(write=False)

    @property
    def uniform_velocity(self) -> bool:
        return not isinstance(self.velocity, np.ndarray)

    def velocity_profile(self) -> np.ndarray:
        """Per-site velocity values, regardless of how velocity was given."""
        if self.uniform_velocity:
            return np.full(self.n_sites, float(self.velocity))
        return np.asarray(self.velocity, dtype=float)

    @property
    def gamma_diffusion(self) -> float:
        return self.dt * self.diffusion / self.dx**2

    @property
    def gamma_advection(self) -> float:
        if not self.uniform_velocity:
            raise ValueError("gamma_advection is defined for uniform velocity only")
        return self.dt * float(self.velocity) / self.dx

    @property
    def gamma_reaction(self) -> float:
        return self.reaction_a * self.dt


@dataclass(frozen=True)
class DerivedNumbers:
    """Dimensionless groups and one-step stencil weights of an ADR setup."""

    gamma_diffusion: float
    gamma_advection: float
    gamma_reaction: float
    peclet_cell: float
    damkohler_adv: float
    damkohler_diff: float
    lambda0: float
    lambda1: float
    lambda2: float


def derived_numbers(params: AdrParams) -> DerivedNumbers:
    """Courant numbers, cell Peclet / Damkohler ratios and stencil weights.

    lambda0/1/2 are the diagonal, superdiagonal and subdiagonal entries of
    the one-step update 1 + dt*A for uniform velocity.
    """
    gd = params.gamma_diffusion
    ga = params.gamma_advection
    gr = params.gamma_reaction

    def ratio(num, den):
        return num / den if den != 0 else np.inf

    return DerivedNumbers(
        gamma_diffusion=gd,
        gamma_advection=ga,
        gamma_reaction=gr,
        peclet_cell=ratio(ga, gd),
        damkohler_adv=ratio(ga, gr),
        damkohler_diff=ratio(gd, gr),
        lambda0=1.0 - 2.0 * gd - gr,
        lambda1=gd - ga / 2.0,
        lambda2=gd + ga / 2.0,
    )


# --- initial conditions -----------------------------------------------------


@dataclass(frozen=True)
class InitialBox:
    """Rectangular concentration pulse centred on the middle of the lattice."""

    height: float = 1.0
    width: int = 5

    def field(self, n_sites: int) -> np.ndarray:
        if not 0 < self.width <= n_sites:
            raise ValueError("box width must lie in 1..n_sites")
        phi = np.zeros(n_sites)
        start = n_sites // 2 - self.width // 2
        for k in range(self.width):
            phi[(start + k) % n_sites] = self.height
        return phi


def gaussian_velocity(n_sites: int, u0: float = 1.0, sigma: float | None = None) -> np.ndarray:
    """Bell-shaped velocity profile centred on the lattice midpoint.

    Default width is N/8, which decays to ~1e-14 at the periodic seam.
    """
    if sigma is None:
        sigma = n_sites / 8.0
    j = np.arange(n_sites)
    return u0 * np.exp(-((j - n_sites / 2.0) ** 2) / (2.0 * sigma**2))


# --- linear operator --------------------------------------------------------


def build_linear_matrix(params: AdrParams) -> np.ndarray:
    """Dense N x N matrix of the linear ADR terms on the periodic lattice.

    Row j: diagonal -2D/dx^2 - a, column j-1 gets D/dx^2 + U_j/(2 dx),
    column j+1 gets D/dx^2 - U_j/(2 dx).  For a velocity profile the
    conservation-form gradient -(U_{j+1}-U_{j-1})/(2 dx) joins the diagonal.
    Row sums equal -a when the velocity is uniform.
    """
    n = params.n_sites
    d_w = params.diffusion / params.dx**2
    u = params.velocity_profile()
    a = np.zeros((n, n))
    for j in range(n):
        adv = u[j] / (2.0 * params.dx)
        diag = -2.0 * d_w - params.reaction_a
        if not params.uniform_velocity:
            diag -= (u[(j + 1) % n] - u[(j - 1) % n]) / (2.0 * params.dx)
        a[j, j] += diag
        a[j, (j - 1) % n] += d_w + adv
        a[j, (j + 1) % n] += d_w - adv
    return a


def euler_step_nonlinear(phi: np.ndarray, a_matrix: np.ndarray, reaction_b: float, dt: float) -> np.ndarray:
    """One explicit Euler step phi + dt*(A phi + b phi^2)."""
    return phi + dt * (a_matrix @ phi + reaction_b * phi * phi)


def evolve_nonlinear(phi0: np.ndarray, params: AdrParams, n_steps: int) -> np.ndarray:
    """Full Euler trajectory, shape (n_steps+1, N); row 0 is the initial field."""
    a_matrix = build_linear_matrix(params)
    traj = np.empty((n_steps + 1, phi0.size))
    traj[0] = phi0
    phi = np.array(phi0, dtype=float)
    for t in range(n_steps):
        phi = euler_step_nonlinear(phi, a_matrix, params.reaction_b, params.dt)
        traj[t + 1] = phi
    return traj


# --- single-site (logistic) closed forms ------------------------------------


def logistic_exact(phi0: float, a: float, b: float, t: float | np.ndarray):
    """Exact solution of d(phi)/dt = -a phi + b phi^2.

    phi(t) = phi0 e^{-a t} / (1 - R (1 - e^{-a t})) with R = b phi0 / a.
    For R >= 1 the denominator can reach zero at finite time; callers get
    a ValueError if the requested horizon crosses that singularity.
    """
    r = b * phi0 / a
    decay = np.exp(-a * np.asarray(t, dtype=float))
    denom = 1.0 - r * (1.0 - decay)
    if np.any(denom <= 0.0):
        raise ValueError("finite-time blow-up: R >= 1 reached the singular time")
    return phi0 * decay / denom


def logistic_carleman_truncated(phi0: float, a: float, b: float, t: float | np.ndarray, order: int):
    """Partial geometric sum phi0 e^{-at} sum_{k=0..order} [R(1-e^{-at})]^k."""
    if order < 0:
        raise ValueError("order must be non-negative")
    r = b * phi0 / a
    decay = np.exp(-a * np.asarray(t, dtype=float))
    x = r * (1.0 - decay)
    total = np.zeros_like(x)
    for k in range(order, -1, -1):
        total = total * x + 1.0
    return phi0 * decay * total


def logistic_truncation_bound(phi0: float, a: float, b: float, order: int) -> float:
    """Uniform-in-time tail bound |exact - truncated| <= phi0 R^{order+1}/(1-R), R < 1."""
    r = b * phi0 / a
    if not 0 <= r < 1:
        raise ValueError("tail bound requires 0 <= R < 1")
    return phi0 * r ** (order + 1) / (1.0 - r)


# --- error bookkeeping ------------------------------------------------------


@dataclass
class ErrorSeries:
    """Relative-error history between a reference and a test trajectory."""

    rel_err: np.ndarray          # max over admitted sites, per step; NaN if none
    abs_err: np.ndarray          # max over all sites, per step
    t_star_index: int            # first time index achieving the max rel error
    max_rel_err: float
    mean_rel_err_at_t_star: float
    degenerate: np.ndarray = field(repr=False, default=None)  # per-step mask


def relative_error_series(reference: np.ndarray, test: np.ndarray,
                          guard: float = RELATIVE_ERROR_GUARD) -> ErrorSeries:
    """Sitewise relative error max'd per step, with small-amplitude sites excluded.

    reference/test: trajectories of shape (T, N).  Steps where no site
    clears the guard are flagged degenerate and ignored in the maximum.
    """
    reference = np.asarray(reference, dtype=float)
    test = np.asarray(test, dtype=float)
    if reference.shape != test.shape:
        raise ValueError("trajectories must have identical shapes")
    diff = np.abs(reference - test)
    admitted = np.abs(reference) >= guard
    degenerate = ~admitted.any(axis=1)
    if degenerate.all():
        raise ValueError("all steps degenerate: reference below guard everywhere")
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ratio = np.where(admitted, diff / np.abs(reference), np.nan)
    rel = np.nanmax(np.where(admitted, ratio, -np.inf), axis=1)
    rel[degenerate] = np.nan
    t_star = int(np.nanargmax(rel))
    mean_at_star = float(np.mean(ratio[t_star][admitted[t_star]]))
    return ErrorSeries(
        rel_err=rel,
        abs_err=diff.max(axis=1),
        t_star_index=t_star,
        max_rel_err=float(rel[t_star]),
        mean_rel_err_at_t_star=mean_at_star,
        degenerate=degenerate,
    )
