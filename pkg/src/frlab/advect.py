"""1D linear advection solved with FR and classic explicit Runge-Kutta."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import FrOperators, MeshSpec, gauss_points, gauss_weights, lagrange_matrix

DIVERGED = 1e12


# --- initial and boundary conditions -------------------------------------------


@dataclass(frozen=True)
class GaussianBump:
    center: float = 0.5
    width: float = 0.2
    images: int = 3  # periodic copies summed so the profile is smooth across the domain ends

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bump width must be positive")

    def __call__(self, x, length=None):
        if length is None:
            return np.exp(-((x - self.center) ** 2) / self.width**2)
        shifts = length * np.arange(-self.images, self.images + 1)
        return np.exp(-((x[..., None] - self.center + shifts) ** 2) / self.width**2).sum(-1)


@dataclass(frozen=True)
class Harmonic:
    k: float  # physical wavenumber
    amplitude: complex = 1.0

    def __call__(self, x, length=None):
        return self.amplitude * np.exp(1j * self.k * x)


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, x, length=None):
        return np.full(np.shape(x), self.value, dtype=float)


@dataclass(frozen=True)
class Noise:
    seed: int = 0
    amplitude: float = 1.0

    def __call__(self, x, length=None):
        return self.amplitude * np.random.default_rng(self.seed).standard_normal(np.shape(x))


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class InflowOutflow:
    """Prescribed inflow u(x0, t) = amplitude * cos(k (x0 - a t) + phase); outlet extrapolates.

    With the default phase the signal switches on abruptly against a quiescent
    domain, seeding every wavenumber the mesh supports.
    """

    amplitude: float = 1.0
    k: float = 1.0
    phase: float = 0.0

    def __call__(self, t, x0=0.0, a=1.0):
        return self.amplitude * np.cos(self.k * (x0 - a * t) + self.phase)


def harmonic_khat(m, n_elements, p, length=1.0):
    """Normalised wavenumber of the m-th Fourier mode on a periodic mesh."""
    delta = length / n_elements
    return 2 * np.pi * m / length * delta / (p + 1)


# --- configuration and state ---------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    ops: FrOperators
    n_elements: int = 20
    domain: tuple = (0.0, 1.0)
    bc: object = field(default_factory=Periodic)
    ic: object = field(default_factory=GaussianBump)
    cfl: float | None = 0.1
    tau: float | None = None
    t_end: float = 1.0
    rk_order: int = 3
    a: float = 1.0

    def __post_init__(self):
        if self.n_elements < 2:
            raise ValueError("need at least two elements")
        if self.rk_order not in (3, 4):
            raise ValueError(f"unsupported RK order {self.rk_order}")
        if self.tau is None and self.cfl is None:
            raise ValueError("give tau or cfl")
        if not self.dt > 0:
            raise ValueError("time step must be positive")

    @property
    def length(self):
        return self.domain[1] - self.domain[0]

    @property
    def mesh(self):
        return MeshSpec.uniform(self.n_elements, self.length)

    @property
    def dt(self):
        """tau when given, otherwise cfl * delta / |a|."""
        if self.tau is not None:
            return float(self.tau)
        return self.cfl * float(self.mesh.deltas[0]) / abs(self.a)

    @property
    def basis(self):
        return self.ops.basis or gauss_points(self.ops.p)

    def nodes(self):
        return self.mesh.nodes(self.basis, self.domain[0])


@dataclass
class SimState:
    u: np.ndarray  # (n_elements, p+1)
    t: float = 0.0
    step_count: int = 0
    diverged: bool = False


def initial_state(cfg: SimConfig) -> SimState:
    periodic = isinstance(cfg.bc, Periodic)
    x = cfg.nodes()
    u = cfg.ic(x - cfg.domain[0], cfg.length if periodic else None) if isinstance(cfg.ic, GaussianBump) \
        else cfg.ic(x)
    return SimState(np.array(u))


# --- spatial operator and time stepping ----------------------------------------


def rhs(u, ops: FrOperators, mesh: MeshSpec, bc, t=0.0, a=1.0, x0=0.0):
    """du/dt for every element.

    Evaluated in interface-jump form, D u - alpha hl [u]_L - (1 - alpha) hr [u]_R,
    which is algebraically the three-cell stencil C-1, C0, C+1 but cancels at
    the faces rather than after scaling, so constants give zero to rounding.
    """
    if isinstance(bc, Periodic):
        left = np.roll(u, 1, axis=0)
        right = np.roll(u, -1, axis=0)
    else:
        # ghost elements are constants carrying the prescribed face values
        inflow = bc(t, x0, a)
        outlet = u[-1] @ ops.lr
        left = np.concatenate([np.full((1, u.shape[1]), inflow, dtype=u.dtype), u[:-1]])
        right = np.concatenate([u[1:], np.full((1, u.shape[1]), outlet, dtype=u.dtype)])
    al = ops.alpha
    flux = u @ ops.D.T
    if al:
        flux = flux - al * (u @ ops.ll - left @ ops.lr)[:, None] * ops.hl
    if al != 1:
        flux = flux - (1 - al) * (u @ ops.lr - right @ ops.ll)[:, None] * ops.hr
    if ops.prefilter is not None:
        flux = flux @ ops.prefilter.T
    return -(a / mesh.jacobians)[:, None] * flux


def _stages(rk_order):
    if rk_order == 3:
        # Kutta's third-order scheme
        return [[], [0.5], [-1.0, 2.0]], [1 / 6, 2 / 3, 1 / 6], [0.0, 0.5, 1.0]
    if rk_order == 4:
        return [[], [0.5], [0.0, 0.5], [0.0, 0.0, 1.0]], [1 / 6, 1 / 3, 1 / 3, 1 / 6], [0.0, 0.5, 0.5, 1.0]
    raise ValueError(f"unsupported RK order {rk_order}")


def step(state: SimState, tau, rk_order, f) -> SimState:
    """One explicit RK step of du/dt = f(u, t)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    A, b, c = _stages(rk_order)
    u, t = state.u, state.t
    ks = []
    for a_row, ci in zip(A, c):
        ui = u + tau * sum(aij * kj for aij, kj in zip(a_row, ks)) if a_row else u
        ks.append(f(ui, t + ci * tau))
    new = u + tau * sum(bi * ki for bi, ki in zip(b, ks))
    diverged = not np.all(np.isfinite(new)) or np.abs(new).max() > DIVERGED
    return SimState(new, t + tau, state.step_count + 1, diverged)


def make_rhs(cfg: SimConfig):
    ops, mesh, bc, a, x0 = cfg.ops, cfg.mesh, cfg.bc, cfg.a, cfg.domain[0]
    return lambda u, t: rhs(u, ops, mesh, bc, t, a, x0)


def integrate(cfg: SimConfig, n_steps=None, state=None, callback=None) -> SimState:
    """March to t_end (or for n_steps); stops early once the run diverges."""
    state = state or initial_state(cfg)
    f = make_rhs(cfg)
    tau = cfg.dt
    if n_steps is None:
        n_steps = int(np.ceil(cfg.t_end / tau - 1e-9))
    for _ in range(n_steps):
        state = step(state, tau, cfg.rk_order, f)
        if callback is not None:
            callback(state)
        if state.diverged:
            break
    return state


def energy(u, mesh: MeshSpec, p):
    """Quadrature L2 energy sum_j J_j sum_i w_i |u_ji|^2."""
    w = gauss_weights(p)
    return float(np.sum(mesh.jacobians[:, None] * w[None, :] * np.abs(u) ** 2))


def total_integral(u, mesh: MeshSpec, p):
    w = gauss_weights(p)
    return np.sum(mesh.jacobians[:, None] * w[None, :] * u)


# --- experiments ----------------------------------------------------------------


@dataclass
class BumpResult:
    state: SimState
    l2: float
    linf: float
    umin: float
    peak_x: float
    peak_value: float
    exact_peak_x: float
    lag: float  # analytic minus measured peak position, wrapped to (-L/2, L/2]
    x_fine: np.ndarray = field(repr=False, default=None)
    u_fine: np.ndarray = field(repr=False, default=None)

    @property
    def diverged(self):
        return self.state.diverged


def sample_fine(u, cfg: SimConfig, n_per_element=24):
    """Evaluate the element polynomials on a uniform sub-grid."""
    xi = np.linspace(-1, 1, n_per_element)
    L = lagrange_matrix(cfg.basis.xi, xi)
    mesh = cfg.mesh
    left = cfg.domain[0] + mesh.edges[:-1]
    x = left[:, None] + (xi[None, :] + 1) * mesh.jacobians[:, None]
    return x.ravel(), (u @ L.T).ravel()


def bump_errors(state: SimState, cfg: SimConfig):
    bump = cfg.ic
    L = cfg.length
    x = cfg.nodes() - cfg.domain[0]
    shifted = np.mod(x - cfg.a * state.t, L)
    exact = bump(shifted, L)
    w = gauss_weights(cfg.ops.p)
    diff = state.u.real - exact
    l2 = float(np.sqrt(np.sum(cfg.mesh.jacobians[:, None] * w[None, :] * diff**2)))
    return l2, float(np.abs(diff).max())


def run_bump_case(cfg: SimConfig, n_steps=None) -> BumpResult:
    if not isinstance(cfg.ic, GaussianBump) or not isinstance(cfg.bc, Periodic):
        raise ValueError("bump case needs a GaussianBump initial condition on a periodic mesh")
    state = integrate(cfg, n_steps)
    L = cfg.length
    xf, uf = sample_fine(state.u.real, cfg)
    if state.diverged:
        return BumpResult(state, np.inf, np.inf, -np.inf, np.nan, np.nan, np.nan, np.nan, xf, uf)
    l2, linf = bump_errors(state, cfg)
    peak_x, peak_u = _refine_peak(xf, uf)
    exact_peak = cfg.domain[0] + np.mod(cfg.ic.center + cfg.a * state.t, L)
    lag = float(np.mod(exact_peak - peak_x + L / 2, L) - L / 2)
    return BumpResult(state, l2, linf, float(uf.min()), peak_x, peak_u,
                      float(exact_peak), lag, xf, uf)


def _refine_peak(x, u):
    """Vertex of the parabola through the sampled maximum and its neighbours."""
    i = int(np.argmax(u))
    if 0 < i < len(u) - 1:
        (x0, x1, x2), (y0, y1, y2) = x[i - 1:i + 2], u[i - 1:i + 2]
        den = (x0 - x1) * (x0 - x2) * (x1 - x2)
        if den == 0:  # duplicated element-edge sample
            return float(x[i]), float(u[i])
        A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
        B = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / den
        if A < 0:
            xv = -B / (2 * A)
            if x0 <= xv <= x2:
                return float(xv), float(y1 - A * (x1 - xv) ** 2)
    return float(x[i]), float(u[i])


@dataclass
class WaveResult:
    t: np.ndarray
    probe: np.ndarray
    diverged: bool
    growth: bool  # probe amplitude exceeded growth_factor times the inflow amplitude


def run_wave_case(cfg: SimConfig, growth_factor=10.0) -> WaveResult:
    if not isinstance(cfg.bc, InflowOutflow):
        raise ValueError("wave case needs an InflowOutflow boundary")
    if cfg.ops.alpha != 1.0:
        raise ValueError("the extrapolated outlet requires full upwinding (alpha = 1)")
    ts, ps = [0.0], [0.0]
    lr = cfg.ops.lr

    def probe(s):
        ts.append(s.t)
        ps.append(float(np.real(s.u[-1] @ lr)))

    state = integrate(replace(cfg, ic=Constant(0.0)), callback=probe)
    ps = np.array(ps)
    amp = abs(cfg.bc.amplitude)
    grew = state.diverged or bool(np.any(np.abs(ps) > growth_factor * max(amp, 1e-300))) if amp > 0 \
        else bool(np.any(ps != 0))
    return WaveResult(np.array(ts), ps, state.diverged, grew)


@dataclass
class OrderStudy:
    n_elements: np.ndarray
    dx: np.ndarray
    l2: np.ndarray
    slope: float
    diverged: np.ndarray

    def rows(self):
        for n, dx, e in zip(self.n_elements, self.dx, self.l2):
            yield int(n), dx, e


def order_study(template: SimConfig, n_grid, n_steps=1000) -> OrderStudy:
    """Bump errors after a fixed number of steps at fixed CFL, plus the log-log slope."""
    n_grid = np.asarray(n_grid, int)
    errs, dxs, div = [], [], []
    for n in n_grid:
        cfg = replace(template, n_elements=int(n))
        res = run_bump_case(cfg, n_steps=n_steps)
        errs.append(res.l2)
        dxs.append(cfg.length / n)
        div.append(res.diverged)
    errs, dxs = np.array(errs), np.array(dxs)
    ok = np.isfinite(errs) & (errs > 0)
    slope = float(np.polyfit(np.log(dxs[ok]), np.log(errs[ok]), 1)[0]) if ok.sum() >= 2 else np.nan
    return OrderStudy(n_grid, dxs, errs, slope, np.array(div))
