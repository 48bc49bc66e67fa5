"""Fully discrete von Neumann analysis of FR for linear advection.

Conventions: wave speed a = 1 and unit elements (delta = 1) unless a mesh is
given, so the CFL number a*tau/delta equals tau. Normalised wavenumber
khat = k * delta / (p + 1), with khat = pi the solution-point Nyquist limit.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .core import FrOperators, MeshSpec, CorrectionScheme, assemble_operators, gauss_points, iota_huynh
from .filtering import FilterMode, FilterSpec, filtered_operators

STABILITY_TOL = 1e-10
DEFECTIVE_DET = 1e-10


class SemiDiscreteInstabilityError(ArithmeticError):
    """No time step makes the fully discrete scheme stable."""


def default_khat(n=400):
    return np.linspace(np.pi / n, np.pi, n)


def wavenumber(khat, p, delta=1.0):
    return np.asarray(khat) * (p + 1) / delta


# --- operators ----------------------------------------------------------------


def assemble_q(ops: FrOperators, mesh: MeshSpec | None = None, khat=np.pi / 4, a=1.0):
    """Bloch-wave operator Q(k); vectorised over khat (returns (..., n, n))."""
    mesh = mesh or MeshSpec.uniform()
    if not mesh.is_uniform:
        raise ValueError("spectral analysis needs a uniform mesh")
    delta = float(mesh.deltas[0])
    J = delta / 2.0
    k = wavenumber(khat, ops.p, delta)
    ph = np.exp(1j * k * delta)[..., None, None]
    return -(a / J) * (ops.Cp * ph + ops.C0 + ops.Cm / ph)


def rk_coeffs(rk_order):
    if rk_order not in (3, 4):
        raise ValueError(f"unsupported RK order {rk_order}; expected 3 or 4")
    return np.array([1.0 / factorial(m) for m in range(rk_order + 1)])


def rk_poly(z, rk_order):
    """Stability polynomial sum_{m<=r} z^m / m! of the classic RK schemes."""
    c = rk_coeffs(rk_order)
    out = np.full(np.shape(z), c[-1], dtype=complex)
    for cm in c[-2::-1]:
        out = out * z + cm
    return out


def update_matrix(Q, tau, rk_order=3):
    """R = sum_{m<=r} (tau Q)^m / m!, Horner form; works on stacks of Q."""
    c = rk_coeffs(rk_order)
    Q = np.asarray(Q, dtype=complex)
    eye = np.broadcast_to(np.eye(Q.shape[-1]), Q.shape)
    R = c[-1] * eye
    for cm in c[-2::-1]:
        R = tau * (Q @ R) + cm * eye
    return R


# --- eigen-analysis -----------------------------------------------------------


def bloch_vector(basis, k, J):
    return np.exp(1j * k * J * (basis.xi + 1.0))


def _overlap(A, B):
    """|<a_i, b_j>| / (|a_i| |b_j|) for column sets A, B."""
    A = A / np.linalg.norm(A, axis=0)
    B = B / np.linalg.norm(B, axis=0)
    return np.abs(A.conj().T @ B)


@dataclass
class SpectralResult:
    """Per-khat modes, tracked so that column 0 is the primary harmonic."""

    khat: np.ndarray
    k: np.ndarray
    mu: np.ndarray  # eigenvalues of R (fully discrete) or Q (semi-discrete)
    vectors: np.ndarray
    c: np.ndarray  # complex wave speeds, unwrapped along khat
    defective: np.ndarray
    tau: float | None
    rk_order: int | None
    meta: dict = field(default_factory=dict)

    @property
    def primary(self):
        return self.c[:, 0]

    @property
    def omega(self):
        """Modified frequency omega' = c k."""
        return self.c * self.k[:, None]

    @property
    def abs_mu(self):
        return np.abs(self.mu)

    def rows(self):
        """(khat, mode, re_c, im_c, abs_mu) records."""
        for i, kh in enumerate(self.khat):
            for n in range(self.c.shape[1]):
                yield kh, n, self.c[i, n].real, self.c[i, n].imag, abs(self.mu[i, n])


def fully_discrete_modes(R, khat, tau, p, delta=1.0):
    """Eigenvalues, eigenvectors and principal-branch wave speeds of R at one khat."""
    k = float(wavenumber(khat, p, delta))
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    mu, V = np.linalg.eig(R)
    V = V / np.linalg.norm(V, axis=0)
    c = 1j * np.log(mu) / (k * tau)
    defective = abs(np.linalg.det(V)) <= DEFECTIVE_DET
    return mu, V, c, defective


def _track(khat, k, mats, basis, J, speed_of):
    """Eigensolve each matrix and order modes by eigenvector continuity."""
    K, n = len(khat), mats.shape[-1]
    mu = np.zeros((K, n), complex)
    vecs = np.zeros((K, n, n), complex)
    defective = np.zeros(K, bool)
    order_prev = None
    V_prev = None
    for i in range(K):
        w, V = np.linalg.eig(mats[i])
        V = V / np.linalg.norm(V, axis=0)
        defective[i] = abs(np.linalg.det(V)) <= DEFECTIVE_DET
        if V_prev is None:
            ov = _overlap(V, bloch_vector(basis, k[i], J)[:, None])[:, 0]
            order = np.argsort(-ov, kind="stable")
        elif defective[i]:
            order = np.arange(n)
        else:
            rows, cols = linear_sum_assignment(-_overlap(V_prev, V))
            order = cols[np.argsort(rows)]
        mu[i] = w[order]
        vecs[i] = V[:, order]
        if not defective[i]:
            V_prev = vecs[i]
        order_prev = order
    c = speed_of(mu, k)
    # defective points keep an arbitrary ordering; copy the neighbour so curves stay continuous
    for i in np.flatnonzero(defective):
        j = i - 1 if i > 0 else i + 1
        if 0 <= j < K:
            c[i] = c[j]
    del order_prev
    return mu, vecs, c, defective


def _check_khat(khat):
    khat = np.asarray(khat, dtype=float)
    if np.any(khat <= 0) or np.any(khat > np.pi + 1e-12) or np.any(np.diff(khat) <= 0):
        raise ValueError("khat must be strictly increasing within (0, pi]")
    return khat


@dataclass(frozen=True)
class SpectralConfig:
    ops: FrOperators
    tau: float = 0.1
    rk_order: int = 3
    mesh: MeshSpec = field(default_factory=MeshSpec.uniform)
    khat: np.ndarray = field(default_factory=default_khat)
    a: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        rk_coeffs(self.rk_order)
        object.__setattr__(self, "khat", _check_khat(self.khat))

    @property
    def delta(self):
        return float(self.mesh.deltas[0])

    @property
    def k(self):
        return wavenumber(self.khat, self.ops.p, self.delta)

    def q(self):
        return assemble_q(self.ops, self.mesh, self.khat, self.a)

    def r(self):
        return update_matrix(self.q(), self.tau, self.rk_order)


def dispersion(cfg: SpectralConfig) -> SpectralResult:
    """Fully discrete dispersion/dissipation over the khat grid."""
    k = cfg.k
    tau = cfg.tau

    def speed(mu, k):
        theta = np.unwrap(np.angle(mu), axis=0)
        return 1j * (np.log(np.abs(mu)) + 1j * theta) / (k[:, None] * tau)

    basis = cfg.ops.basis or gauss_points(cfg.ops.p)
    mu, V, c, bad = _track(cfg.khat, k, cfg.r(), basis, cfg.delta / 2, speed)
    return SpectralResult(cfg.khat, k, mu, V, c / cfg.a, bad, tau, cfg.rk_order,
                          meta={"kind": "fully-discrete"})


def semi_discrete_dispersion(cfg: SpectralConfig) -> SpectralResult:
    """Convective velocities Gamma / (-i k) of Q; mu holds the eigenvalues Gamma."""
    basis = cfg.ops.basis or gauss_points(cfg.ops.p)
    mu, V, c, bad = _track(cfg.khat, cfg.k, cfg.q(), basis, cfg.delta / 2,
                           lambda g, k: g / (-1j * k[:, None]))
    return SpectralResult(cfg.khat, cfg.k, mu, V, c / cfg.a, bad, None, None,
                          meta={"kind": "semi-discrete"})


# --- stability ----------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    worst_khat: float
    worst_abs_mu: float

    def __bool__(self):
        return self.stable


def spectral_radius(cfg: SpectralConfig):
    """max |eig R| per khat, on the grid plus the Nyquist point khat = pi."""
    khat = np.union1d(cfg.khat, [np.pi])
    R = update_matrix(assemble_q(cfg.ops, cfg.mesh, khat, cfg.a), cfg.tau, cfg.rk_order)
    return khat, np.abs(np.linalg.eigvals(R)).max(axis=1)


def is_stable(cfg: SpectralConfig, tol=STABILITY_TOL) -> StabilityReport:
    khat, rho = spectral_radius(cfg)
    i = int(np.argmax(rho))
    return StabilityReport(bool(rho[i] <= 1.0 + tol), float(khat[i]), float(rho[i]))


@dataclass(frozen=True)
class StableWindow:
    """Stable time steps form [tau_lo, tau_hi]; tau_lo > 0 when Q itself is unstable."""

    tau_lo: float
    tau_hi: float
    semi_discrete_stable: bool
    max_growth_rate: float

    @property
    def cfl(self):
        return self.tau_hi


def q_eigenvalues(ops, khat=None, mesh=None, a=1.0):
    khat = default_khat() if khat is None else np.asarray(khat)
    khat = np.union1d(khat, [np.pi])
    return np.linalg.eigvals(assemble_q(ops, mesh, khat, a)).ravel()


def _stable_at(gamma, tau, rk_order, tol):
    # eig(R(tau Q)) = P(tau eig Q), so the spectrum of Q suffices
    return np.abs(rk_poly(tau * gamma, rk_order)).max() <= 1.0 + tol


def stable_window(ops, rk_order=3, khat=None, mesh=None, a=1.0, xtol=1e-6,
                  n_probe=2000, tol=STABILITY_TOL) -> StableWindow:
    mesh = mesh or MeshSpec.uniform()
    gamma = q_eigenvalues(ops, khat, mesh, a)
    growth = float(gamma.real.max())
    semi_ok = growth <= tol * max(1.0, np.abs(gamma).max())
    # RK3/RK4 stability regions sit inside |z| < 3
    cap = 3.0 / np.abs(gamma).max()
    taus = np.linspace(cap / n_probe, cap, n_probe)
    ok = np.empty(n_probe, bool)
    for s in range(0, n_probe, 250):
        z = taus[s:s + 250, None] * gamma[None, :]
        ok[s:s + 250] = np.abs(rk_poly(z, rk_order)).max(axis=1) <= 1.0 + tol
    if not ok.any():
        raise SemiDiscreteInstabilityError(
            f"no stable time step: semi-discrete operator has growth rate {growth:.3e} "
            f"that RK{rk_order}{rk_order} truncation cannot damp"
        )
    idx = np.flatnonzero(ok)

    def bisect(good, bad):
        while abs(bad - good) > xtol:
            mid = 0.5 * (good + bad)
            if _stable_at(gamma, mid, rk_order, tol):
                good = mid
            else:
                bad = mid
        return good

    hi_i = idx[-1]
    tau_hi = taus[hi_i] if hi_i == n_probe - 1 else bisect(taus[hi_i], taus[hi_i + 1])
    lo_i = idx[0]
    if lo_i == 0 and semi_ok:
        tau_lo = 0.0
    else:
        tau_lo = bisect(taus[lo_i], taus[lo_i - 1] if lo_i > 0 else 0.0)
    return StableWindow(float(tau_lo), float(tau_hi), bool(semi_ok), growth)


def cfl_limit(ops, rk_order=3, khat=None, mesh=None, xtol=1e-6) -> float:
    """Largest stable time step, expressed as CFL = a tau / delta."""
    mesh = mesh or MeshSpec.uniform()
    w = stable_window(ops, rk_order, khat, mesh, xtol=xtol)
    return w.tau_hi / float(mesh.deltas[0])


# --- parameter scans ----------------------------------------------------------


def _cfl_cell(args):
    p, iota, sigma, mode, rk_order, alpha, khat = args
    try:
        ops = assemble_operators(gauss_points(p), CorrectionScheme.custom(iota), alpha)
        ops = filtered_operators(ops, FilterSpec(sigma, mode if sigma > 0 else FilterMode.NONE))
        w = stable_window(ops, rk_order, khat)
        return w.tau_hi, w.tau_lo, w.semi_discrete_stable, True
    except (ValueError, SemiDiscreteInstabilityError):
        return 0.0, np.nan, False, False


def _workers(workers):
    if workers is None:
        env = os.environ.get("FRLAB_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


@dataclass
class CflMap:
    iota: np.ndarray
    sigma: np.ndarray
    cfl: np.ndarray  # (len(iota), len(sigma)); 0 where no time step is stable
    tau_lo: np.ndarray
    semi_stable: np.ndarray
    valid: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def argmax(self):
        i, j = np.unravel_index(np.argmax(self.cfl), self.cfl.shape)
        return float(self.iota[i]), float(self.sigma[j]), float(self.cfl[i, j])

    @property
    def baseline(self):
        """Best unfiltered CFL (sigma = 0 column)."""
        j = np.flatnonzero(self.sigma == 0)
        if not len(j):
            raise ValueError("scan has no sigma = 0 column")
        return float(np.max(self.cfl[:, j[0]]))

    @property
    def boost(self):
        return self.argmax[2] / self.baseline - 1.0

    def rows(self):
        for i, io in enumerate(self.iota):
            for j, s in enumerate(self.sigma):
                yield io, s, self.cfl[i, j]


def cfl_scan(p, rk_order, alpha, iota_grid, sigma_grid, mode="full", khat=None, workers=None) -> CflMap:
    iota_grid = np.atleast_1d(np.asarray(iota_grid, float))
    sigma_grid = np.atleast_1d(np.asarray(sigma_grid, float))
    if not len(iota_grid) or not len(sigma_grid):
        raise ValueError("scan grids must be non-empty")
    mode = FilterMode.parse(mode)
    khat = default_khat() if khat is None else np.asarray(khat)
    cells = [(p, io, s, mode, rk_order, alpha, khat) for io in iota_grid for s in sigma_grid]
    nw = _workers(workers)
    if nw > 1 and len(cells) > 1:
        with ProcessPoolExecutor(nw) as ex:
            out = list(ex.map(_cfl_cell, cells, chunksize=max(1, len(cells) // (4 * nw))))
    else:
        out = [_cfl_cell(c) for c in cells]
    arr = np.array(out, dtype=float).reshape(len(iota_grid), len(sigma_grid), 4)
    return CflMap(
        iota_grid, sigma_grid, arr[..., 0], arr[..., 1], arr[..., 2].astype(bool), arr[..., 3].astype(bool),
        meta={"p": p, "rk_order": rk_order, "alpha": alpha, "mode": mode.value},
    )


def default_iota_grid(p, n=41, span=4.0):
    """Uniform iota grid from DG (0) to span * iota_Huynh."""
    return np.linspace(0.0, span * iota_huynh(p), n)


def default_sigma_grid(step=0.025, top=1.0):
    return np.round(np.arange(0.0, top + step / 2, step), 12)


def locate_iota_plus(p, rk_order=3, alpha=1.0, khat=None, span=4.0, n_coarse=41):
    """iota maximising the unfiltered CFL limit: coarse scan, then bounded refinement."""
    grid = default_iota_grid(p, n_coarse, span)

    def cfl_of(iota):
        ops = assemble_operators(gauss_points(p), CorrectionScheme.custom(iota), alpha)
        try:
            return cfl_limit(ops, rk_order, khat, xtol=1e-8)
        except SemiDiscreteInstabilityError:
            return 0.0

    vals = np.array([cfl_of(io) for io in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda io: -cfl_of(io), bounds=(lo, hi), method="bounded",
                          options={"xatol": (hi - lo) * 1e-4})
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(vals[i])


def sigma_edge(ops, tau, rk_order=3, mode="full", sigma_max=2.0, n_coarse=41, xtol=1e-5, khat=None):
    """Largest filter width keeping a fixed tau stable, by coarse scan then bisection.

    Returns 0.0 when even the unfiltered scheme is unstable at tau.
    """
    khat = default_khat() if khat is None else khat

    def ok(s):
        f = filtered_operators(ops, FilterSpec(s, mode)) if s > 0 else ops
        return bool(is_stable(SpectralConfig(f, tau=tau, rk_order=rk_order, khat=khat)))

    grid = np.linspace(0.0, sigma_max, n_coarse)
    flags = [ok(s) for s in grid]
    if not flags[0]:
        return 0.0
    first_bad = next((i for i, f in enumerate(flags) if not f), None)
    if first_bad is None:
        return float(sigma_max)
    good, bad = grid[first_bad - 1], grid[first_bad]
    while bad - good > xtol:
        mid = 0.5 * (good + bad)
        good, bad = (mid, bad) if ok(mid) else (good, mid)
    return float(good)
