"""Analytic error evolution of a single Bloch harmonic.

The semi-discrete operator is diagonalised as Q = W diag(Gamma) W^-1 and the
eigenvalues are stored as complex convective velocities
lambda_n = Gamma_n / (-i k), so the physical mode has lambda -> 1 as k -> 0 and
decaying modes have Im(lambda) < 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .core import FrOperators, MeshSpec, gauss_points
from .vonneumann import assemble_q, bloch_vector, default_khat, wavenumber

COND_LIMIT = 1e8
SATURATION = 1e12
CONVENTION = "lambda = Gamma/(-ik); e = exp(ik(x-ct)) sum_n (exp(-ikt(lambda_n - c)) - 1) beta_n w_n"


@dataclass(frozen=True)
class ModalDecomposition:
    Q: np.ndarray
    k: float
    W: np.ndarray  # unit-norm eigenvector columns
    gamma: np.ndarray
    lam: np.ndarray
    cond: float
    beta: np.ndarray | None = None

    @property
    def flagged(self):
        return self.cond > COND_LIMIT

    @property
    def primary(self):
        """Index of the mode carrying most of the harmonic (requires beta)."""
        if self.beta is None:
            raise ValueError("beta weights not computed")
        return int(np.argmax(np.abs(self.beta)))

    def reconstruct(self):
        return self.W @ np.diag(-1j * self.k * self.lam) @ np.linalg.inv(self.W)


def diagonalize(Q, k) -> ModalDecomposition:
    gamma, W = np.linalg.eig(Q)
    W = W / np.linalg.norm(W, axis=0)
    return ModalDecomposition(np.asarray(Q), float(k), W, gamma, gamma / (-1j * k), float(np.linalg.cond(W)))


def beta_weights(decomp: ModalDecomposition, basis, J, k):
    """Weights with W beta equal to the sampled harmonic exp(ik J (xi + 1))."""
    if decomp.flagged:
        raise np.linalg.LinAlgError(f"eigenvector matrix is ill-conditioned (cond={decomp.cond:.2e})")
    return np.linalg.solve(decomp.W, bloch_vector(basis, k, J))


def with_beta(decomp, basis, J):
    b = beta_weights(decomp, basis, J, decomp.k)
    return ModalDecomposition(decomp.Q, decomp.k, decomp.W, decomp.gamma, decomp.lam, decomp.cond, b)


def modal_setup(ops: FrOperators, khat, mesh: MeshSpec | None = None):
    mesh = mesh or MeshSpec.uniform()
    delta = float(mesh.deltas[0])
    k = float(wavenumber(khat, ops.p, delta))
    d = diagonalize(assemble_q(ops, mesh, khat), k)
    return with_beta(d, ops.basis or gauss_points(ops.p), delta / 2)


def _sign_check(decomp, c):
    """Pick the exponent sign that reproduces exp(tQ) at small t."""
    t = 1e-3
    v = decomp.W @ decomp.beta
    ref = expm(t * decomp.Q) @ v
    cand = {s: decomp.W @ (np.exp(s * 1j * decomp.k * t * decomp.lam) * decomp.beta) for s in (-1, 1)}
    return min(cand, key=lambda s: np.linalg.norm(cand[s] - ref))


def semi_discrete_error(decomp: ModalDecomposition, t, c=1.0, x=0.0):
    """Error vectors e(t) at the solution points; shape (len(t), p+1)."""
    t = np.atleast_1d(np.asarray(t, float))
    k, lam, beta = decomp.k, decomp.lam, decomp.beta
    s = _sign_check(decomp, c)
    if s != -1:
        raise ArithmeticError("eigenvalue convention does not reproduce exp(tQ)")
    fac = np.expm1(-1j * k * t[:, None] * (lam[None, :] - c))
    phase = np.exp(1j * k * (x - c * t))[:, None]
    return phase * ((fac * beta[None, :]) @ decomp.W.T)


def truncated_exp(z, r):
    """sum_{m<=r} z^m / m!"""
    out = np.ones_like(np.asarray(z, complex))
    term = np.ones_like(out)
    for m in range(1, r + 1):
        term = term * z / m
        out = out + term
    return out


def fully_discrete_error(decomp: ModalDecomposition, tau, r, n_steps, c=1.0, x=0.0, cap=SATURATION):
    """Error after n RK steps of order r; returns (e, saturated).

    Growing modes are evaluated in log space; any component beyond `cap` is
    clipped to the cap and the corresponding row flagged.
    """
    n = np.atleast_1d(np.asarray(n_steps, float))
    k, beta, W = decomp.k, decomp.beta, decomp.W
    P = truncated_exp(tau * decomp.gamma, r)
    logamp = n[:, None] * np.log(np.abs(P))[None, :] + np.log(np.abs(beta) + 1e-300)[None, :]
    saturated = (logamp > np.log(cap)).any(axis=1)
    logamp = np.minimum(logamp, np.log(cap))
    modal = np.exp(logamp + 1j * (n[:, None] * np.angle(P)[None, :] + np.angle(beta)[None, :]))
    exact = np.exp(-1j * k * c * n * tau)[:, None] * beta[None, :]
    e = np.exp(1j * k * x) * ((modal - exact) @ W.T)
    return e, saturated


def half_life(decomp: ModalDecomposition, c=1.0, J=1.0):
    """Per-mode decay time -1/(c k J^-1 Im(lambda_ref)), lambda_ref = J lambda.

    Non-decaying modes (Im lambda >= 0) get +inf.
    """
    lam_ref = J * decomp.lam
    im = lam_ref.imag
    with np.errstate(divide="ignore"):
        out = np.where(im < 0, -1.0 / (c * decomp.k * im / J), np.inf)
    return out


@dataclass
class ErrorMap:
    khat: np.ndarray
    times: np.ndarray  # t for semi-discrete maps, step counts for fully discrete ones
    error: np.ndarray  # (len(khat), len(times))
    saturated: np.ndarray
    half_life: np.ndarray  # (len(khat), p+1), primary mode in column 0
    kind: str = "semi"
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i, kh in enumerate(self.khat):
            for j, t in enumerate(self.times):
                yield kh, t, self.error[i, j], bool(self.saturated[i, j])

    def half_life_rows(self):
        for i, kh in enumerate(self.khat):
            for n, v in enumerate(self.half_life[i]):
                yield kh, n, v


def default_times(n=200):
    return np.logspace(-2, 3, n)


def _ordered_half_life(d, J):
    hl = half_life(d, J=J)
    i = d.primary
    return np.concatenate([[hl[i]], np.delete(hl, i)])


def error_map(ops: FrOperators, khat=None, times=None, tau=None, rk_order=None, mesh=None) -> ErrorMap:
    """Semi-discrete map when tau is None, else fully discrete with t = n tau."""
    mesh = mesh or MeshSpec.uniform()
    khat = default_khat() if khat is None else np.asarray(khat, float)
    times = default_times() if times is None else np.asarray(times, float)
    J = float(mesh.deltas[0]) / 2
    if tau is not None:
        steps = np.unique(np.maximum(np.round(times / tau), 0)).astype(int)
        cols = steps
    else:
        cols = times
    err = np.zeros((len(khat), len(cols)))
    sat = np.zeros_like(err, bool)
    hl = np.zeros((len(khat), ops.n))
    flagged = []
    for i, kh in enumerate(khat):
        d = diagonalize(assemble_q(ops, mesh, kh), float(wavenumber(kh, ops.p, 2 * J)))
        if d.flagged:
            flagged.append(float(kh))
            err[i], hl[i] = np.nan, np.nan
            continue
        d = with_beta(d, ops.basis or gauss_points(ops.p), J)
        if tau is None:
            e = semi_discrete_error(d, cols)
        else:
            e, sat[i] = fully_discrete_error(d, tau, rk_order, cols)
        err[i] = np.minimum(np.linalg.norm(e, axis=1), SATURATION)
        hl[i] = _ordered_half_life(d, J)
    meta = {"convention": CONVENTION, "flagged_khat": flagged}
    if tau is None:
        return ErrorMap(khat, cols, err, sat, hl, "semi", meta)
    meta.update(tau=tau, rk_order=rk_order)
    return ErrorMap(khat, cols, err, sat, hl, f"fully(tau={tau:g},r={rk_order})", meta)
