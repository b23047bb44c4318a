"""Variable-order (1-5) BDF integrator with modified Newton iterations.

The history is kept as backward differences on an equally spaced grid;
a step-size change re-interpolates the differences onto the new spacing,
so the formula coefficients stay fixed for each order.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la

from .errors import MaxStepsExceeded, NewtonDivergence, SingularIterationMatrix, StepSizeUnderflow
from .steppers import MAX_FACTOR, MIN_FACTOR, NEGATIVE_LIMIT, Scratch, scaled_rms

MAX_ORDER = 5
NEWTON_MAXITER = 4
REFACTOR_STEP_CHANGE = 0.3
REFACTOR_RATE = 0.5

_k = np.arange(MAX_ORDER + 1)
GAMMA = np.hstack((0.0, np.cumsum(1.0 / _k[1:])))
ALPHA = GAMMA.copy()
ERROR_CONST = 1.0 / (_k + 1)


def _compute_R(order: int, factor: float) -> np.ndarray:
    I = np.arange(1, order + 1)[:, None]
    J = np.arange(1, order + 1)
    M = np.zeros((order + 1, order + 1))
    M[1:, 1:] = (I - 1 - factor * J) / I
    M[0] = 1.0
    return np.cumprod(M, axis=0)


def _change_D(D: np.ndarray, order: int, factor: float) -> None:
    R = _compute_R(order, factor)
    U = _compute_R(order, 1.0)
    RU = R.dot(U)
    D[: order + 1] = RU.T.dot(D[: order + 1])


class BDF:
    """Stateful BDF stepper over a compiled network.

    The iteration matrix ``I - c*J`` (``c = h / alpha_order``) is refactored
    only when ``c`` drifts more than 30% from the factored value, or when the
    observed Newton contraction rate exceeds 0.5.  The Jacobian itself is
    re-evaluated only after a Newton failure with a stale Jacobian.
    """

    def __init__(self, scratch: Scratch, t0: float, x0: np.ndarray, h: float,
                 h_min: float = 0.0, h_max: float = math.inf, max_steps: int | None = None):
        self.s = scratch
        self.t = t0
        self.x = np.array(x0, dtype=float)
        n = self.x.size
        self.h = h
        self.h_min = h_min
        self.h_max = h_max
        self.max_steps = max_steps
        self.order = 1
        self.n_equal_steps = 0
        self.D = np.zeros((MAX_ORDER + 3, n))
        self.D[0] = self.x
        self.D[1] = scratch.f_at(self.x) * h
        self.lu = None
        self.lu_c: float | None = None
        self.jac_fresh = False
        self.last_rate = 0.0
        rtol = scratch.rtol
        self.newton_tol = max(10 * np.finfo(float).eps / rtol, min(0.03, rtol ** 0.5))

    def _jacobian(self):
        # force re-evaluation at the current solution
        self.s.jac_x = None
        self.s.jacobian_at(self.x)
        self.jac_fresh = True
        self.lu = None

    def _factor(self, c: float):
        n = self.x.size
        A = -c * self.s.jac_dense
        A[np.diag_indices(n)] += 1.0
        lu, piv = la.lu_factor(A, check_finite=False)
        self.s.stats.lu_factorizations += 1
        if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0.0):
            raise SingularIterationMatrix(f"BDF iteration matrix is singular at t={self.t}", self.t)
        self.lu = (lu, piv)
        self.lu_c = c

    def _newton(self, x_pred, psi, c, scale):
        s = self.s
        d = np.zeros_like(x_pred)
        y = x_pred.copy()
        f = np.empty_like(x_pred)
        dy_norm_old = None
        rate = None
        converged = False
        n_iter = 0
        for k in range(NEWTON_MAXITER):
            n_iter = k + 1
            s.rhs(y, f)
            if not np.all(np.isfinite(f)):
                break
            dy = la.lu_solve(self.lu, c * f - psi - d, check_finite=False)
            dy_norm = scaled_rms(dy, scale)
            rate = None if dy_norm_old is None else dy_norm / dy_norm_old
            if rate is not None and (rate >= 1 or rate ** (NEWTON_MAXITER - k) / (1 - rate) * dy_norm > self.newton_tol):
                break
            y += dy
            d += dy
            if dy_norm == 0 or (rate is not None and rate / (1 - rate) * dy_norm < self.newton_tol):
                converged = True
                break
            dy_norm_old = dy_norm
        return converged, n_iter, y, d, rate

    def _rescale(self, factor: float):
        _change_D(self.D, self.order, factor)
        self.h *= factor
        self.n_equal_steps = 0

    def step(self, t_end: float):
        """Advance one accepted step (retrying internally); return (t, x)."""
        s = self.s
        eps_t = 10 * np.finfo(float).eps * max(abs(self.t), 1.0)
        if self.h > self.h_max:
            self._rescale(self.h_max / self.h)
        if self.t + self.h > t_end or t_end - (self.t + self.h) < eps_t:
            self._rescale((t_end - self.t) / self.h)
        while True:
            if self.max_steps is not None and s.stats.attempts >= self.max_steps:
                raise MaxStepsExceeded(f"maximum number of steps ({self.max_steps}) reached at t={self.t}", self.t)
            h_floor = max(self.h_min, eps_t)
            if self.h < h_floor:
                raise StepSizeUnderflow(f"step size underflow at t={self.t}", self.t)
            order = self.order
            D = self.D
            t_new = self.t + self.h
            if abs(t_end - t_new) < eps_t:
                t_new = t_end
            x_pred = D[: order + 1].sum(axis=0)
            scale = s.atol + s.rtol * np.abs(x_pred)
            psi = GAMMA[1: order + 1].dot(D[1: order + 1]) / ALPHA[order]
            c = self.h / ALPHA[order]

            if self.lu is not None and (
                abs(c / self.lu_c - 1.0) > REFACTOR_STEP_CHANGE or self.last_rate > REFACTOR_RATE
            ):
                self.lu = None
            if s.jac_x is None:
                self._jacobian()

            converged = False
            while not converged:
                if self.lu is None:
                    try:
                        self._factor(c)
                    except SingularIterationMatrix:
                        if self.h * 0.5 < h_floor:
                            raise
                        break
                converged, n_iter, y, d, rate = self._newton(x_pred, psi, c, scale)
                self.last_rate = rate or 0.0
                if not converged:
                    if not self.jac_fresh:
                        self._jacobian()
                        self.lu = None
                        continue
                    break
            if not converged:
                s.stats.steps_rejected += 1
                if self.h * 0.5 < h_floor:
                    raise NewtonDivergence(f"Newton iteration failed to converge at t={self.t}", self.t)
                self._rescale(0.5)
                self.lu = None
                continue

            safety = 0.9 * (2 * NEWTON_MAXITER + 1) / (2 * NEWTON_MAXITER + n_iter)
            scale = s.atol + s.rtol * np.abs(y)
            err_norm = scaled_rms(ERROR_CONST[order] * d, scale)
            if np.any(y < -NEGATIVE_LIMIT * s.atol):
                s.stats.steps_rejected += 1
                self._rescale(0.5)
                continue
            if not math.isfinite(err_norm) or err_norm > 1:
                s.stats.steps_rejected += 1
                fac = MIN_FACTOR if not math.isfinite(err_norm) else max(
                    MIN_FACTOR, safety * err_norm ** (-1 / (order + 1)))
                self._rescale(fac)
                continue
            break

        s.stats.steps_accepted += 1
        self.n_equal_steps += 1
        self.t = t_new
        self.x = y
        self.jac_fresh = False
        D[order + 2] = d - D[order + 1]
        D[order + 1] = d
        for i in reversed(range(order + 1)):
            D[i] += D[i + 1]

        if self.n_equal_steps < order + 1:
            return self.t, self.x

        err_m = scaled_rms(ERROR_CONST[order - 1] * D[order], scale) if order > 1 else math.inf
        err_p = scaled_rms(ERROR_CONST[order + 1] * D[order + 2], scale) if order < MAX_ORDER else math.inf
        norms = np.array([err_m, err_norm, err_p])
        with np.errstate(divide="ignore"):
            factors = norms ** (-1.0 / np.arange(order, order + 3))
        delta = int(np.argmax(factors)) - 1
        self.order = order + delta
        factor = min(MAX_FACTOR, safety * float(np.max(factors)))
        self._rescale(factor)
        return self.t, self.x
