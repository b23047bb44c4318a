"""Single-step kernels: a linearly implicit Rosenbrock 4(3) method and the
explicit Dormand-Prince 5(4) pair.

Both share the acceptance rule (RMS scaled error <= 1) and a PI step-size
controller whose growth/shrink factor is confined to [0.2, 5].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import SingularIterationMatrix
from .kinetics import Workspace, eval_jacobian, eval_rhs, jacobian_pattern
from .network import CompiledNetwork

__all__ = [
    "SolverStats",
    "StepResult",
    "Scratch",
    "step_stiff",
    "step_explicit",
    "scaled_rms",
    "ROS4",
    "DOPRI5",
]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
NEGATIVE_LIMIT = 100.0  # reject when x < -NEGATIVE_LIMIT * atol


@dataclass
class SolverStats:
    steps_accepted: int = 0
    steps_rejected: int = 0
    rhs_evals: int = 0
    jac_evals: int = 0
    lu_factorizations: int = 0

    @property
    def attempts(self) -> int:
        return self.steps_accepted + self.steps_rejected

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


@dataclass
class StepResult:
    accepted: bool
    x_new: np.ndarray
    err_norm: float
    h_next: float


class _Tableau:
    """Rosenbrock coefficients in the (A, C, M, E) form with one gamma."""

    def __init__(self, name, gamma, A, C, M, E, new_f, elo):
        self.name = name
        self.gamma = gamma
        self.stages = len(M)
        s = self.stages
        self.A = np.zeros((s, s))
        self.C = np.zeros((s, s))
        k = 0
        for i in range(1, s):
            for j in range(i):
                self.A[i, j] = A[k]
                self.C[i, j] = C[k]
                k += 1
        self.M = np.asarray(M, dtype=float)
        self.E = np.asarray(E, dtype=float)
        self.new_f = tuple(new_f)
        self.elo = elo


# L-stable order-4 method with an embedded order-3 estimate
# (Hairer & Wanner, Solving ODEs II, "ROS4" / Shampine parameter set).
ROS4 = _Tableau(
    "rosenbrock4",
    gamma=0.5728200000000000,
    A=[2.0, 1.867943637803922, 0.2344449711399156, 1.867943637803922, 0.2344449711399156, 0.0],
    C=[-7.137615036412310, 2.580708087951457, 0.6515950076447975,
       -2.137148994382534, -0.3214669691237626, -0.6949742501781779],
    M=[2.255570073418735, 0.2870493262186792, 0.4353179431840180, 1.093502252409163],
    E=[-0.2815431932141155, -0.07276199124938920, -0.1082196201495311, -1.093502252409163],
    new_f=(True, True, True, False),
    elo=4.0,
)


class _DormandPrince:
    name = "erk45"
    c = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
    a = [
        [],
        [1 / 5],
        [3 / 40, 9 / 40],
        [44 / 45, -56 / 15, 32 / 9],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
        [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
    b = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
    b_hat = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
    e = b - b_hat
    elo = 5.0


DOPRI5 = _DormandPrince()


def scaled_rms(err: np.ndarray, scale: np.ndarray) -> float:
    return float(np.sqrt(np.mean((err / scale) ** 2))) if err.size else 0.0


@dataclass(eq=False)
class Scratch:
    """Mutable per-integration state for the one-step methods.

    Holds evaluation buffers, the cached Jacobian and LU factors, the
    previous accepted error (for the PI controller) and the counters.
    """

    net: CompiledNetwork
    rtol: float = 1e-6
    atol: np.ndarray | float = 1e-9
    stats: SolverStats = field(default_factory=SolverStats)

    def __post_init__(self):
        n = self.net.n_species
        self.atol = np.broadcast_to(np.asarray(self.atol, dtype=float), (n,)).copy()
        self.work = Workspace(self.net)
        self.jac = jacobian_pattern(self.net)
        self.jac_dense = np.zeros((n, n))
        self.jac_x: np.ndarray | None = None
        self.lu = None
        self.lu_h: float | None = None
        self.fx = np.empty(n)
        self.fx_at: np.ndarray | None = None
        self.err_prev = 1.0
        self.K = np.empty((max(ROS4.stages, 7), n))
        self.y = np.empty(n)
        self.f = np.empty(n)

    def rhs(self, x: np.ndarray, out: np.ndarray) -> np.ndarray:
        self.stats.rhs_evals += 1
        return eval_rhs(self.net, x, out, self.work)

    def f_at(self, x: np.ndarray) -> np.ndarray:
        """f(x), reusing the last value when x is unchanged."""
        if self.fx_at is None or not np.array_equal(self.fx_at, x):
            self.rhs(x, self.fx)
            self.fx_at = x.copy()
        return self.fx

    def jacobian_at(self, x: np.ndarray) -> np.ndarray:
        if self.jac_x is None or not np.array_equal(self.jac_x, x):
            eval_jacobian(self.net, x, self.jac, self.work)
            self.stats.jac_evals += 1
            self.jac_dense.fill(0.0)
            self.jac.toarray(out=self.jac_dense)
            self.jac_x = x.copy()
            self.lu = None
        return self.jac_dense

    def scale(self, x, x_new) -> np.ndarray:
        return self.atol + self.rtol * np.maximum(np.abs(x), np.abs(x_new))


def _factor(accepted: bool, err: float, err_prev: float, elo: float) -> float:
    if not math.isfinite(err):
        return MIN_FACTOR
    if accepted:
        if err == 0.0:
            return MAX_FACTOR
        fac = SAFETY * err ** (-0.7 / elo) * err_prev ** (0.4 / elo)
        return min(MAX_FACTOR, max(MIN_FACTOR, fac))
    return min(1.0, max(MIN_FACTOR, SAFETY * err ** (-1.0 / elo)))


def _finish(s: Scratch, x, x_new, err_vec, h, elo) -> StepResult:
    if not np.all(np.isfinite(x_new)):
        s.stats.steps_rejected += 1
        return StepResult(False, x_new, math.inf, h * MIN_FACTOR)
    err = scaled_rms(err_vec, s.scale(x, x_new))
    if np.any(x_new < -NEGATIVE_LIMIT * s.atol):
        s.stats.steps_rejected += 1
        return StepResult(False, x_new, err, 0.5 * h)
    accepted = err <= 1.0
    h_next = h * _factor(accepted, err, s.err_prev, elo)
    if accepted:
        s.stats.steps_accepted += 1
        s.err_prev = max(err, 1e-4)
    else:
        s.stats.steps_rejected += 1
    return StepResult(accepted, x_new, err, h_next)


def step_stiff(net: CompiledNetwork, x, t: float, h: float, scratch: Scratch | None = None,
               tableau: _Tableau = ROS4) -> StepResult:
    """One attempt of the Rosenbrock method from (t, x) with step h.

    Forms ``G = I/(h*gamma) - J`` from the analytic Jacobian, factors it with
    partial pivoting and solves one linear system per stage.  The Jacobian
    and the factorisation are reused when the same step is retried with the
    same ``x``.
    """
    s = scratch or Scratch(net)
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = s.f_at(x)
    J = s.jacobian_at(x)
    if s.lu is None or s.lu_h != h:
        G = -J
        G[np.diag_indices(n)] += 1.0 / (h * tableau.gamma)
        lu, piv = la.lu_factor(G, check_finite=False)
        s.stats.lu_factorizations += 1
        if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0.0):
            s.lu = None
            raise SingularIterationMatrix(f"iteration matrix is singular at t={t}", t)
        s.lu = (lu, piv)
        s.lu_h = h
    K = s.K
    F = f0
    for i in range(tableau.stages):
        if i > 0 and tableau.new_f[i]:
            np.copyto(s.y, x)
            for j in range(i):
                if tableau.A[i, j]:
                    s.y += tableau.A[i, j] * K[j]
            F = s.rhs(s.y, s.f)
        rhs = F.copy()
        for j in range(i):
            if tableau.C[i, j]:
                rhs += (tableau.C[i, j] / h) * K[j]
        K[i] = la.lu_solve(s.lu, rhs, check_finite=False)
    x_new = x + tableau.M @ K[: tableau.stages]
    err_vec = tableau.E @ K[: tableau.stages]
    return _finish(s, x, x_new, err_vec, h, tableau.elo)


def step_explicit(net: CompiledNetwork, x, t: float, h: float, scratch: Scratch | None = None) -> StepResult:
    """One attempt of the Dormand-Prince 5(4) pair (no Jacobian)."""
    s = scratch or Scratch(net)
    tb = DOPRI5
    x = np.asarray(x, dtype=float)
    K = s.K
    K[0] = s.f_at(x)
    for i in range(1, 7):
        y = x.copy()
        for j, a in enumerate(tb.a[i]):
            if a:
                y += (h * a) * K[j]
        if i == 6:
            x_new = y
        s.rhs(y, K[i])
    err_vec = h * (tb.e @ K[:7])
    res = _finish(s, x, x_new, err_vec, h, tb.elo)
    if res.accepted:
        # first-same-as-last: K[6] is f(x_new)
        np.copyto(s.fx, K[6])
        s.fx_at = x_new.copy()
    return res
