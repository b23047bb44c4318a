"""Adaptive time integration of ``x' = f(x)`` for a compiled network."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bdf import BDF
from .errors import MaxStepsExceeded, SingularIterationMatrix, StepSizeUnderflow
from .network import CompiledNetwork
from .steppers import Scratch, SolverStats, scaled_rms, step_explicit, step_stiff

__all__ = ["SolverOptions", "Trajectory", "integrate", "initial_step", "METHODS"]

METHODS = ("rosenbrock4", "bdf", "erk45")
_ORDER = {"rosenbrock4": 4, "bdf": 1, "erk45": 5}


@dataclass
class SolverOptions:
    """Integration settings.

    ``output="dense"`` samples the solution at ``output_points`` equally
    spaced times (or at ``t_eval`` when given) by cubic Hermite interpolation
    between accepted steps; ``output="steps"`` returns every accepted step.
    ``max_steps`` bounds the number of attempted steps.
    """

    method: str = "rosenbrock4"
    rtol: float = 1e-6
    atol: float | Sequence[float] = 1e-9
    h_init: float | None = None
    h_min: float = 0.0
    h_max: float = math.inf
    max_steps: int = 100_000
    output: str = "dense"
    output_points: int = 200
    t_eval: Sequence[float] | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if not 0 < self.rtol < 1:
            raise ValueError("rtol must lie in (0, 1)")
        if np.any(np.asarray(self.atol, dtype=float) <= 0):
            raise ValueError("atol must be positive")
        if self.h_min < 0 or self.h_min > self.h_max:
            raise ValueError("need 0 <= h_min <= h_max")
        if self.h_init is not None and self.h_init <= 0:
            raise ValueError("h_init must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.output not in ("dense", "steps"):
            raise ValueError("output must be 'dense' or 'steps'")
        if self.output == "dense" and self.t_eval is None and self.output_points < 2:
            raise ValueError("output_points must be >= 2")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    stats: SolverStats = field(default_factory=SolverStats)
    species: tuple[str, ...] = ()
    method: str = ""

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def at(self, name: str) -> np.ndarray:
        return self.states[:, self.species.index(name)]


class _Sampler:
    def __init__(self, t0, x0, t_end, opts: SolverOptions):
        self.mode = opts.output
        if self.mode == "dense":
            if opts.t_eval is not None:
                ts = np.asarray(opts.t_eval, dtype=float)
                if ts.ndim != 1 or ts.size == 0 or np.any(np.diff(ts) <= 0):
                    raise ValueError("t_eval must be a strictly increasing 1-D sequence")
                if ts[0] < t0 or ts[-1] > t_end:
                    raise ValueError("t_eval must lie within [t0, t_end]")
            else:
                ts = np.linspace(t0, t_end, opts.output_points)
            self.ts = ts
            self.out = np.empty((ts.size, x0.size))
            self.k = 0
            while self.k < ts.size and ts[self.k] == t0:
                self.out[self.k] = x0
                self.k += 1
        else:
            self.t_list = [t0]
            self.x_list = [x0.copy()]

    def add(self, ta, xa, fa, tb, xb, fb):
        if self.mode != "dense":
            self.t_list.append(tb)
            self.x_list.append(xb.copy())
            return
        ts, h = self.ts, tb - ta
        while self.k < ts.size and ts[self.k] <= tb:
            t = ts[self.k]
            if t == tb:
                self.out[self.k] = xb
            else:
                s = (t - ta) / h
                h00 = (1 + 2 * s) * (1 - s) ** 2
                h10 = s * (1 - s) ** 2
                h01 = s * s * (3 - 2 * s)
                h11 = s * s * (s - 1)
                self.out[self.k] = h00 * xa + h10 * h * fa + h01 * xb + h11 * h * fb
            self.k += 1

    def result(self):
        if self.mode == "dense":
            return self.ts.copy(), self.out
        return np.array(self.t_list), np.array(self.x_list)


def initial_step(s: Scratch, x0: np.ndarray, f0: np.ndarray, span: float, order: int) -> float:
    """Starting step from the sizes of x0, f(x0) and a trial difference quotient."""
    scale = s.atol + s.rtol * np.abs(x0)
    d0 = scaled_rms(x0, scale)
    d1 = scaled_rms(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    x1 = x0 + h0 * f0
    f1 = s.rhs(x1, np.empty_like(x0))
    d2 = scaled_rms(f1 - f0, scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, span)


def _floor(t: float, h_min: float) -> float:
    return max(h_min, 10 * np.finfo(float).eps * max(abs(t), 1.0))


def integrate(net: CompiledNetwork, x0, t0: float, t_end: float,
              opts: SolverOptions | None = None) -> Trajectory:
    """Integrate the network's rate equations from ``(t0, x0)`` to ``t_end``.

    Every accepted step satisfies the embedded error test, the last step is
    clamped so the trajectory ends exactly at ``t_end``, and the first sample
    is ``(t0, x0)``.
    """
    opts = opts or SolverOptions()
    t0, t_end = float(t0), float(t_end)
    if not t_end > t0:
        raise ValueError("t_end must be greater than t0")
    x0 = np.array(x0, dtype=float)
    if x0.shape != (net.n_species,) or not np.all(np.isfinite(x0)):
        raise ValueError(f"x0 must be a finite vector of length {net.n_species}")

    s = Scratch(net, opts.rtol, opts.atol)
    span = t_end - t0
    h_max = min(opts.h_max, span)
    f0 = s.f_at(x0).copy()
    if opts.h_init is not None:
        h = min(opts.h_init, h_max)
    else:
        h = min(initial_step(s, x0, f0, span, _ORDER[opts.method]), h_max)
    h = max(h, opts.h_min)
    sampler = _Sampler(t0, x0, t_end, opts)

    # overflowing trial steps are rejected as non-finite; no need to warn
    with np.errstate(over="ignore", invalid="ignore"):
        if opts.method == "bdf":
            _run_bdf(s, x0, f0, t0, t_end, h, h_max, opts, sampler)
        else:
            step = step_stiff if opts.method == "rosenbrock4" else step_explicit
            _run_one_step(s, step, x0, f0, t0, t_end, h, h_max, opts, sampler)

    times, states = sampler.result()
    return Trajectory(times, states, s.stats, net.species_names, opts.method)


def _run_one_step(s, step, x, f, t, t_end, h, h_max, opts, sampler):
    net = s.net
    rejected_last = False
    while t < t_end:
        if s.stats.attempts >= opts.max_steps:
            raise MaxStepsExceeded(f"maximum number of steps ({opts.max_steps}) reached at t={t}", t)
        h = min(h, h_max)
        last = t + h >= t_end - _floor(t_end, 0.0)
        if last:
            h = t_end - t
        try:
            res = step(net, x, t, h, s)
        except SingularIterationMatrix:
            s.stats.steps_rejected += 1
            h *= 0.5
            if h < _floor(t, opts.h_min):
                raise
            rejected_last = True
            continue
        if res.accepted:
            t_new = t_end if last else t + h
            f_new = s.f_at(res.x_new).copy()
            sampler.add(t, x, f, t_new, res.x_new, f_new)
            t, x, f = t_new, res.x_new, f_new
            h = min(res.h_next, h) if rejected_last else res.h_next
            rejected_last = False
        else:
            h = res.h_next
            rejected_last = True
            if h < _floor(t, opts.h_min):
                raise StepSizeUnderflow(f"step size underflow at t={t} (h={h:.3g})", t)


def _run_bdf(s, x0, f0, t0, t_end, h, h_max, opts, sampler):
    solver = BDF(s, t0, x0, h, h_min=opts.h_min, h_max=h_max, max_steps=opts.max_steps)
    t, x, f = t0, x0, f0
    while t < t_end:
        t_new, x_new = solver.step(t_end)
        f_new = s.rhs(x_new, np.empty_like(x_new))
        sampler.add(t, x, f, t_new, x_new, f_new)
        t, x, f = t_new, x_new.copy(), f_new
