"""Radial potentials φ = x(r²/2): the reduced ODE x″ = F(t, x, x′) and its solutions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError, PreconditionError, SingularityError

SINGULAR_TOL = 1e-10

REACHED_T_END = "reached_t_end"
LEFT_S = "left_S"
HIT_SINGULARITY = "hit_singularity"
STEP_UNDERFLOW = "step_underflow"


def _denominator(t, q):
    return q * q * t - 2.0 * t * t


def _near_singular(t, q, tol=SINGULAR_TOL):
    return np.abs(_denominator(t, q)) < tol * np.maximum(1.0, np.asarray(t, dtype=float) ** 2)


def F(t, p, q, tol=SINGULAR_TOL):
    """Right-hand side (8p − 10tq − 3q³) / (6(q²t − 2t²))."""
    if np.any(_near_singular(t, q, tol)):
        raise SingularityError(f"q²t - 2t² vanishes at t={t}, q={q}")
    return (8.0 * p - (10.0 * t * q + 3.0 * q**3)) / (6.0 * _denominator(t, q))


def F_partials(t, p, q):
    """(∂F/∂t, ∂F/∂p, ∂F/∂q)."""
    num = 8.0 * p - 10.0 * t * q - 3.0 * q**3
    den = 6.0 * _denominator(t, q)
    den2 = den * den
    d_t = (-10.0 * q * den - num * 6.0 * (q * q - 4.0 * t)) / den2
    d_p = 8.0 / den
    d_q = ((-10.0 * t - 9.0 * q * q) * den - num * 12.0 * q * t) / den2
    return d_t, d_p, d_q


def third_derivative(t, p, q):
    """x‴ along a solution: the total t-derivative of F."""
    f = F(t, p, q)
    d_t, d_p, d_q = F_partials(t, p, q)
    return d_t + d_p * q + d_q * f


def in_S(t, p, q) -> bool:
    """Membership in {t > 0, p > 2tq > 2t√(2t)}."""
    if not t > 0:
        return False
    return bool(p > 2.0 * t * q > 2.0 * t * math.sqrt(2.0 * t))


def s_margins(t, p, q):
    """The two quantities that must stay positive in S: p − 2tq and q − √(2t)."""
    t = np.asarray(t, dtype=float)
    return p - 2.0 * t * q, q - np.sqrt(np.maximum(2.0 * t, 0.0))


@dataclass(frozen=True)
class RadialState:
    t: float
    x: float
    xp: float

    @property
    def in_S(self) -> bool:
        return in_S(self.t, self.x, self.xp)

    @property
    def near_singularity(self) -> bool:
        return bool(_near_singular(self.t, self.xp))


class ClosedFormRadial:
    """A radial profile given by explicit derivative functions on [t_min, t_max]."""

    def __init__(self, x, dx, d2x, d3x, t_min=0.0, t_max=math.inf):
        self._fns = (x, dx, d2x, d3x)
        self.t_min = t_min
        self.t_max = t_max

    def derivatives(self, t):
        t = np.asarray(t, dtype=float)
        return tuple(np.asarray(f(t), dtype=float) * np.ones_like(t) for f in self._fns)


def _hermite(t, t0, t1, f0, f1, d0, d1):
    """Cubic Hermite value and derivative on [t0, t1]."""
    h = t1 - t0
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    val = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
    dh00 = (6 * s2 - 6 * s) / h
    dh10 = 3 * s2 - 4 * s + 1
    dh01 = (-6 * s2 + 6 * s) / h
    dh11 = 3 * s2 - 2 * s
    der = dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1
    return val, der


@dataclass
class RadialSolution:
    """Accepted integration nodes with cubic Hermite dense output.

    x is interpolated from (x, x′) and x′ from (x′, x″ = F) at the nodes;
    x″ and x‴ at an arbitrary t are then re-evaluated from the ODE.
    """

    t: np.ndarray
    x: np.ndarray
    xp: np.ndarray
    termination: str = REACHED_T_END
    xpp: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.xp = np.asarray(self.xp, dtype=float)
        if self.t.ndim != 1 or not (len(self.t) == len(self.x) == len(self.xp)) or len(self.t) == 0:
            raise ValueError("nodes must be equal-length 1-d arrays")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("node times must be strictly increasing")
        if self.xpp is None:
            self.xpp = np.array([F(t, p, q) for t, p, q in zip(self.t, self.x, self.xp)])

    @property
    def t_min(self):
        return float(self.t[0])

    @property
    def t_max(self):
        return float(self.t[-1])

    def __len__(self):
        return len(self.t)

    def nodes(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist(), self.xp.tolist()))

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < self.t[0]) | (t > self.t[-1])):
            raise DomainError(f"t outside [{self.t[0]}, {self.t[-1]}]")
        if len(self.t) == 1:
            return t, np.zeros(t.shape, dtype=int)
        i = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        return t, i

    def state(self, t):
        """Interpolated (x, x′) together with the Hermite derivative of x′."""
        t, i = self._locate(t)
        if len(self.t) == 1:
            return self.x[0] * np.ones_like(t), self.xp[0] * np.ones_like(t), self.xpp[0] * np.ones_like(t)
        t0, t1 = self.t[i], self.t[i + 1]
        x, _ = _hermite(t, t0, t1, self.x[i], self.x[i + 1], self.xp[i], self.xp[i + 1])
        xp, xpp = _hermite(t, t0, t1, self.xp[i], self.xp[i + 1], self.xpp[i], self.xpp[i + 1])
        return x, xp, xpp

    def derivatives(self, t):
        """(x, x′, x″, x‴) at t with x″ and x‴ taken from the ODE."""
        x, xp, _ = self.state(t)
        t = np.asarray(t, dtype=float)
        return x, xp, F(t, x, xp), third_derivative(t, x, xp)


def ode_residuals(sol: RadialSolution, where: str = "mid"):
    """|x″ − F(t, x, x′)| with x″ read off the dense output.

    ``where="mid"`` samples interval midpoints, ``"nodes"`` the nodes.
    """
    if len(sol) == 1:
        return np.zeros(1)
    ts = 0.5 * (sol.t[:-1] + sol.t[1:]) if where == "mid" else sol.t
    x, xp, xpp = sol.state(ts)
    return np.abs(xpp - F(ts, x, xp))


@dataclass(frozen=True)
class Controls:
    rtol: float = 1e-12
    atol: float = 1e-14
    h0: Optional[float] = None
    h_max: float = 0.02
    h_min: float = 1e-13
    event_tol: float = 1e-10
    singular_tol: float = SINGULAR_TOL
    stop_on_leave_S: bool = True
    max_steps: int = 200_000


# Dormand–Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _rhs(t, u, tol):
    return np.array([u[1], F(t, u[0], u[1], tol)])


def _dp_step(t, u, h, tol):
    """One Dormand–Prince step; returns (u_new, error vector).  May raise SingularityError."""
    k = np.empty((7, 2))
    k[0] = _rhs(t, u, tol)
    for s in range(1, 7):
        ui = u + h * (np.asarray(_A[s]) @ k[:s])
        k[s] = _rhs(t + _C[s] * h, ui, tol)
    u_new = u + h * (_B5 @ k)
    if not np.all(np.isfinite(u_new)):
        raise SingularityError("non-finite state")
    return u_new, h * (_E @ k)


def _margin(t, u, controls):
    """Smallest event function; ≤ 0 means an event has occurred."""
    g1, g2 = s_margins(t, u[0], u[1])
    if controls.stop_on_leave_S:
        return min(float(g1), float(g2))
    return float(g2)


def integrate(initial: RadialState, t_end: float, controls: Controls = Controls()) -> RadialSolution:
    """Integrate x″ = F from ``initial`` (which must lie in S) towards ``t_end``.

    Stops early when the trajectory leaves S (or, with ``stop_on_leave_S``
    off, only when x′ reaches √(2t)), when q²t − 2t² comes within tolerance
    of zero, or when the step size underflows.  Event times are bisected to
    ``controls.event_tol``.
    """
    if not initial.in_S:
        raise PreconditionError(f"initial data {initial} not in S")
    if t_end < initial.t:
        raise ValueError("t_end must not precede the initial time")
    t = float(initial.t)
    u = np.array([initial.x, initial.xp], dtype=float)
    ts, xs, xps = [t], [u[0]], [u[1]]
    span = t_end - t
    if span == 0:
        return RadialSolution(np.array(ts), np.array(xs), np.array(xps), REACHED_T_END)
    h = controls.h0 or min(controls.h_max, 1e-3 * max(span, 1.0))
    err_prev = 1.0
    reason = REACHED_T_END
    tol = controls.singular_tol
    for _ in range(controls.max_steps):
        if t >= t_end:
            break
        h = min(h, t_end - t, controls.h_max)
        if h < controls.h_min:
            reason = STEP_UNDERFLOW
            break
        try:
            u_new, err_vec = _dp_step(t, u, h, tol)
        except SingularityError:
            h *= 0.25
            continue
        scale = controls.atol + controls.rtol * np.maximum(np.abs(u), np.abs(u_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** (-0.2))
            continue
        t_new = t + h
        if t_new >= t_end - 1e-15 * max(1.0, abs(t_end)):
            t_new = t_end
        if _margin(t_new, u_new, controls) <= 0:
            t_ev, u_ev = _locate_event(t, u, h, controls)
            if t_ev > t:
                ts.append(t_ev)
                xs.append(u_ev[0])
                xps.append(u_ev[1])
            g1, g2 = s_margins(t_ev, u_ev[0], u_ev[1])
            # exiting through x′ = √(2t) is exiting through the zero of the denominator
            via_denominator = not controls.stop_on_leave_S or g2 < g1
            reason = HIT_SINGULARITY if via_denominator else LEFT_S
            break
        t, u = t_new, u_new
        ts.append(t)
        xs.append(u[0])
        xps.append(u[1])
        if _near_singular(t, u[1], tol):
            reason = HIT_SINGULARITY
            break
        # PI controller
        fac = 0.9 * max(err, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
        h *= min(5.0, max(0.2, fac))
        err_prev = max(err, 1e-4)
    else:
        reason = STEP_UNDERFLOW
    return RadialSolution(np.array(ts), np.array(xs), np.array(xps), reason)


def _locate_event(t, u, h, controls):
    """Bisect the step length on [0, h] for the first zero of the event margin."""
    lo, hi = 0.0, h
    u_lo = u
    while hi - lo > controls.event_tol:
        mid = 0.5 * (lo + hi)
        try:
            u_mid, _ = _dp_step(t, u, mid, controls.singular_tol)
            ok = _margin(t + mid, u_mid, controls) > 0
        except SingularityError:
            ok = False
        if ok:
            lo, u_lo = mid, u_mid
        else:
            hi = mid
    return t + lo, u_lo


def admissible_window(sol: RadialSolution, tol: float = 1e-12) -> List[Tuple[float, float]]:
    """Maximal t-intervals where x > 2tx′ > 2t√(2t) holds along the solution."""

    def margin(t):
        x, xp, _ = sol.state(t)
        g1, g2 = s_margins(t, x, xp)
        return np.minimum(g1, g2) if np.ndim(t) else min(float(g1), float(g2))

    ts = sol.t
    if len(ts) == 1:
        return [(ts[0], ts[0])] if margin(ts[0]) > 0 else []
    vals = margin(ts)
    inside = (vals > 0) & (ts > 0)

    def crossing(a, b):
        # margin(a) and margin(b) differ in sign
        fa_pos = margin(a) > 0
        while b - a > tol * max(1.0, abs(b)):
            m = 0.5 * (a + b)
            if (margin(m) > 0) == fa_pos:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    windows = []
    start = ts[0] if inside[0] else None
    for i in range(1, len(ts)):
        if inside[i] and not inside[i - 1]:
            start = crossing(ts[i - 1], ts[i])
        elif not inside[i] and inside[i - 1]:
            windows.append((float(start), float(crossing(ts[i - 1], ts[i]))))
            start = None
    if start is not None:
        windows.append((float(start), float(ts[-1])))
    return windows


TWO_SQRT2_OVER_9 = 2.0 * math.sqrt(2.0) / 9.0


def power_profile(k: float, l: float) -> ClosedFormRadial:
    """x(t) = k t^l with its first three derivatives, on t > 0."""
    return ClosedFormRadial(
        lambda t: k * t**l,
        lambda t: k * l * t ** (l - 1),
        lambda t: k * l * (l - 1) * t ** (l - 2),
        lambda t: k * l * (l - 1) * (l - 2) * t ** (l - 3),
        t_min=0.0,
    )


def special_solutions(k: float = 3.0) -> dict:
    """The power-law solutions ±(2√2/9)t^{3/2} and k t^{1/2}."""
    return {
        "x1": power_profile(TWO_SQRT2_OVER_9, 1.5),
        "x2": power_profile(-TWO_SQRT2_OVER_9, 1.5),
        "x3": power_profile(k, 0.5),
    }


def special_solution_residuals(ts=(0.5, 1.0, 2.0), k: float = 3.0) -> dict:
    """ODE residual and admissibility of each power-law solution at ``ts``."""
    out = {}
    for name, prof in special_solutions(k).items():
        rows = []
        for t in ts:
            x, xp, xpp, _ = (float(v) for v in prof.derivatives(t))
            rows.append(
                {
                    "t": t,
                    "residual": abs(xpp - F(t, x, xp)),
                    "admissible": in_S(t, x, xp),
                }
            )
        out[name] = {
            "max_residual": max(r["residual"] for r in rows),
            "ever_admissible": any(r["admissible"] for r in rows),
            "samples": rows,
        }
    return out


def write_trajectory_csv(sol: RadialSolution, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "xp", "in_S"])
        for t, x, xp in sol.nodes():
            w.writerow([f"{t:.17g}", f"{x:.17g}", f"{xp:.17g}", int(in_S(t, x, xp))])


def read_trajectory_csv(path) -> RadialSolution:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trajectory")
    return RadialSolution(
        np.array([float(r["t"]) for r in rows]),
        np.array([float(r["x"]) for r in rows]),
        np.array([float(r["xp"]) for r in rows]),
    )


def read_sweep(path) -> List[Tuple[int, str]]:
    """Non-blank, non-comment lines of a sweep file with their line numbers."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def parse_sweep_line(line: str) -> Tuple[RadialState, float]:
    parts = line.split()
    if len(parts) != 4:
        raise ValueError(f"expected 't0 x0 xp0 t_end', got {line!r}")
    t0, x0, xp0, t_end = (float(p) for p in parts)
    return RadialState(t0, x0, xp0), t_end
