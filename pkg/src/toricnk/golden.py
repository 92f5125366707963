"""Closed forms for the homogeneous S³×S³ potential and the golden comparison suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import structure as st
from .jets import s3s3_phi

SQRT3 = math.sqrt(3.0)


def eps2_closed(y):
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    p = np.prod(y, axis=-1)
    return -(8.0 / 9.0) * r2 - 16.0 / (3.0 * SQRT3) * p + 8.0 / 27.0


def det_c_closed(y):
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    p = np.prod(y, axis=-1)
    return -(2.0 / 9.0) * r2 + 2.0 / (3.0 * SQRT3) * p + 8.0 / 27.0


def vcv_closed(y):
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    p = np.prod(y, axis=-1)
    return (2.0 / 3.0) * r2 + 2.0 * SQRT3 * p


def sample_ball(n, radius, seed=0):
    """``n`` points uniform in the closed ball of the given radius."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


@dataclass(frozen=True)
class GoldenCheck:
    name: str
    value: float
    tol: float
    lower_bound: bool = False  # pass means value > tol instead of value <= tol

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return bool(self.value > self.tol if self.lower_bound else self.value <= self.tol)

    def line(self) -> str:
        rel = ">" if self.lower_bound else "<="
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name:<34s} {self.value:.3e}  ({rel} {self.tol:.0e})"


def run_golden(n_points=500, radius=0.25, tol=1e-10, seed=0):
    """Compare the pipeline with the S³×S³ closed forms; returns (checks, seconds)."""
    start = time.perf_counter()
    fam = s3s3_phi()
    ys = np.vstack([np.zeros((1, 3)), [[0.5, 0.0, 0.0]], sample_ball(n_points, radius, seed)])
    jet = fam(ys)
    eps2 = st.epsilon_sq(jet, ys)
    det_c = np.linalg.det(jet.hess)
    vcv = st.vcv(jet, ys)
    checks = [
        GoldenCheck("eps^2 vs closed form", float(np.max(np.abs(eps2 - eps2_closed(ys)))), tol),
        GoldenCheck("det C vs closed form", float(np.max(np.abs(det_c - det_c_closed(ys)))), tol),
        GoldenCheck("tVCV vs closed form", float(np.max(np.abs(vcv - vcv_closed(ys)))), tol),
        GoldenCheck("vol1: det C - eps^2 - tVCV", float(np.max(np.abs(st.vol1_residual(jet, ys)))), tol),
        GoldenCheck("Monge-Ampere residual", float(np.max(np.abs(st.ma_residual(jet, ys)))), tol),
    ]
    ball = ys[2:]
    adm = st.admissibility(fam(ball), ball)
    inside = ball[adm.in_U0]
    checks.append(GoldenCheck("points outside U0 (count)", float(np.sum(~adm.in_U0)), 0.0))
    rep = st.nk_residuals(fam(inside), inside)
    h = rep.hitchin
    checks += [
        GoldenCheck("d omega - 3 psi+", float(np.max(rep.nk1_residual)), tol),
        GoldenCheck("d psi- + 2 omega^2", float(np.max(rep.nk2_residual)), tol),
        GoldenCheck("d(d theta^i)", float(np.max(rep.integrability_residuals)), tol),
        GoldenCheck("omega ^ psi+", float(np.max(h.wedge_zero)), tol),
        GoldenCheck("tr K^2 + (omega^3)^2/6 (rel)", float(np.max(h.trace_residual)), tol),
        GoldenCheck("J^2 + Id", float(np.max(h.J_square_residual)), tol),
        GoldenCheck("psi+ ^ psi- - (2/3) omega^3", float(np.max(h.comp_residual)), tol),
        GoldenCheck("min eigenvalue of g", float(np.min(h.g_min_eigenvalue)), 0.0, lower_bound=True),
    ]
    return checks, time.perf_counter() - start
