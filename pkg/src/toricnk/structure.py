"""Pointwise SU(3) structure induced by a potential φ, and its certification.

All functions accept batched input: ``y`` with last axis 3 and a ``Jet3``
with matching leading axes.  Scalar outputs then come back as arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exterior as ex
from .errors import DegenerateStructureError, OutsideU0Error
from .exterior import Form, FormJet, dual, dual_inv, wedge
from .jets import Jet3

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
NEAR_DEGENERATE_EPS2 = 1e-12
PIVOT_TOL = 1e-12


def radial_derivative(jet: Jet3, y):
    """∂_rφ = Σ y_i ∂φ/∂y_i."""
    return np.einsum("...i,...i->...", np.asarray(y, dtype=float), jet.grad)


def vcv(jet: Jet3, y):
    """ᵗVCV with V = y and C = Hess(φ)."""
    y = np.asarray(y, dtype=float)
    return np.einsum("...i,...ij,...j->...", y, jet.hess, y)


def epsilon_sq(jet: Jet3, y):
    return (8.0 / 3.0) * (jet.phi - radial_derivative(jet, y))


def ma_residual(jet: Jet3, y):
    """det Hess(φ) − [(8/3)φ − (11/3)∂_rφ + ∂_r²φ], with ∂_r²φ = ∂_rφ + ᵗVCV."""
    dr = radial_derivative(jet, y)
    dr2 = dr + vcv(jet, y)
    return np.linalg.det(jet.hess) - ((8.0 / 3.0) * jet.phi - (11.0 / 3.0) * dr + dr2)


def vol1_residual(jet: Jet3, y):
    """det C − ε² − ᵗVCV, with ε² taken from the potential."""
    return np.linalg.det(jet.hess) - epsilon_sq(jet, y) - vcv(jet, y)


def mu_matrix(y):
    y = np.asarray(y, dtype=float)
    mu = np.zeros(y.shape[:-1] + (3, 3))
    mu[..., 0, 1], mu[..., 0, 2], mu[..., 1, 2] = y[..., 2], -y[..., 1], y[..., 0]
    return mu - np.swapaxes(mu, -1, -2)


def d_matrix(jet: Jet3, y):
    c = jet.hess
    mu = mu_matrix(y)
    top = np.concatenate([c, -mu], axis=-1)
    bottom = np.concatenate([mu, c], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def cholesky_pivots(a):
    """Squared pivots of an in-place Cholesky sweep on symmetric ``a`` (batched).

    The sweep keeps going past non-positive pivots (clamping their square
    roots) so that every batch entry yields a full pivot vector.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[-1]
    pivots = np.empty(a.shape[:-1])
    for k in range(n):
        p = a[..., k, k].copy()
        pivots[..., k] = p
        root = np.sqrt(np.where(p > 0, p, 1.0))
        col = a[..., k + 1:, k] / root[..., None]
        a[..., k + 1:, k + 1:] -= col[..., :, None] * col[..., None, :]
    return pivots


def is_positive_definite(a, tol=PIVOT_TOL):
    """Cholesky decision with pivots required to exceed ``tol``·max|a|."""
    a = np.asarray(a, dtype=float)
    scale = np.max(np.abs(a), axis=(-1, -2))
    return np.all(cholesky_pivots(a) > (tol * scale)[..., None], axis=-1)


@dataclass(frozen=True)
class AdmissibilityReport:
    eps2_positive: np.ndarray
    C_positive: np.ndarray
    D_positive: np.ndarray
    pairing_condition: np.ndarray
    in_U0: np.ndarray
    D_min_eigenvalue: np.ndarray
    phi_minus_dr_phi: np.ndarray

    def item(self) -> "AdmissibilityReport":
        """Unbatched copy with plain Python scalars."""
        vals = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return AdmissibilityReport(**{k: np.asarray(v).item() for k, v in vals.items()})


def admissibility(jet: Jet3, y, pivot_tol: float = PIVOT_TOL) -> AdmissibilityReport:
    y = np.asarray(y, dtype=float)
    c = jet.hess
    mu = mu_matrix(y)
    gap = jet.phi - radial_derivative(jet, y)
    D = d_matrix(jet, y)
    c_pos = is_positive_definite(c, pivot_tol)
    # Schur complement of the C block; only meaningful where C is invertible
    safe_c = np.where(c_pos[..., None, None], c, np.eye(3))
    schur = c + mu @ np.linalg.solve(safe_c, mu)
    pairing = c_pos & is_positive_definite(schur, pivot_tol)
    d_pos = is_positive_definite(D, pivot_tol)
    eps_pos = gap > 0
    return AdmissibilityReport(
        eps2_positive=eps_pos,
        C_positive=c_pos,
        D_positive=d_pos,
        pairing_condition=pairing,
        in_U0=eps_pos & d_pos,
        D_min_eigenvalue=np.linalg.eigvalsh(D)[..., 0],
        phi_minus_dr_phi=gap,
    )


@dataclass
class StructureFrame:
    """Every pointwise quantity of the induced structure at ``y``.

    Forms are plain values; the ``jets`` mapping keeps the FormJet versions
    (with coefficient y-gradients) that the exterior derivative needs.
    """

    y: np.ndarray
    eps2: np.ndarray
    eps: np.ndarray
    C: np.ndarray
    dC: np.ndarray
    V: np.ndarray
    mu: np.ndarray
    c_forms: tuple
    c_form: Form
    eta: Form
    d_theta: tuple
    d_gamma: tuple
    omega: Form
    psi_plus: Form
    psi_minus: Form
    near_degenerate: np.ndarray
    jets: dict = field(repr=False)

    @property
    def d_generators(self):
        """d of θ¹, θ², θ³, γ¹, γ², γ³ in generator order."""
        return self.d_theta + self.d_gamma


def _generators():
    return [FormJet.constant(Form.generator(g)) for g in range(ex.DIM)]


def _build_jets(jet: Jet3, y, sign=1.0):
    y = np.asarray(y, dtype=float)
    shape = y.shape[:-1]
    C = jet.hess
    dC = jet.third
    eps2 = epsilon_sq(jet, y)
    eps = sign * np.sqrt(eps2)
    # d(ε²) = -(8/3) Σ C_ij y_i dy_j
    deps2 = -(8.0 / 3.0) * np.einsum("...ij,...i->...j", C, y)
    eps_d = dual(eps, deps2 / (2.0 * eps)[..., None])
    inv_eps = dual_inv(eps_d)
    y_d = [dual(y[..., i], np.broadcast_to(np.eye(3)[i], shape + (3,))) for i in range(3)]
    C_d = [[dual(C[..., i, j], dC[..., i, j, :]) for j in range(3)] for i in range(3)]

    gen = _generators()
    theta, gamma = gen[:3], gen[3:]
    c = []
    for i in range(3):
        ci = gamma[0].scale(C_d[i][0]) + gamma[1].scale(C_d[i][1]) + gamma[2].scale(C_d[i][2])
        c.append(ci)
    c_form = c[0].scale(y_d[0]) + c[1].scale(y_d[1]) + c[2].scale(y_d[2])
    g23, g31, g12 = gamma[1] ^ gamma[2], gamma[2] ^ gamma[0], gamma[0] ^ gamma[1]
    t23, t31, t12 = theta[1] ^ theta[2], theta[2] ^ theta[0], theta[0] ^ theta[1]
    eta = g23.scale(y_d[0]) + g31.scale(y_d[1]) + g12.scale(y_d[2])
    # μ₂₃ = y₁, μ₃₁ = y₂, μ₁₂ = y₃; μ_ij(θ^ij + γ^ij) summed over i<j equals the cyclic sum
    omega = (t23 + g23).scale(y_d[0]) + (t31 + g31).scale(y_d[1]) + (t12 + g12).scale(y_d[2])
    for i in range(3):
        omega = omega + ex.wedge_generator_jet(i, c[i])
    g123 = g12 ^ gamma[2]
    t123 = t12 ^ theta[2]
    psi_plus = (g123 - (t12 ^ gamma[2]) - (t31 ^ gamma[1]) - (t23 ^ gamma[0])).scale(eps_d)
    psi_minus = (t123 - (g12 ^ theta[2]) - (g31 ^ theta[1]) - (g23 ^ theta[0])).scale(eps_d)
    four_over_eps = 4.0 * inv_eps
    d_theta = tuple(
        ((c[j] ^ c[k]) - eta.scale(y_d[i])).scale(four_over_eps) for i, j, k in _CYCLIC
    )
    # c ∧ γⁱ = −γⁱ ∧ c
    d_gamma = tuple(ex.wedge_generator_jet(3 + i, c_form).scale(four_over_eps) for i in range(3))
    jets = {
        "eps": eps_d,
        "c_forms": tuple(c),
        "c_form": c_form,
        "eta": eta,
        "omega": omega,
        "psi_plus": psi_plus,
        "psi_minus": psi_minus,
        "d_theta": d_theta,
        "d_gamma": d_gamma,
    }
    return eps2, eps, jets


def _assemble(y, eps2, eps, C, dC, near, jets):
    def val(x):
        return tuple(j.form for j in x) if isinstance(x, tuple) else x.form

    return StructureFrame(
        y=y,
        eps2=eps2,
        eps=eps,
        C=C,
        dC=dC,
        V=y,
        mu=mu_matrix(y),
        c_forms=val(jets["c_forms"]),
        c_form=val(jets["c_form"]),
        eta=val(jets["eta"]),
        d_theta=val(jets["d_theta"]),
        d_gamma=val(jets["d_gamma"]),
        omega=val(jets["omega"]),
        psi_plus=val(jets["psi_plus"]),
        psi_minus=val(jets["psi_minus"]),
        near_degenerate=eps2 < NEAR_DEGENERATE_EPS2,
        jets=jets,
    )


def frame_at(jet: Jet3, y, sign: float = 1.0) -> StructureFrame:
    """Assemble the structure at ``y``; ``sign`` picks the branch ε = ±√ε²."""
    y = np.asarray(y, dtype=float)
    eps2 = epsilon_sq(jet, y)
    if np.any(~(eps2 > 0)):
        raise OutsideU0Error("eps^2 <= 0: the structure is undefined here")
    eps2, eps, jets = _build_jets(jet, y, sign)
    return _assemble(y, eps2, eps, jet.hess, jet.third, eps2 < NEAR_DEGENERATE_EPS2, jets)


def d(fj: FormJet, frame: StructureFrame) -> Form:
    """Exterior derivative of a form given by coefficients on the coframe.

    d(f e^I) = df ∧ e^I + f d(e^I), with dy_j = −3ε γʲ for the coefficient
    part and d(e^I) = Σ_g d(e^g) ∧ (e_g ⌟ e^I) for the frame part.
    """
    k = fj.degree
    if k == ex.DIM:
        raise ex.DegreeOverflowError("d of a top-degree form")
    out = Form.zero(k + 1)
    minus3eps = -3.0 * np.asarray(frame.eps, dtype=float)
    for j in range(3):
        out = out + ex.wedge_generator(3 + j, fj.gradient_form(j)) * minus3eps
    if k > 0:
        base = fj.form
        for g, dg in enumerate(frame.d_generators):
            out = out + wedge(dg, ex.interior(g, base))
    return out


def coordinate_jet(i, shape=()) -> FormJet:
    """The coordinate function y_i as a 0-form jet (value filled in by the caller)."""
    data = np.zeros(tuple(shape) + (4, 1))
    data[..., 1 + i, 0] = 1.0
    return FormJet(0, data)


def scalar_jet(value, grad) -> FormJet:
    return FormJet(0, dual(value, grad)[..., :, None])


@dataclass(frozen=True)
class HitchinReport:
    wedge_zero: np.ndarray
    trace_residual: np.ndarray
    trk_residual: np.ndarray
    comp_residual: np.ndarray
    J_square_residual: np.ndarray
    g_asymmetry: np.ndarray
    g_min_eigenvalue: np.ndarray
    psi_minus_residual: np.ndarray
    omega_cubed: np.ndarray


def three_form_tensor(psi):
    """Fully antisymmetric array P[a, b, c] = ψ(e_a, e_b, e_c)."""
    from itertools import permutations

    t = np.zeros(psi.shape + (ex.DIM,) * 3)
    for i, mono in enumerate(ex.BASIS[3]):
        for perm in permutations(range(3)):
            sgn = 1.0 if perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1.0
            t[(...,) + tuple(mono[p] for p in perm)] = sgn * psi.coef[..., i]
    return t


def tensor_to_three_form(t):
    idx = np.array(ex.BASIS[3])
    return Form(3, t[..., idx[:, 0], idx[:, 1], idx[:, 2]])


def hitchin_forms(omega: Form, psi_plus: Form, psi_minus: Form | None = None) -> HitchinReport:
    """Hitchin's algebraic conditions for (ω, ψ⁺) and the induced J, g."""
    omega3 = wedge(wedge(omega, omega), omega)
    w3 = ex.top_coefficient(omega3)
    if np.any(w3 == 0):
        raise DegenerateStructureError("omega^3 vanishes")
    K = ex.k_tensor(psi_plus)
    K2 = K @ K
    tr = np.trace(K2, axis1=-2, axis2=-1)
    eye = np.eye(ex.DIM)
    k_scale = np.maximum(np.max(np.abs(K), axis=(-1, -2)) ** 2, np.finfo(float).tiny)
    trk = np.max(np.abs(K2 - (tr / 6.0)[..., None, None] * eye), axis=(-1, -2)) / k_scale
    trace_res = np.abs(tr + w3 * w3 / 6.0) / (w3 * w3)
    J = 6.0 * K / w3[..., None, None]
    j2 = np.max(np.abs(J @ J + eye), axis=(-1, -2))
    W = ex.two_form_matrix(omega)
    g = W @ J
    asym = np.max(np.abs(g - np.swapaxes(g, -1, -2)), axis=(-1, -2))
    gmin = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))[..., 0]
    wedge_zero = ex.norm_sup(wedge(omega, psi_plus))
    if psi_minus is None:
        comp = np.full(w3.shape, np.nan)
        pm = np.full(w3.shape, np.nan)
    else:
        comp = ex.norm_sup(wedge(psi_plus, psi_minus) - omega3 * (2.0 / 3.0))
        # ψ⁻ = −ψ⁺(J·, ·, ·)
        P = three_form_tensor(psi_plus)
        JP = np.einsum("...da,...dbc->...abc", J, P)
        pm = ex.norm_sup(psi_minus + tensor_to_three_form(JP))
    return HitchinReport(wedge_zero, trace_res, trk, comp, j2, asym, gmin, pm, w3)


def hitchin_check(frame: StructureFrame) -> HitchinReport:
    return hitchin_forms(frame.omega, frame.psi_plus, frame.psi_minus)


@dataclass(frozen=True)
class NKResidualReport:
    ma_residual: np.ndarray
    vol1_residual: np.ndarray
    nk1_residual: np.ndarray
    nk2_residual: np.ndarray
    integrability_residuals: np.ndarray
    hitchin: HitchinReport
    eps_weighted: dict
    near_degenerate: np.ndarray

    @property
    def max_integrability(self):
        return np.max(self.integrability_residuals, axis=-1)

    @property
    def max_structure(self):
        """Largest of the nk1, nk2 and integrability residuals."""
        return np.maximum(np.maximum(self.nk1_residual, self.nk2_residual), self.max_integrability)


def structure_residuals(frame: StructureFrame):
    """(nk1, nk2, integrability[..., 3]) sup-norm residuals at a frame."""
    jets = frame.jets
    omega = frame.omega
    nk1 = ex.norm_sup(d(jets["omega"], frame) - frame.psi_plus * 3.0)
    nk2 = ex.norm_sup(d(jets["psi_minus"], frame) + wedge(omega, omega) * 2.0)
    integ = np.stack([ex.norm_sup(d(t, frame)) for t in jets["d_theta"]], axis=-1)
    return nk1, nk2, integ


def nk_residuals(jet: Jet3, y) -> NKResidualReport:
    frame = frame_at(jet, y)
    nk1, nk2, integ = structure_residuals(frame)
    eps = np.abs(frame.eps)
    return NKResidualReport(
        ma_residual=np.abs(ma_residual(jet, y)),
        vol1_residual=np.abs(vol1_residual(jet, y)),
        nk1_residual=nk1,
        nk2_residual=nk2,
        integrability_residuals=integ,
        hitchin=hitchin_check(frame),
        # γⁱ scale like 1/ε, so near ε = 0 the raw norms are inflated by that factor
        eps_weighted={
            "nk1": nk1 * eps,
            "nk2": nk2 * eps,
            "integrability": integ * eps[..., None],
        },
        near_degenerate=frame.near_degenerate,
    )
