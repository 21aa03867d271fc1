"""Assembly of the glued model and its cut pieces.

The model manifold is a circle of circumference C = a1 + a2 + 4R carrying a
transverse spectrum; cutting at two points leaves intervals of lengths
L_i = a_i + 2R with Dirichlet conditions.  Per transverse mode everything
is an elementary 1-D problem, so the three log-determinants and the
boundary-response operator (sum of the two interval blocks) come from
closed forms.

For an analytic circle cross-section the mode sums diverge; the divergent
parts are linear in the frequencies and are assigned their continued
values through the cross-section zeta function (first moment, mode count,
log-determinant).  The gluing-constant identity holds per mode after the
subtraction, which is the cross-check that pins the renormalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import quad

from .base1d import (
    Circle,
    DirichletInterval,
    ModeProblem,
    dn_block,
    logdet_circle_mode,
    logdet_dirichlet_mode,
)
from .spectral_core import (
    FiberSpectrum,
    fiber_sqrt_zeta_at_minus_one,
    fiber_sqrt_zeta_data,
    heat_trace_mode,
)

__all__ = [
    "GlueGeometry",
    "ConditionAReport",
    "ConditionAViolation",
    "AssembledDeterminants",
    "RAssembly",
    "condition_A_check",
    "logdet_closed",
    "assemble_R",
    "bfk_ratio",
    "trace_perp_inverse_diff",
    "heat_route_crosscheck",
    "rr_plus_direction_diagnostic",
]


class ConditionAViolation(ValueError):
    """A zero mode with trivial holonomy: the glued operator develops
    eigenvalues decaying exponentially under stretching."""


@dataclass(frozen=True)
class GlueGeometry:
    """Interior lengths a1, a2, stretch R, and one holonomy phase per
    transverse zero mode.

    Derived: interval lengths L_i = a_i + 2R and circumference
    C = a1 + a2 + 4R = L1 + L2.  Optional extra phases for nonzero modes
    (keyed by mode index) are threaded through identically.
    """

    a1: float
    a2: float
    R: float
    holonomy: tuple[float, ...] = ()
    nonzero_phases: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.a1 <= 0 or self.a2 <= 0 or self.R <= 0:
            raise ValueError("a1, a2, R must be positive")
        object.__setattr__(self, "holonomy", tuple(float(t) for t in self.holonomy))
        for t in self.holonomy:
            if not (0.0 <= t < 2.0 * math.pi):
                raise ValueError("holonomy phases must lie in [0, 2pi)")
        assert abs((self.L1 + self.L2) - self.C) < 1e-12 * self.C

    @property
    def L1(self) -> float:
        return self.a1 + 2.0 * self.R

    @property
    def L2(self) -> float:
        return self.a2 + 2.0 * self.R

    @property
    def C(self) -> float:
        return self.a1 + self.a2 + 4.0 * self.R

    def with_R(self, R: float) -> "GlueGeometry":
        return GlueGeometry(self.a1, self.a2, R, self.holonomy,
                            dict(self.nonzero_phases))

    def nonzero_phase(self, index: int) -> float:
        return float(self.nonzero_phases.get(index, 0.0))


@dataclass(frozen=True)
class ConditionAReport:
    """Outcome of the no-exponentially-small-eigenvalues check."""

    ok: bool
    violations: tuple[str, ...]
    common_fixed_space_trivial: bool

    def raise_if_failed(self):
        if not self.ok:
            raise ConditionAViolation("; ".join(self.violations))


def condition_A_check(geom: GlueGeometry, fiber: FiberSpectrum) -> ConditionAReport:
    """Check that every zero-mode holonomy phase is nonzero.

    Equivalent statements are reported together: no flat circle mode
    appears in the assembly, and the two cut-operator fixed spaces
    intersect trivially (which rules out exponentially small eigenvalues
    of the boundary-response operator as well).
    """
    if len(geom.holonomy) != fiber.h0:
        raise ValueError(
            f"holonomy must carry one phase per zero mode "
            f"({fiber.h0} needed, {len(geom.holonomy)} given)"
        )
    bad = tuple(
        f"zero mode {j}: holonomy phase 0 gives a flat circle mode"
        for j, t in enumerate(geom.holonomy) if t == 0.0
    )
    return ConditionAReport(ok=not bad, violations=bad,
                            common_fixed_space_trivial=not bad)


@dataclass(frozen=True)
class ModeRow:
    """Per-mode breakdown of the four log-determinants.

    For an analytic fiber the nonzero-mode rows hold the post-subtraction
    remainders; the subtracted growth is restored through the continued
    sums stored on the parent record.
    """

    label: str
    mu: float
    theta: float
    mult: int
    log_det_M: float
    log_det_M1: float
    log_det_M2: float
    log_det_R: float


@dataclass(frozen=True)
class AssembledDeterminants:
    log_det_M: float
    log_det_M1: float
    log_det_M2: float
    log_det_R: float
    h_Y: int
    rows: tuple[ModeRow, ...]
    regularization: dict | None = None

    @property
    def log_ratio(self) -> float:
        """log of det_M / (det_M1 det_M2)."""
        return self.log_det_M - self.log_det_M1 - self.log_det_M2

    @property
    def log_bfk_ratio(self) -> float:
        return self.log_ratio - self.log_det_R


@dataclass(frozen=True)
class RAssembly:
    """Boundary-response operator: per-mode 2x2 block sums and its
    regularized log-determinant."""

    blocks: tuple[tuple[str, float, int, np.ndarray], ...]  # label, mu, mult, 2x2
    log_det: float


def _zero_mode_entries(geom: GlueGeometry):
    """Per zero mode: (theta, logdet_M, logdet_M1, logdet_M2, logdet_R)."""
    L1, L2, C = geom.L1, geom.L2, geom.C
    out = []
    for theta in geom.holonomy:
        ld_m = logdet_circle_mode(C, theta, 0.0)
        ld_1 = logdet_dirichlet_mode(L1, 0.0)
        ld_2 = logdet_dirichlet_mode(L2, 0.0)
        # block det (2 - 2 cos theta)/(L1 L2), in log form
        ld_r = math.log(2.0 - 2.0 * math.cos(theta)) - math.log(L1 * L2)
        out.append((theta, ld_m, ld_1, ld_2, ld_r))
    return out


def _block_sum(geom: GlueGeometry, mu: float, theta: float) -> np.ndarray:
    w2 = complex(math.cos(theta), math.sin(theta))
    b1 = dn_block(geom.L1, mu, 1.0)
    b2 = dn_block(geom.L2, mu, w2)
    return b1.matrix + b2.matrix


def _nonzero_remainders(geom: GlueGeometry, mu: float, theta: float):
    """Exponentially small remainders of the three subtracted logdets.

    Returns (rem_M, rem_M1, rem_M2, rem_R) where
      logdet_M  per mode = mu C  + rem_M
      logdet_Mi per mode = mu Li - log mu + rem_Mi
      logdet_R  per mode = log(4 mu^2) + rem_R
    All evaluated in exponential form, no cancellation.
    """
    L1, L2, C = geom.L1, geom.L2, geom.C
    e_c = math.exp(-mu * C) if mu * C < 745 else 0.0
    e_1 = math.exp(-2.0 * mu * L1) if 2.0 * mu * L1 < 745 else 0.0
    e_2 = math.exp(-2.0 * mu * L2) if 2.0 * mu * L2 < 745 else 0.0
    rem_m = math.log1p(-2.0 * math.cos(theta) * e_c + e_c * e_c)
    rem_1 = math.log1p(-e_1)
    rem_2 = math.log1p(-e_2)
    rem_r = rem_m - rem_1 - rem_2
    return rem_m, rem_1, rem_2, rem_r


def _finite_nonzero_count(fiber: FiberSpectrum) -> int:
    return sum(1 for m, _ in fiber.modes if m > 0.0)


def logdet_closed(geom: GlueGeometry, fiber: FiberSpectrum,
                  tail_eps: float = 1e-16,
                  max_modes: int | None = None) -> AssembledDeterminants:
    """All four log-determinants of the assembled geometry, by closed forms.

    Finite fibers sum per-mode values exactly.  Circle fibers subtract the
    divergent growth per mode (mu C, mu L_i - log mu, log 4 mu^2) and assign
    the subtracted sums their continued values; the remainder series are cut
    once below tail_eps.  Raises on a condition violation, and reports the
    cutoff when the remainder series fails to fall below tail_eps.
    """
    condition_A_check(geom, fiber).raise_if_failed()
    L1, L2, C = geom.L1, geom.L2, geom.C
    h_Y = 2 * fiber.h0

    rows: list[ModeRow] = []
    tot_m: list[float] = []
    tot_1: list[float] = []
    tot_2: list[float] = []
    tot_r: list[float] = []

    for theta, ld_m, ld_1, ld_2, ld_r in _zero_mode_entries(geom):
        rows.append(ModeRow("zero", 0.0, theta, 1, ld_m, ld_1, ld_2, ld_r))
        tot_m.append(ld_m)
        tot_1.append(ld_1)
        tot_2.append(ld_2)
        tot_r.append(ld_r)

    regularization = None
    if fiber.kind == "finite":
        for idx in range(_finite_nonzero_count(fiber)):
            mu, mult = _nth_nonzero(fiber, idx)
            theta = geom.nonzero_phase(idx)
            ld_m = logdet_circle_mode(C, theta, mu)
            ld_1 = logdet_dirichlet_mode(L1, mu)
            ld_2 = logdet_dirichlet_mode(L2, mu)
            blk = _block_sum(geom, mu, theta)
            ld_r = math.log(float(np.linalg.det(blk).real))
            rows.append(ModeRow("nonzero", mu, theta, mult,
                                ld_m, ld_1, ld_2, ld_r))
            tot_m.append(mult * ld_m)
            tot_1.append(mult * ld_1)
            tot_2.append(mult * ld_2)
            tot_r.append(mult * ld_r)
    else:
        sq = fiber_sqrt_zeta_data(fiber)
        s_mu = fiber_sqrt_zeta_at_minus_one(fiber)   # continued sum of mu_k
        s_cnt = sq.zeta_at_zero                      # continued mode count
        s_log = -sq.zeta_prime_at_zero               # continued sum of log mu_k
        regularization = {
            "sum_mu": s_mu, "mode_count": s_cnt, "sum_log_mu": s_log,
        }
        tot_m.append(C * s_mu)
        tot_1.append(L1 * s_mu - s_log)
        tot_2.append(L2 * s_mu - s_log)
        tot_r.append(2.0 * math.log(2.0) * s_cnt + 2.0 * s_log)
        scale = 1.0 + abs(C * s_mu)
        limit = max_modes or 100_000
        converged = False
        for idx, (mu, mult) in enumerate(fiber.nonzero_modes()):
            theta = geom.nonzero_phase(idx)
            rem_m, rem_1, rem_2, rem_r = _nonzero_remainders(geom, mu, theta)
            rows.append(ModeRow("nonzero", mu, theta, mult,
                                rem_m, rem_1, rem_2, rem_r))
            tot_m.append(mult * rem_m)
            tot_1.append(mult * rem_1)
            tot_2.append(mult * rem_2)
            tot_r.append(mult * rem_r)
            largest = max(abs(rem_m), abs(rem_1), abs(rem_2))
            if largest < tail_eps * scale:
                converged = True
                break
            if idx + 1 >= limit:
                raise RuntimeError(
                    f"fiber regularization did not converge within {limit} "
                    f"modes (last remainder {largest:.3e})"
                )
        assert converged

    log_m = math.fsum(tot_m)
    log_1 = math.fsum(tot_1)
    log_2 = math.fsum(tot_2)
    log_r = math.fsum(tot_r)
    return AssembledDeterminants(log_m, log_1, log_2, log_r, h_Y,
                                 tuple(rows), regularization)


def _nth_nonzero(fiber: FiberSpectrum, idx: int) -> tuple[float, int]:
    for i, pair in enumerate(fiber.nonzero_modes()):
        if i == idx:
            return pair
    raise IndexError(idx)


def assemble_R(geom: GlueGeometry, fiber: FiberSpectrum,
               tail_eps: float = 1e-16) -> RAssembly:
    """Boundary-response operator: per-mode block sums and log det.

    Zero-mode blocks carry the holonomy gauge (phase on the second piece);
    a trivial phase there would make the block singular, which is exactly
    the condition failure, so it is rejected up front.
    """
    condition_A_check(geom, fiber).raise_if_failed()
    asm = logdet_closed(geom, fiber, tail_eps=tail_eps)
    blocks: list[tuple[str, float, int, np.ndarray]] = []
    for j, theta in enumerate(geom.holonomy):
        blocks.append((f"zero:{j}", 0.0, 1, _block_sum(geom, 0.0, theta)))
    if fiber.kind == "finite":
        for idx in range(_finite_nonzero_count(fiber)):
            mu, mult = _nth_nonzero(fiber, idx)
            blocks.append((f"nonzero:{idx}", mu, mult,
                           _block_sum(geom, mu, geom.nonzero_phase(idx))))
    else:
        for idx, (mu, mult) in enumerate(fiber.nonzero_modes()):
            blocks.append((f"nonzero:{idx}", mu, mult,
                           _block_sum(geom, mu, geom.nonzero_phase(idx))))
            if idx >= 32:  # representative window; log det is already assembled
                break
    return RAssembly(blocks=tuple(blocks), log_det=asm.log_det_R)


def bfk_ratio(geom: GlueGeometry, fiber: FiberSpectrum) -> float:
    """det_M / (det_M1 det_M2 det_R): the gluing constant, independent of
    R, the interior lengths and the holonomy."""
    return math.exp(logdet_closed(geom, fiber).log_bfk_ratio)


def trace_perp_inverse_diff(geom: GlueGeometry, fiber: FiberSpectrum,
                            tail_eps: float = 1e-18) -> float:
    """Trace of (block inverse minus the large-R limit) over nonzero modes.

    Per mode the 2x2 block sum B satisfies tr B^{-1} - 1/mu =
    2 mu (s1 s2 cos(theta) - c1 c2)/det B with c_i = coth(mu L_i) - 1 and
    s_i = csch(mu L_i); everything is evaluated in decaying exponentials.
    """
    total: list[float] = []
    for idx, (mu, mult) in enumerate(fiber.nonzero_modes()):
        theta = geom.nonzero_phase(idx)
        d = _inverse_trace_diff_mode(geom, mu, theta)
        total.append(mult * d)
        if fiber.kind == "finite":
            if idx + 1 >= _finite_nonzero_count(fiber):
                break
        elif abs(d) < tail_eps and idx > 1:
            break
    return math.fsum(total)


def _inverse_trace_diff_mode(geom: GlueGeometry, mu: float, theta: float) -> float:
    x1, x2 = mu * geom.L1, mu * geom.L2
    c1 = 2.0 / math.expm1(2.0 * x1) if 2.0 * x1 < 745 else 0.0
    c2 = 2.0 / math.expm1(2.0 * x2) if 2.0 * x2 < 745 else 0.0
    e1 = math.exp(-x1) if x1 < 745 else 0.0
    e2 = math.exp(-x2) if x2 < 745 else 0.0
    s1 = 2.0 * e1 / (1.0 - e1 * e1)
    s2 = 2.0 * e2 / (1.0 - e2 * e2)
    det_over_mu2 = (2.0 + c1 + c2) ** 2 - (s1 * s1 + s2 * s2
                                           + 2.0 * s1 * s2 * math.cos(theta))
    return 2.0 * (s1 * s2 * math.cos(theta) - c1 * c2) / (mu * det_over_mu2)


@dataclass(frozen=True)
class CrosscheckEntry:
    problem: str
    eigen_sum: float
    heat_integral: float

    @property
    def gap(self) -> float:
        return abs(self.eigen_sum - self.heat_integral)


@dataclass(frozen=True)
class CrosscheckReport:
    entries: tuple[CrosscheckEntry, ...]
    tol: float

    @property
    def ok(self) -> bool:
        return all(e.gap <= self.tol * max(1.0, abs(e.eigen_sum))
                   for e in self.entries)


def heat_route_crosscheck(geom: GlueGeometry, fiber: FiberSpectrum,
                          mode_index: int, tol: float = 1e-8) -> CrosscheckReport:
    """Inverse trace of one mode, two ways: eigenvalue sum with an
    Euler-Maclaurin tail versus the time-integrated heat trace.

    mode_index counts zero modes first (one per holonomy phase), then
    nonzero modes in spectral order.  The selected mode must be
    kernel-free on all three base problems, which condition A guarantees.
    """
    if mode_index < fiber.h0:
        mu = 0.0
        theta = geom.holonomy[mode_index]
        if theta == 0.0:
            raise ConditionAViolation("selected mode has a kernel")
    else:
        mu, _ = _nth_nonzero_any(fiber, mode_index - fiber.h0)
        theta = geom.nonzero_phase(mode_index - fiber.h0)
    problems = (
        ("closed", ModeProblem(mu, Circle(geom.C, theta))),
        ("piece1", ModeProblem(mu, DirichletInterval(geom.L1))),
        ("piece2", ModeProblem(mu, DirichletInterval(geom.L2))),
    )
    entries = []
    for name, prob in problems:
        a = _inverse_trace_eigen(prob)
        b = _inverse_trace_heat(prob)
        entries.append(CrosscheckEntry(name, a, b))
    return CrosscheckReport(tuple(entries), tol)


def _nth_nonzero_any(fiber: FiberSpectrum, idx: int) -> tuple[float, int]:
    for i, pair in enumerate(fiber.nonzero_modes()):
        if i == idx:
            return pair
    raise IndexError(idx)


def _inverse_trace_eigen(problem: ModeProblem, cutoff: int = 20_000) -> float:
    """Sum of reciprocal eigenvalues: truncated sum + Euler-Maclaurin tail."""
    seq = problem.eigenvalue_seq()
    if seq.kernel_dim:
        raise ConditionAViolation("selected mode has a kernel")
    mu = seq.mu
    total: list[float] = []
    for fam in seq.families:
        c, d, n0 = fam.slope, fam.offset, fam.start
        n = np.arange(n0, cutoff, dtype=float)
        vals = 1.0 / ((c * n + d) ** 2 + mu * mu)
        total.append(fam.mult * math.fsum(vals))

        def f(x: float) -> float:
            return 1.0 / ((c * x + d) ** 2 + mu * mu)

        N = float(cutoff)
        if mu > 0:
            tail_int = (math.pi / 2.0 - math.atan((c * N + d) / mu)) / (c * mu)
        else:
            tail_int = 1.0 / (c * (c * N + d))
        fp = -2.0 * c * (c * N + d) / ((c * N + d) ** 2 + mu * mu) ** 2
        total.append(fam.mult * (tail_int + 0.5 * f(N) - fp / 12.0))
    return math.fsum(total)


def _inverse_trace_heat(problem: ModeProblem) -> float:
    """Integral over time of the heat trace (resolvent at zero)."""
    lam_min = problem.eigenvalue_seq().nth(0)
    t_hi = 60.0 / lam_min
    i1, _ = quad(lambda t: heat_trace_mode(problem, t), 0.0, 1.0,
                 epsabs=1e-12, epsrel=1e-11, limit=200)
    i2, _ = quad(lambda u: heat_trace_mode(problem, math.exp(u)) * math.exp(u),
                 0.0, math.log(t_hi), epsabs=1e-12, epsrel=1e-11, limit=400)
    return i1 + i2


def rr_plus_direction_diagnostic(geom: GlueGeometry) -> float:
    """Pairing of the trivial-holonomy block sum against the common fixed
    vector: exactly zero in this model, exhibiting the degenerate limit the
    condition-A hypothesis excludes.  Diagnostic only."""
    b = dn_block(geom.L1, 0.0, 1.0).matrix + dn_block(geom.L2, 0.0, 1.0).matrix
    phi = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return float((phi @ b @ phi).real)
