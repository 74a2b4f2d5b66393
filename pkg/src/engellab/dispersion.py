"""Critical points of the Montgomery dispersion curves, their cones,
and the Strichartz admissibility arithmetic.

The n-th Montgomery branch nu -> mutilde_n(nu) diverges at +-infinity, so
it has critical points; for n = 1 there is exactly one, a non-degenerate
minimum.  Each critical point nu0 generates the dilation-invariant cone
beta = nu0 * delta^{1/3} in the generic dual, on which the transport speed
d_beta mu_n vanishes and the effective second-microlocal dispersion
coefficient is mutilde_n''(nu0)/2.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .spectral import (
    Montgomery,
    SpectralGrid,
    _mu_scale_guess,
    default_grid,
    real_cbrt,
    spectral_data,
    solve_lowest,
)


# ---------------------------------------------------------------------------
# dispersion reports
# ---------------------------------------------------------------------------


@dataclass
class DispersionReport:
    """One certified critical point of a Montgomery branch."""

    n: int
    nu_c: float
    mu_at_c: float
    curvature: float
    bracket: tuple[float, float]
    certificate: int  # sign changes of mu' counted over the whole scan
    curvature_step: float
    kind: str  # "minimum" | "maximum"

    def to_dict(self) -> dict:
        return dict(
            n=self.n,
            nu_c=self.nu_c,
            mu_at_c=self.mu_at_c,
            curvature=self.curvature,
            bracket=list(self.bracket),
            certificate=self.certificate,
            curvature_step=self.curvature_step,
            kind=self.kind,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _branch_d1(nu: float, n: int, N: int, grid: SpectralGrid | None = None) -> float:
    """FH derivative mutilde_n'(nu) = <2(nu + xi^2/2) phi_n, phi_n>."""
    param = Montgomery(float(nu))
    res = solve_lowest(param, n, grid=grid, N=N, confine_level=n)
    mu, phi = res.pair(n)
    w = nu + 0.5 * res.grid.nodes**2
    return float(res.grid.inner(2.0 * w * phi, phi).real)


def critical_points(
    n: int,
    scan: tuple[float, float] = (-4.0, 4.0),
    tol: float = 1e-10,
    samples: int = 161,
    N: int = 8192,
    curvature_step: float = 1e-3,
    merge_tol: float = 1e-5,
) -> list[DispersionReport]:
    """Locate and certify all roots of mutilde_n' inside the scan window.

    Roots are isolated by sign changes of the FH derivative on the sample
    grid, refined by bisection to `tol`, and merged when closer than
    `merge_tol`.  The curvature comes from central differences of the FH
    derivative with Richardson halving of the step.
    """
    lo, hi = float(scan[0]), float(scan[1])
    if not hi > lo:
        raise ValueError("empty scan window")
    nus = np.linspace(lo, hi, samples)
    # one shared box covering the most demanding end of the scan
    mu_guess = max(_mu_scale_guess(Montgomery(lo), n), _mu_scale_guess(Montgomery(hi), n))
    grid = default_grid(Montgomery(lo if abs(lo) > abs(hi) else hi), mu_guess, N=N)
    d1 = np.array([_branch_d1(v, n, N, grid=grid) for v in nus])

    sign_changes = [
        k for k in range(samples - 1) if d1[k] == 0.0 or d1[k] * d1[k + 1] < 0.0
    ]
    certificate = len(sign_changes)
    if not sign_changes:
        warnings.warn(
            f"no sign change of the branch derivative on [{lo}, {hi}]; "
            "widen the scan (the branch diverges at +-infinity)",
            stacklevel=2,
        )

    roots: list[tuple[float, tuple[float, float]]] = []
    for k in sign_changes:
        a, b = float(nus[k]), float(nus[k + 1])
        fa = d1[k]
        bracket = (a, b)
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = _branch_d1(m, n, N, grid=grid)
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
        roots.append((0.5 * (a + b), bracket))

    merged: list[tuple[float, tuple[float, float]]] = []
    for root, bracket in roots:
        if merged and abs(root - merged[-1][0]) < merge_tol:
            continue
        merged.append((root, bracket))

    reports = []
    for root, bracket in merged:
        curv = _curvature(root, n, N, grid, curvature_step)
        mu_at = float(solve_lowest(Montgomery(root), n, grid=grid, confine_level=n)
                      .eigenvalues[n - 1])
        reports.append(
            DispersionReport(
                n=n,
                nu_c=root,
                mu_at_c=mu_at,
                curvature=curv,
                bracket=bracket,
                certificate=certificate,
                curvature_step=curvature_step,
                kind="minimum" if curv > 0 else "maximum",
            )
        )
    return reports


def _curvature(nu: float, n: int, N: int, grid: SpectralGrid | None, step: float) -> float:
    """mutilde_n''(nu) by central differences of the FH derivative,
    Richardson-extrapolated from steps `step` and `step/2`."""

    def diff(s: float) -> float:
        return (_branch_d1(nu + s, n, N, grid) - _branch_d1(nu - s, n, N, grid)) / (2 * s)

    d_full = diff(step)
    d_half = diff(0.5 * step)
    return (4.0 * d_half - d_full) / 3.0


def branch_curvature(n: int, nu: float, N: int = 8192, step: float = 1e-3) -> float:
    """Public wrapper around the curvature estimator."""
    return _curvature(float(nu), n, N, None, step)


# ---------------------------------------------------------------------------
# cones and curvature consistency across the rescaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeSection:
    """The dilation-invariant set beta = nu0 * delta^{1/3}."""

    nu0: float
    delta_min: float = 1e-3
    delta_max: float = 16.0

    def beta(self, delta: float) -> float:
        return self.nu0 * real_cbrt(delta)

    def contains(self, delta: float, beta: float, tol: float = 1e-12) -> bool:
        return abs(beta - self.beta(delta)) <= tol * max(1.0, abs(beta))


@dataclass
class CurvatureConsistency:
    nu0: float
    n: int
    curvature_ref: float
    deviations: dict[float, float]
    on_cone_d1: dict[float, float]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())

    @property
    def max_on_cone_d1(self) -> float:
        return max(abs(v) for v in self.on_cone_d1.values())


def curvature_consistency(
    n: int,
    nu0: float,
    delta_list: Sequence[float],
    N: int = 8192,
    m_max: int = 64,
) -> CurvatureConsistency:
    """Check d_beta^2 mu_n(delta, nu0 delta^{1/3}) = mutilde_n''(nu0).

    The left side uses the differentiated FH sum at each delta on the cone;
    the reference curvature comes from finite differences of the rescaled
    branch, so the two routes share no grid.
    """
    ref = branch_curvature(n, nu0, N=N)
    devs: dict[float, float] = {}
    d1s: dict[float, float] = {}
    for delta in delta_list:
        beta = nu0 * real_cbrt(delta)
        data = spectral_data(float(delta), float(beta), n, m_max=m_max, N=N)
        devs[float(delta)] = abs(data.mu_d2 - ref)
        d1s[float(delta)] = data.mu_d1
    return CurvatureConsistency(nu0, n, ref, devs, d1s)


# ---------------------------------------------------------------------------
# Strichartz admissibility arithmetic
# ---------------------------------------------------------------------------

NOT_ADMISSIBLE = "not-admissible"
OBSTRUCTED = "admissible-but-obstructed"
ALLOWED = "allowed"

_ALLOWED_PAIRS = {(None, Fraction(2)), (Fraction(2), Fraction(14, 5))}


def _as_exponent(x) -> Fraction | None:
    """Exact exponent value; None encodes infinity.

    Floats are read at decimal face value (repr) so that 2.8 means 14/5.
    """
    if x is None:
        return None
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return None
        return Fraction(x)
    if isinstance(x, float):
        if math.isinf(x):
            return None
        if math.isnan(x):
            raise ValueError("exponent is NaN")
        return Fraction(repr(x))
    return Fraction(x)


def strichartz_admissible(q, p) -> str:
    """Classify a Strichartz exponent pair on the Engel group.

    The scaling line is 2/q + 7/p = 7/2 with q, p in [2, inf]; off the line
    the pair is not admissible, on it only (inf, 2) and (2, 14/5) escape the
    cone-concentration obstruction.
    """
    qv = _as_exponent(q)
    pv = _as_exponent(p)
    for name, v in (("q", qv), ("p", pv)):
        if v is not None and v < 2:
            raise ValueError(f"exponent {name} = {v} below 2")
    line = (0 if qv is None else Fraction(2) / qv) + (
        0 if pv is None else Fraction(7) / pv
    )
    if line != Fraction(7, 2):
        return NOT_ADMISSIBLE
    if (qv, pv) in _ALLOWED_PAIRS:
        return ALLOWED
    return OBSTRUCTED
