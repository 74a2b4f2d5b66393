"""Finite-difference spectral solver for the sub-Laplacian symbols.

On the generic part of the dual the symbol of the (negative) sub-Laplacian
acts on L^2(R_xi) as

    H(delta, beta) = -d^2/dxi^2 + (beta + (delta/2) xi^2)^2,

and rescaling xi -> |delta|^{-1/3} xi brings it to the Montgomery family

    Htilde(nu) = -d^2/dxi^2 + (nu + xi^2/2)^2,

with eigenvalues mu_n(delta, beta) = delta^{2/3} mutilde_n(beta delta^{-1/3})
(real cube roots for delta < 0).

Discretization: second-order central differences with Dirichlet walls at
+-L; the matrix is symmetric tridiagonal and eigenpairs are obtained by
bisection on Sturm-sequence counts plus inverse iteration (LAPACK stebz/
stein via scipy's eigh_tridiagonal).

Grid functions are normalized in the trapezoid inner product
<u, v> = h * sum(u * conj(v)).
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu


def real_cbrt(x: float) -> float:
    """Real cube root, odd in x."""
    return np.sign(x) * abs(x) ** (1.0 / 3.0)


# ---------------------------------------------------------------------------
# dual-set parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Generic:
    """Generic representation parameter (delta, beta), delta != 0."""

    delta: float
    beta: float

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("Generic requires delta != 0; use Schrodinger or Character")


@dataclass(frozen=True)
class Schrodinger:
    """Non-generic infinite-dimensional class, parameter lambda != 0."""

    lam: float

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("Schrodinger requires lambda != 0")


@dataclass(frozen=True)
class Character:
    """One-dimensional character of the first stratum."""

    alpha1: float
    alpha2: float


@dataclass(frozen=True)
class Montgomery:
    """Rescaled family parameter nu."""

    nu: float


RepParam = Generic | Schrodinger | Character
SpectralParam = Generic | Schrodinger | Montgomery


def potential(param: SpectralParam) -> Callable[[np.ndarray], np.ndarray]:
    """Confining potential of the 1-D symbol for the given parameter."""
    if isinstance(param, Generic):
        d, b = param.delta, param.beta
        return lambda xi: (b + 0.5 * d * xi**2) ** 2
    if isinstance(param, Schrodinger):
        lam = param.lam
        return lambda xi: lam**2 * xi**2
    if isinstance(param, Montgomery):
        nu = param.nu
        return lambda xi: (nu + 0.5 * xi**2) ** 2
    raise TypeError(f"no 1-D symbol for parameter {param!r}")


class ConfinementError(ValueError):
    """Raised when the Dirichlet box is too small for the requested level."""


# ---------------------------------------------------------------------------
# grid and operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform symmetric grid on [-L, L] with N nodes."""

    L: float
    N: int

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("need at least 3 grid nodes")
        if self.L <= 0:
            raise ValueError("box half-width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.N - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.N)

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return self.h * np.vdot(v, u)  # <u, v> = h sum u conj(v)

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.h * np.sum(np.abs(u) ** 2)))

    def refined(self, factor: int = 2) -> "SpectralGrid":
        return SpectralGrid(self.L, factor * (self.N - 1) + 1)


@dataclass(frozen=True)
class OperatorMatrix:
    """Symmetric tridiagonal -d^2 + V with Dirichlet walls at +-L."""

    grid: SpectralGrid
    diagonal: np.ndarray
    offdiag: float  # constant off-diagonal entry, -1/h^2

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = self.diagonal * u
        out[:-1] += self.offdiag * u[1:]
        out[1:] += self.offdiag * u[:-1]
        return out

    def potential_values(self) -> np.ndarray:
        return self.diagonal - 2.0 / self.grid.h**2


def build_hamiltonian(param: SpectralParam, grid: SpectralGrid) -> OperatorMatrix:
    """Three-point Laplacian plus the diagonal squared potential."""
    V = potential(param)(grid.nodes)
    h = grid.h
    return OperatorMatrix(grid, 2.0 / h**2 + V, -1.0 / h**2)


def choose_box(param: SpectralParam, mu_target: float, agmon: float = 18.0) -> float:
    """Box half-width making the Dirichlet wall error negligible.

    Walks outward from the classical region until the Agmon integral
    int sqrt(V - mu) exceeds `agmon` (wall error ~ exp(-2*agmon)), then
    adds margin and also enforces V(L) >= 4 mu_target.
    """
    V = potential(param)
    mu = max(mu_target, 1e-6)
    step = 0.01
    xi = 0.0
    acc = 0.0
    # skip the classical region
    while V(np.array([xi]))[0] < mu and xi < 1e3:
        xi += step
    while acc < agmon and xi < 1e3:
        v = V(np.array([xi]))[0]
        acc += step * np.sqrt(max(v - mu, 0.0))
        xi += step
    L = 1.1 * xi
    while V(np.array([L]))[0] < 4.0 * mu:
        L *= 1.1
    return float(L)


def default_grid(param: SpectralParam, mu_target: float, N: int = 4096) -> SpectralGrid:
    return SpectralGrid(choose_box(param, mu_target), N)


# ---------------------------------------------------------------------------
# eigenpairs
# ---------------------------------------------------------------------------


@dataclass
class EigenResult:
    """Lowest eigenpairs on a grid; vectors are columns, h-normalized."""

    grid: SpectralGrid
    eigenvalues: np.ndarray  # shape (k,)
    eigenvectors: np.ndarray  # shape (N, k)

    def pair(self, n: int) -> tuple[float, np.ndarray]:
        """1-based mode index."""
        return float(self.eigenvalues[n - 1]), self.eigenvectors[:, n - 1]

    def gap(self, n: int) -> float:
        mus = self.eigenvalues
        if len(mus) <= n:
            raise ValueError("request more eigenpairs to know the gap")
        below = abs(mus[n - 1] - mus[n - 2]) if n >= 2 else np.inf
        return float(min(below, abs(mus[n] - mus[n - 1])))


def eigen_lowest(op: OperatorMatrix, k: int, residual_tol: float = 1e-8,
                 confine_level: int | None = None) -> EigenResult:
    """k lowest eigenpairs of the tridiagonal operator.

    Deterministic sign convention: each vector is positive at the leftmost
    node where |phi| attains its maximum.  Confinement is checked for mode
    `confine_level` (default k); auxiliary basis modes above it may be
    box-limited, which is harmless for discrete perturbation sums.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    N = op.grid.N
    d = op.diagonal
    e = np.full(N - 1, op.offdiag)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    h = op.grid.h
    vecs = vecs / np.sqrt(h)  # Euclidean-orthonormal -> h-weighted orthonormal
    for j in range(k):
        v = vecs[:, j]
        peak = int(np.argmax(np.abs(v)))
        if v[peak] < 0:
            vecs[:, j] = -v
    # confinement + residual post-conditions
    if confine_level is None:
        confine_level = k
    mu_top = float(vals[confine_level - 1])
    V_wall = float(op.potential_values()[-1])
    if V_wall <= mu_top + max(1.0, 0.5 * abs(mu_top)):
        raise ConfinementError(
            f"V(+-L) = {V_wall:.3g} does not confine level mu = {mu_top:.3g}; "
            f"enlarge the box (L = {op.grid.L})"
        )
    # backward-error floor: inverse iteration delivers ||r|| ~ eps * ||H||
    opnorm = float(np.max(np.abs(d))) + 2.0 * abs(op.offdiag)
    floor = 200.0 * np.finfo(float).eps * opnorm
    for j in range(k):
        r = op.apply(vecs[:, j]) - vals[j] * vecs[:, j]
        if op.grid.norm(r) > residual_tol * max(abs(vals[j]), 1.0) + floor:
            raise RuntimeError(f"eigen residual too large for mode {j + 1}")
    if k >= 2:
        gaps = np.diff(vals)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.any(gaps < 1e-10 * scale):
            warnings.warn(
                "near-degenerate eigenvalues detected; projector derivatives "
                "will be unreliable at the affected levels",
                stacklevel=2,
            )
    return EigenResult(op.grid, vals, vecs)


def solve_lowest(param: SpectralParam, k: int, grid: SpectralGrid | None = None,
                 N: int = 4096, mu_guess: float | None = None,
                 confine_level: int | None = None) -> EigenResult:
    """Build the Hamiltonian on a suitable grid and return k lowest pairs."""
    if grid is None:
        if mu_guess is None:
            mu_guess = _mu_scale_guess(param, confine_level or k)
        grid = default_grid(param, mu_guess, N=N)
    return eigen_lowest(build_hamiltonian(param, grid), k,
                        confine_level=confine_level)


def _mu_scale_guess(param: SpectralParam, k: int) -> float:
    """Crude upper bound for mu_k used only to size the box."""
    if isinstance(param, Schrodinger):
        return abs(param.lam) * (2 * k + 1)
    if isinstance(param, Montgomery):
        nu = param.nu
        return 4.0 * (k + 1) ** (4.0 / 3.0) + nu**2 + 2 * abs(nu)
    if isinstance(param, Generic):
        s = abs(param.delta) ** (2.0 / 3.0)
        nu = param.beta * real_cbrt(param.delta) / abs(param.delta) ** (2.0 / 3.0)
        return s * (4.0 * (k + 1) ** (4.0 / 3.0) + nu**2 + 2 * abs(nu))
    raise TypeError(f"unsupported parameter {param!r}")


def eigenvalues_extrapolated(param: SpectralParam, k: int, N: int = 4096,
                             grid: SpectralGrid | None = None) -> np.ndarray:
    """Richardson-extrapolated eigenvalues from grids N and 2N.

    The three-point stencil carries an O(h^2) eigenvalue bias; combining
    (4 mu_{2N} - mu_N)/3 cancels it, leaving O(h^4).
    """
    if grid is None:
        grid = default_grid(param, _mu_scale_guess(param, k), N=N)
    coarse = eigen_lowest(build_hamiltonian(param, grid), k).eigenvalues
    fine = eigen_lowest(build_hamiltonian(param, grid.refined()), k).eigenvalues
    return (4.0 * fine - coarse) / 3.0


def montgomery_mu(nu: float, n: int, N: int = 4096, extrapolate: bool = True) -> float:
    """mutilde_n(nu), Richardson-extrapolated by default."""
    p = Montgomery(nu)
    if extrapolate:
        return float(eigenvalues_extrapolated(p, n, N=N)[n - 1])
    return float(solve_lowest(p, n, N=N).eigenvalues[n - 1])


def generic_mu(delta: float, beta: float, n: int, N: int = 4096,
               extrapolate: bool = True) -> float:
    """mu_n(delta, beta), Richardson-extrapolated by default."""
    p = Generic(delta, beta)
    if extrapolate:
        return float(eigenvalues_extrapolated(p, n, N=N)[n - 1])
    return float(solve_lowest(p, n, N=N).eigenvalues[n - 1])


# ---------------------------------------------------------------------------
# Feynman-Hellmann machinery
# ---------------------------------------------------------------------------


def _w_values(delta: float, beta: float, grid: SpectralGrid) -> np.ndarray:
    return beta + 0.5 * delta * grid.nodes**2


@dataclass
class SpectralData:
    """Eigen data at one (delta, beta) plus first-order perturbation sums.

    dphi is the beta-derivative of the n-th eigenvector from the spectral
    sum over m <= m_max; mu_d1/mu_d2 are the Feynman-Hellmann first and
    second derivatives of mu_n in beta (the second uses d_beta^2 H = 2).
    """

    param: Generic
    n: int
    grid: SpectralGrid
    mu: float
    phi: np.ndarray
    dphi: np.ndarray
    mu_d1: float
    mu_d2: float
    eigen: EigenResult
    coupling_tail: float

    @property
    def w(self) -> np.ndarray:
        return _w_values(self.param.delta, self.param.beta, self.grid)


def spectral_data(delta: float, beta: float, n: int, grid: SpectralGrid | None = None,
                  m_max: int = 64, N: int = 4096) -> SpectralData:
    """Assemble eigenpair, FH derivatives and the perturbation sum at level n."""
    param = Generic(delta, beta)
    k = max(n + 1, min(m_max, 96))
    res = solve_lowest(param, k, grid=grid, N=N,
                       mu_guess=None if grid else _mu_scale_guess(param, n + 2),
                       confine_level=n + 1)
    grid = res.grid
    mu, phi = res.pair(n)
    w = _w_values(delta, beta, grid)
    dH_phi = 2.0 * w * phi
    mu_d1 = float(grid.inner(dH_phi, phi).real)

    dphi = np.zeros_like(phi)
    tail = 0.0
    for m in range(1, k + 1):
        if m == n:
            continue
        mu_m, phi_m = res.pair(m)
        c = float(grid.inner(dH_phi, phi_m).real) / (mu - mu_m)
        dphi += c * phi_m
        if m == k:
            tail = abs(c)
    mu_d2 = 2.0 + 2.0 * float(grid.inner(dH_phi, dphi).real)
    return SpectralData(param, n, grid, mu, phi, dphi, mu_d1, mu_d2, res, tail)


def mu_beta_derivative(delta: float, beta: float, n: int,
                       grid: SpectralGrid | None = None, N: int = 4096) -> float:
    """d mu_n / d beta via the Feynman-Hellmann expectation <2 W phi, phi>."""
    param = Generic(delta, beta)
    res = solve_lowest(param, n, grid=grid, N=N)
    mu, phi = res.pair(n)
    w = _w_values(delta, beta, res.grid)
    return float(res.grid.inner(2.0 * w * phi, phi).real)


def mu_beta_derivative2(delta: float, beta: float, n: int,
                        grid: SpectralGrid | None = None, m_max: int = 64,
                        N: int = 4096) -> float:
    """d^2 mu_n / d beta^2 through the differentiated FH sum."""
    return spectral_data(delta, beta, n, grid=grid, m_max=m_max, N=N).mu_d2


@dataclass
class ProjectorPair:
    """Rank-one projector onto phi_n and its beta-derivative."""

    data: SpectralData

    def project(self, u: np.ndarray) -> np.ndarray:
        d = self.data
        return d.phi * complex(d.grid.inner(u, d.phi))

    def project_complement(self, u: np.ndarray) -> np.ndarray:
        return u - self.project(u)

    def apply_derivative(self, u: np.ndarray) -> np.ndarray:
        """dPi_n u = |dphi><phi| u + |phi><dphi| u."""
        d = self.data
        return d.dphi * complex(d.grid.inner(u, d.phi)) + d.phi * complex(
            d.grid.inner(u, d.dphi)
        )


def projector_derivative(delta: float, beta: float, n: int,
                         grid: SpectralGrid | None = None, m_max: int = 64,
                         N: int = 4096, gap_tol: float = 1e-8) -> ProjectorPair:
    """Spectral-sum assembly of dPi_n; refuses on near-degenerate levels."""
    data = spectral_data(delta, beta, n, grid=grid, m_max=m_max, N=N)
    gap = data.eigen.gap(n)
    if gap < gap_tol * max(1.0, abs(data.mu)):
        raise RuntimeError(
            f"spectral gap {gap:.3g} at level {n} below threshold; "
            "projector derivative is ill-conditioned"
        )
    return ProjectorPair(data)


def reduced_resolvent_solve(data: SpectralData, rhs: np.ndarray) -> np.ndarray:
    """Solve (mu_n - H) u = rhs on the orthogonal complement of phi_n.

    The right side is projected off phi_n first; the singular tridiagonal
    system is regularized by bordering with the eigenvector, which pins
    <u, phi_n> = 0.
    """
    grid = data.grid
    H = build_hamiltonian(data.param, grid)
    N = grid.N
    rhs_p = rhs - data.phi * complex(grid.inner(rhs, data.phi))

    main = data.mu - H.diagonal
    off = -H.offdiag
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    idx = np.arange(N)
    rows += [idx, idx[:-1], idx[1:]]
    cols += [idx, idx[1:], idx[:-1]]
    vals += [main, np.full(N - 1, off), np.full(N - 1, off)]
    # border with the eigenvector (Lagrange multiplier row/column)
    rows += [idx, np.full(N, N)]
    cols += [np.full(N, N), idx]
    vals += [data.phi, data.phi]
    A = csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N + 1, N + 1),
    )
    lu = splu(A)
    if np.iscomplexobj(rhs_p):
        sol = lu.solve(np.concatenate([rhs_p.real, [0.0]])) + 1j * lu.solve(
            np.concatenate([rhs_p.imag, [0.0]])
        )
    else:
        sol = lu.solve(np.concatenate([rhs_p, [0.0]]))
    u = sol[:N]
    return u - data.phi * complex(grid.inner(u, data.phi))


# ---------------------------------------------------------------------------
# branch sampling / CSV export
# ---------------------------------------------------------------------------


@dataclass
class EigenBranch:
    """Sampled eigenvalue curve with FH derivatives along beta or nu."""

    n: int
    rows: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,delta,beta,mu,dmu_dbeta,d2mu_dbeta2,grid_L,grid_N\n")
        for r in self.rows:
            buf.write(
                "{n},{delta:.17g},{beta:.17g},{mu:.17g},{dmu_dbeta:.17g},"
                "{d2mu_dbeta2:.17g},{grid_L:.17g},{grid_N}\n".format(**r)
            )
        return buf.getvalue()


def sample_branch(n: int, delta: float, betas: Sequence[float],
                  m_max: int = 64, N: int = 4096) -> EigenBranch:
    """Sample mu_n(delta, .) with first and second FH derivatives.

    For the Montgomery family pass delta = 1 and betas = nus.
    """
    branch = EigenBranch(n=n)
    for beta in betas:
        data = spectral_data(delta, float(beta), n, m_max=m_max, N=N)
        branch.rows.append(
            dict(
                n=n,
                delta=delta,
                beta=float(beta),
                mu=data.mu,
                dmu_dbeta=data.mu_d1,
                d2mu_dbeta2=data.mu_d2,
                grid_L=data.grid.L,
                grid_N=data.grid.N,
            )
        )
    return branch
