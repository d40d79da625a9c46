"""Gaussian mixtures in frequency space: the exact solution backend.

A state is a finite sum of terms

    F(zeta) = amplitude * exp(-1/2 (zeta - center)^T quad (zeta - center)
                              + i phase . zeta)

with zeta in R^(2d), real center and phase vectors, and a complex
symmetric quadratic matrix whose real part is positive definite.  Such
mixtures are closed under the exact flow of the kinetic symbol and have
closed-form pairwise L2 inner products, so they serve as the reference
backend: norms are exact (no grid), and propagation is parameter algebra.

The mixture represents the frequency side; the physical L2 norm follows
from Plancherel, ||g|| = (2 pi)^(-d) ||ghat||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .grid import TWO_PI, PhaseField, PhaseGrid, SpectralField, fourier_inverse


@dataclass(frozen=True)
class GaussianTerm:
    amplitude: complex
    center: np.ndarray      # real, shape (2d,)
    quad: np.ndarray        # complex symmetric, shape (2d, 2d), Re part SPD
    phase: np.ndarray       # real, shape (2d,)

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        phase = np.asarray(self.phase, dtype=float)
        quad = np.asarray(self.quad, dtype=complex)
        n = center.size
        if n % 2 != 0:
            raise DataError(f"center must have even length (2d), got {n}")
        if phase.shape != (n,) or quad.shape != (n, n):
            raise DataError("term parameter shapes are inconsistent")
        if not (np.all(np.isfinite(center)) and np.all(np.isfinite(phase))
                and np.all(np.isfinite(quad)) and np.isfinite(self.amplitude)):
            raise DataError("term parameters contain non-finite entries")
        if not np.allclose(quad, quad.T, atol=1e-12 * max(1.0, np.abs(quad).max())):
            raise DataError("quadratic matrix must be symmetric")
        try:
            np.linalg.cholesky(quad.real)
        except np.linalg.LinAlgError:
            raise DataError("real part of the quadratic matrix must be positive definite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class GaussianMixtureState:
    d: int
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if self.d < 1:
            raise DataError(f"d must be >= 1, got {self.d}")
        for t in terms:
            if t.dim != 2 * self.d:
                raise DataError(f"term dimension {t.dim} != 2d = {2 * self.d}")
        object.__setattr__(self, "terms", terms)


def evaluate_mixture(state: GaussianMixtureState, points: np.ndarray) -> np.ndarray:
    """Evaluate the mixture at frequency points, shape (..., 2d)."""
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[:-1], dtype=complex)
    for t in state.terms:
        dev = points - t.center
        quad = np.einsum("...i,ij,...j->...", dev, t.quad, dev)
        out += t.amplitude * np.exp(-0.5 * quad + 1j * (points @ t.phase))
    return out


def mixture_to_spectral(state: GaussianMixtureState, grid: PhaseGrid) -> SpectralField:
    if grid.d != state.d:
        raise DataError(f"grid d={grid.d} does not match state d={state.d}")
    return SpectralField(grid, evaluate_mixture(state, grid.dual_mesh()))


def mixture_to_phase(state: GaussianMixtureState, grid: PhaseGrid) -> PhaseField:
    """Sample the mixture on the dual grid and invert to the physical box."""
    return fourier_inverse(mixture_to_spectral(state, grid))


def _pair_integral(tj: GaussianTerm, tk: GaussianTerm) -> complex:
    """integral of tj(zeta) * conj(tk(zeta)) d zeta, in closed form.

    Gaussian integral with complex symmetric A = quad_j + conj(quad_k):
    the real part is SPD, so every eigenvalue sits in the right half
    plane and the principal square root per eigenvalue selects the branch
    continuous from the real SPD case.
    """
    a = tj.quad + np.conj(tk.quad)
    w = tj.quad @ tj.center + np.conj(tk.quad) @ tk.center + 1j * (tj.phase - tk.phase)
    c = -0.5 * (tj.center @ tj.quad @ tj.center) \
        - 0.5 * (tk.center @ np.conj(tk.quad) @ tk.center)
    lam = np.linalg.eigvals(a)
    det_m12 = np.exp(-0.5 * np.sum(np.log(lam)))
    n = tj.dim
    val = (TWO_PI) ** (n / 2.0) * det_m12 * np.exp(0.5 * (w @ np.linalg.solve(a, w)) + c)
    return tj.amplitude * np.conj(tk.amplitude) * val


def mixture_norm(state: GaussianMixtureState) -> float:
    """Exact L2 norm of the frequency-side mixture."""
    total = 0.0 + 0.0j
    for tj in state.terms:
        for tk in state.terms:
            total += _pair_integral(tj, tk)
    return float(np.sqrt(max(total.real, 0.0)))


def physical_norm(state: GaussianMixtureState) -> float:
    """L2 norm of the physical-side function, via Plancherel."""
    return mixture_norm(state) / TWO_PI**state.d


def mixture_value_at_origin(state: GaussianMixtureState) -> complex:
    return complex(evaluate_mixture(state, np.zeros((1, 2 * state.d)))[0])


def state_difference(a: GaussianMixtureState, b: GaussianMixtureState) -> GaussianMixtureState:
    """Mixture representing a - b (for exact distances between states)."""
    if a.d != b.d:
        raise DataError("states have different d")
    negated = tuple(
        GaussianTerm(-t.amplitude, t.center, t.quad, t.phase) for t in b.terms
    )
    return GaussianMixtureState(a.d, a.terms + negated)


def scale_state(state: GaussianMixtureState, factor: complex) -> GaussianMixtureState:
    return GaussianMixtureState(
        state.d,
        tuple(GaussianTerm(factor * t.amplitude, t.center, t.quad, t.phase) for t in state.terms),
    )


def random_mixture_state(
    rng: np.random.Generator,
    d: int = 1,
    n_terms: int = 1,
    eig_range: tuple = (0.4, 1.2),
    imag_scale: float = 0.15,
    center_scale: float = 1.5,
    phase_scale: float = 1.0,
) -> GaussianMixtureState:
    """Draw a random well-conditioned mixture for experiments and tests.

    eig_range bounds the eigenvalues of the real quadratic part, which
    controls both frequency reach (small eigenvalues spread the spectrum)
    and physical reach (the physical covariance equals the quadratic
    matrix), so defaults keep typical states resolvable on moderate boxes.
    """
    n = 2 * d
    terms = []
    for _ in range(n_terms):
        q = np.linalg.qr(rng.normal(size=(n, n)))[0]
        eigs = rng.uniform(*eig_range, size=n)
        real = q @ np.diag(eigs) @ q.T
        sym = rng.normal(size=(n, n))
        imag = imag_scale * (sym + sym.T) / 2.0
        quad = real + 1j * imag
        center = rng.uniform(-center_scale, center_scale, size=n)
        phase = rng.uniform(-phase_scale, phase_scale, size=n)
        amp = rng.normal() + 1j * rng.normal()
        terms.append(GaussianTerm(amp, center, quad, phase))
    return GaussianMixtureState(d, tuple(terms))


def fitting_grid(
    state: GaussianMixtureState,
    sigmas: float = 8.0,
    min_points: int = 64,
    max_points: int = 1024,
) -> PhaseGrid:
    """Choose a box that resolves the state on both sides of the transform.

    Physical extent: each term's physical covariance is its quadratic
    matrix (center shifted by -phase), so the box half width covers
    |phase| + sigmas * sqrt(largest covariance eigenvalue).  Frequency
    extent: |center| + sigmas * sqrt(largest eigenvalue of quad_real^-1)
    must stay under Nyquist.  Grid sizes are rounded up to powers of two.
    """
    d = state.d
    phys = 0.0
    freq = 0.0
    for t in state.terms:
        cov_eigs = np.linalg.eigvalsh(t.quad.real)
        phys = max(phys, float(np.max(np.abs(t.phase))) + sigmas * np.sqrt(cov_eigs[-1]))
        freq = max(freq, float(np.max(np.abs(t.center))) + sigmas / np.sqrt(cov_eigs[0]))
    half_width = float(np.ceil(phys))
    spacing_cap = np.pi / freq
    m_needed = 2.0 * half_width / spacing_cap
    m = min_points
    while m < m_needed and m < max_points:
        m *= 2
    if m < m_needed:
        raise DataError(
            f"state needs more than {max_points} points per axis "
            f"(box {half_width}, frequency reach {freq:.2f})"
        )
    return PhaseGrid(d=d, points_per_axis=m, half_width=half_width)
