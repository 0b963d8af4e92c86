"""Closed-form references computed independently of the package internals.

Everything here is derived from textbook identities (Mehler's Hermite
expansion of a correlated Gaussian, and the Gaussian approximation of a
sinc) so that the numerical decompositions in the package can be checked
against formulas that share no code with them.
"""

from __future__ import annotations

import numpy as np

# Gaussian stand-in for sinc(x): exp(-gamma x^2) with the same amplitude
# half-maximum point, sinc(1.8955) = 1/2.
SINC_GAUSS_GAMMA = float(np.log(2.0) / 1.8955**2)


def mehler_rho(mu: float) -> float:
    """Schmidt ratio of a correlated Gaussian amplitude.

    For F(x, y) = exp(-(x^2 + y^2)/(2 s^2) + mu x y / s^2) (any scale s,
    |mu| < 1) Mehler's expansion gives singular values proportional to
    rho^n with rho = (1 - sqrt(1 - mu^2)) / |mu|.
    """
    if mu == 0.0:
        return 0.0
    return float((1.0 - np.sqrt(1.0 - mu * mu)) / abs(mu))


def mehler_mu(rho: float) -> float:
    """Inverse of mehler_rho: the correlation giving Schmidt ratio rho."""
    return float(2.0 * rho / (1.0 + rho * rho))


def mehler_coefficients(mu: float, n: int) -> np.ndarray:
    """First n normalized Schmidt coefficients c_k = (1 - lam) lam^k."""
    lam = mehler_rho(mu) ** 2
    return (1.0 - lam) * lam ** np.arange(n)


def mehler_K(mu: float) -> float:
    """Schmidt number of the correlated Gaussian: (1 + lam)/(1 - lam)."""
    lam = mehler_rho(mu) ** 2
    return float((1.0 + lam) / (1.0 - lam))


def mehler_kernel(x: np.ndarray, rho: float) -> np.ndarray:
    """Correlated Gaussian grid whose Schmidt modes are Hermite functions.

    Uses the unit-variance parameterization
        F = exp(-q (x^2 + y^2) + 2 b x y),
        q = (1 + rho^2) / (2 (1 - rho^2)),  b = rho / (1 - rho^2),
    for which the correlation is mu = b / q = 2 rho / (1 + rho^2) and the
    envelope decays fast enough along the diagonal that a +-15 window
    truncates below double precision.
    """
    q = (1.0 + rho**2) / (2.0 * (1.0 - rho**2))
    b = rho / (1.0 - rho**2)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.exp(-q * (X**2 + Y**2) + 2.0 * b * X * Y)


def double_gaussian_K(
    beta1_p: float,
    beta1_s: float,
    beta1_i: float,
    sigma: float,
    L_m: float,
    gamma: float = SINC_GAUSS_GAMMA,
) -> float:
    """Analytic Schmidt number of a Gaussian-pump, Gaussian-sinc JSA.

    Replacing sinc(delta_k L / 2) by exp(-gamma (delta_k L / 2)^2) makes
    |F| a bivariate Gaussian in the frequency offsets (x, y):

        ln |F| = -(x + y)^2 / (4 sigma^2) - gamma L^2 (a x + b y)^2 / 4,
        a = beta1_p - beta1_s,  b = beta1_p - beta1_i,

    a quadratic form -(A x^2 + 2 B x y + C y^2)/2 whose Schmidt number
    follows from the Mehler formulas with mu = -B / sqrt(A C).
    """
    a = beta1_p - beta1_s
    b = beta1_p - beta1_i
    A = 1.0 / (2.0 * sigma**2) + gamma * L_m**2 * a**2 / 2.0
    C = 1.0 / (2.0 * sigma**2) + gamma * L_m**2 * b**2 / 2.0
    B = 1.0 / (2.0 * sigma**2) + gamma * L_m**2 * a * b / 2.0
    mu = -B / np.sqrt(A * C)
    return mehler_K(float(mu))
