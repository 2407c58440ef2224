"""Closed skew normal distributions: density, conditioning, and exact sampling.

The supported density/sampling cases are those where the latent covariance
Delta + Gamma Sigma Gamma' is diagonal, so every multivariate normal CDF in
the normalizing constant factors into univariate terms. Non-diagonal inputs
raise rather than silently approximate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

# beyond this standardized lower bound the inverse-CDF loses precision and
# the exponential-proposal rejection sampler takes over
TAIL_SWITCH = 4.0

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class UnsupportedCovarianceStructure(ValueError):
    """Raised when a CSN operation would need a non-factoring normal CDF."""


class SingularBlock(ValueError):
    """Raised when a conditioning block of Sigma is numerically singular."""


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x) - LOG_SQRT_2PI)


def norm_logpdf(x):
    return -0.5 * np.square(x) - LOG_SQRT_2PI


def norm_cdf(x):
    return ndtr(x)


def norm_logcdf(x):
    return log_ndtr(x)


@dataclass(frozen=True)
class CsnParams:
    """Parameters (mu, sigma, gamma, nu, delta) of an n-dim CSN with m latents."""

    mu: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        delta = np.atleast_2d(np.asarray(self.delta, dtype=float))
        n = mu.shape[0]
        m = nu.shape[0]
        if sigma.shape != (n, n):
            raise ValueError("sigma shape mismatch")
        if gamma.shape != (m, n):
            raise ValueError("gamma shape mismatch")
        if delta.shape != (m, m):
            raise ValueError("delta shape mismatch")
        for name, mat in (("sigma", sigma), ("delta", delta)):
            if not np.allclose(mat, mat.T, atol=1e-10 * max(1.0, np.abs(mat).max())):
                raise ValueError(f"{name} must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "delta", delta)

    @property
    def n(self):
        return self.mu.shape[0]

    @property
    def m(self):
        return self.nu.shape[0]


def _require_diagonal(mat, what):
    """Return the diagonal of mat, raising if off-diagonal mass is material."""
    off = mat - np.diag(np.diag(mat))
    scale = max(1.0, np.abs(np.diag(mat)).max())
    if np.abs(off).max() > 1e-10 * scale:
        raise UnsupportedCovarianceStructure(
            f"{what} must be diagonal for the supported CSN cases"
        )
    d = np.diag(mat).copy()
    if np.any(d <= 0):
        raise ValueError(f"{what} must have positive diagonal")
    return d


def _latent_cov(p):
    return p.delta + p.gamma @ p.sigma @ p.gamma.T


def csn_log_density(p, y):
    """Log density of the CSN at y (vector) or at each row of y (matrix).

    Requires both delta and delta + gamma sigma gamma' diagonal so that the
    m-variate normal CDFs factor into products of univariate Phi terms.
    """
    d_delta = _require_diagonal(p.delta, "delta")
    d_lat = _require_diagonal(_latent_cov(p), "delta + gamma sigma gamma'")

    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    yy = np.atleast_2d(y) - p.mu

    sign, logdet = np.linalg.slogdet(p.sigma)
    if sign <= 0:
        raise ValueError("sigma must be positive definite")
    sol = np.linalg.solve(p.sigma, yy.T)  # (n, rows)
    quad = np.einsum("ij,ji->i", yy, sol)
    log_phi = -0.5 * quad - 0.5 * logdet - p.n * LOG_SQRT_2PI

    z = yy @ p.gamma.T  # rows gamma (y - mu)
    log_cdf = log_ndtr((z - p.nu) / np.sqrt(d_delta)).sum(axis=1)
    log_norm = log_ndtr(-p.nu / np.sqrt(d_lat)).sum()

    out = log_phi + log_cdf - log_norm
    return out[0] if single else out


def csn_conditional(p, n1, y1):
    """Parameters of the conditional distribution of Y2 given Y1 = y1.

    n1 is the length of the observed leading block. The skewness dimension m
    is unchanged; only (mu, sigma, gamma, nu) transform.
    """
    if not 0 < n1 < p.n:
        raise ValueError("partition index must split the vector")
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    if y1.shape != (n1,):
        raise ValueError("observed sub-vector has wrong length")
    s11 = p.sigma[:n1, :n1]
    s12 = p.sigma[:n1, n1:]
    s21 = p.sigma[n1:, :n1]
    s22 = p.sigma[n1:, n1:]
    g1 = p.gamma[:, :n1]
    g2 = p.gamma[:, n1:]
    try:
        a = np.linalg.solve(s11, np.column_stack([y1 - p.mu[:n1], s12]))
    except np.linalg.LinAlgError as exc:
        raise SingularBlock(str(exc)) from exc
    if not np.all(np.isfinite(a)):
        raise SingularBlock("sigma11 block is singular")
    s11_inv_resid = a[:, 0]
    s11_inv_s12 = a[:, 1:]
    mu_c = p.mu[n1:] + s21 @ s11_inv_resid
    sigma_c = s22 - s21 @ s11_inv_s12
    # gamma* = gamma1 + gamma2 sigma21 sigma11^-1, and sigma21 sigma11^-1 = (sigma11^-1 sigma12)'
    gamma_star = g1 + g2 @ s11_inv_s12.T
    nu_c = p.nu - gamma_star @ (y1 - p.mu[:n1])
    return CsnParams(mu_c, sigma_c, g2, nu_c, p.delta)


def sample_truncated_normal(mu, var, lower, rng, size=None):
    """Exact draws from N(mu, var) restricted to [lower, inf).

    Broadcasts over array arguments. Central truncations use the
    complementary inverse CDF; standardized bounds above TAIL_SWITCH use an
    exponential-proposal rejection sampler that stays accurate arbitrarily
    far into the tail.
    """
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    lower = np.asarray(lower, dtype=float)
    if np.any(var <= 0):
        raise ValueError("var must be positive")
    size_shape = () if size is None else tuple(np.atleast_1d(size))
    shape = np.broadcast_shapes(mu.shape, var.shape, lower.shape, size_shape)
    mu_b = np.broadcast_to(mu, shape)
    sd_b = np.sqrt(np.broadcast_to(var, shape))
    a = (np.broadcast_to(lower, shape) - mu_b) / sd_b

    flat_a = a.reshape(-1)
    out = np.empty(flat_a.shape)
    central = flat_a <= TAIL_SWITCH
    if np.any(central):
        tail_prob = ndtr(-flat_a[central])
        u = 1.0 - rng.uniform(size=tail_prob.shape)  # in (0, 1], avoids P=0
        out[central] = -ndtri(u * tail_prob)
    if np.any(~central):
        out[~central] = _tail_rejection(flat_a[~central], rng)
    x = out.reshape(shape)
    result = mu_b + sd_b * x
    if size is None and result.shape == ():
        return float(result)
    return result


def _tail_rejection(a, rng):
    """Standard normal draws conditioned on exceeding a (a > 0, vectorized)."""
    alpha = 0.5 * (a + np.sqrt(a * a + 4.0))
    out = np.empty_like(a)
    pending = np.ones(a.shape, dtype=bool)
    for _ in range(1000):
        idx = np.nonzero(pending)[0]
        if idx.size == 0:
            return out
        z = a[idx] + rng.exponential(scale=1.0 / alpha[idx])
        accept = rng.uniform(size=idx.size) <= np.exp(-0.5 * np.square(z - alpha[idx]))
        hit = idx[accept]
        out[hit] = z[accept]
        pending[hit] = False
    raise RuntimeError("tail rejection sampler failed to terminate")


def sample_csn(p, rng, n_draws):
    """Draws from the CSN via its latent-variable representation.

    Y = mu + (Sigma^-1 + Gamma' Delta^-1 Gamma)^(-1/2) V
          + Sigma Gamma' (Delta + Gamma Sigma Gamma')^-1 U,
    with V standard normal and U truncated normal below 0 with the diagonal
    latent covariance; any matrix square root works because V is isotropic,
    so a triangular solve against the Cholesky factor is used.
    """
    d_lat = _require_diagonal(_latent_cov(p), "delta + gamma sigma gamma'")
    sigma_inv = np.linalg.inv(p.sigma)
    delta_inv = np.linalg.inv(p.delta)
    a = sigma_inv + p.gamma.T @ delta_inv @ p.gamma
    try:
        r = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma^-1 + gamma' delta^-1 gamma not SPD") from exc
    v = rng.standard_normal((p.n, n_draws))
    # M = r^-T satisfies M M' = a^-1
    mv = np.linalg.solve(r.T, v)
    u = np.abs(rng.standard_normal((p.m, n_draws))) * np.sqrt(d_lat)[:, np.newaxis]
    # truncated-below-at-zero normals with mean zero are half-normals
    bu = p.sigma @ p.gamma.T @ (u / d_lat[:, np.newaxis])
    return (p.mu[:, np.newaxis] + mv + bu).T
