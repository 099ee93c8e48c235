"""Multivariate q-Gaussian distribution with bounded elliptical support."""

import numpy as np
from scipy.special import gammaln

from .deformed import DeformationParameter, _as_q, exp_q

__all__ = ["QGaussian"]


def _deformation_scale(n, q):
    """Denominator (n+4) - (n+2) q appearing in the density exponent."""
    return (n + 4.0) - (n + 2.0) * q


class QGaussian:
    """q-Gaussian N_q(mu, sigma) for deformation parameter q in [0, 1).

    The density is proportional to exp_q of a negative quadratic form, so
    its support is the open ellipsoid

        (x - mu)^T sigma^{-1} (x - mu) < ((n+4) - (n+2) q) / (1 - q).

    The mean is mu and the covariance is sigma for every admissible q.
    """

    def __init__(self, mu, sigma, q):
        self.q = _as_q(q)
        self.mu = np.atleast_1d(np.asarray(mu, dtype=float))
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = sigma.reshape(1, 1)
        if sigma.shape != (self.mu.size, self.mu.size):
            raise ValueError("sigma shape does not match mu")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise ValueError("sigma must be symmetric")
        try:
            self._chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("sigma must be positive definite") from exc
        self.sigma = sigma
        self._sigma_inv = np.linalg.inv(sigma)

    @property
    def dim(self):
        return self.mu.size

    @property
    def support_threshold(self):
        """Right-hand side of the support inequality in Mahalanobis units."""
        n = self.dim
        return _deformation_scale(n, self.q) / (1.0 - self.q)

    def normalizer(self):
        """Normalization constant Z_q of the density."""
        n = self.dim
        q = self.q
        a = (2.0 - q) / (1.0 - q)
        det = float(np.linalg.det(self.sigma))
        return (
            np.sqrt(det)
            * (np.pi * _deformation_scale(n, q) / (1.0 - q)) ** (n / 2.0)
            * np.exp(gammaln(a) - gammaln(a + n / 2.0))
        )

    def mahalanobis_sq(self, x):
        """(x - mu)^T sigma^{-1} (x - mu), vectorized over rows of x."""
        d = np.atleast_2d(np.asarray(x, dtype=float)) - self.mu
        return np.einsum("ki,ij,kj->k", d, self._sigma_inv, d)

    def density(self, x):
        """Density at x; exactly zero outside the support ellipsoid."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim <= 1
        s = self.mahalanobis_sq(x)
        val = exp_q(-s / _deformation_scale(self.dim, self.q), self.q) / self.normalizer()
        val = np.atleast_1d(val)
        return float(val[0]) if scalar else val

    def support_radius(self, direction):
        """Distance from mu to the support boundary along a unit vector."""
        d = np.atleast_1d(np.asarray(direction, dtype=float))
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("direction must have unit norm")
        return float(np.sqrt(self.support_threshold / (d @ self._sigma_inv @ d)))

    def sample(self, count, seed):
        """Draw ``count`` samples, deterministically for a given seed.

        Rejection sampling with the uniform distribution on the support
        ellipsoid as proposal; the acceptance ratio is the density over its
        maximum at the center, so the draw is exact.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.default_rng(seed)
        n = self.dim
        scale = _deformation_scale(n, self.q)
        thresh = self.support_threshold
        out = np.empty((count, n))
        filled = 0
        while filled < count:
            batch = max(2 * (count - filled), 1024)
            z = rng.standard_normal((batch, n))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            r = rng.random(batch) ** (1.0 / n)
            y = z * (r * np.sqrt(thresh))[:, None]  # uniform in the unit-Mahalanobis ball
            s = np.sum(y * y, axis=1)
            accept = rng.random(batch) < exp_q(-s / scale, self.q)
            accept &= s < thresh
            y = y[accept]
            take = min(count - filled, y.shape[0])
            out[filled : filled + take] = y[:take]
            filled += take
        return self.mu + out @ self._chol.T
