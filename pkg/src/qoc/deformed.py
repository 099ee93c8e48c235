"""q-deformed exponential/logarithm, Tsallis-type entropies and divergences.

All functions take the deformation parameter q in [0, 1).  In the limit
q -> 1 they reduce to the usual exp/log, Shannon entropy and KL divergence.
"""

import numpy as np

__all__ = [
    "DeformationParameter",
    "DiscreteDistribution",
    "exp_q",
    "log_q",
    "deformed_entropy",
    "tsallis_entropy",
    "qkl_divergence",
]

PROB_SUM_TOL = 1e-9


class DeformationParameter(float):
    """Deformation parameter q, restricted to the half-open interval [0, 1)."""

    def __new__(cls, q):
        q = float(q)
        if not (0.0 <= q < 1.0):
            raise ValueError(f"deformation parameter must satisfy 0 <= q < 1, got {q}")
        return super().__new__(cls, q)


def _as_q(q):
    return q if isinstance(q, DeformationParameter) else DeformationParameter(q)


class DiscreteDistribution:
    """Probability vector on a finite set.

    Entries must be non-negative and sum to one within ``PROB_SUM_TOL``.
    """

    __slots__ = ("weights",)

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d vector")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()}, not 1")
        self.weights = w
        self.weights.flags.writeable = False

    @property
    def support(self):
        """Indices with strictly positive probability."""
        return np.flatnonzero(self.weights > 0)

    def __len__(self):
        return self.weights.size

    def __getitem__(self, i):
        return self.weights[i]

    def __repr__(self):
        return f"DiscreteDistribution({self.weights.tolist()})"


def exp_q(x, q):
    """Deformed exponential [1 + (1-q) x]_+^(1/(1-q)).

    Total function: returns exactly 0 wherever 1 + (1-q) x <= 0.
    Accepts scalars or arrays.
    """
    q = _as_q(q)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    arg = (1.0 - q) * x
    out = np.zeros_like(x)
    pos = arg > -1.0
    # log1p keeps the q -> 1 limit accurate (exponent 1/(1-q) blows up)
    out[pos] = np.exp(np.log1p(arg[pos]) / (1.0 - q))
    return float(out[0]) if scalar else out


def log_q(x, q):
    """Deformed logarithm (x^(1-q) - 1)/(1-q), defined for x > 0."""
    q = _as_q(q)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("log_q requires strictly positive arguments")
    out = np.expm1((1.0 - q) * np.log(x)) / (1.0 - q)
    return out if out.ndim else float(out)


def _plogq(w, q):
    """Sum of w_i * log_q(w_i) with the 0 * log_q(0) = 0 convention."""
    w = np.asarray(w, dtype=float)
    pos = w > 0
    wp = w[pos]
    return float(np.sum(wp * np.expm1((1.0 - q) * np.log(wp)) / (1.0 - q)))


def deformed_entropy(phi, q):
    """Deformed q-entropy H_q(phi) = -(1/(2-q)) (sum_i phi_i log_q(phi_i) - 1).

    Satisfies the additive duality H_q(phi) = T_{2-q}(phi) with the Tsallis
    entropy, and tends to the Shannon entropy plus a constant as q -> 1.
    """
    q = _as_q(q)
    w = phi.weights if isinstance(phi, DiscreteDistribution) else np.asarray(phi, float)
    return -(_plogq(w, q) - 1.0) / (2.0 - q)


def tsallis_entropy(phi, q):
    """Tsallis entropy T_q(phi) = -(1/q) (sum_i phi_i^q log_q(phi_i) - 1).

    Requires q > 0 (the leading 1/q factor).  Related to the deformed
    entropy by T_{2-q}(phi) = H_q(phi).
    """
    q = float(q)
    if q <= 0:
        raise ValueError("tsallis_entropy requires q > 0")
    if q >= 2:
        raise ValueError("tsallis_entropy requires q < 2")
    w = phi.weights if isinstance(phi, DiscreteDistribution) else np.asarray(phi, float)
    pos = w > 0
    wp = w[pos]
    if abs(q - 1.0) < 1e-12:
        s = float(np.sum(wp * np.log(wp)))
    else:
        s = float(np.sum(wp ** q * np.expm1((1.0 - q) * np.log(wp)) / (1.0 - q)))
    return -(s - 1.0) / q


def qkl_divergence(phi, psi, q):
    """q-deformed relative entropy between discrete distributions.

    Normalized so that the divergence vanishes at phi == psi:

        D_q(phi || psi) = (1/(2-q)) sum_i phi_i log_q(phi_i / psi_i)

    Returns +inf when the support of phi is not contained in the support
    of psi.  Always non-negative.
    """
    q = _as_q(q)
    p = phi.weights if isinstance(phi, DiscreteDistribution) else np.asarray(phi, float)
    s = psi.weights if isinstance(psi, DiscreteDistribution) else np.asarray(psi, float)
    if p.shape != s.shape:
        raise ValueError("distributions must have the same length")
    pos = p > 0
    if np.any(s[pos] <= 0):
        return float("inf")
    ratio = p[pos] / s[pos]
    total = float(np.sum(p[pos] * np.expm1((1.0 - q) * np.log(ratio)) / (1.0 - q)))
    return total / (2.0 - q)
