"""Entropy-regularized LQR: Riccati recursion with q-Gaussian input noise.

The optimal policy is the usual linear feedback u = K_k x plus additive
noise w_k ~ N_q(0, Sigma_k).  The gain is identical to the unregularized
LQR gain; only the injected noise depends on lam and q.  Because the
q-Gaussian has bounded support, the reachable state set stays bounded and
can be enclosed stage by stage.
"""

from dataclasses import dataclass

import numpy as np

from .deformed import DeformationParameter, _as_q
from .entmax import deformation_eta
from .qgaussian import QGaussian, _deformation_scale

__all__ = [
    "QlqrInstance",
    "QlqrSolution",
    "solve_qlqr",
    "solve_qlqr_stationary",
    "simulate_closed_loop",
    "support_envelope",
    "policy_entropy",
    "policy_tsallis_entropy",
    "expected_quadratic_cost",
    "sweep_q",
]


def _mat(x):
    a = np.asarray(x, dtype=float)
    return a.reshape(1, 1) if a.ndim == 0 else np.atleast_2d(a)


@dataclass(frozen=True)
class QlqrInstance:
    """Linear dynamics x+ = A x + B u with quadratic stage cost.

    Stage cost x^T Q x + 2 x^T S u + u^T R u and terminal cost x^T Q_T x.
    """

    a: np.ndarray
    b: np.ndarray
    q_cost: np.ndarray
    s_cost: np.ndarray
    r_cost: np.ndarray
    terminal_cost: np.ndarray
    horizon: int
    lam: float
    q: DeformationParameter
    initial_state: np.ndarray = None

    def __post_init__(self):
        for name in ("a", "b", "q_cost", "s_cost", "r_cost", "terminal_cost"):
            object.__setattr__(self, name, _mat(getattr(self, name)))
        object.__setattr__(self, "q", _as_q(self.q))
        n, m = self.a.shape[0], self.b.shape[1]
        if self.a.shape != (n, n) or self.b.shape != (n, m):
            raise ValueError("inconsistent A/B shapes")
        if self.q_cost.shape != (n, n) or self.terminal_cost.shape != (n, n):
            raise ValueError("Q and Q_T must be n x n")
        if self.s_cost.shape != (n, m) or self.r_cost.shape != (m, m):
            raise ValueError("S must be n x m and R must be m x m")
        if np.any(np.linalg.eigvalsh(self.r_cost) <= 0):
            raise ValueError("R must be positive definite")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        x0 = self.initial_state
        x0 = np.zeros(n) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
        if x0.shape != (n,):
            raise ValueError("initial_state must have length n")
        object.__setattr__(self, "initial_state", x0)

    @property
    def state_dim(self):
        return self.a.shape[0]

    @property
    def input_dim(self):
        return self.b.shape[1]


@dataclass(frozen=True)
class QlqrSolution:
    pi_matrices: np.ndarray  # (T+1, n, n) value-function matrices
    gains: np.ndarray  # (T, m, n)
    noise_covariances: np.ndarray  # (T, m, m)
    etas: np.ndarray  # (T,)
    support_radii: np.ndarray  # (T, m) noise support bound per principal axis
    q: DeformationParameter

    @property
    def horizon(self):
        return self.gains.shape[0]

    def noise_distribution(self, k):
        m = self.noise_covariances.shape[1]
        return QGaussian(np.zeros(m), self.noise_covariances[k], self.q)


def _riccati_step(pi_next, a, b, q_cost, s_cost, r_cost):
    r_t = r_cost + b.T @ pi_next @ b
    s_t = s_cost + a.T @ pi_next @ b
    q_t = q_cost + a.T @ pi_next @ a
    if np.any(np.linalg.eigvalsh(0.5 * (r_t + r_t.T)) <= 0):
        raise ValueError("effective input cost lost positive definiteness")
    gain = -np.linalg.solve(r_t, s_t.T)
    pi = q_t - s_t @ np.linalg.solve(r_t, s_t.T)
    return 0.5 * (pi + pi.T), gain, 0.5 * (r_t + r_t.T)


def _noise_from_effective_cost(r_t, lam, q):
    m = r_t.shape[0]
    eta = deformation_eta(r_t, lam, q)
    sigma_inv = _deformation_scale(m, q) / lam * eta * r_t
    sigma = np.linalg.inv(sigma_inv)
    sigma = 0.5 * (sigma + sigma.T)
    thresh = _deformation_scale(m, q) / (1.0 - q)
    radii = np.sqrt(np.linalg.eigvalsh(sigma) * thresh)
    return sigma, eta, radii


def _package(instance, pis, gains, effective_costs):
    sigmas, etas, radii = [], [], []
    for r_t in effective_costs:
        sigma, eta, rad = _noise_from_effective_cost(r_t, instance.lam, instance.q)
        sigmas.append(sigma)
        etas.append(eta)
        radii.append(rad)
    return QlqrSolution(
        np.asarray(pis),
        np.asarray(gains),
        np.asarray(sigmas),
        np.asarray(etas),
        np.asarray(radii),
        instance.q,
    )


def solve_qlqr(instance):
    """Finite-horizon backward Riccati recursion."""
    T = instance.horizon
    pis = [None] * (T + 1)
    gains = [None] * T
    effective = [None] * T
    pis[T] = instance.terminal_cost
    for k in range(T - 1, -1, -1):
        pis[k], gains[k], effective[k] = _riccati_step(
            pis[k + 1],
            instance.a,
            instance.b,
            instance.q_cost,
            instance.s_cost,
            instance.r_cost,
        )
    return _package(instance, pis, gains, effective)


def solve_qlqr_stationary(instance, tol=1e-12, max_iter=100_000):
    """Iterate the Riccati recursion to its fixed point.

    Returns a single-stage solution whose matrices are the stationary
    limits; use it with any horizon by reusing stage 0.
    """
    pi = instance.terminal_cost
    for _ in range(max_iter):
        pi_new, gain, r_t = _riccati_step(
            pi, instance.a, instance.b, instance.q_cost, instance.s_cost, instance.r_cost
        )
        if np.max(np.abs(pi_new - pi)) < tol:
            return _package(instance, [pi_new, pi_new], [gain], [r_t])
        pi = pi_new
    raise RuntimeError("Riccati recursion did not reach a fixed point")


def _stage(arr, k):
    """Stage k of a per-stage array, clamping for stationary solutions."""
    return arr[min(k, arr.shape[0] - 1)]


def simulate_closed_loop(instance, solution, num_trajectories, steps, seed):
    """Sample closed-loop trajectories x+ = (A + B K) x + B w.

    Noise is drawn per stage with child seeds spawned from ``seed`` (one
    child sequence per stage), so results are reproducible and independent
    across stages.  Returns (states, inputs) with shapes
    (steps+1, num_trajectories, n) and (steps, num_trajectories, m).
    """
    n, m = instance.state_dim, instance.input_dim
    states = np.zeros((steps + 1, num_trajectories, n))
    inputs = np.zeros((steps, num_trajectories, m))
    states[0] = instance.initial_state
    children = np.random.SeedSequence(seed).spawn(steps)
    for k in range(steps):
        gain = _stage(solution.gains, k)
        sigma = _stage(solution.noise_covariances, k)
        noise = QGaussian(np.zeros(m), sigma, instance.q).sample(
            num_trajectories, children[k]
        )
        u = states[k] @ gain.T + noise
        inputs[k] = u
        states[k + 1] = states[k] @ instance.a.T + u @ instance.b.T
    return states, inputs


def support_envelope(instance, solution, steps, initial_set_radius=0.0):
    """Outer bounds on the reachable state set, stage by stage.

    Scalar systems use exact interval arithmetic.  For n >= 2 the set is
    tracked as an ellipsoid, combining the mapped set with the noise
    ellipsoid via the minimum-trace outer approximation of the Minkowski
    sum.  Returns (lower, upper) arrays of shape (steps+1, n).
    """
    n = instance.state_dim
    lower = np.zeros((steps + 1, n))
    upper = np.zeros((steps + 1, n))
    if n == 1:
        center = float(instance.initial_state[0])
        radius = float(initial_set_radius)
        lower[0], upper[0] = center - radius, center + radius
        for k in range(steps):
            f = float(instance.a[0, 0] + instance.b[0, 0] * _stage(solution.gains, k)[0, 0])
            beta = float(_stage(solution.support_radii, k)[0])
            center = f * center
            radius = abs(f) * radius + abs(instance.b[0, 0]) * beta
            lower[k + 1], upper[k + 1] = center - radius, center + radius
        return lower, upper
    center = instance.initial_state.copy()
    shape = np.eye(n) * initial_set_radius**2
    lower[0] = center - np.sqrt(np.diag(shape))
    upper[0] = center + np.sqrt(np.diag(shape))
    for k in range(steps):
        f = instance.a + instance.b @ _stage(solution.gains, k)
        center = f @ center
        mapped = f @ shape @ f.T
        thresh = _deformation_scale(instance.input_dim, instance.q) / (1.0 - instance.q)
        noise_shape = thresh * instance.b @ _stage(solution.noise_covariances, k) @ instance.b.T
        shape = _ellipsoid_sum(mapped, noise_shape)
        half = np.sqrt(np.maximum(np.diag(shape), 0.0))
        lower[k + 1] = center - half
        upper[k + 1] = center + half
    return lower, upper


def _ellipsoid_sum(m1, m2):
    """Minimum-trace outer ellipsoid of the Minkowski sum of two ellipsoids."""
    t1, t2 = np.trace(m1), np.trace(m2)
    if t1 <= 0:
        return m2
    if t2 <= 0:
        return m1
    # trace of (1 + 1/t) m1 + (1 + t) m2 is minimized at t = sqrt(tr m1 / tr m2)
    t = np.sqrt(t1 / t2)
    return (1.0 + 1.0 / t) * m1 + (1.0 + t) * m2


def policy_tsallis_entropy(sigma, q):
    """Tsallis entropy T_q of a q-Gaussian with covariance sigma (closed form).

    Uses int phi^q = Z^{-q} det(Sigma)^{1/2} (pi D/(1-q))^{n/2}
    Gamma(g+1)/Gamma(g+n/2+1) with g = q/(1-q) and D = (n+4)-(n+2)q.
    """
    from scipy.special import gammaln

    q = _as_q(q)
    if q == 0.0:
        raise ValueError("Tsallis entropy requires q > 0")
    sigma = _mat(sigma)
    n = sigma.shape[0]
    z = QGaussian(np.zeros(n), sigma, q).normalizer()
    d = _deformation_scale(n, q)
    g = q / (1.0 - q)
    log_int = (
        -q * np.log(z)
        + 0.5 * np.linalg.slogdet(sigma)[1]
        + (n / 2.0) * np.log(np.pi * d / (1.0 - q))
        + gammaln(g + 1.0)
        - gammaln(g + n / 2.0 + 1.0)
    )
    plogq = (1.0 - np.exp(log_int)) / (1.0 - q)
    return -(plogq - 1.0) / q


def policy_entropy(sigma, q):
    """Deformed q-entropy of a q-Gaussian with covariance sigma (closed form).

    Uses int phi^{2-q} = Z^{q-1} (1 - n(1-q)/((n+4)-(n+2)q)).
    """
    q = _as_q(q)
    sigma = _mat(sigma)
    n = sigma.shape[0]
    z = QGaussian(np.zeros(n), sigma, q).normalizer()
    d = _deformation_scale(n, q)
    integral_pow = z ** (q - 1.0) * (1.0 - n * (1.0 - q) / d)
    plogq = (integral_pow - 1.0) / (1.0 - q)
    return -(plogq - 1.0) / (2.0 - q)


def expected_quadratic_cost(instance, solution, steps):
    """Exact closed-loop expected quadratic cost by second-moment recursion.

    Accumulates E[x^T Q x + 2 x^T S u + u^T R u] over ``steps`` stages plus
    the terminal term, with u = K x + w and w ~ N_q(0, Sigma_k).
    """
    x0 = instance.initial_state
    second = np.outer(x0, x0)
    total = 0.0
    for k in range(steps):
        gain = _stage(solution.gains, k)
        sigma = _stage(solution.noise_covariances, k)
        uu = gain @ second @ gain.T + sigma
        xu = second @ gain.T
        total += (
            np.trace(instance.q_cost @ second)
            + 2.0 * np.trace(instance.s_cost.T @ xu)
            + np.trace(instance.r_cost @ uu)
        )
        f = instance.a + instance.b @ gain
        second = f @ second @ f.T + instance.b @ sigma @ instance.b.T
    total += np.trace(instance.terminal_cost @ second)
    return float(total)


def sweep_q(make_instance, q_grid, steps=50):
    """Solve the stationary problem for each q and tabulate metrics.

    ``make_instance`` maps q to a QlqrInstance.  Returns a list of dicts
    with keys q, cost, entropy, support_radius.
    """
    rows = []
    for q in q_grid:
        instance = make_instance(q)
        sol = solve_qlqr_stationary(instance)
        rows.append(
            {
                "q": float(q),
                "cost": expected_quadratic_cost(instance, sol, steps),
                "entropy": policy_entropy(sol.noise_covariances[0], q),
                "tsallis_entropy": policy_tsallis_entropy(sol.noise_covariances[0], q)
                if q > 0
                else float("nan"),
                "support_radius": float(np.max(sol.support_radii[0])),
            }
        )
    return rows
