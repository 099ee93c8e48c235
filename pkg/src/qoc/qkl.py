"""Deformed-divergence control of Markov chains on networks.

The control input is the transition matrix itself; deviating from the
passive matrix P0 is penalized by the q-deformed relative entropy.  The
optimal controlled matrix has columns

    (P*_k)_{:j} = P0_{:j} * exp_q(-V(k+1)/lam + C_k(j)),

so the support of each column is contained in the passive support and can
be strictly sparser.
"""

from dataclasses import dataclass

import numpy as np

from .deformed import DeformationParameter, DiscreteDistribution, _as_q, qkl_divergence
from .entmax import entmax_weighted

__all__ = [
    "QklInstance",
    "QklSolution",
    "solve_qkl",
    "solve_qkl_stationary",
    "relative_values",
    "evaluate_cost",
    "rollout",
]


@dataclass(frozen=True)
class QklInstance:
    """Network control problem: passive chain, state costs, horizon, weights.

    ``passive_matrix`` is column-stochastic: column j is the distribution of
    the next state given current state j.
    """

    passive_matrix: np.ndarray
    state_cost: np.ndarray
    horizon: int
    lam: float
    q: DeformationParameter
    initial: np.ndarray = None

    def __post_init__(self):
        p0 = np.asarray(self.passive_matrix, dtype=float)
        l = np.asarray(self.state_cost, dtype=float)
        object.__setattr__(self, "passive_matrix", p0)
        object.__setattr__(self, "state_cost", l)
        object.__setattr__(self, "q", _as_q(self.q))
        n = p0.shape[0]
        if p0.shape != (n, n):
            raise ValueError("passive_matrix must be square")
        if np.any(p0 < 0):
            raise ValueError("passive_matrix entries must be non-negative")
        if np.any(np.abs(p0.sum(axis=0) - 1.0) > 1e-9):
            raise ValueError("every column of passive_matrix must sum to 1")
        if l.shape != (n,):
            raise ValueError("state_cost must have length n")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        init = self.initial
        if init is None:
            init = np.full(n, 1.0 / n)
        init = np.asarray(init, dtype=float)
        if init.shape != (n,):
            raise ValueError("initial must have length n")
        object.__setattr__(self, "initial", init)

    @property
    def num_states(self):
        return self.passive_matrix.shape[0]


@dataclass(frozen=True)
class QklSolution:
    values: np.ndarray  # (T+1, n)
    controlled_matrices: np.ndarray  # (T, n, n), column-stochastic
    normalizers: np.ndarray  # (T, n), C_k(j) per column


def _backward_step(p0, value_next, l, lam, q):
    n = p0.shape[0]
    p_star = np.zeros_like(p0)
    normalizers = np.zeros(n)
    value = np.zeros(n)
    for j in range(n):
        res = entmax_weighted(value_next, p0[:, j], lam, q)
        p_star[:, j] = res.distribution.weights
        normalizers[j] = res.normalizer_c
        value[j] = l[j] + lam * qkl_divergence(p_star[:, j], p0[:, j], q) + float(
            value_next @ p_star[:, j]
        )
    return p_star, normalizers, value


def solve_qkl(instance):
    """Backward recursion over the full horizon of the instance."""
    n, T = instance.num_states, instance.horizon
    p0, l = instance.passive_matrix, instance.state_cost
    values = np.zeros((T + 1, n))
    matrices = np.zeros((T, n, n))
    normalizers = np.zeros((T, n))
    values[T] = l
    for k in range(T - 1, -1, -1):
        matrices[k], normalizers[k], values[k] = _backward_step(
            p0, values[k + 1], l, instance.lam, instance.q
        )
    return QklSolution(values, matrices, normalizers)


def solve_qkl_stationary(instance, tol=1e-10, max_iter=10_000):
    """Iterate the backward recursion until relative values stop changing.

    Absolute values grow linearly with the horizon, so convergence is
    measured on the value vector minus its first entry.  Returns the
    stationary controlled matrix, normalizers and the last value vector.
    """
    p0, l = instance.passive_matrix, instance.state_cost
    value = l.copy()
    for _ in range(max_iter):
        p_star, normalizers, new_value = _backward_step(
            p0, value, l, instance.lam, instance.q
        )
        drift = (new_value - new_value[0]) - (value - value[0])
        if np.max(np.abs(drift)) < tol:
            # normalizers were computed from `value`, so return that vector:
            # z = C(j0) - value/lam is then the exact exp_q argument
            return p_star, normalizers, value
        value = new_value
    raise RuntimeError("stationary backward recursion did not converge")


def relative_values(value, normalizers, reference_state=0, lam=1.0):
    """Argument of exp_q for the given reference column: z = C(j0) - V/lam.

    These differences are horizon-independent in the stationary regime and
    determine the sparsity pattern of the controlled column: an entry is
    exactly zero iff 1 + (1-q) z_i <= 0.
    """
    value = np.asarray(value, dtype=float)
    return normalizers[reference_state] - value / lam


def solution_relative_values(solution, instance, stage, reference_state=0):
    """Relative values for one stage of a full-horizon solution."""
    return relative_values(
        solution.values[stage + 1],
        solution.normalizers[stage],
        reference_state,
        instance.lam,
    )


def evaluate_cost(instance, matrices):
    """Forward evaluation of the control objective for given transition matrices.

    Accumulates state cost plus the columnwise divergence from the passive
    matrix weighted by the current state marginal; matrices may be a single
    stationary matrix or one per stage.
    """
    matrices = np.asarray(matrices, dtype=float)
    if matrices.ndim == 2:
        matrices = np.broadcast_to(matrices, (instance.horizon,) + matrices.shape)
    p0 = instance.passive_matrix
    l = instance.state_cost
    phi = instance.initial.copy()
    total = 0.0
    for k in range(instance.horizon):
        pk = matrices[k]
        div = sum(
            phi[j] * qkl_divergence(pk[:, j], p0[:, j], instance.q)
            for j in range(instance.num_states)
            if phi[j] > 0
        )
        total += float(l @ phi) + instance.lam * div
        phi = pk @ phi
    return total + float(l @ phi)


def rollout(instance, matrices, steps, seed, initial_state=None):
    """Sample a trajectory of the controlled chain; deterministic per seed."""
    matrices = np.asarray(matrices, dtype=float)
    if matrices.ndim == 2:
        matrices = np.broadcast_to(matrices, (steps,) + matrices.shape)
    if matrices.shape[0] < steps:
        raise ValueError("not enough controlled matrices for the requested steps")
    rng = np.random.default_rng(seed)
    n = instance.num_states
    if initial_state is None:
        state = int(rng.choice(n, p=instance.initial))
    else:
        state = int(initial_state)
    path = [state]
    for k in range(steps):
        col = matrices[k][:, state]
        state = int(rng.choice(n, p=col / col.sum()))
        path.append(state)
    return np.asarray(path, dtype=int)
