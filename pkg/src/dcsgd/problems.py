"""Synthetic per-node objectives with exactly known smoothness and variance constants.

A :class:`Problem` bundles n per-node objectives f_i with stochastic
gradient oracles and reports the constants the step-size theory needs:

* ``L``        - Lipschitz constant of every gradient (upper bound),
* ``sigma2``   - per-node stochastic gradient variance bound,
* ``zeta2``    - across-node gradient variation bound
                 (1/n) sum_i ||grad f_i(x) - grad f(x)||^2.

The quadratic family has all three in closed form plus a closed-form
minimizer; the logistic family reports a hard L bound and Monte-Carlo
estimates for sigma2 / zeta2 (documented as estimates, probed at
standard-normal points).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergedError, InputError

# Monte-Carlo estimation knobs for the logistic constants.
_PROBE_POINTS = 64
_ESTIMATE_MARGIN = 1.2


@dataclass(frozen=True, eq=False)
class Problem:
    """n-node objective f(x) = (1/n) sum_i f_i(x) with stochastic oracles."""

    kind: str
    dim: int
    n: int
    L: float
    sigma2: float
    zeta2: float
    f_star: float | None
    # quadratic internals: shared design matrix and per-node targets
    A: np.ndarray | None = field(default=None, repr=False)
    B: np.ndarray | None = field(default=None, repr=False)  # (m, n), column i = b_i
    noise: float = 0.0
    # logistic internals: per-node sample matrices / labels, l2 penalty
    data: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    labels: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    reg: float = 0.0

    # ---- exact quantities -------------------------------------------------

    def loss(self, x: np.ndarray) -> float:
        """Global objective f(x)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            resid = self.A @ x[:, None] - self.B  # (m, n)
            m = self.A.shape[0]
            return float(0.5 * np.sum(resid * resid) / (m * self.n))
        total = 0.0
        for d, y in zip(self.data, self.labels):
            margins = y * (d @ x)
            total += float(np.mean(np.logaddexp(0.0, -margins)))
        return total / self.n + 0.5 * self.reg * float(x @ x)

    def loss_node(self, i: int, x: np.ndarray) -> float:
        """Per-node objective f_i(x)."""
        self._check_node(i)
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            resid = self.A @ x - self.B[:, i]
            return float(0.5 * (resid @ resid) / self.A.shape[0])
        d, y = self.data[i], self.labels[i]
        margins = y * (d @ x)
        return float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * self.reg * (x @ x))

    def gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        """Exact per-node gradient grad f_i(x)."""
        self._check_node(i)
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            m = self.A.shape[0]
            return self.A.T @ (self.A @ x - self.B[:, i]) / m
        d, y = self.data[i], self.labels[i]
        s = _sigmoid(-y * (d @ x))
        return -(d.T @ (y * s)) / len(y) + self.reg * x

    def gradients(self, X: np.ndarray) -> np.ndarray:
        """All exact per-node gradients at once; column i is grad f_i(X[:, i])."""
        X = np.asarray(X, dtype=float)
        if self.kind == "quadratic":
            m = self.A.shape[0]
            return self.A.T @ (self.A @ X - self.B) / m
        return np.column_stack([self.gradient(i, X[:, i]) for i in range(self.n)])

    def grad_mean(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the global objective at a single point x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            m = self.A.shape[0]
            return self.A.T @ (self.A @ x - self.B.mean(axis=1)) / m
        return sum(self.gradient(i, x) for i in range(self.n)) / self.n

    def minimizer(self) -> np.ndarray | None:
        """Closed-form global minimizer, when available."""
        if self.kind != "quadratic":
            return None
        b_bar = self.B.mean(axis=1)
        return np.linalg.solve(self.A.T @ self.A, self.A.T @ b_bar)

    # ---- stochastic oracles -----------------------------------------------

    def stochastic_gradient(self, i: int, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One unbiased sample of grad f_i(x)."""
        self._check_node(i)
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DivergedError(f"node {i} asked for a gradient at a non-finite point")
        if self.kind == "quadratic":
            g = self.gradient(i, x)
            if self.noise > 0.0:
                g = g + self.noise * rng.standard_normal(self.dim)
            return g
        d, y = self.data[i], self.labels[i]
        j = int(rng.integers(len(y)))
        s = _sigmoid(-y[j] * (d[j] @ x))
        return -y[j] * s * d[j] + self.reg * x

    def stochastic_gradients(self, X: np.ndarray, rngs) -> np.ndarray:
        """Stacked per-node samples; node i's draw comes from rngs[i]."""
        X = np.asarray(X, dtype=float)
        if not np.all(np.isfinite(X)):
            raise DivergedError("asked for gradients at a non-finite state")
        if self.kind == "quadratic":
            G = self.gradients(X)
            if self.noise > 0.0:
                for i in range(self.n):
                    G[:, i] += self.noise * rngs[i].standard_normal(self.dim)
            return G
        return np.column_stack(
            [self.stochastic_gradient(i, X[:, i], rngs[i]) for i in range(self.n)]
        )

    def _check_node(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise InputError(f"node index {i} out of range [0, {self.n})")


def _sigmoid(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u, dtype=float)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def make_quadratic(
    N: int,
    n: int,
    heterogeneity: float = 0.0,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Problem:
    """Least-squares problem f_i(x) = ||A x - b_i||^2 / (2m) with a shared A.

    The shared design matrix is built with singular values giving Hessian
    eigenvalues in [0.5, 2.0] (so L = 2, condition number 4, independent of
    N).  Per-node targets are b_i = b + heterogeneity * delta_i where the
    delta_i are unit vectors spread evenly on a circle in a random 2-D
    subspace: each has norm exactly 1 and they sum to zero, so zeta2 is
    exactly controlled by the knob and zero when it is.  The stochastic
    oracle adds isotropic Gaussian noise, giving sigma2 = noise^2 * N exactly.
    """
    if N < 1 or n < 2:
        raise InputError(f"need N >= 1 and n >= 2, got N={N}, n={n}")
    if heterogeneity < 0.0 or noise < 0.0:
        raise InputError("heterogeneity and noise must be >= 0")
    rng = np.random.default_rng() if rng is None else rng
    m = N
    hess_eigs = np.linspace(0.5, 2.0, N) if N > 1 else np.array([2.0])
    u_left = _random_orthogonal(m, rng)
    u_right = _random_orthogonal(N, rng)
    A = u_left @ (np.sqrt(m * hess_eigs)[:, None] * u_right.T)
    b = rng.standard_normal(m)
    deltas = _circle_patterns(m, n, rng)
    B = b[:, None] + heterogeneity * deltas

    H = A.T @ A / m
    L = float(np.linalg.eigvalsh(H)[-1])
    sigma2 = noise * noise * N
    grad_shifts = A.T @ (heterogeneity * deltas) / m  # grad f_i - grad f, constant in x
    zeta2 = float(np.mean(np.sum(grad_shifts * grad_shifts, axis=0)))

    problem = Problem(
        kind="quadratic", dim=N, n=n, L=L, sigma2=sigma2, zeta2=zeta2,
        f_star=None, A=A, B=B, noise=noise,
    )
    f_star = problem.loss(problem.minimizer())
    return Problem(
        kind="quadratic", dim=N, n=n, L=L, sigma2=sigma2, zeta2=zeta2,
        f_star=f_star, A=A, B=B, noise=noise,
    )


def _random_orthogonal(k: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def _circle_patterns(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n unit vectors summing to zero: points of a regular n-gon in a 2-D subspace.

    A one-dimensional target space has no such subspace; there the patterns
    are the centered cosine values rescaled to peak magnitude 1 (still mean
    zero, no longer all unit norm).
    """
    angles = 2.0 * np.pi * np.arange(n) / n
    if m == 1:
        vals = np.cos(angles)
        return vals[None, :] / np.max(np.abs(vals))
    basis, _ = np.linalg.qr(rng.standard_normal((m, 2)))
    return basis[:, :1] * np.cos(angles) + basis[:, 1:2] * np.sin(angles)


def make_logistic(
    N: int,
    n: int,
    samples_per_node: int,
    separation: float = 1.0,
    rng: np.random.Generator | None = None,
    reg: float = 0.1,
) -> Problem:
    """l2-regularized logistic regression on per-node Gaussian clusters.

    Node i draws balanced +-1 labels and features from N(label * c_i, I)
    where c_i = (separation/2) * w_i along a node-specific random unit
    direction, so separation > 0 makes the nodes genuinely disagree.
    The minibatch oracle samples one data point.
    """
    if samples_per_node < 1 or N < 1 or n < 2:
        raise InputError("need samples_per_node >= 1, N >= 1, n >= 2")
    rng = np.random.default_rng() if rng is None else rng
    data, labels = [], []
    for _ in range(n):
        w = rng.standard_normal(N)
        w /= np.linalg.norm(w)
        y = rng.choice([-1.0, 1.0], size=samples_per_node)
        d = rng.standard_normal((samples_per_node, N)) + np.outer(y, 0.5 * separation * w)
        data.append(d)
        labels.append(y)
    return logistic_from_data(data, labels, reg=reg, rng=rng)


def logistic_from_data(data, labels, reg: float, rng: np.random.Generator) -> Problem:
    """Build the logistic Problem from explicit per-node datasets.

    L is the hard bound 0.25 * max ||sample||^2 + reg.  sigma2 and zeta2 are
    Monte-Carlo estimates: the empirical maxima over standard-normal probe
    points, inflated by a safety margin.
    """
    data = tuple(np.asarray(d, dtype=float) for d in data)
    labels = tuple(np.asarray(y, dtype=float) for y in labels)
    n = len(data)
    N = data[0].shape[1]
    max_row2 = max(float(np.max(np.sum(d * d, axis=1))) for d in data)
    L = 0.25 * max_row2 + reg

    problem = Problem(
        kind="logistic", dim=N, n=n, L=L, sigma2=0.0, zeta2=0.0,
        f_star=None, data=data, labels=labels, reg=reg,
    )
    sigma2_hat, zeta2_hat = 0.0, 0.0
    for _ in range(_PROBE_POINTS):
        x = rng.standard_normal(N)
        grads = np.column_stack([problem.gradient(i, x) for i in range(n)])
        g_mean = grads.mean(axis=1, keepdims=True)
        zeta2_hat = max(zeta2_hat, float(np.mean(np.sum((grads - g_mean) ** 2, axis=0))))
        for i in range(n):
            d, y = data[i], labels[i]
            s = _sigmoid(-y * (d @ x))
            per_sample = -(y * s)[:, None] * d + reg * x  # (samples, N)
            dev = per_sample - problem.gradient(i, x)
            sigma2_hat = max(sigma2_hat, float(np.mean(np.sum(dev * dev, axis=1))))
    return Problem(
        kind="logistic", dim=N, n=n, L=L,
        sigma2=_ESTIMATE_MARGIN * sigma2_hat, zeta2=_ESTIMATE_MARGIN * zeta2_hat,
        f_star=None, data=data, labels=labels, reg=reg,
    )
