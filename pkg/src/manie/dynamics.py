"""Ground-truth simulators: Kuramoto oscillators, evolutionary games, SIS and contact process."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graphgen import Network, ParameterError

K2_PHASE_LAG = 1.05
K2_SECOND_HARMONIC = 0.33


@dataclass
class TimeSeries:
    """Real-valued node states, one row per node and one column per sample.

    ``segments`` labels each sample with the id of the trajectory it belongs
    to, so finite differences never straddle two initial conditions.
    """

    values: np.ndarray
    dt: float
    deriv: np.ndarray | None = None
    segments: np.ndarray | None = None
    variant: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("time series has non-finite values")
        if self.deriv is not None:
            self.deriv = np.asarray(self.deriv, dtype=float)
            if self.deriv.shape != self.values.shape:
                raise ParameterError("deriv shape must match values")
        if self.segments is None:
            self.segments = np.zeros(self.values.shape[1], dtype=int)
        self.segments = np.asarray(self.segments, dtype=int)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def select(self, cols) -> "TimeSeries":
        cols = np.asarray(cols)
        return TimeSeries(
            self.values[:, cols].copy(),
            self.dt,
            None if self.deriv is None else self.deriv[:, cols].copy(),
            self.segments[cols].copy(),
            self.variant,
        )


@dataclass
class BinaryTimeSeries:
    states: np.ndarray
    missing: np.ndarray | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int8)
        if not np.isin(self.states, (0, 1)).all():
            raise ParameterError("binary states must be 0 or 1")
        if self.missing is None:
            self.missing = np.zeros(self.states.shape[0], dtype=bool)
        self.missing = np.asarray(self.missing, dtype=bool)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def m(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class Game:
    """Two-strategy game. ``matrix[a][b]`` is the payoff of strategy ``a`` against ``b``
    with row/column 0 = cooperate and 1 = defect."""

    name: str
    param: float
    matrix: tuple = field(repr=False)

    def payoff(self, s_self, s_other):
        """Vectorised payoff for strategy codes C=1, D=0."""
        p = np.asarray(self.matrix, dtype=float)
        return p[1 - np.asarray(s_self, dtype=int), 1 - np.asarray(s_other, dtype=int)]


def pdg(b: float = 1.2) -> Game:
    if b <= 1:
        raise ParameterError(f"prisoner's dilemma needs b > 1, got {b}")
    return Game("PDG", b, ((1.0, 0.0), (b, 0.0)))


def snowdrift(r: float = 0.3) -> Game:
    if not 0 < r < 1:
        raise ParameterError(f"snowdrift needs 0 < r < 1, got {r}")
    return Game("SG", r, ((1.0, 1.0 - r), (1.0 + r, 0.0)))


def make_game(name: str, param: float | None = None) -> Game:
    name = name.upper()
    if name == "PDG":
        return pdg(1.2 if param is None else param)
    if name == "SG":
        return snowdrift(0.3 if param is None else param)
    raise ParameterError(f"unknown game {name!r}")


@dataclass
class EgRecord:
    strategies: np.ndarray
    payoffs: np.ndarray
    game: Game

    def __post_init__(self):
        self.strategies = np.asarray(self.strategies, dtype=np.int8)
        self.payoffs = np.asarray(self.payoffs, dtype=float)
        if self.strategies.shape != self.payoffs.shape:
            raise ParameterError("strategies and payoffs must share a shape")

    @property
    def n(self) -> int:
        return self.strategies.shape[0]

    @property
    def m(self) -> int:
        return self.strategies.shape[1]


# --- Kuramoto -------------------------------------------------------------


def kuramoto_rhs(adj: np.ndarray, omega: np.ndarray, x: np.ndarray, variant: str = "K1") -> np.ndarray:
    """Right-hand side for a state vector ``x`` (N,) or a batch of states (N, M)."""
    if x.ndim == 1:
        diff = x[None, :] - x[:, None]
        return omega + (adj * _coupling(diff, variant)).sum(axis=1)
    diff = x[None, :, :] - x[:, None, :]  # diff[i, j, t] = x_j(t) - x_i(t)
    return omega[:, None] + np.einsum("ij,ijt->it", adj, _coupling(diff, variant))


def _coupling(diff, variant):
    if variant == "K1":
        return np.sin(diff)
    if variant == "K2":
        return np.sin(diff - K2_PHASE_LAG) + K2_SECOND_HARMONIC * np.sin(2.0 * diff)
    raise ParameterError(f"unknown Kuramoto variant {variant!r}")


def simulate_kuramoto(
    net: Network,
    variant: str,
    x0,
    omega,
    dt: float,
    steps: int,
    xi_std: float = 0.0,
    seed: int | None = None,
) -> TimeSeries:
    """Fixed-step RK4 trajectory of ``steps`` samples starting at ``x0``.

    ``deriv`` holds the exact right-hand side evaluated at each recorded state.
    """
    if dt <= 0 or steps < 2:
        raise ParameterError("need dt > 0 and steps >= 2")
    x = np.array(x0, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if x.shape != (net.n,) or omega.shape != (net.n,):
        raise ParameterError("x0 and omega must have one entry per node")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(omega))):
        raise ParameterError("x0 and omega must be finite")
    _coupling(np.zeros(1), variant)
    rng = np.random.default_rng(seed) if xi_std > 0 else None
    adj = net.adj
    out = np.empty((net.n, steps))
    out[:, 0] = x
    for t in range(1, steps):
        k1 = kuramoto_rhs(adj, omega, x, variant)
        k2 = kuramoto_rhs(adj, omega, x + 0.5 * dt * k1, variant)
        k3 = kuramoto_rhs(adj, omega, x + 0.5 * dt * k2, variant)
        k4 = kuramoto_rhs(adj, omega, x + dt * k3, variant)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if rng is not None:
            x = x + rng.normal(0.0, xi_std, size=x.shape)
        out[:, t] = x
    deriv = kuramoto_rhs(adj, omega, out, variant)
    return TimeSeries(out, dt, deriv, variant=variant)


def simulate_kuramoto_segments(
    net: Network,
    variant: str,
    n_segments: int,
    seg_len: int,
    dt: float,
    seed: int,
    omega=None,
    omega_range: float = 1.0,
) -> TimeSeries:
    """Short transients from many random initial phases, concatenated.

    Natural frequencies are drawn once (uniform on ``[-omega_range, omega_range]``)
    unless given; each segment starts from phases uniform on ``[-pi, pi)``.
    """
    rng = np.random.default_rng(seed)
    if omega is None:
        omega = rng.uniform(-omega_range, omega_range, size=net.n)
    parts, derivs = [], []
    for _ in range(n_segments):
        x0 = rng.uniform(-np.pi, np.pi, size=net.n)
        ts = simulate_kuramoto(net, variant, x0, omega, dt, seg_len)
        parts.append(ts.values)
        derivs.append(ts.deriv)
    segments = np.repeat(np.arange(n_segments), seg_len)
    return TimeSeries(np.hstack(parts), dt, np.hstack(derivs), segments, variant)


# --- evolutionary games ---------------------------------------------------


def eg_payoffs(adj: np.ndarray, strategies: np.ndarray, game: Game) -> np.ndarray:
    """Payoff of every node against its neighbours for one strategy profile (N,)."""
    s = np.asarray(strategies)
    table = game.payoff(s[:, None], s[None, :])
    return (adj * table).sum(axis=1)


def simulate_eg(
    net: Network,
    game: Game,
    rounds: int,
    reps: int,
    kappa: float = 0.1,
    seed: int = 0,
) -> EgRecord:
    """Repeated games with synchronous Fermi imitation of one random neighbour.

    Each repetition starts from fresh random strategies; the record holds
    ``reps * rounds`` samples.
    """
    if rounds < 1 or reps < 1:
        raise ParameterError("rounds and reps must be >= 1")
    if kappa <= 0:
        raise ParameterError("kappa must be positive")
    rng = np.random.default_rng(seed)
    n = net.n
    nbrs = [net.neighbors(i) for i in range(n)]
    strat = np.empty((n, reps * rounds), dtype=np.int8)
    pay = np.empty((n, reps * rounds))
    col = 0
    for _ in range(reps):
        s = (rng.random(n) < 0.5).astype(np.int8)
        for _ in range(rounds):
            g = eg_payoffs(net.adj, s, game)
            strat[:, col] = s
            pay[:, col] = g
            col += 1
            new = s.copy()
            for i in range(n):
                if nbrs[i].size == 0:
                    continue
                j = nbrs[i][rng.integers(nbrs[i].size)]
                if rng.random() < expit((g[j] - g[i]) / kappa):
                    new[i] = s[j]
            s = new
    return EgRecord(strat, pay, game)


# --- epidemics ------------------------------------------------------------


def _initial_states(n, x0):
    s = np.zeros(n, dtype=np.int8)
    s[np.asarray(list(x0), dtype=int)] = 1
    return s


def _check_probs(**probs):
    for k, v in probs.items():
        if not 0.0 <= v <= 1.0:
            raise ParameterError(f"{k} must lie in [0, 1], got {v}")


def simulate_sis(net: Network, beta: float, delta: float, x0, steps: int, seed: int = 0) -> BinaryTimeSeries:
    """Discrete-time SIS; column 0 is the initial state."""
    _check_probs(beta=beta, delta=delta)
    x0 = list(x0)
    if not x0 and beta > 0:
        warnings.warn("no initially infected nodes: SIS run is trivially absorbing", stacklevel=2)
    rng = np.random.default_rng(seed)
    links = net.adj > 0
    s = _initial_states(net.n, x0)
    out = np.empty((net.n, steps), dtype=np.int8)
    out[:, 0] = s
    for t in range(1, steps):
        k_inf = links @ s
        p_inf = 1.0 - (1.0 - beta) ** k_inf
        u = rng.random(net.n)
        s = np.where(s == 1, (u >= delta), (u < p_inf)).astype(np.int8)
        out[:, t] = s
    return BinaryTimeSeries(out)


def simulate_cp(
    net: Network, beta: float, x0, steps: int, seed: int = 0, delta: float = 0.2
) -> BinaryTimeSeries:
    """Contact process: each susceptible node polls one uniformly chosen neighbour."""
    _check_probs(beta=beta, delta=delta)
    rng = np.random.default_rng(seed)
    nbrs = [net.neighbors(i) for i in range(net.n)]
    deg = np.array([len(a) for a in nbrs])
    s = _initial_states(net.n, x0)
    out = np.empty((net.n, steps), dtype=np.int8)
    out[:, 0] = s
    for t in range(1, steps):
        pick = rng.random(net.n)
        u = rng.random(net.n)
        new = s.copy()
        for i in range(net.n):
            if s[i] == 1:
                new[i] = 0 if u[i] < delta else 1
            elif deg[i] > 0:
                j = nbrs[i][int(pick[i] * deg[i])]
                new[i] = 1 if (s[j] == 1 and u[i] < beta) else 0
        s = new
        out[:, t] = s
    return BinaryTimeSeries(out)
