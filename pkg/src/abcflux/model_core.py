"""Three-species exchange dynamics on the discrete ring.

Sites hold exactly one of A, B, C (stored as int8 codes 0, 1, 2).  The
ordered pair (left, right) on bond (x, x+1) is transposed at rate
1 + (E_left - E_right) / (2 N**gamma), and the whole generator is sped up by
N**a.  Times are macroscopic throughout.
"""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _engine

A, B, C = 0, 1, 2
SPECIES = "ABC"


def species_code(s) -> int:
    """Map 'A'/'B'/'C' or 0/1/2 to the integer code."""
    if isinstance(s, str):
        try:
            return SPECIES.index(s.upper())
        except ValueError:
            raise ValueError(f"unknown species {s!r}") from None
    s = int(s)
    if s not in (0, 1, 2):
        raise ValueError(f"unknown species code {s}")
    return s


@dataclass(frozen=True)
class ModelParams:
    N: int
    gamma: float
    E_A: float = 0.0
    E_B: float = 0.0
    E_C: float = 0.0
    a: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError("N must be an integer >= 3")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        scale = 2.0 * self.N ** self.gamma
        e = self.strengths
        for i in range(3):
            for j in range(3):
                if abs(e[i] - e[j]) >= scale:
                    raise ValueError(
                        f"negative or zero rate: |E_{SPECIES[i]} - E_{SPECIES[j]}| = "
                        f"{abs(e[i] - e[j]):g} >= 2 N^gamma = {scale:g}")

    @property
    def strengths(self) -> np.ndarray:
        return np.array([self.E_A, self.E_B, self.E_C], dtype=float)

    @property
    def asymmetry(self) -> float:
        """The factor 1 / N**gamma multiplying every field difference."""
        return self.N ** (-self.gamma)

    @property
    def speed(self) -> float:
        """Clock speed-up N**a between microscopic and macroscopic time."""
        return float(self.N) ** self.a

    def rate_matrix(self) -> np.ndarray:
        """3x3 table c[left, right]; the diagonal is zero."""
        e = self.strengths
        r = 1.0 + (e[:, None] - e[None, :]) / (2.0 * self.N ** self.gamma)
        np.fill_diagonal(r, 0.0)
        return r

    def reversed(self) -> "ModelParams":
        """Parameters of the adjoint dynamics (c^{ab} and c^{ba} exchanged)."""
        return replace(self, E_A=-self.E_A, E_B=-self.E_B, E_C=-self.E_C)

    def with_seed(self, seed: int) -> "ModelParams":
        return replace(self, seed=int(seed))


def swap_rate(params: ModelParams, left, right) -> float:
    """Rate of transposing (left, right) -> (right, left) on one bond."""
    lc, rc = species_code(left), species_code(right)
    if lc == rc:
        return 0.0
    e = params.strengths
    return 1.0 + (e[lc] - e[rc]) / (2.0 * params.N ** params.gamma)


class Configuration:
    """Species assignment on the ring with cached counts (N_A, N_B, N_C)."""

    __slots__ = ("_species", "_counts")

    def __init__(self, species):
        if isinstance(species, str):
            arr = np.array([species_code(ch) for ch in species], dtype=np.int8)
        else:
            arr = np.array(species, dtype=np.int8, copy=True).ravel()
        if arr.size < 3:
            raise ValueError("configuration needs at least 3 sites")
        if arr.min() < 0 or arr.max() > 2:
            raise ValueError("species codes must be 0, 1 or 2")
        arr.flags.writeable = False
        self._species = arr
        self._counts = tuple(int(c) for c in np.bincount(arr, minlength=3))

    @classmethod
    def _trusted(cls, arr: np.ndarray, counts: tuple) -> "Configuration":
        obj = cls.__new__(cls)
        arr = np.array(arr, dtype=np.int8, copy=True)
        arr.flags.writeable = False
        obj._species = arr
        obj._counts = counts
        return obj

    @property
    def species(self) -> np.ndarray:
        return self._species

    @property
    def counts(self) -> tuple:
        return self._counts

    @property
    def N(self) -> int:
        return self._species.size

    def occupation(self, s) -> np.ndarray:
        """xi^s_x as a float array."""
        return (self._species == species_code(s)).astype(float)

    def swapped(self, x: int) -> "Configuration":
        arr = self._species.copy()
        y = (x + 1) % arr.size
        arr[x], arr[y] = arr[y], arr[x]
        return Configuration._trusted(arr, self._counts)

    def __str__(self):
        return "".join(SPECIES[s] for s in self._species)

    def __repr__(self):
        s = str(self)
        if len(s) > 40:
            s = s[:37] + "..."
        return f"Configuration({s!r}, counts={self._counts})"

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self._species, other._species)

    def __hash__(self):
        return hash(self._species.tobytes())

    def __len__(self):
        return self.N


# ------------------------------------------------------------------ RNG ----

def make_rng(master_seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for trajectory ``stream`` of ``master_seed``.

    The stream is a pure function of (master_seed, stream) via SeedSequence
    spawn keys, so trajectories are independent and individually
    reproducible regardless of how they are scheduled.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


# ------------------------------------------------------------- engine glue --

class EngineState:
    """Mutable simulation state handed to the compiled kernels."""

    def __init__(self, params: ModelParams, config: Configuration, rng: np.random.Generator,
                 t0: float = 0.0):
        if config.N != params.N:
            raise ValueError(f"configuration has {config.N} sites, params say N={params.N}")
        self.params = params
        self.species = np.array(config.species, dtype=np.int8, copy=True)
        self.cnt9 = _engine.bond_counts(self.species)
        self.clock = np.array([t0, -1.0])
        self.rng = rng
        rm = params.rate_matrix()
        self.rate9 = rm.ravel().copy()
        cmax = self.rate9.max()
        self.acc9 = self.rate9 / cmax if cmax > 0 else self.rate9.copy()
        self.counts = config.counts

    @property
    def time(self) -> float:
        return float(self.clock[0])

    def config(self) -> Configuration:
        return Configuration._trusted(self.species, self.counts)

    def advance(self, t_stop: float) -> int:
        """Run to ``t_stop`` without logging; returns the number of swaps."""
        empty_f = np.empty(0)
        empty_i = np.empty(0, np.int64)
        empty_b = np.empty(0, np.int8)
        n, *_ = _engine.run_plain(self.species, self.cnt9, self.clock, self.rate9, self.acc9,
                                  self.params.speed, float(t_stop), np.iinfo(np.int64).max,
                                  self.rng, False, empty_f, empty_i, empty_b, empty_b, 0)
        return int(n)

    def total_rate(self) -> float:
        """Lambda = N^a * sum_x c_x(eta)."""
        return float(self.params.speed * np.dot(self.cnt9, self.rate9))


@dataclass
class EventLog:
    """Swaps in time order: bond x exchanged (left, right) -> (right, left)."""
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    bonds: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    left: np.ndarray = field(default_factory=lambda: np.empty(0, np.int8))
    right: np.ndarray = field(default_factory=lambda: np.empty(0, np.int8))
    elapsed: float = 0.0

    def __len__(self):
        return int(self.times.size)

    def replay(self, init: Configuration) -> Configuration:
        arr = np.array(init.species, dtype=np.int8, copy=True)
        n = arr.size
        for x, l, r in zip(self.bonds, self.left, self.right):
            y = (x + 1) % n
            if arr[x] != l or arr[y] != r:
                raise ValueError(f"log inconsistent with configuration at bond {x}")
            arr[x], arr[y] = r, l
        return Configuration._trusted(arr, init.counts)

    def to_csv(self, path_or_buf=None) -> str | None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "bond", "left_species", "right_species"])
        for t, x, l, r in zip(self.times, self.bonds, self.left, self.right):
            w.writerow([repr(float(t)), int(x), SPECIES[l], SPECIES[r]])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_buf, elapsed: float | None = None) -> "EventLog":
        if hasattr(path_or_buf, "read"):
            rows = list(csv.DictReader(path_or_buf))
        else:
            with open(path_or_buf, newline="") as fh:
                rows = list(csv.DictReader(fh))
        times = np.array([float(r["time"]) for r in rows])
        log = cls(times=times,
                  bonds=np.array([int(r["bond"]) for r in rows], np.int64),
                  left=np.array([species_code(r["left_species"]) for r in rows], np.int8),
                  right=np.array([species_code(r["right_species"]) for r in rows], np.int8))
        log.elapsed = float(times[-1]) if elapsed is None and times.size else (elapsed or 0.0)
        return log


def step(config: Configuration, params: ModelParams, rng: np.random.Generator):
    """One Gillespie step: returns (new configuration, waiting time dt).

    An all-one-species configuration is absorbing and returns dt = inf.
    """
    st = EngineState(params, config, rng)
    empty_f = np.empty(0)
    empty_i = np.empty(0, np.int64)
    empty_b = np.empty(0, np.int8)
    _engine.run_plain(st.species, st.cnt9, st.clock, st.rate9, st.acc9, params.speed,
                      np.inf, 1, rng, False, empty_f, empty_i, empty_b, empty_b, 0)
    dt = float(st.clock[0])
    return st.config(), dt


class Observer:
    """Callback invoked at fixed macroscopic sampling times.

    Subclasses or instances carry ``times`` (sorted, non-negative) and are
    called as ``obs(config, t)``.
    """

    def __init__(self, times: Iterable[float], fn: Callable[[Configuration, float], None] | None = None):
        self.times = np.sort(np.asarray(list(times), dtype=float))
        self._fn = fn

    def __call__(self, config: Configuration, t: float):
        if self._fn is not None:
            self._fn(config, t)


def simulate(params: ModelParams, init: Configuration, t_max: float,
             observers: Sequence[Observer] = (), rng: np.random.Generator | None = None,
             record: bool = True) -> EventLog:
    """Run the dynamics on [0, t_max], invoking observers at their times.

    Observers see the configuration as it stands at each sampling time.
    The trajectory does not depend on the sampling schedule: the pending
    event time is carried across stops.  Without an explicit ``rng`` the
    stream ``make_rng(params.seed, 0)`` is used.
    """
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    if rng is None:
        rng = make_rng(params.seed, 0)
    st = EngineState(params, init, rng)
    stops = []
    for k, obs in enumerate(observers):
        for t in np.asarray(obs.times, dtype=float):
            if 0.0 <= t <= t_max:
                stops.append((float(t), k))
    stops.sort()
    stops.append((float(t_max), -1))
    cap = 1024 if record else 0
    log_t = np.empty(cap)
    log_x = np.empty(cap, np.int64)
    log_l = np.empty(cap, np.int8)
    log_r = np.empty(cap, np.int8)
    n_log = 0
    for t_stop, k in stops:
        if t_max == 0:
            break
        _, n_log, log_t, log_x, log_l, log_r = _engine.run_plain(
            st.species, st.cnt9, st.clock, st.rate9, st.acc9, params.speed, t_stop,
            np.iinfo(np.int64).max, rng, record, log_t, log_x, log_l, log_r, n_log)
        if k >= 0:
            observers[k](st.config(), t_stop)
    if t_max == 0:
        for obs in observers:
            for t in obs.times:
                if t == 0:
                    obs(init, 0.0)
    return EventLog(times=log_t[:n_log].copy(), bonds=log_x[:n_log].copy(),
                    left=log_l[:n_log].copy(), right=log_r[:n_log].copy(),
                    elapsed=float(t_max))


def final_configuration(params: ModelParams, init: Configuration, t_max: float,
                        rng: np.random.Generator) -> Configuration:
    """Evolve without logging and return the configuration at ``t_max``."""
    st = EngineState(params, init, rng)
    st.advance(t_max)
    return st.config()


# ------------------------------------------------------------- samplers ----

def sample_product_measure(rho_A: float, rho_B: float, N: int,
                           rng: np.random.Generator) -> Configuration:
    """i.i.d. sites with P(A) = rho_A, P(B) = rho_B, P(C) = 1 - rho_A - rho_B."""
    if rho_A < 0 or rho_B < 0 or rho_A + rho_B > 1 + 1e-15:
        raise ValueError("densities must be non-negative with rho_A + rho_B <= 1")
    u = rng.random(int(N))
    arr = np.full(int(N), C, dtype=np.int8)
    arr[u < rho_A + rho_B] = B
    arr[u < rho_A] = A
    return Configuration(arr)


def sample_canonical(n_A: int, n_B: int, n_C: int, rng: np.random.Generator,
                     N: int | None = None) -> Configuration:
    """Uniform arrangement of the multiset with the given species counts."""
    if min(n_A, n_B, n_C) < 0:
        raise ValueError("counts must be non-negative")
    total = n_A + n_B + n_C
    if N is not None and total != N:
        raise ValueError(f"counts sum to {total}, expected N={N}")
    arr = np.repeat(np.array([A, B, C], np.int8), [n_A, n_B, n_C])
    rng.shuffle(arr)
    return Configuration(arr)


# ------------------------------------------------------------- currents ----

def _occupations(config: Configuration):
    s = config.species
    return (s == A).astype(float), (s == B).astype(float)


def currents(config: Configuration, species, params: ModelParams,
             centred: bool = False, rho: float = 1.0 / 3.0) -> np.ndarray:
    """Instantaneous current j_{x,x+1} on every bond x for species A or B.

    The raw form is the occupation polynomial whose generator action gives
    L xi_x = N^a (j_{x-1,x} - j_{x,x+1}).  ``centred=True`` returns the same
    current rewritten in variables centred at ``rho``; the two differ by a
    configuration-independent constant.
    """
    sp = species_code(species)
    if sp == C:
        raise ValueError("currents are defined for species A and B")
    xa, xb = _occupations(config)
    if sp == B:
        xa, xb = xb, xa
    e = params.strengths
    own, other = (e[A], e[B]) if sp == A else (e[B], e[A])
    ec = e[C]
    s = params.asymmetry
    xa1 = np.roll(xa, -1)
    xb1 = np.roll(xb, -1)
    if not centred:
        return (xa - xa1
                + (own - other) * s / 2 * (xa * xb1 + xb * xa1)
                + (own - ec) * s / 2 * (xa1 + xa - 2 * xa * xa1 - xa * xb1 - xb * xa1))
    a = xa - rho
    b = xb - rho
    a1 = np.roll(a, -1)
    b1 = np.roll(b, -1)
    if sp == A:
        ea, eb = e[A], e[B]
        return (a - a1
                - (eb - ea) * s / 6 * (a + a1) - (eb - ec) * s / 6 * (b + b1)
                + (ec - ea) * s * a * a1 - (eb - ec) * s / 2 * (a * b1 + b * a1))
    # species B: own field is b here (roles swapped above)
    ea, eb = e[A], e[B]
    return (a - a1
            + (eb - ea) * s / 6 * (a + a1) - (ea - ec) * s / 6 * (b + b1)
            + (ec - eb) * s * a * a1 - (ea - ec) * s / 2 * (b * a1 + a * b1))


def instantaneous_current(config: Configuration, x: int, species, params: ModelParams,
                          centred: bool = False) -> float:
    return float(currents(config, species, params, centred)[x % config.N])


# --------------------------------------------------- brute-force oracles ----

def all_configurations(N: int) -> np.ndarray:
    """Every configuration of the N-site ring as rows of an int8 array (3^N x N)."""
    idx = np.arange(3 ** N)
    out = np.empty((3 ** N, N), np.int8)
    for x in range(N):
        out[:, x] = (idx // 3 ** x) % 3
    return out


def config_index(species: np.ndarray) -> int:
    return int(np.dot(species.astype(np.int64), 3 ** np.arange(species.size)))


def generator_matrix(params: ModelParams) -> np.ndarray:
    """Dense 3^N x 3^N rate matrix Q (rows sum to zero), including N^a."""
    N = params.N
    if N > 7:
        raise ValueError("brute-force generator limited to N <= 7")
    confs = all_configurations(N)
    rm = params.rate_matrix()
    size = confs.shape[0]
    Q = np.zeros((size, size))
    pw = 3 ** np.arange(N)
    for i in range(size):
        s = confs[i]
        for x in range(N):
            y = (x + 1) % N
            r = rm[s[x], s[y]]
            if r == 0:
                continue
            j = i + (int(s[y]) - int(s[x])) * pw[x] + (int(s[x]) - int(s[y])) * pw[y]
            Q[i, j] += r * params.speed
        Q[i, i] = -Q[i].sum()
    return Q


def apply_generator(params: ModelParams, fn: Callable[[np.ndarray], float],
                    species: np.ndarray) -> float:
    """Brute-force (L f)(eta) = N^a sum_x c_x(eta) [f(eta^{x,x+1}) - f(eta)]."""
    rm = params.rate_matrix()
    N = species.size
    base = fn(species)
    total = 0.0
    for x in range(N):
        y = (x + 1) % N
        r = rm[species[x], species[y]]
        if r == 0:
            continue
        sw = species.copy()
        sw[x], sw[y] = sw[y], sw[x]
        total += r * (fn(sw) - base)
    return params.speed * total


# ---------------------------------------------------------- snapshots ------

_MAGIC = b"ABCF"
_HEADER = struct.Struct("<4sHQdddddQd")


def write_snapshot(path_or_buf, config: Configuration, params: ModelParams,
                   time: float = 0.0, packed: bool = False) -> None:
    """Binary snapshot: little-endian header then one byte per site (version 1)
    or four sites per byte, two bits each, lowest bits first (version 2)."""
    version = 2 if packed else 1
    head = _HEADER.pack(_MAGIC, version, params.N, params.gamma, params.a,
                        params.E_A, params.E_B, params.E_C, params.seed & (2 ** 64 - 1), time)
    s = np.asarray(config.species, dtype=np.uint8)
    if packed:
        pad = (-s.size) % 4
        q = np.concatenate([s, np.zeros(pad, np.uint8)]).reshape(-1, 4)
        payload = (q[:, 0] | (q[:, 1] << 2) | (q[:, 2] << 4) | (q[:, 3] << 6)).astype(np.uint8)
    else:
        payload = s
    data = head + payload.tobytes()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "wb") as fh:
            fh.write(data)


def read_snapshot(path_or_buf):
    """Inverse of write_snapshot: returns (Configuration, ModelParams, time)."""
    if hasattr(path_or_buf, "read"):
        data = path_or_buf.read()
    else:
        with open(path_or_buf, "rb") as fh:
            data = fh.read()
    magic, version, N, gamma, a, ea, eb, ec, seed, time = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise ValueError("not a snapshot file")
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if version == 1:
        s = body[:N].astype(np.int8)
    elif version == 2:
        s = np.stack([(body >> sh) & 3 for sh in (0, 2, 4, 6)], axis=1).ravel()[:N].astype(np.int8)
    else:
        raise ValueError(f"unsupported snapshot version {version}")
    params = ModelParams(N=int(N), gamma=gamma, E_A=ea, E_B=eb, E_C=ec, a=a, seed=int(seed))
    return Configuration(s), params, float(time)


def mean_total_rate(params: ModelParams, rho_A: float, rho_B: float) -> float:
    """E[sum_x c_x] under the product measure (per-bond expectation times N)."""
    rho = np.array([rho_A, rho_B, 1.0 - rho_A - rho_B])
    rm = params.rate_matrix()
    return float(params.N * rho @ rm @ rho)

