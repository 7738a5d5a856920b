"""Slot-stepped Monte-Carlo simulation of a nested purification and swapping
repeater chain.

Time advances in integer slots (one-hop classical communication time).  A
pair at nesting level ``k`` spans ``2**k`` segments; purifying it or swapping
two such pairs takes ``2**k`` slots before the kept or output pair is usable.
Measured qubits are freed at once.

Pair qubit order is (left station, right station).  Purification states are
ordered (pair a left, pair a right, pair b left, pair b right).
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np

from .czgate import GateChannel, noisy_cx
from .densmat import (
    CNOT,
    H,
    I2,
    PSI_PLUS,
    X,
    Y,
    Z,
    DensityMatrix,
    KrausSet,
    apply_kraus,
    apply_unitary,
    embed_operator,
    fidelity_with_pure,
    projective_measure,
    tensor_product,
)
from .entangle import LinkParams, post_selected_state

SLOT_TIME_S = 50e-6
DEFAULT_SPACING_KM = 10.0
WARMUP_DELIVERIES = 5
MAX_SLOTS = 20_000_000


class ProtocolError(ValueError):
    pass


class SimulationStalled(RuntimeError):
    pass


# ---------------------------------------------------------------- config


def _log2_exact(n: int) -> int:
    k = int(round(math.log2(n))) if n > 0 else -1
    if k < 0 or 2**k != n:
        raise ProtocolError(f"number of segments must be a power of two, got {n}")
    return k


@dataclass(frozen=True)
class NetworkConfig:
    n_segments: int
    spacing_km: float = DEFAULT_SPACING_KM
    slot_time: float = SLOT_TIME_S
    qubits_per_station: int | None = None

    def __post_init__(self):
        levels = _log2_exact(self.n_segments)
        minimum = 2 + 2 * levels
        if self.qubits_per_station is None:
            object.__setattr__(self, "qubits_per_station", minimum)
        elif self.qubits_per_station < minimum:
            raise ProtocolError(f"need at least {minimum} qubits per station")
        if self.qubits_per_station % 2:
            raise ProtocolError("qubits per station must split evenly into send and receive")
        if self.spacing_km <= 0 or self.slot_time <= 0:
            raise ProtocolError("spacing and slot time must be positive")

    @property
    def levels(self) -> int:
        return _log2_exact(self.n_segments)

    @property
    def total_km(self) -> float:
        return self.n_segments * self.spacing_km

    @property
    def qubits_per_side(self) -> int:
        return self.qubits_per_station // 2


@dataclass(frozen=True)
class ProtocolPolicy:
    purification_rounds: tuple

    def __post_init__(self):
        r = tuple(int(x) for x in self.purification_rounds)
        if any(x < 0 for x in r):
            raise ProtocolError("purification rounds must be non-negative")
        object.__setattr__(self, "purification_rounds", r)

    def check(self, cfg: NetworkConfig) -> None:
        if len(self.purification_rounds) != cfg.levels + 1:
            raise ProtocolError(
                f"policy has {len(self.purification_rounds)} levels, network needs {cfg.levels + 1}"
            )


@dataclass(frozen=True, eq=False)
class PairRecord:
    level: int
    endpoints: tuple
    rho: DensityMatrix
    purification_round: int = 0
    ready_at: int = 0
    created: int = 0


@dataclass(frozen=True)
class SimResult:
    mean_interval_s: float
    std_interval_s: float
    rate_hz: float
    final_fidelity: float
    pairs_delivered: int
    delivery_slots: tuple = ()


# ---------------------------------------------------------------- gates


class CXGate(Protocol):
    def cx(self, rho: DensityMatrix, control: int, target: int) -> DensityMatrix: ...


_PAULIS = (I2, X, Y, Z)


@lru_cache(maxsize=None)
def _depolarizing_kraus(eps: float) -> KrausSet:
    ops = []
    for a, b in itertools.product(range(4), range(4)):
        w = 1 - eps + eps / 16 if (a == 0 and b == 0) else eps / 16
        ops.append(math.sqrt(w) * np.kron(_PAULIS[a], _PAULIS[b]))
    return KrausSet(ops)


@lru_cache(maxsize=None)
def _depolarizing_stack(eps, control, target, n_qubits):
    ops = [CNOT] if eps == 0 else [k @ CNOT for k in _depolarizing_kraus(eps).operators]
    return np.array([embed_operator(k, [control, target], n_qubits) for k in ops])


@dataclass(frozen=True)
class DepolarizingGate:
    """Ideal C-X followed by two-qubit white noise of weight ``eps``."""

    eps: float = 0.0

    def cx(self, rho, control, target):
        out = apply_unitary(rho, CNOT, [control, target])
        if self.eps > 0:
            out = apply_kraus(out, _depolarizing_kraus(self.eps), [control, target])
        return out

    def kraus_stack(self, control, target, n_qubits):
        return _depolarizing_stack(self.eps, control, target, n_qubits)


@dataclass(frozen=True, eq=False)
class ChannelGate:
    """C-X built from the optical-loss C-Z distortion channel."""

    channel: GateChannel
    _stacks: dict = field(default_factory=dict, repr=False)

    def cx(self, rho, control, target):
        return noisy_cx(rho, self.channel, control, target)

    def kraus_stack(self, control, target, n_qubits):
        key = (control, target, n_qubits)
        if key not in self._stacks:
            ops = [CNOT @ k for k in self.channel.x_kraus.operators]
            self._stacks[key] = np.array([embed_operator(k, [control, target], n_qubits) for k in ops])
        return self._stacks[key]


def as_gate(gate) -> CXGate:
    if gate is None:
        return DepolarizingGate(0.0)
    if isinstance(gate, GateChannel):
        return ChannelGate(gate)
    return gate


# ---------------------------------------------------------------- noise


def white_noise(rho: DensityMatrix, eps: float) -> DensityMatrix:
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    d = rho.dim
    return DensityMatrix((1 - eps) * rho.matrix + eps * np.eye(d) / d)


@dataclass(frozen=True)
class WhiteNoise:
    eps_init: float
    eps_gate: float
    ps: float

    def __post_init__(self):
        for v in (self.eps_init, self.eps_gate, self.ps):
            if not 0.0 <= v <= 1.0:
                raise ValueError("noise parameters must lie in [0, 1]")

    @property
    def pair_state(self) -> DensityMatrix:
        return white_noise(DensityMatrix.from_ket(PSI_PLUS), self.eps_init)

    @property
    def gate(self) -> CXGate:
        return DepolarizingGate(self.eps_gate)

    @staticmethod
    def eps_for_fidelity(f: float) -> float:
        return 4.0 * (1.0 - f) / 3.0


@dataclass(frozen=True, eq=False)
class PhysicalNoise:
    link: LinkParams
    channel: GateChannel
    _cache: dict = field(default_factory=dict, repr=False)

    def _result(self):
        if "r" not in self._cache:
            self._cache["r"] = post_selected_state(self.link)
        return self._cache["r"]

    @property
    def pair_state(self) -> DensityMatrix:
        return self._result().rho12

    @property
    def ps(self) -> float:
        return self._result().ps

    @property
    def gate(self) -> CXGate:
        if "gate" not in self._cache:
            self._cache["gate"] = ChannelGate(self.channel)
        return self._cache["gate"]


def attempt_generation(noise, rng: np.random.Generator, endpoints=(0, 1), t: int = 0) -> PairRecord | None:
    """One heralded attempt; the pair becomes usable one slot later."""
    if rng.random() < noise.ps:
        return PairRecord(0, tuple(endpoints), noise.pair_state, 0, t + 1, t)
    return None


# ---------------------------------------------------------------- cliffords


def single_qubit_cliffords() -> list[np.ndarray]:
    """The 24 single-qubit Cliffords modulo phase, identity first."""
    s = np.diag([1, 1j])
    found: list[np.ndarray] = [np.eye(2, dtype=complex)]
    frontier = [np.eye(2, dtype=complex)]

    def known(u):
        for v in found:
            if abs(abs(np.trace(v.conj().T @ u)) - 2) < 1e-9:
                return True
        return False

    while frontier:
        nxt = []
        for u in frontier:
            for g in (H, s):
                w = g @ u
                if not known(w):
                    found.append(w)
                    nxt.append(w)
        frontier = nxt
    if len(found) != 24:
        raise RuntimeError("Clifford enumeration failed")
    return found


_CLIFFORDS = single_qubit_cliffords()


# ---------------------------------------------------------------- purification


def _gate_key(g):
    # Channels hash by identity; holding them in the cache key keeps ids unique.
    return g.channel if isinstance(g, ChannelGate) else g


def _state_key(rho: DensityMatrix) -> bytes:
    return np.round(rho.matrix, 13).tobytes()


def _apply_stack(rhos: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """Apply one Kraus stack to a batch of density matrices."""
    out = ops[:, None] @ rhos[None] @ ops.conj().transpose(0, 2, 1)[:, None]
    return out.sum(axis=0)


_ROT4 = np.array([np.kron(np.kron(r, r), np.kron(r, r)) for r in _CLIFFORDS])
_ROT2_INV = np.array([np.kron(r, r).conj().T for r in _CLIFFORDS])
# Basis indices with both target qubits (2, 3) equal to 0, then to 1.
_EVEN_BLOCKS = [np.array([4 * c + 3 * o for c in range(4)]) for o in (0, 1)]


def _purify_batch(rho4: np.ndarray, gate, rotations: Sequence[int]):
    """Success probabilities and kept states for several pre-rotations."""
    idx = list(rotations)
    rot = _ROT4[idx]
    st = rot @ rho4[None] @ rot.conj().transpose(0, 2, 1)
    st = _apply_stack(st, gate.kraus_stack(0, 2, 4))
    st = _apply_stack(st, gate.kraus_stack(1, 3, 4))
    kept = sum(st[:, b][:, :, b] for b in _EVEN_BLOCKS)
    p = np.real(np.trace(kept, axis1=1, axis2=2))
    safe = np.where(p > 1e-15, p, 1.0)
    kept = kept / safe[:, None, None]
    inv = _ROT2_INV[idx]
    kept = inv @ kept @ inv.conj().transpose(0, 2, 1)
    fid = np.real(np.einsum("i,bij,j->b", PSI_PLUS.conj(), kept, PSI_PLUS))
    fid = np.where(p > 1e-15, fid, -np.inf)
    return p, kept, fid


_PURIFY_CACHE: dict = {}


def purify_states(rho_a: DensityMatrix, rho_b: DensityMatrix, gate=None, rotation: int | None = None):
    """Success probability, kept state and Clifford index of one recurrence step.

    All four qubits get the same single-qubit Clifford before the bilateral
    C-X (pair a controls pair b) and its inverse afterwards.  With
    ``rotation`` unset the Clifford maximizing the kept state's ``|Psi+>``
    fidelity is used; ties go to the lowest index (identity first).
    """
    g = as_gate(gate)
    key = (_state_key(rho_a), _state_key(rho_b), _gate_key(g), rotation)
    hit = _PURIFY_CACHE.get(key)
    if hit is not None:
        return hit
    rho4 = np.kron(rho_a.matrix, rho_b.matrix)
    candidates = list(range(24)) if rotation is None else [rotation]
    p, kept, fid = _purify_batch(rho4, g, candidates)
    best = int(np.flatnonzero(fid >= fid.max() - 1e-12)[0])
    if not np.isfinite(fid[best]):
        result = (0.0, None, -1)
    else:
        m = kept[best]
        result = (float(min(p[best], 1.0)), DensityMatrix(0.5 * (m + m.conj().T)), candidates[best])
    _PURIFY_CACHE[key] = result
    return result


def purify(a: PairRecord, b: PairRecord, gate=None, rng: np.random.Generator | None = None,
           t: int = 0) -> PairRecord | None:
    """Recurrence step on two pairs sharing endpoints.

    With an rng the parity outcome is sampled; without one the kept state is
    returned whenever its probability is nonzero.
    """
    if a.level != b.level:
        raise ProtocolError("cannot purify pairs of different levels")
    if tuple(a.endpoints) != tuple(b.endpoints):
        raise ProtocolError("cannot purify pairs with different endpoints")
    p, out, _ = purify_states(a.rho, b.rho, gate)
    if out is None or (rng is not None and rng.random() >= p):
        return None
    rnd = max(a.purification_round, b.purification_round) + 1
    return PairRecord(a.level, tuple(a.endpoints), out, rnd, t + 2**a.level, t)


def werner_recurrence(f: float) -> tuple[float, float]:
    """Output fidelity and success probability for two Werner inputs."""
    q = (1 - f) / 3
    p = f * f + 2 * f * q + 5 * q * q
    return (f * f + q * q) / p, p


# ---------------------------------------------------------------- swapping


def _bell_measure(rho4: DensityMatrix, gate: CXGate):
    st = gate.cx(rho4, 1, 2)
    st = apply_unitary(st, H, [1])
    out = []
    for m1, m2 in itertools.product((0, 1), repeat=2):
        p, rem = projective_measure(st, [1, 2], [m1, m2])
        out.append(((m1, m2), p, rem))
    return out


@lru_cache(maxsize=1)
def _swap_corrections() -> dict:
    """Pauli on the right qubit restoring |Psi+> for each outcome, ideal inputs."""
    psi = DensityMatrix.from_ket(PSI_PLUS)
    table = {}
    for outcome, p, rem in _bell_measure(tensor_product(psi, psi), DepolarizingGate(0.0)):
        fids = [fidelity_with_pure(apply_unitary(rem, P, [1]), PSI_PLUS) for P in _PAULIS]
        table[outcome] = int(np.argmax(fids))
    return table


_SWAP_CACHE: dict = {}


def swap_states(rho_a: DensityMatrix, rho_b: DensityMatrix, gate=None):
    """Corrected output per Bell outcome and their probability-weighted mixture."""
    g = as_gate(gate)
    key = (_state_key(rho_a), _state_key(rho_b), _gate_key(g))
    hit = _SWAP_CACHE.get(key)
    if hit is not None:
        return hit
    corr = _swap_corrections()
    branches = []
    avg = np.zeros((4, 4), dtype=complex)
    for outcome, p, rem in _bell_measure(tensor_product(rho_a, rho_b), g):
        if rem is None:
            continue
        fixed = apply_unitary(rem, _PAULIS[corr[outcome]], [1])
        branches.append((outcome, p, fixed))
        avg += p * fixed.matrix
    result = (branches, DensityMatrix(avg))
    _SWAP_CACHE[key] = result
    return result


def swap(a: PairRecord, b: PairRecord, gate=None, rng: np.random.Generator | None = None,
         t: int = 0) -> PairRecord:
    """Entanglement swap at the shared station; output is one level up.

    With an rng one Bell outcome is sampled; without one the
    outcome-averaged corrected state is returned.
    """
    if a.endpoints[1] != b.endpoints[0]:
        if b.endpoints[1] == a.endpoints[0]:
            a, b = b, a
        else:
            raise ProtocolError("pairs do not share a station")
    branches, avg = swap_states(a.rho, b.rho, gate)
    if rng is None:
        rho = avg
    else:
        probs = np.array([p for _, p, _ in branches])
        pick = rng.choice(len(branches), p=probs / probs.sum())
        rho = branches[pick][2]
    level = max(a.level, b.level)
    return PairRecord(level + 1, (a.endpoints[0], b.endpoints[1]), rho, 0, t + 2**level, t)


def werner_swap(f1: float, f2: float) -> float:
    p1, p2 = (4 * f1 - 1) / 3, (4 * f2 - 1) / 3
    return (1 + 3 * p1 * p2) / 4


# ---------------------------------------------------------------- protocol tables


@dataclass
class ProtocolTables:
    """States and success probabilities indexed by (level, round)."""

    states: dict
    success: dict
    final_state: DensityMatrix

    @property
    def final_fidelity(self) -> float:
        return fidelity_with_pure(self.final_state, PSI_PLUS)


def protocol_tables(levels: int, policy: ProtocolPolicy, noise) -> ProtocolTables:
    rounds = policy.purification_rounds
    if len(rounds) != levels + 1:
        raise ProtocolError("policy length does not match the number of levels")
    gate = noise.gate
    states = {}
    success = {}
    rho = noise.pair_state
    for k in range(levels + 1):
        states[(k, 0)] = rho
        for r in range(rounds[k]):
            p, rho_next, _ = purify_states(rho, rho, gate)
            if rho_next is None:
                raise ProtocolError(f"purification at level {k} round {r} never succeeds")
            success[(k, r)] = p
            rho = rho_next
            states[(k, r + 1)] = rho
        if k < levels:
            rho = swap_states(rho, rho, gate)[1]
    return ProtocolTables(states, success, rho)


def expected_cost(levels: int, policy: ProtocolPolicy, tables: ProtocolTables) -> float:
    """Expected elementary pairs consumed per delivered pair (timing ignored)."""
    cost = 1.0
    for k in range(levels + 1):
        for r in range(policy.purification_rounds[k]):
            cost = 2 * cost / tables.success[(k, r)]
        if k < levels:
            cost *= 2
    return cost


def choose_policy(levels: int, noise, target: float = 0.95, max_rounds: int = 4,
                  front_size: int = 12) -> ProtocolPolicy:
    """Cheapest policy whose final fidelity reaches ``target``.

    Search keeps a Pareto front of (fidelity, cost) per level.  If no policy
    reaches the target the one with the highest final fidelity is returned.
    """
    gate = noise.gate
    front = [((), noise.pair_state, 1.0)]
    for k in range(levels + 1):
        expanded = []
        for rounds, rho, cost in front:
            cur, c = rho, cost
            for r in range(max_rounds + 1):
                if r > 0:
                    p, nxt, _ = purify_states(cur, cur, gate)
                    if nxt is None:
                        break
                    cur, c = nxt, 2 * c / p
                if k < levels:
                    out = swap_states(cur, cur, gate)[1]
                    expanded.append((rounds + (r,), out, 2 * c))
                else:
                    expanded.append((rounds + (r,), cur, c))
        expanded.sort(key=lambda e: (e[2], -fidelity_with_pure(e[1], PSI_PLUS)))
        pareto = []
        best_f = -1.0
        for e in expanded:
            f = fidelity_with_pure(e[1], PSI_PLUS)
            if f > best_f + 1e-12:
                pareto.append(e)
                best_f = f
        if len(pareto) > front_size:
            idx = np.unique(np.linspace(0, len(pareto) - 1, front_size).round().astype(int))
            pareto = [pareto[i] for i in idx]
        front = pareto
    ok = [e for e in front if fidelity_with_pure(e[1], PSI_PLUS) >= target]
    if ok:
        pick = min(ok, key=lambda e: e[2])
    else:
        pick = max(front, key=lambda e: fidelity_with_pure(e[1], PSI_PLUS))
    return ProtocolPolicy(pick[0])


# ---------------------------------------------------------------- simulation


def run_simulation(cfg: NetworkConfig, policy: ProtocolPolicy, noise, n_deliver: int = 30,
                   seed: int | np.random.SeedSequence = 0, max_slots: int = MAX_SLOTS,
                   audit: bool = False) -> SimResult:
    """Simulate until ``n_deliver`` end-to-end pairs are delivered.

    The reported interval statistics use deliveries after the first
    ``WARMUP_DELIVERIES``.  Swaps use the outcome-averaged corrected state.
    """
    policy.check(cfg)
    if n_deliver < WARMUP_DELIVERIES + 2:
        raise ProtocolError(f"n_deliver must be at least {WARMUP_DELIVERIES + 2}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.Philox(ss))
    levels = cfg.levels
    rounds = policy.purification_rounds
    tables = protocol_tables(levels, policy, noise)
    ps = float(noise.ps)
    if ps <= 0:
        raise ProtocolError("success probability is zero")
    n = cfg.n_segments
    q = cfg.qubits_per_side
    held_send = np.zeros(n + 1, dtype=np.int64)
    held_recv = np.zeros(n + 1, dtype=np.int64)
    pools: dict = {}
    events: list = []
    seq = itertools.count()
    deliveries: list = []
    fids: list = []
    audit_log: list = []

    def hold(left, right, delta):
        held_send[left] += delta
        held_recv[right] += delta

    def push(key, rec):
        pools.setdefault(key, deque()).append(rec)
        dirty.add(key)

    dirty: set = set()
    t = 0
    while len(deliveries) < n_deliver:
        if t > max_slots:
            raise SimulationStalled(f"only {len(deliveries)} deliveries after {max_slots} slots")
        # Pairs whose confirmation arrived.
        while events and events[0][0] <= t:
            ready, _, rec, left, right = heapq.heappop(events)
            if rec is None:
                hold(left, right, -1)
                continue
            if audit:
                audit_log.append((t, rec.ready_at))
            lvl = rec.level
            block = rec.endpoints[0] >> lvl
            if lvl == levels and rec.purification_round == rounds[levels]:
                deliveries.append(t)
                fids.append(fidelity_with_pure(rec.rho, PSI_PLUS))
                hold(rec.endpoints[0], rec.endpoints[1], -1)
                continue
            push((lvl, block, rec.purification_round), rec)
        # Purifications and swaps on newly changed groups.
        work = sorted(dirty)
        dirty.clear()
        for key in work:
            lvl, block, rnd = key
            pool = pools.get(key)
            if not pool:
                continue
            if rnd < rounds[lvl]:
                while len(pool) >= 2:
                    a = pool.popleft()
                    b = pool.popleft()
                    hold(b.endpoints[0], b.endpoints[1], -1)
                    ready = t + 2**lvl
                    if rng.random() < tables.success[(lvl, rnd)]:
                        rec = PairRecord(lvl, a.endpoints, tables.states[(lvl, rnd + 1)], rnd + 1, ready, t)
                        heapq.heappush(events, (ready, next(seq), rec, 0, 0))
                    else:
                        heapq.heappush(events, (ready, next(seq), None, a.endpoints[0], a.endpoints[1]))
            elif lvl < levels:
                sib = (lvl, block ^ 1, rnd)
                other = pools.get(sib)
                while pool and other:
                    a = pool.popleft()
                    b = other.popleft()
                    if a.endpoints[0] > b.endpoints[0]:
                        a, b = b, a
                    # Middle-station qubits are measured and freed now.
                    held_recv[a.endpoints[1]] -= 1
                    held_send[b.endpoints[0]] -= 1
                    ready = t + 2**lvl
                    rec = PairRecord(lvl + 1, (a.endpoints[0], b.endpoints[1]),
                                     tables.states[(lvl + 1, 0)], 0, ready, t)
                    heapq.heappush(events, (ready, next(seq), rec, 0, 0))
        # Elementary generation on every free qubit pair.  Slots without any
        # success are skipped with one geometric draw (memoryless, so exact).
        free = np.minimum(q - held_send[:n], q - held_recv[1:])
        if np.any(free < 0):
            raise RuntimeError("qubit accounting went negative")
        next_event = events[0][0] if events else None
        total = int(free.sum())
        if total == 0:
            if next_event is None:
                raise SimulationStalled(f"deadlock at slot {t}: every qubit waits for a partner")
            t = next_event
            continue
        # slots until some free qubit succeeds; certain success needs no draw
        p_any = 1.0 if ps >= 1.0 else -math.expm1(total * math.log1p(-ps))
        first = t + int(rng.geometric(p_any)) - 1
        if next_event is not None and first >= next_event:
            t = next_event
            continue
        t = first
        wins = rng.binomial(free, ps)
        while not wins.any():
            wins = rng.binomial(free, ps)
        for s in np.flatnonzero(wins):
            for _ in range(int(wins[s])):
                hold(s, s + 1, +1)
                rec = PairRecord(0, (int(s), int(s) + 1), tables.states[(0, 0)], 0, t + 1, t)
                heapq.heappush(events, (t + 1, next(seq), rec, 0, 0))
        t += 1
    times = np.array(deliveries[WARMUP_DELIVERIES - 1:], dtype=float) * cfg.slot_time
    intervals = np.diff(times)
    mean = float(intervals.mean())
    std = float(intervals.std(ddof=1)) if intervals.size > 1 else 0.0
    res = SimResult(mean, std, 1.0 / mean, float(np.mean(fids)), len(deliveries), tuple(deliveries))
    if audit:
        bad = [x for x in audit_log if x[0] < x[1]]
        if bad:
            raise RuntimeError(f"pairs used before confirmation: {bad[:3]}")
    return res


# ---------------------------------------------------------------- rate study


def fit_exponent(ps: Sequence[float], rates: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log(rate) against log(ps) and its standard error."""
    x = np.log(np.asarray(ps, dtype=float))
    y = np.log(np.asarray(rates, dtype=float))
    if x.size < 3:
        raise ProtocolError("need at least three points to fit an exponent")
    coef, cov = np.polyfit(x, y, 1, cov="unscaled")
    resid = y - np.polyval(coef, x)
    dof = max(x.size - 2, 1)
    s2 = float(resid @ resid) / dof
    return float(coef[0]), float(math.sqrt(max(cov[0, 0] * s2, 0.0)))


def _simulate_task(args) -> SimResult:
    cfg, policy, noise, n_deliver, seed = args
    return run_simulation(cfg, policy, noise, n_deliver, seed)


def rate_study(cfg: NetworkConfig, eps_init: float, eps_gate: float, ps_grid: Sequence[float],
               policy: ProtocolPolicy | None = None, target: float = 0.95, n_deliver: int = 30,
               n_seeds: int = 4, seed: int = 0, mapper=map) -> dict:
    """Delivered-pair rate across success probabilities under white noise.

    ``mapper`` may be a parallel ``map``; results do not depend on it.
    """
    grid = list(ps_grid)
    if len(grid) < 4:
        raise ProtocolError("rate study needs at least four success probabilities")
    base = WhiteNoise(eps_init, eps_gate, grid[0])
    if policy is None:
        policy = choose_policy(cfg.levels, base, target)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(len(grid) * n_seeds)
    tasks = [(cfg, policy, WhiteNoise(eps_init, eps_gate, ps), n_deliver, streams[i * n_seeds + j])
             for i, ps in enumerate(grid) for j in range(n_seeds)]
    sims = list(mapper(_simulate_task, tasks))
    rows = []
    for i, ps in enumerate(grid):
        chunk = sims[i * n_seeds:(i + 1) * n_seeds]
        mean_interval = float(np.mean([s.mean_interval_s for s in chunk]))
        rows.append({"ps": ps, "rate_hz": 1.0 / mean_interval,
                     "final_fidelity": float(np.mean([s.final_fidelity for s in chunk])),
                     "mean_interval_s": mean_interval})
    slope, err = fit_exponent([r["ps"] for r in rows], [r["rate_hz"] for r in rows])
    return {"rows": rows, "exponent": slope, "exponent_stderr": err, "policy": policy.purification_rounds}
