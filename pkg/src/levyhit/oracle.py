"""Finite Markov chain oracle.

The first-hit system and the generator assembly use nothing but the strong
Markov property, so they hold verbatim for a continuous-time Markov chain on
finitely many states, where every ingredient is available exactly from
first-step equations. Running the same code paths (:func:`first_hit_from_pairs`
and :func:`generator_from_pairs`) on random chains checks the algebra
without any quadrature in the way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .hitting import first_hit_from_pairs
from .trace_q import generator_from_pairs

EXTERNAL = "external"


@dataclass
class CtmcSpec:
    """Generator of a finite chain, possibly with killing (row sums ``< 0``).

    ``entry`` is an optional distribution over states for a start outside the
    state space that jumps in immediately (the analogue of starting a jump
    process off the target set).
    """

    generator: np.ndarray
    labels: tuple = ()
    entry: Optional[np.ndarray] = None

    def __post_init__(self):
        G = np.array(self.generator, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 1:
            raise ConfigError("generator must be a square matrix")
        off = ~np.eye(len(G), dtype=bool)
        if np.any(G[off] < 0):
            raise ConfigError("off-diagonal rates must be non-negative")
        if np.any(G.sum(axis=1) > 1e-12 * max(1.0, np.abs(G).max())):
            raise ConfigError("rows must sum to at most zero")
        self.generator = G
        if not self.labels:
            self.labels = tuple(range(len(G)))
        if self.entry is not None:
            e = np.asarray(self.entry, dtype=float)
            if e.shape != (len(G),) or np.any(e < 0) or abs(e.sum() - 1) > 1e-12:
                raise ConfigError("entry must be a probability vector over states")
            self.entry = e

    @property
    def m(self) -> int:
        return len(self.generator)

    @property
    def killing(self) -> np.ndarray:
        return -self.generator.sum(axis=1)

    def to_dict(self) -> dict:
        d = {"generator": self.generator.tolist(), "labels": list(self.labels)}
        if self.entry is not None:
            d["entry"] = self.entry.tolist()
        return d


def random_chain(
    rng: np.random.Generator,
    m: int,
    density: float = 0.6,
    leak: bool = False,
    entry: bool = False,
) -> CtmcSpec:
    """Irreducible random chain: a random cycle plus random extra edges.

    With ``leak`` one state also has a killing rate; with ``entry`` an
    external start distribution is attached.
    """
    G = np.zeros((m, m))
    perm = rng.permutation(m)
    for a, b in zip(perm, np.roll(perm, -1)):
        if a != b:
            G[a, b] = rng.exponential()
    extra = (rng.random((m, m)) < density) & ~np.eye(m, dtype=bool)
    G[extra] += rng.exponential(size=int(extra.sum()))
    np.fill_diagonal(G, 0.0)
    kill = np.zeros(m)
    if leak:
        kill[rng.integers(m)] = rng.exponential()
    np.fill_diagonal(G, -G.sum(axis=1) - kill)
    e = rng.dirichlet(np.ones(m)) if entry else None
    return CtmcSpec(G, entry=e)


def _reaches(G: np.ndarray, targets: set[int]) -> np.ndarray:
    """States from which some target can be reached along positive rates."""
    m = len(G)
    ok = np.zeros(m, dtype=bool)
    ok[list(targets)] = True
    changed = True
    while changed:
        changed = False
        for y in range(m):
            if not ok[y] and np.any((G[y] > 0) & ok & (np.arange(m) != y)):
                ok[y] = changed = True
    return ok


def hit_matrix(chain: CtmcSpec, targets: Sequence[int]) -> np.ndarray:
    """``U[y, t] = P_y(first target hit is targets[t])`` for every state ``y``.

    First-step equations on the non-target states; states that cannot reach a
    target get zero.
    """
    G = chain.generator
    tg = list(targets)
    if not tg:
        raise ConfigError("targets must be non-empty")
    if len(set(tg)) != len(tg) or any(not 0 <= t < chain.m for t in tg):
        raise ConfigError("targets must be distinct state indices")
    U = np.zeros((chain.m, len(tg)))
    U[tg, range(len(tg))] = 1.0
    ok = _reaches(G, set(tg))
    free = [y for y in range(chain.m) if y not in tg and ok[y]]
    if free:
        A = -G[np.ix_(free, free)]
        b = G[np.ix_(free, tg)]
        U[free] = np.linalg.solve(A, b)
    return U


def ctmc_hit_probs(chain: CtmcSpec, start, targets: Sequence[int]) -> np.ndarray:
    """``P_start(first target hit = t)`` for ``t`` in ``targets``.

    ``start`` is a state index or :data:`EXTERNAL` (uses ``chain.entry``).
    The shortfall ``1 - sum`` is the mass that is killed or never arrives.
    """
    tg = list(targets)
    if isinstance(start, str):
        if start != EXTERNAL or chain.entry is None:
            raise ConfigError("an external start needs an entry distribution")
        return chain.entry @ hit_matrix(chain, tg)
    if start in tg:
        out = np.zeros(len(tg))
        out[tg.index(start)] = 1.0
        return out
    return hit_matrix(chain, tg)[start]


@dataclass
class OracleReport:
    name: str
    tolerance: float
    max_discrepancy: float = 0.0
    cases: int = 0
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_discrepancy < self.tolerance

    def record(self, disc: float, case: dict):
        self.cases += 1
        if disc >= self.max_discrepancy:
            self.max_discrepancy = float(disc)
            self.worst = case

    def summary(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return f"{self.name}: {self.cases} cases, max dev {self.max_discrepancy:.3e} (tol {self.tolerance:.0e}) {status}"

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "passed": self.passed,
                "cases": self.cases,
                "tolerance": self.tolerance,
                "max_discrepancy": self.max_discrepancy,
                "worst": self.worst,
            }
        )


def first_hit_via_pairs(chain: CtmcSpec, start, targets: Sequence[int]) -> np.ndarray:
    """First-hit distribution rebuilt from two-target probabilities only."""
    tg = list(targets)
    n = len(tg)
    if n == 1:
        return ctmc_hit_probs(chain, start, tg)

    def pair(l, k, p):
        return ctmc_hit_probs(chain, tg[l], [tg[k], tg[p]])[0]

    def start_pair(k, p):
        return ctmc_hit_probs(chain, start, [tg[k], tg[p]])[0]

    last, _, _ = first_hit_from_pairs(pair, start_pair, n, n - 1)
    first, _, _ = first_hit_from_pairs(pair, start_pair, n, 0)
    return np.array([last[i] for i in range(n - 1)] + [first[n - 1]])


def validate_first_hit_system(chain: CtmcSpec, start, targets: Sequence[int]) -> float:
    """Max gap between the direct first-hit law and the pairwise reconstruction."""
    direct = ctmc_hit_probs(chain, start, targets)
    rebuilt = first_hit_via_pairs(chain, start, targets)
    return float(np.max(np.abs(direct - rebuilt)))


def excursion_rate(chain: CtmcSpec, i: int, k: int) -> float:
    """``n^i(T_k < T_i)``: rate, per unit time at ``i``, of leaving ``i`` and reaching ``k`` first."""
    G = chain.generator
    reach = hit_matrix(chain, [k, i])[:, 0]
    return float(sum(G[i, y] * reach[y] for y in range(chain.m) if y != i))


def roundtrip_generator(chain: CtmcSpec) -> tuple[np.ndarray, dict]:
    """Reassemble the chain's own generator from hitting data and excursion rates."""
    m = chain.m

    def pair(l, k, p):
        return ctmc_hit_probs(chain, l, [k, p])[0]

    def first_hit(i):
        rest = [j for j in range(m) if j != i]
        return dict(zip(rest, ctmc_hit_probs(chain, i, rest).tolist()))

    recurrent = bool(np.all(np.abs(chain.killing) <= 1e-14))
    Q, _, diag = generator_from_pairs(
        pair,
        lambda i, k: excursion_rate(chain, i, k),
        first_hit,
        m,
        recurrent,
        escape_rate=lambda i: float(chain.killing[i]),
    )
    return Q, diag


def validate_generator_roundtrip(chain: CtmcSpec) -> float:
    Q, _ = roundtrip_generator(chain)
    return float(np.max(np.abs(Q - chain.generator)))


def first_hit_suite(
    seed: int = 0,
    chains: int = 200,
    max_states: int = 8,
    max_targets: int = 6,
    tol: float = 1e-10,
) -> OracleReport:
    """Random chains (some leaky, some entered from outside) through the first-hit identity."""
    report = OracleReport("first-hit system", tol)
    for c in range(chains):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(c,)))
        m = int(rng.integers(3, max_states + 1))
        leak = bool(rng.random() < 0.3)
        external = bool(rng.random() < 0.3)
        chain = random_chain(rng, m, density=float(rng.uniform(0.2, 0.9)), leak=leak, entry=external)
        cap = min(max_targets, m if external else m - 1)
        n = int(rng.integers(2, cap + 1))
        targets = sorted(rng.choice(m, size=n, replace=False).tolist())
        if external:
            start = EXTERNAL
        else:
            start = int(rng.choice([y for y in range(m) if y not in targets]))
        disc = validate_first_hit_system(chain, start, targets)
        report.record(disc, {"seed": seed, "chain_index": c, "start": start, "targets": targets, "chain": chain.to_dict()})
    return report


def roundtrip_suite(seed: int = 0, chains: int = 50, max_states: int = 6, tol: float = 1e-9) -> OracleReport:
    report = OracleReport("generator roundtrip", tol)
    for c in range(chains):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(10_000 + c,)))
        m = int(rng.integers(2, max_states + 1))
        chain = random_chain(rng, m, density=float(rng.uniform(0.2, 1.0)), leak=bool(rng.random() < 0.3))
        disc = validate_generator_roundtrip(chain)
        report.record(disc, {"seed": seed, "chain_index": c, "chain": chain.to_dict()})
    return report
