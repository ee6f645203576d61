"""MAP search over pattern sets: simulated annealing and an exhaustive oracle.

Both search levels run over an indexed *pattern space*.  At the pattern level
the space is the mined pool and a move adds or removes one pool pattern.  At
the literal level the space holds every valid pattern up to the length cap,
with lookup tables for dropping one literal from a pattern or adding one, so
a move edits a single literal or a whole pattern.

Seeding: chain ``c`` of a search seeded with ``seed`` draws its initial set
from ``SeedSequence(seed, spawn_key=(c, 0))`` and its in-kernel stream from
``SeedSequence(seed, spawn_key=(c, 1))``.  Results therefore do not depend on
how chains are scheduled across threads.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import _kernels as K
from . import bitset
from .config import ModelConfig, SAConfig
from .data import NEQ, DatasetIndex, Literal
from .exceptions import PoolError
from .mining import MinedPool
from .model import Score, poisson_pattern_term, score
from .patterns import Pattern, PatternSet, compatible

__all__ = [
    "SAConfig", "PatternSpace", "SearchProblem", "SearchTrace", "sa_search", "propose_pattern_level",
    "propose_literal_level", "random_init", "exhaustive_map", "default_n_jobs",
]

EXHAUSTIVE_LIMIT = 1_000_000


def default_n_jobs() -> int:
    """Thread count from ``BOA_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BOA_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class PatternSpace:
    """An indexed family of patterns with packed coverage and move tables."""

    universe: tuple[Literal, ...]
    lits: np.ndarray  # (P, max_length) literal ids into ``universe``, -1 padded
    lengths: np.ndarray
    coverage: np.ndarray  # (P, n_words)
    max_length: int
    sub: np.ndarray  # (P, max_length): pattern left after dropping literal k, -1 if empty
    sup_ptr: np.ndarray
    sup_idx: np.ndarray
    singles: np.ndarray
    _patterns: dict = field(default_factory=dict, repr=False)
    _lookup: dict | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.lengths.shape[0])

    def pattern(self, i: int) -> Pattern:
        p = self._patterns.get(i)
        if p is None:
            p = self._patterns[i] = Pattern(tuple(self.universe[j] for j in self.lits[i, : self.lengths[i]]))
        return p

    def pattern_set(self, indices) -> PatternSet:
        return PatternSet.of(self.pattern(int(i)) for i in indices)

    def index_of(self, pattern: Pattern) -> int:
        if self._lookup is None:
            self._lookup = {self.pattern(i): i for i in range(len(self))}
        try:
            return self._lookup[pattern]
        except KeyError:
            raise PoolError(f"pattern not in the search space: {pattern}") from None

    def indices_of(self, pattern_set: PatternSet) -> list[int]:
        return [self.index_of(p) for p in pattern_set]

    def size_by_length(self) -> list[int]:
        return [int(np.sum(self.lengths == l)) for l in range(1, self.max_length + 1)]

    @classmethod
    def from_pool(cls, pool: MinedPool, index: DatasetIndex) -> "PatternSpace":
        P = len(pool)
        L = max(pool.max_length, 1)
        lits = np.full((P, L), -1, dtype=np.int64)
        for i, p in enumerate(pool.patterns):
            for k, lit in enumerate(p.literals):
                lits[i, k] = index.literal_id(lit)
        space = cls(
            universe=tuple(index.literal_universe),
            lits=lits,
            lengths=pool.lengths if P else np.zeros(0, dtype=np.int64),
            coverage=np.ascontiguousarray(pool.coverage, dtype=np.uint64),
            max_length=L,
            sub=np.full((P, L), -1, dtype=np.int64),
            sup_ptr=np.zeros(P + 1, dtype=np.int64),
            sup_idx=np.zeros(0, dtype=np.int64),
            singles=np.zeros(0, dtype=np.int64),
        )
        space._patterns = dict(enumerate(pool.patterns))
        return space

    @classmethod
    def all_patterns(cls, index: DatasetIndex, max_length: int, include_negative: bool = True) -> "PatternSpace":
        """Every valid conjunction of up to ``max_length`` literals from the index."""
        keep = [i for i, lit in enumerate(index.literal_universe) if include_negative or lit.test != NEQ]
        universe = tuple(index.literal_universe[i] for i in keep)
        n = len(universe)
        if n == 0:
            raise PoolError("empty literal universe")
        if (n + 1) ** max_length >= 2**62:
            raise PoolError("literal universe too large to index patterns of this length")
        order = sorted(range(n), key=lambda i: universe[i])
        universe = tuple(universe[i] for i in order)
        lit_cov = np.ascontiguousarray(index.coverage[[keep[i] for i in order]])
        compat = np.array([[compatible(a, b) for b in universe] for a in universe], dtype=bool)

        levels = [np.arange(n, dtype=np.int64)[:, None]]
        covs = [lit_cov]
        for _ in range(1, max_length):
            prev = levels[-1]
            ok = np.ones((prev.shape[0], n), dtype=bool)
            for k in range(prev.shape[1]):
                ok &= compat[prev[:, k]]
            ok &= np.arange(n)[None, :] > prev[:, -1:]
            rows, cols = np.nonzero(ok)
            if rows.size == 0:
                break
            levels.append(np.hstack([prev[rows], cols[:, None]]))
            covs.append(covs[-1][rows] & lit_cov[cols])

        L = max_length
        P = sum(lv.shape[0] for lv in levels)
        lits = np.full((P, L), -1, dtype=np.int64)
        lengths = np.zeros(P, dtype=np.int64)
        start = 0
        for l, lv in enumerate(levels, start=1):
            lits[start:start + lv.shape[0], :l] = lv
            lengths[start:start + lv.shape[0]] = l
            start += lv.shape[0]
        coverage = np.ascontiguousarray(np.vstack(covs))

        base = n + 1
        weights = base ** np.arange(L, dtype=np.int64)

        def keys(rows):  # rows sorted ascending, -1 padded
            return ((rows + 1) * weights[: rows.shape[1]]).sum(axis=1)

        all_keys = keys(lits)
        key_order = np.argsort(all_keys)
        sorted_keys = all_keys[key_order]

        def lookup(rows):
            pos = np.searchsorted(sorted_keys, keys(rows))
            return key_order[pos]

        sub = np.full((P, L), -1, dtype=np.int64)
        for l in range(2, L + 1):
            rows = np.flatnonzero(lengths == l)
            block = lits[rows]
            for k in range(l):
                rest = np.delete(block, k, axis=1)  # still sorted; trailing -1 padding kept
                sub[rows, k] = lookup(rest)

        sup_lists_rows = []
        sup_lists_cols = []
        for l in range(1, L):
            rows = np.flatnonzero(lengths == l)
            if rows.size == 0:
                continue
            block = lits[rows, :l]
            ok = np.ones((rows.size, n), dtype=bool)
            for k in range(l):
                ok &= compat[block[:, k]]
            r_idx, cols = np.nonzero(ok)
            grown = np.sort(np.hstack([block[r_idx], cols[:, None]]), axis=1)
            grown = np.hstack([grown, np.full((grown.shape[0], L - l - 1), -1, dtype=np.int64)])
            sup_lists_rows.append(rows[r_idx])
            sup_lists_cols.append(lookup(grown))
        if sup_lists_rows:
            src = np.concatenate(sup_lists_rows)
            dst = np.concatenate(sup_lists_cols)
            o = np.lexsort((dst, src))
            src, dst = src[o], dst[o]
        else:
            src = dst = np.zeros(0, dtype=np.int64)
        sup_ptr = np.zeros(P + 1, dtype=np.int64)
        np.add.at(sup_ptr, src + 1, 1)
        sup_ptr = np.cumsum(sup_ptr)

        return cls(
            universe=universe, lits=lits, lengths=lengths, coverage=coverage, max_length=L,
            sub=sub, sup_ptr=sup_ptr, sup_idx=np.ascontiguousarray(dst),
            singles=np.flatnonzero(lengths == 1).astype(np.int64),
        )


def _poisson_terms(space: PatternSpace, level_counts: Sequence[int], lambda_L: float) -> np.ndarray:
    J = len(level_counts)
    if len(space) == 0:
        return np.zeros(0)
    attr = np.array([lit.attribute for lit in space.universe], dtype=np.int64)
    logk = np.log(np.asarray(level_counts, dtype=float))
    L = space.lengths.astype(float)
    valid = space.lits >= 0
    a = np.where(valid, attr[np.maximum(space.lits, 0)], -1)
    a_sorted = np.sort(a, axis=1)
    # sorting moves the -1 padding to the front, so mask on the sorted values
    first = np.concatenate([np.ones((len(space), 1), bool), a_sorted[:, 1:] != a_sorted[:, :-1]], axis=1)
    distinct = np.sum(first & (a_sorted >= 0), axis=1).astype(float)
    ln_pois = -lambda_L + L * math.log(lambda_L) - gammaln(L + 1)
    ln_comb = gammaln(J + 1) - gammaln(distinct + 1) - gammaln(J - distinct + 1)
    ln_values = np.where(valid, logk[np.maximum(a, 0)], 0.0).sum(axis=1)
    return ln_pois - ln_comb - ln_values


def likelihood_table(hyper: Sequence[float], n_pos: int, n_neg: int) -> np.ndarray:
    """lgamma of every count the likelihood can see, one row per Beta argument.

    Rows 0-2 hold lgamma(k + a+), lgamma(k + b+), lgamma(k + a+ + b+); rows 3-5
    the same for the negative-class pair; entry ``[6, 0]`` the normalising
    constant.
    """
    ap, bp, an, bn = (float(v) for v in hyper)
    k = np.arange(n_pos + n_neg + 1, dtype=np.float64)
    tab = np.zeros((7, k.size))
    for row, shift in enumerate((ap, bp, ap + bp, an, bn, an + bn)):
        tab[row] = gammaln(k + shift)
    tab[6, 0] = -(gammaln(ap) + gammaln(bp) - gammaln(ap + bp)) - (gammaln(an) + gammaln(bn) - gammaln(an + bn))
    return tab


def prior_table(prior: str, n_patterns: int, max_length: int, bb=None, lambda_M: float = 3.0) -> np.ndarray:
    """Prior terms by member count.

    Beta-Binomial: row ``l`` is the length-``l`` term as a function of how many
    members have that length.  Poisson: row 0 is the set-size term.
    Unreachable counts hold ``-inf``.
    """
    M = np.arange(n_patterns + 1, dtype=np.float64)
    tab = np.zeros((max_length + 1, n_patterns + 1))
    if prior == "beta_binomial":
        for l, (a, b, n) in enumerate(zip(bb.alpha, bb.beta, bb.pool_sizes), start=1):
            rest = n - M + b
            ok = M <= n
            vals = gammaln(M + a) + gammaln(np.where(ok, rest, 1.0)) - gammaln(n + a + b)
            tab[l] = np.where(ok, vals - (gammaln(a) + gammaln(b) - gammaln(a + b)), -np.inf)
    elif prior == "poisson":
        tab[0] = -lambda_M + M * math.log(lambda_M) - gammaln(M + 1.0)
    return tab


@dataclass
class SearchProblem:
    """A pattern space together with everything needed to score subsets of it."""

    index: DatasetIndex
    space: PatternSpace
    config: ModelConfig
    level: str
    pool: MinedPool | None = None

    def __post_init__(self):
        cfg = self.config
        L = self.space.max_length
        self.kind = {"none": K.PRIOR_NONE, "beta_binomial": K.PRIOR_BETA_BINOMIAL, "poisson": K.PRIOR_POISSON}[cfg.prior]
        self.lik = likelihood_table(cfg.likelihood.as_tuple(), self.index.n_pos, self.index.n_neg)
        self.bb = None
        if cfg.prior == "beta_binomial":
            self.bb = cfg.beta_binomial(self.prior_pool_sizes())
        self.ptab = prior_table(cfg.prior, len(self.space), L, bb=self.bb, lambda_M=float(cfg.lambda_M))
        if cfg.prior == "poisson":
            self.pterm = _poisson_terms(self.space, self.index.schema.level_counts, cfg.lambda_L)
        else:
            self.pterm = np.zeros(len(self.space))
        self.pos = np.ascontiguousarray(self.index.labels)
        self.neg = np.ascontiguousarray(self.index.negatives)

    def prior_pool_sizes(self) -> list[int]:
        L = self.space.max_length
        if self.pool is not None:
            sizes = list(self.pool.prior_pool_sizes[1:]) + [0] * L
            return sizes[:L]
        return self.space.size_by_length()

    @classmethod
    def for_pool(cls, index: DatasetIndex, pool: MinedPool, config: ModelConfig) -> "SearchProblem":
        if len(pool) == 0:
            raise PoolError("pattern-level search needs a non-empty candidate pool")
        return cls(index, PatternSpace.from_pool(pool, index), config, "pattern", pool)

    @classmethod
    def for_literals(cls, index: DatasetIndex, config: ModelConfig, space: PatternSpace | None = None) -> "SearchProblem":
        if space is None:
            space = PatternSpace.all_patterns(index, config.max_length, config.mining.include_negative_literals)
        return cls(index, space, config, "literal")

    @property
    def mode(self) -> int:
        return K.PATTERN_LEVEL if self.level == "pattern" else K.LITERAL_LEVEL

    def score(self, pattern_set: PatternSet) -> Score:
        return score(pattern_set, self.index, self.config, pool=None, bb=self.bb)

    def new_state(self, members: Sequence[int], seed_word: int = 0) -> "_ChainState":
        return _ChainState.build(self, members, seed_word)

    def energy_of(self, members: Sequence[int]) -> float:
        return float(self.new_state(members).fstate[K.F_E])


@dataclass
class _ChainState:
    in_set: np.ndarray
    members: np.ndarray
    where: np.ndarray
    cnt: np.ndarray
    pred: np.ndarray
    uniq: np.ndarray
    istate: np.ndarray
    fstate: np.ndarray
    Ml: np.ndarray
    best_members: np.ndarray
    rng: np.ndarray

    @classmethod
    def build(cls, prob: SearchProblem, members: Sequence[int], seed_word: int) -> "_ChainState":
        P = len(prob.space)
        W = prob.index.n_words
        st = cls(
            in_set=np.zeros(P, dtype=np.bool_),
            members=np.zeros(max(P, 1), dtype=np.int64),
            where=np.full(P, -1, dtype=np.int64),
            cnt=np.zeros(prob.index.n_records, dtype=np.int64),
            pred=np.zeros(W, dtype=np.uint64),
            uniq=np.zeros(W, dtype=np.uint64),
            istate=np.zeros(5, dtype=np.int64),
            fstate=np.zeros(3, dtype=np.float64),
            Ml=np.zeros(prob.space.max_length + 1, dtype=np.int64),
            best_members=np.zeros(max(P, 1), dtype=np.int64),
            rng=np.array([seed_word], dtype=np.uint64),
        )
        for a in dict.fromkeys(int(i) for i in members):
            K.apply_move(-1, a, 0.0, 0, 0, prob.space.coverage, prob.space.lengths, prob.pterm, st.in_set,
                         st.members, st.where, st.cnt, st.pred, st.uniq, st.istate, st.fstate, st.Ml)
        e, tp, fp = st.move_energy(prob, -1, -1)
        st.istate[K.I_TP] = tp
        st.istate[K.I_FP] = fp
        st.fstate[K.F_E] = e
        st.fstate[K.F_BEST_E] = e
        m = st.istate[K.I_M]
        st.best_members[:m] = st.members[:m]
        st.istate[K.I_BEST_M] = m
        return st

    def move_energy(self, prob: SearchProblem, r: int, a: int):
        sp = prob.space
        return K.move_energy(r, a, sp.coverage, prob.pos, prob.neg, sp.lengths, prob.pterm, self.pred, self.uniq,
                             self.istate, self.fstate, self.Ml, prob.index.n_pos, prob.index.n_neg, prob.lik,
                             prob.kind, prob.ptab)

    def current(self) -> list[int]:
        return sorted(self.members[: self.istate[K.I_M]].tolist())

    def best(self) -> list[int]:
        return sorted(self.best_members[: self.istate[K.I_BEST_M]].tolist())

    def propose(self, prob: SearchProblem, action: int, explore_p: float):
        sp = prob.space
        return K.propose(action, explore_p, prob.mode, sp.coverage, prob.pos, prob.neg, sp.lengths, prob.pterm,
                         sp.sub, sp.sup_ptr, sp.sup_idx, sp.singles, self.in_set, self.members, self.pred, self.uniq,
                         self.istate, self.fstate, self.Ml, prob.index.n_pos, prob.index.n_neg, prob.lik, prob.kind,
                         prob.ptab, self.rng)

    def run(self, prob: SearchProblem, t_start: int, n_steps: int, sa: SAConfig, cur, best, acc) -> int:
        sp = prob.space
        return K.run_chain(prob.mode, sp.coverage, prob.pos, prob.neg, sp.lengths, prob.pterm, sp.sub, sp.sup_ptr,
                           sp.sup_idx, sp.singles, prob.index.n_pos, prob.index.n_neg, prob.lik, prob.kind,
                           prob.ptab, self.in_set, self.members, self.where,
                           self.cnt, self.pred, self.uniq, self.istate, self.fstate, self.Ml, self.best_members,
                           self.rng, t_start, n_steps, sa.explore_p, sa.T0, sa.stop_when_separated, cur, best, acc)


@dataclass
class ChainTrace:
    current: np.ndarray
    best: np.ndarray
    accepted: np.ndarray
    initial_energy: float
    best_energy: float
    best_members: list[int]
    separated_at: int | None

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, self.current.shape[0] + 1)


@dataclass
class SearchTrace:
    """Per-chain step records plus the overall winner.

    ``checkpoints`` maps a step count to the best set found by any chain
    within that many steps.
    """

    chains: list[ChainTrace]
    best_set: PatternSet
    score: Score
    best_chain: int
    checkpoints: dict[int, PatternSet] = field(default_factory=dict)
    checkpoint_energies: dict[int, float] = field(default_factory=dict)

    @property
    def energy(self) -> float:
        return self.score.energy

    def rows(self):
        """``(chain, step, current_E, best_E, accepted)`` for every recorded step."""
        for c, ch in enumerate(self.chains):
            for s in range(ch.current.shape[0]):
                yield c, s + 1, float(ch.current[s]), float(ch.best[s]), bool(ch.accepted[s])


def _seed_sequence(seed: int, chain: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(chain, stream))


def _truncated_poisson(rng: np.random.Generator, lam: float, upper: int) -> int:
    if upper <= 0:
        return 0
    while True:
        m = int(rng.poisson(lam))
        if m <= upper:
            return m


def random_init(prob: SearchProblem, rng: np.random.Generator) -> list[int]:
    """Initial member indices for a chain.

    The size follows a Poisson(``lambda_M``) law truncated to the number of
    available patterns.  Pattern level samples distinct pool patterns; literal
    level samples distinct single-literal patterns.
    """
    if prob.level == "pattern":
        candidates = np.arange(len(prob.space))
    else:
        candidates = prob.space.singles
    m = _truncated_poisson(rng, prob.config.lambda_M, len(candidates))
    if m == 0:
        return []
    return sorted(rng.choice(candidates, size=m, replace=False).tolist())


def _run_one_chain(prob: SearchProblem, sa: SAConfig, chain: int, boundaries: list[int]):
    init = random_init(prob, np.random.Generator(np.random.Philox(_seed_sequence(sa.seed, chain, 0))))
    word = int(_seed_sequence(sa.seed, chain, 1).generate_state(1, np.uint64)[0])
    st = prob.new_state(init, word)
    initial = float(st.fstate[K.F_E])
    total = sa.max_steps
    cur = np.empty(total, dtype=np.float64)
    best = np.empty(total, dtype=np.float64)
    acc = np.zeros(total, dtype=np.bool_)
    snapshots = {}
    done = 0
    separated = False
    for stop in boundaries:
        if not separated and stop > done:
            ran = st.run(prob, done, stop - done, sa, cur[done:stop], best[done:stop], acc[done:stop])
            done += ran
            separated = bool(st.istate[K.I_SEPARATED])
        snapshots[stop] = (float(st.fstate[K.F_BEST_E]), st.best())
    trace = ChainTrace(cur[:done].copy(), best[:done].copy(), acc[:done].copy(), initial,
                       float(st.fstate[K.F_BEST_E]), st.best(), done if separated else None)
    return trace, snapshots


def sa_search(index: DatasetIndex, pool: MinedPool | None, config: ModelConfig,
              sa: SAConfig | None = None, problem: SearchProblem | None = None) -> tuple[PatternSet, SearchTrace]:
    """Anneal ``sa.restarts`` independent chains and return the lowest-energy set seen.

    ``pool`` is required at the pattern level and ignored at the literal
    level.  A prebuilt ``problem`` skips rebuilding the pattern space.
    """
    sa = sa or config.sa
    if problem is None:
        if sa.level == "pattern":
            if pool is None:
                raise PoolError("pattern-level search needs a mined pool")
            problem = SearchProblem.for_pool(index, pool, config)
        else:
            problem = SearchProblem.for_literals(index, config)
    boundaries = sorted({c for c in sa.checkpoints if 0 <= c <= sa.max_steps} | {sa.max_steps})

    def work(c):
        return _run_one_chain(problem, sa, c, boundaries)

    if sa.n_jobs > 1 and sa.restarts > 1:
        with ThreadPoolExecutor(max_workers=min(sa.n_jobs, sa.restarts)) as ex:
            results = list(ex.map(work, range(sa.restarts)))
    else:
        results = [work(c) for c in range(sa.restarts)]

    chains = [r[0] for r in results]
    empty_e = problem.energy_of([])
    best_chain = int(np.argmin([ch.best_energy for ch in chains]))
    members = chains[best_chain].best_members
    if empty_e < chains[best_chain].best_energy:
        members = []
    best_set = problem.space.pattern_set(members)
    trace = SearchTrace(chains, best_set, problem.score(best_set), best_chain)
    for stop in boundaries:
        if stop not in sa.checkpoints:
            continue
        es = [r[1][stop][0] for r in results]
        c = int(np.argmin(es))
        trace.checkpoints[stop] = problem.space.pattern_set(results[c][1][stop][1])
        trace.checkpoint_energies[stop] = es[c]
    return best_set, trace


def _rng_word(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63, dtype=np.int64))
    return int(rng)


def _propose(prob: SearchProblem, current: PatternSet, action: str, p: float, rng) -> PatternSet:
    if action not in ("covermore", "coverless"):
        raise ValueError("action must be 'covermore' or 'coverless'")
    st = prob.new_state(prob.space.indices_of(current), _rng_word(rng))
    code = K.COVERMORE if action == "covermore" else K.COVERLESS
    ok, r, a, *_ = st.propose(prob, code, p)
    if not ok:
        return current
    members = set(st.current())
    members.discard(int(r))
    if a >= 0:
        members.add(int(a))
    return prob.space.pattern_set(sorted(members))


def propose_pattern_level(current: PatternSet, action: str, problem: SearchProblem, p: float, rng) -> PatternSet:
    """One pattern-level neighbour of ``current``.

    ``covermore`` adds a pool pattern, ``coverless`` removes a member; each
    is uniform with probability ``p`` and otherwise the energy-minimizing
    choice.  Impossible actions return ``current`` unchanged.
    """
    if problem.level != "pattern":
        raise ValueError("problem was built for literal-level search")
    return _propose(problem, current, action, p, rng)


def propose_literal_level(current: PatternSet, action: str, problem: SearchProblem, p: float, rng) -> PatternSet:
    """One literal-level neighbour of ``current``.

    ``covermore`` drops a literal from a member (deleting patterns that
    become empty) or adds a single-literal pattern; ``coverless`` adds a
    literal to a member or removes a whole member.  The two branches are
    equally likely and an impossible branch falls through to its sibling.
    """
    if problem.level != "literal":
        raise ValueError("problem was built for pattern-level search")
    return _propose(problem, current, action, p, rng)


def _subset_count(n: int, max_size: int) -> int:
    return sum(math.comb(n, k) for k in range(min(n, max_size) + 1))


def _lnbeta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(a + b)


def exhaustive_map(candidates: Sequence[Pattern], index: DatasetIndex, config: ModelConfig,
                   max_set_size: int | None = None, pool_sizes: Sequence[int] | None = None) -> tuple[PatternSet, Score]:
    """Exact minimizer of the energy over all subsets of ``candidates``.

    ``pool_sizes`` (per length) feeds the Beta-Binomial prior and defaults to
    the length counts of ``candidates``.  Ties go to the first set in
    canonical order.
    """
    cands = sorted(set(candidates))
    n = len(cands)
    max_size = n if max_set_size is None else min(max_set_size, n)
    if _subset_count(n, max_size) > EXHAUSTIVE_LIMIT:
        raise PoolError(f"exhaustive search over {_subset_count(n, max_size)} subsets exceeds {EXHAUSTIVE_LIMIT}")
    L = max([len(p) for p in cands] + [config.max_length, 1])
    if pool_sizes is None:
        pool_sizes = [sum(1 for p in cands if len(p) == l) for l in range(1, L + 1)]
    pool_sizes = (list(pool_sizes) + [0] * L)[:L]
    bb = config.beta_binomial(pool_sizes) if config.prior == "beta_binomial" else None
    if n == 0:
        return PatternSet(), score(PatternSet(), index, config, bb=bb)

    cov = np.stack([index.conjunction(p.literals) for p in cands])
    lengths = np.array([len(p) for p in cands])
    if n <= 20:
        masks = np.arange(1 << n, dtype=np.int64)
        pred = np.zeros((1 << n, index.n_words), dtype=np.uint64)
        for b in range(n):
            pred[1 << b: 1 << (b + 1)] = pred[: 1 << b] | cov[b]
        bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
        sizes = bits.sum(axis=1)
        keep = sizes <= max_size
        bits, pred = bits[keep], pred[keep]
    else:
        combos = [c for k in range(max_size + 1) for c in itertools.combinations(range(n), k)]
        bits = np.zeros((len(combos), n), dtype=bool)
        for row, c in enumerate(combos):
            bits[row, list(c)] = True
        pred = np.zeros((len(combos), index.n_words), dtype=np.uint64)
        for row, c in enumerate(combos):
            for j in c:
                pred[row] |= cov[j]

    tp = bitset.popcount(pred & index.labels, axis=1).astype(float)
    fp = bitset.popcount(pred & index.negatives, axis=1).astype(float)
    fn = index.n_pos - tp
    tn = index.n_neg - fp
    ap, bp, an, bn = config.likelihood.as_tuple()
    ll = _lnbeta(tp + ap, fp + bp) - _lnbeta(ap, bp) + _lnbeta(tn + an, fn + bn) - _lnbeta(an, bn)
    m = bits.sum(axis=1).astype(float)
    if config.prior == "beta_binomial":
        lp = np.zeros(len(m))
        for l in range(1, L + 1):
            Ml = bits[:, lengths == l].sum(axis=1)
            a, b, size = bb.alpha[l - 1], bb.beta[l - 1], bb.pool_sizes[l - 1]
            lp += _lnbeta(Ml + a, size - Ml + b) - _lnbeta(a, b)
    elif config.prior == "poisson":
        h = config.poisson(index.schema.level_counts)
        pterm = np.array([poisson_pattern_term(p, h) for p in cands])
        lam = config.lambda_M
        lp = -lam + m * math.log(lam) - gammaln(m + 1) + bits.astype(float) @ pterm
    else:
        lp = np.zeros(len(m))
    energies = -(ll + lp)
    e_min = energies.min()
    near = np.flatnonzero(energies <= e_min + 1e-9 * max(1.0, abs(e_min)))
    scored = []
    for row in near:
        s = PatternSet.of(cands[j] for j in np.flatnonzero(bits[row]))
        scored.append((score(s, index, config, bb=bb), s))
    e_best = min(sc.energy for sc, _ in scored)
    # exact rescoring; energies within 1e-12 count as ties and go to the canonical-first set
    tied = [(s.sort_key, s, sc) for sc, s in scored if sc.energy <= e_best + 1e-12 * max(1.0, abs(e_best))]
    tied.sort(key=lambda t: t[0])
    return tied[0][1], tied[0][2]
