"""Compiled inner loop of the annealing search.

The search state is a subset of an indexed pattern universe (the mined
pool, or every valid pattern up to a length cap).  Every move removes at most
one member ``r`` and adds at most one pattern ``a`` (-1 meaning none), so one
routine scores all moves from per-record cover counts.

Randomness comes from a splitmix64 stream whose 64-bit state lives in a
one-element array owned by the chain, which keeps chains reproducible and
independent of scheduling.
"""
from __future__ import annotations

import math

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

PATTERN_LEVEL = 0
LITERAL_LEVEL = 1

PRIOR_NONE = 0
PRIOR_BETA_BINOMIAL = 1
PRIOR_POISSON = 2

COVERMORE = 0
COVERLESS = 1

# integer state slots
I_M, I_TP, I_FP, I_BEST_M, I_SEPARATED = range(5)
# float state slots
F_SUMTERM, F_E, F_BEST_E = range(3)


@intrinsic
def _ctpop(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


@intrinsic
def _cttz(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.cttz(args[0], ir.Constant(ir.IntType(1), 0))

    return sig, codegen


@njit(cache=True)
def popcount(x):
    return np.int64(_ctpop(x))


@njit(cache=True)
def _next(rng):
    z = rng[0] + np.uint64(0x9E3779B97F4A7C15)
    rng[0] = z
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def uniform(rng):
    return np.float64(_next(rng) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def randbelow(rng, n):
    return np.int64(uniform(rng) * n)


@njit(cache=True)
def energy(tp, fp, m, Ml, sumterm, n_pos, n_neg, lik, kind, ptab):
    """Minus the log joint; mirrors the reference functions in ``model``.

    ``lik`` rows hold lgamma of the shifted counts (see ``likelihood_table``)
    and ``ptab`` the prior terms by member count (see ``prior_table``).
    """
    tn = n_neg - fp
    fn = n_pos - tp
    ll = (lik[0, tp] + lik[1, fp] - lik[2, tp + fp]) + (lik[3, tn] + lik[4, fn] - lik[5, tn + fn]) + lik[6, 0]
    lp = 0.0
    if kind == PRIOR_BETA_BINOMIAL:
        for l in range(1, Ml.shape[0]):
            lp += ptab[l, Ml[l]]
    elif kind == PRIOR_POISSON:
        lp = ptab[0, m] + sumterm
    return -(ll + lp)


@njit(cache=True)
def move_energy(r, a, cov, pos, neg, lengths, pterm, pred, uniq, istate, fstate, Ml,
                n_pos, n_neg, lik, kind, ptab):
    """Energy after removing member ``r`` and adding non-member ``a``."""
    tp = 0
    fp = 0
    W = pred.shape[0]
    for w in range(W):
        word = pred[w]
        if r >= 0:
            word &= ~(cov[r, w] & uniq[w])
        if a >= 0:
            word |= cov[a, w]
        tp += popcount(word & pos[w])
        fp += popcount(word & neg[w])
    m = istate[I_M]
    sumterm = fstate[F_SUMTERM]
    if r >= 0:
        m -= 1
        Ml[lengths[r]] -= 1
        sumterm -= pterm[r]
    if a >= 0:
        m += 1
        Ml[lengths[a]] += 1
        sumterm += pterm[a]
    e = energy(tp, fp, m, Ml, sumterm, n_pos, n_neg, lik, kind, ptab)
    if r >= 0:
        Ml[lengths[r]] += 1
    if a >= 0:
        Ml[lengths[a]] -= 1
    return e, tp, fp


@njit(cache=True)
def _cover(idx, delta, cov, cnt, pred, uniq, n_records):
    for w in range(cov.shape[1]):
        x = cov[idx, w]
        while x:
            b = np.int64(_cttz(x))
            x &= x - np.uint64(1)
            n = w * 64 + b
            if n >= n_records:
                break
            cnt[n] += delta
            bit = np.uint64(1) << np.uint64(b)
            c = cnt[n]
            if c > 0:
                pred[w] |= bit
            else:
                pred[w] &= ~bit
            if c == 1:
                uniq[w] |= bit
            else:
                uniq[w] &= ~bit


@njit(cache=True)
def apply_move(r, a, e, tp, fp, cov, lengths, pterm, in_set, members, where, cnt, pred, uniq,
               istate, fstate, Ml):
    n_records = cnt.shape[0]
    if r >= 0:
        _cover(r, -1, cov, cnt, pred, uniq, n_records)
        k = where[r]
        last = members[istate[I_M] - 1]
        members[k] = last
        where[last] = k
        where[r] = -1
        in_set[r] = False
        istate[I_M] -= 1
        Ml[lengths[r]] -= 1
        fstate[F_SUMTERM] -= pterm[r]
    if a >= 0:
        _cover(a, 1, cov, cnt, pred, uniq, n_records)
        members[istate[I_M]] = a
        where[a] = istate[I_M]
        in_set[a] = True
        istate[I_M] += 1
        Ml[lengths[a]] += 1
        fstate[F_SUMTERM] += pterm[a]
    istate[I_TP] = tp
    istate[I_FP] = fp
    fstate[F_E] = e


@njit(cache=True)
def _consider(e, r, a, best_e, best_r, best_a, ties, rng):
    """Keep a running argmin; exact ties resolved by reservoir sampling."""
    if e < best_e:
        return e, r, a, 1
    if e == best_e:
        ties += 1
        if randbelow(rng, ties) == 0:
            return e, r, a, ties
    return best_e, best_r, best_a, ties


@njit(cache=True)
def _scan_adds(cands, cov, pos, neg, lengths, pterm, in_set, pred, istate, fstate, Ml,
               n_pos, n_neg, lik, kind, ptab, best_e, best_r, best_a, ties, rng):
    """Best pure addition among ``cands``; same energies as ``move_energy(-1, j)``.

    Only newly covered records change the counts, and the prior change
    depends on the added pattern's length alone, so both are cheap here.
    """
    tp0 = istate[I_TP]
    fp0 = istate[I_FP]
    m = istate[I_M]
    L = Ml.shape[0]
    lp_add = np.zeros(L)
    if kind == PRIOR_BETA_BINOMIAL:
        base = 0.0
        for l in range(1, L):
            base += ptab[l, Ml[l]]
        for l in range(1, L):
            if Ml[l] + 1 < ptab.shape[1]:
                lp_add[l] = base - ptab[l, Ml[l]] + ptab[l, Ml[l] + 1]
            else:
                lp_add[l] = -np.inf
    elif kind == PRIOR_POISSON:
        lp_pois = ptab[0, m + 1] + fstate[F_SUMTERM]
    W = pred.shape[0]
    for k in range(cands.shape[0]):
        j = cands[k]
        if in_set[j]:
            continue
        dtp = 0
        dfp = 0
        for w in range(W):
            x = cov[j, w] & ~pred[w]
            dtp += popcount(x & pos[w])
            dfp += popcount(x & neg[w])
        tp = tp0 + dtp
        fp = fp0 + dfp
        tn = n_neg - fp
        fn = n_pos - tp
        ll = (lik[0, tp] + lik[1, fp] - lik[2, tp + fp]) + (lik[3, tn] + lik[4, fn] - lik[5, tn + fn]) + lik[6, 0]
        if kind == PRIOR_BETA_BINOMIAL:
            lp = lp_add[lengths[j]]
        elif kind == PRIOR_POISSON:
            lp = lp_pois + pterm[j]
        else:
            lp = 0.0
        best_e, best_r, best_a, ties = _consider(-(ll + lp), -1, j, best_e, best_r, best_a, ties, rng)
    return best_e, best_r, best_a, ties


@njit(cache=True)
def propose(action, explore_p, mode, cov, pos, neg, lengths, pterm, sub, sup_ptr, sup_idx, singles,
            in_set, members, pred, uniq, istate, fstate, Ml,
            n_pos, n_neg, lik, kind, ptab, rng):
    """Draw a neighbour; returns ``(feasible, r, a, energy, tp, fp)``."""
    P = cov.shape[0]
    m = istate[I_M]
    r = -1
    a = -1
    explore = uniform(rng) < explore_p
    best_e = np.inf
    ties = 0

    if mode == PATTERN_LEVEL:
        if action == COVERMORE:
            if m >= P:
                return False, -1, -1, 0.0, 0, 0
            if explore:
                a = randbelow(rng, P)
                while in_set[a]:
                    a = randbelow(rng, P)
            else:
                best_e, r, a, ties = _scan_adds(np.arange(P), cov, pos, neg, lengths, pterm, in_set, pred, istate,
                                                fstate, Ml, n_pos, n_neg, lik, kind, ptab, best_e, r, a, ties, rng)
        else:
            if m == 0:
                return False, -1, -1, 0.0, 0, 0
            if explore:
                r = members[randbelow(rng, m)]
            else:
                for k in range(m):
                    i = members[k]
                    e, _, _ = move_energy(i, -1, cov, pos, neg, lengths, pterm, pred, uniq, istate, fstate, Ml,
                                          n_pos, n_neg, lik, kind, ptab)
                    best_e, r, a, ties = _consider(e, i, -1, best_e, r, a, ties, rng)
    else:
        n_single = singles.shape[0]
        n_pairs_sub = 0
        n_pairs_sup = 0
        for k in range(m):
            i = members[k]
            n_pairs_sub += lengths[i]
            n_pairs_sup += sup_ptr[i + 1] - sup_ptr[i]
        free_singles = n_single - Ml[1]
        first = uniform(rng) < 0.5
        if action == COVERMORE:
            can = (m > 0, free_singles > 0)  # (drop a literal, add a singleton)
        else:
            can = (n_pairs_sup > 0, m > 0)  # (add a literal, drop a pattern)
        if first and can[0]:
            branch = 0
        elif (not first) and can[1]:
            branch = 1
        elif can[0]:
            branch = 0
        elif can[1]:
            branch = 1
        else:
            return False, -1, -1, 0.0, 0, 0

        if action == COVERMORE and branch == 0:
            if explore:
                t = randbelow(rng, n_pairs_sub)
                for k in range(m):
                    i = members[k]
                    if t < lengths[i]:
                        r = i
                        a = sub[i, t]
                        break
                    t -= lengths[i]
                if a >= 0 and in_set[a]:
                    a = -1
            else:
                for k in range(m):
                    i = members[k]
                    for t in range(lengths[i]):
                        j = sub[i, t]
                        if j >= 0 and in_set[j]:
                            j = -1
                        e, _, _ = move_energy(i, j, cov, pos, neg, lengths, pterm, pred, uniq, istate, fstate, Ml,
                                              n_pos, n_neg, lik, kind, ptab)
                        best_e, r, a, ties = _consider(e, i, j, best_e, r, a, ties, rng)
        elif action == COVERMORE:
            if explore:
                a = singles[randbelow(rng, n_single)]
                while in_set[a]:
                    a = singles[randbelow(rng, n_single)]
            else:
                best_e, r, a, ties = _scan_adds(singles, cov, pos, neg, lengths, pterm, in_set, pred, istate,
                                                fstate, Ml, n_pos, n_neg, lik, kind, ptab, best_e, r, a, ties, rng)
        elif branch == 0:
            if explore:
                t = randbelow(rng, n_pairs_sup)
                for k in range(m):
                    i = members[k]
                    width = sup_ptr[i + 1] - sup_ptr[i]
                    if t < width:
                        r = i
                        a = sup_idx[sup_ptr[i] + t]
                        break
                    t -= width
                if in_set[a]:
                    a = -1
            else:
                for k in range(m):
                    i = members[k]
                    for q in range(sup_ptr[i], sup_ptr[i + 1]):
                        j = sup_idx[q]
                        if in_set[j]:
                            j = -1
                        e, _, _ = move_energy(i, j, cov, pos, neg, lengths, pterm, pred, uniq, istate, fstate, Ml,
                                              n_pos, n_neg, lik, kind, ptab)
                        best_e, r, a, ties = _consider(e, i, j, best_e, r, a, ties, rng)
        else:
            if explore:
                r = members[randbelow(rng, m)]
            else:
                for k in range(m):
                    i = members[k]
                    e, _, _ = move_energy(i, -1, cov, pos, neg, lengths, pterm, pred, uniq, istate, fstate, Ml,
                                          n_pos, n_neg, lik, kind, ptab)
                    best_e, r, a, ties = _consider(e, i, -1, best_e, r, a, ties, rng)

    e, tp, fp = move_energy(r, a, cov, pos, neg, lengths, pterm, pred, uniq, istate, fstate, Ml,
                            n_pos, n_neg, lik, kind, ptab)
    return True, r, a, e, tp, fp


@njit(cache=True, nogil=True)
def run_chain(mode, cov, pos, neg, lengths, pterm, sub, sup_ptr, sup_idx, singles,
              n_pos, n_neg, lik, kind, ptab,
              in_set, members, where, cnt, pred, uniq, istate, fstate, Ml, best_members, rng,
              t_start, n_steps, explore_p, T0, stop_when_separated,
              trace_cur, trace_best, trace_acc):
    """Advance one chain by up to ``n_steps`` steps; returns the number taken."""
    for s in range(n_steps):
        tp = istate[I_TP]
        fp = istate[I_FP]
        fn = n_pos - tp
        n_wrong = fn + fp
        accepted = False
        if n_wrong == 0:
            if stop_when_separated:
                istate[I_SEPARATED] = 1
                return s
        else:
            # A uniform misclassified record is positive with probability fn / n_wrong.
            action = COVERMORE if randbelow(rng, n_wrong) < fn else COVERLESS
            ok, r, a, e, ntp, nfp = propose(action, explore_p, mode, cov, pos, neg, lengths, pterm, sub, sup_ptr,
                                            sup_idx, singles, in_set, members, pred, uniq, istate, fstate, Ml,
                                            n_pos, n_neg, lik, kind, ptab, rng)
            if ok:
                t = t_start + s + 1
                delta = e - fstate[F_E]
                if delta <= 0.0:
                    accepted = True
                else:
                    temp = T0 / math.log(1.0 + t)
                    accepted = uniform(rng) < math.exp(-delta / temp)
                if accepted:
                    apply_move(r, a, e, ntp, nfp, cov, lengths, pterm, in_set, members, where, cnt, pred, uniq,
                               istate, fstate, Ml)
                    if e < fstate[F_BEST_E]:
                        fstate[F_BEST_E] = e
                        m = istate[I_M]
                        best_members[:m] = members[:m]
                        istate[I_BEST_M] = m
        trace_cur[s] = fstate[F_E]
        trace_best[s] = fstate[F_BEST_E]
        trace_acc[s] = accepted
    return n_steps
