"""Compiled event loop for one chunk of renewal cycles.

Per-delivery output columns (one row per first successful delivery):

    Y, S, t_ext, i0, first_age, first_a, last_age   float64
    n_gen, n_tx, n_committed                        int64

``first_a`` is the lifetime ``C + I + T`` of the cycle's first generated
update, which is an unconditional draw of ``A``; ``last_age`` is ``C + I`` of
the delivered update.
"""

import numpy as np
from numba import njit

from ._rng import exponential, uniform

THRESHOLD = 0
WINDOW = 1
PROB = 2

OK = 0
OVERFLOW = 1

N_FLOAT_COLS = 7
N_INT_COLS = 3


@njit(cache=True, nogil=True)
def _draw_sc(s, sc_kind, sc_vals, p1):
    u = uniform(s)
    if sc_kind == 0:
        return sc_vals[0] if u < p1 else sc_vals[1]
    n = sc_vals.shape[0]
    idx = int(u * n)
    if idx >= n:
        idx = n - 1
    return sc_vals[idx]


@njit(cache=True, nogil=True)
def run_chunk(kind, feedback, W, B, pTx, lam, pe, D,
              sc_kind, sc_vals, p1, n_deliveries, state, max_events):
    fcols = np.zeros((N_FLOAT_COLS, n_deliveries))
    icols = np.zeros((N_INT_COLS, n_deliveries), dtype=np.int64)
    Y, S, T_EXT, I0, FIRST_AGE, FIRST_A, LAST_AGE = 0, 1, 2, 3, 4, 5, 6
    N_GEN, N_TX, N_COMMITTED = 0, 1, 2

    t = 0.0
    last_delivery = 0.0
    j = 0
    r = exponential(state, lam)
    t += r
    cur_i0 = r
    gen_in_cycle = 0
    tx_in_cycle = 0
    committed = 0
    events = 0

    while True:
        # energy in hand funds the S/C of a new update
        gen_start = t
        if gen_in_cycle == 0:
            fcols[I0, j] = cur_i0
        gen_in_cycle += 1
        events += 1
        if events > max_events:
            return fcols, icols, j, OVERFLOW
        t += _draw_sc(state, sc_kind, sc_vals, p1)
        r = exponential(state, lam)
        t += r
        age = t - gen_start
        if gen_in_cycle == 1:
            fcols[FIRST_AGE, j] = age

        go = age <= W
        if go:
            committed += 1
            if kind == PROB:
                go = uniform(state) < pTx
        delivered = False
        delivered_at = 0.0
        last_tx_end = 0.0
        attempts = 0
        while go:
            events += 1
            if events > max_events:
                return fcols, icols, j, OVERFLOW
            attempts += 1
            tx_in_cycle += 1
            t += D
            last_tx_end = t
            success = uniform(state) >= pe
            if success and not delivered:
                delivered = True
                delivered_at = t
                fcols[Y, j] = t - last_delivery
                fcols[S, j] = t - gen_start
                fcols[LAST_AGE, j] = age
                if gen_in_cycle == 1:
                    fcols[FIRST_A, j] = t - gen_start
                icols[N_GEN, j] = gen_in_cycle
                icols[N_COMMITTED, j] = committed
                last_delivery = t
                if feedback:
                    break
            r = exponential(state, lam)
            t += r
            if kind == THRESHOLD:
                go = t - gen_start <= W
            elif kind == WINDOW:
                go = attempts < B
            else:
                go = uniform(state) < pTx

        if delivered:
            if feedback:
                r = exponential(state, lam)
                t += r
            else:
                fcols[T_EXT, j] = last_tx_end - delivered_at
            cur_i0 = r
            icols[N_TX, j] = tx_in_cycle
            j += 1
            gen_in_cycle = 0
            tx_in_cycle = 0
            committed = 0
            events = 0
            if j == n_deliveries:
                return fcols, icols, j, OK
        elif gen_in_cycle == 1:
            fcols[FIRST_A, j] = t - gen_start
