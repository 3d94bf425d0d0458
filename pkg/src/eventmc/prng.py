"""Deterministic, skippable pseudo-random number streams.

A 63-bit linear congruential generator gives every particle history its own
reproducible stream, independent of execution mode, worker count, or event
scheduling.  The recurrence is

    s' = (MULTIPLIER * s + 1) mod 2**63,    u = s' / 2**63

and streams are carved out of the single period by jumping ahead in
O(log n) steps.  Each (batch, particle) pair owns a window of ``STRIDE``
draws; a history that consumes a full window is a hard error, not a silent
bias.

This module is the plain-Python reference implementation (exact integer
arithmetic).  The compiled transport kernels carry their own copy of the
same recurrence; ``tests/test_prng.py`` pins the two against each other.
"""

from __future__ import annotations

MODULUS = 1 << 63
MULTIPLIER = 2806196910506780709
INCREMENT = 1

#: Draws reserved per (batch, particle) stream.
STRIDE = 152917

#: Base offset of auxiliary (non-particle) streams, far past any particle
#: window a desk-scale run can reach.
AUX_STREAM_OFFSET = 1 << 62

_MASK = MODULUS - 1
_INV_MOD = 2.0**-63
_BELOW_ONE = 1.0 - 2.0**-53


def next_uniform(state: int) -> tuple[float, int]:
    """Advance the generator once; return (uniform in [0,1), new state)."""
    s = (MULTIPLIER * state + INCREMENT) & _MASK
    u = s * _INV_MOD
    if u >= 1.0:
        # float rounding can carry states within 2**9 of the modulus up to
        # exactly 1.0; pin those to the largest double below 1.
        u = _BELOW_ONE
    return u, s


def skip_ahead(state: int, n: int) -> int:
    """State after ``n`` sequential transitions, computed in O(log n).

    Standard LCG log-skip: repeated squaring of the (multiplier, increment)
    pair modulo 2**63.
    """
    if n < 0:
        raise ValueError("skip count must be non-negative")
    acc_mult, acc_add = 1, 0
    cur_mult, cur_add = MULTIPLIER, INCREMENT
    n &= _MASK  # the generator is full-period mod 2**63
    while n > 0:
        if n & 1:
            acc_mult = (acc_mult * cur_mult) & _MASK
            acc_add = (acc_add * cur_mult + cur_add) & _MASK
        cur_add = (cur_add * (cur_mult + 1)) & _MASK
        cur_mult = (cur_mult * cur_mult) & _MASK
        n >>= 1
    return (acc_mult * state + acc_add) & _MASK


def seed_stream(master_seed: int, batch_index: int, particle_index: int,
                particles_per_batch: int) -> int:
    """Initial state of the stream owned by one (batch, particle) pair.

    Windows are ``STRIDE`` draws long and laid out contiguously, so distinct
    (batch, particle) pairs never overlap as long as no history consumes a
    full window (enforced by the engine's draw counter).
    """
    offset = (batch_index * particles_per_batch + particle_index) * STRIDE
    return skip_ahead(master_seed & _MASK, offset)


def batch_stream(master_seed: int, batch_index: int) -> int:
    """Stream used for batch-level draws (fission-bank resampling).

    Allocated past ``AUX_STREAM_OFFSET`` so it cannot collide with any
    particle window of a desk-scale run.
    """
    return skip_ahead(master_seed & _MASK, AUX_STREAM_OFFSET + batch_index * STRIDE)
