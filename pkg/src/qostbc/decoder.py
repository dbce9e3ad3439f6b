"""Orthogonal symbol-by-symbol decoding via nested linear combining.

Decoding proceeds in three phases, all matrix-free (no inversion):

1.  Per receive antenna the received block is combined with the encoded
    channel minors, giving two half-length vectors that depend on disjoint
    halves of the symbol vector, plus the half-size *reduced* channel
    matrix.  Vectors and reduced matrices are summed across antennas.
2.  Each aggregate vector is repeatedly multiplied by the transpose of the
    companion reduced matrix and split along a fixed index permutation;
    the permuted real products are block-diagonal, so every split halves
    the number of coupled symbols.  The reduced matrices follow the same
    split, shrinking to scalars.
3.  The terminal scalars normalise the fully decoupled estimates, which
    are then reordered back to natural symbol order.

The block-diagonality of the permuted real products is checked at every
stage; a violation raises :class:`DecompositionError` since it can only
come from a construction bug, not from noise (the matrices involved depend
on the channel only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import encoded_channel_minors, EncodedChannel
from .codes import _is_power_of_two

__all__ = [
    "PermutationPair",
    "ReducedChannel",
    "DecodeResult",
    "DecompositionError",
    "DegenerateChannelError",
    "permutation_indexes",
    "first_stage",
    "reduce_channel",
    "higher_order_reduce",
    "symbol_order",
    "decode",
    "decode_batch",
    "combiner_weights",
    "apply_combiner",
]

# Relative tolerance for the block-diagonality of permuted real products.
# Loose enough for double precision at K=512, tight enough to catch sign
# errors in the construction.
STRUCTURE_TOL = 1e-8

# The nested chain multiplies channel-derived matrices log2(K)-1 times and
# the surviving per-symbol gain shrinks relative to the products' bulk
# magnitude, so plain doubles run out of mantissa around K=128.  Blocks of
# this size and above are decoded in extended (80-bit) precision.
EXTENDED_PRECISION_K = 128


class DecompositionError(RuntimeError):
    """A permuted real product failed to be block-diagonal."""


class DegenerateChannelError(ValueError):
    """All channel gains are zero; nothing can be recovered."""


@dataclass(frozen=True)
class PermutationPair:
    """Complementary 1-based index sets splitting ``1..N`` in half."""

    p0: np.ndarray
    p1: np.ndarray


def permutation_indexes(n: int) -> PermutationPair:
    """Index split describing the real quasi-orthogonality pattern.

    With ``p(x) = (x + sum_{j>=1} floor((x-1)/2^j)) mod 2`` (the sum runs
    up to ``log2(N)-1`` terms), ``p0`` collects the ``x`` with ``p(x)=1``
    and ``p1`` the rest.  The ``p0`` columns (rows) of a reduced channel
    matrix are real-orthogonal to its ``p1`` columns (rows).

    The sets are prefix-consistent: the first ``N/2`` entries of each set
    for size ``N`` are the sets for size ``N/2``.
    """
    if not _is_power_of_two(n) or n < 2:
        raise ValueError(f"N={n} must be a power of two >= 2")
    x = np.arange(1, n + 1)
    p = x.copy()
    for j in range(1, int(np.log2(n))):
        p = p + (x - 1) // (2**j)
    p = p % 2
    return PermutationPair(x[p == 1], x[p == 0])


def first_stage(r, enc: EncodedChannel):
    """Split one received block into two decoupled half combinations.

    Parameters
    ----------
    r : array_like
        Received block of length ``K`` for a single antenna.
    enc : EncodedChannel

    Returns
    -------
    (r1, r2) : tuple of np.ndarray
        Length ``K/2`` combinations depending only on the first/second
        half of the symbol vector, respectively.
    """
    r = np.asarray(r, dtype=complex)
    k = enc.k
    if r.shape != (k,):
        raise ValueError(f"received vector must have length {k}")
    r1, r2 = _first_stage_batch(r[None, None, :], enc.h1[None, None], enc.h2[None, None])
    return r1[0, 0], r2[0, 0]


def _first_stage_batch(r, h1, h2):
    # r: (B, nr, K); h1, h2: (B, nr, K/2, K) -> two (B, nr, K/2)
    k = r.shape[-1]
    h = k // 2
    rt, rb = r[..., :h], r[..., h:]
    # columns 1..K/2 of each minor combine into the first-half estimate,
    # columns K/2+1..K into the second-half estimate
    r1 = np.einsum("...ij,...i->...j", h1[..., :h].conj(), rt) + np.einsum(
        "...ij,...i->...j", h2[..., :h], rb.conj()
    )
    r2 = np.einsum("...ij,...i->...j", h1[..., h:].conj(), rt) + np.einsum(
        "...ij,...i->...j", h2[..., h:], rb.conj()
    )
    return r1, r2


@dataclass(frozen=True)
class ReducedChannel:
    """Order-``n`` reduced channel matrix (size ``K/2^n``)."""

    order: int
    matrix: np.ndarray


def reduce_channel(enc: EncodedChannel) -> ReducedChannel:
    """First-order reduced channel matrix ``conj(H1 H1^H + H2 H2^H) / 2``.

    The result is a ``K/2`` square matrix with the "combining" manifold
    structure and real diagonal entries equal to the total channel energy;
    it maps each symbol half to the corresponding first-stage combination.
    """
    m = _reduce_batch(enc.h1[None], enc.h2[None])[0]
    return ReducedChannel(1, m)


def _reduce_batch(h1, h2):
    # h1, h2: (..., K/2, K) -> (..., K/2, K/2)
    g = h1 @ np.conj(np.swapaxes(h1, -1, -2)) + h2 @ np.conj(np.swapaxes(h2, -1, -2))
    return np.conj(g) / 2.0


def _split_blocks(g, q0, q1, order, where=""):
    """Check block-diagonality of ``g`` under (q0, q1) and return the blocks."""
    off = max(
        float(np.abs(g[..., q0[:, None], q1[None, :]]).max()),
        float(np.abs(g[..., q1[:, None], q0[None, :]]).max()),
    )
    scale = float(np.abs(g).max())
    if off > STRUCTURE_TOL * max(scale, 1e-300):
        raise DecompositionError(
            f"permuted real product not block-diagonal at order {order}{where}: "
            f"off-block {off:.3e} vs scale {scale:.3e}"
        )
    return g[..., q0[:, None], q0[None, :]], g[..., q1[:, None], q1[None, :]]


def higher_order_reduce(reduced: ReducedChannel):
    """One reduction step: split along the permutation and cross-multiply.

    At order 1 the real product ``M^T M`` of the reduced matrix is formed;
    at higher orders the matrix is itself already such a product and is
    split directly.  The (p0, p1) off-blocks must vanish; the diagonal
    blocks ``B0`` and ``B1`` satisfy ``B0^T B1 = B1^T B0``, which becomes
    the next-order reduced matrix.

    Returns
    -------
    (b0, b1, next_reduced) : tuple
        The two diagonal blocks and the next :class:`ReducedChannel`.
    """
    m = reduced.matrix
    n = m.shape[-1]
    if n < 2:
        raise ValueError("matrix is already scalar")
    g = m.T @ m if reduced.order == 1 else m
    pair = permutation_indexes(n)
    b0, b1 = _split_blocks(g, pair.p0 - 1, pair.p1 - 1, reduced.order)
    return b0, b1, ReducedChannel(reduced.order + 1, b0.T @ b1)


def symbol_order(k: int) -> np.ndarray:
    """Symbol index (1-based) carried by each raw decoder output position.

    Starts from the two columns ``[1..K/2]`` and ``[K/2+1..K]`` and splits
    every column into its p0-prefix and p1-prefix rows at each stage, the
    same schedule the decoder applies to the combined vectors.
    """
    if not _is_power_of_two(k) or k < 2:
        raise ValueError(f"K={k} must be a power of two >= 2")
    cols = [np.arange(1, k // 2 + 1), np.arange(k // 2 + 1, k + 1)]
    if k > 2:
        pair = permutation_indexes(k // 2)
        for i in range(1, int(np.log2(k))):
            take = k // 2 ** (i + 1)
            q0, q1 = pair.p0[:take] - 1, pair.p1[:take] - 1
            cols = [c[q] for c in cols for q in (q0, q1)]
    return np.concatenate(cols)


@dataclass(frozen=True)
class DecodeResult:
    """Soft estimates in natural order plus the combining gain.

    ``gain`` is the terminal normalisation scalar within the rescaled
    chain; the absolute combining gain is ``gain * exp(log_scale)`` (kept
    in log form because it overflows a double for large blocks).
    ``raw_estimates`` are the decoupled outputs before reordering and
    before the terminal division.
    """

    estimates: np.ndarray
    gain: float
    log_scale: float
    raw_estimates: np.ndarray


def decode_batch(received, channels, k: int = None, dtype=None, refine=None):
    """Vectorised decoder over a leading batch of independent blocks.

    Parameters
    ----------
    received : array_like
        ``(B, K, n_r)`` received blocks.
    channels : array_like
        ``(B, n_r, n_t)`` channel gains, one vector per antenna and block.
    k : int, optional
        Block size; defaults to ``received.shape[1]``.
    dtype : numpy dtype, optional
        Working precision of the combining chain.  Defaults to complex128
        below ``EXTENDED_PRECISION_K`` and extended precision at or above.
    refine : int, optional
        Number of residual-correction passes.  The decoder is a fixed
        linear map of the received block, so re-decoding the modelling
        residual contracts the conditioning error of the deep stages
        quadratically; the default applies two passes for ``K >= 64``.

    Returns
    -------
    (estimates, gain, log_scale, raw) : tuple of np.ndarray
        ``(B, K)`` estimates in natural order, ``(B,)`` terminal gains and
        log normalisation scales, ``(B, K)`` raw pre-ordering outputs.
    """
    received = np.asarray(received)
    channels = np.asarray(channels)
    if received.ndim != 3 or channels.ndim != 3:
        raise ValueError("received must be (B, K, n_r) and channels (B, n_r, n_t)")
    nbatch, kk, n_r = received.shape
    if k is None:
        k = kk
    if dtype is None:
        dtype = np.complex128 if k < EXTENDED_PRECISION_K else np.clongdouble
    if refine is None:
        refine = 2 if k >= 64 else 0
    received = received.astype(dtype)
    channels = channels.astype(dtype)
    if kk != k or channels.shape[0] != nbatch or channels.shape[1] != n_r:
        raise ValueError("received/channels dimensions disagree")
    if channels.shape[2] > k:
        raise ValueError(f"n_t={channels.shape[2]} exceeds K={k}")
    energy = np.sum(np.abs(channels) ** 2, axis=(1, 2))
    if np.any(energy == 0):
        raise DegenerateChannelError("all channel gains are zero")

    h1, h2 = encoded_channel_minors(channels, k)  # (B, nr, K/2, K)
    estimates, gain, log_scale, raw = _combining_chain(received, h1, h2, k, dtype)
    for _ in range(refine):
        top = np.einsum("bnij,bj->bni", h1, estimates)
        bot = np.einsum("bnij,bj->bni", h2, np.conj(estimates))
        model = np.transpose(np.concatenate([top, bot], axis=-1), (0, 2, 1))
        delta, _, _, _ = _combining_chain(received - model, h1, h2, k, dtype)
        estimates = estimates + delta
    return (
        np.asarray(estimates, dtype=np.complex128),
        np.asarray(gain, dtype=float),
        np.asarray(log_scale, dtype=float),
        np.asarray(raw, dtype=np.complex128),
    )


def _combining_chain(received, h1, h2, k, dtype):
    """One pass of the nested combining given precomputed minors."""
    nbatch = received.shape[0]
    r = np.transpose(received, (0, 2, 1))  # (B, nr, K)
    r1, r2 = _first_stage_batch(r, h1, h2)
    # antenna summation in fixed index order (reproducible reduction)
    vecs = np.stack([r1.sum(axis=1), r2.sum(axis=1)], axis=1)  # (B, 2, K/2)
    m1 = _reduce_batch(h1, h2).sum(axis=1)  # (B, K/2, K/2)
    m2 = m1.copy()

    def _normalise(m1, m2, vecs, log_scale):
        nrm = np.linalg.norm(m1, axis=(1, 2))
        inv = 1.0 / nrm
        return (
            m1 * inv[:, None, None],
            m2 * inv[:, None, None],
            vecs * inv[:, None, None],
            log_scale + np.log(nrm.astype(float)),
        )

    log_scale = np.zeros(nbatch)
    m1, m2, vecs, log_scale = _normalise(m1, m2, vecs, log_scale)

    if k > 2:
        pair = permutation_indexes(k // 2)
        for i in range(1, int(np.log2(k))):
            take = k // 2 ** (i + 1)
            q0, q1 = pair.p0[:take] - 1, pair.p1[:take] - 1
            w = np.empty_like(vecs)
            # even columns carry m1-type combinations and are advanced by
            # m2^T, odd columns the other way round; both give the same
            # next-order product by commutation
            w[:, 0::2] = np.einsum("blm,bcl->bcm", m2, vecs[:, 0::2])
            w[:, 1::2] = np.einsum("blm,bcl->bcm", m1, vecs[:, 1::2])
            nxt = np.empty((nbatch, 2 * vecs.shape[1], take), dtype=dtype)
            nxt[:, 0::2] = w[..., q0]
            nxt[:, 1::2] = w[..., q1]
            vecs = nxt
            ghat = np.einsum("blm,bln->bmn", m1, m2)
            # the off-blocks are algebraic zeros, so any residual must be
            # judged against the magnitude of the factors that formed the
            # product, not against the (possibly tiny) product itself
            off = np.maximum(
                np.abs(ghat[:, q0[:, None], q1[None, :]]).reshape(nbatch, -1).max(axis=1),
                np.abs(ghat[:, q1[:, None], q0[None, :]]).reshape(nbatch, -1).max(axis=1),
            )
            fscale = np.linalg.norm(m1, axis=(1, 2)) * np.linalg.norm(m2, axis=(1, 2))
            if np.any(off > STRUCTURE_TOL * fscale):
                worst = float((off / fscale).max())
                raise DecompositionError(
                    f"permuted product not block-diagonal at order {i} (K={k}): "
                    f"relative off-block {worst:.3e}"
                )
            m1 = ghat[:, q0[:, None], q0[None, :]]
            m2 = ghat[:, q1[:, None], q1[None, :]]
            # doubling of the accumulated scale before adding this stage's
            # normalisation: the matrix chain squares per stage
            log_scale = 2.0 * log_scale
            m1, m2, vecs, log_scale = _normalise(m1, m2, vecs, log_scale)

    raw = vecs[..., 0]  # (B, K)
    t1 = m1[:, 0, 0]
    t2 = m2[:, 0, 0]
    scal = np.where(np.arange(k) % 2 == 0, t1[:, None], t2[:, None])
    order = symbol_order(k)
    estimates = np.empty((nbatch, k), dtype=dtype)
    estimates[:, order - 1] = raw / scal
    return estimates, t1.real, log_scale, raw


def decode(received, channels, k: int = None, dtype=None, refine=None) -> DecodeResult:
    """Decode one received block (possibly from several receive antennas).

    Parameters
    ----------
    received : array_like
        ``(K,)`` or ``(K, n_r)`` received samples.
    channels : array_like
        ``(n_t,)`` or ``(n_r, n_t)`` channel gains (length ``n_t <= K``).
    k : int, optional
        Block size; inferred from ``received`` when omitted.
    dtype : numpy dtype, optional
        Working precision override, see :func:`decode_batch`.

    Returns
    -------
    DecodeResult
        In the noiseless case ``estimates`` equals the transmitted symbol
        vector to numerical precision.
    """
    received = np.asarray(received, dtype=complex)
    if received.ndim == 1:
        received = received[:, None]
    channels = np.atleast_2d(np.asarray(channels, dtype=complex))
    est, gain, log_scale, raw = decode_batch(
        received[None], channels[None], k, dtype, refine
    )
    return DecodeResult(est[0], float(gain[0]), float(log_scale[0]), raw[0])


def combiner_weights(channels, k: int):
    """Flattened single-step combining weights for a fixed channel.

    The decoder is a fixed linear map of ``(r, conj(r))`` once the channel
    is fixed, so probing it with basis vectors ``e_j`` and ``1j * e_j``
    recovers per-symbol weight pairs ``(F1, F2)`` with

        estimate_k = sum_i  F1[:, k, i]^H r[:, i]  +  F2[:, k, i]^T conj(r[:, i])

    reproducing :func:`decode` exactly (terminal normalisation included).

    Returns
    -------
    (f1, f2) : tuple of np.ndarray
        Arrays of shape ``(K, K, n_r)`` indexed by (sample, symbol, antenna).
    """
    channels = np.atleast_2d(np.asarray(channels, dtype=complex))
    n_r = channels.shape[0]
    nprobe = k * n_r
    probes = np.zeros((2 * nprobe, k, n_r), dtype=complex)
    for i in range(n_r):
        for j in range(k):
            probes[i * k + j, j, i] = 1.0
            probes[nprobe + i * k + j, j, i] = 1.0j
    chans = np.broadcast_to(channels, (2 * nprobe,) + channels.shape)
    est, _, _, _ = decode_batch(probes, chans, k)
    a = est[:nprobe].reshape(n_r, k, k)  # response to e_j: (antenna, sample, symbol)
    b = est[nprobe:].reshape(n_r, k, k)  # response to 1j * e_j
    f1 = np.conj((a - 1j * b) / 2.0).transpose(1, 2, 0)
    f2 = ((a + 1j * b) / 2.0).transpose(1, 2, 0)
    return f1, f2


def apply_combiner(f1, f2, received) -> np.ndarray:
    """Evaluate the probed single-step combiner on a received block."""
    received = np.asarray(received, dtype=complex)
    if received.ndim == 1:
        received = received[:, None]
    return np.einsum("jki,ji->k", np.conj(f1), received) + np.einsum(
        "jki,ji->k", f2, np.conj(received)
    )
