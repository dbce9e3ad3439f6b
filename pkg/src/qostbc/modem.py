"""Gray-mapped M-PSK and square M-QAM with hard-decision demapping.

PSK points sit on the unit circle at angles ``2*pi*m/M`` and carry the
binary-reflected Gray label of the ring index ``m``.  Square QAM uses the
``{+-1, +-3, ...}`` grid with an independent Gray label per axis and is
scaled to unit average energy.  Bit words are MSB-first uint8 arrays.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Modulation",
    "modulation",
    "psk_distance_spectrum",
    "count_bit_errors",
]


def _gray(m: np.ndarray) -> np.ndarray:
    return m ^ (m >> 1)


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    b = bits.shape[-1]
    weights = 1 << np.arange(b - 1, -1, -1)
    return np.tensordot(bits.astype(np.int64), weights, axes=([-1], [0]))


def _int_to_bits(vals: np.ndarray, b: int) -> np.ndarray:
    shifts = np.arange(b - 1, -1, -1)
    return ((vals[..., None] >> shifts) & 1).astype(np.uint8)


class Modulation:
    """A PSK or square-QAM constellation with Gray bit labels.

    Parameters
    ----------
    family : str
        ``"psk"`` or ``"qam"``.
    order : int
        Constellation size, a power of two; QAM additionally requires an
        even number of bits per symbol (square grid).
    """

    def __init__(self, family: str, order: int):
        b = int(np.log2(order))
        if 2**b != order or order < 2:
            raise ValueError(f"M={order} is not a power of two >= 2")
        if family == "qam" and b % 2:
            raise ValueError(f"square QAM needs an even number of bits, got M={order}")
        if family not in ("psk", "qam"):
            raise ValueError(f"unknown family {family!r}")
        self.family = family
        self.order = order
        self.bits_per_symbol = b
        m = np.arange(order)
        if family == "psk":
            self.points = np.exp(2j * np.pi * m / order)
            self.labels = _gray(m)
        else:
            side = int(round(np.sqrt(order)))
            self._side = side
            self._scale = np.sqrt(3.0 / (2.0 * (order - 1)))
            lev = (2 * np.arange(side) - (side - 1)) * self._scale
            i_idx, q_idx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
            self.points = (lev[i_idx] + 1j * lev[q_idx]).ravel()
            self.labels = (_gray(i_idx) * side + _gray(q_idx)).ravel()
        # label -> point lookup
        self._point_of_label = np.empty(order, dtype=complex)
        self._point_of_label[self.labels] = self.points

    def __repr__(self):
        return f"{self.order}-{self.family.upper()}"

    def map_bits(self, bits) -> np.ndarray:
        """Map bit words of shape ``(..., bits_per_symbol)`` to symbols."""
        bits = np.asarray(bits)
        if bits.shape[-1] != self.bits_per_symbol:
            raise ValueError(
                f"expected {self.bits_per_symbol} bits per symbol, got {bits.shape[-1]}"
            )
        return self._point_of_label[_bits_to_int(bits)]

    def demap(self, symbols) -> np.ndarray:
        """Nearest-point hard decision; returns ``(..., bits_per_symbol)`` bits."""
        symbols = np.asarray(symbols, dtype=complex)
        if self.family == "psk":
            sector = np.round(np.angle(symbols) * self.order / (2 * np.pi)).astype(int)
            labels = self.labels[np.mod(sector, self.order)]
        else:
            side = self._side
            i_idx = self._axis_index(symbols.real)
            q_idx = self._axis_index(symbols.imag)
            labels = _gray(i_idx) * side + _gray(q_idx)
        return _int_to_bits(labels, self.bits_per_symbol)

    def _axis_index(self, coord):
        side = self._side
        idx = np.round((coord / self._scale + side - 1) / 2.0).astype(int)
        return np.clip(idx, 0, side - 1)


_ALIASES = {"bpsk": ("psk", 2), "qpsk": ("psk", 4)}


def modulation(name: str) -> Modulation:
    """Build a modulation from its CLI name, e.g. ``"psk8"`` or ``"qam64"``."""
    key = name.strip().lower()
    if key in _ALIASES:
        return Modulation(*_ALIASES[key])
    for fam in ("psk", "qam"):
        if key.startswith(fam):
            try:
                order = int(key[len(fam) :])
            except ValueError:
                break
            return Modulation(fam, order)
    raise ValueError(f"unrecognised modulation {name!r}")


def psk_distance_spectrum(m: int) -> np.ndarray:
    """Mean Hamming distance between Gray labels ``k`` sectors apart.

    ``d[k-1]`` is the average number of bit errors caused by a hard PSK
    decision landing ``k`` sectors away from the transmitted one,
    ``k = 1..M-1``.  Rounding ties (half-integers) are resolved away from
    zero; either choice gives the same value since both sides of a tie are
    equidistant.
    """
    b = int(np.log2(m))
    if 2**b != m or m < 2:
        raise ValueError(f"M={m} is not a power of two >= 2")

    def _round_half_away(x):
        return np.sign(x) * np.floor(np.abs(x) + 0.5)

    k = np.arange(1, m)
    d = 2.0 * np.abs(k / m - _round_half_away(k / m))
    for i in range(2, b + 1):
        d = d + 2.0 * np.abs(k / 2**i - _round_half_away(k / 2**i))
    return d


def count_bit_errors(tx_bits, rx_bits) -> int:
    """Hamming distance between two equally shaped bit arrays."""
    tx = np.asarray(tx_bits)
    rx = np.asarray(rx_bits)
    if tx.shape != rx.shape:
        raise ValueError(f"shape mismatch {tx.shape} vs {rx.shape}")
    return int(np.sum(tx != rx))
