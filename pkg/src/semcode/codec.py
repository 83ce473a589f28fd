"""Integer lengths, canonical prefix codes, and bit-string encode/decode."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CorruptStreamError, InvalidLengthsError, InvalidSymbolError

KRAFT_SLACK = 1e-9
SNAP_TOL = 1e-9


def _kraft_exact(int_lengths) -> Fraction:
    return sum((Fraction(1, 2 ** int(l)) for l in int_lengths), Fraction(0))


def integer_lengths(real_lengths) -> list[int]:
    """Round real lengths up to integers.

    Values within ``SNAP_TOL`` above an integer are treated as that integer,
    so solver output such as ``1.0000000000002`` maps to 1. Alphabets with
    two or more symbols get at least 1 bit per symbol.
    """
    l = np.asarray(real_lengths, dtype=float).ravel()
    if l.size == 0:
        return []
    if not np.all(np.isfinite(l)) or np.any(l < -SNAP_TOL):
        raise InvalidLengthsError("real lengths must be finite and >= 0", "lengths")
    if math.fsum(np.exp2(-l)) > 1.0 + KRAFT_SLACK:
        raise InvalidLengthsError("real lengths violate the Kraft inequality", "lengths")
    floor = 0 if l.size == 1 else 1
    snapped = [max(floor, int(math.ceil(v - SNAP_TOL))) for v in l]
    if _kraft_exact(snapped) <= 1:
        return snapped
    plain = [max(floor, int(math.ceil(v))) for v in l]
    if _kraft_exact(plain) > 1:
        raise InvalidLengthsError("rounded lengths violate the Kraft inequality", "lengths")
    return plain


@dataclass(frozen=True)
class Codebook:
    """Canonical prefix code; ``codewords[i]`` belongs to symbol ``i``."""

    int_lengths: tuple[int, ...]
    codewords: tuple[str, ...]
    _decode_map: dict = field(default=None, repr=False, compare=False)

    @property
    def symbol_map(self) -> dict[int, str]:
        return dict(enumerate(self.codewords))

    @property
    def size(self) -> int:
        return len(self.codewords)

    def kraft_sum(self) -> Fraction:
        return _kraft_exact(self.int_lengths)

    def canonical_order(self) -> list[int]:
        return sorted(range(self.size), key=lambda i: (self.int_lengths[i], i))


def build_codebook(int_lengths) -> Codebook:
    lengths = [int(v) for v in int_lengths]
    if not lengths:
        raise InvalidLengthsError("empty length list", "lengths")
    if any(v < 0 for v in lengths) or (len(lengths) > 1 and any(v == 0 for v in lengths)):
        raise InvalidLengthsError("lengths must be >= 1 (0 only for a single symbol)", "lengths")
    if _kraft_exact(lengths) > 1:
        raise InvalidLengthsError("lengths violate the Kraft inequality", "lengths")
    order = sorted(range(len(lengths)), key=lambda i: (lengths[i], i))
    words = [""] * len(lengths)
    code = 0
    prev = lengths[order[0]]
    for pos, i in enumerate(order):
        if pos:
            code = (code + 1) << (lengths[i] - prev)
        prev = lengths[i]
        words[i] = format(code, f"0{lengths[i]}b") if lengths[i] else ""
    decode_map = {w: i for i, w in enumerate(words)}
    return Codebook(tuple(lengths), tuple(words), decode_map)


def is_prefix_free(codewords) -> bool:
    """Exhaustive pairwise check."""
    words = list(codewords)
    for i, a in enumerate(words):
        for j, b in enumerate(words):
            if i != j and b.startswith(a):
                return False
    return True


def encode(book: Codebook, symbols) -> str:
    words = book.codewords
    out = []
    for s in symbols:
        if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or not 0 <= s < len(words):
            raise InvalidSymbolError(f"symbol {s!r} outside alphabet of size {len(words)}", "symbol")
        out.append(words[s])
    return "".join(out)


def _window_table(book: Codebook):
    """Map every ``maxlen``-bit window to (symbol, codeword length)."""
    maxlen = max(book.int_lengths)
    table = [None] * (1 << maxlen)
    for sym, word in enumerate(book.codewords):
        pad = maxlen - len(word)
        base = int(word, 2) << pad
        for j in range(1 << pad):
            table[base + j] = (sym, len(word))
    return maxlen, table


def decode(book: Codebook, bits: str, count: int | None = None) -> list[int]:
    """Inverse of :func:`encode`.

    ``count`` is required only for a single-symbol book, whose codeword is
    empty and therefore carries no length information.
    """
    if book.size == 1:
        if bits:
            raise CorruptStreamError("single-symbol code carries no bits")
        return [0] * (count or 0)
    if bits.strip("01"):
        raise CorruptStreamError("stream contains characters other than 0 and 1")
    maxlen = max(book.int_lengths)
    out = []
    n = len(bits)
    start = 0
    if maxlen <= 20:
        maxlen, table = _window_table(book)
        padded = bits + "0" * maxlen
        while start < n:
            hit = table[int(padded[start:start + maxlen], 2)]
            if hit is None or start + hit[1] > n:
                raise CorruptStreamError(f"undecodable bits at offset {start}")
            out.append(hit[0])
            start += hit[1]
    else:
        lookup = book._decode_map
        while start < n:
            for end in range(start + 1, min(start + maxlen, n) + 1):
                sym = lookup.get(bits[start:end])
                if sym is not None:
                    out.append(sym)
                    start = end
                    break
            else:
                raise CorruptStreamError(f"undecodable bits at offset {start}")
    if count is not None and len(out) != count:
        raise CorruptStreamError(f"decoded {len(out)} symbols, expected {count}")
    return out
