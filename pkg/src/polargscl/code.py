"""Polar transform, code definition, mixing factor, and codebook enumeration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

# Guards for the exhaustive enumeration helpers.
MAX_ENUM_K = 20
MAX_PARTITION_N = 24


def as_bits(bits, length=None) -> np.ndarray:
    """Coerce a bit sequence to a 1-D uint8 array of 0/1 values.

    Raises ValueError if any entry is not 0 or 1, or if `length` is given
    and does not match.
    """
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D bit sequence, got shape {arr.shape}")
    out = arr.astype(np.uint8)
    if not np.array_equal(out, arr) or np.any(out > 1):
        raise ValueError("bit values must be 0 or 1")
    if length is not None and out.size != length:
        raise ValueError(f"expected {length} bits, got {out.size}")
    return out


def _transform_rows(u: np.ndarray) -> np.ndarray:
    """Butterfly transform applied to the last axis of a 0/1 uint8 array."""
    x = np.ascontiguousarray(u, dtype=np.uint8).copy()
    n = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < n:
        x = x.reshape(lead + (-1, 2 * h))
        x[..., :h] ^= x[..., h:]
        h *= 2
    return x.reshape(lead + (n,))


def polar_transform(u) -> np.ndarray:
    """Multiply a length-n bit vector by the n x n binary polarization
    matrix (the m-fold Kronecker power of [[1,0],[1,1]]), over GF(2).

    No bit-reversal permutation is applied. Runs in O(n log n) via the
    butterfly recursion and is an involution: applying it twice returns
    the input.

    Parameters
    ----------
    u : array-like
        Bit vector whose length is a power of two.

    Returns
    -------
    ndarray
        The transformed bit vector x = u * G_n.
    """
    x = as_bits(u)
    n = x.size
    if n == 0 or n & (n - 1) != 0:
        raise ValueError(f"length must be a power of two, got {n}")
    return _transform_rows(x)


@dataclass(frozen=True)
class PolarCode:
    """An (n, k) polar code given by its block length and frozen index set.

    Attributes
    ----------
    n : int
        Block length, a power of two.
    frozen : tuple of int
        Sorted 1-based indices of frozen input positions.
    frozen_values : tuple of int
        Bit value for each frozen position (parallel to `frozen`),
        all-zero by default.

    Derived quantities: `k` (dimension), `m` (log2 n), `s` (1-based index
    of the last frozen bit, 0 if none), `gamma` (number of information
    bits preceding the last frozen bit), and `list_size_ml = 2**gamma`
    (the list size at which the surviving prefixes at step s enumerate
    the whole codebook partition).
    """

    n: int
    frozen: tuple = ()
    frozen_values: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.n <= 0 or self.n & (self.n - 1) != 0:
            raise ValueError(f"n must be a power of two, got {self.n}")
        frozen = tuple(sorted(int(i) for i in self.frozen))
        if len(set(frozen)) != len(frozen):
            raise ValueError("frozen set contains duplicate indices")
        if frozen and (frozen[0] < 1 or frozen[-1] > self.n):
            raise ValueError(f"frozen indices must lie in 1..{self.n}")
        if self.frozen_values is None:
            values = (0,) * len(frozen)
        else:
            values = tuple(int(v) for v in self.frozen_values)
            if len(values) != len(frozen):
                raise ValueError("frozen_values length must match frozen set size")
            if any(v not in (0, 1) for v in values):
                raise ValueError("frozen_values must be 0 or 1")
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "frozen_values", values)

    @property
    def m(self) -> int:
        return self.n.bit_length() - 1

    @property
    def k(self) -> int:
        return self.n - len(self.frozen)

    @property
    def s(self) -> int:
        """1-based index of the last frozen bit; 0 for the rate-1 code."""
        return self.frozen[-1] if self.frozen else 0

    @property
    def gamma(self) -> int:
        """Number of information bits preceding the last frozen bit."""
        if self.s == 0:
            return 0
        return self.k - (self.n - self.s)

    @property
    def list_size_ml(self) -> int:
        return 1 << self.gamma

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        """Boolean mask over 0-based positions, True where frozen."""
        mask = np.zeros(self.n, dtype=bool)
        if self.frozen:
            mask[np.array(self.frozen) - 1] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def info_positions(self) -> np.ndarray:
        """0-based information positions in ascending order."""
        pos = np.flatnonzero(~self.frozen_mask)
        pos.setflags(write=False)
        return pos

    @cached_property
    def base_input(self) -> np.ndarray:
        """Length-n input template with frozen values filled in, zeros elsewhere."""
        u = np.zeros(self.n, dtype=np.uint8)
        if self.frozen:
            u[np.array(self.frozen) - 1] = self.frozen_values
        u.setflags(write=False)
        return u


def encode(info, code: PolarCode) -> np.ndarray:
    """Encode k information bits into a length-n codeword.

    Information bits are scattered into the non-frozen positions in index
    order, frozen positions carry their fixed values, and the result is
    passed through the polar transform.
    """
    bits = as_bits(info, length=code.k)
    u = code.base_input.copy()
    u[code.info_positions] = bits
    return _transform_rows(u)


def mixing_factor(code: PolarCode) -> int:
    """Number of non-frozen indices strictly below the last frozen index.

    Equals k - (n - s) for s > 0 and 0 for the rate-1 code.
    """
    if code.s == 0:
        return 0
    return int(np.count_nonzero(code.info_positions + 1 < code.s))


def _free_suffixes(width: int) -> np.ndarray:
    """All 2^width bit rows of the given width, in lexicographic order."""
    count = 1 << width
    rows = np.arange(count, dtype=np.uint32)[:, None]
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint32)
    return ((rows >> shifts) & 1).astype(np.uint8)


def partition_subset(code: PolarCode, prefix) -> np.ndarray:
    """Codewords whose input agrees with `prefix` on the first s positions.

    The prefix must be consistent with the code's frozen values. The
    2^(n-s) codewords obtained by ranging over the free tail positions
    form one cell of the codebook partition; over all valid prefixes the
    cells are disjoint and cover the codebook.

    Returns
    -------
    ndarray, shape (2^(n-s), n)
        One codeword per row, ordered by the lexicographic value of the
        free tail bits.
    """
    if code.n > MAX_PARTITION_N:
        raise ValueError(f"partition enumeration limited to n <= {MAX_PARTITION_N}")
    s = code.s
    pre = as_bits(prefix, length=s)
    mask_s = code.frozen_mask[:s]
    if not np.array_equal(pre[mask_s], code.base_input[:s][mask_s]):
        raise ValueError("prefix is inconsistent with the frozen values")
    tail = _free_suffixes(code.n - s)
    u = np.empty((tail.shape[0], code.n), dtype=np.uint8)
    u[:, :s] = pre
    u[:, s:] = tail
    return _transform_rows(u)


def enumerate_codebook(code: PolarCode):
    """Yield all 2^k codewords exactly once, in information-word
    lexicographic order."""
    for row in codebook_matrix(code):
        yield row


@lru_cache(maxsize=32)
def codebook_matrix(code: PolarCode) -> np.ndarray:
    """Full codebook as a (2^k, n) array; rows follow info-word lex order.

    Cached per code; guarded to k <= 20.
    """
    if code.k > MAX_ENUM_K:
        raise ValueError(f"codebook enumeration limited to k <= {MAX_ENUM_K}")
    info = _free_suffixes(code.k)
    u = np.tile(code.base_input, (info.shape[0], 1))
    u[:, code.info_positions] = info
    mat = _transform_rows(u)
    mat.setflags(write=False)
    return mat


def save_code(code: PolarCode, path, metadata: dict | None = None) -> None:
    """Write a code definition (and optional metadata) as JSON."""
    doc = {
        "n": code.n,
        "k": code.k,
        "frozen": list(code.frozen),
        "frozen_values": list(code.frozen_values),
    }
    if metadata:
        doc["metadata"] = metadata
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_code(path) -> PolarCode:
    """Load a code definition from JSON, validating its invariants.

    Expected fields: n, k, frozen (1-based indices), and optionally
    frozen_values (default all-zero). Extra fields are ignored.
    """
    with open(path) as fh:
        doc = json.load(fh)
    code = PolarCode(
        n=int(doc["n"]),
        frozen=tuple(doc["frozen"]),
        frozen_values=tuple(doc["frozen_values"]) if "frozen_values" in doc else None,
    )
    if "k" in doc and int(doc["k"]) != code.k:
        raise ValueError(
            f"inconsistent definition: k={doc['k']} but n - |frozen| = {code.k}"
        )
    return code
