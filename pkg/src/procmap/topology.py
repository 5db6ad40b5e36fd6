"""Hierarchical machine model and interchangeable PE-distance representations.

A machine is described by two equal-length sequences: arities ``a_1:...:a_l``
(cores per processor, processors per node, ...) and link costs
``d_1:...:d_l`` (cost of one communication inside each level).  The total PE
count is the product of the arities, and PE ids are numbered so that the ids
inside every module at every level are consecutive.

Four interchangeable representations answer distance queries:

* ``matrix``            - the full k x k table, O(1) lookups, O(k^2) memory.
* ``division``          - O(l) integer divisions per query, O(l) memory.
* ``stored_division``   - precomputed quotients, O(l) comparisons, O(k*l) memory.
* ``binary``            - one packed label word per PE; a query XORs two labels
                          and locates the most significant set bit (the
                          hardware count-leading-zeros idiom), O(k) memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class HierarchyFormatError(ValueError):
    """A hierarchy description string or field is malformed."""


class LabelWidthError(ValueError):
    """The packed binary labels would not fit in a 64-bit word."""


_LABEL_WORD_BITS = 64


@dataclass(frozen=True)
class HierarchySpec:
    """Arity and link-cost sequences of a homogeneous machine hierarchy."""

    arities: tuple[int, ...]
    link_costs: tuple[int, ...]

    def __post_init__(self):
        if len(self.arities) == 0:
            raise HierarchyFormatError("hierarchy needs at least one level")
        if len(self.arities) != len(self.link_costs):
            raise HierarchyFormatError(
                f"{len(self.arities)} arities but {len(self.link_costs)} link costs"
            )
        for a in self.arities:
            if not isinstance(a, int) or a < 1:
                raise HierarchyFormatError(f"arity {a!r} must be a positive integer")
        for d in self.link_costs:
            if not isinstance(d, int) or d < 1:
                raise HierarchyFormatError(f"link cost {d!r} must be a positive integer")

    @classmethod
    def parse(cls, arity_text: str, cost_text: str) -> "HierarchySpec":
        """Parse colon-separated sequences, e.g. ("4:16:8", "1:10:100")."""
        return cls(_parse_sequence(arity_text, "arity"), _parse_sequence(cost_text, "cost"))

    @property
    def levels(self) -> int:
        return len(self.arities)

    @cached_property
    def k(self) -> int:
        return math.prod(self.arities)

    @cached_property
    def module_divisors(self) -> tuple[int, ...]:
        """Divisor for the module index at each level: (1, a1, a1*a2, ...)."""
        divisors = [1]
        for a in self.arities[:-1]:
            divisors.append(divisors[-1] * a)
        return tuple(divisors)

    @cached_property
    def section_bits(self) -> int:
        """Bits per label section: ceil(log2(max arity))."""
        return max(a - 1 for a in self.arities).bit_length()

    @property
    def label_bits(self) -> int:
        return self.levels * self.section_bits

    def level_of(self, b: int, b_prime: int) -> int:
        """Highest level whose module indices differ; 0 for identical PEs."""
        if b == b_prime:
            return 0
        divisors = self.module_divisors
        for i in range(self.levels - 1, -1, -1):
            if b // divisors[i] != b_prime // divisors[i]:
                return i + 1
        raise AssertionError("distinct PEs must differ at level 1")


def _parse_sequence(text: str, what: str) -> tuple[int, ...]:
    parts = text.split(":")
    values = []
    for part in parts:
        part = part.strip()
        if not part.isdigit() or int(part) < 1:
            raise HierarchyFormatError(
                f"bad {what} sequence {text!r}: {part!r} is not a positive integer"
            )
        values.append(int(part))
    return tuple(values)


def encode_binary_label(spec: HierarchySpec, b: int) -> int:
    """Pack the per-level remainders of PE id `b` into one label word.

    Section i (least significant first) holds the i-th remainder of repeated
    division of b by a_1, ..., a_l, each `section_bits` wide.
    """
    _check_label_width(spec)
    s = spec.section_bits
    label = 0
    t = b
    for i, a in enumerate(spec.arities):
        label |= (t % a) << (i * s)
        t //= a
    return label


def _check_label_width(spec: HierarchySpec) -> None:
    if spec.label_bits > _LABEL_WORD_BITS:
        raise LabelWidthError(
            f"binary labels need {spec.label_bits} bits "
            f"({spec.levels} levels x {spec.section_bits}), "
            f"limit is {_LABEL_WORD_BITS}"
        )


class DistanceOracle:
    """Common behavior of the four distance representations."""

    variant = "abstract"

    def __init__(self, spec: HierarchySpec):
        self.spec = spec
        self.k = spec.k

    def _check_ids(self, b: int, b_prime: int) -> None:
        if not (0 <= b < self.k and 0 <= b_prime < self.k):
            raise IndexError(f"PE ids ({b}, {b_prime}) out of range for k={self.k}")

    def distance(self, b: int, b_prime: int) -> int:
        raise NotImplementedError

    def distance_pairs(self, b: np.ndarray, b_prime: np.ndarray) -> np.ndarray:
        """Vectorized distances for broadcastable arrays of PE ids."""
        raise NotImplementedError

    def distance_matrix(self) -> np.ndarray:
        """All-pairs distances computed through this variant's own logic."""
        k = self.k
        out = np.empty((k, k), dtype=np.int64)
        cols = np.arange(k)
        chunk = max(1, min(k, 8 * 1024 * 1024 // max(k, 1)))
        for lo in range(0, k, chunk):
            hi = min(k, lo + chunk)
            rows = np.arange(lo, hi)
            out[lo:hi] = self.distance_pairs(rows[:, None], cols[None, :])
        return out

    @property
    def storage_cells(self) -> int:
        """Number of stored table entries (words), for memory assertions."""
        raise NotImplementedError


class ExplicitMatrixOracle(DistanceOracle):
    """Full k x k distance table.

    Built once by walking the module tree (each pair of sibling submodules at
    level i is assigned d_i), which makes it an independent reference for the
    arithmetic variants.
    """

    variant = "matrix"

    def __init__(self, spec: HierarchySpec):
        super().__init__(spec)
        k = spec.k
        dtype = np.int64 if max(spec.link_costs) > 2**31 - 1 else np.int32
        matrix = np.zeros((k, k), dtype=dtype)
        self._fill(matrix, 0, k, spec.levels)
        matrix.flags.writeable = False
        self._matrix = matrix

    def _fill(self, matrix: np.ndarray, lo: int, hi: int, level: int) -> None:
        if level == 0:
            return
        child = (hi - lo) // self.spec.arities[level - 1]
        d = self.spec.link_costs[level - 1]
        for s1 in range(lo, hi, child):
            for s2 in range(lo, hi, child):
                if s1 != s2:
                    matrix[s1 : s1 + child, s2 : s2 + child] = d
        for s1 in range(lo, hi, child):
            self._fill(matrix, s1, s1 + child, level - 1)

    def distance(self, b: int, b_prime: int) -> int:
        self._check_ids(b, b_prime)
        return int(self._matrix[b, b_prime])

    def distance_pairs(self, b, b_prime):
        return self._matrix[b, b_prime]

    def distance_matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def storage_cells(self) -> int:
        return self.k * self.k


class DivisionOracle(DistanceOracle):
    """Repeated integer division of the two PE ids, top level first."""

    variant = "division"

    def __init__(self, spec: HierarchySpec):
        super().__init__(spec)
        self._divisors = spec.module_divisors
        self._costs = spec.link_costs

    def distance(self, b: int, b_prime: int) -> int:
        self._check_ids(b, b_prime)
        if b == b_prime:
            return 0
        divisors = self._divisors
        for i in range(len(divisors) - 1, -1, -1):
            h = divisors[i]
            if b // h != b_prime // h:
                return self._costs[i]
        raise AssertionError("distinct PEs must differ at level 1")

    def distance_pairs(self, b, b_prime):
        level = np.zeros(np.broadcast(b, b_prime).shape, dtype=np.int8)
        for i, h in enumerate(self._divisors):
            level = np.where((b // h) != (b_prime // h), np.int8(i + 1), level)
        costs = np.asarray((0,) + self._costs, dtype=np.int64)
        return costs[level]

    @property
    def storage_cells(self) -> int:
        return self.spec.levels


class StoredDivisionOracle(DistanceOracle):
    """All quotients precomputed: table[i][b] = b // divisor(i)."""

    variant = "stored_division"

    def __init__(self, spec: HierarchySpec):
        super().__init__(spec)
        self._costs = spec.link_costs
        self._table = [
            [b // h for b in range(spec.k)] for h in spec.module_divisors
        ]
        self._table_np = np.asarray(self._table, dtype=np.int64)

    def distance(self, b: int, b_prime: int) -> int:
        self._check_ids(b, b_prime)
        if b == b_prime:
            return 0
        table = self._table
        for i in range(len(table) - 1, -1, -1):
            row = table[i]
            if row[b] != row[b_prime]:
                return self._costs[i]
        raise AssertionError("distinct PEs must differ at level 1")

    def distance_pairs(self, b, b_prime):
        level = np.zeros(np.broadcast(b, b_prime).shape, dtype=np.int8)
        for i in range(self.spec.levels):
            row = self._table_np[i]
            level = np.where(row[b] != row[b_prime], np.int8(i + 1), level)
        costs = np.asarray((0,) + self._costs, dtype=np.int64)
        return costs[level]

    @property
    def storage_cells(self) -> int:
        return self.spec.levels * self.k


class BinaryLabelOracle(DistanceOracle):
    """One packed label word per PE; queries XOR labels and locate the MSB.

    The section index of the most significant set bit of ``label_b XOR
    label_b'`` is the level at which the two PEs part ways.  Scalar queries
    use ``int.bit_length`` (the count-leading-zeros idiom); vectorized queries
    compare against section thresholds, which is equivalent because section t
    starts at bit s*t.
    """

    variant = "binary"

    def __init__(self, spec: HierarchySpec):
        _check_label_width(spec)
        super().__init__(spec)
        self._s = spec.section_bits
        self._costs = spec.link_costs
        self._labels = [encode_binary_label(spec, b) for b in range(spec.k)]
        dtype = np.int32 if spec.label_bits <= 31 else np.uint64
        self._labels_np = np.asarray(self._labels, dtype=dtype)
        # section_starts[t] = first XOR value whose MSB lies in section t, so
        # counting the thresholds <= XOR yields the differing level directly
        self._section_starts = np.asarray(
            [1 << (self._s * t) for t in range(spec.levels)], dtype=dtype
        )
        cost_dtype = np.int64 if max(spec.link_costs) > 2**31 - 1 else np.int32
        self._cost_lut = np.asarray((0,) + spec.link_costs, dtype=cost_dtype)

    def distance(self, b: int, b_prime: int) -> int:
        self._check_ids(b, b_prime)
        labels = self._labels
        x = labels[b] ^ labels[b_prime]
        if x == 0:
            return 0
        return self._costs[(x.bit_length() - 1) // self._s]

    def distance_pairs(self, b, b_prime):
        labels = self._labels_np
        x = labels[b] ^ labels[b_prime]
        level = np.zeros(x.shape, dtype=np.int8)
        for start in self._section_starts:
            np.add(level, x >= start, out=level, casting="unsafe")
        return self._cost_lut[level]

    def label(self, b: int) -> int:
        return self._labels[b]

    @property
    def storage_cells(self) -> int:
        return self.k


ORACLE_VARIANTS = ("matrix", "division", "stored_division", "binary")

_ORACLE_CLASSES = {
    "matrix": ExplicitMatrixOracle,
    "division": DivisionOracle,
    "stored_division": StoredDivisionOracle,
    "binary": BinaryLabelOracle,
}


def build_oracle(spec: HierarchySpec, variant: str = "binary") -> DistanceOracle:
    """Construct the distance representation named by `variant`."""
    try:
        cls = _ORACLE_CLASSES[variant]
    except KeyError:
        raise HierarchyFormatError(
            f"unknown oracle variant {variant!r}, expected one of {ORACLE_VARIANTS}"
        ) from None
    return cls(spec)
