"""Binary Merkle trees: fully populated (slot) and incremental fixed-depth (era).

All trees hash with a :class:`~zkhashlab.permutations.Hasher`; its ``calls``
counter is the instrumentation used to check work bounds (``2^d - 1`` hashes
for a build, ``d`` for an insert or a verify).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .field import FieldElement, FieldLike, fe, from_hex, to_hex
from .permutations import Hasher

ZERO = FieldElement(0)
LEFT, RIGHT = 0, 1
DEFAULT_ROOT_HISTORY = 32


class CapacityError(ValueError):
    pass


class MerkleIndexError(IndexError):
    pass


def zero_hashes(hasher: Hasher, depth: int) -> list[FieldElement]:
    """Roots of all-zero subtrees, level 0 (a zero leaf) through ``depth``."""
    zs = [ZERO]
    for _ in range(depth):
        zs.append(hasher.hash2(zs[-1], zs[-1]))
    return zs


@dataclass(frozen=True)
class MerklePath:
    siblings: tuple[FieldElement, ...]
    position_bits: tuple[int, ...]  # 0: node is a left child, 1: right child
    leaf_index: int

    @property
    def depth(self) -> int:
        return len(self.siblings)

    def to_json(self) -> str:
        return json.dumps(
            {"siblings": [to_hex(s) for s in self.siblings], "bits": list(self.position_bits), "index": self.leaf_index}
        )

    @classmethod
    def from_json(cls, text: str) -> "MerklePath":
        doc = json.loads(text)
        bits = tuple(int(b) for b in doc["bits"])
        if any(b not in (0, 1) for b in bits):
            raise ValueError("path bits must be 0 or 1")
        return cls(tuple(from_hex(s) for s in doc["siblings"]), bits, int(doc["index"]))


@dataclass
class MerkleTree:
    depth: int
    levels: list[list[FieldElement]]  # levels[0] = leaves, levels[depth] = [root]
    hasher: Hasher

    @property
    def leaves(self) -> list[FieldElement]:
        return self.levels[0]

    @property
    def root(self) -> FieldElement:
        return self.levels[-1][0]


def build(leaves: Sequence[FieldLike], hasher: Hasher, depth: int) -> MerkleTree:
    """Fully populated tree over ``leaves`` padded with zero leaves to ``2^depth``."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    n = 1 << depth
    if len(leaves) > n:
        raise CapacityError(f"{len(leaves)} leaves do not fit a depth-{depth} tree")
    level = [fe(x) for x in leaves] + [ZERO] * (n - len(leaves))
    levels = [level]
    for _ in range(depth):
        level = [hasher.hash2(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
    return MerkleTree(depth, levels, hasher)


def prove(tree: MerkleTree, index: int) -> MerklePath:
    if not 0 <= index < len(tree.leaves):
        raise MerkleIndexError(f"leaf index {index} out of range for depth {tree.depth}")
    siblings, bits = [], []
    i = index
    for level in tree.levels[:-1]:
        siblings.append(level[i ^ 1])
        bits.append(i & 1)
        i >>= 1
    return MerklePath(tuple(siblings), tuple(bits), index)


def fold(leaf: FieldLike, path: MerklePath, hasher: Hasher) -> FieldElement:
    node = fe(leaf)
    for sib, bit in zip(path.siblings, path.position_bits):
        node = hasher.hash2(sib, node) if bit else hasher.hash2(node, sib)
    return node


def verify(leaf: FieldLike, root: FieldLike, path: MerklePath, hasher: Hasher) -> bool:
    """True iff folding ``leaf`` up ``path`` reproduces ``root`` (``d`` hash calls)."""
    if len(path.siblings) != len(path.position_bits) or any(b not in (0, 1) for b in path.position_bits):
        return False
    return fold(leaf, path, hasher) == fe(root)


def verify_composed(
    leaf: FieldLike,
    path_slot: MerklePath,
    r_slot: FieldLike,
    path_era: MerklePath,
    r_era: FieldLike,
    hasher: Hasher,
) -> bool:
    """Membership of ``leaf`` in a slot whose root is itself a leaf of the era."""
    return verify(leaf, r_slot, path_slot, hasher) and verify(r_slot, r_era, path_era, hasher)


def join_paths(inner: MerklePath, outer: MerklePath) -> MerklePath:
    """The equivalent path in the flattened tree of depth ``inner.depth + outer.depth``."""
    return MerklePath(
        inner.siblings + outer.siblings,
        inner.position_bits + outer.position_bits,
        (outer.leaf_index << inner.depth) | inner.leaf_index,
    )


def sparse_path(leaves: Sequence[FieldLike], index: int, depth: int, hasher: Hasher, zeros=None) -> MerklePath:
    """Path for ``leaves[index]`` in a depth-``depth`` tree whose tail is zero leaves.

    Uses the zero-subtree roots for the empty part, so the cost is
    ``O(len(leaves) + depth)`` hashes instead of ``2^depth``.
    """
    n = len(leaves)
    if n > 1 << depth:
        raise CapacityError(f"{n} leaves do not fit a depth-{depth} tree")
    if not 0 <= index < n:
        raise MerkleIndexError(f"leaf index {index} out of range ({n} leaves)")
    zeros = zeros if zeros is not None else zero_hashes(hasher, depth)
    level = [fe(x) for x in leaves]
    siblings, bits = [], []
    i = index
    for h in range(depth):
        j = i ^ 1
        siblings.append(level[j] if j < len(level) else zeros[h])
        bits.append(i & 1)
        if len(level) % 2:
            level = level + [zeros[h]]
        level = [hasher.hash2(level[k], level[k + 1]) for k in range(0, len(level), 2)]
        i >>= 1
    return MerklePath(tuple(siblings), tuple(bits), index)


class IncrementalMerkleTree:
    """Fixed-depth tree filled left to right, storing only the frontier.

    Keeps a ring of the most recent ``root_history`` roots so that proofs
    against a slightly stale root still verify.  Mutation is not
    thread-safe; callers serialize inserts.
    """

    def __init__(self, depth: int, hasher: Hasher, root_history: int = DEFAULT_ROOT_HISTORY):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.depth = depth
        self.hasher = hasher
        self.zero_hashes = zero_hashes(hasher, depth)
        self.frontier = list(self.zero_hashes[:depth])
        self.next_index = 0
        self.root = self.zero_hashes[depth]
        self.roots = deque([self.root], maxlen=root_history)

    @property
    def capacity(self) -> int:
        return 1 << self.depth

    @property
    def is_full(self) -> bool:
        return self.next_index >= self.capacity

    def insert(self, leaf: FieldLike) -> FieldElement:
        if self.is_full:
            raise CapacityError(f"depth-{self.depth} tree is full")
        node = fe(leaf)
        i = self.next_index
        for h in range(self.depth):
            if i & 1:
                node = self.hasher.hash2(self.frontier[h], node)
            else:
                self.frontier[h] = node
                node = self.hasher.hash2(node, self.zero_hashes[h])
            i >>= 1
        self.next_index += 1
        self.root = node
        self.roots.append(node)
        return node

    def is_known_root(self, root: FieldLike) -> bool:
        return fe(root) in self.roots


def insert(tree: IncrementalMerkleTree, leaf: FieldLike) -> FieldElement:
    return tree.insert(leaf)


def read_leaf_file(path) -> list[FieldElement]:
    with open(path) as fh:
        return [from_hex(line) for line in fh if line.strip()]


def write_leaf_file(path, leaves: Sequence[FieldLike]) -> None:
    with open(path, "w") as fh:
        for x in leaves:
            fh.write(to_hex(x) + "\n")
