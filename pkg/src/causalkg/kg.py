"""Triple parsing, id dictionaries and the sparse binary adjacency tensor."""

from __future__ import annotations

import logging
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import EmptyInput, InverseRelationWarning, MalformedLine, OutOfBounds

log = logging.getLogger(__name__)

SPLITS = ("train.txt", "valid.txt", "test.txt")


class Triple(NamedTuple):
    head: int
    rel: int
    tail: int


class ParseResult(NamedTuple):
    triples: list[Triple]
    duplicates: int


@dataclass
class KgIndex:
    """Dense id assignment for entity and relation strings.

    Ids are handed out first-come-first-served, so parsing the same file
    into a fresh index always produces the same maps.
    """

    entity_to_id: dict[str, int] = field(default_factory=dict)
    relation_to_id: dict[str, int] = field(default_factory=dict)

    @property
    def n_e(self) -> int:
        return len(self.entity_to_id)

    @property
    def n_r(self) -> int:
        return len(self.relation_to_id)

    def entity(self, label: str) -> int:
        return self.entity_to_id.setdefault(label, len(self.entity_to_id))

    def relation(self, label: str) -> int:
        return self.relation_to_id.setdefault(label, len(self.relation_to_id))

    def entity_labels(self) -> list[str]:
        return _labels_by_id(self.entity_to_id)

    def relation_labels(self) -> list[str]:
        return _labels_by_id(self.relation_to_id)

    def validate(self, triples: Iterable[Triple]) -> None:
        for t in triples:
            if not (0 <= t.head < self.n_e and 0 <= t.tail < self.n_e and 0 <= t.rel < self.n_r):
                raise OutOfBounds(f"triple {tuple(t)} outside n_e={self.n_e}, n_r={self.n_r}")


def _labels_by_id(mapping: dict[str, int]) -> list[str]:
    labels = [""] * len(mapping)
    for label, i in mapping.items():
        labels[i] = label
    return labels


def parse_triples(source: str | Iterable[str], index: KgIndex) -> ParseResult:
    """Parse ``head<TAB>relation<TAB>tail`` lines, extending ``index`` in place.

    ``source`` is either the whole text or an iterable of lines. Blank lines
    are skipped; repeated lines are dropped and counted.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    seen: set[Triple] = set()
    triples: list[Triple] = []
    duplicates = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedLine(line_no, line)
        h, r, t = (p.strip() for p in parts)
        triple = Triple(index.entity(h), index.relation(r), index.entity(t))
        if triple in seen:
            duplicates += 1
            continue
        seen.add(triple)
        triples.append(triple)
    if not triples:
        raise EmptyInput("no valid triples in input")
    if duplicates:
        log.info("dropped %d duplicate triples", duplicates)
    return ParseResult(triples, duplicates)


def read_split(path: str | Path, index: KgIndex) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse_triples(fh, index)


class AdjacencyTensor:
    """Binary tensor over (head, relation, tail) stored as sorted coordinates.

    Entries not stored are zero (closed world). Instances are not mutated
    after construction and may be shared freely between readers.
    """

    def __init__(self, n_e: int, n_r: int, coords: np.ndarray):
        self.n_e = int(n_e)
        self.n_r = int(n_r)
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        if coords.size and (
            coords.min() < 0 or coords[:, [0, 2]].max() >= self.n_e or coords[:, 1].max() >= self.n_r
        ):
            raise OutOfBounds("coordinate outside tensor bounds")
        keys = np.unique(self._encode(coords))
        self._keys = keys
        self.coords = self._decode(keys)
        self.coords.setflags(write=False)
        self._keys.setflags(write=False)

    def _encode(self, coords: np.ndarray) -> np.ndarray:
        return (coords[:, 0] * self.n_r + coords[:, 1]) * self.n_e + coords[:, 2]

    def _decode(self, keys: np.ndarray) -> np.ndarray:
        tail = keys % self.n_e
        rest = keys // self.n_e
        return np.stack([rest // self.n_r, rest % self.n_r, tail], axis=1)

    def __len__(self) -> int:
        return len(self._keys)

    @property
    def present(self) -> set[tuple[int, int, int]]:
        return {tuple(int(v) for v in row) for row in self.coords}

    def contains(self, heads, rels, tails) -> np.ndarray:
        """Vectorized membership; returns a boolean array."""
        c = np.stack([np.asarray(heads), np.asarray(rels), np.asarray(tails)], axis=-1).reshape(-1, 3)
        keys = self._encode(c.astype(np.int64))
        if not len(self._keys):
            return np.zeros(len(keys), dtype=bool)
        pos = np.minimum(np.searchsorted(self._keys, keys), len(self._keys) - 1)
        return self._keys[pos] == keys

    def __getitem__(self, idx: tuple[int, int, int]) -> int:
        h, r, t = idx
        if not (0 <= h < self.n_e and 0 <= t < self.n_e and 0 <= r < self.n_r):
            raise OutOfBounds(f"{idx} outside tensor bounds")
        return int(self.contains([h], [r], [t])[0])

    def __contains__(self, idx) -> bool:
        try:
            return bool(self[idx])
        except OutOfBounds:
            return False

    def triples(self) -> Iterator[Triple]:
        for h, r, t in self.coords.tolist():
            yield Triple(h, r, t)

    def relation_counts(self) -> np.ndarray:
        return np.bincount(self.coords[:, 1], minlength=self.n_r)

    def n_entities_used(self) -> int:
        return len(np.union1d(self.coords[:, 0], self.coords[:, 2]))

    def to_lines(self, index: KgIndex) -> list[str]:
        ent, rel = index.entity_labels(), index.relation_labels()
        return [f"{ent[h]}\t{rel[r]}\t{ent[t]}" for h, r, t in self.coords.tolist()]


def build_tensor(triples: list[Triple], index: KgIndex) -> AdjacencyTensor:
    index.validate(triples)
    coords = np.array([tuple(t) for t in triples], dtype=np.int64).reshape(-1, 3)
    return AdjacencyTensor(index.n_e, index.n_r, coords)


def inverse_relation_pairs(tensor: AdjacencyTensor, threshold: float = 0.9) -> list[tuple[int, int, float]]:
    """Relation pairs (r, r2) where at least ``threshold`` of r's triples occur reversed under r2."""
    by_pair: dict[tuple[int, int], list[int]] = defaultdict(list)
    for h, r, t in tensor.coords.tolist():
        by_pair[(h, t)].append(r)
    overlap: Counter[tuple[int, int]] = Counter()
    for h, r, t in tensor.coords.tolist():
        for r2 in by_pair.get((t, h), ()):
            if r2 != r:
                overlap[(r, r2)] += 1
    counts = tensor.relation_counts()
    found = []
    for (r, r2), k in sorted(overlap.items()):
        frac = k / counts[r]
        if frac >= threshold:
            found.append((r, r2, frac))
    return found


def check_inverse_relations(tensor: AdjacencyTensor, index: KgIndex | None = None) -> list[tuple[int, int, float]]:
    pairs = inverse_relation_pairs(tensor)
    if pairs:
        names = index.relation_labels() if index is not None else None
        shown = ", ".join(
            f"{names[r] if names else r}~{names[r2] if names else r2} ({frac:.0%})" for r, r2, frac in pairs[:5]
        )
        warnings.warn(f"{len(pairs)} likely inverse relation pair(s): {shown}", InverseRelationWarning, stacklevel=2)
    return pairs


@dataclass
class Dataset:
    index: KgIndex
    train: list[Triple]
    tensor: AdjacencyTensor
    duplicates: int = 0


def load_dataset(directory: str | Path) -> Dataset:
    """Load ``train.txt`` (required) plus any ``valid.txt``/``test.txt``.

    Only the training split feeds the tensor; the other splits merely
    extend the dictionaries, with unseen labels given fresh ids.
    """
    directory = Path(directory)
    train_path = directory / "train.txt"
    if not train_path.is_file():
        raise FileNotFoundError(f"{train_path} not found")
    index = KgIndex()
    train = read_split(train_path, index)
    n_e, n_r = index.n_e, index.n_r
    tensor = build_tensor(train.triples, index)
    for name in SPLITS[1:]:
        path = directory / name
        if path.is_file():
            read_split(path, index)
    if index.n_e != n_e or index.n_r != n_r:
        log.info("held-out splits added %d entities, %d relations", index.n_e - n_e, index.n_r - n_r)
        tensor = AdjacencyTensor(index.n_e, index.n_r, tensor.coords)
    check_inverse_relations(tensor, index)
    return Dataset(index, train.triples, tensor, train.duplicates)


def write_dictionaries(index: KgIndex, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, labels in (("entities.tsv", index.entity_labels()), ("relations.tsv", index.relation_labels())):
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, label in enumerate(labels):
                fh.write(f"{i}\t{label}\n")
        paths.append(path)
    return paths


def synthetic_kg(
    n_entities: int = 2000,
    n_relations: int = 11,
    n_triples: int = 10000,
    n_blocks: int = 8,
    seed: int = 0,
) -> list[tuple[str, str, str]]:
    """Generate a block-structured KG as string triples.

    Entities are split into blocks; each relation links a random source
    block to a random target block, with a heavy-tailed relation frequency
    so that "most-frequent" selection is meaningful. No relation is the
    exact inverse of another.
    """
    rng = np.random.default_rng([seed, 97])
    blocks = rng.integers(0, n_blocks, size=n_entities)
    members = [np.flatnonzero(blocks == b) for b in range(n_blocks)]
    members = [m if len(m) else np.arange(n_entities) for m in members]
    weights = rng.pareto(1.5, size=n_relations) + 1.0
    weights /= weights.sum()
    per_rel = np.maximum(1, np.round(weights * n_triples).astype(int))
    out = []
    seen = set()
    for r in range(n_relations):
        src, dst = rng.integers(0, n_blocks, size=2)
        heads = rng.choice(members[src], size=per_rel[r])
        tails = rng.choice(members[dst], size=per_rel[r])
        for h, t in zip(heads.tolist(), tails.tolist()):
            if h == t or (h, r, t) in seen or (t, r, h) in seen:
                continue
            seen.add((h, r, t))
            out.append((f"e{h}", f"r{r}", f"e{t}"))
    return out


def write_triples(triples: Iterable[tuple[str, str, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in triples:
            fh.write(f"{h}\t{r}\t{t}\n")
