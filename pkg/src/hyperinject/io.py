"""Dataset files and report serialization.

A dataset is a set of sibling files sharing a stem:

``<stem>.hgr``
    hMETIS-style structure. First non-comment line ``M N``, then ``M``
    lines of whitespace-separated 1-indexed node ids. Lines starting with
    ``%`` are comments.
``<stem>.features.csv``
    ``N`` comma-separated rows of floats.
``<stem>.labels.txt``
    optional; one integer per line, ``-1`` for unlabeled nodes. An optional
    leading ``# classes=C`` line pins the class count.
``<stem>.split.txt``
    optional; one of ``train``/``val``/``test``/``none`` per line.
``<stem>.origin.txt``
    optional, written for attacked graphs; one ``node hyperedge`` pair per
    injected node (both 1-indexed).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CrossFileCountMismatch, NonFiniteValue, ParseError, ValidationFailure
from .hypergraph import SPLITS, AttackedHypergraph, Hypergraph, build_incidence, validate

SPLIT_TOKENS = ("train", "val", "test", "none")
SUFFIXES = {
    "structure": ".hgr",
    "features": ".features.csv",
    "labels": ".labels.txt",
    "split": ".split.txt",
    "origin": ".origin.txt",
}


@dataclass(frozen=True)
class DatasetBundle:
    structure: Path
    features: Path
    labels: Path | None = None
    split: Path | None = None
    origin: Path | None = None

    @classmethod
    def from_stem(cls, stem, must_exist=True) -> "DatasetBundle":
        stem = str(stem)
        for suffix in (".hgr",):
            if stem.endswith(suffix):
                stem = stem[: -len(suffix)]
        paths = {k: Path(stem + s) for k, s in SUFFIXES.items()}
        if must_exist:
            for k in ("labels", "split", "origin"):
                if not paths[k].exists():
                    paths[k] = None
        return cls(**paths)


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            yield lineno, raw.rstrip("\n").rstrip("\r")


def read_hgr(path):
    """Return ``(hyperedges, num_nodes)`` with 0-indexed ids."""
    header = None
    edges = []
    for lineno, line in _content_lines(path):
        if line.lstrip().startswith("%"):
            continue
        if header is None:
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError("header must be 'M N'", path, lineno)
            try:
                header = [int(p) for p in parts]
            except ValueError:
                raise ParseError(f"non-integer header {line!r}", path, lineno) from None
            if len(header) == 3 and header[2] != 0:
                raise ParseError("weighted hMETIS formats are not supported", path, lineno)
            if header[0] < 0 or header[1] < 0:
                raise ParseError("negative counts in header", path, lineno)
            continue
        if len(edges) == header[0]:
            if line.strip():
                raise ParseError(f"more than {header[0]} hyperedge lines", path, lineno)
            continue
        tokens = line.split()
        if not tokens:
            raise ParseError(f"empty hyperedge {len(edges) + 1}", path, lineno)
        try:
            ids = [int(t) - 1 for t in tokens]
        except ValueError:
            raise ParseError(f"non-integer node id in {line!r}", path, lineno) from None
        bad = [i + 1 for i in ids if not 0 <= i < header[1]]
        if bad:
            raise ParseError(f"node id {bad[0]} outside 1..{header[1]}", path, lineno)
        edges.append(ids)
    if header is None:
        raise ParseError("missing header", path, 1)
    if len(edges) != header[0]:
        raise ParseError(f"expected {header[0]} hyperedges, found {len(edges)}", path, None)
    return edges, header[1]


def read_features(path):
    rows = []
    width = None
    for lineno, line in _content_lines(path):
        try:
            row = [float(t) for t in line.split(",")] if line.strip() else []
        except ValueError:
            raise ParseError(f"bad number in {line!r}", path, lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"row has {len(row)} values, expected {width}", path, lineno)
        if not all(math.isfinite(x) for x in row):
            raise ParseError("non-finite feature value", path, lineno)
        rows.append(row)
    return np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)


def read_labels(path):
    labels, num_classes = [], None
    for lineno, line in _content_lines(path):
        s = line.strip()
        if s.startswith("#"):
            key, _, val = s[1:].strip().partition("=")
            if key.strip() == "classes":
                try:
                    num_classes = int(val)
                except ValueError:
                    raise ParseError(f"bad class count {val!r}", path, lineno) from None
            continue
        try:
            labels.append(int(s))
        except ValueError:
            raise ParseError(f"bad label {s!r}", path, lineno) from None
    return np.array(labels, dtype=np.int64), num_classes


def read_split(path):
    tokens = []
    for lineno, line in _content_lines(path):
        s = line.strip()
        if s not in SPLIT_TOKENS:
            raise ParseError(f"split token {s!r} not in {SPLIT_TOKENS}", path, lineno)
        tokens.append(s)
    tokens = np.array(tokens)
    return {k: tokens == k for k in SPLITS}


def read_origin(path, num_nodes):
    origin = {}
    for lineno, line in _content_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'node hyperedge'", path, lineno)
        try:
            v, j = int(parts[0]) - 1, int(parts[1]) - 1
        except ValueError:
            raise ParseError(f"bad origin line {line!r}", path, lineno) from None
        if not 0 <= v < num_nodes:
            raise ParseError(f"node {v + 1} outside 1..{num_nodes}", path, lineno)
        origin[v] = j
    return origin


def parse_hypergraph(bundle: DatasetBundle) -> Hypergraph:
    edges, n = read_hgr(bundle.structure)
    features = read_features(bundle.features)
    if features.shape[0] != n:
        raise CrossFileCountMismatch(f"{bundle.features}: {features.shape[0]} rows for {n} nodes")
    labels = num_classes = masks = None
    if bundle.labels is not None:
        labels, num_classes = read_labels(bundle.labels)
        if labels.size != n:
            raise CrossFileCountMismatch(f"{bundle.labels}: {labels.size} labels for {n} nodes")
    if bundle.split is not None:
        masks = read_split(bundle.split)
        if masks["train"].size != n:
            raise CrossFileCountMismatch(f"{bundle.split}: {masks['train'].size} entries for {n} nodes")
    name = Path(bundle.structure).name[: -len(".hgr")] if str(bundle.structure).endswith(".hgr") else ""
    inc = build_incidence(edges, n)
    if bundle.origin is not None:
        origin = read_origin(bundle.origin, n)
        G = AttackedHypergraph(inc, features, labels, masks, num_classes, name,
                               injected_count=len(origin), origin_map=origin)
    else:
        G = Hypergraph(inc, features, labels, masks, num_classes, name)
    problems = validate(G)
    if problems:
        raise ValidationFailure(problems)
    return G


def _fmt(x: float) -> str:
    return repr(float(x))


def write_hypergraph(G: Hypergraph, stem) -> DatasetBundle:
    """Write ``G`` next to ``stem``; labels/split/origin files only when present."""
    bundle = DatasetBundle.from_stem(stem, must_exist=False)
    Path(bundle.structure).parent.mkdir(parents=True, exist_ok=True)
    inc = G.incidence
    with open(bundle.structure, "w", encoding="utf-8") as fh:
        fh.write(f"{inc.num_hyperedges} {inc.num_nodes}\n")
        for j in range(inc.num_hyperedges):
            fh.write(" ".join(str(v + 1) for v in inc.members(j).tolist()) + "\n")
    with open(bundle.features, "w", encoding="utf-8") as fh:
        for row in G.features.tolist():
            fh.write(",".join(_fmt(x) for x in row) + "\n")

    written = {"labels": None, "split": None, "origin": None}
    for key in written:
        p = getattr(bundle, key)
        if p is not None and p.exists():
            p.unlink()
    if G.labels is not None:
        with open(bundle.labels, "w", encoding="utf-8") as fh:
            fh.write(f"# classes={G.num_classes}\n")
            fh.write("".join(f"{int(y)}\n" for y in G.labels.tolist()))
        written["labels"] = bundle.labels
    if G.masks is not None:
        tokens = np.full(G.num_nodes, "none", dtype=object)
        for k in SPLITS:
            tokens[G.mask(k)] = k
        with open(bundle.split, "w", encoding="utf-8") as fh:
            fh.write("".join(f"{t}\n" for t in tokens))
        written["split"] = bundle.split
    if isinstance(G, AttackedHypergraph):
        with open(bundle.origin, "w", encoding="utf-8") as fh:
            for v in sorted(G.origin_map):
                fh.write(f"{v + 1} {G.origin_map[v] + 1}\n")
        written["origin"] = bundle.origin
    return DatasetBundle(bundle.structure, bundle.features, **written)


def load(stem) -> Hypergraph:
    bundle = DatasetBundle.from_stem(stem)
    for p in (bundle.structure, bundle.features):
        if not Path(p).exists():
            raise FileNotFoundError(f"missing dataset file {p}")
    return parse_hypergraph(bundle)


# reports ---------------------------------------------------------------------

def _check_finite(obj, path="$"):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise NonFiniteValue(f"non-finite value at {path}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps_report(report) -> str:
    plain = _to_plain(report)
    _check_finite(plain)
    return json.dumps(plain, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report, path) -> Path:
    """Serialize a report mapping with sorted keys; NaN/inf are rejected."""
    text = dumps_report(report)
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return path


def read_report(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


from .synthetic import SyntheticSpec, generate_synthetic  # noqa: E402,F401  re-exported
