"""Benchmark dataset acquisition and conversion.

`fetch_datasets` downloads the public benchmark files from a manifest of
(url, sha256) entries — mirrors vary in availability, so the manifest is
user-editable and verification happens against whatever hash is pinned.
`prepare_dataset` converts the published raw layouts (citation-network
content/cites tables, the e-mail network with department labels) into the
package's canonical edge-list and node-class files.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import shutil
import tarfile
import tempfile
import urllib.request
from pathlib import Path

from .errors import FormatError, ValidationError

__all__ = [
    "DEFAULT_MANIFEST",
    "fetch_datasets",
    "prepare_dataset",
    "sha256_file",
    "DATASET_NAMES",
]

#: Canonical public locations. sha256 values are intentionally left to the
#: user's manifest: archives get re-packed by mirrors, so a hash pinned here
#: would break on the first mirror switch. A null hash downloads, reports
#: the computed digest, and asks for it to be pinned.
DEFAULT_MANIFEST = {
    "cora": [
        {
            "url": "https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz",
            "filename": "cora.tgz",
            "sha256": None,
        }
    ],
    "citeseer": [
        {
            "url": "https://linqs-data.soe.ucsc.edu/public/lbc/citeseer.tgz",
            "filename": "citeseer.tgz",
            "sha256": None,
        }
    ],
    "email-eu": [
        {
            "url": "https://snap.stanford.edu/data/email-Eu-core.txt.gz",
            "filename": "email-Eu-core.txt.gz",
            "sha256": None,
        },
        {
            "url": "https://snap.stanford.edu/data/email-Eu-core-department-labels.txt.gz",
            "filename": "email-Eu-core-department-labels.txt.gz",
            "sha256": None,
        },
    ],
    "men": [
        {
            "url": "https://staff.fnwi.uva.nl/e.bruni/resources/MEN.tar.gz",
            "filename": "MEN.tar.gz",
            "sha256": None,
        }
    ],
    "oanc": [
        {
            "url": "https://anc.org/OANC/OANC_GrAF.zip",
            "filename": "OANC_GrAF.zip",
            "sha256": None,
        }
    ],
}

DATASET_NAMES = tuple(sorted(DEFAULT_MANIFEST))


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def fetch_datasets(
    dest: str | Path,
    names: list[str] | None = None,
    manifest: dict | str | Path | None = None,
) -> list[Path]:
    """Download manifest entries into ``dest``; returns the fetched paths.

    Existing files with a matching pinned hash are kept. A hash mismatch
    removes the download and raises; a missing hash prints the computed
    digest so it can be pinned in the manifest.
    """
    if manifest is None:
        manifest = DEFAULT_MANIFEST
    elif not isinstance(manifest, dict):
        with Path(manifest).open(encoding="utf-8") as fh:
            manifest = json.load(fh)
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    if names is None:
        names = sorted(manifest)
    fetched = []
    for name in names:
        if name not in manifest:
            raise ValidationError(f"dataset {name!r} is not in the manifest")
        for entry in manifest[name]:
            target = dest / entry["filename"]
            pinned = entry.get("sha256")
            if target.exists() and pinned and sha256_file(target) == pinned:
                print(f"{name}: {target.name} already present, hash OK")
                fetched.append(target)
                continue
            print(f"{name}: downloading {entry['url']}")
            with urllib.request.urlopen(entry["url"]) as resp, target.open("wb") as out:
                shutil.copyfileobj(resp, out)
            digest = sha256_file(target)
            if pinned is None:
                print(
                    f"{name}: no pinned hash for {target.name}; downloaded "
                    f"sha256 is {digest} — pin it in your manifest"
                )
            elif digest != pinned:
                target.unlink()
                raise ValidationError(
                    f"{target.name}: sha256 mismatch (got {digest}, "
                    f"expected {pinned})"
                )
            fetched.append(target)
    return fetched


def _materialize(source: Path, workdir: Path) -> Path:
    """Return a directory holding the dataset's plain files, extracting
    archives (.tgz/.tar.gz/.gz) when needed."""
    if source.is_dir():
        return source
    name = source.name
    if name.endswith((".tgz", ".tar.gz", ".tar")):
        with tarfile.open(source) as tar:
            tar.extractall(workdir, filter="data")
        return workdir
    if name.endswith(".gz"):
        out = workdir / name[: -len(".gz")]
        with gzip.open(source, "rb") as src, out.open("wb") as dst:
            shutil.copyfileobj(src, dst)
        return workdir
    if source.is_file():
        return source.parent
    raise ValidationError(f"no such dataset source: {source}")


def _find(root: Path, filename: str) -> Path:
    hits = sorted(root.rglob(filename))
    if not hits:
        raise ValidationError(f"{filename} not found under {root}")
    return hits[0]


def _convert_citation_tables(
    content_path: Path, cites_path: Path, out_edges: Path, out_classes: Path
) -> dict:
    """Content table: ``paper_id <features...> class``; cites table:
    ``cited<TAB>citing``. Citations touching unknown paper ids are dropped
    (both tables are published with a few dangling references)."""
    classes: dict[str, str] = {}
    with content_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if len(fields) < 2:
                raise FormatError(
                    "expected id, features, class", path=str(content_path), line=lineno
                )
            paper, label = fields[0], fields[-1]
            if paper in classes:
                raise FormatError(
                    f"duplicate paper id {paper!r}", path=str(content_path), line=lineno
                )
            classes[paper] = label
    kept = 0
    dropped = 0
    seen = set()
    with cites_path.open(encoding="utf-8") as fh, out_edges.open(
        "w", encoding="utf-8"
    ) as out:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 2:
                raise FormatError(
                    "expected cited<TAB>citing", path=str(cites_path), line=lineno
                )
            u, v = fields
            if u not in classes or v not in classes:
                dropped += 1
                continue
            if u == v or (min(u, v), max(u, v)) in seen:
                dropped += 1
                continue
            seen.add((min(u, v), max(u, v)))
            out.write(f"{u}\t{v}\n")
            kept += 1
    with out_classes.open("w", encoding="utf-8") as out:
        for paper in classes:
            out.write(f"{paper}\t{classes[paper]}\n")
    return {"nodes": len(classes), "edges": kept, "dropped_citations": dropped}


def _convert_email_network(
    edges_path: Path, labels_path: Path, out_edges: Path, out_classes: Path
) -> dict:
    """Directed e-mail edges (space-separated, with self-loops) and
    department labels, both using integer node ids."""
    seen = set()
    kept = 0
    dropped = 0
    with edges_path.open(encoding="utf-8") as fh, out_edges.open(
        "w", encoding="utf-8"
    ) as out:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) != 2:
                raise FormatError(
                    "expected two node ids", path=str(edges_path), line=lineno
                )
            u, v = fields
            if u == v:
                dropped += 1
                continue
            key = (min(u, v, key=int), max(u, v, key=int))
            if key in seen:
                dropped += 1
                continue
            seen.add(key)
            out.write(f"{u}\t{v}\n")
            kept += 1
    n_labels = 0
    with labels_path.open(encoding="utf-8") as fh, out_classes.open(
        "w", encoding="utf-8"
    ) as out:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) != 2:
                raise FormatError(
                    "expected node and department", path=str(labels_path), line=lineno
                )
            out.write(f"{fields[0]}\t{fields[1]}\n")
            n_labels += 1
    return {"nodes": n_labels, "edges": kept, "dropped_edges": dropped}


def prepare_dataset(name: str, source: str | Path, out_dir: str | Path) -> dict:
    """Convert a downloaded dataset into ``<name>.edges`` / ``<name>.classes``
    under ``out_dir``; returns conversion counts."""
    source = Path(source)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_edges = out_dir / f"{name}.edges"
    out_classes = out_dir / f"{name}.classes"
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        if name in ("cora", "citeseer"):
            root = _materialize(source, workdir)
            return _convert_citation_tables(
                _find(root, f"{name}.content"),
                _find(root, f"{name}.cites"),
                out_edges,
                out_classes,
            )
        if name == "email-eu":
            if source.is_file() and source.name.endswith(".gz"):
                raise ValidationError(
                    "email-eu needs the directory holding both .txt(.gz) files"
                )
            root = source
            edges = _find_email_file(root, "email-Eu-core.txt", workdir)
            labels = _find_email_file(
                root, "email-Eu-core-department-labels.txt", workdir
            )
            return _convert_email_network(edges, labels, out_edges, out_classes)
    raise ValidationError(
        f"unknown dataset {name!r}; supported: cora, citeseer, email-eu"
    )


def _find_email_file(root: Path, filename: str, workdir: Path) -> Path:
    plain = sorted(root.rglob(filename))
    if plain:
        return plain[0]
    packed = sorted(root.rglob(filename + ".gz"))
    if not packed:
        raise ValidationError(f"{filename}(.gz) not found under {root}")
    out = workdir / filename
    with gzip.open(packed[0], "rb") as src, out.open("wb") as dst:
        shutil.copyfileobj(src, dst)
    return out
