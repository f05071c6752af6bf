"""Bundled demonstration registry.

The package ships a small set of placeholder weight files (plus one label
sidecar) covering chest radiography, fundus imaging, endoscopy, and
microscopy.  The files carry no tensors; the stub backend never reads them,
so they are only filename-convention carriers that make the CLI, service,
and evaluation corpus usable out of the box.
"""
from __future__ import annotations

import tempfile
from importlib import resources
from pathlib import Path

from .lexicon import SynonymLexicon, default_lexicon
from .registry import Registry, scan_registry

__all__ = ["materialize_demo_registry", "demo_registry"]


def materialize_demo_registry(dest: Path | str) -> Path:
    """Copy the bundled weight files into ``dest`` and return it."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    source = resources.files("medrouter.data") / "demo_registry"
    for entry in source.iterdir():
        if entry.is_file():
            (dest / entry.name).write_bytes(entry.read_bytes())
    return dest


def demo_registry(
    dest: Path | str | None = None,
    lexicon: SynonymLexicon | None = None,
) -> tuple[Registry, SynonymLexicon]:
    """Materialize and scan the demo registry; defaults to a fresh temp dir."""
    if dest is None:
        dest = Path(tempfile.mkdtemp(prefix="medrouter_demo_"))
    lexicon = lexicon or default_lexicon()
    root = materialize_demo_registry(dest)
    return scan_registry(root, lexicon), lexicon
