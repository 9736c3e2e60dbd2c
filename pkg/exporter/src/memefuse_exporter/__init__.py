"""Feature archive exporter backed by pretrained encoders.

Writes the same binary archive format the baseline featurizer produces,
with text transformer states as T, an intermediate CNN activation as H,
and the CNN's prediction vector as I. When the pretrained weights are not
available locally, deterministic stand-in encoders with the same output
dimensions take over, so exports stay reproducible offline.
"""

from .archive import ExportArchiveError, write_archive
from .export import ExportError, load_records, run_export
from .spec import ExportSpec, SpecError, load_spec

__all__ = [
    "ExportArchiveError",
    "ExportError",
    "ExportSpec",
    "SpecError",
    "load_records",
    "load_spec",
    "run_export",
    "write_archive",
]
