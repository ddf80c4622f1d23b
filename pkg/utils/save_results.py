"""
Save Run Results Utility

Writes the artifacts of one run into its output directory: CSV tables with
17 significant digits, field CSVs with their sidecars, SVG heatmaps and a
`manifest.txt` of key = value lines. Nothing time-dependent is written, so
reruns with the same config and seed produce identical files.
"""

import logging
from pathlib import Path
from typing import Dict, List, Mapping

import pandas as pd

from fields.scalar_field import save_field
from utils.heatmap import emit_heatmap
from utils.keyvalue import write_key_values

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST = "manifest.txt"


class ResultSaver:
    """Organizes the files of one run under a single directory"""

    def __init__(self, base_dir="out"):
        self.base_dir = Path(base_dir)
        self.written: List[Path] = []
        self.ensure_directory_exists()

    def ensure_directory_exists(self):
        """Create base directory if it doesn't exist"""
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def _track(self, path: Path) -> Path:
        self.written.append(path)
        logger.info("wrote %s", path)
        return path

    def save_table(self, name: str, frame: pd.DataFrame) -> Path:
        """
        Write a DataFrame as `<name>.csv`

        Args:
            name: file stem
            frame: table to write, index dropped

        Returns:
            Path: the CSV path
        """
        path = self.base_dir / f"{name}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return self._track(path)

    def save_fields(self, u, v) -> Dict[str, Path]:
        """u.csv and v.csv with their .meta and .trace.csv sidecars"""
        paths = {}
        for label, field in (("u", u), ("v", v)):
            paths[label] = self._track(save_field(field, self.base_dir / f"{label}.csv"))
        return paths

    def save_heatmap(self, name: str, field, title: str = None, grid=None) -> Path:
        return self._track(emit_heatmap(field, self.base_dir / f"{name}.svg", title=title, grid=grid))

    def save_manifest(self, entries: Mapping[str, object]) -> Path:
        """
        Write the run manifest

        Entries keep their insertion order; the list of written files is
        appended under `files`.
        """
        entries = dict(entries)
        files = sorted(p.name for p in self.written if p.parent == self.base_dir)
        if files:
            entries["files"] = files
        return write_key_values(self.base_dir / MANIFEST, entries)
