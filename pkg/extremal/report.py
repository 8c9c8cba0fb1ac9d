"""
Reports: the resolved configuration, the master seed and an ordered set of
sections, each a table (list of row dicts), a set of scalars or a recorded error.

write() emits `<name>.report.json` plus one `<name>.<section>.csv` per section.
Floats keep full precision in both files (shortest repr in JSON, 17 significant
digits in CSV) so the two parse back to the same values; render() is the
3-decimal human view.
"""
import json
import logging
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd

from extremal.util import SCHEMA_VERSION, canonical_json, to_jsonable
from extremal.version import __version__

logger = logging.getLogger("extremal")

TABLE = "table"
SCALARS = "scalars"
ERROR = "error"

CSV_FLOAT_FORMAT = "%.17g"
HUMAN_DECIMALS = 3


@dataclass
class Section:
    kind: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    values: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict:
        if self.kind == TABLE:
            return {"kind": TABLE, "rows": self.rows}
        return {"kind": self.kind, "values": self.values}

    def frame(self) -> pd.DataFrame:
        rows = self.rows if self.kind == TABLE else [self.values]
        flat = [{k: _cell(v) for k, v in to_jsonable(r).items()} for r in rows]
        return pd.DataFrame(flat)


def _cell(value: Any) -> Any:
    # nested values go into a single CSV cell as canonical json
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, allow_nan=False)
    return value


class Report:
    def __init__(self, name: str, command: str, config: Mapping, seed: Optional[int] = None):
        self.name = name
        self.command = command
        self.config = config
        self.seed = seed
        self.sections: "OrderedDict[str, Section]" = OrderedDict()

    def add_table(self, name: str, rows: List[Mapping]) -> None:
        self.sections[name] = Section(TABLE, rows=[dict(r) for r in rows])

    def add_scalars(self, name: str, values: Mapping) -> None:
        self.sections[name] = Section(SCALARS, values=dict(values))

    def add_error(self, name: str, error: BaseException) -> None:
        logger.warning("section %s failed: %s: %s", name, type(error).__name__, error)
        self.sections[name] = Section(ERROR, values={"error": type(error).__name__, "message": str(error)})

    @property
    def errors(self) -> Dict[str, Dict]:
        return {k: s.values for k, s in self.sections.items() if s.kind == ERROR}

    def as_dict(self) -> Dict:
        return {
            "name": self.name,
            "command": self.command,
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "seed": self.seed,
            "config": self.config,
            "sections": OrderedDict((k, s.as_dict()) for k, s in self.sections.items()),
        }

    def to_json(self) -> str:
        return canonical_json(self.as_dict())

    def csv_text(self, section: str) -> str:
        return self.sections[section].frame().to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")

    def write(self, outdir: str) -> List[str]:
        os.makedirs(outdir, exist_ok=True)
        paths = [os.path.join(outdir, f"{self.name}.report.json")]
        with open(paths[0], "w", encoding="utf-8") as h:
            h.write(self.to_json() + "\n")
        for section in self.sections:
            path = os.path.join(outdir, f"{self.name}.{section}.csv")
            with open(path, "w", encoding="utf-8", newline="") as h:
                h.write(self.csv_text(section))
            paths.append(path)
        logger.info("wrote %d files to %s", len(paths), outdir)
        return paths

    def render(self) -> str:
        blocks = [f"{self.name} ({self.command}, seed {self.seed})"]
        for name, section in self.sections.items():
            blocks.append(f"\n[{name}]")
            if section.kind == TABLE:
                if section.rows:
                    blocks.append(section.frame().round(HUMAN_DECIMALS).to_string(index=False))
                else:
                    blocks.append("(empty)")
            else:
                for key, value in to_jsonable(section.values).items():
                    if isinstance(value, float):
                        value = f"{value:.{HUMAN_DECIMALS}f}"
                    blocks.append(f"{key}: {value}")
        return "\n".join(blocks)
