import hashlib
import json
import math
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from functional import seq
from jsonschema import ValidationError, validate

from extremal.db import get_config_schema
from extremal.errors import ConfigurationError

SCHEMA_VERSION = 1


def stream_key(name: str) -> int:
    """stable 32 bit key for a named random stream (hash() is salted per process)"""
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "little")


def derive_rng(seed: Optional[int], *names: Any) -> np.random.Generator:
    """
    Generator for the sub-stream `names` of the master `seed`

    ```python
    >>> x = derive_rng(7, "innovations_x").random(3)
    >>> y = derive_rng(7, "innovations_y").random(3)  # independent of x
    ```
    The same (seed, names) always gives the same stream, whatever else was drawn before.
    """
    if seed is None:
        raise ConfigurationError("a master seed is required for reproducible streams")
    entropy = [int(seed)] + [stream_key(str(n)) for n in names]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def validate_config(config: Mapping, command: str) -> None:
    schema = get_config_schema()
    if command not in schema["commands"]:
        raise ConfigurationError(f"unknown command {command!r}")
    command_schema = dict(schema["commands"][command])
    command_schema["$schema"] = schema["$schema"]
    command_schema["definitions"] = schema["definitions"]
    try:
        validate(instance=config, schema=command_schema)
    except ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid {command} config at {where}: {e.message}")


def apply_overrides(config: Dict, overrides: Mapping[str, Any]) -> Dict:
    """
    dotted keys override nested config entries, None values are ignored
    ex. {"process.horizon": 500} sets config["process"]["horizon"]
    """
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = config
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config


def at_most_one_is_not_none(*args) -> bool:
    return len(list(filter(bool, [x is not None for x in args]))) <= 1


def to_jsonable(value: Any) -> Any:
    # numpy scalars and arrays, dataclass-ish objects exposing as_dict
    if hasattr(value, "as_dict"):
        return to_jsonable(value.as_dict())
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def canonical_json(value: Any) -> str:
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2, allow_nan=False)


def geometric_grid(low: int, high: int, points: int) -> List[int]:
    """distinct integers spread geometrically over [low, high]"""
    if high < low:
        return []
    grid = np.unique(np.floor(np.geomspace(low, high, num=points)).astype(int))
    return [int(g) for g in grid]


def require_non_empty(name: str, values: Iterable) -> Sequence:
    values = seq(values).to_list()
    if not values:
        raise ConfigurationError(f"{name} must not be empty")
    return values
