import json
import os
from typing import Any, Dict, List, Union

here = os.path.abspath(os.path.dirname(__file__))


def _load_list(paths: List[str]) -> dict:
    content: Dict[str, Any] = {}
    for p in paths:
        with open(p) as h:
            t = json.load(h)
            content.update(t)
    return content


def load_json(path_or_dir: Union[str, List[str]]) -> dict:
    path_error = (
        "extremal.db.load_json expects a valid path to a json file, "
        "a list of (valid) paths to json files, "
        "or the (valid) path to a directory with json files"
        f", but received {path_or_dir}"
    )
    if isinstance(path_or_dir, (str, os.PathLike)):
        json_path = os.fspath(path_or_dir)
        if (
            os.path.exists(json_path)
            and os.path.isfile(json_path)
            and json_path.endswith(".json")
        ):
            with open(json_path) as h:
                content = json.load(h)
        elif os.path.isdir(json_path):
            paths = sorted(
                os.path.join(json_path, f)
                for f in os.listdir(json_path)
                if f.endswith(".json")
            )
            content = _load_list(paths)
        else:
            raise ValueError(path_error)
    elif isinstance(path_or_dir, list):
        content = _load_list(list(path_or_dir))
    else:
        raise TypeError(path_error)
    return content


def get_config_schema(schema_path="resources/config_schema.json"):
    full_schema_path = os.path.join(here, schema_path)
    return load_json(full_schema_path)


def get_default_config(command: str, defaults_path="resources/default_config.json"):
    defaults = load_json(os.path.join(here, defaults_path))
    if command not in defaults:
        raise ValueError(
            f"no default config for command {command!r}, known: {sorted(defaults)}"
        )
    # callers mutate the result, hand out a fresh copy every time
    return json.loads(json.dumps(defaults[command]))


def get_simulation_grids(grids_path="resources/simulation_grids.json"):
    return load_json(os.path.join(here, grids_path))


def get_reference_values(anchors_path="resources/reference_values.json"):
    return load_json(os.path.join(here, anchors_path))
