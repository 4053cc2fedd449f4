import os
import csv
import json

import yaml
import numpy as np

from trollector.utils import ensure_path_exists, get_logger


logger = get_logger("IO")


def _ensure_parent(path):
    base_dir = os.path.dirname(os.path.abspath(path))
    ensure_path_exists(base_dir)


def to_builtin(obj):
    """Recursively convert numpy containers and scalars into python built-in types."""
    if isinstance(obj, dict):
        return {key: to_builtin(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def load_yaml(yaml_path):
    with open(yaml_path, "r") as yaml_file:
        return yaml.load(yaml_file, Loader=yaml.SafeLoader)


def write_yaml(json_obj, output_path, dump=True):
    # If dump is false, then the json_obj should be yaml string already.
    out_str = yaml.dump(to_builtin(json_obj)) if dump else json_obj
    _ensure_parent(output_path)
    with open(output_path, "w") as out:
        out.write(out_str)


def load_json(json_path):
    with open(json_path, "r") as json_file:
        return json.load(json_file)


def write_json(json_obj, output_path, indent=2):
    """Write the object as a json file, converting numpy values on the way.

    Keys are sorted so that identical inputs always give identical bytes.
    """
    _ensure_parent(output_path)
    with open(output_path, "w") as out:
        json.dump(to_builtin(json_obj), out, indent=indent, sort_keys=True)
        out.write("\n")


def write_jsonl(records, output_path):
    """Write one compact json object per line."""
    _ensure_parent(output_path)
    with open(output_path, "w") as out:
        for record in records:
            out.write(json.dumps(to_builtin(record), sort_keys=True))
            out.write("\n")


def load_jsonl(jsonl_path):
    with open(jsonl_path, "r") as jsonl_file:
        return [json.loads(line) for line in jsonl_file if line.strip()]


def load_xyz(xyz_path):
    """Load a whitespace separated XYZ text file.

    Parameters
    ----------
    xyz_path: Path
        Text file with one ``x y z`` triple per line. Lines starting with '#' are ignored.

    Returns
    -------
    points: (n, 3) numpy array
    """
    points = np.loadtxt(xyz_path, comments="#", ndmin=2)
    if points.size == 0:
        return np.zeros((0, 3))
    if points.shape[1] != 3:
        raise ValueError(f"Expected three columns in {xyz_path}, received {points.shape[1]}.")
    return points


def write_xyz(points, output_path):
    _ensure_parent(output_path)
    np.savetxt(output_path, np.asarray(points, dtype=float).reshape(-1, 3), fmt="%.9f")


def write_csv(rows, output_path, fieldnames):
    """Write rows (a list of dicts) as a CSV file with the given column order.

    Parameters
    ----------
    rows: list[dict]
        Each row maps column names to values. Missing values are written as empty cells.
    output_path: Path
        Path for output the CSV file. Should contain the file name.
    fieldnames: list[str]
        Column order of the header.
    """
    _ensure_parent(output_path)
    with open(output_path, "w", newline="") as out:
        writer = csv.DictWriter(out, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.debug("Wrote %d rows to %s", len(rows), output_path)


def load_csv(csv_path):
    with open(csv_path, "r", newline="") as csv_file:
        return list(csv.DictReader(csv_file))
