"""CSV emission and loading for trajectories and comparison tables."""

import numpy as np

from ..errors import ValidationError


def format_value(v):
    """17 significant digits, enough to round-trip any double."""
    return format(float(v), ".17g")


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def trajectory_csv(traj):
    return csv_text(traj.layout.columns(), traj.table())


def write_text(path, text):
    # newline="" keeps LF endings on every platform
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_csv(path):
    """``(header, data)`` with ``data`` a 2-D float array (one row per sample)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().split("\n") if ln]
    except OSError as exc:
        raise ValidationError({"csv": f"cannot read {path}: {exc.strerror}"}) from None
    if not lines:
        raise ValidationError({"csv": f"{path} is empty"})
    header = lines[0].split(",")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError:
        raise ValidationError({"csv": f"{path} has non-numeric cells"}) from None
    return header, data.reshape(-1, len(header))
