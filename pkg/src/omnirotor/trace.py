"""Column-oriented trace storage and CSV serialisation."""

import csv
import io

import numpy as np

AXES = ("x", "y", "z")

# (block name, unit, width); width None means one column per rotor
_BLOCKS = (
    ("t", "s", 1),
    ("p", "m", 3),
    ("v", "m/s", 3),
    ("R", "-", 9),
    ("omega", "rad/s", 3),
    ("rotor", None, None),
    ("e_p", "m", 3),
    ("e_v", "m/s", 3),
    ("e_R", "-", 3),
    ("e_omega", "rad/s", 3),
    ("e_F", "N", 3),
    ("e_M", "N*m", 3),
    ("F", "N", 3),
    ("M", "N*m", 3),
    ("F_cmd", "N", 3),
    ("M_cmd", "N*m", 3),
    ("F_d", "N", 3),
    ("M_d", "N*m", 3),
    ("V1", "J", 1),
    ("V2", "J", 1),
    ("V", "J", 1),
    ("psi", "-", 1),
)


def _column_names(name, unit, width):
    if width == 1:
        return [f"{name}[{unit}]"]
    if name == "R":
        return [f"R_{i}{j}[-]" for i in (1, 2, 3) for j in (1, 2, 3)]
    if name == "rotor":
        return None
    return [f"{name}_{a}[{unit}]" for a in AXES]


def trace_layout(n_rotors, rotor_unit):
    """Ordered ``(block, slice)`` pairs and the full list of header names."""
    layout, header, col = {}, [], 0
    for name, unit, width in _BLOCKS:
        if name == "rotor":
            names = [f"rotor_{i + 1}[{rotor_unit}]" for i in range(n_rotors)]
        else:
            names = _column_names(name, unit, width)
        layout[name] = slice(col, col + len(names))
        header.extend(names)
        col += len(names)
    return layout, header


class TraceLog:
    """Per-step record of a simulated run.

    Rows are appended during a run and the log is frozen afterwards. Blocks
    are read with ``log["e_p"]`` (an ``(N, 3)`` view) or ``log["t"]`` (1-D).
    """

    def __init__(self, n_rotors, rotor_unit, capacity, meta=None):
        self.layout, self.header = trace_layout(n_rotors, rotor_unit)
        self.n_rotors = n_rotors
        self._data = np.full((capacity, len(self.header)), np.nan)
        self._n = 0
        self.meta = dict(meta or {})

    def append(self, row):
        self._data[self._n] = row
        self._n += 1

    def new_row(self):
        return np.empty(len(self.header))

    def freeze(self):
        self._data = self._data[: self._n].copy()
        self._data.setflags(write=False)

    @property
    def data(self):
        return self._data[: self._n]

    def __len__(self):
        return self._n

    def __getitem__(self, block):
        sl = self.layout[block]
        out = self.data[:, sl]
        return out[:, 0] if sl.stop - sl.start == 1 else out

    @property
    def t(self):
        return self["t"]

    def rotations(self):
        return self["R"].reshape(-1, 3, 3)

    def to_csv(self, path_or_buffer):
        close = False
        if isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__"):
            fh = open(path_or_buffer, "w", newline="")
            close = True
        else:
            fh = path_or_buffer
        try:
            write_csv(fh, self.header, self.data)
        finally:
            if close:
                fh.close()

    def to_csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def write_csv(fh, header, rows):
    """Write a header and float rows with 17 significant digits."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(float(v), ".17g") for v in row])


def read_csv(path):
    """Read a CSV written by :func:`write_csv` into ``(header, array)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))
