# Line-oriented instance and grid files
import csv
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from src.cli.schemas import Instance
from src.entropy import DensityGrid
from src.errors import ParseError
from src.spectral import Potential

SECTIONS = ("family", "weights", "files", "tolerances")
TOLERANCE_KEYS = ("rank", "eq")


def parse_number(token: str, where: str) -> float:
    """Decimal, scientific or fraction ("2/3") literal."""
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"{where}: not a number: {token!r}")


def _content_lines(text: str) -> list[tuple[int, str]]:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((number, line))
    return lines


def parse_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read instance {path}: {e}")

    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for number, line in _content_lines(text):
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in SECTIONS:
                raise ParseError(f"{path}:{number}: unknown section [{current}]")
            if current in sections:
                raise ParseError(f"{path}:{number}: section [{current}] appears twice")
            sections[current] = []
            continue
        if current is None:
            raise ParseError(f"{path}:{number}: content before the first section")
        sections[current].append((number, line))

    for required in ("family", "weights"):
        if required not in sections:
            raise ParseError(f"{path}: missing [{required}] section")

    family = sections["family"]
    if not family:
        raise ParseError(f"{path}: [family] is empty")
    number, first = family[0]
    try:
        n = int(first)
    except ValueError:
        raise ParseError(f"{path}:{number}: expected the dimension n, got {first!r}")
    if n < 1:
        raise ParseError(f"{path}:{number}: dimension must be positive")
    columns = []
    for number, line in family[1:]:
        row = [parse_number(tok, f"{path}:{number}") for tok in line.split()]
        if len(row) != n:
            raise ParseError(f"{path}:{number}: expected {n} entries, got {len(row)}")
        columns.append(row)
    if not columns:
        raise ParseError(f"{path}: [family] lists no vectors")

    weights = [parse_number(tok, f"{path}:{number}") for number, line in sections["weights"] for tok in line.split()]

    files = {}
    for number, line in sections.get("files", []):
        key, sep, value = line.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ParseError(f"{path}:{number}: expected key = path")
        files[key.strip()] = (path.parent / value.strip()).resolve()

    tolerances = {}
    for number, line in sections.get("tolerances", []):
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in TOLERANCE_KEYS:
            raise ParseError(f"{path}:{number}: expected one of {', '.join(TOLERANCE_KEYS)} = value")
        tolerances[key] = parse_number(value.strip(), f"{path}:{number}")

    try:
        return Instance(
            name=path.stem,
            columns=np.array(columns, dtype=np.float64).T,
            weights=np.array(weights, dtype=np.float64),
            files=files,
            tolerances=tolerances,
        )
    except ValidationError as e:
        raise ParseError(f"{path}: invalid instance: {e.errors()[0]['msg']}")


def format_instance(columns: Sequence[Sequence[float]], weights: Sequence, files: Optional[dict] = None,
                    tolerances: Optional[dict] = None, comment: Optional[str] = None) -> str:
    """Inverse of parse_instance; weights may be strings such as "2/3"."""
    columns = [list(col) for col in columns]
    lines = [f"# {comment}"] if comment else []
    lines += ["[family]", str(len(columns[0]))]
    lines += [" ".join(repr(float(x)) for x in col) for col in columns]
    lines += ["[weights]", " ".join(str(w) for w in weights)]
    if files:
        lines.append("[files]")
        lines += [f"{key} = {value}" for key, value in files.items()]
    if tolerances:
        lines.append("[tolerances]")
        lines += [f"{key} = {value!r}" for key, value in tolerances.items()]
    return "\n".join(lines) + "\n"


class GridFile:
    """Header `grid dim=<d> axes=<lo:hi:count,...>` followed by row-major values."""

    def __init__(self, lo: tuple, hi: tuple, values: np.ndarray):
        self.lo = tuple(float(x) for x in lo)
        self.hi = tuple(float(x) for x in hi)
        self.values = values

    @property
    def dim(self) -> int:
        return len(self.lo)


def parse_grid(path) -> GridFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read grid {path}: {e}")
    lines = _content_lines(text)
    if not lines:
        raise ParseError(f"{path}: empty grid file")
    number, header = lines[0]
    fields = header.split()
    if not fields or fields[0] != "grid":
        raise ParseError(f"{path}:{number}: grid header must start with 'grid'")
    params = dict(field.partition("=")[::2] for field in fields[1:])
    try:
        dim = int(params["dim"])
        axes = [axis.split(":") for axis in params["axes"].split(",")]
        lo = tuple(parse_number(a[0], f"{path}:{number}") for a in axes)
        hi = tuple(parse_number(a[1], f"{path}:{number}") for a in axes)
        counts = tuple(int(a[2]) for a in axes)
    except (KeyError, IndexError, ValueError):
        raise ParseError(f"{path}:{number}: malformed header {header!r}")
    if len(axes) != dim or not 1 <= dim <= 3:
        raise ParseError(f"{path}:{number}: header declares dim={dim} with {len(axes)} axes")

    values = [parse_number(tok, f"{path}:{num}") for num, line in lines[1:] for tok in line.split()]
    expected = int(np.prod(counts))
    if len(values) != expected:
        raise ParseError(f"{path}: expected {expected} values, found {len(values)}")
    return GridFile(lo, hi, np.array(values, dtype=np.float64).reshape(counts))


def _validated(path, build):
    try:
        return build()
    except ValidationError as e:
        raise ParseError(f"{path}: invalid grid: {e.errors()[0]['msg']}")


def read_density(path) -> DensityGrid:
    """Cell-centred grid; lo:hi bound the box."""
    grid = parse_grid(path)
    return _validated(path, lambda: DensityGrid(lo=grid.lo, hi=grid.hi, values=grid.values))


def read_factor(path) -> DensityGrid:
    factor = read_density(path)
    if factor.dim != 1:
        raise ParseError(f"{path}: factors are 1-dimensional, got dim={factor.dim}")
    return factor


def read_potential(path) -> Potential:
    """Node grid; lo:hi are the first and last node."""
    grid = parse_grid(path)
    return _validated(path, lambda: Potential(lo=grid.lo, hi=grid.hi, values=grid.values))


def format_grid(lo: Sequence[float], hi: Sequence[float], values) -> str:
    values = np.asarray(values, dtype=np.float64)
    axes = ",".join(f"{a!r}:{b!r}:{k}" for a, b, k in zip(map(float, lo), map(float, hi), values.shape))
    body = "\n".join(repr(float(v)) for v in values.reshape(-1))
    return f"grid dim={values.ndim} axes={axes}\n{body}\n"


def write_grid(path, lo: Sequence[float], hi: Sequence[float], values) -> Path:
    path = Path(path)
    path.write_text(format_grid(lo, hi, values), encoding="utf-8")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    return path
