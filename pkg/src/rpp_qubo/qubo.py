"""QUBO and Ising models, energies, constraint gadgets and variable fixing.

A :class:`QuboModel` stores its coefficients split by *family* (objective,
location one-hot, half-hot, ...).  The merged coefficients are the sum over
families, so per-family energy decomposition is exact even when two families
touch the same variable pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .variables import describe, from_description

OBJECTIVE = "objective"


class RegistryError(KeyError):
    """Unknown or duplicate variable key / index."""


class DimensionError(ValueError):
    """Assignment length does not match the model."""


@dataclass
class Terms:
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def copy(self) -> "Terms":
        return Terms(dict(self.linear), dict(self.quadratic), self.offset)


class QuboModel:
    """Sparse upper-triangular QUBO with a key registry.

    Energy of an assignment ``x`` is
    ``offset + sum_i linear[i] x_i + sum_{i<j} quadratic[i, j] x_i x_j``.

    ``fixed`` records keys that were removed by :func:`fix_variables` together
    with their values, so decoders can reconstruct the full assignment.
    """

    def __init__(self, keys: Iterable[Hashable] = (), meta: Optional[dict] = None):
        self._keys: list[Hashable] = []
        self._index: dict[Hashable, int] = {}
        self.families: dict[str, Terms] = {}
        self.fixed: dict[Hashable, int] = {}
        self.meta: dict = dict(meta or {})
        for key in keys:
            self.add_variable(key)

    # registry -----------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self._keys)

    @property
    def keys(self) -> tuple[Hashable, ...]:
        return tuple(self._keys)

    @property
    def num_registered(self) -> int:
        """Free plus fixed variables: the size of the registry before fixing."""
        return len(self._keys) + len(self.fixed)

    def add_variable(self, key: Hashable) -> int:
        if key in self._index or key in self.fixed:
            raise RegistryError(f"variable {key!r} already registered")
        self._index[key] = len(self._keys)
        self._keys.append(key)
        return self._index[key]

    def index(self, key: Hashable) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise RegistryError(f"unknown variable {key!r}") from None

    def key(self, i: int) -> Hashable:
        return self._keys[i]

    def __contains__(self, key: Hashable) -> bool:
        return key in self._index

    def _check(self, i: int) -> None:
        if not (0 <= i < len(self._keys)):
            raise RegistryError(f"index {i} out of range for {len(self._keys)} variables")

    # coefficients -------------------------------------------------------
    def _family(self, family: str) -> Terms:
        return self.families.setdefault(family, Terms())

    def add_linear(self, i: int, coeff: float, family: str = OBJECTIVE) -> None:
        self._check(i)
        terms = self._family(family)
        terms.linear[i] = terms.linear.get(i, 0.0) + coeff

    def add_quadratic(self, i: int, j: int, coeff: float, family: str = OBJECTIVE) -> None:
        if i == j:
            # x_i^2 == x_i
            self.add_linear(i, coeff, family)
            return
        self._check(i)
        self._check(j)
        pair = (i, j) if i < j else (j, i)
        terms = self._family(family)
        terms.quadratic[pair] = terms.quadratic.get(pair, 0.0) + coeff

    def add_offset(self, value: float, family: str = OBJECTIVE) -> None:
        self._family(family).offset += value

    @property
    def linear(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for terms in self.families.values():
            for i, c in terms.linear.items():
                out[i] = out.get(i, 0.0) + c
        return {i: c for i, c in out.items() if c != 0.0}

    @property
    def quadratic(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for terms in self.families.values():
            for ij, c in terms.quadratic.items():
                out[ij] = out.get(ij, 0.0) + c
        return {ij: c for ij, c in out.items() if c != 0.0}

    @property
    def offset(self) -> float:
        return float(sum(t.offset for t in self.families.values()))

    def compact(self) -> "QuboModel":
        """Drop exactly-zero coefficients in place."""
        for terms in self.families.values():
            terms.linear = {i: c for i, c in terms.linear.items() if c != 0.0}
            terms.quadratic = {ij: c for ij, c in terms.quadratic.items() if c != 0.0}
        return self

    def copy(self) -> "QuboModel":
        other = QuboModel(self._keys, self.meta)
        other.families = {name: t.copy() for name, t in self.families.items()}
        other.fixed = dict(self.fixed)
        return other

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float]:
        """``(linear, rows, cols, values, offset)`` with ``rows < cols``."""
        lin = np.zeros(self.num_vars)
        for i, c in self.linear.items():
            lin[i] = c
        quad = self.quadratic
        rows = np.fromiter((ij[0] for ij in quad), dtype=np.int64, count=len(quad))
        cols = np.fromiter((ij[1] for ij in quad), dtype=np.int64, count=len(quad))
        vals = np.fromiter(quad.values(), dtype=float, count=len(quad))
        return lin, rows, cols, vals, self.offset

    def dense(self) -> tuple[np.ndarray, np.ndarray, float]:
        """``(linear, Q, offset)`` with ``Q`` strictly upper triangular."""
        lin, rows, cols, vals, offset = self.arrays()
        q = np.zeros((self.num_vars, self.num_vars))
        np.add.at(q, (rows, cols), vals)
        return lin, q, offset

    @classmethod
    def from_coefficients(
        cls,
        linear: Mapping[int, float] = (),
        quadratic: Mapping[tuple[int, int], float] = (),
        offset: float = 0.0,
        num_vars: Optional[int] = None,
        family: str = OBJECTIVE,
    ) -> "QuboModel":
        """Generic model whose variable keys are the integers ``0..n-1``."""
        linear = dict(linear)
        quadratic = dict(quadratic)
        if num_vars is None:
            used = list(linear) + [k for ij in quadratic for k in ij]
            num_vars = max(used) + 1 if used else 0
        model = cls(range(num_vars))
        model._family(family)
        for i, c in linear.items():
            model.add_linear(i, c, family)
        for (i, j), c in quadratic.items():
            model.add_quadratic(i, j, c, family)
        if offset:
            model.add_offset(offset, family)
        return model

    def __repr__(self) -> str:
        return (
            f"QuboModel(num_vars={self.num_vars}, fixed={len(self.fixed)}, "
            f"families={sorted(self.families)})"
        )


@dataclass
class IsingModel:
    num_vars: int
    h: dict[int, float] = field(default_factory=dict)
    J: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0


def _as_bits(model: QuboModel, bits: Sequence[int]) -> np.ndarray:
    x = np.asarray(bits)
    if x.ndim != 1 or x.shape[0] != model.num_vars:
        raise DimensionError(
            f"assignment has length {x.shape[0] if x.ndim else 0}, model has {model.num_vars} variables"
        )
    if x.size and not np.all((x == 0) | (x == 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return x.astype(float)


def energy(model: QuboModel, bits: Sequence[int]) -> float:
    x = _as_bits(model, bits)
    lin, rows, cols, vals, offset = model.arrays()
    return float(offset + lin @ x + np.sum(vals * x[rows] * x[cols]))


def family_energies(model: QuboModel, bits: Sequence[int]) -> dict[str, float]:
    x = _as_bits(model, bits)
    out = {}
    for name, terms in model.families.items():
        total = terms.offset
        total += sum(c * x[i] for i, c in terms.linear.items())
        total += sum(c * x[i] * x[j] for (i, j), c in terms.quadratic.items())
        out[name] = float(total)
    return out


def add_squared_linear(
    model: QuboModel,
    coeffs: Iterable[tuple[int, float]],
    constant: float,
    lam: float,
    family: str = OBJECTIVE,
) -> None:
    """Add ``lam * (constant + sum_k c_k x_{i_k})**2`` expanded with ``x**2 = x``.

    Repeated indices in ``coeffs`` are merged before squaring.
    """
    merged: dict[int, float] = {}
    for i, c in coeffs:
        merged[i] = merged.get(i, 0.0) + c
    items = sorted((i, c) for i, c in merged.items() if c != 0.0)
    model.add_offset(lam * constant * constant, family)
    for i, c in items:
        model.add_linear(i, lam * (2.0 * constant * c + c * c), family)
    for a in range(len(items)):
        i, ci = items[a]
        for b in range(a + 1, len(items)):
            j, cj = items[b]
            model.add_quadratic(i, j, 2.0 * lam * ci * cj, family)


def _check_registered(model: QuboModel, indices: Sequence[int]) -> list[int]:
    indices = list(indices)
    if not indices:
        raise ValueError("constraint needs at least one variable")
    for i in indices:
        model._check(i)
    if len(set(indices)) != len(indices):
        raise ValueError("constraint variables must be distinct")
    return indices


def add_one_hot(model: QuboModel, indices: Sequence[int], lam: float, family: str = "one-hot") -> None:
    """Add ``lam * (1 - sum x)**2``: zero iff exactly one variable is set."""
    indices = _check_registered(model, indices)
    add_squared_linear(model, ((i, -1.0) for i in indices), 1.0, lam, family)


def add_half_hot(model: QuboModel, indices: Sequence[int], lam: float, family: str = "half-hot") -> None:
    """Add ``lam * (1 - 2 sum x)**2``: equals ``lam`` iff zero or one variable is set."""
    indices = _check_registered(model, indices)
    add_squared_linear(model, ((i, -2.0) for i in indices), 1.0, lam, family)


def merge(a: QuboModel, b: QuboModel) -> QuboModel:
    """Coefficient-wise sum of two models over the same registry."""
    if a.keys != b.keys:
        raise RegistryError("models have different registries")
    out = a.copy()
    for name, terms in b.families.items():
        for i, c in terms.linear.items():
            out.add_linear(i, c, name)
        for (i, j), c in terms.quadratic.items():
            out.add_quadratic(i, j, c, name)
        out.add_offset(terms.offset, name)
    return out


def to_ising(model: QuboModel) -> IsingModel:
    """Substitute ``x = (1 + s) / 2``; energies agree under ``s = 2x - 1``."""
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = model.offset
    for i, c in model.linear.items():
        offset += c / 2.0
        h[i] = h.get(i, 0.0) + c / 2.0
    for (i, j), c in model.quadratic.items():
        q = c / 4.0
        offset += q
        h[i] = h.get(i, 0.0) + q
        h[j] = h.get(j, 0.0) + q
        J[(i, j)] = J.get((i, j), 0.0) + q
    h = {i: c for i, c in h.items() if c != 0.0}
    return IsingModel(model.num_vars, h, J, offset)


def ising_energy(m: IsingModel, spins: Sequence[int]) -> float:
    s = np.asarray(spins)
    if s.ndim != 1 or s.shape[0] != m.num_vars:
        raise DimensionError(f"expected {m.num_vars} spins, got {s.shape}")
    if s.size and not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be -1 or +1")
    total = m.offset
    total += sum(c * s[i] for i, c in m.h.items())
    total += sum(c * s[i] * s[j] for (i, j), c in m.J.items())
    return float(total)


def fix_variables(model: QuboModel, values: Mapping[Hashable, int]) -> QuboModel:
    """Return a reduced model with the given keys substituted by 0/1 values.

    Quadratic terms touching a fixed variable fold into linear terms or the
    offset of the same family; the reduced energy of any remaining assignment
    equals the original energy with the fixed values inserted.
    """
    fixed_idx: dict[int, int] = {}
    for key, v in values.items():
        if v not in (0, 1):
            raise ValueError(f"fixed value must be 0 or 1, got {v!r}")
        fixed_idx[model.index(key)] = int(v)
    remaining = [k for i, k in enumerate(model.keys) if i not in fixed_idx]
    new_index = {}
    for i in range(model.num_vars):
        if i not in fixed_idx:
            new_index[i] = len(new_index)

    out = QuboModel(remaining, model.meta)
    out.fixed = dict(model.fixed)
    out.fixed.update({model.key(i): v for i, v in fixed_idx.items()})
    for name, terms in model.families.items():
        new = out._family(name)
        new.offset = terms.offset
        for i, c in terms.linear.items():
            if i in fixed_idx:
                new.offset += c * fixed_idx[i]
            else:
                k = new_index[i]
                new.linear[k] = new.linear.get(k, 0.0) + c
        for (i, j), c in terms.quadratic.items():
            fi, fj = i in fixed_idx, j in fixed_idx
            if fi and fj:
                new.offset += c * fixed_idx[i] * fixed_idx[j]
            elif fi or fj:
                v, free = (fixed_idx[i], j) if fi else (fixed_idx[j], i)
                if v:
                    k = new_index[free]
                    new.linear[k] = new.linear.get(k, 0.0) + c
            else:
                ij = (new_index[i], new_index[j])
                new.quadratic[ij] = new.quadratic.get(ij, 0.0) + c
    return out.compact()


def fix_variable(model: QuboModel, key: Hashable, value: int) -> QuboModel:
    return fix_variables(model, {key: value})


def full_assignment(model: QuboModel, bits: Sequence[int]) -> dict[Hashable, int]:
    """Map every key, free or fixed, to its value under ``bits``."""
    x = _as_bits(model, bits)
    values = dict(model.fixed)
    values.update({k: int(x[i]) for i, k in enumerate(model.keys)})
    return values


# text export ------------------------------------------------------------

def write_qubo(model: QuboModel) -> str:
    """Line format: comments start with '#', then ``<num_vars>``, then ``i j coeff``."""
    lines = ["# rpp_qubo export", f"# offset {model.offset!r}", str(model.num_vars)]
    for i, c in sorted(model.linear.items()):
        lines.append(f"{i} {i} {c!r}")
    for (i, j), c in sorted(model.quadratic.items()):
        lines.append(f"{i} {j} {c!r}")
    return "\n".join(lines) + "\n"


def sidecar(model: QuboModel) -> dict:
    """JSON sidecar: index -> key descriptions, fixed values and per-family terms."""
    return {
        "formulation": model.meta.get("formulation"),
        "num_vars": model.num_vars,
        "num_fixed": len(model.fixed),
        "variables": [{"index": i, "key": describe(k)} for i, k in enumerate(model.keys)],
        "fixed": [{"key": describe(k), "value": v} for k, v in model.fixed.items()],
        "families": {
            name: {
                "offset": t.offset,
                "linear": [[i, c] for i, c in sorted(t.linear.items())],
                "quadratic": [[i, j, c] for (i, j), c in sorted(t.quadratic.items())],
            }
            for name, t in sorted(model.families.items())
        },
        "meta": {k: v for k, v in model.meta.items() if _jsonable(v)},
    }


def _jsonable(value) -> bool:
    try:
        json.dumps(value)
    except TypeError:
        return False
    return True


def read_qubo(text: str, side: Optional[dict] = None) -> QuboModel:
    """Parse :func:`write_qubo` output; with a sidecar, keys and families are restored."""
    offset = 0.0
    header: Optional[int] = None
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "offset":
                offset = float(parts[1])
            continue
        try:
            if header is None:
                header = int(line)
                continue
            i, j, c = line.split()
            entries.append((int(i), int(j), float(c)))
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from None
    if header is None:
        raise ValueError("missing <num_vars> line")

    if side is None:
        model = QuboModel(range(header))
        for i, j, c in entries:
            model.add_quadratic(i, j, c)
        model.add_offset(offset)
        return model.compact()

    keys = [from_description(v["key"]) for v in sorted(side["variables"], key=lambda v: v["index"])]
    if len(keys) != header:
        raise ValueError("sidecar variable count does not match the QUBO file")
    model = QuboModel(keys, side.get("meta"))
    model.fixed = {from_description(f["key"]): int(f["value"]) for f in side.get("fixed", [])}
    for name, fam in side.get("families", {}).items():
        terms = model._family(name)
        terms.offset = float(fam["offset"])
        terms.linear = {int(i): float(c) for i, c in fam["linear"]}
        terms.quadratic = {(int(i), int(j)): float(c) for i, j, c in fam["quadratic"]}
    return model
