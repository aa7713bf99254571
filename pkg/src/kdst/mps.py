"""MPS export/import for LinearProgram.

The writer uses the fixed-format column layout but lets long names and
full-precision numbers overflow their fields; the reader splits on
whitespace, so it accepts both fixed and free MPS.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np
from scipy.sparse import csr_matrix

from .errors import ConfigError
from .lp import LinearProgram

_OBJ = "COST"


def _num(x: float) -> str:
    return repr(float(x))


def _field_line(f1: str, f2: str, f3: str, f4: str, f5: str = "", f6: str = "") -> str:
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        line += f"   {f5:<8}  {f6:>12}"
    return line.rstrip()


def write_mps(lp: LinearProgram, name: str | None = None) -> str:
    out = [f"NAME          {name or lp.name}", "ROWS", f" N  {_OBJ}"]
    for rname, s in zip(lp.row_names, lp.senses):
        out.append(f" {s}  {rname}")
    out.append("COLUMNS")
    A = lp.A.tocsc()
    for j, vname in enumerate(lp.var_names):
        entries = []
        if lp.objective[j] != 0:
            entries.append((_OBJ, lp.objective[j]))
        for ptr in range(A.indptr[j], A.indptr[j + 1]):
            entries.append((lp.row_names[A.indices[ptr]], A.data[ptr]))
        if not entries:
            # keep the column visible so bounds and ordering survive a round trip
            entries.append((_OBJ, 0.0))
        for a in range(0, len(entries), 2):
            pair = entries[a:a + 2]
            f5, f6 = (pair[1][0], _num(pair[1][1])) if len(pair) == 2 else ("", "")
            out.append(_field_line("", vname, pair[0][0], _num(pair[0][1]), f5, f6))
    out.append("RHS")
    for rname, b in zip(lp.row_names, lp.rhs):
        if b != 0:
            out.append(_field_line("", "RHS", rname, _num(b)))
    out.append("BOUNDS")
    for vname, lo, up in zip(lp.var_names, lp.lower, lp.upper):
        if lo == up:
            out.append(_field_line("FX", "BND", vname, _num(up)))
            continue
        if lo != 0:
            out.append(_field_line("MI" if np.isneginf(lo) else "LO", "BND", vname, "" if np.isneginf(lo) else _num(lo)))
        if np.isfinite(up):
            out.append(_field_line("UP", "BND", vname, _num(up)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(text: str) -> LinearProgram:
    section = None
    name = "mps"
    obj_row = None
    row_names: list[str] = []
    senses: list[str] = []
    row_index: dict[str, int] = {}
    var_names: list[str] = []
    var_index: dict[str, int] = {}
    coeffs: dict[tuple[int, int], float] = {}
    cost: dict[int, float] = defaultdict(float)
    rhs: dict[int, float] = {}
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}

    def col(v: str) -> int:
        if v not in var_index:
            var_index[v] = len(var_names)
            var_names.append(v)
        return var_index[v]

    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        toks = raw.split()
        if not raw[0].isspace():
            section = toks[0].upper()
            if section == "NAME":
                name = toks[1] if len(toks) > 1 else name
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES"):
                raise ConfigError(f"MPS line {lineno}: unknown section {toks[0]}")
            continue
        if section == "ROWS":
            kind, rname = toks[0].upper(), toks[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if kind not in ("L", "G", "E"):
                raise ConfigError(f"MPS line {lineno}: bad row type {kind}")
            row_index[rname] = len(row_names)
            row_names.append(rname)
            senses.append(kind)
        elif section == "COLUMNS":
            if "MARKER" in toks:
                raise ConfigError("integer markers are not supported")
            j = col(toks[0])
            for rname, val in zip(toks[1::2], toks[2::2]):
                if rname == obj_row:
                    cost[j] += float(val)
                elif rname in row_index:
                    coeffs[(row_index[rname], j)] = float(val)
                else:
                    raise ConfigError(f"MPS line {lineno}: unknown row {rname}")
        elif section == "RHS":
            pairs = toks[1:] if len(toks) % 2 == 1 else toks
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                if rname == obj_row:
                    continue
                rhs[row_index[rname]] = float(val)
        elif section == "BOUNDS":
            kind, vname = toks[0].upper(), toks[2]
            j = col(vname)
            val = float(toks[3]) if len(toks) > 3 else 0.0
            if kind == "UP":
                upper[j] = val
            elif kind == "LO":
                lower[j] = val
            elif kind == "FX":
                lower[j] = upper[j] = val
            elif kind == "MI":
                lower[j] = -np.inf
            elif kind == "PL":
                upper[j] = np.inf
            elif kind == "FR":
                lower[j], upper[j] = -np.inf, np.inf
            else:
                raise ConfigError(f"MPS line {lineno}: unsupported bound type {kind}")
        elif section == "RANGES":
            raise ConfigError("RANGES section is not supported")

    n, m = len(var_names), len(row_names)
    keys = list(coeffs)
    A = csr_matrix(
        ([coeffs[k] for k in keys], ([k[0] for k in keys], [k[1] for k in keys])), shape=(m, n)
    )
    return LinearProgram(
        name=name,
        var_names=var_names,
        var_tags=[("col", v) for v in var_names],
        objective=np.array([cost[j] for j in range(n)], dtype=float),
        upper=np.array([upper.get(j, np.inf) for j in range(n)], dtype=float),
        A=A,
        senses=np.array(senses, dtype="<U1"),
        rhs=np.array([rhs.get(i, 0.0) for i in range(m)], dtype=float),
        row_names=row_names,
        lower=np.array([lower.get(j, 0.0) for j in range(n)], dtype=float),
    )
