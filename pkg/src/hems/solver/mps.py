"""Fixed-format MPS export.

Names are limited to eight characters. Longer names, and names that would
collide, are shortened to a prefix plus a base-36 sequence number; a comment
block at the top maps every shortened name back to the original variable
name or constraint tag.
"""

from __future__ import annotations

import math

from ..formulation import MilpModel

NAME_WIDTH = 8
VALUE_WIDTH = 12
_DIGITS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _base36(n: int, width: int) -> str:
    out = ""
    for _ in range(width):
        n, r = divmod(n, 36)
        out = _DIGITS[r] + out
    return out


def short_names(names: list[str], width: int = NAME_WIDTH, reserved: set[str] | None = None) -> list[str]:
    """Deterministic, collision-free names of at most ``width`` characters."""
    used = set(reserved or ())
    out = []
    seq = 0
    for name in names:
        cand = name.replace(" ", "_")
        if len(cand) > width or cand in used:
            prefix = cand[: width - 5]
            while True:
                cand = f"{prefix}~{_base36(seq, 4)}"
                seq += 1
                if cand not in used:
                    break
        used.add(cand)
        out.append(cand)
    return out


def format_number(value: float, width: int = VALUE_WIDTH) -> str:
    """Shortest representation of ``value`` that fits in ``width`` characters."""
    if value == 0:
        return "0"
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    if len(text) <= width:
        return text
    for digits in range(width, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= width:
            return text
    raise ValueError(f"cannot fit {value!r} in {width} characters")


def _line(code: str, name: str, f1: str = "", v1: str = "", f2: str = "", v2: str = "") -> str:
    # fields start at columns 2, 5, 15, 25, 40, 50
    text = f" {code:<2} {name:<8}  {f1:<8}  {v1:>12}"
    if f2:
        text += f"   {f2:<8}  {v2:>12}"
    return text.rstrip()


def _marker(seq: int, tag: str) -> str:
    name = f"MRK{seq:05d}"
    return f"    {name:<8}  'MARKER'{'':17}{tag}"


def export_mps(model: MilpModel) -> str:
    """Render ``model`` as a fixed-format MPS document (minimisation)."""
    obj_row = "COST"
    row_names = short_names(model.tags, reserved={obj_row})
    col_names = short_names([v.name for v in model.variables])

    lines = ["* generated by hems; objective sense: minimize"]
    for short, full in zip(row_names, model.tags):
        if short != full:
            lines.append(f"* row {short} = {full}")
    for short, var in zip(col_names, model.variables):
        if short != var.name:
            lines.append(f"* col {short} = {var.name}")
    if model.objective_constant:
        lines.append(f"* objective constant {model.objective_constant!r} omitted")

    lines.append(f"NAME          {model.name[:NAME_WIDTH]}")
    lines.append("ROWS")
    lines.append(f" N  {obj_row}")
    for short, con in zip(row_names, model.constraints):
        lines.append(f" {con.sense.value}  {short}")

    by_col: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for short, con in zip(row_names, model.constraints):
        for vid, coef in con.terms:
            by_col[vid].append((short, coef))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j, var in enumerate(model.variables):
        if var.binary != in_int:
            tag = "'INTORG'" if var.binary else "'INTEND'"
            lines.append(_marker(marker, tag))
            marker += 1
            in_int = var.binary
        entries = []
        if var.objective_coeff != 0 or not by_col[j]:
            entries.append((obj_row, var.objective_coeff))
        entries.extend(by_col[j])
        for k in range(0, len(entries), 2):
            pair = entries[k : k + 2]
            f1, v1 = pair[0][0], format_number(pair[0][1])
            f2, v2 = (pair[1][0], format_number(pair[1][1])) if len(pair) > 1 else ("", "")
            lines.append(_line("", col_names[j], f1, v1, f2, v2))
    if in_int:
        lines.append(_marker(marker, "'INTEND'"))

    lines.append("RHS")
    rhs = [(short, con.rhs) for short, con in zip(row_names, model.constraints) if con.rhs != 0]
    for k in range(0, len(rhs), 2):
        pair = rhs[k : k + 2]
        f2, v2 = (pair[1][0], format_number(pair[1][1])) if len(pair) > 1 else ("", "")
        lines.append(_line("", "RHS", pair[0][0], format_number(pair[0][1]), f2, v2))

    lines.append("RANGES")
    lines.append("BOUNDS")
    for short, var in zip(col_names, model.variables):
        lo, hi = var.lower, var.upper
        if lo == hi:
            lines.append(_line("FX", "BND", short, format_number(lo)))
            continue
        if lo == -math.inf:
            lines.append(_line("MI", "BND", short))
        elif lo != 0:
            lines.append(_line("LO", "BND", short, format_number(lo)))
        if hi != math.inf:
            lines.append(_line("UP", "BND", short, format_number(hi)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
