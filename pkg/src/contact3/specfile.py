"""Reader and writer for ``.cmm`` manifold spec files.

A spec file is line oriented::

    # comment
    [manifold]
    name = example3
    coordinates = x, y, z
    box.z = 0.5, 2.5          # sampling interval, default [-1, 1]
    nonzero = z               # domain constraint, repeatable
    positive = z

    [define]                  # optional named subexpressions
    a1 = 2*y

    [frame]                   # xi, e, phi e as component triples
    xi = 1, 0, 0
    e = -2*y, 2*x*z - 1, 1
    phie = 0, 1, 0

Tensor mode replaces ``[frame]`` with ``[tensor]`` holding ``g`` (six upper
triangle entries g11, g12, g13, g22, g23, g33), ``phi`` (nine entries, row
major, row = output index) and ``xi`` (three entries).
"""

from __future__ import annotations

import importlib.resources
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import Expr, ParseError, free_symbols, parse, render
from .structure import ChartSpec, ContactStructure, build_from_frame, build_from_tensors

SECTIONS = ("manifold", "define", "frame", "tensor")
_ARITY = {"frame": {"xi": 3, "e": 3, "phie": 3}, "tensor": {"g": 6, "phi": 9, "xi": 3}}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")
DEFAULT_INTERVAL = (-1.0, 1.0)


class SpecError(ValueError):
    """Malformed spec file; carries a 1-based line and column."""

    def __init__(self, message, line=0, column=0, source="<spec>"):
        self.message, self.line, self.column, self.source = message, line, column, source
        super().__init__(f"{source}:{line}:{column}: {message}")


@dataclass
class ManifoldSpec:
    name: str
    coords: tuple
    mode: str
    fields: dict
    box: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)  # (kind, Expr)
    defines: list = field(default_factory=list)      # (name, Expr)

    def chart(self) -> ChartSpec:
        box = {c: tuple(self.box.get(c, DEFAULT_INTERVAL)) for c in self.coords}
        return ChartSpec(tuple(self.coords), box, tuple(self.constraints))

    def build(self) -> ContactStructure:
        chart = self.chart()
        f = self.fields
        if self.mode == "frame":
            return build_from_frame(chart, f["xi"], f["e"], f["phie"], self.name)
        g6 = f["g"]
        g = [[g6[0], g6[1], g6[2]], [g6[1], g6[3], g6[4]], [g6[2], g6[4], g6[5]]]
        phi = [f["phi"][0:3], f["phi"][3:6], f["phi"][6:9]]
        return build_from_tensors(chart, g, phi, f["xi"], self.name)

    def dumps(self) -> str:
        lines = ["[manifold]", f"name = {self.name}", "coordinates = " + ", ".join(self.coords)]
        for c in self.coords:
            if c in self.box:
                lo, hi = self.box[c]
                lines.append(f"box.{c} = {_num(lo)}, {_num(hi)}")
        lines += [f"{kind} = {render(e)}" for kind, e in self.constraints]
        if self.defines:
            lines += ["", "[define]"] + [f"{n} = {render(e)}" for n, e in self.defines]
        lines += ["", f"[{self.mode}]"]
        for key in _ARITY[self.mode]:
            lines.append(f"{key} = " + ", ".join(render(e) for e in self.fields[key]))
        return "\n".join(lines) + "\n"


def _num(v: float) -> str:
    return repr(float(v)) if not float(v).is_integer() else str(int(v))


def _split(value: str, offset: int):
    """Split on commas, returning (text, column) pairs; column is 1-based."""
    out, start = [], 0
    for i, ch in enumerate(value + ","):
        if ch == ",":
            piece = value[start:i]
            lead = len(piece) - len(piece.lstrip())
            out.append((piece.strip(), offset + start + lead))
            start = i + 1
    return out


def loads(text: str, source: str = "<spec>") -> ManifoldSpec:
    section = None
    seen = {}
    header: dict = {}
    box: dict = {}
    constraints_raw = []
    defines: dict = {}
    define_order = []
    body: dict = {}
    mode = None

    def err(msg, ln, col=1):
        raise SpecError(msg, ln, col, source)

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                err("unterminated section header", ln, indent + 1)
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                err(f"unknown section [{section}]", ln, indent + 2)
            if section in seen:
                err(f"duplicate section [{section}] (first at line {seen[section]})", ln, indent + 1)
            seen[section] = ln
            if section in _ARITY:
                if mode is not None:
                    err("a spec has exactly one of [frame] or [tensor]", ln, indent + 1)
                mode = section
            continue
        if "=" not in stripped:
            err("expected 'key = value'", ln, indent + 1)
        if section is None:
            err("key outside of any section", ln, indent + 1)
        key_raw, value = stripped.split("=", 1)
        key = key_raw.strip()
        vcol = indent + len(key_raw) + 2 + (len(value) - len(value.lstrip()))
        value = value.strip()
        if not value:
            err(f"empty value for '{key}'", ln, vcol)
        if section == "manifold":
            if key in ("name", "coordinates"):
                if key in header:
                    err(f"duplicate key '{key}'", ln, indent + 1)
                header[key] = (value, ln, vcol)
            elif key.startswith("box."):
                box[key[4:]] = (value, ln, vcol, indent + 5)
            elif key in ("nonzero", "positive"):
                constraints_raw.append((key, value, ln, vcol))
            else:
                err(f"unknown key '{key}' in [manifold]", ln, indent + 1)
        elif section == "define":
            if not _IDENT.match(key):
                err(f"invalid name '{key}'", ln, indent + 1)
            if key in defines:
                err(f"duplicate definition '{key}'", ln, indent + 1)
            defines[key] = (value, ln, vcol)
            define_order.append(key)
        else:
            if key not in _ARITY[section]:
                err(f"unknown key '{key}' in [{section}]", ln, indent + 1)
            if key in body:
                err(f"duplicate key '{key}'", ln, indent + 1)
            body[key] = (value, ln, vcol)

    if "manifold" not in seen:
        err("missing [manifold] section", 1)
    if mode is None:
        err("missing [frame] or [tensor] section", max(seen.values()))
    name = header.get("name", ("unnamed",))[0]
    if "coordinates" in header:
        value, ln, vcol = header["coordinates"]
        coords = tuple(t for t, _ in _split(value, vcol))
        for t, col in _split(value, vcol):
            if not _IDENT.match(t):
                err(f"invalid coordinate name '{t}'", ln, col)
        if len(coords) != 3 or len(set(coords)) != 3:
            err("exactly three distinct coordinates are required", ln, vcol)
    else:
        coords = ("x", "y", "z")

    def expr(text, ln, col, defs):
        try:
            return parse(text, coords, defs)
        except ParseError as e:
            raise SpecError(e.message if hasattr(e, "message") else str(e), ln,
                            col + max(getattr(e, "position", 1), 1) - 1, source) from None

    defs: dict = {}
    for n in define_order:
        if n in coords:
            err(f"definition '{n}' shadows a coordinate", defines[n][1])
        value, ln, vcol = defines[n]
        defs[n] = expr(value, ln, vcol, dict(defs))

    box_out = {}
    for c, (value, ln, vcol, kcol) in box.items():
        if c not in coords:
            err(f"box for unknown coordinate '{c}'", ln, kcol)
        parts = _split(value, vcol)
        if len(parts) != 2:
            err("box needs two numbers 'lo, hi'", ln, vcol)
        nums = []
        for t, col in parts:
            try:
                nums.append(float(t))
            except ValueError:
                err(f"not a number: '{t}'", ln, col)
            if not math.isfinite(nums[-1]):
                err(f"not a finite number: '{t}'", ln, col)
        if not nums[0] < nums[1]:
            err("box interval must satisfy lo < hi", ln, vcol)
        box_out[c] = tuple(nums)

    constraints = [(kind, expr(v, ln, vcol, defs)) for kind, v, ln, vcol in constraints_raw]
    fields_out = {}
    for key, n in _ARITY[mode].items():
        if key not in body:
            err(f"missing '{key}' in [{mode}]", seen[mode])
        value, ln, vcol = body[key]
        parts = _split(value, vcol)
        if len(parts) != n:
            err(f"'{key}' needs {n} components, got {len(parts)}", ln, vcol)
        for t, col in parts:
            if not t:
                err("empty component", ln, col)
        fields_out[key] = [expr(t, ln, col, defs) for t, col in parts]
    return ManifoldSpec(name, coords, mode, fields_out, box_out, constraints,
                        [(n, defs[n]) for n in define_order])


def load(path) -> ManifoldSpec:
    """Load a spec from a path, or ``catalog:<name>`` for a bundled one."""
    path = str(path)
    if path.startswith("catalog:"):
        name = path.split(":", 1)[1]
        res = importlib.resources.files("contact3") / "catalog" / f"{name}.cmm"
        if not res.is_file():
            raise FileNotFoundError(f"no catalog entry named '{name}'")
        return loads(res.read_text(encoding="utf-8"), path)
    return loads(Path(path).read_text(encoding="utf-8"), path)


def spec_from_structure_inputs(name, coords, mode, fields, box=None, constraints=()) -> ManifoldSpec:
    """ManifoldSpec from Exprs (or strings) without going through text."""
    conv = {k: [e if isinstance(e, Expr) else parse(str(e), coords) for e in v] for k, v in fields.items()}
    cons = [(k, e if isinstance(e, Expr) else parse(str(e), coords)) for k, e in constraints]
    for exprs in conv.values():
        for e in exprs:
            extra = free_symbols(e) - set(coords)
            if extra:
                raise ValueError(f"unknown symbols {sorted(extra)}")
    return ManifoldSpec(name, tuple(coords), mode, conv, dict(box or {}), cons)
