"""Study configuration: TOML file -> validated StudyConfig."""
from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "length"],
            "properties": {
                "n": {"type": "integer", "minimum": 8, "multipleOf": 2},
                "length": _POS,
                "resolutions": {"type": "array", "items": {"type": "integer", "minimum": 8, "multipleOf": 2}},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["soliton", "sine", "zero"]},
                "c": _POS,
                "x0": _NUM,
                "amplitudes": {"type": "array", "items": _NUM, "minItems": 1},
            },
        },
        "study": {
            "type": "object",
            "additionalProperties": False,
            "required": ["deltas", "t_final"],
            "properties": {
                "deltas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                           "minItems": 3},
                "t_final": _POS,
                "n_outputs": {"type": "integer", "minimum": 1},
                "output_times": {"type": "array", "items": _POS},
                "second_order": {"type": "boolean"},
            },
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kdv_dt": _POS,
                "ep_dt": _POS,
                "poisson_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-10},
                "c_cfl": _POS,
                "filter": {"oneOf": [{"enum": ["auto", "off"]}, {"type": "number", "minimum": 0}]},
            },
        },
        "acceptance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"order_min": _NUM, "order_max": _NUM, "second_order_min": _NUM, "trivial_tol": _POS},
        },
        "kinetic": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "vmax": {"type": "number", "minimum": 8},
                "m": {"type": "integer", "minimum": 4},
                "eps": _POS,
                "C_tilde": _POS,
            },
        },
        "output": {"type": "object", "additionalProperties": False, "properties": {"dir": {"type": "string"}}},
    },
    "required": ["grid", "initial", "study"],
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StudyConfig:
    n: int = 512
    length: float = 40.0
    resolutions: tuple = ()
    initial_kind: str = "soliton"
    c: float = 0.5
    x0: float | None = None
    amplitudes: tuple = ()
    deltas: tuple = (0.2, 0.1, 0.05)
    t_final: float = 1.0
    output_times: tuple = ()
    second_order: bool = False
    kdv_dt: float = 0.005
    ep_dt: float = 1.0
    poisson_tol: float = 1e-12
    c_cfl: float = 0.3
    filter: str | float = "auto"
    order_min: float = 1.7
    order_max: float = 2.3
    second_order_min: float = 2.5
    trivial_tol: float = 1e-13
    vmax: float = 10.0
    m: int = 64
    eps: float = 1e-3
    C_tilde: float = 1.0
    out_dir: str = "out"

    def __post_init__(self):
        d = list(self.deltas)
        if len(d) < 3:
            raise ConfigError("study.deltas needs at least 3 values for order fitting")
        if any(b >= a for a, b in zip(d, d[1:])):
            raise ConfigError(f"study.deltas must be strictly decreasing, got {d}")
        if not self.output_times:
            object.__setattr__(self, "output_times", tuple(self.t_final * (i + 1) / 10 for i in range(10)))
        if max(self.output_times) > self.t_final + 1e-12:
            raise ConfigError("output_times must not exceed t_final")

    @property
    def hyperviscosity(self):
        if self.filter == "auto":
            return None
        if self.filter == "off":
            return 0.0
        return float(self.filter)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()


def _locate(text: str, path) -> int | None:
    """Best-effort line number for a dotted key path in TOML source."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    lines = text.splitlines()
    start = 0
    if len(keys) > 1:
        for i, line in enumerate(lines):
            if re.match(rf"\s*\[\s*{re.escape(keys[0])}\s*\]", line):
                start = i
                break
        else:
            return None
    target = keys[-1]
    for i in range(start, len(lines)):
        if i > start and len(keys) > 1 and re.match(r"\s*\[", lines[i]):
            return start + 1
        if re.match(rf"\s*{re.escape(target)}\s*=", lines[i]) or re.match(rf"\s*\[\s*{re.escape(target)}\s*\]", lines[i]):
            return i + 1
    return start + 1 if len(keys) > 1 else None


def parse_config(text: str, source: str = "<config>") -> StudyConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            path = list(e.absolute_path)
            if e.validator == "additionalProperties":
                extra = re.findall(r"'([^']+)'", e.message)
                path = path + extra[:1]
            line = _locate(text, path)
            where = f"{source}:{line}" if line else source
            msgs.append(f"{where}: {'.'.join(map(str, path)) or '<root>'}: {e.message}")
        raise ConfigError("\n".join(msgs))
    g, ini, st = raw["grid"], raw["initial"], raw["study"]
    num, acc, kin = raw.get("numerics", {}), raw.get("acceptance", {}), raw.get("kinetic", {})
    if ini["kind"] == "soliton" and "c" not in ini:
        raise ConfigError(f"{source}:{_locate(text, ['initial', 'kind'])}: soliton initial data needs 'c'")
    if ini["kind"] == "sine" and "amplitudes" not in ini:
        raise ConfigError(f"{source}:{_locate(text, ['initial', 'kind'])}: sine initial data needs 'amplitudes'")
    outs = tuple(st.get("output_times", ()))
    if not outs and "n_outputs" in st:
        k = st["n_outputs"]
        outs = tuple(st["t_final"] * (i + 1) / k for i in range(k))
    try:
        return StudyConfig(
            n=g["n"], length=float(g["length"]), resolutions=tuple(g.get("resolutions", ())),
            initial_kind=ini["kind"], c=float(ini.get("c", 0.5)), x0=ini.get("x0"),
            amplitudes=tuple(ini.get("amplitudes", ())),
            deltas=tuple(float(d) for d in st["deltas"]), t_final=float(st["t_final"]),
            output_times=outs, second_order=st.get("second_order", False),
            **{k: num[k] for k in ("kdv_dt", "ep_dt", "poisson_tol", "c_cfl", "filter") if k in num},
            **{k: acc[k] for k in ("order_min", "order_max", "second_order_min", "trivial_tol") if k in acc},
            **{k: kin[k] for k in ("vmax", "m", "eps", "C_tilde") if k in kin},
            out_dir=raw.get("output", {}).get("dir", "out"),
        )
    except ConfigError as exc:
        raise ConfigError(f"{source}:{_locate(text, ['study', 'deltas'])}: {exc}") from None


def load_config(path) -> StudyConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))
