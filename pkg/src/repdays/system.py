"""Power-system data: buses, units, lines, budgets and their validation.

System files are TOML.  Powers are MW, energies MWh, money $, line
reactances per unit on ``options.base_power``.  The README documents the
full schema.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

STORAGE_ENERGY_COST = 60_000.0    # $/MWh of capacity
STORAGE_POWER_COST = 1_000_000.0  # $/MW of capacity


def storage_investment_cost(energy_mwh: float, power_mw: float) -> float:
    """Overnight cost of one storage unit, in $."""
    if energy_mwh < 0 or power_mw < 0:
        raise ValueError("storage ratings must be non-negative")
    return STORAGE_ENERGY_COST * energy_mwh + STORAGE_POWER_COST * power_mw


class SystemError_(ValueError):
    """Schema or consistency problem in a system file."""

    def __init__(self, diagnostics: List[str], path: Optional[str] = None):
        self.diagnostics = list(diagnostics)
        where = f"{path}: " if path else ""
        super().__init__(where + "; ".join(self.diagnostics))


SchemaError = SystemError_


@dataclass(frozen=True)
class Bus:
    id: str
    is_reference: bool = False


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    capacity: float
    cost: float
    candidate: bool = False
    investment_cost: float = 0.0     # $/MW, overnight


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    reactance: float                 # pu
    capacity: float
    candidate: bool = False
    investment_cost: float = 0.0     # $

    @property
    def susceptance(self) -> float:
        return 1.0 / self.reactance


@dataclass(frozen=True)
class Storage:
    id: str
    bus: str
    energy: float
    power: float
    charge_eff: float = 0.9
    discharge_eff: float = 0.9
    initial_energy: float = 0.0
    candidate: bool = False
    max_units: int = 0
    investment_cost: float = 0.0     # $ per unit


@dataclass(frozen=True)
class WindUnit:
    id: str
    bus: str
    zone: str
    capacity: float
    candidate: bool = False
    investment_cost: float = 0.0     # $/MW


@dataclass(frozen=True)
class Demand:
    id: str
    bus: str
    zone: str
    peak: float
    shed_cost: float


@dataclass(frozen=True)
class Budgets:
    mode: str = "per_category"       # or "total"
    generation: float = math.inf
    transmission: float = math.inf
    storage: float = math.inf
    wind: float = math.inf
    total: float = math.inf


@dataclass
class SystemData:
    buses: List[Bus]
    generators: List[Generator] = field(default_factory=list)
    lines: List[Line] = field(default_factory=list)
    storages: List[Storage] = field(default_factory=list)
    wind: List[WindUnit] = field(default_factory=list)
    demands: List[Demand] = field(default_factory=list)
    budgets: Budgets = field(default_factory=Budgets)
    big_m: float = 500_000.0
    time_step: float = 1.0
    base_power: float = 100.0
    annualization: float = 0.1
    name: str = "system"

    @property
    def reference_bus(self) -> str:
        refs = [b.id for b in self.buses if b.is_reference]
        if len(refs) != 1:
            raise SystemError_([f"expected exactly one reference bus, found {len(refs)}"])
        return refs[0]

    def annualized(self, investment_cost: float) -> float:
        return self.annualization * investment_cost

    def at_bus(self, kind: str, bus: str) -> list:
        return [u for u in getattr(self, kind) if u.bus == bus]

    @property
    def candidate_generators(self):
        return [g for g in self.generators if g.candidate]

    @property
    def candidate_lines(self):
        return [l for l in self.lines if l.candidate]

    @property
    def candidate_storages(self):
        return [s for s in self.storages if s.candidate]

    @property
    def candidate_wind(self):
        return [w for w in self.wind if w.candidate]

    @property
    def load_zones(self) -> List[str]:
        return sorted({d.zone for d in self.demands})

    @property
    def wind_zones(self) -> List[str]:
        return sorted({w.zone for w in self.wind})

    def summary(self) -> Dict[str, int]:
        def split(items):
            cand = sum(1 for i in items if i.candidate)
            return len(items) - cand, cand
        out = {"buses": len(self.buses), "demands": len(self.demands)}
        for key, items in (("generators", self.generators), ("lines", self.lines),
                           ("storages", self.storages), ("wind", self.wind)):
            ex, cand = split(items)
            out[key] = len(items)
            out[f"{key}_existing"] = ex
            out[f"{key}_candidate"] = cand
        return out


def validate(system: SystemData) -> List[str]:
    """All invariant violations as human-readable diagnostics (empty if clean)."""
    diag: List[str] = []
    bus_ids = [b.id for b in system.buses]
    buses = set(bus_ids)
    if len(buses) != len(bus_ids):
        diag.append("buses: duplicate id")
    refs = [b.id for b in system.buses if b.is_reference]
    if len(refs) != 1:
        diag.append(f"buses: expected exactly one reference bus, found {len(refs)}")

    def check_ids(kind, items):
        seen = set()
        for k, it in enumerate(items):
            if it.id in seen:
                diag.append(f"{kind}[{k}].id: duplicate id {it.id!r}")
            seen.add(it.id)

    for kind in ("generators", "lines", "storages", "wind", "demands"):
        check_ids(kind, getattr(system, kind))

    for k, g in enumerate(system.generators):
        p = f"generators[{k}]"
        if g.bus not in buses:
            diag.append(f"{p}.bus: unknown bus {g.bus!r}")
        if not g.capacity > 0:
            diag.append(f"{p}.capacity: must be positive")
        if g.cost < 0 or g.investment_cost < 0:
            diag.append(f"{p}: costs must be non-negative")
        if not g.candidate and g.investment_cost:
            diag.append(f"{p}: existing unit has an investment cost")
    for k, l in enumerate(system.lines):
        p = f"lines[{k}]"
        for end in (l.from_bus, l.to_bus):
            if end not in buses:
                diag.append(f"{p}: unknown bus {end!r}")
        if l.from_bus == l.to_bus:
            diag.append(f"{p}: sending and receiving bus are the same")
        if not l.reactance > 0:
            diag.append(f"{p}.reactance: must be positive")
        if not l.capacity > 0:
            diag.append(f"{p}.capacity: must be positive")
        if l.investment_cost < 0:
            diag.append(f"{p}.investment_cost: must be non-negative")
        if not l.candidate and l.investment_cost:
            diag.append(f"{p}: existing line has an investment cost")
    for k, s in enumerate(system.storages):
        p = f"storages[{k}]"
        if s.bus not in buses:
            diag.append(f"{p}.bus: unknown bus {s.bus!r}")
        if not s.energy > 0:
            diag.append(f"{p}.energy: must be positive")
        if not s.power > 0:
            diag.append(f"{p}.power: must be positive")
        for name, eff in (("charge_eff", s.charge_eff), ("discharge_eff", s.discharge_eff)):
            if not 0 < eff <= 1:
                diag.append(f"{p}.{name}: efficiency out of range (0, 1]")
        if not 0 <= s.initial_energy <= s.energy:
            diag.append(f"{p}.initial_energy: must lie in [0, energy]")
        if s.candidate and s.max_units < 0:
            diag.append(f"{p}.max_units: must be non-negative")
    for k, w in enumerate(system.wind):
        p = f"wind[{k}]"
        if w.bus not in buses:
            diag.append(f"{p}.bus: unknown bus {w.bus!r}")
        if not w.capacity > 0:
            diag.append(f"{p}.capacity: must be positive")
    for k, d in enumerate(system.demands):
        p = f"demands[{k}]"
        if d.bus not in buses:
            diag.append(f"{p}.bus: unknown bus {d.bus!r}")
        if d.peak < 0:
            diag.append(f"{p}.peak: must be non-negative")
        if d.shed_cost < 0:
            diag.append(f"{p}.shed_cost: must be non-negative")
    b = system.budgets
    if b.mode not in ("per_category", "total"):
        diag.append(f"budgets.mode: unknown mode {b.mode!r}")
    if not system.big_m > 0:
        diag.append("options.big_m: must be positive")
    if not system.time_step > 0:
        diag.append("options.time_step: must be positive")
    if not system.base_power > 0:
        diag.append("options.base_power: must be positive")
    if not 0 < system.annualization <= 1:
        diag.append("options.annualization: must lie in (0, 1]")
    return diag


# -- loading -----------------------------------------------------------------

_KNOWN = {
    "buses": {"id", "reference"},
    "generators": {"id", "bus", "capacity", "cost", "candidate", "investment_cost", "annualized_cost"},
    "lines": {"id", "from", "to", "reactance", "capacity", "candidate", "investment_cost", "annualized_cost"},
    "storages": {"id", "bus", "energy", "power", "charge_eff", "discharge_eff", "efficiency",
                 "initial_energy", "candidate", "max_units", "investment_cost", "annualized_cost"},
    "wind": {"id", "bus", "zone", "capacity", "candidate", "investment_cost", "annualized_cost"},
    "demands": {"id", "bus", "zone", "peak", "shed_cost"},
}
_OPTIONS = {"annualization", "big_m", "time_step", "base_power"}
_BUDGET_KEYS = {"mode", "generation", "transmission", "storage", "wind", "total"}


def _invest(entry: Dict[str, Any], path: str, factor: float, diag: List[str],
            default: Optional[float] = None) -> float:
    has_i = "investment_cost" in entry
    has_a = "annualized_cost" in entry
    if not entry.get("candidate", False):
        if has_i or has_a:
            diag.append(f"{path}: existing unit has an investment cost")
        return 0.0
    if has_i and has_a:
        diag.append(f"{path}: give investment_cost or annualized_cost, not both")
        return 0.0
    if has_i:
        return float(entry["investment_cost"])
    if has_a:
        return float(entry["annualized_cost"]) / factor
    if default is not None:
        return default
    diag.append(f"{path}: candidate needs investment_cost or annualized_cost")
    return 0.0


def _require(entry, keys, path, diag) -> bool:
    ok = True
    for k in keys:
        if k not in entry:
            diag.append(f"{path}.{k}: missing")
            ok = False
    return ok


def system_from_dict(doc: Dict[str, Any], name: str = "system") -> SystemData:
    """Build and validate a :class:`SystemData` from a parsed key tree."""
    diag: List[str] = []
    opts = doc.get("options", {})
    factor = float(opts.get("annualization", 0.1))
    if not factor > 0:
        raise SystemError_(["options.annualization: must be positive"])

    for key in sorted(set(doc) - set(_KNOWN) - {"name", "options", "budgets"}):
        diag.append(f"{key}: unknown section")
    for key in sorted(set(opts) - _OPTIONS):
        diag.append(f"options.{key}: unknown option")
    for key in sorted(set(doc.get("budgets", {})) - _BUDGET_KEYS):
        diag.append(f"budgets.{key}: unknown key")
    for section, allowed in _KNOWN.items():
        for k, entry in enumerate(doc.get(section, [])):
            extra = set(entry) - allowed
            if extra:
                diag.append(f"{section}[{k}]: unknown key(s) {sorted(extra)}")

    buses = []
    for k, e in enumerate(doc.get("buses", [])):
        if _require(e, ["id"], f"buses[{k}]", diag):
            buses.append(Bus(str(e["id"]), bool(e.get("reference", False))))
    gens = []
    for k, e in enumerate(doc.get("generators", [])):
        p = f"generators[{k}]"
        if _require(e, ["id", "bus", "capacity", "cost"], p, diag):
            gens.append(Generator(str(e["id"]), str(e["bus"]), float(e["capacity"]), float(e["cost"]),
                                  bool(e.get("candidate", False)), _invest(e, p, factor, diag)))
    lines = []
    for k, e in enumerate(doc.get("lines", [])):
        p = f"lines[{k}]"
        if _require(e, ["id", "from", "to", "reactance", "capacity"], p, diag):
            lines.append(Line(str(e["id"]), str(e["from"]), str(e["to"]), float(e["reactance"]),
                              float(e["capacity"]), bool(e.get("candidate", False)),
                              _invest(e, p, factor, diag)))
    stores = []
    for k, e in enumerate(doc.get("storages", [])):
        p = f"storages[{k}]"
        if _require(e, ["id", "bus", "energy", "power"], p, diag):
            eff = float(e.get("efficiency", 0.9))
            cand = bool(e.get("candidate", False))
            if cand:
                _require(e, ["max_units"], p, diag)
            rule = storage_investment_cost(max(float(e["energy"]), 0.0), max(float(e["power"]), 0.0))
            stores.append(Storage(str(e["id"]), str(e["bus"]), float(e["energy"]), float(e["power"]),
                                  float(e.get("charge_eff", eff)), float(e.get("discharge_eff", eff)),
                                  float(e.get("initial_energy", 0.0)), cand, int(e.get("max_units", 0)),
                                  _invest(e, p, factor, diag, default=rule)))
    winds = []
    for k, e in enumerate(doc.get("wind", [])):
        p = f"wind[{k}]"
        if _require(e, ["id", "bus", "zone", "capacity"], p, diag):
            winds.append(WindUnit(str(e["id"]), str(e["bus"]), str(e["zone"]), float(e["capacity"]),
                                  bool(e.get("candidate", False)), _invest(e, p, factor, diag)))
    dems = []
    for k, e in enumerate(doc.get("demands", [])):
        p = f"demands[{k}]"
        if _require(e, ["id", "bus", "zone", "peak", "shed_cost"], p, diag):
            dems.append(Demand(str(e["id"]), str(e["bus"]), str(e["zone"]), float(e["peak"]),
                               float(e["shed_cost"])))
    bd = doc.get("budgets", {})
    budgets = Budgets(
        mode=str(bd.get("mode", "per_category")),
        generation=float(bd.get("generation", math.inf)),
        transmission=float(bd.get("transmission", math.inf)),
        storage=float(bd.get("storage", math.inf)),
        wind=float(bd.get("wind", math.inf)),
        total=float(bd.get("total", math.inf)),
    )
    system = SystemData(buses, gens, lines, stores, winds, dems, budgets,
                        big_m=float(opts.get("big_m", 500_000.0)),
                        time_step=float(opts.get("time_step", 1.0)),
                        base_power=float(opts.get("base_power", 100.0)),
                        annualization=factor,
                        name=str(doc.get("name", name)))
    diag += validate(system)
    if diag:
        raise SystemError_(diag)
    return system


def load_system(path: str) -> SystemData:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise SystemError_([f"parse error: {exc}"], path) from None
    try:
        return system_from_dict(doc, os.path.splitext(os.path.basename(path))[0])
    except SystemError_ as exc:
        raise SystemError_(exc.diagnostics, path) from None


def bundled_path(name: str) -> str:
    """Path of a data file shipped inside the package (``rts24.toml`` ...)."""
    return os.path.join(os.path.dirname(__file__), "data", name)
