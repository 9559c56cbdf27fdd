"""Loader for flat ``key = value`` scenario and sweep files."""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from exceptions import InvalidScenarioError, ScenarioParseError
from pricing import PricingKind, PricingScheme
from queueing_analytics import PriorityPolicy
from sim_types import Discipline, DisciplineKind, Scenario, ServiceDistribution, Tier, TrafficClassSpec

SCENARIO_KEYS = frozenset({
    "discipline", "mu", "horizon", "warmup", "seed", "value_of_time",
    "pricing", "flat_price", "reserved_mu", "capacity", "policy",
})
SWEEP_KEYS = frozenset({
    "sweep.key", "sweep.grid", "sweep.replications", "sweep.complement", "sweep.total",
})
SWEEPABLE_KEYS = frozenset({
    "mu", "horizon", "warmup", "reserved_mu", "capacity", "value_of_time", "flat_price",
})

_CLASS_KEY = re.compile(r"^class\.(\d+)\.(lambda|service|tier)$")
_SERVICE = re.compile(r"^(\w+)\s*\((.*)\)$")

# Keys that only mean something under one discipline.
_DISCIPLINE_KEYS = {
    "reserved_mu": DisciplineKind.PARTITIONED,
    "capacity": DisciplineKind.BLOCKING,
    "policy": DisciplineKind.PRIORITY,
}


@dataclass(frozen=True)
class Entry:
    value: str
    line_no: int


@dataclass(frozen=True)
class ScenarioFile:
    """A parsed scenario with the pricing scheme it asks for."""

    scenario: Scenario
    pricing: PricingScheme
    file_path: Optional[str] = None


@dataclass(frozen=True)
class SweepSpec:
    """A base scenario, one swept numeric key with its grid, and a seed count."""

    entries: Dict[str, Entry]
    name: str
    key: str
    grid: Tuple[float, ...]
    replications: int
    complement: Optional[str] = None
    total: Optional[float] = None
    file_path: Optional[str] = None
    tiers: Tuple[Tier, ...] = ()

    def point(self, value: float) -> ScenarioFile:
        """The scenario at one grid value; raises ScenarioError if it is invalid there."""
        entries = dict(self.entries)
        line = self.entries.get(self.key, Entry("", 0)).line_no
        entries[self.key] = Entry(repr(float(value)), line)
        if self.complement is not None:
            entries[self.complement] = Entry(repr(float(self.total) - float(value)), line)
        return _build(entries, self.name, self.file_path)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _is_known(key: str, allow_sweep: bool) -> bool:
    return key in SCENARIO_KEYS or bool(_CLASS_KEY.match(key)) or (allow_sweep and key in SWEEP_KEYS)


def read_entries(text: str, file_path: Optional[str] = None, allow_sweep: bool = False) -> Dict[str, Entry]:
    """Split the text into entries, rejecting malformed, unknown and duplicate keys."""
    entries: Dict[str, Entry] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"Expected 'key = value', got '{line}'", line_no, file_path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ScenarioParseError(f"Empty key or value in '{line}'", line_no, file_path)
        if not _is_known(key, allow_sweep):
            raise ScenarioParseError(f"Unknown key '{key}'", line_no, file_path)
        if key in entries:
            raise ScenarioParseError(
                f"Duplicate key '{key}' (first set on line {entries[key].line_no})", line_no, file_path
            )
        entries[key] = Entry(value, line_no)
    return entries


def _float(entries: Dict[str, Entry], key: str, file_path: Optional[str], default: Optional[float] = None) -> Optional[float]:
    entry = entries.get(key)
    if entry is None:
        return default
    try:
        return float(entry.value)
    except ValueError:
        raise ScenarioParseError(f"'{key}' must be a number, got '{entry.value}'", entry.line_no, file_path) from None


def parse_int(text: str) -> Optional[int]:
    """Integer value of ``text``; integral floats such as ``1e3`` are accepted, anything else gives None."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        number = float(text)
    except ValueError:
        return None
    return int(number) if number.is_integer() else None


def _int(entries: Dict[str, Entry], key: str, file_path: Optional[str], default: Optional[int] = None) -> Optional[int]:
    entry = entries.get(key)
    if entry is None:
        return default
    number = parse_int(entry.value)
    if number is None:
        raise ScenarioParseError(f"'{key}' must be an integer, got '{entry.value}'", entry.line_no, file_path)
    return number


def _require(entries: Dict[str, Entry], key: str, file_path: Optional[str]) -> None:
    if key not in entries:
        raise ScenarioParseError(f"Missing required key '{key}'", None, file_path)


def parse_service(text: str) -> ServiceDistribution:
    """
    Parse a size distribution descriptor.

    Accepted forms: ``exponential(RATE)``, ``hyperexponential(R1,R2|P1,P2)``
    and ``balanced_h2(MEAN,COV)``.
    """
    match = _SERVICE.match(text.strip())
    if not match:
        raise InvalidScenarioError(f"Malformed service descriptor '{text}'", field="service")
    kind, args = match.group(1), match.group(2)
    try:
        if kind == "exponential":
            return ServiceDistribution.exponential(float(args))
        if kind == "hyperexponential":
            rates, _, probs = args.partition("|")
            return ServiceDistribution.hyperexponential(
                [float(x) for x in rates.split(",")],
                [float(x) for x in probs.split(",")] if probs else [1.0],
            )
        if kind == "balanced_h2":
            mean, cov = (float(x) for x in args.split(","))
            return ServiceDistribution.balanced_h2(mean, cov)
    except ValueError:
        raise InvalidScenarioError(f"Malformed arguments in service descriptor '{text}'", field="service") from None
    raise InvalidScenarioError(f"Unknown service distribution '{kind}'", field="service")


def _classes(entries: Dict[str, Entry], file_path: Optional[str]) -> List[TrafficClassSpec]:
    grouped: Dict[int, Dict[str, Entry]] = {}
    for key, entry in entries.items():
        match = _CLASS_KEY.match(key)
        if match:
            grouped.setdefault(int(match.group(1)), {})[match.group(2)] = entry

    classes = []
    for class_id in sorted(grouped):
        fields = grouped[class_id]
        first_line = min(e.line_no for e in fields.values())
        if "lambda" not in fields:
            raise ScenarioParseError(f"Class {class_id} has no 'class.{class_id}.lambda'", first_line, file_path)
        key = f"class.{class_id}.lambda"
        lam = _float({key: fields["lambda"]}, key, file_path)
        try:
            service = parse_service(fields["service"].value) if "service" in fields else ServiceDistribution.exponential(1.0)
        except InvalidScenarioError as exc:
            raise ScenarioParseError(exc.message, fields["service"].line_no, file_path) from exc
        tier_entry = fields.get("tier")
        try:
            tier = Tier(tier_entry.value) if tier_entry else Tier.DEFAULT
        except ValueError:
            choices = ", ".join(t.value for t in Tier)
            raise ScenarioParseError(
                f"Unknown tier '{tier_entry.value}' (expected one of: {choices})", tier_entry.line_no, file_path
            ) from None
        try:
            classes.append(TrafficClassSpec(class_id=class_id, lam=lam, service=service, tier=tier))
        except InvalidScenarioError as exc:
            raise ScenarioParseError(exc.message, fields["lambda"].line_no, file_path) from exc
    return classes


def _discipline(entries: Dict[str, Entry], file_path: Optional[str]) -> Discipline:
    _require(entries, "discipline", file_path)
    entry = entries["discipline"]
    try:
        kind = DisciplineKind(entry.value)
    except ValueError:
        choices = ", ".join(k.value for k in DisciplineKind)
        raise ScenarioParseError(
            f"Unknown discipline '{entry.value}' (expected one of: {choices})", entry.line_no, file_path
        ) from None

    for key, owner in _DISCIPLINE_KEYS.items():
        if key in entries and owner is not kind:
            raise ScenarioParseError(
                f"'{key}' does not apply to discipline '{kind.value}'", entries[key].line_no, file_path
            )

    if kind is DisciplineKind.PARTITIONED:
        _require(entries, "reserved_mu", file_path)
        return Discipline.partitioned(_float(entries, "reserved_mu", file_path))
    if kind is DisciplineKind.PRIORITY:
        policy = entries.get("policy")
        try:
            return Discipline.priority(PriorityPolicy(policy.value) if policy else PriorityPolicy.NON_PREEMPTIVE)
        except ValueError:
            raise ScenarioParseError(f"Unknown priority policy '{policy.value}'", policy.line_no, file_path) from None
    if kind is DisciplineKind.BLOCKING:
        return Discipline.blocking(_int(entries, "capacity", file_path, default=1))
    return Discipline.fifo()


def _pricing(entries: Dict[str, Entry], file_path: Optional[str]) -> PricingScheme:
    entry = entries.get("pricing")
    try:
        kind = PricingKind(entry.value) if entry else PricingKind.MARGINAL_COST
    except ValueError:
        raise ScenarioParseError(f"Unknown pricing scheme '{entry.value}'", entry.line_no, file_path) from None
    try:
        return PricingScheme(
            kind,
            value_of_time=_float(entries, "value_of_time", file_path, default=1.0),
            price=_float(entries, "flat_price", file_path, default=1.0),
        )
    except InvalidScenarioError as exc:
        line = entries.get(exc.field or "", entry)
        raise ScenarioParseError(exc.message, line.line_no if line else None, file_path) from exc


def _build(entries: Dict[str, Entry], name: str, file_path: Optional[str]) -> ScenarioFile:
    for key in ("mu", "horizon"):
        _require(entries, key, file_path)
    discipline = _discipline(entries, file_path)
    classes = _classes(entries, file_path)
    horizon = _float(entries, "horizon", file_path)
    try:
        scenario = Scenario(
            classes=tuple(classes),
            discipline=discipline,
            mu=_float(entries, "mu", file_path),
            horizon=horizon,
            warmup=_float(entries, "warmup", file_path, default=horizon / 10.0),
            seed=_int(entries, "seed", file_path, default=1),
            name=name,
        )
    except InvalidScenarioError as exc:
        entry = entries.get(exc.field or "")
        raise ScenarioParseError(exc.message, entry.line_no if entry else None, file_path) from exc
    return ScenarioFile(scenario=scenario, pricing=_pricing(entries, file_path), file_path=file_path)


def parse_scenario_text(text: str, name: str = "scenario", file_path: Optional[str] = None) -> ScenarioFile:
    """Parse scenario text; errors name the offending line where there is one."""
    return _build(read_entries(text, file_path), name, file_path)


def _read(path: Path) -> str:
    # OSError propagates: an unreadable file is an I/O failure, not a parse error.
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioParseError(f"File is not UTF-8 text: {exc.reason}", None, str(path)) from exc


def load_scenario_file(path: Path) -> ScenarioFile:
    """Load one scenario file; the scenario is named after the file stem."""
    path = Path(path)
    return parse_scenario_text(_read(path), name=path.stem, file_path=str(path))


def parse_sweep_text(text: str, name: str = "sweep", file_path: Optional[str] = None) -> SweepSpec:
    """Parse a sweep file: a scenario plus ``sweep.*`` keys."""
    entries = read_entries(text, file_path, allow_sweep=True)
    sweep = {k: entries.pop(k) for k in list(entries) if k in SWEEP_KEYS}
    base_entries = dict(entries)

    for key in ("sweep.key", "sweep.grid"):
        if key not in sweep:
            raise ScenarioParseError(f"Missing required key '{key}'", None, file_path)

    key_entry = sweep["sweep.key"]
    key = key_entry.value
    if key not in SWEEPABLE_KEYS and not (_CLASS_KEY.match(key) and key.endswith(".lambda")):
        raise ScenarioParseError(f"'{key}' cannot be swept; pick a numeric scenario key", key_entry.line_no, file_path)

    grid_entry = sweep["sweep.grid"]
    try:
        grid = tuple(float(x) for x in grid_entry.value.split(","))
    except ValueError:
        raise ScenarioParseError("Grid must be a comma-separated list of numbers", grid_entry.line_no, file_path) from None
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ScenarioParseError("Grid must be strictly increasing", grid_entry.line_no, file_path)

    replications = _int(sweep, "sweep.replications", file_path, default=1)
    if replications < 1:
        raise ScenarioParseError("Replications must be at least 1", sweep["sweep.replications"].line_no, file_path)

    complement = sweep.get("sweep.complement")
    total = _float(sweep, "sweep.total", file_path)
    if (complement is None) != (total is None):
        line = (complement or sweep.get("sweep.total")).line_no
        raise ScenarioParseError("'sweep.complement' and 'sweep.total' go together", line, file_path)
    if complement is not None and (complement.value == key or not _is_known(complement.value, False)):
        raise ScenarioParseError(f"Invalid complementary key '{complement.value}'", complement.line_no, file_path)

    spec = SweepSpec(
        entries=base_entries,
        name=name,
        key=key,
        grid=grid,
        replications=replications,
        complement=complement.value if complement else None,
        total=total,
        file_path=file_path,
    )
    # Structure must parse at the first grid value; numeric invariants are checked per point.
    probe = dict(base_entries)
    probe[key] = Entry(repr(grid[0]), key_entry.line_no)
    for required in ("mu", "horizon"):
        _require(probe, required, file_path)
    _discipline(probe, file_path)
    _pricing(probe, file_path)
    present = {c.tier for c in _classes(probe, file_path)}
    tiers = tuple(t for t in Tier if t in present)
    return replace(spec, tiers=tiers)


def load_sweep_file(path: Path) -> SweepSpec:
    path = Path(path)
    return parse_sweep_text(_read(path), name=path.stem, file_path=str(path))
