"""Scenario configs: TOML files cleaned table by table into `Scenario` values.

Every problem is reported as a `ConfigError` whose key names the offending
entry, e.g. ``scenario[1].domain.dt``; TOML syntax errors carry the line.
"""

from __future__ import annotations

import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from core.params import Domain, Params
from core.validation import validate
from measure.radon import DensityGrid, RadonMeasure
from solver.grid import BoundaryCondition, InitialCondition
from wolff_lab.errors import ConfigError, DomainError

from .forms import (
    AtomForm, BoundaryForm, DomainForm, InitialForm, MeasureForm, PointForm, RungForm, ScenarioForm,
    WolffQueryForm,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("lab")

TOP_LEVEL_KEYS = ("scenario",)
PARAM_OVERRIDES = (
    "kappa", "eps_split", "c1", "c2", "k_cutoff", "eps_reg", "tol_root", "tol_newton",
    "max_newton_iterations", "gamma_cap", "j_max",
)


@dataclass(frozen=True)
class VerificationPoint:
    y: tuple
    s: float
    rho: float

    @property
    def center(self):
        return (self.y, self.s)


@dataclass(frozen=True)
class Scenario:
    name: str
    params: Params
    domain: Domain
    measure: RadonMeasure
    initial: InitialCondition
    boundary: BoundaryCondition
    points: tuple = ()
    ladder: tuple = ()
    wolff_queries: tuple = ()
    index: int = 0

    @property
    def rungs(self) -> tuple:
        return self.ladder or ((self.domain.cells_per_axis, self.domain.dt),)

    @property
    def finest(self) -> int:
        return len(self.rungs) - 1

    def rung_domain(self, i) -> Domain:
        if not -len(self.rungs) <= i < len(self.rungs):
            raise ConfigError(f"rung {i} does not exist ({len(self.rungs)} rung(s))", key=f"{self.name}.rung")
        cells, dt = self.rungs[i]
        return self.domain.refined(cells, dt)


def _clean(form_class, data, key):
    if not isinstance(data, dict):
        raise ConfigError("expected a table", key=key)
    form = form_class(data=data)
    unknown = sorted(set(data) - set(form.fields) - set(form.allowed_tables))
    if unknown:
        raise ConfigError("unknown key", key=f"{key}.{unknown[0]}")
    if not form.is_valid():
        field, messages = next(iter(form.errors.items()))
        where = key if field == "__all__" else f"{key}.{field}"
        raise ConfigError(" ".join(messages), key=where)
    return form.cleaned_data


def _tables(raw, name, key):
    items = raw.get(name, [])
    if isinstance(items, dict):
        items = [items]
    if not isinstance(items, list):
        raise ConfigError("expected an array of tables", key=f"{key}.{name}")
    return items


def _check_dimension(values, n, key):
    if len(values) != n:
        raise ConfigError(f"expected {n} coordinate(s), got {len(values)}", key=key)


def _build_measure(raw, n, domain, key):
    data = _clean(MeasureForm, raw, key)
    atoms = []
    for k, atom_raw in enumerate(_tables(raw, "atom", key)):
        atom_key = f"{key}.atom[{k}]"
        atom = _clean(AtomForm, atom_raw, atom_key)
        _check_dimension(atom["x"], n, f"{atom_key}.x")
        atoms.append((atom["x"], atom["mass"]))
    density = None
    value = data.get("density")
    if isinstance(value, float):
        if value > 0:
            density = DensityGrid.constant(value, n, domain.lower, domain.side_length)
    elif value is not None:
        values = np.asarray(value, dtype=float)
        if values.ndim != n:
            raise ConfigError(f"density grid must have {n} axes", key=f"{key}.density")
        density = DensityGrid(values, domain.lower, domain.side_length)
    try:
        return RadonMeasure(atoms=tuple(atoms), density=density, n=n)
    except DomainError as exc:
        raise ConfigError(str(exc), key=key)


def _build_initial(raw, n, key):
    if raw is None:
        return InitialCondition()
    data = _clean(InitialForm, raw, key)
    if data["kind"] == "gaussian":
        _check_dimension(data["center"], n, f"{key}.center")
    if data["kind"] == "linear":
        _check_dimension(data["slope"], n, f"{key}.slope")
    return InitialCondition(
        kind=data["kind"],
        value=data["value"] or 0.0,
        center=data["center"],
        width=data["width"] or 1.0,
        amplitude=1.0 if data["amplitude"] is None else data["amplitude"],
        slope=data["slope"],
        offset=data["offset"] or 0.0,
    )


def _build_boundary(raw, key):
    if raw is None:
        return BoundaryCondition()
    data = _clean(BoundaryForm, raw, key)
    return BoundaryCondition(kind=data["kind"], value=data["value"] or 0.0)


def _require_valid(params, domain, key):
    result = validate(params, domain)
    if not result.ok:
        raise ConfigError(str(result), key=key)


def build_scenario(raw, index) -> Scenario:
    key = f"scenario[{index}]"
    data = _clean(ScenarioForm, raw, key)
    n, p, lam = data["n"], data["p"], data["lambda"]
    params = Params.from_settings(n, p, lam, **{name: data[name] for name in PARAM_OVERRIDES})

    if "domain" not in raw:
        raise ConfigError("missing table", key=f"{key}.domain")
    d = _clean(DomainForm, raw["domain"], f"{key}.domain")
    domain = Domain(side_length=d["side_length"], cells_per_axis=d["cells_per_axis"],
                    t_final=d["t_final"], dt=d["dt"], lower=d["lower"])
    _require_valid(params, domain, key)

    ladder = []
    for k, rung_raw in enumerate(_tables(raw, "rung", key)):
        rung = _clean(RungForm, rung_raw, f"{key}.rung[{k}]")
        _require_valid(params, domain.refined(rung["cells_per_axis"], rung["dt"]), f"{key}.rung[{k}]")
        ladder.append((rung["cells_per_axis"], rung["dt"]))

    points = []
    for k, point_raw in enumerate(_tables(raw, "point", key)):
        point_key = f"{key}.point[{k}]"
        pt = _clean(PointForm, point_raw, point_key)
        _check_dimension(pt["y"], n, f"{point_key}.y")
        y, s, rho = pt["y"], pt["s"], pt["rho"]
        if not (domain.contains_ball(y, 2 * rho) and domain.contains_interval(s - 4 * rho ** 2, s + 4 * rho ** 2)):
            raise ConfigError("B_2ρ(y) × (s − 4ρ², s + 4ρ²) leaves the domain", key=point_key)
        points.append(VerificationPoint(y, s, rho))

    queries = []
    for k, query_raw in enumerate(_tables(raw, "wolff", key)):
        q = _clean(WolffQueryForm, query_raw, f"{key}.wolff[{k}]")
        _check_dimension(q["x"], n, f"{key}.wolff[{k}].x")
        queries.append((q["x"], q["R"]))

    return Scenario(
        name=data["name"],
        params=params,
        domain=domain,
        measure=_build_measure(raw.get("measure", {}), n, domain, f"{key}.measure"),
        initial=_build_initial(raw.get("initial"), n, f"{key}.initial"),
        boundary=_build_boundary(raw.get("boundary"), f"{key}.boundary"),
        points=tuple(points),
        ladder=tuple(ladder),
        wolff_queries=tuple(queries),
        index=index,
    )


def parse_scenarios(text, source="<config>") -> tuple:
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ConfigError(str(exc), key=source, line=int(match.group(1)) if match else None)
    unknown = sorted(set(document) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise ConfigError("unknown key", key=unknown[0])
    items = document.get("scenario", [])
    if not isinstance(items, list):
        raise ConfigError("expected [[scenario]] tables", key="scenario")
    scenarios = tuple(build_scenario(raw, i) for i, raw in enumerate(items))
    names = [s.name for s in scenarios]
    for i, name in enumerate(names):
        if name in names[:i]:
            raise ConfigError(f"duplicate scenario name {name!r}", key=f"scenario[{i}].name")
    log.info("Loaded %d scenario(s) from %s", len(scenarios), source)
    return scenarios


def load_scenarios(path) -> tuple:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}", key=str(path))
    return parse_scenarios(text, source=str(path))
