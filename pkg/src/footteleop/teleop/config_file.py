"""Reader for scenario files (INI syntax).

Grammar, one ``key = value`` per line, ``#`` or ``;`` starts a comment line::

    [simulation]        dt, duration, channel_delay, record_every
    [telefunctioning]   upsilon, omega: 3x3 matrices, rows separated by ';'
    [robot]             mass, rotational_inertia, gravity (3), damping (3),
                        kp, kd, orientation_target (3x3, default identity)
    [platform]          mode = inertial | ideal, joint_inertias (5),
                        gravity_bias (5), gravity_sine (5), k_tau,
                        inertia_compensation, locked = joint names or 'none'
    [human]             stiffness (5), damping (5)
    [object]            center (3), half_extents (3), mass, wall_stiffness,
                        wall_damping, friction_coefficient,
                        tangential_stiffness, tangential_damping
    [table]             height, stiffness, damping, drag
    [disturbance]       times (list), magnitude, duration, direction (3)
    [phases]            <label> = <start> <end>, labels a_idle ... f_retreat
    [side <name>]       base (3), mirror (bool),
                        trajectory.<joint> = t:value, t:value, ...

Vectors are whitespace- or comma-separated numbers. Only ``[simulation]``,
``[phases]`` and at least one ``[side ...]`` are required; the object, table
and disturbance exist only when their sections do. Trajectory values are in
SI units (m, rad); unlisted joints stay at zero.
"""
from __future__ import annotations

import configparser
import contextlib
import re
from pathlib import Path

import numpy as np

from .. import kinematics as kin
from ..platform import HumanFootModel, PlatformDynamicsParams
from ..robot import ArmDynamicsParams, DampingSpec, ImpedanceController
from .contact import GraspObject, TableSupport
from .scenario import (
    ImpulseTrain,
    ScenarioConfig,
    ScenarioError,
    ScenarioPhase,
    SideConfig,
    TelefunctioningPair,
)

KNOWN_KEYS = {
    "simulation": {"dt", "duration", "channel_delay", "record_every"},
    "telefunctioning": {"upsilon", "omega"},
    "robot": {"mass", "rotational_inertia", "gravity", "damping", "kp", "kd", "orientation_target"},
    "platform": {
        "mode", "joint_inertias", "gravity_bias", "gravity_sine",
        "k_tau", "inertia_compensation", "locked",
    },
    "human": {"stiffness", "damping"},
    "object": {
        "center", "half_extents", "mass", "wall_stiffness", "wall_damping",
        "friction_coefficient", "tangential_stiffness", "tangential_damping",
    },
    "table": {"height", "stiffness", "damping", "drag"},
    "disturbance": {"times", "magnitude", "duration", "direction"},
}  # fmt: skip
_SIDE_RE = re.compile(r"side\s+(\w+)$")
_KEY_RE = re.compile(r"^(\s*)([^=:\s][^=:]*?)\s*[=:]\s*")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


class ScenarioParseError(ScenarioError):
    """Malformed scenario text; ``line`` and ``column`` are 1-based (0 when unknown)."""

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<scenario>"):
        self.message, self.line, self.column, self.source = message, line, column, source
        super().__init__(f"{source}:{line}:{column}: {message}")


class _Locator:
    """Maps ``(section, key)`` to the position of the value text."""

    def __init__(self, text: str):
        self.keys: dict[tuple[str, str], tuple[int, int]] = {}
        self.sections: dict[str, int] = {}
        section = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            m = _SECTION_RE.match(line)
            if m:
                section = m.group(1).strip()
                self.sections[section] = lineno
                continue
            if section is None or line.lstrip().startswith(("#", ";")):
                continue
            m = _KEY_RE.match(line)
            if m:
                self.keys[(section, m.group(2).strip().lower())] = (lineno, m.end() + 1)

    def at(self, section: str, key: str | None = None) -> tuple[int, int]:
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section, 1), 1


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, loc: _Locator, source: str):
        self.parser, self.loc, self.source = parser, loc, source

    def fail(self, msg: str, section: str, key: str | None = None):
        line, col = self.loc.at(section, key)
        raise ScenarioParseError(msg, line, col, self.source)

    @contextlib.contextmanager
    def section_errors(self, section: str):
        """Report a component's own validation error at the section header."""
        try:
            yield
        except ScenarioParseError:
            raise
        except ValueError as exc:
            self.fail(str(exc), section)

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str) -> str:
        return self.parser.get(section, key)

    def number(self, section: str, key: str, default=None) -> float:
        if not self.has(section, key):
            if default is None:
                self.fail(f"missing required key '{key}'", section)
            return default
        try:
            return float(self.raw(section, key))
        except ValueError:
            self.fail(f"'{key}' must be a number, got {self.raw(section, key)!r}", section, key)

    def integer(self, section: str, key: str, default: int) -> int:
        value = self.number(section, key, float(default))
        if value != int(value):
            self.fail(f"'{key}' must be an integer", section, key)
        return int(value)

    def vector(self, section: str, key: str, size: int | None = None, default=None) -> np.ndarray:
        if not self.has(section, key):
            if default is None:
                self.fail(f"missing required key '{key}'", section)
            return np.array(default, dtype=float)
        text = self.raw(section, key).replace(",", " ").split()
        try:
            v = np.array([float(t) for t in text])
        except ValueError:
            self.fail(f"'{key}' must be a list of numbers", section, key)
        if size is not None and v.size != size:
            self.fail(f"'{key}' needs {size} values, got {v.size}", section, key)
        return v

    def matrix(self, section: str, key: str, default) -> np.ndarray:
        if not self.has(section, key):
            return np.array(default, dtype=float)
        rows = [r.replace(",", " ").split() for r in self.raw(section, key).split(";")]
        try:
            m = np.array([[float(t) for t in r] for r in rows])
        except ValueError:
            self.fail(f"'{key}' must be a matrix of numbers", section, key)
        if m.shape != (3, 3):
            self.fail(f"'{key}' must be 3x3 with rows separated by ';'", section, key)
        return m

    def boolean(self, section: str, key: str, default: bool) -> bool:
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            self.fail(f"'{key}' must be true or false", section, key)

    def knots(self, section: str, key: str) -> list[tuple[float, float]]:
        out = []
        for item in self.raw(section, key).split(","):
            parts = item.split(":")
            try:
                if len(parts) != 2:
                    raise ValueError
                out.append((float(parts[0]), float(parts[1])))
            except ValueError:
                self.fail(f"bad knot {item.strip()!r}, expected 't:value'", section, key)
        times = [t for t, _ in out]
        if any(b <= a for a, b in zip(times, times[1:])):
            self.fail("knot times must be strictly increasing", section, key)
        return out


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioConfig:
    """Parse scenario text into a validated :class:`ScenarioConfig`."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ScenarioParseError(f"duplicate key '{exc.option}'", exc.lineno or 0, 1, source) from None
    except configparser.DuplicateSectionError as exc:
        raise ScenarioParseError(f"duplicate section [{exc.section}]", exc.lineno or 0, 1, source) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError("key outside any [section]", exc.lineno, 1, source) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else 0
        raise ScenarioParseError("line is not 'key = value'", lineno, 1, source) from None
    loc = _Locator(text)
    r = _Reader(parser, loc, source)

    side_sections = []
    for section in parser.sections():
        m = _SIDE_RE.match(section)
        if m:
            side_sections.append((section, m.group(1)))
            for key in parser.options(section):
                if key not in ("base", "mirror") and not key.startswith("trajectory."):
                    r.fail(f"unknown key '{key}'", section, key)
            continue
        if section == "phases":
            continue
        if section not in KNOWN_KEYS:
            r.fail(f"unknown section [{section}]", section)
        for key in parser.options(section):
            if key not in KNOWN_KEYS[section]:
                r.fail(f"unknown key '{key}'", section, key)
    for required in ("simulation", "phases"):
        if not parser.has_section(required):
            raise ScenarioParseError(f"missing section [{required}]", 0, 0, source)
    if not side_sections:
        raise ScenarioParseError("need at least one [side <name>] section", 0, 0, source)

    sim = "simulation"
    dt = r.number(sim, "dt", 0.001)
    duration = r.number(sim, "duration")

    phases = []
    for label in parser.options("phases"):
        span = r.vector("phases", label, 2)
        phases.append(ScenarioPhase(label, float(span[0]), float(span[1])))

    with r.section_errors("telefunctioning"):
        tf = TelefunctioningPair(
            r.matrix("telefunctioning", "upsilon", 5.0 * np.eye(3)),
            r.matrix("telefunctioning", "omega", np.diag([1.0, 1.0, 0.2])),
        )

    rb = "robot"
    with r.section_errors(rb):
        arm, controller = _robot(r, rb)

    pf = "platform"
    with r.section_errors(pf):
        platform = _platform(r, parser, pf)

    human_defaults = HumanFootModel()
    with r.section_errors("human"):
        stiffness = r.vector("human", "stiffness", 5, human_defaults.stiffness)
        human_damping = r.vector("human", "damping", 5, human_defaults.damping)
        HumanFootModel({}, stiffness, human_damping)

    sides = []
    for section, name in side_sections:
        trajectory = {}
        for key in parser.options(section):
            if key.startswith("trajectory."):
                joint = key.split(".", 1)[1]
                if joint not in kin.JOINT_NAMES:
                    r.fail(f"unknown joint '{joint}'", section, key)
                trajectory[joint] = r.knots(section, key)
        human = HumanFootModel(trajectory, stiffness.copy(), human_damping.copy())
        sides.append(
            SideConfig(name, human, r.vector(section, "base", 3, (0.0, 0.0, 0.0)), r.boolean(section, "mirror", False))
        )

    obj = table = disturbance = None
    if parser.has_section("object"):
        ob = "object"
        g = GraspObject.__dataclass_fields__
        with r.section_errors(ob):
            obj = GraspObject(
                center=r.vector(ob, "center", 3),
                half_extents=r.vector(ob, "half_extents", 3),
                **{
                    k: r.number(ob, k, g[k].default)
                    for k in ("mass", "wall_stiffness", "wall_damping", "friction_coefficient",
                              "tangential_stiffness", "tangential_damping")
                },  # fmt: skip
            )
    if parser.has_section("table"):
        t = TableSupport()  # defaults
        table = TableSupport(**{k: r.number("table", k, getattr(t, k)) for k in ("height", "stiffness", "damping", "drag")})
    if parser.has_section("disturbance"):
        d = ImpulseTrain()
        ds = "disturbance"
        disturbance = ImpulseTrain(
            times=tuple(float(v) for v in r.vector(ds, "times", None, ())),
            magnitude=r.number(ds, "magnitude", d.magnitude),
            duration=r.number(ds, "duration", d.duration),
            direction=r.vector(ds, "direction", 3, d.direction),
        )

    cfg = ScenarioConfig(
        sides=sides,
        phases=phases,
        dt=dt,
        duration=duration,
        telefunctioning=tf,
        channel_delay=r.number(sim, "channel_delay", 0.0),
        platform=platform,
        controller=controller,
        obj=obj,
        table=table,
        disturbance=disturbance,
        record_every=r.integer(sim, "record_every", 1),
    )
    try:
        cfg.validate()
    except ScenarioError as exc:
        section = "phases" if "phase" in str(exc) else sim
        r.fail(str(exc), section)
    return cfg


def _robot(r: _Reader, rb: str):
    arm = ArmDynamicsParams(
        mass=r.number(rb, "mass", 3.0),
        rotational_inertia=r.number(rb, "rotational_inertia", 0.1),
        gravity=r.vector(rb, "gravity", 3, (0.0, 0.0, -9.81)),
    )
    lam = r.vector(rb, "damping", 3, (60.0, 90.0, 90.0))
    controller = ImpedanceController(
        damping=DampingSpec(*map(float, lam)),
        params=arm,
        kp=r.number(rb, "kp", 25.0),
        kd=r.number(rb, "kd", 10.0),
        R_d=r.matrix(rb, "orientation_target", np.eye(3)),
    )
    return arm, controller


def _platform(r: _Reader, parser, pf: str) -> PlatformDynamicsParams:
    defaults = PlatformDynamicsParams()
    mode = parser.get(pf, "mode", fallback="inertial").strip().lower()
    if mode not in ("inertial", "ideal"):
        r.fail("mode must be 'inertial' or 'ideal'", pf, "mode")
    locked_text = parser.get(pf, "locked", fallback="phi psi").replace(",", " ").split()
    if locked_text == ["none"]:
        locked_text = []
    for name in locked_text:
        if name not in kin.JOINT_NAMES:
            r.fail(f"unknown joint '{name}' in locked", pf, "locked")
    inertias = np.zeros(5) if mode == "ideal" else r.vector(pf, "joint_inertias", 5, defaults.joint_inertias)
    return PlatformDynamicsParams(
        joint_inertias=inertias,
        gravity_bias=r.vector(pf, "gravity_bias", 5, defaults.gravity_bias),
        gravity_sine=r.vector(pf, "gravity_sine", 5, defaults.gravity_sine),
        k_tau=r.number(pf, "k_tau", defaults.k_tau),
        locked=tuple(n in locked_text for n in kin.JOINT_NAMES),
        inertia_compensation=r.number(pf, "inertia_compensation", defaults.inertia_compensation),
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), source=str(path))


BUNDLED_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def bundled_scenario_path(name: str) -> Path:
    return BUNDLED_DIR / f"{name}.ini"
