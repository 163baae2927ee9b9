"""The work-experiment tuple: initial/final Hamiltonians, evolution, state.

A scenario is (H, H_final, evolution, rho) where the evolution is either an
explicit unitary or a piecewise-linear driving protocol compiled to a
time-ordered product of midpoint-rule exponential factors.  Scenarios are
serialized to a JSON document with complex entries written as [re, im] pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .linalg import (
    HERMITICITY_TOL,
    dag,
    eig_hermitian,
    max_abs,
    require_density,
    require_hermitian,
    require_unitary,
)

DEFAULT_STEPS_PER_SEGMENT = 64
_TIME_MATCH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DrivingProtocol:
    """Piecewise-linear time-dependent Hamiltonian on [0, tau].

    ``breakpoints`` is an ordered list of (time, Hamiltonian); the Hamiltonian
    between breakpoints is the linear interpolation of its neighbours.
    """

    breakpoints: tuple[tuple[float, np.ndarray], ...]
    steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT

    def __post_init__(self):
        if len(self.breakpoints) < 2:
            raise ValidationError("DimMismatch", "evolution.breakpoints",
                                  "need at least two breakpoints (start and end)")
        if self.steps_per_segment < 1:
            raise ValidationError("DimMismatch", "evolution.steps_per_segment",
                                  "steps_per_segment must be positive")
        pts = []
        dim = None
        for i, (t, h) in enumerate(self.breakpoints):
            t = float(t)
            h = require_hermitian(h, f"evolution.breakpoints[{i}].H")
            if dim is None:
                dim = h.shape[0]
            elif h.shape[0] != dim:
                raise ValidationError("DimMismatch", f"evolution.breakpoints[{i}].H",
                                      f"dimension {h.shape[0]} != {dim}")
            pts.append((t, h))
        if abs(pts[0][0]) > _TIME_MATCH_TOL:
            raise ParseError("first breakpoint time must be 0", "evolution.breakpoints[0].t")
        pts[0] = (0.0, pts[0][1])
        for i in range(1, len(pts)):
            if pts[i][0] <= pts[i - 1][0]:
                raise ParseError("breakpoint times must be strictly increasing",
                                 f"evolution.breakpoints[{i}].t")
        object.__setattr__(self, "breakpoints", tuple(pts))

    @property
    def dim(self) -> int:
        return self.breakpoints[0][1].shape[0]

    @property
    def duration(self) -> float:
        return self.breakpoints[-1][0]

    def hamiltonian_at(self, t: float) -> np.ndarray:
        """Linear interpolation of the breakpoint Hamiltonians."""
        times = [bp[0] for bp in self.breakpoints]
        if t <= times[0]:
            return self.breakpoints[0][1]
        if t >= times[-1]:
            return self.breakpoints[-1][1]
        for i in range(1, len(times)):
            if t <= times[i]:
                t0, h0 = self.breakpoints[i - 1]
                t1, h1 = self.breakpoints[i]
                lam = (t - t0) / (t1 - t0)
                return (1.0 - lam) * h0 + lam * h1
        return self.breakpoints[-1][1]

    def derivative_at(self, t: float) -> np.ndarray:
        """Time derivative of the interpolation.

        At a breakpoint the one-sided slopes differ; the symmetric average is
        used so that the derivative commutes with time reversal of the
        protocol.  At the endpoints only one slope exists.
        """
        slopes = []
        for i in range(1, len(self.breakpoints)):
            t0, h0 = self.breakpoints[i - 1]
            t1, h1 = self.breakpoints[i]
            slopes.append(((t0, t1), (h1 - h0) / (t1 - t0)))
        tol = _TIME_MATCH_TOL * max(1.0, self.duration)
        hits = [s for (t0, t1), s in slopes if t0 - tol <= t <= t1 + tol
                and (abs(t - t0) <= tol or abs(t - t1) <= tol or t0 < t < t1)]
        if not hits:
            raise ValueError(f"time {t} outside protocol range")
        if len(hits) == 1:
            return hits[0]
        return sum(hits[1:], start=hits[0]) / len(hits)

    def reversed(self) -> "DrivingProtocol":
        """Motion-reversed protocol: mirrored in time and complex-conjugated.

        Complex conjugation (the anti-unitary time-reversal in the
        computational basis) makes the reversed propagator equal the
        conjugated inverse of the forward one.
        """
        tau = self.duration
        pts = [(tau - t, np.conj(h)) for t, h in reversed(self.breakpoints)]
        pts[0] = (0.0, pts[0][1])
        return DrivingProtocol(tuple(pts), self.steps_per_segment)


def _expi(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) via spectral decomposition."""
    dec = eig_hermitian(h)
    return dec.apply(lambda lam: np.exp(-1j * lam * dt))


def compile_unitary(
    protocol: DrivingProtocol, grid: list[float] | None = None
) -> tuple[np.ndarray, list[tuple[float, np.ndarray]]]:
    """Time-ordered product of midpoint-rule factors exp(-i H(mid) dt).

    Later times multiply from the left.  ``grid`` selects the output times for
    the intermediate propagators (it must start at 0 and end at the protocol
    duration); by default every internal substep boundary is reported.  Each
    interval between requested times is subdivided so that no factor step
    exceeds (shortest segment length) / steps_per_segment.
    """
    tau = protocol.duration
    bps = [bp[0] for bp in protocol.breakpoints]
    seg_min = min(b - a for a, b in zip(bps, bps[1:]))
    h_target = seg_min / protocol.steps_per_segment
    tol = _TIME_MATCH_TOL * max(1.0, tau)

    if grid is None:
        grid_pts = []
        for a, b in zip(bps, bps[1:]):
            n = protocol.steps_per_segment
            grid_pts.extend(a + (b - a) * k / n for k in range(n))
        grid_pts.append(tau)
    else:
        grid_pts = [float(t) for t in grid]
        if abs(grid_pts[0]) > tol or abs(grid_pts[-1] - tau) > tol:
            raise ValueError("grid must start at 0 and end at the protocol duration")
        grid_pts[0], grid_pts[-1] = 0.0, tau

    pts = sorted(set(grid_pts) | set(bps))
    merged = [pts[0]]
    for t in pts[1:]:
        if t - merged[-1] > tol:
            merged.append(t)
    grid_set = sorted(grid_pts)

    def _on_grid(t: float) -> float | None:
        for g in grid_set:
            if abs(g - t) <= tol:
                return g
        return None

    dim = protocol.dim
    u = np.eye(dim, dtype=np.complex128)
    records: list[tuple[float, np.ndarray]] = []
    g0 = _on_grid(0.0)
    if g0 is not None:
        records.append((g0, u))
    for a, b in zip(merged, merged[1:]):
        n = max(1, math.ceil((b - a) / h_target - 1e-9))
        dt = (b - a) / n
        for k in range(n):
            mid = a + (k + 0.5) * dt
            u = _expi(protocol.hamiltonian_at(mid), dt) @ u
        g = _on_grid(b)
        if g is not None:
            records.append((g, u))
    return u, records


@dataclass(frozen=True, eq=False)
class Scenario:
    """One work experiment: dim, H, H_final, evolution, rho, label."""

    dim: int
    h_initial: np.ndarray
    h_final: np.ndarray
    evolution: np.ndarray | DrivingProtocol
    rho: np.ndarray
    label: str = ""
    _u_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "h_initial", require_hermitian(self.h_initial, "H"))
        object.__setattr__(self, "h_final", require_hermitian(self.h_final, "H_final"))
        object.__setattr__(self, "rho", require_density(self.rho, "rho"))
        d = self.dim
        for name, arr in (("H", self.h_initial), ("H_final", self.h_final), ("rho", self.rho)):
            if arr.shape[0] != d:
                raise ValidationError("DimMismatch", name, f"dimension {arr.shape[0]} != dim={d}")
        if isinstance(self.evolution, DrivingProtocol):
            if self.evolution.dim != d:
                raise ValidationError("DimMismatch", "evolution", f"protocol dimension != dim={d}")
            start = self.evolution.breakpoints[0][1]
            end = self.evolution.breakpoints[-1][1]
            if max_abs(start - self.h_initial) > HERMITICITY_TOL:
                raise ValidationError("EndpointMismatch", "evolution.breakpoints[0].H",
                                      "protocol start Hamiltonian differs from H")
            if max_abs(end - self.h_final) > HERMITICITY_TOL:
                raise ValidationError("EndpointMismatch", "evolution.breakpoints[-1].H",
                                      "protocol end Hamiltonian differs from H_final")
        else:
            u = require_unitary(self.evolution, "evolution.U")
            if u.shape[0] != d:
                raise ValidationError("DimMismatch", "evolution.U", f"dimension != dim={d}")
            object.__setattr__(self, "evolution", u)

    @property
    def is_driven(self) -> bool:
        return isinstance(self.evolution, DrivingProtocol)

    def unitary(self) -> np.ndarray:
        """Final evolution operator U(tau)."""
        if not self.is_driven:
            return self.evolution
        if "u" not in self._u_cache:
            self._u_cache["u"], _ = compile_unitary(self.evolution)
        return self._u_cache["u"]


def mean_energy_change(s: Scenario) -> float:
    """Tr(U rho U^dag H_final) - Tr(rho H): the unmeasured average energy change."""
    u = s.unitary()
    after = float(np.trace(u @ s.rho @ dag(u) @ s.h_final).real)
    before = float(np.trace(s.rho @ s.h_initial).real)
    return after - before


def time_reversed(s: Scenario) -> Scenario:
    """Motion-reversed scenario for a driven experiment.

    The reversed protocol drives the conjugated Hamiltonians backwards and the
    initial state is the time reversal (complex conjugate) of the evolved
    forward state.
    """
    if not s.is_driven:
        raise ValueError("time reversal is defined here for driven scenarios only")
    u = s.unitary()
    rho_rev = np.conj(u @ s.rho @ dag(u))
    return Scenario(
        dim=s.dim,
        h_initial=np.conj(s.h_final),
        h_final=np.conj(s.h_initial),
        evolution=s.evolution.reversed(),
        rho=rho_rev,
        label=(s.label + "-reversed") if s.label else "reversed",
    )


# --- serialization ----------------------------------------------------------

def _entry_to_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix_to_json(m: np.ndarray) -> list:
    return [[_entry_to_pair(complex(z)) for z in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(node, path: str) -> np.ndarray:
    if not isinstance(node, list) or not node:
        raise ParseError("matrix must be a non-empty nested array", path)
    rows = []
    width = None
    for i, row in enumerate(node):
        if not isinstance(row, list) or not row:
            raise ParseError("matrix row must be a non-empty array", f"{path}[{i}]")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError("ragged matrix rows", f"{path}[{i}]")
        entries = []
        for j, cell in enumerate(row):
            if (not isinstance(cell, list) or len(cell) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in cell)):
                raise ParseError("complex entry must be a [re, im] pair", f"{path}[{i}][{j}]")
            entries.append(complex(float(cell[0]), float(cell[1])))
        rows.append(entries)
    return np.array(rows, dtype=np.complex128)


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "dim": s.dim,
        "label": s.label,
        "H": _matrix_to_json(s.h_initial),
        "H_final": _matrix_to_json(s.h_final),
    }
    if s.is_driven:
        doc["evolution"] = {
            "type": "protocol",
            "breakpoints": [{"t": float(t), "H": _matrix_to_json(h)}
                            for t, h in s.evolution.breakpoints],
            "steps_per_segment": s.evolution.steps_per_segment,
        }
    else:
        doc["evolution"] = {"type": "unitary", "U": _matrix_to_json(s.evolution)}
    doc["rho"] = _matrix_to_json(s.rho)
    return doc


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2)


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    for key in ("dim", "H", "H_final", "evolution", "rho"):
        if key not in doc:
            raise ParseError(f"missing required field '{key}'", key)
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError("dim must be a positive integer", "dim")
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ParseError("label must be a string", "label")

    h = _matrix_from_json(doc["H"], "H")
    h_final = _matrix_from_json(doc["H_final"], "H_final")
    rho = _matrix_from_json(doc["rho"], "rho")

    evo = doc["evolution"]
    if not isinstance(evo, dict) or "type" not in evo:
        raise ParseError("evolution must be an object with a 'type' field", "evolution")
    if evo["type"] == "unitary":
        if "U" not in evo:
            raise ParseError("unitary evolution requires field 'U'", "evolution.U")
        evolution: np.ndarray | DrivingProtocol = _matrix_from_json(evo["U"], "evolution.U")
    elif evo["type"] == "protocol":
        if "breakpoints" not in evo or not isinstance(evo["breakpoints"], list):
            raise ParseError("protocol evolution requires a 'breakpoints' array",
                             "evolution.breakpoints")
        bps = []
        for i, bp in enumerate(evo["breakpoints"]):
            if not isinstance(bp, dict) or "t" not in bp or "H" not in bp:
                raise ParseError("breakpoint must have fields 't' and 'H'",
                                 f"evolution.breakpoints[{i}]")
            t = bp["t"]
            if not isinstance(t, (int, float)) or isinstance(t, bool):
                raise ParseError("breakpoint time must be a number",
                                 f"evolution.breakpoints[{i}].t")
            bps.append((float(t), _matrix_from_json(bp["H"], f"evolution.breakpoints[{i}].H")))
        steps = evo.get("steps_per_segment", DEFAULT_STEPS_PER_SEGMENT)
        if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
            raise ParseError("steps_per_segment must be a positive integer",
                             "evolution.steps_per_segment")
        evolution = DrivingProtocol(tuple(bps), steps)
    else:
        raise ParseError(f"unknown evolution type {evo['type']!r}", "evolution.type")

    return Scenario(dim=dim, h_initial=h, h_final=h_final, evolution=evolution,
                    rho=rho, label=label)


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario JSON document; raises ParseError / ValidationError."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
