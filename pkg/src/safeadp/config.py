"""Flat dotted-key configuration: `key = value` lines, arrays in
brackets, `#` comments. Unknown keys are rejected with the line number."""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from .cost import BarrierSpec, CostSpec
from .critic import LearnerGains
from .errors import ConfigError
from .model import CircularSafeSet, SystemModel, linear_system, single_integrator
from .qpsolve import QpParams
from .sim import SimConfig
from .staf import StaFConfig

DEFAULTS = {
    "system.kind": "single_integrator",
    "system.A": None,
    "system.B": None,
    "safeset.center": [2.0, 2.0],
    "safeset.radius": 1.0,
    "cost.Q": [1.0, 0.0, 0.0, 1.0],
    "cost.r_diag": [10.0, 10.0],
    "cost.u_max": 0.5,
    "barrier.k_p": 15.0,
    "barrier.a": 0.5,
    "barrier.d_on": 0.2,
    "barrier.d_off": 1.0,
    "staf.offsets": [[0.0, -1.0], [0.866, -0.5], [-0.866, -0.5]],
    "staf.scale_num": 0.5,
    "gains.kc1": 0.05,
    "gains.kc2": 0.75,
    "gains.ka1": 0.75,
    "gains.nu": 1.0,
    "gains.beta": 0.001,
    "gains.N": 1,
    "gains.gamma0": 1.0,
    "gains.wa_bound": 20.0,
    "gains.seed": 0,
    "gains.pe_window": 1.0,
    "qp.p": 2.0,
    "qp.dt": 0.01,
    "qp.alpha_scale": 1.0,
    "qp.gamma_scale": 10.0,
    "sim.t_final": 25.0,
    "sim.x0": [3.0, 3.5],
    "sim.abs_tol": 1e-6,
    "sim.rel_tol": 1e-6,
    "sim.dt_out": 0.01,
    "sim.controller": "adp",
}


def parse_config(path):
    """Read a config file into a key -> value dict (defaults applied)."""
    values = dict(DEFAULTS)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw.strip()!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(val, key, path, lineno)
    return values


_STRING_KEYS = ("system.kind", "sim.controller")


def _parse_value(val, key, path, lineno):
    try:
        return ast.literal_eval(val)
    except (ValueError, SyntaxError):
        if key in _STRING_KEYS and all(c.isalnum() or c in "._-" for c in val):
            return val
        raise ConfigError(f"{path}:{lineno}: cannot parse value for {key!r}: {val!r}")


@dataclass
class Scenario:
    """Everything one episode needs, assembled from a config dict."""

    system: SystemModel
    safeset: CircularSafeSet
    cost: CostSpec
    barrier: BarrierSpec
    staf: StaFConfig
    gains: LearnerGains
    qp: QpParams
    sim: SimConfig
    values: dict


def build_scenario(values=None, **overrides):
    """Construct a Scenario from a config dict plus keyword overrides
    (dotted keys with `.` replaced by `__`, e.g. sim__controller)."""
    cfg = dict(DEFAULTS)
    if values:
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(values)
    for key, val in overrides.items():
        dotted = key.replace("__", ".")
        if dotted not in DEFAULTS:
            raise ConfigError(f"unknown config key {dotted!r}")
        cfg[dotted] = val

    u_max = float(cfg["cost.u_max"])
    kind = cfg["system.kind"]
    if kind == "single_integrator":
        system = single_integrator(u_max=u_max)
    elif kind == "linear":
        if cfg["system.A"] is None or cfg["system.B"] is None:
            raise ConfigError("system.kind = linear requires system.A and system.B")
        system = linear_system(cfg["system.A"], cfg["system.B"], u_max=u_max)
    else:
        raise ConfigError(f"unknown system.kind {kind!r}")

    safeset = CircularSafeSet(center=np.asarray(cfg["safeset.center"], float),
                              radius=float(cfg["safeset.radius"]))
    Qflat = np.asarray(cfg["cost.Q"], float)
    Q = Qflat.reshape(system.n, system.n) if Qflat.ndim == 1 else Qflat
    cost = CostSpec(Q=Q, r_diag=np.asarray(cfg["cost.r_diag"], float), u_max=u_max)
    barrier = BarrierSpec(safeset, k_p=float(cfg["barrier.k_p"]), a=float(cfg["barrier.a"]),
                          d_on=float(cfg["barrier.d_on"]), d_off=float(cfg["barrier.d_off"]))
    staf = StaFConfig(offsets=np.asarray(cfg["staf.offsets"], float),
                      scale_num=float(cfg["staf.scale_num"]))
    gains = LearnerGains(kc1=float(cfg["gains.kc1"]), kc2=float(cfg["gains.kc2"]),
                         ka1=float(cfg["gains.ka1"]), nu=float(cfg["gains.nu"]),
                         beta=float(cfg["gains.beta"]), N=int(cfg["gains.N"]),
                         gamma0=float(cfg["gains.gamma0"]),
                         wa_bound=float(cfg["gains.wa_bound"]),
                         seed=int(cfg["gains.seed"]),
                         pe_window=float(cfg["gains.pe_window"]))
    qp = QpParams(p=float(cfg["qp.p"]), dt=float(cfg["qp.dt"]),
                  alpha_scale=float(cfg["qp.alpha_scale"]),
                  gamma_scale=float(cfg["qp.gamma_scale"]))
    sim = SimConfig(t_final=float(cfg["sim.t_final"]),
                    x0=np.asarray(cfg["sim.x0"], float),
                    abs_tol=float(cfg["sim.abs_tol"]), rel_tol=float(cfg["sim.rel_tol"]),
                    dt_out=float(cfg["sim.dt_out"]), controller=str(cfg["sim.controller"]))
    return Scenario(system=system, safeset=safeset, cost=cost, barrier=barrier,
                    staf=staf, gains=gains, qp=qp, sim=sim, values=cfg)
