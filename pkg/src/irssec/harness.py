"""Seeded experiment campaigns, comparison schemes, and CSV emission.

A campaign sweeps one scenario parameter over a value list and, for every
(value, scheme, trial) cell, draws fresh channels from a derived stream,
runs the block-coordinate optimizer, and records the recomputed rates. The
comparison schemes are:

* proposed        -- full design with artificial noise,
* proposed-no-an  -- artificial noise pinned to zero,
* baseline1       -- no surfaces at all, direct-link path-loss exponents
                     lowered to 2 so the comparison stays fair,
* baseline2       -- a single surface serves everyone,
* sum-rate        -- full design optimized for the sum objective.

Exhaustive brute-force oracles for the phase grid and the binary selection
live here as well; they exist for desk-scale verification only.
"""

import csv
import itertools
import math
import time

from dataclasses import dataclass, field, replace

import numpy as np

from . import bcd, rates, sub_wz
from .channel import ChannelSet, default_scenario, dbm_to_watts, generate_channels
from .numerics import RejectedInputError, RngStream

SCHEMES = ("proposed", "proposed-no-an", "baseline1", "baseline2", "sum-rate")
SWEEP_PARAMS = ("n", "i", "p_max")
DEFAULT_TRIALS = 20

CSV_HEADER = (
    "sweep_param,sweep_value,scheme,trial,seed,min_secrecy_bpshz,"
    "sum_secrecy_bpshz,user_rates_semicolon_list,bcd_rounds,wall_ms"
)

PHASE_GRID_ELEMENT_CAP = 8
PHASE_GRID_POINT_CAP = 10_000_000
SELECTION_CAP = 4096


@dataclass(frozen=True)
class ExperimentSpec:
    sweep_param: str
    values: tuple
    trials: int = DEFAULT_TRIALS
    schemes: tuple = ("proposed",)
    i: int = 2
    n: int = 10
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    line_users: bool = False  # users on the segment (8,67,2) -> (8,75,2)
    max_rounds: int = bcd.DEFAULT_MAX_ROUNDS
    inner_max_outer: int = sub_wz.DEFAULT_MAX_OUTER

    def __post_init__(self):
        if self.sweep_param not in SWEEP_PARAMS:
            raise RejectedInputError(f"unknown sweep parameter {self.sweep_param!r}")
        if not self.values:
            raise RejectedInputError("sweep value list must be non-empty")
        if self.trials < 1:
            raise RejectedInputError("trials must be >= 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown or not self.schemes:
            raise RejectedInputError(f"unknown schemes {sorted(unknown)}")
        n_values = self.values if self.sweep_param == "n" else (self.n,)
        if any(int(v) % 5 != 0 for v in n_values):
            raise RejectedInputError("element counts must be divisible by 5")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(self.schemes))


@dataclass(frozen=True)
class ResultRow:
    sweep_param: str
    sweep_value: float
    scheme: str
    trial: int
    seed: int
    min_secrecy_bpshz: float
    sum_secrecy_bpshz: float
    user_rates: tuple
    bcd_rounds: int
    wall_ms: float


def _scenario(spec: ExperimentSpec, value, scheme):
    i, n = spec.i, spec.n
    overrides = dict(spec.overrides)
    if spec.sweep_param == "n":
        n = int(value)
    elif spec.sweep_param == "i":
        i = int(value)
    else:
        overrides["p_max"] = dbm_to_watts(float(value))  # sweep values in dBm
    if scheme == "baseline1":
        overrides["beta_bu"] = 2.0
        overrides["beta_be"] = 2.0
    if scheme == "baseline2":
        overrides["k"] = 1
    cfg = default_scenario(i, n, **overrides)
    if spec.line_users:
        users = tuple(
            (8.0, 67.0 + 8.0 * j / max(cfg.i - 1, 1), 2.0) for j in range(cfg.i)
        )
        cfg = replace(cfg, user_positions=users)
    return cfg


def _mute_surfaces(cs: ChannelSet) -> ChannelSet:
    return ChannelSet(
        g_bi=tuple(np.zeros_like(g) for g in cs.g_bi),
        h_u=cs.h_u,
        h_e=cs.h_e,
        g_iu=cs.g_iu,
        g_ie=cs.g_ie,
    )


def _run_trial(cfg, scheme, chan_stream, opt_stream, spec):
    cs = generate_channels(cfg, chan_stream)
    kwargs = dict(
        stream=opt_stream,
        max_rounds=spec.max_rounds,
        inner_max_outer=spec.inner_max_outer,
    )
    if scheme == "baseline1":
        cs = _mute_surfaces(cs)
        kwargs["block_order"] = ("wz",)
    if scheme == "proposed-no-an":
        kwargs["use_an"] = False
    if scheme == "sum-rate":
        kwargs["objective"] = bcd.OBJECTIVE_SUM_RATE
    return bcd.optimize(cs, cfg, **kwargs)


def run_experiment(spec: ExperimentSpec):
    """All (value, scheme, trial) cells in deterministic order; channels for
    a given (value, trial) are shared across schemes so comparisons pair up.
    A failed trial is recorded as a NaN row and the campaign continues."""
    rows = []
    base = RngStream(spec.seed, 11)
    for vi, value in enumerate(spec.values):
        for si, scheme in enumerate(spec.schemes):
            cfg = _scenario(spec, value, scheme)
            for trial in range(spec.trials):
                trial_seed = spec.seed * 100003 + trial
                cell = base.substream(vi).substream(trial)
                start = time.perf_counter()
                try:
                    state = _run_trial(
                        cfg, scheme, cell.substream(0), cell.substream(1 + si), spec
                    )
                    row = ResultRow(
                        sweep_param=spec.sweep_param,
                        sweep_value=float(value),
                        scheme=scheme,
                        trial=trial,
                        seed=trial_seed,
                        min_secrecy_bpshz=state.min_rate,
                        sum_secrecy_bpshz=state.sum_rate,
                        user_rates=tuple(state.user_rates),
                        bcd_rounds=state.t,
                        wall_ms=(time.perf_counter() - start) * 1e3,
                    )
                except (RejectedInputError, FloatingPointError, np.linalg.LinAlgError):
                    row = ResultRow(
                        sweep_param=spec.sweep_param,
                        sweep_value=float(value),
                        scheme=scheme,
                        trial=trial,
                        seed=trial_seed,
                        min_secrecy_bpshz=float("nan"),
                        sum_secrecy_bpshz=float("nan"),
                        user_rates=(),
                        bcd_rounds=0,
                        wall_ms=(time.perf_counter() - start) * 1e3,
                    )
                rows.append(row)
    return rows


def summarize(rows):
    """Mean and standard error of the min secrecy rate per (value, scheme)."""
    groups = {}
    for r in rows:
        groups.setdefault((r.sweep_value, r.scheme), []).append(r.min_secrecy_bpshz)
    out = {}
    for key, vals in groups.items():
        arr = np.asarray(vals, dtype=float)
        arr = arr[np.isfinite(arr)]
        if arr.size == 0:
            out[key] = (float("nan"), float("nan"), 0)
            continue
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        out[key] = (mean, se, int(arr.size))
    return out


# ---------------------------------------------------------------------------
# brute-force oracles


def grid_oracle_phase(cs: ChannelSet, td, alpha, cfg, levels):
    """Exhaustive search over `levels` quantized values per phase element;
    returns (best mu, best min secrecy rate)."""
    nk = cfg.n * cfg.k
    if nk > PHASE_GRID_ELEMENT_CAP or levels ** nk > PHASE_GRID_POINT_CAP:
        raise RejectedInputError("phase grid search-space cap exceeded")
    angles = 2.0 * np.pi * np.arange(levels) / levels
    alpha = np.asarray(alpha, dtype=float)
    best_rate, best_mu = -math.inf, None
    for combo in itertools.product(angles, repeat=nk):
        mu = np.exp(1j * np.asarray(combo)).reshape(cfg.k, cfg.n)
        ec = rates.effective_channels(cs, rates.ReflectConfig(mu=mu, alpha=alpha))
        rate = rates.min_secrecy_rate(ec, td, cfg.n0)
        if rate > best_rate:
            best_rate, best_mu = rate, mu
    return best_mu, best_rate


def enumerate_alpha_oracle(cs: ChannelSet, td, mu, cfg):
    """Exhaustive search over all one-hot selections; returns
    (best alpha, best min secrecy rate)."""
    if cfg.k ** cfg.i > SELECTION_CAP:
        raise RejectedInputError("selection enumeration cap exceeded")
    mu = np.asarray(mu, dtype=np.complex128)
    best_rate, best_alpha = -math.inf, None
    for combo in itertools.product(range(cfg.k), repeat=cfg.i):
        alpha = np.zeros((cfg.i, cfg.k))
        for i, k in enumerate(combo):
            alpha[i, k] = 1.0
        ec = rates.effective_channels(cs, rates.ReflectConfig(mu=mu, alpha=alpha))
        rate = rates.min_secrecy_rate(ec, td, cfg.n0)
        if rate > best_rate:
            best_rate, best_alpha = rate, alpha
    return best_alpha, best_rate


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(x):
    return f"{float(x):.9g}"


def write_csv(rows, path):
    """Fixed schema, RFC-4180 quoting, LF line endings, 9 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER.split(","))
            for r in rows:
                writer.writerow(
                    [
                        r.sweep_param,
                        _fmt(r.sweep_value),
                        r.scheme,
                        r.trial,
                        r.seed,
                        _fmt(r.min_secrecy_bpshz),
                        _fmt(r.sum_secrecy_bpshz),
                        ";".join(_fmt(u) for u in r.user_rates),
                        r.bcd_rounds,
                        _fmt(r.wall_ms),
                    ]
                )
    except OSError as exc:
        raise RejectedInputError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Parse a file emitted by write_csv back into ResultRow values."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_HEADER.split(","):
                raise RejectedInputError(f"unexpected header in {path}")
            rows = []
            for rec in reader:
                rows.append(
                    ResultRow(
                        sweep_param=rec[0],
                        sweep_value=float(rec[1]),
                        scheme=rec[2],
                        trial=int(rec[3]),
                        seed=int(rec[4]),
                        min_secrecy_bpshz=float(rec[5]),
                        sum_secrecy_bpshz=float(rec[6]),
                        user_rates=tuple(float(u) for u in rec[7].split(";") if u),
                        bcd_rounds=int(rec[8]),
                        wall_ms=float(rec[9]),
                    )
                )
    except OSError as exc:
        raise RejectedInputError(f"cannot read {path}: {exc}") from exc
    return rows
