"""Block-coordinate orchestration of the three sub-solvers.

One round solves, in order, the transmit covariances, the reflection
phases, and the surface selection (followed by a transmit re-solve so the
beams match the rounded selection), each time recovering an implementable
design and accepting the block update only when the true objective --
recomputed from raw channels -- does not decrease. Rounds repeat until the
objective improves by less than delta or the round cap is reached.
"""

import math

from dataclasses import dataclass

import numpy as np

from . import rates, sub_alpha, sub_phase, sub_wz
from .channel import ChannelSet
from .numerics import RejectedInputError, RngStream
from .sub_wz import (
    STATUS_CONVERGED,
    STATUS_DEGRADED,
    STATUS_MAX_OUTER,
)

DEFAULT_MAX_ROUNDS = 50
OBJECTIVE_MAX_MIN = "max-min"
OBJECTIVE_SUM_RATE = "sum-rate"
DEFAULT_BLOCK_ORDER = ("wz", "phase", "alpha")


@dataclass(frozen=True)
class DesignState:
    design: rates.TransmitDesign
    reflect: rates.ReflectConfig
    user_rates: tuple  # clamped per-user secrecy rates, bits/s/Hz
    min_rate: float
    sum_rate: float
    t: int
    delta: float  # last round's objective improvement
    status: str
    history: tuple = ()


@dataclass(frozen=True)
class EvalReport:
    user_rates: tuple
    min_rate: float
    sum_rate: float


def evaluate_design(ch: ChannelSet, td: rates.TransmitDesign,
                    rc: rates.ReflectConfig, cfg) -> EvalReport:
    """Recompute every rate from raw channels; rejects infeasible designs."""
    td.check_power(cfg.p_max)  # names the violating user
    ec = rates.effective_channels(ch, rc)
    vals = tuple(rates.secrecy_rate(i, ec, td, cfg.n0) for i in range(cfg.i))
    return EvalReport(user_rates=vals, min_rate=min(vals), sum_rate=float(sum(vals)))


def _objective(report: EvalReport, objective):
    return report.sum_rate if objective == OBJECTIVE_SUM_RATE else report.min_rate


def _initial_selection(cfg):
    if getattr(cfg, "user_positions", None) is not None:
        return sub_alpha.nearest_irs_alpha(cfg)
    alpha = np.zeros((cfg.i, cfg.k))
    for i in range(cfg.i):
        alpha[i, i % cfg.k] = 1.0
    return alpha


def _solve_transmit(ch, td, mu, alpha, cfg, stream, sum_rate, use_an, max_outer):
    """Transmit block: lifted SCA from the current design, then recovery."""
    rc = rates.ReflectConfig(mu=mu, alpha=alpha)
    ec = rates.effective_channels(ch, rc)
    w, z = td.lifted()
    ft = [rates.f_terms_wz(i, ec, w, z, cfg.n0, check=False) for i in range(cfg.i)]
    vals = [f.unclamped() for f in ft]
    x0 = sum(vals) if sum_rate else min(vals)
    init = sub_wz.WZIterate(w=w, z=z, x=x0, history=(x0,))
    out = sub_wz.solve_sca_wz(
        ec, init, cfg, sum_rate=sum_rate, use_an=use_an, max_outer=max_outer
    )
    td_new = sub_wz.recover_design(ec, out, cfg, stream)
    return td_new, out.status


def optimize(ch: ChannelSet, cfg, objective=OBJECTIVE_MAX_MIN, stream: RngStream = None,
             delta=None, max_rounds=DEFAULT_MAX_ROUNDS,
             block_order=DEFAULT_BLOCK_ORDER, use_an=True,
             inner_max_outer=sub_wz.DEFAULT_MAX_OUTER) -> DesignState:
    if objective not in (OBJECTIVE_MAX_MIN, OBJECTIVE_SUM_RATE):
        raise RejectedInputError(f"unknown objective {objective!r}")
    delta = cfg.delta if delta is None else delta
    if stream is None:
        stream = RngStream(getattr(cfg, "seed", 0), 7)
    sum_rate = objective == OBJECTIVE_SUM_RATE

    g = stream.substream(0).generator()
    mu = np.exp(1j * g.uniform(0.0, 2.0 * np.pi, (cfg.k, cfg.n)))
    alpha = _initial_selection(cfg)
    ec = rates.effective_channels(ch, rates.ReflectConfig(mu=mu, alpha=alpha))
    td = sub_wz.mrt_design(ec, cfg, use_an=use_an)

    report = evaluate_design(ch, td, rates.ReflectConfig(mu=mu, alpha=alpha), cfg)
    obj = _objective(report, objective)
    history = [obj]
    status = STATUS_MAX_OUTER
    degraded = False
    improvement = math.inf
    t = 0
    for t in range(1, max_rounds + 1):
        round_stream = stream.substream(t)
        prev = obj
        for step, block in enumerate(block_order):
            if block == "wz":
                td_new, st = _solve_transmit(
                    ch, td, mu, alpha, cfg, round_stream.substream(step),
                    sum_rate, use_an, inner_max_outer,
                )
                cand = (td_new, mu, alpha)
            elif block == "phase":
                lift = rates.build_phase_lift(ch, td, alpha)
                out = sub_phase.solve_sca_phase(
                    lift, sub_phase.init_phase(lift, cfg, mu=mu), cfg,
                    sum_rate=sum_rate, max_outer=inner_max_outer,
                )
                st = out.status
                mu_new = sub_phase.recover_phases(
                    out.v, lift, stream=round_stream.substream(step), n0=cfg.n0
                ).reshape(cfg.k, cfg.n)
                cand = (td, mu_new, alpha)
            else:
                tables = rates.build_alpha_tables(ch, td, mu)
                out = sub_alpha.solve_sca_alpha(
                    tables, sub_alpha.init_alpha(tables, cfg, alpha=alpha), cfg,
                    sum_rate=sum_rate, max_outer=inner_max_outer,
                )
                st = out.status
                alpha_new = sub_alpha.round_selection(out)
                # the rounded selection changes the effective channels, so
                # the transmit design is re-solved against it
                td_new, st2 = _solve_transmit(
                    ch, td, mu, alpha_new, cfg,
                    round_stream.substream(step + 8), sum_rate, use_an,
                    inner_max_outer,
                )
                degraded = degraded or st2 == sub_wz.STATUS_DEGRADED
                cand = (td_new, mu, alpha_new)
            degraded = degraded or st == sub_wz.STATUS_DEGRADED
            cand_report = evaluate_design(
                ch, cand[0], rates.ReflectConfig(mu=cand[1], alpha=cand[2]), cfg
            )
            cand_obj = _objective(cand_report, objective)
            # a block update is kept only when the recomputed true objective
            # does not decrease; otherwise the previous blocks stand
            if cand_obj >= obj:
                td, mu, alpha = cand
                report, obj = cand_report, cand_obj
        history.append(obj)
        improvement = obj - prev
        if improvement < delta:
            status = STATUS_CONVERGED
            break
    if degraded:
        status = STATUS_DEGRADED
    return DesignState(
        design=td,
        reflect=rates.ReflectConfig(mu=mu, alpha=alpha),
        user_rates=report.user_rates,
        min_rate=report.min_rate,
        sum_rate=report.sum_rate,
        t=t,
        delta=float(improvement),
        status=status,
        history=tuple(history),
    )
