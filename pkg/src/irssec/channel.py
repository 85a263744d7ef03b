"""Scenario geometry and channel generation.

A base station at a fixed location serves I users with the help of K
reflecting surfaces while a single-antenna eavesdropper listens. Direct
links follow Rayleigh fading with a steep path-loss exponent (blocked LoS);
surface-related links are pure LoS built from uniform-array responses.
All links use the distance power law L0 * d^-beta and per-link RNG
sub-streams so generation is deterministic under a fixed seed.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import RejectedInputError, RngStream, sample_complex_gaussian

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    m: int  # base-station antennas
    n: int  # elements per surface
    k: int  # number of surfaces
    i: int  # number of users
    p_max: float  # transmit power budget, Watts
    n0: float  # noise power, Watts
    l0: float  # linear power gain at 1 m
    wavelength: float  # meters
    beta_bu: float  # path-loss exponents per link type
    beta_be: float
    beta_bi: float
    beta_iu: float
    beta_ie: float
    rician_bu: float  # Rician factors per link type (math.inf allowed)
    rician_be: float
    rician_bi: float
    rician_iu: float
    rician_ie: float
    bs_position: tuple
    user_positions: tuple  # I triples
    irs_positions: tuple  # K triples
    eve_position: tuple
    theta_star_deg: float
    d_t: float  # element spacing at the base station, meters
    d_r: float  # element spacing at the surfaces, meters
    delta: float  # convergence threshold, bits/s/Hz
    seed: int

    def __post_init__(self):
        if min(self.m, self.n, self.k, self.i) < 1:
            raise RejectedInputError("antenna/element/surface/user counts must be >= 1")
        if self.p_max <= 0 or self.n0 <= 0:
            raise RejectedInputError("powers must be positive")
        if not 0 < self.l0 <= 1:
            raise RejectedInputError("reference gain must lie in (0, 1]")
        if len(self.user_positions) != self.i or len(self.irs_positions) != self.k:
            raise RejectedInputError("position list lengths must match user/surface counts")
        for pos in (*self.user_positions, *self.irs_positions, self.eve_position):
            if tuple(pos) == tuple(self.bs_position):
                raise RejectedInputError("positions must be distinct from the base station")
        for kf in (self.rician_bu, self.rician_be, self.rician_bi, self.rician_iu, self.rician_ie):
            if kf < 0:
                raise RejectedInputError("Rician factors must be nonnegative")


@dataclass(frozen=True)
class ChannelSet:
    g_bi: tuple  # K matrices, N x M, base station -> surface k
    h_u: tuple  # I vectors, length M, base station -> user i
    h_e: np.ndarray  # length M, base station -> eavesdropper
    g_iu: tuple  # I x K vectors, length N, surface k -> user i
    g_ie: tuple  # K vectors, length N, surface k -> eavesdropper


def _rotate_about_vertical(point, center, angle_deg):
    """Rotate a 3-D point about the vertical axis through `center`."""
    ang = math.radians(angle_deg)
    dx, dy = point[0] - center[0], point[1] - center[1]
    return (
        center[0] + dx * math.cos(ang) - dy * math.sin(ang),
        center[1] + dx * math.sin(ang) + dy * math.cos(ang),
        point[2],
    )


def default_scenario(i, n, **overrides):
    """Reference scenario: first user/surface fixed, later ones rotated
    about the base station's vertical axis in steps of theta_star."""
    if n < 1 or i < 1:
        raise RejectedInputError("user count and element count must be >= 1")
    if n % 5 != 0:
        raise RejectedInputError("element count must be divisible by 5 (5 x N/5 layout)")
    wavelength = SPEED_OF_LIGHT / 2e9
    theta_star = float(overrides.pop("theta_star_deg", 20.0))
    k = int(overrides.pop("k", i))
    bs = (10.0, 0.0, 10.0)
    user1 = (5.0, 67.0, 5.0)
    irs1 = (8.0, 67.0, 2.0)
    users = tuple(_rotate_about_vertical(user1, bs, j * theta_star) for j in range(i))
    surfaces = tuple(_rotate_about_vertical(irs1, bs, j * theta_star) for j in range(k))
    cfg = ScenarioConfig(
        m=4,
        n=n,
        k=k,
        i=i,
        p_max=dbm_to_watts(40.0),
        n0=dbm_to_watts(-174.0),
        l0=10.0 ** (-30.0 / 10.0),
        wavelength=wavelength,
        beta_bu=5.0,
        beta_be=5.0,
        beta_bi=2.0,
        beta_iu=2.0,
        beta_ie=2.0,
        rician_bu=0.0,
        rician_be=0.0,
        rician_bi=math.inf,
        rician_iu=math.inf,
        rician_ie=math.inf,
        bs_position=bs,
        user_positions=users,
        irs_positions=surfaces,
        eve_position=(10.0, 60.0, 5.0),
        theta_star_deg=theta_star,
        d_t=wavelength / 2.0,
        d_r=3.0 * wavelength / 8.0,
        delta=0.001,
        seed=0,
    )
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def path_gain(d, beta, l0):
    """Distance power law l0 * d^-beta (a power gain; amplitudes use sqrt)."""
    if d <= 0:
        raise RejectedInputError("distance must be positive")
    return l0 * d ** (-beta)


def array_response(count, spacing, wavelength, azimuth, elevation):
    """Uniform 1-D array response with unit-modulus entries."""
    if count < 1:
        raise RejectedInputError("array size must be >= 1")
    phase = (2.0 * math.pi / wavelength) * spacing * math.sin(azimuth) * math.sin(elevation)
    return np.exp(1j * phase * np.arange(count))


def rician_channel(dims, k_factor, los_component, stream):
    """Mix a LoS component with i.i.d. circular Gaussian scattering."""
    los = np.asarray(los_component, dtype=np.complex128)
    if los.shape != tuple(np.atleast_1d(dims)):
        raise RejectedInputError("LoS component shape does not match dims")
    if k_factor < 0:
        raise RejectedInputError("Rician factor must be nonnegative")
    if math.isinf(k_factor):
        return los.copy()
    nlos = sample_complex_gaussian(stream, int(np.prod(los.shape))).reshape(los.shape)
    return math.sqrt(k_factor / (k_factor + 1.0)) * los + math.sqrt(1.0 / (k_factor + 1.0)) * nlos


def _link_angles(src, dst):
    """(azimuth, elevation) of the ray src -> dst; azimuth in the horizontal
    plane, elevation measured from the horizontal."""
    dx, dy, dz = (dst[0] - src[0], dst[1] - src[1], dst[2] - src[2])
    azimuth = math.atan2(dy, dx)
    elevation = math.atan2(dz, math.hypot(dx, dy))
    return azimuth, elevation


def _distance(a, b):
    return math.dist(a, b)


def generate_channels(cfg: ScenarioConfig, stream: RngStream) -> ChannelSet:
    """Draw every link of the scenario; per-link sub-streams keep the result
    independent of generation order."""
    lam = cfg.wavelength

    def bs_response(target):
        az, el = _link_angles(cfg.bs_position, target)
        return array_response(cfg.m, cfg.d_t, lam, az, el)

    def irs_response(surface, target):
        az, el = _link_angles(surface, target)
        return array_response(cfg.n, cfg.d_r, lam, az, el)

    link = 0
    g_bi = []
    for kk in range(cfg.k):
        surf = cfg.irs_positions[kk]
        amp = math.sqrt(path_gain(_distance(cfg.bs_position, surf), cfg.beta_bi, cfg.l0))
        los = np.outer(irs_response(surf, cfg.bs_position), bs_response(surf).conj())
        g_bi.append(
            amp * rician_channel((cfg.n, cfg.m), cfg.rician_bi, los, stream.substream(link))
        )
        link += 1
    h_u = []
    for ii in range(cfg.i):
        user = cfg.user_positions[ii]
        amp = math.sqrt(path_gain(_distance(cfg.bs_position, user), cfg.beta_bu, cfg.l0))
        h_u.append(
            amp
            * rician_channel(
                (cfg.m,), cfg.rician_bu, bs_response(user), stream.substream(link)
            )
        )
        link += 1
    amp = math.sqrt(path_gain(_distance(cfg.bs_position, cfg.eve_position), cfg.beta_be, cfg.l0))
    h_e = amp * rician_channel(
        (cfg.m,), cfg.rician_be, bs_response(cfg.eve_position), stream.substream(link)
    )
    link += 1
    g_iu = []
    for ii in range(cfg.i):
        row = []
        user = cfg.user_positions[ii]
        for kk in range(cfg.k):
            surf = cfg.irs_positions[kk]
            amp = math.sqrt(path_gain(_distance(surf, user), cfg.beta_iu, cfg.l0))
            row.append(
                amp
                * rician_channel(
                    (cfg.n,), cfg.rician_iu, irs_response(surf, user), stream.substream(link)
                )
            )
            link += 1
        g_iu.append(tuple(row))
    g_ie = []
    for kk in range(cfg.k):
        surf = cfg.irs_positions[kk]
        amp = math.sqrt(path_gain(_distance(surf, cfg.eve_position), cfg.beta_ie, cfg.l0))
        g_ie.append(
            amp
            * rician_channel(
                (cfg.n,),
                cfg.rician_ie,
                irs_response(surf, cfg.eve_position),
                stream.substream(link),
            )
        )
        link += 1
    return ChannelSet(
        g_bi=tuple(g_bi), h_u=tuple(h_u), h_e=h_e, g_iu=tuple(g_iu), g_ie=tuple(g_ie)
    )


# ---------------------------------------------------------------------------
# flat key = value serialization

_SCALAR_KEYS = {
    "m": int,
    "n": int,
    "k": int,
    "i": int,
    "p_max": float,
    "n0": float,
    "l0": float,
    "wavelength": float,
    "beta_bu": float,
    "beta_be": float,
    "beta_bi": float,
    "beta_iu": float,
    "beta_ie": float,
    "rician_bu": float,
    "rician_be": float,
    "rician_bi": float,
    "rician_iu": float,
    "rician_ie": float,
    "theta_star_deg": float,
    "d_t": float,
    "d_r": float,
    "delta": float,
    "seed": int,
}


def _fmt_triple(p):
    return ",".join(repr(float(v)) for v in p)


def _parse_triple(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise RejectedInputError(f"expected a comma-separated triple, got {text!r}")
    return tuple(parts)


def dumps_config(cfg: ScenarioConfig) -> str:
    lines = []
    for key, typ in _SCALAR_KEYS.items():
        val = getattr(cfg, key)
        lines.append(f"{key} = {val!r}" if typ is float else f"{key} = {val}")
    lines.append(f"bs_position = {_fmt_triple(cfg.bs_position)}")
    lines.append(f"eve_position = {_fmt_triple(cfg.eve_position)}")
    for idx, pos in enumerate(cfg.user_positions, start=1):
        lines.append(f"user_position_{idx} = {_fmt_triple(pos)}")
    for idx, pos in enumerate(cfg.irs_positions, start=1):
        lines.append(f"irs_position_{idx} = {_fmt_triple(pos)}")
    return "\n".join(lines) + "\n"


def loads_config(text: str) -> ScenarioConfig:
    values = {}
    users = {}
    surfaces = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise RejectedInputError(f"malformed line {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _SCALAR_KEYS:
            values[key] = _SCALAR_KEYS[key](val)
        elif key in ("bs_position", "eve_position"):
            values[key] = _parse_triple(val)
        elif key.startswith("user_position_"):
            users[int(key.rsplit("_", 1)[1])] = _parse_triple(val)
        elif key.startswith("irs_position_"):
            surfaces[int(key.rsplit("_", 1)[1])] = _parse_triple(val)
        else:
            raise RejectedInputError(f"unknown configuration key {key!r}")
    missing = set(_SCALAR_KEYS) | {"bs_position", "eve_position"}
    missing -= set(values)
    if missing:
        raise RejectedInputError(f"missing configuration keys: {sorted(missing)}")
    if sorted(users) != list(range(1, len(users) + 1)):
        raise RejectedInputError("user positions must be numbered 1..I without gaps")
    if sorted(surfaces) != list(range(1, len(surfaces) + 1)):
        raise RejectedInputError("surface positions must be numbered 1..K without gaps")
    return ScenarioConfig(
        user_positions=tuple(users[j] for j in sorted(users)),
        irs_positions=tuple(surfaces[j] for j in sorted(surfaces)),
        **values,
    )


def save_config(cfg: ScenarioConfig, path):
    with open(path, "w") as fh:
        fh.write(dumps_config(cfg))


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return loads_config(fh.read())
