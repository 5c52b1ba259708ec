"""Factory-grid uplink scenarios and Monte Carlo evaluation of actual reliability.

A scenario is a rows x cols grid of square cells, each with one base station
and ``ue_per_cell`` devices placed uniformly at random. Device k of every cell
shares resource k, so the interferers of a device are the co-channel devices
in the other cells of the same reuse colour.
"""

import itertools
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import (DEFAULT_MIXTURE_CAP, CognitionCase, EipMixture, FadingLink, ScaledF,
                            aggregate_eip, project_sinr)
from .engine import (avg_dcc_adaptive, nested_signal_average, signal_rate_curve,
                     solve_fixed_rate)
from .errors import ContractError, DomainError, InfeasibleQosError, SizeError
from .fbl import inst_bler, inst_rate
from .units import dbm_to_w, lin_to_db

FORMAT_VERSION = 1
CHUNK = 1 << 18
MAX_TRIALS = 10 ** 10
MIN_DISTANCE = 1.0


@dataclass(frozen=True)
class LayoutSpec:
    rows: int = 4
    cols: int = 3
    side: float = 50.0
    ue_per_cell: int = 1
    reuse: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.ue_per_cell < 1:
            raise DomainError("grid dimensions and devices per cell must be >= 1")
        if not self.side > 0:
            raise DomainError(f"cell side must be positive, got {self.side}")
        if self.reuse not in (1, 3):
            raise DomainError(f"reuse must be 1 or 3, got {self.reuse}")


@dataclass(frozen=True)
class PowerSpec:
    baseline_dbm: float = -67.0
    delta: float = 0.7
    p_max_dbm: float = 23.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 180e3

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.p_max_dbm < self.baseline_dbm:
            raise DomainError("p_max must not be below the baseline power")
        if not self.bandwidth_hz > 0:
            raise DomainError("bandwidth must be positive")

    @property
    def noise_power_dbm(self):
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)

    @property
    def noise_power_w(self):
        return dbm_to_w(self.noise_power_dbm)


def path_loss_db(d):
    """Indoor factory path loss 38.46 + 20 log10(d), d in metres."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be positive")
    out = 38.46 + 20.0 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def tx_power_dbm(pl_serving_db, power):
    """Partial path-loss compensation capped at p_max."""
    out = np.minimum(power.baseline_dbm + power.delta * np.asarray(pl_serving_db, dtype=float),
                     power.p_max_dbm)
    return float(out) if out.ndim == 0 else out


@dataclass(eq=False)
class Scenario:
    layout: LayoutSpec
    power: PowerSpec
    m_signal: float
    m_interference: float
    bs_positions: np.ndarray
    ue_positions: np.ndarray
    omega: np.ndarray  # (device, base station) mean received power, W
    tx_dbm: np.ndarray = field(default=None)

    @property
    def n_cells(self):
        return self.layout.rows * self.layout.cols

    @property
    def n_ues(self):
        return self.n_cells * self.layout.ue_per_cell

    @property
    def noise_power(self):
        return self.power.noise_power_w

    def cell_of(self, ue):
        return ue // self.layout.ue_per_cell

    def colour(self, cell):
        if self.layout.reuse == 1:
            return 0
        r, c = divmod(cell, self.layout.cols)
        return (r + c) % 3

    def co_channel_cells(self, cell):
        """Other cells that share spectrum with ``cell``."""
        col = self.colour(cell)
        return [j for j in range(self.n_cells) if j != cell and self.colour(j) == col]

    @property
    def active_sets(self):
        """Devices transmitting on each resource (one per cell)."""
        k = self.layout.ue_per_cell
        return [[c * k + r for c in range(self.n_cells)] for r in range(k)]

    def signal_link(self, ue):
        return FadingLink(float(self.omega[ue, self.cell_of(ue)]), self.m_signal)

    def interferers(self, ue):
        """Scheduled co-channel devices on the same resource as ``ue``."""
        k = self.layout.ue_per_cell
        r = ue % k
        return [c * k + r for c in self.co_channel_cells(self.cell_of(ue))]

    def candidate_interferers(self, ue):
        """Every device in the co-channel cells of ``ue``."""
        k = self.layout.ue_per_cell
        return [c * k + j for c in self.co_channel_cells(self.cell_of(ue)) for j in range(k)]

    def interference_links(self, ue, sources):
        cell = self.cell_of(ue)
        return [FadingLink(float(self.omega[s, cell]), self.m_interference) for s in sources]

    def summary(self):
        counts = [len(self.interferers(u)) for u in range(self.n_ues)]
        sig = np.array([self.omega[u, self.cell_of(u)] for u in range(self.n_ues)])
        return {
            "cells": self.n_cells,
            "signal_links": self.n_ues,
            "interferers_per_device": [min(counts), max(counts)],
            "signal_omega_dbm": [float(lin_to_db(sig.min()) + 30.0), float(lin_to_db(sig.max()) + 30.0)],
            "noise_dbm": self.power.noise_power_dbm,
        }

    # serialization -------------------------------------------------------

    def to_dict(self):
        f = lambda a: [format(float(x), ".17g") for x in np.ravel(a)]
        return {
            "version": FORMAT_VERSION,
            "layout": asdict(self.layout),
            "power": {k: format(float(v), ".17g") for k, v in asdict(self.power).items()},
            "m_signal": format(self.m_signal, ".17g"),
            "m_interference": format(self.m_interference, ".17g"),
            "positions": {"bs": f(self.bs_positions), "ue": f(self.ue_positions)},
            "tx_dbm": f(self.tx_dbm),
            "omega": {"shape": list(self.omega.shape), "values": f(self.omega)},
            "seed": self.layout.seed,
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("version") != FORMAT_VERSION:
            raise ContractError(f"unsupported scenario version {doc.get('version')!r}")
        arr = lambda v: np.array([float(x) for x in v])
        layout = LayoutSpec(**doc["layout"])
        power = PowerSpec(**{k: float(v) for k, v in doc["power"].items()})
        return cls(layout, power, float(doc["m_signal"]), float(doc["m_interference"]),
                   arr(doc["positions"]["bs"]).reshape(-1, 2),
                   arr(doc["positions"]["ue"]).reshape(-1, 2),
                   arr(doc["omega"]["values"]).reshape(doc["omega"]["shape"]),
                   arr(doc["tx_dbm"]))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def generate(layout=LayoutSpec(), power=PowerSpec(), m_signal=2.0, m_interference=2.0):
    """Random placement of one base station and the devices in every cell."""
    rng = np.random.default_rng(layout.seed)
    n_cells = layout.rows * layout.cols
    origin = np.array([[c * layout.side, r * layout.side]
                       for r in range(layout.rows) for c in range(layout.cols)])
    bs = origin + rng.uniform(0.0, layout.side, size=(n_cells, 2))
    ue_origin = np.repeat(origin, layout.ue_per_cell, axis=0)
    ue = ue_origin + rng.uniform(0.0, layout.side, size=(n_cells * layout.ue_per_cell, 2))
    dist = np.linalg.norm(ue[:, None, :] - bs[None, :, :], axis=2)
    pl = path_loss_db(np.maximum(dist, MIN_DISTANCE))
    serving = np.arange(ue.shape[0]) // layout.ue_per_cell
    tx = tx_power_dbm(pl[np.arange(ue.shape[0]), serving], power)
    omega = dbm_to_w(tx[:, None] - pl)
    return Scenario(layout, power, float(m_signal), float(m_interference), bs, ue, omega, tx)


# ---------------------------------------------------------------------------
# Monte Carlo evaluation of the actual BLER
# ---------------------------------------------------------------------------

@dataclass
class Experiment:
    """What the device of interest faces: its link and the possible active sets."""

    signal: FadingLink
    candidates: tuple
    configurations: tuple  # tuples of indices into candidates
    candidate_links: tuple
    noise_power: float
    eips: tuple = ()
    mixture: EipMixture = None

    def __post_init__(self):
        self.eips = tuple(aggregate_eip([self.candidate_links[i] for i in c], self.noise_power)
                          for c in self.configurations)
        k = len(self.eips)
        self.mixture = EipMixture(tuple([1.0 / k] * k), self.eips, self.configurations)

    @property
    def gamma_bar(self):
        return self.signal.omega / self.mixture.mean_omega


def build_experiment(scenario, ue=0, gamma_bar_db=None, mixture_cap=DEFAULT_MIXTURE_CAP):
    """Set up the active-set configurations for device ``ue``.

    Each co-channel cell has one active device, drawn from all candidate
    devices; every combination of that many candidates is equally likely.
    With ``gamma_bar_db`` the signal power is rescaled so that its ratio to
    the mean EIP hits the target.
    """
    cand = tuple(scenario.candidate_interferers(ue))
    active = len(scenario.co_channel_cells(scenario.cell_of(ue)))
    k = math.comb(len(cand), active)
    if k > mixture_cap:
        raise SizeError(f"{k} active-set configurations exceed the cap of {mixture_cap}; "
                        "raise it with --mixture-cap")
    configs = tuple(itertools.combinations(range(len(cand)), active))
    links = tuple(scenario.interference_links(ue, cand))
    exp = Experiment(scenario.signal_link(ue), cand, configs, links, scenario.noise_power)
    if gamma_bar_db is not None:
        target = 10.0 ** (gamma_bar_db / 10.0) * exp.mixture.mean_omega
        exp.signal = FadingLink(target, exp.signal.m)
    return exp


@dataclass
class CaseAllocation:
    """Rate rule of one cognition case for every configuration."""

    case: CognitionCase
    projected: np.ndarray  # projected average DCC per configuration (signed)
    fixed: np.ndarray = None  # fixed rate per configuration (signal level D)
    curves: tuple = ()  # rate curves per configuration (signal level I, interference D/A/M)
    infeasible: np.ndarray = None


def _fixed_rate(model, qos):
    try:
        return solve_fixed_rate(model, qos).avg_rate, False
    except InfeasibleQosError:
        return 0.0, True


def allocate(case, exp, qos):
    """Projected rates and the per-trial rate rule of ``case``."""
    if isinstance(case, str):
        case = CognitionCase.parse(case)
    k = len(exp.eips)
    proj = np.zeros(k)
    infeasible = np.zeros(k, dtype=bool)
    sig = exp.signal
    if case.interference == "I":
        for j, eip in enumerate(exp.eips):
            proj[j] = avg_dcc_adaptive(ScaledF(sig.m, eip.m_i, sig.omega / eip.omega_i, eip.xi),
                                       qos).avg_rate
        return CaseAllocation(case, proj, infeasible=infeasible)
    if case.interference == "M":
        laws = [exp.mixture] * k
    elif case.interference == "A":
        laws = [e.as_level_a() for e in exp.eips]
    else:
        laws = list(exp.eips)
    if case.signal == "D":
        fixed = np.zeros(k)
        cache = {}
        for j, law in enumerate(laws):
            if law not in cache:
                cache[law] = _fixed_rate(project_sinr(case, sig, law), qos)
            fixed[j], infeasible[j] = cache[law]
        return CaseAllocation(case, fixed.copy(), fixed=fixed, infeasible=infeasible)
    curves = tuple(signal_rate_curve(law, qos) for law in laws)
    for j, curve in enumerate(curves):
        proj[j], mass = nested_signal_average(curve, sig)
        infeasible[j] = mass >= 1.0 - 1e-12
    return CaseAllocation(case, proj, curves=curves, infeasible=infeasible)


def _trial_rates(alloc, exp, qos, cfg, s, gamma):
    case = alloc.case
    if case.interference == "I":
        xi = np.array([e.xi for e in exp.eips])[cfg]
        return inst_rate(gamma, qos, xi)
    if case.signal == "D":
        return alloc.fixed[cfg]
    if all(c is alloc.curves[0] for c in alloc.curves):
        return alloc.curves[0].rate(s)
    out = np.empty(s.shape)
    for j in np.unique(cfg):
        sel = cfg == j
        out[sel] = alloc.curves[j].rate(s[sel])
    return out


def _chunk(exp, allocs, qos, seed_seq, size):
    rng = np.random.default_rng(seed_seq)
    k = len(exp.configurations)
    cfg = rng.integers(0, k, size=size) if k > 1 else np.zeros(size, dtype=np.int64)
    s = rng.gamma(exp.signal.m, exp.signal.omega / exp.signal.m, size)
    links = exp.candidate_links
    powers = np.array([rng.gamma(l.m, l.omega / l.m, size) for l in links]) if links else np.zeros((0, size))
    noise = rng.gamma(0.5, exp.noise_power / 0.5, size) if exp.noise_power > 0 else np.zeros(size)
    mask = np.zeros((k, len(links)))
    for j, c in enumerate(exp.configurations):
        mask[j, list(c)] = 1.0
    interference = np.einsum("ij,ji->i", mask[cfg], powers) if links else np.zeros(size)
    gamma = s / (interference + noise)
    xi_real = np.array([e.xi for e in exp.eips])[cfg]
    out = []
    for alloc in allocs:
        r = _trial_rates(alloc, exp, qos, cfg, s, gamma)
        tx = r > 0
        bler = np.zeros(size)
        if np.any(tx):
            bler[tx] = inst_bler(gamma[tx], r[tx], qos.n, xi_real[tx])
        rate = np.where(tx, r, 0.0)
        out.append(np.stack([np.bincount(cfg, minlength=k).astype(float),
                             np.bincount(cfg, bler, minlength=k),
                             np.bincount(cfg, bler * bler, minlength=k),
                             np.bincount(cfg, rate, minlength=k)]))
    return out


def worker_count():
    """Worker threads, capped by the DCCLAB_THREADS environment variable."""
    n = os.cpu_count() or 1
    env = os.environ.get("DCCLAB_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise ContractError(f"DCCLAB_THREADS must be an integer, got {env!r}") from None
    return n


@dataclass
class McStats:
    """Monte Carlo summary for one case, aggregated or for one configuration."""

    case: str
    configuration: object
    projected_rate: float
    empirical_bler: float
    ci_half_width: float
    mean_rate: float
    trials: int
    infeasible: bool


def _stats(case, label, proj, counts, infeasible):
    n, s1, s2, sr = counts
    if n == 0:
        return McStats(case, label, proj, math.nan, math.nan, math.nan, 0, infeasible)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    half = 1.96 * math.sqrt(var / n)
    return McStats(case, label, proj, mean, half, sr / n, int(n), infeasible)


def monte_carlo_cases(exp, cases, qos, trials, seed, workers=None):
    """Actual BLER and rate of several cases over common random draws.

    Returns {case: (aggregate McStats, [McStats per configuration])}.
    """
    if not 1 <= trials <= MAX_TRIALS:
        raise SizeError(f"trials must lie in [1, {MAX_TRIALS}], got {trials}")
    if trials < 10.0 / qos.eps_req:
        warnings.warn(f"{trials} trials is below 10/eps_req = {10.0 / qos.eps_req:.3g}; "
                      "the BLER estimate is unreliable", RuntimeWarning, stacklevel=2)
    cases = [CognitionCase.parse(c) if isinstance(c, str) else c for c in cases]
    allocs = [allocate(c, exp, qos) for c in cases]
    n_chunks = -(-trials // CHUNK)
    sizes = [CHUNK] * (n_chunks - 1) + [trials - CHUNK * (n_chunks - 1)]
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _chunk(exp, allocs, qos, *a), zip(seqs, sizes)))
    else:
        parts = [_chunk(exp, allocs, qos, sq, sz) for sq, sz in zip(seqs, sizes)]
    # order-fixed reduction
    totals = [sum((p[i] for p in parts[1:]), parts[0][i].copy()) for i in range(len(allocs))]
    k = len(exp.configurations)
    results = {}
    for alloc, tot in zip(allocs, totals):
        name = str(alloc.case)
        per = []
        for j in range(k):
            label = tuple(exp.candidates[i] for i in exp.configurations[j])
            per.append(_stats(name, label, float(alloc.projected[j]), tot[:, j],
                              bool(alloc.infeasible[j])))
        agg_counts = tot.sum(axis=1)
        agg = _stats(name, None, float(np.mean(alloc.projected)), agg_counts,
                     bool(np.all(alloc.infeasible)))
        results[name] = (agg, per)
    return results


def monte_carlo_actual(scenario, case, qos, trials, rng_seed, ue=0, gamma_bar_db=None,
                       mixture_cap=DEFAULT_MIXTURE_CAP):
    """(empirical BLER, mean realized rate) of ``case`` for device ``ue``."""
    exp = build_experiment(scenario, ue, gamma_bar_db, mixture_cap)
    agg, _ = monte_carlo_cases(exp, [case], qos, trials, rng_seed)[str(CognitionCase.parse(str(case)))]
    return agg.empirical_bler, agg.mean_rate
