"""Random networks and controller settings for property checks and sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificate import check_certificate
from .closed_loop import ClosedLoopSystem, StabilityReport, assemble, stability_test
from .controller import ControllerParams
from .graph import NetworkModel


def _log_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def random_connected_edges(rng: np.random.Generator, n: int, p_extra: float = 0.3) -> list[tuple[int, int]]:
    """Random spanning tree plus independent extra edges, 1-indexed."""
    order = rng.permutation(n) + 1
    edges = set()
    for k in range(1, n):
        i = int(order[k])
        j = int(order[rng.integers(0, k)])
        edges.add((min(i, j), max(i, j)))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < p_extra:
                edges.add((i, j))
    return sorted(edges)


def random_model(
    rng: np.random.Generator,
    n: int | None = None,
    n_range: tuple[int, int] = (2, 6),
    r_range: tuple[float, float] = (0.1, 10.0),
    c_range: tuple[float, float] = (0.1, 10.0),
    mirror_comm: bool = True,
) -> NetworkModel:
    if n is None:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
    edges = random_connected_edges(rng, n)
    R = _log_uniform(rng, *r_range, size=len(edges))
    caps = _log_uniform(rng, *c_range, size=n)
    comm = None
    if not mirror_comm:
        comm_pairs = random_connected_edges(rng, n)
        w = _log_uniform(rng, *r_range, size=len(comm_pairs))
        comm = tuple((i, j, float(c)) for (i, j), c in zip(comm_pairs, w))
    return NetworkModel(
        n=n,
        edges=tuple((i, j, float(r)) for (i, j), r in zip(edges, R)),
        capacitances=tuple(float(c) for c in caps),
        comm_edges=comm,
    )


def random_params(
    rng: np.random.Generator,
    n: int,
    uniform_kp: bool = False,
    gain_range: tuple[float, float] = (0.1, 10.0),
    consensus_range: tuple[float, float] = (1e-3, 10.0),
    v_nom: float = 1.0,
) -> ControllerParams:
    if uniform_kp:
        K_P = np.full(n, _log_uniform(rng, *gain_range))
    else:
        K_P = _log_uniform(rng, *gain_range, size=n)
    return ControllerParams.from_costs(
        F=tuple(1.0 / K_P),
        K_V=tuple(_log_uniform(rng, *gain_range, size=n)),
        gamma=float(_log_uniform(rng, *consensus_range)),
        delta=float(_log_uniform(rng, *consensus_range)),
        V_nom=tuple(v_nom + 0.1 * rng.standard_normal(n)),
    )


@dataclass(frozen=True)
class Instance:
    model: NetworkModel
    params: ControllerParams
    I_inj: np.ndarray
    system: ClosedLoopSystem
    report: StabilityReport


def random_instance(rng: np.random.Generator, **kw) -> Instance:
    """One random (model, params, injections) triple with its stability report."""
    uniform_kp = kw.pop("uniform_kp", False)
    mirror_comm = kw.pop("mirror_comm", True)
    model = random_model(rng, mirror_comm=mirror_comm, **kw)
    params = random_params(rng, model.n, uniform_kp=uniform_kp)
    I_inj = rng.standard_normal(model.n)
    sys = assemble(model, params, I_inj)
    return Instance(model, params, I_inj, sys, stability_test(sys))


def certificate_sweep(seed: int, count: int, consensus_range=(1e-3, 10.0)) -> dict:
    """Check certified => stable over random instances meeting the certificate hypotheses.

    Returns the counts of each (certified, stable) outcome plus any
    counterexamples and the first non-necessity witness found.
    """
    rng = np.random.default_rng(seed)
    counts = {"certified_stable": 0, "certified_unstable": 0, "uncertified_stable": 0, "uncertified_unstable": 0}
    counterexamples = []
    witness = None
    for k in range(count):
        model = random_model(rng)
        params = random_params(rng, model.n, uniform_kp=True, consensus_range=consensus_range)
        cert = check_certificate(model, params)
        rep = stability_test(assemble(model, params))
        key = ("certified" if cert.certified else "uncertified") + ("_stable" if rep.stable else "_unstable")
        counts[key] += 1
        if cert.certified and not rep.stable:
            counterexamples.append((k, model, params, rep.spectral_abscissa_excluding_null))
        if witness is None and not cert.certified and rep.stable:
            witness = (k, model, params)
    return {"counts": counts, "counterexamples": counterexamples, "witness": witness}
