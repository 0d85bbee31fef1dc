"""Entropy estimation: exact, scaled-subsystem, analytic depolarizing,
variational upper bound, the white-noise error model, and the regularized
cost. All values are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import qcore

__all__ = [
    "EntropyErrorModel",
    "EntropyEstimate",
    "exact_entropy",
    "scaled_subsystem_entropy",
    "analytic_depolarizing_entropy",
    "analytic_depolarizing_for_ansatz",
    "model_state_entropy",
    "entropy_error_model",
    "variational_entropy_bound",
    "variational_bound_for_ansatz",
    "regularized_cost",
    "nats_to_bits",
]

METHODS = ("exact", "scaled_subsystem", "analytic_depolarizing",
           "variational_bound")


@dataclass(frozen=True)
class EntropyErrorModel:
    """White-noise error model of the subsystem estimate.

    ``lam`` is the single-qubit error rate per layer, ``m`` the layer count;
    the surviving coherent weight is alpha = exp(-lam n m).
    """

    n: int
    n_a: int
    lam: float
    m: int

    def __post_init__(self):
        if not 1 <= self.n_a <= self.n:
            raise ValueError("subsystem size must satisfy 1 <= n_a <= n")
        if self.lam < 0 or self.m < 0:
            raise ValueError("error rate and layer count must be nonnegative")

    @property
    def alpha(self) -> float:
        return float(np.exp(-self.lam * self.n * self.m))


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown entropy method {self.method!r}")

    def in_bits(self) -> float:
        return nats_to_bits(self.value)


def nats_to_bits(value: float) -> float:
    return value / np.log(2.0)


def exact_entropy(rho: np.ndarray) -> EntropyEstimate:
    return EntropyEstimate(qcore.von_neumann_entropy(rho), "exact",
                           {"n": qcore.num_qubits(np.asarray(rho).shape[0])})


def scaled_subsystem_entropy(spec, params, n: int, n_a: int) -> EntropyEstimate:
    """(n / n_a) times the exact entropy of the size-n_a instance.

    The ansatz is re-instantiated on the smaller ring with the same shared
    parameters; extrapolating the small-instance entropy up by n/n_a is the
    direction consistent with the exponential error model.
    """
    from . import vqt

    if not spec.size_parametric:
        raise ValueError("scaled subsystem entropy needs a size-parametric ansatz")
    if not 2 <= n_a <= n:
        raise ValueError(f"subsystem size {n_a} outside 2..{n}")
    if n != spec.n:
        raise ValueError(f"spec register size {spec.n} does not match n={n}")
    rho_a = vqt.evaluate_ansatz(spec, params, size=n_a)
    s_a = qcore.von_neumann_entropy(rho_a)
    return EntropyEstimate((n / n_a) * s_a, "scaled_subsystem",
                           {"n": n, "n_a": n_a, "subsystem_entropy": s_a})


def _binary_mix_entropy(lam_total: float, n: int) -> float:
    if lam_total <= 0.0:
        return 0.0
    a = lam_total / 2.0
    terms = 0.0
    if 1.0 - a > 0:
        terms += (1.0 - a) * np.log(1.0 - a)
    if a > 0:
        terms += a * np.log(a)
    return float(-n * terms)


def analytic_depolarizing_entropy(lam: float, m: int, n: int) -> EntropyEstimate:
    """Product-state entropy of m commuted depolarizing layers.

    Composing the layers gives a single depolarizing channel with parameter
    Lambda = 1 - (1 - lam)^m; the per-qubit output is a binary mixture with
    weight Lambda/2, so S = -n [(1 - L/2) ln(1 - L/2) + (L/2) ln(L/2)].
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("depolarizing rate must lie in [0, 1]")
    lam_total = 1.0 - (1.0 - lam) ** m
    value = _binary_mix_entropy(lam_total, n)
    return EntropyEstimate(value, "analytic_depolarizing",
                           {"n": n, "m": m, "lambda": lam, "Lambda": lam_total})


def analytic_depolarizing_for_ansatz(spec, params) -> EntropyEstimate:
    """Analytic estimate with the ansatz's own per-layer depolarizing rates."""
    if not spec.channels or any(c.kind != "depolarizing" or c.per_site
                                for c in spec.channels):
        raise ValueError(
            "analytic depolarizing entropy needs shared depolarizing channels only")
    from . import vqt

    lam = vqt._clamp_lambda(spec, params.lam, spec.n)
    survive = 1.0
    for p in lam:
        survive *= 1.0 - p
    lam_total = 1.0 - survive
    value = _binary_mix_entropy(lam_total, spec.n)
    return EntropyEstimate(value, "analytic_depolarizing",
                           {"n": spec.n, "Lambda": lam_total})


def model_state_entropy(alpha: float, n: int) -> float:
    """Entropy of alpha |Psi><Psi| + (1 - alpha) I / 2^n in closed form."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    d = 2.0**n
    top = alpha + (1.0 - alpha) / d
    rest = (1.0 - alpha) / d
    s = 0.0
    if top > 0:
        s -= top * np.log(top)
    if rest > 0:
        s -= rest * (d - 1.0) * np.log(rest)
    return float(s)


def entropy_error_model(model: EntropyErrorModel) -> dict:
    """Predicted absolute and relative error of the scaled-subsystem estimate."""
    decay = float(np.exp(-model.n_a * model.lam * model.m))
    return {
        "absolute": decay * model.n * np.log(2.0),
        "relative": decay,
    }


def _check_partition(partition, n: int):
    blocks = [sorted(set(int(s) for s in block)) for block in partition]
    seen = set()
    for block in blocks:
        if not block:
            raise ValueError("empty partition block")
        for s in block:
            if s < 1 or s > n or s in seen:
                raise ValueError(f"partition must cover sites 1..{n} disjointly")
            seen.add(s)
    if len(seen) != n:
        raise ValueError(f"partition must cover sites 1..{n} disjointly")
    return blocks


def _subsystem_entropy_sum(rho: np.ndarray, blocks, n: int) -> float:
    return float(sum(qcore.von_neumann_entropy(qcore.partial_trace(rho, b, n))
                     for b in blocks))


def variational_entropy_bound(rho: np.ndarray, partition, budget: int = 200,
                              layers: int = 1,
                              generators=("zz_ring", "x_field", "z_field"),
                              init_theta: np.ndarray | None = None,
                              problem=None,
                              seed: int = 0) -> EntropyEstimate:
    """Upper bound on S(rho) by variationally disentangling the state.

    Minimizes the summed subsystem entropies of U(phi) rho U(phi)^dag over
    layered rotation circuits. Every evaluated value is a valid bound by
    subadditivity, so the minimum over all evaluations is returned even when
    the budget runs out (flagged in the metadata).
    """
    from . import vqt

    rho = np.asarray(rho, dtype=complex)
    n = qcore.num_qubits(rho.shape[0])
    blocks = _check_partition(partition, n)
    tags = tuple(generators)
    n_params = layers * len(tags)
    if init_theta is None:
        init_theta = np.zeros(n_params)
    init_theta = np.asarray(init_theta, dtype=float).ravel()
    if init_theta.size != n_params:
        raise ValueError(f"init_theta length {init_theta.size} != {n_params}")

    best = {"value": np.inf, "theta": init_theta.copy()}

    def objective(theta):
        out = rho
        idx = 0
        for _ in range(layers):
            for tag in tags:
                out = vqt._apply_unitary_tag(out, tag, float(theta[idx]),
                                             n, problem)
                idx += 1
        val = _subsystem_entropy_sum(out, blocks, n)
        if val < best["value"]:
            best["value"] = val
            best["theta"] = np.array(theta, dtype=float, copy=True)
        return val

    objective(init_theta)
    exhausted = False
    if budget > 0 and n_params > 0:
        res = scipy.optimize.minimize(
            objective, init_theta, method="L-BFGS-B",
            options={"maxiter": budget})
        exhausted = not bool(res.success)
    return EntropyEstimate(
        best["value"], "variational_bound",
        {"n": n,
         "block_sizes": [len(b) for b in blocks],
         "budget": budget,
         "budget_exhausted": exhausted,
         "theta": best["theta"].tolist()})


def variational_bound_for_ansatz(spec, params, rho: np.ndarray, partition,
                                 budget: int = 60) -> EntropyEstimate:
    """Variational bound warm-started at the inverse of the unitary portion.

    The disentangler reuses the ansatz's own generator layout in reverse
    order with negated angles, which inverts the unitary part exactly at the
    starting point.
    """
    tags = tuple(reversed(spec.unitary_generators))
    init = -params.theta[::-1, ::-1].reshape(-1)
    return variational_entropy_bound(
        rho, partition, budget=budget, layers=spec.m, generators=tags,
        init_theta=init, problem=spec.problem)


def regularized_cost(energy: float, s_a: float, s_b: float, beta: float) -> float:
    """(1 - |s_a - s_b|) (beta * energy - s_a).

    The factor penalizes inconsistency between the two subsystem estimates;
    with s_a = s_b it reduces to the plain dimensionless free energy.
    """
    delta = s_a - s_b
    return (1.0 - abs(delta)) * (beta * energy - s_a)
