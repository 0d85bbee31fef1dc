"""Hybrid unitary/nonunitary ansatz: construction, evaluation, training, and
the gradient-variance and depth-dependence studies.

A circuit is an initial unitary followed by ``m`` layers; each layer applies
its unitary rotations in the listed order and then the nonunitary channel
placements. All layer parameters are shared across sites (translation
invariant) unless a channel asks for per-placement parameters.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from . import channels as ch
from . import models, qcore

__all__ = [
    "ChannelSpec",
    "AnsatzSpec",
    "ParameterVector",
    "TrainConfig",
    "TrainingResult",
    "evaluate_ansatz",
    "cost",
    "train",
    "init_parameters",
    "gradient_variance_study",
    "depth_dependence_study",
]

UNITARY_TAGS = ("zz_ring", "x_field", "z_field", "mixing", "problem")

CHANNEL_KINDS = {
    # kind: (arity, default trainable params (name, lo, hi), default fixed)
    "bitflip": (1, (("p", 0.0, 1.0),), {}),
    "phaseflip": (1, (("p", 0.0, 1.0),), {}),
    "depolarizing": (1, (("p", 0.0, 1.0),), {}),
    "ising_projector": (2, (("p", 0.0, 1.0),), {}),
    "tfim_jump": (1, (("t", 0.0, 3.0), ("q", -2.0, 2.0)), {"p": 1.0}),
    "pair_jumps": (2, (("t", 0.0, 3.0), ("align", 0.0, 1.0)), {"rate": 1.0}),
}


@dataclass(frozen=True)
class ChannelSpec:
    """One nonunitary ingredient of a layer.

    ``where`` is "sites" (every site) or "bonds" (every neighboring pair on
    the ring). ``params`` lists trainable parameters as (name, low, high);
    ``fixed`` pins the remaining ones. ``per_site`` gives each placement its
    own copy of the trainable parameters.
    """

    kind: str
    where: str = "sites"
    params: tuple | None = None
    fixed: dict = field(default_factory=dict)
    per_site: bool = False

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.where not in ("sites", "bonds"):
            raise ValueError(f"unknown placement rule {self.where!r}")
        if self.params is None:
            object.__setattr__(self, "params", CHANNEL_KINDS[self.kind][1])
        object.__setattr__(self, "fixed", dict(self.fixed))

    @property
    def arity(self) -> int:
        return CHANNEL_KINDS[self.kind][0]

    def n_params(self, n: int) -> int:
        count = len(self.params)
        if self.per_site:
            count *= len(self.placements(n))
        return count

    def placements(self, n: int):
        if self.where == "sites":
            return [(s,) for s in range(1, n + 1)]
        return _bonds(n)


def _bonds(n: int):
    """Neighboring pairs: the periodic ring for n >= 3, the single bond at n = 2."""
    if n < 2:
        return []
    if n == 2:
        return [(1, 2)]
    return [tuple(b) for b in models.ring_bonds(n)]


@dataclass(frozen=True)
class AnsatzSpec:
    """Blueprint of the interleaved circuit.

    ``unitary_generators`` are applied in order within every layer; one
    trainable angle per (layer, generator). Tags: zz_ring, x_field, z_field,
    mixing (the negated transverse field), problem (the model Hamiltonian,
    which also makes the spec depend on ``problem``).
    """

    n: int
    m: int
    unitary_generators: tuple
    channels: tuple = ()
    problem: models.SpinModel | None = None
    initial_unitary: str = "plus"
    size_parametric: bool = True

    def __post_init__(self):
        object.__setattr__(self, "unitary_generators",
                           tuple(self.unitary_generators))
        chans = tuple(self.channels)
        object.__setattr__(self, "channels", chans)
        for tag in self.unitary_generators:
            if tag not in UNITARY_TAGS:
                raise ValueError(f"unknown unitary generator tag {tag!r}")
        if "problem" in self.unitary_generators and self.problem is None:
            raise ValueError("'problem' generator tag requires a problem model")
        if self.initial_unitary not in ("plus", "computational"):
            raise ValueError(f"unknown initial unitary {self.initial_unitary!r}")
        if any(c.per_site for c in chans) and self.size_parametric:
            object.__setattr__(self, "size_parametric", False)

    @property
    def n_theta(self) -> int:
        return self.m * len(self.unitary_generators)

    def n_lambda(self, size: int | None = None) -> int:
        size = self.n if size is None else size
        return self.m * sum(c.n_params(size) for c in self.channels)

    def lambda_bounds(self, size: int | None = None):
        size = self.n if size is None else size
        bounds = []
        for _layer in range(self.m):
            for c in self.channels:
                reps = len(c.placements(size)) if c.per_site else 1
                for _ in range(reps):
                    bounds.extend((lo, hi) for _, lo, hi in c.params)
        return bounds

    def at_size(self, size: int) -> "AnsatzSpec":
        if not self.size_parametric:
            raise ValueError("ansatz is not size parametric")
        return replace(self, n=size)


@dataclass
class ParameterVector:
    """Trainable values: unitary angles (radians) and channel parameters."""

    theta: np.ndarray  # shape (m, n_generators)
    lam: np.ndarray    # flat, ordered (layer, channel spec, placement, param)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.lam))):
            raise ValueError("parameters must be finite")

    def copy(self) -> "ParameterVector":
        return ParameterVector(self.theta.copy(), self.lam.copy())


def init_parameters(spec: AnsatzSpec, rng: np.random.Generator | None = None,
                    sigma_theta: float = 0.1) -> ParameterVector:
    """Gaussian angles centered at zero; channel parameters at mid-bound."""
    rng = np.random.default_rng() if rng is None else rng
    theta = sigma_theta * rng.standard_normal((spec.m, len(spec.unitary_generators)))
    bounds = spec.lambda_bounds()
    lam = np.array([(lo + hi) / 2 for lo, hi in bounds])
    return ParameterVector(theta, lam)


def _clamp_lambda(spec: AnsatzSpec, lam: np.ndarray, size: int) -> np.ndarray:
    bounds = spec.lambda_bounds(size)
    if lam.shape != (len(bounds),):
        raise ValueError(
            f"lambda length {lam.shape} does not match spec ({len(bounds)})")
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return np.clip(lam, lo, hi)


@functools.lru_cache(maxsize=64)
def _problem_eig(model: models.SpinModel):
    h = models.build_hamiltonian(model)
    w, v = np.linalg.eigh(h)
    return w, v


@functools.lru_cache(maxsize=256)
def _zz_ring_diagonal(n: int) -> tuple:
    bits = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1)
    s = 1 - 2 * bits
    if n == 2:
        zz = (s[:, 0] * s[:, 1]).astype(float)
    else:
        zz = np.sum(s * np.roll(s, -1, axis=1), axis=1).astype(float)
    return tuple(zz)


@functools.lru_cache(maxsize=256)
def _z_field_diagonal(n: int) -> tuple:
    bits = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1)
    s = 1 - 2 * bits
    return tuple(np.sum(s, axis=1).astype(float))


def _rx(theta: float) -> np.ndarray:
    # exp(-i theta X)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _conjugate_diag(rho: np.ndarray, phases: np.ndarray) -> np.ndarray:
    return phases[:, None] * rho * phases.conj()[None, :]


def _apply_unitary_tag(rho: np.ndarray, tag: str, theta: float, size: int,
                       problem: models.SpinModel | None) -> np.ndarray:
    if tag == "zz_ring":
        diag = np.asarray(_zz_ring_diagonal(size))
        return _conjugate_diag(rho, np.exp(-1j * theta * diag))
    if tag == "z_field":
        diag = np.asarray(_z_field_diagonal(size))
        return _conjugate_diag(rho, np.exp(-1j * theta * diag))
    if tag in ("x_field", "mixing"):
        angle = theta if tag == "x_field" else -theta  # mixing H is -sum X
        u = _rx(angle)
        for site in range(1, size + 1):
            rho = ch.apply_kraus_ops((u,), rho, (site,), size)
        return rho
    if tag == "problem":
        model = problem.at_size(size)
        if model.kind == "ising":  # diagonal Hamiltonian
            diag = -model.J * np.asarray(_zz_ring_diagonal(size)) \
                - model.g * np.asarray(_z_field_diagonal(size))
            return _conjugate_diag(rho, np.exp(-1j * theta * diag))
        w, v = _problem_eig(model)
        u = (v * np.exp(-1j * theta * w)) @ v.conj().T
        return u @ rho @ u.conj().T
    raise ValueError(f"unknown unitary generator tag {tag!r}")


def _build_element(kind: str, values: dict):
    """Channel or (generator, time) for one placement, from parameter values."""
    if kind in ("bitflip", "phaseflip", "depolarizing"):
        return ch.pauli_channel(kind, values["p"]), None
    if kind == "ising_projector":
        return ch.ising_projector_channel(values["p"]), None
    if kind == "tfim_jump":
        gen = ch.tfim_jump(values.get("p", 1.0), values["q"],
                           conjugated=bool(values.get("conjugated", False)))
        return gen, values["t"]
    if kind == "pair_jumps":
        rate = values.get("rate", 1.0)
        gen = ch.heisenberg_pair_jumps(rate * values["align"],
                                       rate * (1.0 - values["align"]))
        return gen, values["t"]
    raise ValueError(f"unknown channel kind {kind!r}")


def _apply_channel_layer(rho: np.ndarray, spec: AnsatzSpec, lam_layer, size: int):
    """Apply one layer's channel placements; consumes lam_layer in order."""
    idx = 0
    for cspec in spec.channels:
        placements = cspec.placements(size)
        npar = len(cspec.params)
        if cspec.per_site:
            groups = [lam_layer[idx + k * npar: idx + (k + 1) * npar]
                      for k in range(len(placements))]
            idx += npar * len(placements)
        else:
            shared = lam_layer[idx: idx + npar]
            groups = [shared] * len(placements)
            idx += npar
        cache = {}
        for sites, group in zip(placements, groups):
            key = tuple(np.round(group, 15))
            if key not in cache:
                values = dict(cspec.fixed)
                values.update({name: val for (name, _, _), val
                               in zip(cspec.params, group)})
                element, t = _build_element(cspec.kind, values)
                if isinstance(element, ch.LindbladGenerator):
                    element = ch.lindblad_channel(element, t)
                cache[key] = element
            rho = ch.apply_channel(cache[key], rho, sites)
    return rho, idx


def evaluate_ansatz(spec: AnsatzSpec, params: ParameterVector,
                    size: int | None = None) -> np.ndarray:
    """Output density matrix of the circuit, optionally at another register size."""
    size = spec.n if size is None else size
    if size != spec.n and not spec.size_parametric:
        raise ValueError("ansatz is not size parametric")
    n_gen = len(spec.unitary_generators)
    if params.theta.shape != (spec.m, n_gen):
        raise ValueError(
            f"theta shape {params.theta.shape} does not match ({spec.m}, {n_gen})")
    lam = _clamp_lambda(spec, params.lam, size)

    if spec.initial_unitary == "plus":
        rho = models.initial_state(size)
    else:
        rho = qcore.pure_state(qcore.ket([0] * size))

    per_layer = spec.n_lambda(size) // spec.m if spec.m else 0
    for j in range(spec.m):
        for gi, tag in enumerate(spec.unitary_generators):
            rho = _apply_unitary_tag(rho, tag, float(params.theta[j, gi]),
                                     size, spec.problem)
        lam_layer = lam[j * per_layer:(j + 1) * per_layer]
        rho, used = _apply_channel_layer(rho, spec, lam_layer, size)
        if used != per_layer:
            raise RuntimeError("channel parameter bookkeeping mismatch")
    return rho


def _scaled_entropy(spec: AnsatzSpec, params: ParameterVector, n_a: int) -> float:
    from . import entropy as entropy_mod

    est = entropy_mod.scaled_subsystem_entropy(spec, params, spec.n, n_a)
    return est.value


def cost(spec: AnsatzSpec, params: ParameterVector, h: np.ndarray, beta: float,
         entropy_method: str = "exact", regularize: bool = False,
         n_a: int = 3, n_b: int = 4, variational_budget: int = 60) -> float:
    """beta <H> - S_hat, optionally regularized by (1 - |Delta S|).

    The regularizer compares the two subsystem estimates and only applies to
    the scaled-subsystem and variational methods, which have a second
    estimate to compare against.
    """
    from . import entropy as entropy_mod

    rho = evaluate_ansatz(spec, params)
    energy = qcore.expectation(rho, h)
    if entropy_method == "exact":
        if regularize:
            raise ValueError("regularization needs a pair of subsystem estimates")
        return beta * energy - qcore.von_neumann_entropy(rho)
    if entropy_method == "scaled_subsystem":
        s_a = _scaled_entropy(spec, params, n_a)
        if not regularize:
            return beta * energy - s_a
        s_b = _scaled_entropy(spec, params, n_b)
        return entropy_mod.regularized_cost(energy, s_a, s_b, beta)
    if entropy_method == "analytic_depolarizing":
        if regularize:
            raise ValueError("regularization needs a pair of subsystem estimates")
        s_hat = entropy_mod.analytic_depolarizing_for_ansatz(spec, params).value
        return beta * energy - s_hat
    if entropy_method == "variational_bound":
        singles = [{k} for k in range(1, spec.n + 1)]
        s_a = entropy_mod.variational_bound_for_ansatz(
            spec, params, rho, singles, budget=variational_budget).value
        if not regularize:
            return beta * energy - s_a
        pairs = [{k, k + 1} for k in range(1, spec.n, 2)]
        if spec.n % 2:
            pairs.append({spec.n})
        s_b = entropy_mod.variational_bound_for_ansatz(
            spec, params, rho, pairs, budget=variational_budget).value
        return entropy_mod.regularized_cost(energy, s_a, s_b, beta)
    raise ValueError(f"unknown entropy method {entropy_method!r}")


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "quasi_newton"  # finite-difference L-BFGS; or "simplex"
    restarts: int = 5
    max_iters: int = 200
    ftol: float = 1e-8
    seed: int = 0
    sigma_theta: float = 0.1
    fd_step: float = 1e-4
    entropy_method: str = "exact"
    regularize: bool = False
    n_a: int = 3
    n_b: int = 4

    def __post_init__(self):
        if self.optimizer not in ("quasi_newton", "simplex"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")


@dataclass
class TrainingResult:
    best_params: ParameterVector
    cost_trace: list
    iterations: int
    converged: bool
    final_cost: float
    final_fidelity: float | None
    seed: int


class _EarlyStop(Exception):
    """Raised by the training callback once the convergence window closes."""


def _window_converged(trace, ftol: float, window: int = 5) -> bool:
    if len(trace) <= window:
        return False
    tail = trace[-(window + 1):]
    ref = max(abs(tail[0]), 1e-12)
    return abs(tail[0] - tail[-1]) / ref < ftol


def _squash(z: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return lo + (hi - lo) * 0.5 * (1.0 + np.tanh(z))


def _central_gradient(fun, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.empty_like(x)
    for k in range(x.size):
        xp = x.copy(); xp[k] += step
        xm = x.copy(); xm[k] -= step
        grad[k] = (fun(xp) - fun(xm)) / (2 * step)
    return grad


def train(spec: AnsatzSpec, h: np.ndarray, beta: float,
          config: TrainConfig = TrainConfig(),
          target: np.ndarray | None = None) -> TrainingResult:
    """Best-of-restarts minimization of the (regularized) free-energy cost.

    Deterministic given (seed, config): restart initializations derive from
    spawned child generators of the seed. Channel parameters are optimized
    through a tanh squashing map so the quasi-Newton loop is unconstrained.
    Convergence is declared when the relative cost change stays below ftol
    over a window of five iterations.
    """
    n_theta = spec.n_theta
    bounds = spec.lambda_bounds()
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def unpack(x: np.ndarray) -> ParameterVector:
        theta = x[:n_theta].reshape(spec.m, len(spec.unitary_generators))
        lam = _squash(x[n_theta:], lo, hi) if bounds else np.zeros(0)
        return ParameterVector(theta, lam)

    def objective(x: np.ndarray) -> float:
        return cost(spec, unpack(x), h, beta,
                    entropy_method=config.entropy_method,
                    regularize=config.regularize,
                    n_a=config.n_a, n_b=config.n_b)

    rng = np.random.default_rng(config.seed)
    children = rng.spawn(config.restarts)
    best = None
    for restart_rng in children:
        theta0 = config.sigma_theta * restart_rng.standard_normal(n_theta)
        x0 = np.concatenate([theta0, np.zeros(len(bounds))])
        seen = {"cost": np.inf, "x": x0.copy()}

        def tracked(x, _seen=seen):
            c = objective(x)
            if c < _seen["cost"]:
                _seen["cost"] = c
                _seen["x"] = np.array(x, dtype=float, copy=True)
            return c

        trace: list[float] = [tracked(x0)]

        def callback(xk, _trace=trace):
            _trace.append(min(_trace[-1], tracked(np.asarray(xk))))
            if len(_trace) > 5 and _window_converged(_trace, config.ftol):
                raise _EarlyStop

        early = False
        try:
            if config.optimizer == "quasi_newton":
                scipy.optimize.minimize(
                    tracked, x0, method="L-BFGS-B",
                    jac=lambda x: _central_gradient(objective, x, config.fd_step),
                    callback=callback,
                    options={"maxiter": config.max_iters, "ftol": 0.0,
                             "gtol": 1e-12})
            else:
                scipy.optimize.minimize(
                    tracked, x0, method="Nelder-Mead", callback=callback,
                    options={"maxiter": config.max_iters,
                             "fatol": config.ftol, "xatol": 1e-8})
        except _EarlyStop:
            early = True
        converged = early or _window_converged(trace, config.ftol)
        candidate = (seen["cost"], seen["x"], trace, converged)
        if best is None or candidate[0] < best[0]:
            best = candidate

    run_cost, final_x, trace, converged = best
    params = unpack(final_x)
    fidelity = None
    if target is not None:
        fidelity = qcore.uhlmann_fidelity(evaluate_ansatz(spec, params), target)
    return TrainingResult(
        best_params=params,
        cost_trace=trace,
        iterations=len(trace) - 1,
        converged=converged,
        final_cost=run_cost,
        final_fidelity=fidelity,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# statevector engine for the pure-unitary studies
# ---------------------------------------------------------------------------

def _sv_apply_tag(psi: np.ndarray, tag: str, theta: float, n: int) -> np.ndarray:
    if tag == "zz_ring":
        return psi * np.exp(-1j * theta * np.asarray(_zz_ring_diagonal(n)))
    if tag == "z_field":
        return psi * np.exp(-1j * theta * np.asarray(_z_field_diagonal(n)))
    if tag in ("x_field", "mixing"):
        angle = theta if tag == "x_field" else -theta
        u = _rx(angle)
        for site in range(n):
            t = psi.reshape(2**site, 2, -1)
            psi = np.einsum("ij,ajb->aib", u, t).reshape(-1)
        return psi
    raise ValueError(f"statevector path does not support tag {tag!r}")


def _sv_expectation(psi: np.ndarray, observable: qcore.PauliString) -> float:
    if all(op in ("I", "Z") for op in observable.ops):
        n = observable.n
        bits = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1)
        s = 1 - 2 * bits
        diag = np.ones(2**n)
        for k, op in enumerate(observable.ops):
            if op == "Z":
                diag = diag * s[:, k]
        return observable.coefficient * float(np.real(
            np.sum(diag * np.abs(psi) ** 2)))
    obs = observable.matrix()
    return float(np.real(psi.conj() @ obs @ psi))


def gradient_variance_study(families: dict, observable_builder,
                            n_range, layers: int = 40, samples: int = 100,
                            seed: int = 0, param_index: int = 0,
                            fd_step: float = 1e-4):
    """Sample variance of one cost-gradient component versus system size.

    ``families`` maps a family name to its unitary generator tags; channels
    act as the identity here, so the circuit runs on statevectors.
    ``observable_builder(n)`` returns the PauliString to measure. Returns
    (rows, slopes) where slopes fit log variance against n.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for name, tags in families.items():
        for n in n_range:
            obs = observable_builder(n)
            n_params = layers * len(tags)

            def grad_component(thetas, n=n, tags=tags, obs=obs):
                def value(tvec):
                    psi = qcore.plus_state(n)
                    idx = 0
                    for _ in range(layers):
                        for tag in tags:
                            psi = _sv_apply_tag(psi, tag, tvec[idx], n)
                            idx += 1
                    return _sv_expectation(psi, obs)

                tp = thetas.copy(); tp[param_index] += fd_step
                tm = thetas.copy(); tm[param_index] -= fd_step
                return (value(tp) - value(tm)) / (2 * fd_step)

            grads = np.array([
                grad_component(rng.uniform(0.0, 2 * np.pi, size=n_params))
                for _ in range(samples)
            ])
            rows.append({
                "family": name,
                "n": int(n),
                "variance": float(np.var(grads, ddof=1)),
                "samples": int(samples),
            })
    slopes = {}
    for name in families:
        pts = [(r["n"], r["variance"]) for r in rows if r["family"] == name]
        ns = np.array([p[0] for p in pts], dtype=float)
        vs = np.array([max(p[1], 1e-300) for p in pts])
        slopes[name] = float(np.polyfit(ns, np.log(vs), 1)[0])
    return rows, slopes


def depth_dependence_study(family_specs: dict, h: np.ndarray, beta: float,
                           m_range, config: TrainConfig,
                           target: np.ndarray | None = None):
    """Best fidelity and iterations-to-converge per circuit depth.

    ``family_specs`` maps a family name to a builder ``make_spec(m)``.
    """
    if target is None:
        target = models.gibbs_state(h, beta).state
    rows = []
    for name, make_spec in family_specs.items():
        for m in m_range:
            spec = make_spec(int(m))
            result = train(spec, h, beta, config=config, target=target)
            rows.append({
                "family": name,
                "m": int(m),
                "fidelity": result.final_fidelity,
                "iterations": result.iterations,
                "converged": result.converged,
                "cost": result.final_cost,
            })
    return rows
