"""Experiment runner: strict JSON configs, seeded figure-level studies, and
CSV/JSON emission.

Every experiment is driven by one canonical config dict (defaults filled,
unknown keys rejected); its sha256 prefix names the output files, and
re-running with the same config and seeds reproduces the rows byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import entropy as entropy_mod
from . import models, qcore, qoft, symmetry, vqt

__all__ = [
    "ConfigError",
    "SizeGuardError",
    "ExperimentConfig",
    "ExperimentRecord",
    "EXPERIMENTS",
    "validate_config",
    "default_config",
    "preset",
    "run",
    "ARTIFACT_VERSION",
]

ARTIFACT_VERSION = "0.1.0"
DEFAULT_MAX_QUBITS = 12

EXPERIMENTS = ("gibbs", "train", "sweep-beta", "entropy-bench",
               "grad-variance", "depth-study", "symmetry-check", "qoft-bench")


class ConfigError(ValueError):
    """Configuration text violates the schema."""


class SizeGuardError(ValueError):
    """A requested register exceeds the qubit guard."""


def max_qubits() -> int:
    raw = os.environ.get("THERMALIZER_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"THERMALIZER_MAX_QUBITS={raw!r} is not an integer")


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

def _reject_unknown(d: dict, allowed, path: str):
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} at {path or 'top level'}")


def _get(d: dict, key: str, default, path: str, kind=None):
    val = d.get(key, default)
    if val is None:
        return None
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"field {path}.{key} has wrong type "
                          f"({type(val).__name__})")
    return val


def _norm_model(d: dict, path: str) -> dict:
    _reject_unknown(d, {"kind", "n", "J", "g", "delta", "sign"}, path)
    out = {
        "kind": _get(d, "kind", "tfim", path, str),
        "n": int(_get(d, "n", 6, path, int)),
        "J": float(_get(d, "J", 1.0, path, (int, float))),
        "g": float(_get(d, "g", 1.0, path, (int, float))),
        "delta": float(_get(d, "delta", 1.0, path, (int, float))),
        "sign": int(_get(d, "sign", -1, path, int)),
    }
    if out["kind"] not in models.MODEL_KINDS:
        raise ConfigError(f"{path}.kind must be one of {models.MODEL_KINDS}")
    if out["n"] < 3:
        raise ConfigError(f"{path}.n must be >= 3")
    return out


def _norm_channel(d: dict, path: str) -> dict:
    _reject_unknown(d, {"kind", "where", "params", "fixed", "per_site"}, path)
    kind = _get(d, "kind", None, path, str)
    if kind not in vqt.CHANNEL_KINDS:
        raise ConfigError(f"{path}.kind must be one of {sorted(vqt.CHANNEL_KINDS)}")
    params = d.get("params")
    if params is not None:
        if not isinstance(params, list) or any(
                not (isinstance(p, list) and len(p) == 3 and isinstance(p[0], str))
                for p in params):
            raise ConfigError(f"{path}.params must be a list of [name, lo, hi]")
        params = [[p[0], float(p[1]), float(p[2])] for p in params]
    fixed = _get(d, "fixed", {}, path, dict)
    return {
        "kind": kind,
        "where": _get(d, "where", "sites", path, str),
        "params": params,
        "fixed": {str(k): float(v) for k, v in fixed.items()},
        "per_site": bool(_get(d, "per_site", False, path, bool)),
    }


def _norm_ansatz(d: dict, path: str) -> dict:
    _reject_unknown(d, {"m", "unitary", "channels", "initial_unitary",
                        "size_parametric"}, path)
    unitary = _get(d, "unitary", ["zz_ring", "x_field"], path, list)
    for tag in unitary:
        if tag not in vqt.UNITARY_TAGS:
            raise ConfigError(f"{path}.unitary contains unknown tag {tag!r}")
    return {
        "m": int(_get(d, "m", 4, path, int)),
        "unitary": list(unitary),
        "channels": [_norm_channel(c, f"{path}.channels[{i}]")
                     for i, c in enumerate(_get(d, "channels", [], path, list))],
        "initial_unitary": _get(d, "initial_unitary", "plus", path, str),
        "size_parametric": bool(_get(d, "size_parametric", True, path, bool)),
    }


def _norm_training(d: dict, path: str) -> dict:
    _reject_unknown(d, {"optimizer", "restarts", "max_iters", "ftol",
                        "sigma_theta", "fd_step", "entropy_method",
                        "regularize", "n_a", "n_b"}, path)
    out = {
        "optimizer": _get(d, "optimizer", "quasi_newton", path, str),
        "restarts": int(_get(d, "restarts", 5, path, int)),
        "max_iters": int(_get(d, "max_iters", 200, path, int)),
        "ftol": float(_get(d, "ftol", 1e-8, path, (int, float))),
        "sigma_theta": float(_get(d, "sigma_theta", 0.1, path, (int, float))),
        "fd_step": float(_get(d, "fd_step", 1e-4, path, (int, float))),
        "entropy_method": _get(d, "entropy_method", "exact", path, str),
        "regularize": bool(_get(d, "regularize", False, path, bool)),
        "n_a": int(_get(d, "n_a", 3, path, int)),
        "n_b": int(_get(d, "n_b", 4, path, int)),
    }
    if out["entropy_method"] not in entropy_mod.METHODS:
        raise ConfigError(f"{path}.entropy_method must be one of {entropy_mod.METHODS}")
    return out


_BLOCKS = {
    "entropy_bench": {"lambda", "m", "n", "n_a_list", "channel"},
    "grad_variance": {"families", "layers", "samples", "n_range",
                      "observable_sites", "param_index"},
    "depth_study": {"families", "m_range"},
    "symmetry_check": {"target", "group", "tol"},
    "qoft_bench": {"pairs", "beta_h", "omega_min", "omega_max", "omega_count",
                   "seed"},
}


def _norm_symmetry_target(d: dict, path: str) -> dict:
    _reject_unknown(d, {"kind", "p", "q", "kappa_f", "kappa_af", "ops",
                        "weights", "n"}, path)
    kind = _get(d, "kind", None, path, str)
    allowed = {"bitflip", "phaseflip", "depolarizing", "kraus_paulis",
               "tfim_jump", "pair_jumps", "jump_paulis"}
    if kind not in allowed:
        raise ConfigError(f"{path}.kind must be one of {sorted(allowed)}")
    return {k: d[k] for k in d}


def _norm_group(d: dict, path: str) -> dict:
    _reject_unknown(d, {"kind", "n", "elements"}, path)
    kind = _get(d, "kind", "spin_flip", path, str)
    if kind not in ("spin_flip", "pauli_strings"):
        raise ConfigError(f"{path}.kind must be spin_flip or pauli_strings")
    return {k: d[k] for k in d} | {"kind": kind}


def validate_config(raw: str | dict) -> "ExperimentConfig":
    """Parse and strictly validate a JSON config document."""
    if isinstance(raw, str):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: line {exc.lineno} "
                              f"column {exc.colno}: {exc.msg}") from None
    else:
        data = json.loads(json.dumps(raw))
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"experiment", "model", "beta_grid", "seeds", "ansatz",
               "training", "output_path", "workers"} | set(_BLOCKS)
    _reject_unknown(data, allowed, "")
    experiment = _get(data, "experiment", None, "", str)
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")

    beta_grid = _get(data, "beta_grid", [1.0], "", list)
    for b in beta_grid:
        if not isinstance(b, (int, float)) or b < 0:
            raise ConfigError("beta_grid entries must be nonnegative numbers")
    seeds = _get(data, "seeds", [0], "", list)
    if not seeds or any(not isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a nonempty list of integers")

    canon = {
        "experiment": experiment,
        "model": _norm_model(_get(data, "model", {}, "", dict), "model"),
        "beta_grid": [float(b) for b in beta_grid],
        "seeds": [int(s) for s in seeds],
        "ansatz": _norm_ansatz(_get(data, "ansatz", {}, "", dict), "ansatz"),
        "training": _norm_training(_get(data, "training", {}, "", dict),
                                   "training"),
        "output_path": _get(data, "output_path", "results", "", str),
        "workers": int(_get(data, "workers", 1, "", int)),
    }

    eb = _get(data, "entropy_bench", {}, "", dict)
    _reject_unknown(eb, _BLOCKS["entropy_bench"], "entropy_bench")
    canon["entropy_bench"] = {
        "lambda": float(eb.get("lambda", 0.05)),
        "m": int(eb.get("m", 10)),
        "n": int(eb.get("n", 10)),
        "n_a_list": [int(x) for x in eb.get("n_a_list", [3, 4, 5, 6, 7, 8])],
        "channel": str(eb.get("channel", "depolarizing")),
    }
    if canon["entropy_bench"]["channel"] not in ("depolarizing", "phaseflip",
                                                 "bitflip"):
        raise ConfigError("entropy_bench.channel must be a Pauli channel kind")

    gv = _get(data, "grad_variance", {}, "", dict)
    _reject_unknown(gv, _BLOCKS["grad_variance"], "grad_variance")
    canon["grad_variance"] = {
        "families": gv.get("families", {
            "symmetric": ["zz_ring", "x_field"],
            "nonsymmetric": ["zz_ring", "x_field", "z_field"],
        }),
        "layers": int(gv.get("layers", 40)),
        "samples": int(gv.get("samples", 100)),
        "n_range": [int(x) for x in gv.get("n_range", [4, 5, 6, 7, 8, 9, 10])],
        "observable_sites": [int(x) for x in gv.get("observable_sites", [1, 2])],
        "param_index": int(gv.get("param_index", 0)),
    }
    for name, tags in canon["grad_variance"]["families"].items():
        for tag in tags:
            if tag not in vqt.UNITARY_TAGS:
                raise ConfigError(f"grad_variance family {name!r} has unknown "
                                  f"tag {tag!r}")

    ds = _get(data, "depth_study", {}, "", dict)
    _reject_unknown(ds, _BLOCKS["depth_study"], "depth_study")
    canon["depth_study"] = {
        "m_range": [int(x) for x in ds.get("m_range", [1, 2, 3, 4, 5, 6])],
        "families": ds.get("families", {
            "symmetric": {"unitary": ["zz_ring", "x_field"],
                          "channels": [{"kind": "phaseflip"}]},
            "nonsymmetric": {"unitary": ["zz_ring", "x_field", "z_field"],
                             "channels": [{"kind": "phaseflip"}]},
        }),
    }
    for name, fam in canon["depth_study"]["families"].items():
        _reject_unknown(fam, {"unitary", "channels"},
                        f"depth_study.families.{name}")
        fam["channels"] = [_norm_channel(c, f"depth_study.families.{name}")
                           for c in fam.get("channels", [])]
        fam["unitary"] = list(fam.get("unitary", ["zz_ring", "x_field"]))

    sc = _get(data, "symmetry_check", {}, "", dict)
    _reject_unknown(sc, _BLOCKS["symmetry_check"], "symmetry_check")
    canon["symmetry_check"] = {
        "target": _norm_symmetry_target(sc.get("target", {"kind": "bitflip",
                                                          "p": 0.25, "n": 1}),
                                        "symmetry_check.target"),
        "group": _norm_group(sc.get("group", {"kind": "spin_flip", "n": 1}),
                             "symmetry_check.group"),
        "tol": float(sc.get("tol", 1e-8)),
    }

    qb = _get(data, "qoft_bench", {}, "", dict)
    _reject_unknown(qb, _BLOCKS["qoft_bench"], "qoft_bench")
    canon["qoft_bench"] = {
        "pairs": int(qb.get("pairs", 20)),
        "beta_h": float(qb.get("beta_h", 0.05)),
        "omega_min": float(qb.get("omega_min", -5.0)),
        "omega_max": float(qb.get("omega_max", 5.0)),
        "omega_count": int(qb.get("omega_count", 101)),
        "seed": int(qb.get("seed", 7)),
    }

    _size_guard(canon)
    return ExperimentConfig(canon)


def _size_guard(canon: dict):
    guard = max_qubits()
    sizes = [canon["model"]["n"]]
    if canon["experiment"] == "entropy-bench":
        sizes.append(canon["entropy_bench"]["n"])
    if canon["experiment"] == "grad-variance":
        sizes.extend(canon["grad_variance"]["n_range"])
    worst = max(sizes)
    if worst > guard:
        raise SizeGuardError(
            f"register of {worst} qubits exceeds the guard of {guard} "
            "(override with THERMALIZER_MAX_QUBITS)")


@dataclass(frozen=True)
class ExperimentConfig:
    """Canonicalized experiment description (defaults filled, keys fixed)."""

    canon: dict

    @property
    def experiment(self) -> str:
        return self.canon["experiment"]

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canon, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def replace(self, **top_level) -> "ExperimentConfig":
        data = json.loads(json.dumps(self.canon))
        data.update(top_level)
        return validate_config(data)


@dataclass
class ExperimentRecord:
    config_hash: str
    experiment: str
    columns: list
    rows: list
    artifact_version: str = ARTIFACT_VERSION
    metadata: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def write(self, out_dir: str) -> tuple:
        os.makedirs(out_dir, exist_ok=True)
        stem = f"{self.experiment}-{self.config_hash}"
        csv_path = os.path.join(out_dir, stem + ".csv")
        json_path = os.path.join(out_dir, stem + ".json")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_csv_cell(row[c]) for c in self.columns])
        payload = {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "artifact_version": self.artifact_version,
            "metadata": self.metadata,
            "failures": self.failures,
            "rows": self.rows,
        }
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path


def _csv_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


# ---------------------------------------------------------------------------
# builders shared by the experiments
# ---------------------------------------------------------------------------

def build_model(canon: dict) -> models.SpinModel:
    m = canon["model"]
    return models.SpinModel(kind=m["kind"], n=m["n"], J=m["J"], g=m["g"],
                            delta=m["delta"], sign=m["sign"])


def build_ansatz(canon: dict, model: models.SpinModel,
                 n: int | None = None) -> vqt.AnsatzSpec:
    a = canon["ansatz"]
    chans = []
    for c in a["channels"]:
        params = c["params"]
        chans.append(vqt.ChannelSpec(
            kind=c["kind"], where=c["where"],
            params=None if params is None else tuple(
                (p[0], p[1], p[2]) for p in params),
            fixed=c["fixed"], per_site=c["per_site"]))
    return vqt.AnsatzSpec(
        n=model.n if n is None else n,
        m=a["m"],
        unitary_generators=tuple(a["unitary"]),
        channels=tuple(chans),
        problem=model if "problem" in a["unitary"] else None,
        initial_unitary=a["initial_unitary"],
        size_parametric=a["size_parametric"],
    )


def build_train_config(canon: dict, seed: int) -> vqt.TrainConfig:
    t = canon["training"]
    return vqt.TrainConfig(
        optimizer=t["optimizer"], restarts=t["restarts"],
        max_iters=t["max_iters"], ftol=t["ftol"], seed=seed,
        sigma_theta=t["sigma_theta"], fd_step=t["fd_step"],
        entropy_method=t["entropy_method"], regularize=t["regularize"],
        n_a=t["n_a"], n_b=t["n_b"])


# ---------------------------------------------------------------------------
# experiment bodies
# ---------------------------------------------------------------------------

def _run_gibbs(canon: dict):
    model = build_model(canon)
    h = models.build_hamiltonian(model)
    rows = []
    for seed in canon["seeds"]:
        for beta in canon["beta_grid"]:
            target = models.gibbs_state(h, beta)
            s = qcore.von_neumann_entropy(target.state)
            rows.append({
                "seed": seed,
                "beta": beta,
                "energy": qcore.expectation(target.state, h),
                "entropy": s,
                "free_energy": models.free_energy(target.state, h, beta, s),
                "log_z": target.log_partition_function,
                "fidelity_maxmixed": qcore.uhlmann_fidelity(
                    target.state, qcore.maximally_mixed(model.n)),
            })
    cols = ["seed", "beta", "energy", "entropy", "free_energy", "log_z",
            "fidelity_maxmixed"]
    return cols, rows, {}


def _train_item(args):
    canon, seed, beta = args
    model = build_model(canon)
    h = models.build_hamiltonian(model)
    spec = build_ansatz(canon, model)
    target = models.gibbs_state(h, beta).state
    result = vqt.train(spec, h, beta, config=build_train_config(canon, seed),
                       target=target)
    return {
        "seed": seed,
        "beta": beta,
        "fidelity": result.final_fidelity,
        "cost": result.final_cost,
        "iterations": result.iterations,
        "converged": result.converged,
    }


def _run_training_sweep(canon: dict):
    items = [(canon, seed, beta)
             for seed in canon["seeds"] for beta in canon["beta_grid"]]
    workers = min(canon["workers"], len(items))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_train_item, items))
    else:
        rows = [_train_item(item) for item in items]
    rows.sort(key=lambda r: (r["seed"], r["beta"]))
    cols = ["seed", "beta", "fidelity", "cost", "iterations", "converged"]
    return cols, rows, {}


def _entropy_bench_spec(canon: dict, n: int) -> vqt.AnsatzSpec:
    eb = canon["entropy_bench"]
    channel = vqt.ChannelSpec(kind=eb["channel"], where="sites", params=(),
                              fixed={"p": eb["lambda"]})
    return vqt.AnsatzSpec(n=n, m=eb["m"],
                          unitary_generators=("zz_ring", "x_field"),
                          channels=(channel,))


def _entropy_bench_item(args):
    canon, seed = args
    eb = canon["entropy_bench"]
    n, m, lam = eb["n"], eb["m"], eb["lambda"]
    spec = _entropy_bench_spec(canon, n)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(m, 2))
    params = vqt.ParameterVector(theta, np.zeros(0))
    exact = qcore.von_neumann_entropy(vqt.evaluate_ansatz(spec, params))
    rows = []
    for n_a in eb["n_a_list"]:
        est = entropy_mod.scaled_subsystem_entropy(spec, params, n, n_a)
        rows.append({
            "method": "scaled_subsystem", "n": n, "n_a": n_a, "lambda": lam,
            "m": m, "seed": seed, "estimate": est.value, "exact": exact,
            "abs_error": abs(est.value - exact),
            "rel_error": abs(est.value - exact) / exact if exact else 0.0,
        })
    analytic = entropy_mod.analytic_depolarizing_entropy(lam, m, n) \
        if eb["channel"] == "depolarizing" else None
    if analytic is not None:
        rows.append({
            "method": "analytic_depolarizing", "n": n, "n_a": n, "lambda": lam,
            "m": m, "seed": seed, "estimate": analytic.value, "exact": exact,
            "abs_error": abs(analytic.value - exact),
            "rel_error": abs(analytic.value - exact) / exact if exact else 0.0,
        })
    return rows


def _run_entropy_bench(canon: dict):
    items = [(canon, seed) for seed in canon["seeds"]]
    workers = min(canon["workers"], len(items))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(_entropy_bench_item, items))
    else:
        nested = [_entropy_bench_item(item) for item in items]
    rows = [row for group in nested for row in group]
    rows.sort(key=lambda r: (r["method"], r["n_a"], r["seed"]))
    cols = ["method", "n", "n_a", "lambda", "m", "seed", "estimate", "exact",
            "abs_error", "rel_error"]
    eb = canon["entropy_bench"]
    summary = {}
    for n_a in eb["n_a_list"]:
        vals = [r["rel_error"] for r in rows
                if r["method"] == "scaled_subsystem" and r["n_a"] == n_a]
        model = entropy_mod.EntropyErrorModel(n=eb["n"], n_a=n_a,
                                              lam=eb["lambda"], m=eb["m"])
        summary[str(n_a)] = {
            "mean_rel_error": float(np.mean(vals)),
            "stderr": float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
            if len(vals) > 1 else 0.0,
            "predicted_rel_error": entropy_mod.entropy_error_model(model)["relative"],
        }
    return cols, rows, {"per_subsystem": summary}


def _run_grad_variance(canon: dict):
    gv = canon["grad_variance"]
    sites = gv["observable_sites"]

    def observable(n):
        ops = ["I"] * n
        for s in sites:
            ops[s - 1] = "Z"
        return qcore.PauliString(tuple(ops))

    families = {name: tuple(tags) for name, tags in gv["families"].items()}
    rows, slopes = vqt.gradient_variance_study(
        families, observable, gv["n_range"], layers=gv["layers"],
        samples=gv["samples"], seed=canon["seeds"][0],
        param_index=gv["param_index"])
    for row in rows:
        row["slope"] = slopes[row["family"]]
    rows.sort(key=lambda r: (r["family"], r["n"]))
    cols = ["family", "n", "variance", "samples", "slope"]
    return cols, rows, {"slopes": slopes}


def _run_depth_study(canon: dict):
    ds = canon["depth_study"]
    model = build_model(canon)
    h = models.build_hamiltonian(model)
    beta = canon["beta_grid"][0]
    config = build_train_config(canon, canon["seeds"][0])
    family_specs = {}
    for name, fam in ds["families"].items():
        chans = tuple(vqt.ChannelSpec(
            kind=c["kind"], where=c["where"],
            params=None if c["params"] is None else tuple(
                (p[0], p[1], p[2]) for p in c["params"]),
            fixed=c["fixed"], per_site=c["per_site"]) for c in fam["channels"])

        def make(m, tags=tuple(fam["unitary"]), chans=chans):
            return vqt.AnsatzSpec(n=model.n, m=m, unitary_generators=tags,
                                  channels=chans,
                                  problem=model if "problem" in tags else None)

        family_specs[name] = make
    rows = vqt.depth_dependence_study(family_specs, h, beta, ds["m_range"],
                                      config)
    rows.sort(key=lambda r: (r["family"], r["m"]))
    cols = ["family", "m", "fidelity", "iterations", "converged", "cost"]
    return cols, rows, {}


def _pauli_string_matrix(text: str) -> np.ndarray:
    return qcore.PauliString(tuple(text.upper())).matrix()


def build_symmetry_group(spec: dict) -> symmetry.SymmetryGroup:
    if spec["kind"] == "spin_flip":
        return symmetry.spin_flip_group(int(spec.get("n", 1)))
    elements = [_pauli_string_matrix(s) for s in spec["elements"]]
    return symmetry.group_from_elements(elements)


def build_symmetry_target(spec: dict):
    kind = spec["kind"]
    n = int(spec.get("n", 1))
    if kind in ("bitflip", "phaseflip", "depolarizing"):
        base = ch.pauli_channel(kind, float(spec.get("p", 0.25)))
        ops = base.kraus_ops
        for _ in range(n - 1):
            ops = tuple(np.kron(k1, k2) for k1 in ops for k2 in base.kraus_ops)
        return ch.KrausChannel(kraus_ops=ops, arity=n)
    if kind == "kraus_paulis":
        texts = spec["ops"]
        weights = spec.get("weights", [1.0 / len(texts)] * len(texts))
        ops = tuple(np.sqrt(w) * _pauli_string_matrix(t)
                    for t, w in zip(texts, weights))
        return ch.KrausChannel(kraus_ops=ops, arity=len(texts[0]))
    if kind == "tfim_jump":
        return ch.tfim_jump(float(spec.get("p", 1.0)), float(spec.get("q", 0.5)))
    if kind == "pair_jumps":
        return ch.heisenberg_pair_jumps(float(spec.get("kappa_f", 1.0)),
                                        float(spec.get("kappa_af", 1.0)))
    if kind == "jump_paulis":
        jumps = tuple(_pauli_string_matrix(t) for t in spec["ops"])
        dim = jumps[0].shape[0]
        return ch.LindbladGenerator(
            hamiltonian=np.zeros((dim, dim), dtype=complex), jumps=jumps,
            arity=qcore.num_qubits(dim))
    raise ConfigError(f"unknown symmetry target kind {kind!r}")


def _run_symmetry_check(canon: dict):
    sc = canon["symmetry_check"]
    group = build_symmetry_group(sc["group"])
    target = build_symmetry_target(sc["target"])
    if isinstance(target, ch.LindbladGenerator):
        report = symmetry.check_lindblad_symmetry(target, group, tol=sc["tol"])
    else:
        report = symmetry.check_strong_symmetry(target, group, tol=sc["tol"])
    phases = "" if report.phases is None else ";".join(
        repr(float(p)) for p in report.phases)
    rows = [{
        "weakly_symmetric": report.weakly_symmetric,
        "strongly_symmetric": report.strongly_symmetric,
        "phases": phases,
        "residual_weak": report.residuals.get("weak", 0.0),
        "residual_strong": report.residuals.get("strong", 0.0),
    }]
    cols = ["weakly_symmetric", "strongly_symmetric", "phases",
            "residual_weak", "residual_strong"]
    return cols, rows, {"report": report.to_dict()}


def _random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (a + a.conj().T) / 2.0
    return h / np.linalg.norm(h, 2)


def _run_qoft_bench(canon: dict):
    qb = canon["qoft_bench"]
    rng = np.random.default_rng(qb["seed"])
    grid = np.linspace(qb["omega_min"], qb["omega_max"], qb["omega_count"])
    rows = []
    failures = []
    bounds = {}
    for pair in range(qb["pairs"]):
        h = _random_hermitian(4, rng)
        a = _random_hermitian(4, rng)
        beta = qb["beta_h"] / np.linalg.norm(h, 2)
        report = qoft.verify_jump_inequality(h, a, beta, grid)
        bounds[str(pair)] = report.liouvillian_bound
        for omega, lhs, rhs, gamma, ok in report.rows:
            rows.append({
                "pair": pair, "omega": omega, "lhs_norm": lhs, "bound": rhs,
                "gamma": gamma, "pass": ok,
            })
            if not ok:
                failures.append(
                    f"pair {pair}: |exact - truncated| = {lhs} exceeds "
                    f"bound {rhs} at omega = {omega}")
    cols = ["pair", "omega", "lhs_norm", "bound", "gamma", "pass"]
    return cols, rows, {"liouvillian_bounds": bounds}, failures


def run(config: ExperimentConfig) -> ExperimentRecord:
    """Execute the experiment and return its record (without writing files)."""
    canon = config.canon
    failures: list[str] = []
    if config.experiment == "gibbs":
        cols, rows, meta = _run_gibbs(canon)
    elif config.experiment in ("train", "sweep-beta"):
        if config.experiment == "train" and len(canon["beta_grid"]) != 1:
            raise ConfigError("train expects a single beta_grid entry")
        cols, rows, meta = _run_training_sweep(canon)
    elif config.experiment == "entropy-bench":
        cols, rows, meta = _run_entropy_bench(canon)
    elif config.experiment == "grad-variance":
        cols, rows, meta = _run_grad_variance(canon)
    elif config.experiment == "depth-study":
        cols, rows, meta = _run_depth_study(canon)
    elif config.experiment == "symmetry-check":
        cols, rows, meta = _run_symmetry_check(canon)
    elif config.experiment == "qoft-bench":
        cols, rows, meta, failures = _run_qoft_bench(canon)
    else:  # pragma: no cover - validate_config rejects unknown experiments
        raise ConfigError(f"unknown experiment {config.experiment!r}")

    failures.extend(_check_row_invariants(canon, cols, rows))
    return ExperimentRecord(
        config_hash=config.config_hash,
        experiment=config.experiment,
        columns=cols,
        rows=rows,
        metadata=meta,
        failures=failures,
    )


def _check_row_invariants(canon: dict, cols, rows):
    problems = []
    n = canon["model"]["n"]
    if canon["experiment"] == "entropy-bench":
        n = canon["entropy_bench"]["n"]
    s_max = n * np.log(2.0) + 1e-9
    for row in rows:
        for key, val in row.items():
            if key.startswith("fidelity") and val is not None:
                if not -1e-12 <= val <= 1.0 + 1e-12:
                    problems.append(f"fidelity {val} outside [0, 1]")
            if key in ("entropy", "estimate", "exact") and val is not None:
                if not -1e-9 <= val <= s_max:
                    problems.append(f"entropy {val} outside [0, n ln 2]")
    return problems


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def preset(name: str) -> dict:
    """Paper-scale config dicts for the figure-level studies."""
    presets = {
        "ising_projectors": {
            "experiment": "sweep-beta",
            "model": {"kind": "ising", "n": 6, "J": 1.0, "g": 1.0},
            "beta_grid": [0.2, 0.5, 1.0, 2.0, 5.0],
            "seeds": [0],
            "ansatz": {"m": 4, "unitary": ["zz_ring", "x_field"],
                       "channels": [{"kind": "ising_projector",
                                     "where": "bonds"}]},
            "training": {"restarts": 5, "max_iters": 150,
                         "entropy_method": "exact"},
        },
        "tfim_bitflip": {
            "experiment": "sweep-beta",
            "model": {"kind": "tfim", "n": 6, "J": 1.0, "g": 1.0},
            "beta_grid": [0.0, 3.0],
            "seeds": [0],
            "ansatz": {"m": 4, "unitary": ["zz_ring", "x_field"],
                       "channels": [{"kind": "bitflip", "where": "sites"}]},
            "training": {"restarts": 5, "max_iters": 150,
                         "entropy_method": "exact"},
        },
        "tfim_phaseflip": {
            "experiment": "sweep-beta",
            "model": {"kind": "tfim", "n": 6, "J": 1.0, "g": 1.0},
            "beta_grid": [0.0, 3.0],
            "seeds": [0],
            "ansatz": {"m": 4, "unitary": ["zz_ring", "x_field"],
                       "channels": [{"kind": "phaseflip", "where": "sites"}]},
            "training": {"restarts": 5, "max_iters": 150,
                         "entropy_method": "exact"},
        },
        "tfim_engineered_jump": {
            "experiment": "sweep-beta",
            "model": {"kind": "tfim", "n": 6, "J": 1.0, "g": 1.0},
            "beta_grid": [0.5, 1.0, 2.0],
            "seeds": [0],
            "ansatz": {"m": 4, "unitary": ["zz_ring", "x_field"],
                       "channels": [{"kind": "tfim_jump", "where": "sites"}]},
            "training": {"restarts": 5, "max_iters": 150,
                         "entropy_method": "exact"},
        },
        "heisenberg_phaseflip": {
            "experiment": "sweep-beta",
            "model": {"kind": "heisenberg", "n": 6, "delta": 1.0},
            "beta_grid": [0.5, 1.0, 2.0],
            "seeds": [0],
            "ansatz": {"m": 4, "unitary": ["zz_ring", "x_field"],
                       "channels": [{"kind": "phaseflip", "where": "sites"}]},
            "training": {"restarts": 5, "max_iters": 150,
                         "entropy_method": "exact"},
        },
        "heisenberg_pair_jumps": {
            "experiment": "sweep-beta",
            "model": {"kind": "heisenberg", "n": 6, "delta": 1.0},
            "beta_grid": [0.5, 1.0, 2.0],
            "seeds": [0],
            "ansatz": {"m": 4, "unitary": ["zz_ring", "x_field"],
                       "channels": [{"kind": "phaseflip", "where": "sites"},
                                    {"kind": "pair_jumps", "where": "bonds"}]},
            "training": {"restarts": 5, "max_iters": 150,
                         "entropy_method": "exact"},
        },
        "entropy_scaling": {
            "experiment": "entropy-bench",
            "seeds": list(range(20)),
            "entropy_bench": {"lambda": 0.05, "m": 10, "n": 10,
                              "n_a_list": [3, 4, 5, 6, 7, 8],
                              "channel": "depolarizing"},
        },
        "gradient_variance": {
            "experiment": "grad-variance",
            "seeds": [0],
            "grad_variance": {"layers": 40, "samples": 100,
                              "n_range": [4, 5, 6, 7, 8, 9, 10]},
        },
        "depth_dependence": {
            "experiment": "depth-study",
            "model": {"kind": "tfim", "n": 6},
            "beta_grid": [0.75],
            "seeds": [0],
            "training": {"restarts": 3, "max_iters": 150,
                         "entropy_method": "exact"},
            "depth_study": {"m_range": [1, 2, 3, 4, 5, 6]},
        },
        "qoft_bound": {
            "experiment": "qoft-bench",
            "qoft_bench": {"pairs": 20, "beta_h": 0.05, "omega_min": -5.0,
                           "omega_max": 5.0, "omega_count": 101, "seed": 7},
        },
        "symmetry_table_bitflip": {
            "experiment": "symmetry-check",
            "symmetry_check": {"target": {"kind": "bitflip", "p": 0.3, "n": 1},
                               "group": {"kind": "spin_flip", "n": 1}},
        },
    }
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    return json.loads(json.dumps(presets[name]))


def default_config(experiment: str) -> dict:
    """Preset used when the CLI is run without a config file."""
    by_experiment = {
        "gibbs": {"experiment": "gibbs",
                  "model": {"kind": "tfim", "n": 3}, "beta_grid": [0.0, 1.0]},
        "train": preset("tfim_phaseflip") | {"experiment": "train",
                                             "beta_grid": [1.0]},
        "sweep-beta": preset("ising_projectors"),
        "entropy-bench": preset("entropy_scaling"),
        "grad-variance": preset("gradient_variance"),
        "depth-study": preset("depth_dependence"),
        "symmetry-check": preset("symmetry_table_bitflip"),
        "qoft-bench": preset("qoft_bound"),
    }
    if experiment not in by_experiment:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    return by_experiment[experiment]


def quick_overrides(canon: dict) -> dict:
    """Shrink a config for smoke runs: smaller registers, fewer seeds."""
    data = json.loads(json.dumps(canon))
    data["model"]["n"] = min(data["model"]["n"], 4)
    data["seeds"] = data["seeds"][:2]
    data["beta_grid"] = data["beta_grid"][:2]
    t = data["training"]
    t["restarts"] = min(t["restarts"], 2)
    t["max_iters"] = min(t["max_iters"], 40)
    eb = data["entropy_bench"]
    eb["n"] = min(eb["n"], 6)
    eb["n_a_list"] = [x for x in eb["n_a_list"] if x < eb["n"]][:3]
    gv = data["grad_variance"]
    gv["n_range"] = [n for n in gv["n_range"] if n <= 6][:3] or [4]
    gv["samples"] = min(gv["samples"], 20)
    gv["layers"] = min(gv["layers"], 20)
    ds = data["depth_study"]
    ds["m_range"] = ds["m_range"][:2]
    qb = data["qoft_bench"]
    qb["pairs"] = min(qb["pairs"], 3)
    data["ansatz"]["m"] = min(data["ansatz"]["m"], 3)
    return data
