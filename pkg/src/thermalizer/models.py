"""Spin-chain Hamiltonians on periodic rings, Gibbs targets and start states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qcore

__all__ = [
    "SpinModel",
    "GibbsTarget",
    "build_hamiltonian",
    "gibbs_state",
    "mixing_hamiltonian",
    "initial_state",
    "free_energy",
    "ring_bonds",
    "pauli_sum",
]

MODEL_KINDS = ("ising", "tfim", "heisenberg")


@dataclass(frozen=True)
class SpinModel:
    """Model on a periodic ring of ``n >= 3`` sites.

    kind "ising":       H = -J sum_k Z_k Z_{k+1} - g sum_k Z_k
    kind "tfim":        H = -J sum_k Z_k Z_{k+1} - g sum_k X_k
    kind "heisenberg":  H = sign * [sum_k (XX + YY + ZZ)_{k,k+1} + delta sum_k X_k]

    ``sign`` applies to the Heisenberg couplings only; the default -1 is the
    ferromagnetic convention, +1 the antiferromagnetic one.
    """

    kind: str
    n: int
    J: float = 1.0
    g: float = 1.0
    delta: float = 1.0
    sign: int = -1

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.n < 3:
            raise ValueError(
                "n >= 3 required: a 2-site periodic ring double-counts its bond")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")

    def at_size(self, n: int) -> "SpinModel":
        """Same couplings on a ring of a different size."""
        return SpinModel(self.kind, n, self.J, self.g, self.delta, self.sign)


def ring_bonds(n: int):
    """1-based bonds (k, k+1) of the periodic ring, bond n wrapping to site 1."""
    return [(k, k % n + 1) for k in range(1, n + 1)]


def pauli_sum(n: int, labels_by_site) -> np.ndarray:
    """Sum of translated Pauli strings, one term per placement.

    ``labels_by_site`` is an iterable of dicts {site: label} with 1-based sites.
    """
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for placement in labels_by_site:
        ops = ["I"] * n
        for site, label in placement.items():
            ops[site - 1] = label
        h += qcore.PauliString(tuple(ops)).matrix()
    return h


def build_hamiltonian(model: SpinModel) -> np.ndarray:
    n = model.n
    bonds = ring_bonds(n)
    if model.kind == "ising":
        h = -model.J * pauli_sum(n, [{a: "Z", b: "Z"} for a, b in bonds])
        h -= model.g * pauli_sum(n, [{k: "Z"} for k in range(1, n + 1)])
    elif model.kind == "tfim":
        h = -model.J * pauli_sum(n, [{a: "Z", b: "Z"} for a, b in bonds])
        h -= model.g * pauli_sum(n, [{k: "X"} for k in range(1, n + 1)])
    else:
        h = np.zeros((2**n, 2**n), dtype=complex)
        for p in ("X", "Y", "Z"):
            h += pauli_sum(n, [{a: p, b: p} for a, b in bonds])
        h += model.delta * pauli_sum(n, [{k: "X"} for k in range(1, n + 1)])
        h *= model.sign
    return h


@dataclass(frozen=True)
class GibbsTarget:
    """Exact thermal state exp(-beta H) / Z together with its normalization."""

    hamiltonian: np.ndarray
    beta: float
    partition_function: float
    log_partition_function: float
    state: np.ndarray


def gibbs_state(h: np.ndarray, beta: float) -> GibbsTarget:
    """Exact Gibbs state of a Hermitian ``h`` at inverse temperature ``beta >= 0``.

    Weights are computed relative to the ground energy so large beta stays
    finite.
    """
    h = np.asarray(h, dtype=complex)
    if not qcore.is_hermitian(h):
        raise ValueError("Hamiltonian must be Hermitian")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    w, v = np.linalg.eigh(h)
    shifted = np.exp(-beta * (w - w[0]))
    z_shifted = float(np.sum(shifted))
    log_z = float(-beta * w[0] + np.log(z_shifted))
    rho = (v * (shifted / z_shifted)) @ v.conj().T
    rho = (rho + rho.conj().T) / 2
    return GibbsTarget(
        hamiltonian=h,
        beta=float(beta),
        partition_function=float(np.exp(log_z)),
        log_partition_function=log_z,
        state=rho,
    )


def mixing_hamiltonian(n: int) -> np.ndarray:
    """H_M = -sum_k X_k, whose ground state is |+>^n."""
    if n < 1:
        raise ValueError("n must be positive")
    return -pauli_sum(n, [{k: "X"} for k in range(1, n + 1)])


def initial_state(n: int) -> np.ndarray:
    """|+>^n as a pure density matrix."""
    if n < 1:
        raise ValueError("n must be positive")
    return qcore.pure_state(qcore.plus_state(n))


def free_energy(rho: np.ndarray, h: np.ndarray, beta: float,
                entropy_value: float) -> float:
    """Dimensionless free energy beta * <H> - S, with the entropy supplied.

    At the exact Gibbs state this equals -ln Z.
    """
    return beta * qcore.expectation(rho, h) - entropy_value
