"""Finite symmetry groups with unitary representations, sector projectors,
and weak/strong symmetry classification of channels and Lindbladians.

Scope is abelian groups with one-dimensional irreps; sector projectors are
built from characters without multiplicity-space handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import qcore

__all__ = [
    "SymmetryGroup",
    "CharacterTable",
    "SymmetryReport",
    "group_from_elements",
    "group_from_generators",
    "spin_flip_group",
    "abelian_character_table",
    "sector_projectors",
    "sector_populations",
    "check_weak_symmetry",
    "check_strong_symmetry",
    "check_lindblad_symmetry",
    "sector_permutation",
]

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class SymmetryGroup:
    """Finite group given by unitary representation matrices.

    ``multiplication_table[i, j]`` is the index of R_i R_j.
    """

    elements: tuple
    multiplication_table: np.ndarray
    identity_index: int

    def __post_init__(self):
        mats = tuple(np.asarray(r, dtype=complex) for r in self.elements)
        object.__setattr__(self, "elements", mats)
        table = np.asarray(self.multiplication_table, dtype=int)
        object.__setattr__(self, "multiplication_table", table)
        size = len(mats)
        if table.shape != (size, size):
            raise ValueError("multiplication table shape does not match group size")
        dim = mats[0].shape[0]
        ident = np.eye(dim)
        for r in mats:
            if r.shape != (dim, dim):
                raise ValueError("representation matrices must share one dimension")
            if np.max(np.abs(r @ r.conj().T - ident)) > 1e-12:
                raise ValueError("representation matrix is not unitary")
        if np.max(np.abs(mats[self.identity_index] - ident)) > 1e-12:
            raise ValueError("identity element does not represent as the identity")
        for i in range(size):
            for j in range(size):
                if np.max(np.abs(mats[i] @ mats[j] - mats[table[i, j]])) > 1e-10:
                    raise ValueError(f"homomorphism violated at pair ({i}, {j})")

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.multiplication_table,
                                   self.multiplication_table.T))


def _match_element(mats, product, tol=1e-8):
    for k, r in enumerate(mats):
        if np.max(np.abs(product - r)) <= tol:
            return k
    return None


def group_from_elements(mats) -> SymmetryGroup:
    """Build the group, deriving the multiplication table by matching products."""
    mats = [np.asarray(r, dtype=complex) for r in mats]
    size = len(mats)
    dim = mats[0].shape[0]
    identity_index = _match_element(mats, np.eye(dim))
    if identity_index is None:
        raise ValueError("element list does not contain the identity")
    table = np.zeros((size, size), dtype=int)
    for i in range(size):
        for j in range(size):
            k = _match_element(mats, mats[i] @ mats[j])
            if k is None:
                raise ValueError(f"element list is not closed at pair ({i}, {j})")
            table[i, j] = k
    return SymmetryGroup(tuple(mats), table, identity_index)


def group_from_generators(generators, max_order: int = 64) -> SymmetryGroup:
    """Closure of a set of unitary generators (small groups only)."""
    dim = np.asarray(generators[0]).shape[0]
    mats = [np.eye(dim, dtype=complex)]
    frontier = [np.asarray(g, dtype=complex) for g in generators]
    while frontier:
        g = frontier.pop()
        if _match_element(mats, g) is not None:
            continue
        mats.append(g)
        if len(mats) > max_order:
            raise ValueError(f"group order exceeds {max_order}")
        frontier.extend(g @ h for h in list(mats))
        frontier.extend(h @ g for h in list(mats))
    return group_from_elements(mats)


def spin_flip_group(n: int) -> SymmetryGroup:
    """{identity, X^(kron n)}: the global spin flip on n qubits."""
    flip = qcore.kron_all([qcore.pauli_matrix("X")] * n)
    return group_from_elements([np.eye(2**n, dtype=complex), flip])


@dataclass(frozen=True)
class CharacterTable:
    """Characters chi_alpha(g) of the one-dimensional irreps, one row per irrep."""

    irrep_labels: tuple
    characters: np.ndarray

    def __post_init__(self):
        chars = np.asarray(self.characters, dtype=complex)
        object.__setattr__(self, "characters", chars)
        n_irreps, order = chars.shape
        if len(self.irrep_labels) != n_irreps:
            raise ValueError("label count does not match character rows")
        gram = chars @ chars.conj().T / order
        if np.max(np.abs(gram - np.eye(n_irreps))) > 1e-10:
            raise ValueError("character rows are not orthonormal")

    @property
    def n_irreps(self) -> int:
        return self.characters.shape[0]


def z2_character_table() -> CharacterTable:
    return CharacterTable(("even", "odd"),
                          np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex))


def abelian_character_table(group: SymmetryGroup, seed: int = 0) -> CharacterTable:
    """Characters of an abelian group via its regular representation.

    The permutation matrices of left multiplication commute; the joint
    eigenvectors of a random real combination carry the characters. Rows are
    sorted canonically with the trivial irrep first.
    """
    if not group.is_abelian():
        raise ValueError("character construction requires an abelian group")
    size = len(group)
    perms = []
    for i in range(size):
        p = np.zeros((size, size))
        for j in range(size):
            p[group.multiplication_table[i, j], j] = 1.0
        perms.append(p)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(size)
    mix = sum(c * p for c, p in zip(coeffs, perms))
    _, vecs = np.linalg.eig(mix)
    rows = []
    for v in vecs.T:
        chi = np.array([v.conj() @ p @ v for p in perms])
        chi = chi / chi[group.identity_index]
        if not any(np.max(np.abs(chi - r)) < 1e-8 for r in rows):
            rows.append(chi)
    if len(rows) != size:
        raise ValueError("failed to resolve all one-dimensional irreps")
    rows.sort(key=lambda r: tuple(np.round(-r.real, 8)))
    labels = tuple(f"chi{k}" for k in range(size))
    return CharacterTable(labels, np.array(rows))


@dataclass(frozen=True)
class SymmetryReport:
    """Verdicts of the weak and strong symmetry checks with their residuals.

    Phases are per group element (radians) and present iff the strong check
    passed; they then form a one-dimensional representation.
    """

    weakly_symmetric: bool
    strongly_symmetric: bool
    phases: tuple | None
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "weakly_symmetric": self.weakly_symmetric,
            "strongly_symmetric": self.strongly_symmetric,
            "phases": None if self.phases is None else list(self.phases),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def sector_projectors(group: SymmetryGroup, table: CharacterTable):
    """Projectors (1/|G|) sum_g conj(chi_alpha(g)) R_g onto the symmetry sectors.

    The conjugate keeps the projectors idempotent for complex characters; for
    the real tables of the scoped groups it coincides with the plain sum.
    """
    if not group.is_abelian():
        raise ValueError("sector projectors require an abelian group")
    if table.characters.shape[1] != len(group):
        raise ValueError("character table does not match group order")
    size = len(group)
    projectors = []
    for chi in table.characters:
        pi = sum(np.conj(c) * r for c, r in zip(chi, group.elements)) / size
        projectors.append(pi)
    return projectors


def sector_populations(rho: np.ndarray, projectors):
    """p_alpha = Tr[Pi_alpha rho] for each sector projector."""
    return [float(np.real(np.trace(pi @ rho))) for pi in projectors]


def _superoperator_of(channel) -> np.ndarray:
    if isinstance(channel, ch.LindbladGenerator):
        return ch.lindblad_superoperator(channel)
    return ch.channel_superoperator(channel)


def check_weak_symmetry(channel, group: SymmetryGroup,
                        tol: float = DEFAULT_TOL):
    """True iff conjugating the map by every R_g leaves it unchanged.

    Compares full superoperator matrices; returns (verdict, worst residual in
    spectral norm).
    """
    s = _superoperator_of(channel)
    residual = 0.0
    for r in group.elements:
        sr = ch.unitary_superoperator(r)
        diff = sr @ s @ sr.conj().T - s
        residual = max(residual, float(np.linalg.norm(diff, 2)))
    return residual <= tol, residual


def _strong_check_kraus(kraus_ops, group: SymmetryGroup, tol: float):
    first = kraus_ops[0]
    if np.linalg.norm(first) < 1e-14:
        raise ValueError("zero-norm Kraus operator")
    phases = []
    residual = 0.0
    for r in group.elements:
        overlap = np.trace(first.conj().T @ r @ first @ r.conj().T)
        theta = float(np.angle(overlap)) if abs(overlap) > 1e-14 else 0.0
        phase = np.exp(1j * theta)
        for k in kraus_ops:
            diff = r @ k @ r.conj().T - phase * k
            residual = max(residual, float(np.linalg.norm(diff, 2)))
        phases.append(theta)
    return residual <= tol, tuple(phases), residual


def check_strong_symmetry(channel, group: SymmetryGroup,
                          tol: float = DEFAULT_TOL) -> SymmetryReport:
    """Check R_g K_i R_g^dag = e^{i theta(g)} K_i with one shared phase per g.

    The candidate phase is extracted from the first Kraus operator; channels
    presented in a rotated Kraus basis may therefore be reported not-strong
    even when a diagonalizing basis exists (the residual is attached).
    """
    weak, weak_res = check_weak_symmetry(channel, group, tol)
    strong, phases, strong_res = _strong_check_kraus(channel.kraus_ops, group, tol)
    return SymmetryReport(
        weakly_symmetric=weak or strong,
        strongly_symmetric=strong,
        phases=phases if strong else None,
        residuals={"weak": weak_res, "strong": strong_res},
    )


def check_lindblad_symmetry(gen, group: SymmetryGroup,
                            tol: float = DEFAULT_TOL,
                            cross_check_dt: float = 1e-3) -> SymmetryReport:
    """Weak/strong classification of a Lindblad generator.

    Weak: the generator superoperator commutes with every conjugation map.
    Strong: every jump and the Hamiltonian commute with every R_g. The strong
    verdict is cross-checked against the Kraus-level test on the small-time
    expansion of the generator; the cross-check residual is reported.
    """
    weak, weak_res = check_weak_symmetry(gen, group, tol)
    strong_res = 0.0
    for r in group.elements:
        strong_res = max(strong_res, float(np.linalg.norm(
            r @ gen.hamiltonian - gen.hamiltonian @ r, 2)))
        for L in gen.jumps:
            strong_res = max(strong_res, float(np.linalg.norm(r @ L - L @ r, 2)))
    strong = strong_res <= tol
    jump_scale = max((np.linalg.norm(j, 2) ** 2 for j in gen.jumps), default=0.0)
    dt = min(cross_check_dt, 0.05 / jump_scale) if jump_scale > 0 else cross_check_dt
    approx = ch.small_time_kraus(gen, dt)
    cross_strong, _, cross_res = _strong_check_kraus(
        approx.kraus_ops, group, max(tol, 10 * dt**2))
    if cross_strong != strong:
        raise RuntimeError(
            "small-time Kraus cross-check disagrees with the generator-level verdict")
    phases = tuple(0.0 for _ in group.elements) if strong else None
    return SymmetryReport(
        weakly_symmetric=weak or strong,
        strongly_symmetric=strong,
        phases=phases,
        residuals={"weak": weak_res, "strong": strong_res,
                   "small_time_strong": cross_res},
    )


def sector_permutation(channel, group: SymmetryGroup, table: CharacterTable,
                       tol: float = DEFAULT_TOL) -> dict:
    """Permutation alpha -> alpha~ with p_alpha(E(rho)) = p_alpha~(rho).

    Requires a strongly symmetric channel; the permutation matches each
    phase-twisted character row e^{i theta(g)} chi_alpha(g) to a row of the
    table. The identity permutation corresponds to theta = 0.
    """
    report = check_strong_symmetry(channel, group, tol)
    if not report.strongly_symmetric:
        raise ValueError("sector permutation requires a strongly symmetric channel")
    phase_row = np.exp(1j * np.asarray(report.phases))
    mapping = {}
    for alpha in range(table.n_irreps):
        twisted = phase_row * table.characters[alpha]
        matches = [b for b in range(table.n_irreps)
                   if np.max(np.abs(twisted - table.characters[b])) < 1e-6]
        if len(matches) != 1:
            raise ValueError(
                f"twisted character row of irrep {alpha} matches {len(matches)} rows")
        mapping[alpha] = matches[0]
    return mapping
