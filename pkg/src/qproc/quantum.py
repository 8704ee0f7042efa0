"""Dense state-vector backend.

Register convention: slot 0 of the qubit sequence is the head of the tensor
product, i.e. the most significant bit of a basis-state index. A register of
width ``m`` is a complex vector of length ``2**m``; width 0 is the scalar
vector ``[1]``.

Operators act on arbitrary slots by conjugating with a basis-index bijection
that moves the chosen slots to the head of the register, rather than by
materializing the ``2**m x 2**m`` permutation matrix.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TOL = 1e-9
EPS_DROP = 1e-12


class QuantumError(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Unitary:
    name: str
    arity: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", _readonly(m))


@dataclass(frozen=True, eq=False)
class Observable:
    """Spectral form ``sum(eigenvalue * projector)`` of a hermitian operator."""

    name: str
    arity: int
    branches: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self):
        br = tuple((int(lam), _readonly(np.array(p, dtype=complex))) for lam, p in self.branches)
        object.__setattr__(self, "branches", br)

    @property
    def matrix(self) -> np.ndarray:
        return sum(lam * p for lam, p in self.branches)


@dataclass(frozen=True, eq=False)
class MeasurementBranch:
    eigenvalue: int
    probability: float
    state: np.ndarray = field(repr=False)


# --- validation --------------------------------------------------------------


def validate_unitary(u: Unitary, tol: float = TOL) -> None:
    dim = 2**u.arity
    m = u.matrix
    if m.shape != (dim, dim):
        raise QuantumError(f"unitary {u.name}: expected {dim}x{dim} matrix, got {m.shape}")
    if not np.allclose(m @ m.conj().T, np.eye(dim), rtol=0, atol=tol):
        raise QuantumError(f"unitary {u.name}: U U^dagger != I")
    if not np.allclose(m.conj().T @ m, np.eye(dim), rtol=0, atol=tol):
        raise QuantumError(f"unitary {u.name}: U^dagger U != I")


def validate_observable(obs: Observable, tol: float = TOL) -> None:
    dim = 2**obs.arity
    if not obs.branches:
        raise QuantumError(f"observable {obs.name}: no eigenspaces")
    eigen = [lam for lam, _ in obs.branches]
    if len(set(eigen)) != len(eigen):
        raise QuantumError(f"observable {obs.name}: repeated eigenvalue")
    if any(lam < 0 for lam in eigen):
        raise QuantumError(f"observable {obs.name}: eigenvalues must be natural numbers")
    total = np.zeros((dim, dim), dtype=complex)
    for i, (lam, p) in enumerate(obs.branches):
        if p.shape != (dim, dim):
            raise QuantumError(f"observable {obs.name}: projector for {lam} is not {dim}x{dim}")
        if not np.allclose(p, p.conj().T, rtol=0, atol=tol):
            raise QuantumError(f"observable {obs.name}: projector for {lam} is not hermitian")
        if not np.allclose(p @ p, p, rtol=0, atol=tol):
            raise QuantumError(f"observable {obs.name}: projector for {lam} is not idempotent")
        for lam2, q in obs.branches[i + 1 :]:
            if not np.allclose(p @ q, 0, rtol=0, atol=tol):
                raise QuantumError(f"observable {obs.name}: projectors {lam} and {lam2} overlap")
        total += p
    if not np.allclose(total, np.eye(dim), rtol=0, atol=tol):
        raise QuantumError(f"observable {obs.name}: projectors do not sum to identity")


# --- built-ins ---------------------------------------------------------------

_S = 1 / math.sqrt(2)

_GATES = {
    "H": (1, [[_S, _S], [_S, -_S]]),
    "CNot": (2, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "I": (1, [[1, 0], [0, 1]]),
    "X": (1, [[0, 1], [1, 0]]),
    "Y": (1, [[0, -1j], [1j, 0]]),
    "Z": (1, [[1, 0], [0, -1]]),
}


def standard_basis_observable(name: str, arity: int) -> Observable:
    """Observable whose eigenvalue ``i`` projects onto basis state ``|i>``."""
    dim = 2**arity
    branches = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1
        branches.append((i, p))
    return Observable(name, arity, tuple(branches))


def builtin_gate(name: str) -> Unitary:
    try:
        arity, rows = _GATES[name]
    except KeyError:
        raise QuantumError(f"unknown gate {name!r}") from None
    return Unitary(name, arity, np.array(rows, dtype=complex))


def builtin_observable(name: str) -> Observable:
    if name == "M_std":
        return standard_basis_observable("M_std", 1)
    if name == "M_std2":
        return standard_basis_observable("M_std2", 2)
    raise QuantumError(f"unknown observable {name!r}")


def default_unitaries() -> dict[str, Unitary]:
    return {n: builtin_gate(n) for n in _GATES}


def default_observables() -> dict[str, Observable]:
    return {n: builtin_observable(n) for n in ("M_std", "M_std2")}


# --- register operations -----------------------------------------------------


def width_of(state: np.ndarray) -> int:
    m = int(state.shape[0]).bit_length() - 1
    if 2**m != state.shape[0]:
        raise QuantumError(f"state length {state.shape[0]} is not a power of two")
    return m


def empty_state() -> np.ndarray:
    return _readonly(np.ones(1, dtype=complex))


def init_qubit(state: np.ndarray, bit: int) -> np.ndarray:
    """Prepend a fresh qubit in basis state ``|bit>``: returns ``|bit> (x) state``."""
    if bit not in (0, 1):
        raise QuantumError(f"qubit can only be initialised with 0 or 1, not {bit}")
    out = np.zeros(2 * state.shape[0], dtype=complex)
    half = state.shape[0]
    out[bit * half : (bit + 1) * half] = state
    return _readonly(out)


def _check_positions(width: int, positions) -> tuple[int, ...]:
    positions = tuple(int(p) for p in positions)
    if len(set(positions)) != len(positions):
        raise QuantumError(f"duplicate position in {list(positions)}")
    for p in positions:
        if not 0 <= p < width:
            raise QuantumError(f"position {p} out of range for width {width}")
    return positions


@functools.lru_cache(maxsize=1024)
def _front_permutation(width: int, positions: tuple[int, ...]) -> np.ndarray:
    order = list(positions) + [p for p in range(width) if p not in positions]
    idx = np.arange(2**width)
    out = np.zeros_like(idx)
    for j, src in enumerate(order):
        bit = (idx >> (width - 1 - src)) & 1
        out |= bit << (width - 1 - j)
    return _readonly(out)


def front_permutation(width: int, positions) -> np.ndarray:
    """Basis-index bijection moving ``positions`` to the head, in the given order.

    ``perm[b]`` is the image of basis index ``b``: bit ``j`` (from the head) of
    ``perm[b]`` is bit ``positions[j]`` of ``b``; the other slots follow in
    their original relative order.
    """
    return _front_permutation(width, _check_positions(width, positions))


def _to_front(state: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(state)
    out[perm] = state
    return out


def _operand(state: np.ndarray, positions, arity: int) -> tuple[np.ndarray, np.ndarray]:
    width = width_of(state)
    if len(positions) != arity:
        raise QuantumError(f"operator of arity {arity} applied to {len(positions)} qubits")
    perm = front_permutation(width, positions)
    front = _to_front(state, perm).reshape(2**arity, -1)
    return front, perm


def apply_unitary(state: np.ndarray, positions, u: Unitary) -> np.ndarray:
    """``Pi^t (U (x) I^k) Pi |psi>`` with ``Pi`` moving ``positions`` to the head."""
    front, perm = _operand(state, positions, u.arity)
    return _readonly((u.matrix @ front).reshape(-1)[perm])


def measure(state: np.ndarray, positions, obs: Observable) -> list[MeasurementBranch]:
    """Projective measurement of the qubits at ``positions``.

    Outcomes below ``EPS_DROP`` are discarded and the survivors renormalised
    so the returned probabilities sum to one.
    """
    front, perm = _operand(state, positions, obs.arity)
    flat = front.reshape(-1)
    raw = []
    for lam, proj in obs.branches:
        projected = (proj @ front).reshape(-1)
        p = float(np.vdot(flat, projected).real)
        if p > EPS_DROP:
            raw.append((lam, p, projected))
    total = sum(p for _, p, _ in raw)
    if total <= 0:
        raise QuantumError("measurement with no outcome of positive probability")
    out = []
    for lam, p, projected in raw:
        post = projected[perm] / math.sqrt(p)
        out.append(MeasurementBranch(lam, p / total, _readonly(post)))
    return out


# --- definitions file --------------------------------------------------------


def _parse_complex(text: str) -> complex:
    t = text.replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise QuantumError(f"bad complex number {text!r}") from None


def parse_definitions_file(text: str, source: str = "<defs>") -> tuple[dict, dict]:
    """Parse user unitaries and observables; each is validated before return.

    Format::

        unitary NAME arity N
        <2**N rows of 2**N complex entries like 1, -0.5+2i, i>
        observable NAME arity N eigen L
        <2**N projector rows>          (block repeated once per eigenvalue)

    Lines starting with ``#`` or ``--`` and blank lines are ignored.
    """
    lines = []
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s and not s.startswith(("#", "--")):
            lines.append((no, s.split()))
    unitaries: dict[str, Unitary] = {}
    obs_parts: dict[str, tuple[int, list]] = {}
    i = 0

    def err(no, msg):
        return QuantumError(f"{source}:{no}: {msg}")

    def read_matrix(dim, header_no):
        nonlocal i
        rows = []
        for _ in range(dim):
            if i >= len(lines):
                raise err(header_no, f"expected {dim} matrix rows")
            no, words = lines[i]
            if len(words) != dim:
                raise err(no, f"expected {dim} entries, found {len(words)}")
            try:
                rows.append([_parse_complex(w) for w in words])
            except QuantumError as e:
                raise err(no, str(e)) from None
            i += 1
        return np.array(rows, dtype=complex)

    def arity_of(no, word):
        if not word.isdigit() or int(word) < 1:
            raise err(no, f"arity {word!r} is not a positive integer")
        return int(word)

    while i < len(lines):
        no, words = lines[i]
        i += 1
        if len(words) == 4 and words[0] == "unitary" and words[2] == "arity":
            name, arity = words[1], arity_of(no, words[3])
            if name in unitaries:
                raise err(no, f"unitary {name} defined twice")
            unitaries[name] = Unitary(name, arity, read_matrix(2**arity, no))
        elif len(words) == 6 and words[0] == "observable" and words[2] == "arity" and words[4] == "eigen":
            name, arity = words[1], arity_of(no, words[3])
            try:
                lam = int(words[5])
            except ValueError:
                raise err(no, f"eigenvalue {words[5]!r} is not an integer") from None
            prev_arity, parts = obs_parts.setdefault(name, (arity, []))
            if prev_arity != arity:
                raise err(no, f"observable {name} redeclared with arity {arity}")
            parts.append((lam, read_matrix(2**arity, no)))
        else:
            raise err(no, "expected 'unitary NAME arity N' or 'observable NAME arity N eigen L'")

    observables = {n: Observable(n, a, tuple(parts)) for n, (a, parts) in obs_parts.items()}
    for u in unitaries.values():
        validate_unitary(u)
    for o in observables.values():
        validate_observable(o)
    return unitaries, observables


def load_definitions(path) -> tuple[dict, dict]:
    p = Path(path)
    return parse_definitions_file(p.read_text(encoding="utf-8"), str(p))
