"""Brute-force reference implementations used to cross-check the simulator.

Everything here materialises dense 2^m x 2^m matrices and builds the qubit
permutation from bit strings, independently of the index arithmetic used by
``qproc.quantum``.
"""

import numpy as np


def permutation_matrix(width, positions):
    """Dense Pi with Pi|b> = |b'> where b' lists the bits at ``positions`` first."""
    dim = 2**width
    rest = [i for i in range(width) if i not in positions]
    pi = np.zeros((dim, dim))
    for b in range(dim):
        bits = format(b, f"0{width}b") if width else ""
        moved = "".join(bits[p] for p in positions) + "".join(bits[i] for i in rest)
        pi[int(moved, 2) if moved else 0, b] = 1.0
    return pi


def padded(op, width):
    k = width - int(round(np.log2(op.shape[0])))
    return np.kron(op, np.eye(2**k))


def dense_apply(state, positions, matrix):
    width = int(round(np.log2(state.shape[0])))
    pi = permutation_matrix(width, positions)
    return pi.T @ padded(matrix, width) @ pi @ state


def dense_measure(state, positions, branches, eps=1e-12):
    """List of (eigenvalue, probability, post-state) via Pi^t (P (x) I) Pi."""
    width = int(round(np.log2(state.shape[0])))
    pi = permutation_matrix(width, positions)
    out = []
    for lam, proj in branches:
        full = pi.T @ padded(proj, width) @ pi
        p = float(np.real(np.conj(state) @ full @ state))
        if p > eps:
            out.append((lam, p, full @ state / np.sqrt(p)))
    total = sum(p for _, p, _ in out)
    return [(lam, p / total, v) for lam, p, v in out]


def random_state(rng, width):
    v = rng.normal(size=2**width) + 1j * rng.normal(size=2**width)
    return v / np.linalg.norm(v)


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def kron_all(*vs):
    out = np.ones(1, dtype=complex)
    for v in vs:
        out = np.kron(out, v)
    return out
