"""Interacting mastery network: coupled binary nodes with noisy emissions.

Latent node states live in {0, 1} (so an isolated node's stationary marginal
is logistic in its field), couple through a symmetric interaction matrix, and
evolve by single-site Glauber or Metropolis updates whose stationary law is
the Boltzmann distribution of the energy below. Each node emits a noisy
response once per sweep through its own guess/slip pair. Exact enumeration of
the Boltzmann law is provided for small networks as the convergence oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, TooLarge
from .irt import logistic
from .rng import RngKey

_EXACT_MAX_NODES = 20
_TABLE_MAX_NODES = 12


@dataclass(frozen=True)
class IsingNetwork:
    """Symmetric couplings, per-node external fields, per-node emission noise."""

    couplings: np.ndarray
    fields: np.ndarray
    p_guess: np.ndarray
    p_slip: np.ndarray

    def __post_init__(self) -> None:
        couplings = np.asarray(self.couplings, dtype=float)
        fields = np.asarray(self.fields, dtype=float)
        p_guess = np.asarray(self.p_guess, dtype=float)
        p_slip = np.asarray(self.p_slip, dtype=float)
        n = fields.size
        if couplings.shape != (n, n):
            raise OutOfRange(
                f"couplings must be ({n}, {n}) to match {n} fields, "
                f"got {couplings.shape}"
            )
        if np.any(np.diag(couplings) != 0.0):
            raise OutOfRange("coupling diagonal must be exactly 0")
        if np.max(np.abs(couplings - couplings.T), initial=0.0) > 1e-12:
            raise OutOfRange("couplings must be symmetric within 1e-12")
        if p_guess.shape != (n,) or p_slip.shape != (n,):
            raise OutOfRange("one guess and one slip probability per node required")
        for name, arr in (("p_guess", p_guess), ("p_slip", p_slip)):
            if np.any((arr < 0) | (arr > 1) | np.isnan(arr)):
                raise OutOfRange(f"{name} entries must lie in [0, 1]")
        for name, arr in (
            ("couplings", couplings),
            ("fields", fields),
            ("p_guess", p_guess),
            ("p_slip", p_slip),
        ):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return self.fields.size

    @classmethod
    def from_dict(cls, raw: dict) -> "IsingNetwork":
        n = int(raw["n"])
        couplings = np.zeros((n, n))
        for i, j, sigma in raw.get("couplings", []):
            couplings[int(i), int(j)] = float(sigma)
            couplings[int(j), int(i)] = float(sigma)
        emissions = raw.get("emissions", [[0.0, 0.0]] * n)
        return cls(
            couplings=couplings,
            fields=np.asarray(raw.get("fields", [0.0] * n), dtype=float),
            p_guess=np.array([float(e[0]) for e in emissions]),
            p_slip=np.array([float(e[1]) for e in emissions]),
        )

    def to_dict(self) -> dict:
        n = self.n_nodes
        upper = [
            [i, j, float(self.couplings[i, j])]
            for i in range(n)
            for j in range(i + 1, n)
            if self.couplings[i, j] != 0.0
        ]
        return {
            "n": n,
            "couplings": upper,
            "fields": [float(h) for h in self.fields],
            "emissions": [
                [float(g), float(s)] for g, s in zip(self.p_guess, self.p_slip)
            ],
        }

    @classmethod
    def from_json_file(cls, path: str) -> "IsingNetwork":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


@dataclass(frozen=True)
class FieldState:
    """One snapshot: latent mastery vector z and emitted response vector x."""

    z: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        if len(self.z) != len(self.x):
            raise ValueError("z and x must have equal length")


def energy(net: IsingNetwork, z) -> float:
    """E(z) = -(sum_{i<j} sigma_ij z_i z_j + sum_i h_i z_i)."""
    z = np.asarray(z, dtype=float)
    return float(-(0.5 * z @ net.couplings @ z + net.fields @ z))


def _state_bits(n: int) -> np.ndarray:
    # Row s holds the bits of state index s, node j = bit j.
    return (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1


def boltzmann_exact(net: IsingNetwork) -> np.ndarray:
    """Normalized exp(-E) over all 2^n states, indexed by the bit pattern of z.

    Full enumeration; refuses networks beyond 20 nodes.
    """
    n = net.n_nodes
    if n > _EXACT_MAX_NODES:
        raise TooLarge(
            f"exact enumeration capped at {_EXACT_MAX_NODES} nodes, got {n}"
        )
    states = _state_bits(n).astype(float)
    energies = -(
        0.5 * np.einsum("si,ij,sj->s", states, net.couplings, states)
        + states @ net.fields
    )
    weights = np.exp(-(energies - energies.min()))
    return weights / weights.sum()


def conditional_prob(net: IsingNetwork, z, node: int) -> float:
    """P(z_node = 1 | all other nodes) = logistic(h_node + sigma_node . z)."""
    z = np.asarray(z, dtype=float)
    return float(logistic(net.fields[node] + float(net.couplings[node] @ z)))


def glauber_step(net: IsingNetwork, z, node: int, gen: np.random.Generator) -> np.ndarray:
    """Resample one node from its exact conditional; consumes one uniform."""
    z_new = np.array(z, dtype=np.uint8)
    z_new[node] = 1 if gen.random() < conditional_prob(net, z_new, node) else 0
    return z_new


def flip_energy_delta(net: IsingNetwork, z, node: int) -> float:
    """Energy change from flipping one node (diagonal is zero, so the node's
    own entry never contributes)."""
    z = np.asarray(z, dtype=float)
    local = net.fields[node] + float(net.couplings[node] @ z)
    return -local if z[node] == 0 else local


def metropolis_step(
    net: IsingNetwork, z, node: int, gen: np.random.Generator
) -> np.ndarray:
    """Propose flipping one node, accept with min(1, exp(-dE)); consumes one
    uniform whether or not the flip is accepted."""
    z_new = np.array(z, dtype=np.uint8)
    delta = flip_energy_delta(net, z_new, node)
    accept = 1.0 if delta <= 0 else math.exp(-delta)
    if gen.random() < accept:
        z_new[node] ^= 1
    return z_new


@dataclass(frozen=True)
class FieldTrace:
    """Per-sweep latent and emitted states plus the stream that produced them."""

    latent: np.ndarray
    emitted: np.ndarray
    key: RngKey

    def __len__(self) -> int:
        return self.latent.shape[0]

    def __getitem__(self, sweep: int) -> FieldState:
        return FieldState(self.latent[sweep], self.emitted[sweep])

    def state_indices(self) -> np.ndarray:
        """Latent state per sweep packed as an integer (node j = bit j)."""
        n = self.latent.shape[1]
        return (self.latent.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64)))


def _glauber_tables(net: IsingNetwork) -> list[list[float]]:
    bits = _state_bits(net.n_nodes).astype(float)
    return [
        logistic(net.fields[j] + bits @ net.couplings[j]).tolist()
        for j in range(net.n_nodes)
    ]


def _metropolis_tables(net: IsingNetwork) -> list[list[float]]:
    bits = _state_bits(net.n_nodes)
    tables = []
    for j in range(net.n_nodes):
        local = net.fields[j] + bits.astype(float) @ net.couplings[j]
        delta = np.where(bits[:, j] == 0, -local, local)
        tables.append(np.minimum(1.0, np.exp(-np.maximum(delta, 0.0))).tolist())
    return tables


def simulate_field(
    net: IsingNetwork,
    sweeps: int,
    key: RngKey,
    dynamics: str = "glauber",
    scan: str = "fixed",
) -> FieldTrace:
    """Run single-site dynamics from the all-unmastered state.

    One sweep updates every node once (fixed ascending order, or a fresh
    random permutation per sweep when scan="random") and then emits one
    response per node. Uniform layout per sweep: n update draws in scan
    order, then n emission draws; random scan draws its permutation before
    the update draws. Small fixed-scan networks run on precomputed
    conditional tables, which consume the identical stream.
    """
    if sweeps < 1:
        raise ValueError(f"sweeps must be >= 1, got {sweeps}")
    if dynamics not in ("glauber", "metropolis"):
        raise ValueError(f"dynamics must be glauber or metropolis, got {dynamics!r}")
    if scan not in ("fixed", "random"):
        raise ValueError(f"scan must be fixed or random, got {scan!r}")
    n = net.n_nodes
    gen = key.generator()
    latent = np.empty((sweeps, n), dtype=np.uint8)

    use_tables = scan == "fixed" and n <= _TABLE_MAX_NODES
    if use_tables:
        tables = (
            _glauber_tables(net) if dynamics == "glauber" else _metropolis_tables(net)
        )
        flip_semantics = dynamics == "metropolis"
        bit = [1 << j for j in range(n)]
        idx = 0
        done = 0
        emit_chunks = []
        while done < sweeps:
            chunk = min(sweeps - done, 1 << 15)
            draws = gen.random((chunk, 2 * n))
            emit_chunks.append(draws[:, n:])
            rows = draws[:, :n].tolist()
            indices = np.empty(chunk, dtype=np.int64)
            for s, row in enumerate(rows):
                for j in range(n):
                    threshold = tables[j][idx]
                    if flip_semantics:
                        if row[j] < threshold:
                            idx ^= bit[j]
                    elif row[j] < threshold:
                        idx |= bit[j]
                    else:
                        idx &= ~bit[j]
                indices[s] = idx
            latent[done : done + chunk] = (
                (indices[:, None] >> np.arange(n)) & 1
            ).astype(np.uint8)
            done += chunk
        emit_draws = np.vstack(emit_chunks)
    else:
        step = glauber_step if dynamics == "glauber" else metropolis_step
        z = np.zeros(n, dtype=np.uint8)
        emit_draws = np.empty((sweeps, n))
        for s in range(sweeps):
            order = range(n) if scan == "fixed" else gen.permutation(n)
            for j in order:
                z = step(net, z, int(j), gen)
            latent[s] = z
            emit_draws[s] = gen.random(n)

    p_emit = np.where(latent == 1, 1.0 - net.p_slip, net.p_guess)
    emitted = (emit_draws < p_emit).astype(np.uint8)
    return FieldTrace(latent=latent, emitted=emitted, key=key)


def empirical_state_frequencies(
    trace: FieldTrace, burn_in: int = 0, thin: int = 1
) -> np.ndarray:
    """Relative visit frequencies over all 2^n states, after burn-in/thinning."""
    n = trace.latent.shape[1]
    indices = trace.state_indices()[burn_in::thin]
    counts = np.bincount(indices, minlength=2**n).astype(float)
    return counts / counts.sum()
