"""Programmable interferometer meshes built from Mach-Zehnder cells.

A mesh is an ordered product of 2x2 unitary blocks (tunable Mach-Zehnder
cells and fixed 50:50 couplers) embedded into an m-mode identity.  The
default device is a 4-mode rectangular arrangement with 6 cells / 12
tunable phases, which together with input/output phase freedom can realize
any 4-mode unitary.

Cell convention (fixed once so that results are reproducible):

    U(theta, phi) = i * e^{i theta/2} * [[e^{i phi} sin(theta/2),  cos(theta/2)],
                                         [e^{i phi} cos(theta/2), -sin(theta/2)]]

theta is the internal phase (splitting ratio), phi the external phase on
the first mode of the pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

#: Tolerance used by the unitarity checks throughout this module.
UNITARITY_TOL = 1e-12


def wrap_phases(values: np.ndarray | list[float]) -> np.ndarray:
    """Reduce phase values modulo 2*pi into [0, 2*pi)."""
    return np.asarray(values, dtype=float) % TWO_PI


def is_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    """Check max-abs deviation of U^dag U from the identity."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) < tol


def mzi_unitary(theta: float, phi: float) -> np.ndarray:
    """2x2 unitary of a single Mach-Zehnder cell.

    theta = 0 gives the full cross state i*[[0, 1], [1, 0]]; theta = pi the
    bar state up to phase.  Continuous and 2*pi-periodic in both angles.
    """
    h = 0.5 * (theta % TWO_PI)
    g = 1j * np.exp(1j * h)
    e = np.exp(1j * (phi % TWO_PI))
    s, c = np.sin(h), np.cos(h)
    return g * np.array([[e * s, c], [e * c, -s]], dtype=complex)


def balanced_coupler() -> np.ndarray:
    """Fixed 50:50 directional coupler (no tunable phase)."""
    return np.array([[1.0, 1j], [1j, 1.0]], dtype=complex) / np.sqrt(2.0)


def embed(block: np.ndarray, mode_pair: tuple[int, int], m: int) -> np.ndarray:
    """Embed a 2x2 block acting on an adjacent mode pair into an m-mode identity."""
    i, j = mode_pair
    if j != i + 1:
        raise ValueError(f"mode pair {mode_pair} is not adjacent")
    if i < 0 or j >= m:
        raise ValueError(f"mode pair {mode_pair} out of range for {m} modes")
    u = np.eye(m, dtype=complex)
    u[i : i + 2, i : i + 2] = block
    return u


@dataclass(frozen=True)
class MZICell:
    """One tunable Mach-Zehnder cell placed on an adjacent mode pair."""

    theta: float
    phi: float
    mode_pair: tuple[int, int]

    def __post_init__(self) -> None:
        i, j = self.mode_pair
        if j != i + 1 or i < 0:
            raise ValueError(f"invalid mode pair {self.mode_pair}")

    def unitary(self) -> np.ndarray:
        return mzi_unitary(self.theta, self.phi)


@dataclass(frozen=True)
class MeshSpec:
    """Layout of a mesh: ordered cell placements plus optional fixed couplers.

    ``cell_pairs`` lists the mode pair of each tunable cell in left-to-right
    composition order (column-major over the rectangle).  Each cell consumes
    two entries of the phase vector: (theta_k, phi_k) for cell k, in order.
    ``fixed_couplers`` are 50:50 crossings applied after all cells.
    """

    mode_count: int
    cell_pairs: tuple[tuple[int, int], ...]
    fixed_couplers: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.mode_count < 2:
            raise ValueError("mode_count must be at least 2")
        for pair in tuple(self.cell_pairs) + tuple(self.fixed_couplers):
            i, j = pair
            if j != i + 1 or i < 0 or j >= self.mode_count:
                raise ValueError(f"invalid mode pair {pair}")

    @property
    def n_phases(self) -> int:
        return 2 * len(self.cell_pairs)

    @classmethod
    def four_mode_core(cls) -> "MeshSpec":
        """The 4-mode variational core: 6 cells, 12 phases.

        Rectangular column layout (0,1)&(2,3) | (1,2) | (0,1)&(2,3) | (1,2);
        no two cells in one column share a mode.
        """
        return cls(
            mode_count=4,
            cell_pairs=((0, 1), (2, 3), (1, 2), (0, 1), (2, 3), (1, 2)),
        )

    @classmethod
    def single_mzi(cls) -> "MeshSpec":
        """A single 2-mode cell (useful for tests and calibration)."""
        return cls(mode_count=2, cell_pairs=((0, 1),))

    def to_dict(self) -> dict:
        """JSON-serializable form; see the config schema in the README."""
        return {
            "mode_count": self.mode_count,
            "cells": [
                {"modes": list(pair), "theta_index": 2 * k, "phi_index": 2 * k + 1}
                for k, pair in enumerate(self.cell_pairs)
            ],
            "fixed_couplers": [list(pair) for pair in self.fixed_couplers],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeshSpec":
        cells = data["cells"]
        for k, cell in enumerate(cells):
            if cell.get("theta_index", 2 * k) != 2 * k or cell.get("phi_index", 2 * k + 1) != 2 * k + 1:
                raise ValueError("cells must bind phase indices in placement order")
        return cls(
            mode_count=int(data["mode_count"]),
            cell_pairs=tuple(tuple(c["modes"]) for c in cells),
            fixed_couplers=tuple(tuple(p) for p in data.get("fixed_couplers", [])),
        )


def build_mesh(spec: MeshSpec, params: np.ndarray | list[float]) -> np.ndarray:
    """Mode unitary of the mesh for a given phase vector.

    Cells compose left to right: later cells multiply on the left.  Raises
    ValueError when the phase vector length does not match the spec.
    """
    params = wrap_phases(params)
    if params.shape != (spec.n_phases,):
        raise ValueError(
            f"expected {spec.n_phases} phases for this mesh, got {len(params)}"
        )
    u = np.eye(spec.mode_count, dtype=complex)
    for k, pair in enumerate(spec.cell_pairs):
        block = mzi_unitary(params[2 * k], params[2 * k + 1])
        u = embed(block, pair, spec.mode_count) @ u
    for pair in spec.fixed_couplers:
        u = embed(balanced_coupler(), pair, spec.mode_count) @ u
    return u


@dataclass(frozen=True)
class StagedDevice:
    """Full device unitary with the three stages kept separate.

    total = meas @ variational @ prep (photons traverse prep first).
    """

    prep: np.ndarray
    variational: np.ndarray
    meas: np.ndarray

    def __post_init__(self) -> None:
        m = self.prep.shape[0]
        for name, stage in (("prep", self.prep), ("variational", self.variational), ("meas", self.meas)):
            if stage.shape != (m, m):
                raise ValueError(f"stage '{name}' has shape {stage.shape}, expected {(m, m)}")

    @property
    def mode_count(self) -> int:
        return self.prep.shape[0]

    @property
    def unitary(self) -> np.ndarray:
        return self.meas @ self.variational @ self.prep


def full_device(prep: np.ndarray, variational: np.ndarray, meas: np.ndarray) -> StagedDevice:
    """Compose the preparation, variational and measurement stages."""
    return StagedDevice(prep=np.asarray(prep, dtype=complex),
                        variational=np.asarray(variational, dtype=complex),
                        meas=np.asarray(meas, dtype=complex))
