"""Conic program container: block descriptors, equality system, JSON interchange.

A program is
    min  c^T x   s.t.  A x = b,   x in K,
with K an ordered product of zero, free, nonnegative, second-order, rotated
second-order, and PSD cones.  PSD blocks hold the packed svec of the matrix
variable, so their slot count is n(n+1)/2 for matrix order n.  Inequalities
are expected to arrive as equalities with explicit slack variables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .symmat import tri_size

BLOCK_KINDS = ("zero", "free", "nonneg", "soc", "rsoc", "psd")


class ProgramError(ValueError):
    """Structurally inconsistent conic program."""


@dataclass(frozen=True)
class Block:
    kind: str
    dim: int  # matrix order for psd, slot count otherwise

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ProgramError(f"unknown block kind {self.kind!r}")
        if self.dim < 1:
            raise ProgramError("block dimension must be positive")
        if self.kind == "rsoc" and self.dim < 2:
            raise ProgramError("rsoc block needs at least two slots")

    @property
    def size(self) -> int:
        """Number of variable slots the block occupies."""
        return tri_size(self.dim) if self.kind == "psd" else self.dim


class ConicProgram:
    """Immutable conic program in block form.

    Equality coefficients are a quadruple list (row, block, offset, value);
    duplicate addresses accumulate.
    """

    def __init__(self, blocks, objective, coefficients, rhs):
        blocks = tuple(
            b if isinstance(b, Block) else Block(str(b[0]), int(b[1])) for b in blocks
        )
        if not blocks:
            raise ProgramError("program needs at least one block")
        sizes = np.array([b.size for b in blocks], dtype=int)
        starts = np.concatenate(([0], np.cumsum(sizes)))
        num_vars = int(starts[-1])

        objective = np.asarray(objective, dtype=float)
        if objective.shape != (num_vars,):
            raise ProgramError(
                f"objective length {objective.shape} != variable count {num_vars}"
            )
        if not np.all(np.isfinite(objective)):
            raise ProgramError("objective must be finite")

        rhs = np.asarray(rhs, dtype=float)
        if rhs.ndim != 1:
            raise ProgramError("rhs must be a vector")
        if not np.all(np.isfinite(rhs)):
            raise ProgramError("rhs must be finite")

        coefficients = list(coefficients)
        rows = np.array([int(c[0]) for c in coefficients], dtype=int)
        blk = np.array([int(c[1]) for c in coefficients], dtype=int)
        off = np.array([int(c[2]) for c in coefficients], dtype=int)
        val = np.array([float(c[3]) for c in coefficients], dtype=float)
        m = rhs.shape[0]
        if rows.size:
            if rows.min() < 0 or rows.max() >= m:
                raise ProgramError("coefficient row index out of range")
            if blk.min() < 0 or blk.max() >= len(blocks):
                raise ProgramError("coefficient block index out of range")
            if np.any(off < 0) or np.any(off >= sizes[blk]):
                raise ProgramError("coefficient offset outside its block")
            if not np.all(np.isfinite(val)):
                raise ProgramError("coefficient values must be finite")

        self.blocks = blocks
        self.objective = objective
        self.rhs = rhs
        self.coeff_rows = rows
        self.coeff_blocks = blk
        self.coeff_offsets = off
        self.coeff_values = val
        self._starts = starts
        for arr in (objective, rhs, rows, blk, off, val):
            arr.setflags(write=False)

    @property
    def num_vars(self) -> int:
        return int(self._starts[-1])

    @property
    def num_rows(self) -> int:
        return int(self.rhs.shape[0])

    def block_start(self, i: int) -> int:
        return int(self._starts[i])

    def block_slice(self, i: int) -> slice:
        return slice(int(self._starts[i]), int(self._starts[i + 1]))

    def A_csr(self) -> sp.csr_matrix:
        cols = self._starts[self.coeff_blocks] + self.coeff_offsets
        A = sp.coo_matrix(
            (self.coeff_values, (self.coeff_rows, cols)),
            shape=(self.num_rows, self.num_vars),
        )
        return A.tocsr()

    def to_dict(self) -> dict:
        return {
            "blocks": [{"kind": b.kind, "dim": b.dim} for b in self.blocks],
            "objective": self.objective.tolist(),
            "b": self.rhs.tolist(),
            "triplets": [
                [int(r), int(bk), int(o), float(v)]
                for r, bk, o, v in zip(
                    self.coeff_rows, self.coeff_blocks, self.coeff_offsets, self.coeff_values
                )
            ],
        }

    @classmethod
    def from_dict(cls, obj) -> "ConicProgram":
        blocks = [Block(d["kind"], int(d["dim"])) for d in obj["blocks"]]
        return cls(blocks, obj["objective"], obj["triplets"], obj["b"])

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load_json(cls, path) -> "ConicProgram":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self):
        kinds = ",".join(f"{b.kind}({b.dim})" for b in self.blocks)
        return f"ConicProgram(vars={self.num_vars}, rows={self.num_rows}, blocks=[{kinds}])"


class ProgramBuilder:
    """Incremental construction helper for ConicProgram."""

    def __init__(self):
        self._blocks: list[Block] = []
        self._coeffs: list[tuple[int, int, int, float]] = []
        self._rhs: list[float] = []
        self._obj: dict[tuple[int, int], float] = {}

    def add_block(self, kind: str, dim: int) -> int:
        self._blocks.append(Block(kind, dim))
        return len(self._blocks) - 1

    def add_row(self, coeffs, rhs: float) -> int:
        """coeffs: iterable of (block, offset, value); returns the row index."""
        row = len(self._rhs)
        for blk, off, val in coeffs:
            if val != 0.0:
                self._coeffs.append((row, int(blk), int(off), float(val)))
        self._rhs.append(float(rhs))
        return row

    def add_objective(self, blk: int, off: int, val: float) -> None:
        key = (int(blk), int(off))
        self._obj[key] = self._obj.get(key, 0.0) + float(val)

    def build(self) -> ConicProgram:
        sizes = [b.size for b in self._blocks]
        starts = np.concatenate(([0], np.cumsum(sizes))) if sizes else np.array([0])
        c = np.zeros(int(starts[-1]))
        for (blk, off), val in self._obj.items():
            c[starts[blk] + off] = val
        return ConicProgram(self._blocks, c, self._coeffs, self._rhs)
