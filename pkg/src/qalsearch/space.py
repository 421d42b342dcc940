"""Homotop enumeration and energy oracles.

A homotop is one placement of ``n_dopants`` dopant atoms on the sites of a
fixed host cluster. Energies are in Hartree.
"""
import csv
import io
import itertools
import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import Geometry, format_xyz, pair_geometry
from .errors import (
    DomainError,
    DuplicateRecordError,
    MissingRecordError,
    OracleError,
    ParseError,
    QubitIndexError,
)

TABLE_HEADER = ("homotop_id", "energy_hartree")


@dataclass(frozen=True, order=True)
class Homotop:
    dopant_sites: tuple

    def __post_init__(self):
        sites = tuple(int(s) for s in self.dopant_sites)
        if any(b <= a for a, b in zip(sites, sites[1:])) or any(s < 0 for s in sites):
            raise ValueError(f"dopant sites must be strictly increasing and >= 0: {sites}")
        object.__setattr__(self, "dopant_sites", sites)

    @property
    def id(self):
        return "-".join(str(s) for s in self.dopant_sites)

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if not text:
            return cls(())
        try:
            return cls(tuple(int(p) for p in text.split("-")))
        except ValueError:
            raise ValueError(f"malformed homotop id {text!r}") from None

    def __str__(self):
        return self.id


def enumerate_homotops(n_sites, n_dopants):
    """All C(n_sites, n_dopants) placements in lexicographic order."""
    if n_sites < 0 or n_dopants < 0 or n_dopants > n_sites:
        raise DomainError(f"need 0 <= n_dopants <= n_sites, got ({n_sites}, {n_dopants})")
    return [Homotop(c) for c in itertools.combinations(range(n_sites), n_dopants)]


@dataclass(frozen=True)
class CandidateSpace:
    host: Geometry
    n_dopants: int
    dopant_element: str = "Al"

    def __post_init__(self):
        if not 0 <= self.n_dopants <= self.n_sites:
            raise DomainError(f"cannot place {self.n_dopants} dopants on {self.n_sites} sites")
        object.__setattr__(self, "_homotops", tuple(enumerate_homotops(self.n_sites, self.n_dopants)))

    @property
    def n_sites(self):
        return len(self.host)

    @property
    def homotops(self):
        return self._homotops

    @property
    def ids(self):
        return [h.id for h in self._homotops]

    def __len__(self):
        return math.comb(self.n_sites, self.n_dopants)


def homotop_geometry(space, h):
    """Host geometry with the homotop's sites relabeled as the dopant."""
    if isinstance(h, str):
        h = Homotop.parse(h)
    if len(h.dopant_sites) != space.n_dopants:
        raise ValueError(f"homotop {h.id!r} has {len(h.dopant_sites)} sites, space expects {space.n_dopants}")
    elements = list(space.host.elements)
    for s in h.dopant_sites:
        if s >= space.n_sites:
            raise QubitIndexError(f"site {s} out of range for a {space.n_sites}-site host")
        elements[s] = space.dopant_element
    return space.host.with_elements(elements)


# --- oracles --------------------------------------------------------------


class TableOracle:
    """Exact lookup in a precomputed energy table."""

    def __init__(self, records):
        self.table = dict(records)

    @classmethod
    def from_csv(cls, path):
        return cls(read_energy_table(path))

    def evaluate(self, space, h):
        key = h if isinstance(h, str) else h.id
        try:
            return self.table[key]
        except KeyError:
            raise MissingRecordError(f"no energy recorded for homotop {key!r}") from None

    def tabulate(self, space):
        return {i: self.evaluate(space, i) for i in space.ids}


@dataclass(frozen=True)
class ToyOracle:
    """Synthetic pair potential sum_{i<j} J(s_i, s_j) exp(-r_ij / rho).

    Defaults give a landscape with a unique minimum on the shipped host;
    they are not fitted to any real material.
    """

    j_sisi: float = 0.0
    j_sial: float = -0.3
    j_alal: float = 0.5
    rho: float = 2.0
    host_element: str = "Si"
    dopant_element: str = "Al"

    def energy(self, geometry):
        i, j, r = pair_geometry(geometry)
        dop = np.array([e == self.dopant_element for e in geometry.elements])
        n_dop = dop[i].astype(int) + dop[j].astype(int)
        J = np.array([self.j_sisi, self.j_sial, self.j_alal])[n_dop]
        return float(np.sum(J * np.exp(-r / self.rho)))

    def evaluate(self, space, h):
        return self.energy(homotop_geometry(space, h))

    def tabulate(self, space):
        return {h.id: self.evaluate(space, h) for h in space.homotops}


class CommandOracle:
    """Run ``<command> <xyz_path>`` and read the energy from stdout.

    The energy is the last whitespace-separated token of the last
    non-empty stdout line. The external program is responsible for any
    relaxation; its result is taken as the relaxed total energy.
    """

    def __init__(self, command, timeout=None):
        self.command = command
        self.timeout = timeout

    def _argv(self, path):
        return shlex.split(self.command) + [path]

    def evaluate(self, space, h):
        h = Homotop.parse(h) if isinstance(h, str) else h
        text = format_xyz(homotop_geometry(space, h), comment=f"homotop {h.id}")
        fd, path = tempfile.mkstemp(prefix=f"homotop_{h.id or 'none'}_", suffix=".xyz")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            try:
                proc = subprocess.run(self._argv(path), capture_output=True, text=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise OracleError(f"could not run energy command for {h.id!r}: {exc}") from exc
        finally:
            os.unlink(path)
        if proc.returncode != 0:
            raise OracleError(f"energy command exited with status {proc.returncode} for {h.id!r}", proc.stderr)
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if not lines:
            raise OracleError(f"energy command printed nothing for {h.id!r}", proc.stderr)
        token = lines[-1].split()[-1]
        try:
            value = float(token)
        except ValueError:
            raise OracleError(f"cannot parse energy {token!r} for {h.id!r}", proc.stderr) from None
        if not math.isfinite(value):
            raise OracleError(f"non-finite energy {token!r} for {h.id!r}", proc.stderr)
        return value


def oracle_evaluate(oracle, space, h):
    """Energy of homotop ``h`` in Hartree."""
    return float(oracle.evaluate(space, h))


# --- energy table CSV -----------------------------------------------------


def parse_energy_table(text):
    reader = csv.reader(io.StringIO(text, newline=""))
    records = []
    seen = set()
    for lineno, row in enumerate(reader, start=1):
        if lineno == 1:
            if tuple(c.strip() for c in row) != TABLE_HEADER:
                raise ParseError(f"header must be {','.join(TABLE_HEADER)!r}, got {','.join(row)!r}", 1)
            continue
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
        hid, value = row[0].strip(), row[1].strip()
        try:
            Homotop.parse(hid)
            energy = float(value)
        except ValueError:
            raise ParseError(f"malformed record {','.join(row)!r}", lineno) from None
        if not math.isfinite(energy):
            raise ParseError(f"non-finite energy {value!r}", lineno)
        if hid in seen:
            raise DuplicateRecordError(f"line {lineno}: duplicate homotop id {hid!r}")
        seen.add(hid)
        records.append((hid, energy))
    if not records and not text.strip():
        raise ParseError("empty file, header missing", 1)
    return records


def read_energy_table(path):
    """List of (homotop_id, energy) pairs; LF or CRLF line endings."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_energy_table(fh.read())


def write_energy_table(records, path):
    if isinstance(records, dict):
        records = list(records.items())
    ids = [r[0] for r in records]
    if len(set(ids)) != len(ids):
        raise DuplicateRecordError("duplicate homotop ids in records")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TABLE_HEADER) + "\n")
        for hid, energy in records:
            fh.write(f"{hid},{float(energy)!r}\n")
    return Path(path)
