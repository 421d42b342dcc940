import math
import sys
import textwrap

import numpy as np
import pytest

from qalsearch.config import DEFAULT_GEOMETRY
from qalsearch.descriptors import Geometry, read_xyz
from qalsearch.errors import (
    DomainError,
    DuplicateRecordError,
    MissingRecordError,
    OracleError,
    ParseError,
    QubitIndexError,
)
from qalsearch.space import (
    CandidateSpace,
    CommandOracle,
    Homotop,
    TableOracle,
    ToyOracle,
    enumerate_homotops,
    homotop_geometry,
    oracle_evaluate,
    parse_energy_table,
    read_energy_table,
    write_energy_table,
)


def square_host(side=2.5):
    pos = [[0, 0, 0], [side, 0, 0], [side, side, 0], [0, side, 0]]
    return Geometry(("Si",) * 4, pos)


def test_eleven_choose_four():
    hs = enumerate_homotops(11, 4)
    assert len(hs) == 330
    ids = [h.id for h in hs]
    assert len(set(ids)) == 330
    assert ids[0] == "0-1-2-3" and ids[-1] == "7-8-9-10"
    assert all(Homotop.parse(i) == h for i, h in zip(ids, hs))


def test_small_order():
    assert [h.id for h in enumerate_homotops(4, 2)] == ["0-1", "0-2", "0-3", "1-2", "1-3", "2-3"]


def test_no_dopants():
    hs = enumerate_homotops(4, 0)
    assert len(hs) == 1 and hs[0].id == ""
    assert Homotop.parse("") == hs[0]


@pytest.mark.parametrize("n", range(0, 21, 4))
def test_counts_are_binomial(n):
    for k in range(0, n + 1, 3):
        hs = enumerate_homotops(n, k)
        assert len(hs) == math.comb(n, k)
        assert hs == sorted(hs)


@pytest.mark.parametrize("args", [(3, 4), (-1, 0), (4, -1)])
def test_invalid_counts(args):
    with pytest.raises(DomainError):
        enumerate_homotops(*args)


@pytest.mark.parametrize("text", ["1-1", "2-1", "a-b", "-1"])
def test_bad_homotop_ids(text):
    with pytest.raises(ValueError):
        Homotop.parse(text)


def test_homotop_geometry():
    space = CandidateSpace(square_host(), 2, "Al")
    g = homotop_geometry(space, "0-2")
    assert g.elements == ("Al", "Si", "Al", "Si")
    np.testing.assert_array_equal(g.positions, space.host.positions)
    with pytest.raises(QubitIndexError):
        homotop_geometry(space, "1-7")
    with pytest.raises(ValueError):
        homotop_geometry(space, "1")


def test_space_too_many_dopants():
    with pytest.raises(DomainError):
        CandidateSpace(square_host(), 5)


def test_toy_two_atoms():
    host = Geometry(("Si", "Si"), [[0, 0, 0], [0, 0, 2.0]])
    space = CandidateSpace(host, 1, "Al")
    oracle = ToyOracle(j_sial=-1.0, rho=2.0)
    assert oracle.evaluate(space, "0") == pytest.approx(-math.exp(-1.0), abs=1e-15)
    assert oracle.evaluate(space, "1") == oracle.evaluate(space, "0")


def test_toy_square_symmetry():
    space = CandidateSpace(square_host(), 2, "Al")
    e = ToyOracle().tabulate(space)
    # adjacent pairs are all equivalent, as are the two diagonals
    adjacent = [e[i] for i in ("0-1", "1-2", "2-3", "0-3")]
    diagonal = [e[i] for i in ("0-2", "1-3")]
    assert max(adjacent) - min(adjacent) < 1e-14
    assert abs(diagonal[0] - diagonal[1]) < 1e-14
    assert abs(adjacent[0] - diagonal[0]) > 1e-3


def test_toy_species_blind_is_constant():
    space = CandidateSpace(read_xyz(DEFAULT_GEOMETRY), 4, "Al")
    flat = ToyOracle(j_sisi=0.7, j_sial=0.7, j_alal=0.7)
    values = np.array(list(flat.tabulate(space).values()))
    assert np.ptp(values) < 1e-12


def test_shipped_landscape_has_unique_minimum():
    space = CandidateSpace(read_xyz(DEFAULT_GEOMETRY), 4, "Al")
    values = np.sort(np.array(list(ToyOracle().tabulate(space).values())))
    assert len(values) == 330
    assert values[1] - values[0] > 1e-3


def test_table_oracle():
    space = CandidateSpace(square_host(), 2, "Al")
    oracle = TableOracle({"0-1": -1.5, "0-2": -2.5})
    assert oracle_evaluate(oracle, space, "0-2") == -2.5
    with pytest.raises(MissingRecordError):
        oracle.evaluate(space, "1-3")
    with pytest.raises(MissingRecordError):
        oracle.tabulate(space)


def test_table_round_trip(tmp_path):
    records = [("0-1-2-3", -12.345678901234567), ("0-1-2-4", 1e-300), ("", -0.1)]
    path = write_energy_table(records, tmp_path / "t.csv")
    assert read_energy_table(path) == records
    assert path.read_text().splitlines()[0] == "homotop_id,energy_hartree"


def test_table_crlf():
    text = "homotop_id,energy_hartree\r\n0-1,-1.25\r\n0-2,-2.5\r\n"
    assert parse_energy_table(text) == [("0-1", -1.25), ("0-2", -2.5)]


def test_header_only():
    assert parse_energy_table("homotop_id,energy_hartree\n") == []


@pytest.mark.parametrize(
    "text, line",
    [
        ("homotop_id,energy_hartree\n0-1-2-3,abc\n", 2),
        ("id,energy\n0-1,1.0\n", 1),
        ("homotop_id,energy_hartree\n0-1,1.0\n0-2\n", 3),
        ("homotop_id,energy_hartree\n0-1,nan\n", 2),
        ("", 1),
    ],
)
def test_table_parse_errors(text, line):
    with pytest.raises(ParseError) as err:
        parse_energy_table(text)
    assert err.value.lineno == line


def test_table_duplicates(tmp_path):
    with pytest.raises(DuplicateRecordError):
        parse_energy_table("homotop_id,energy_hartree\n0-1,1.0\n0-1,2.0\n")
    with pytest.raises(DuplicateRecordError):
        write_energy_table([("0-1", 1.0), ("0-1", 2.0)], tmp_path / "d.csv")


@pytest.fixture
def script(tmp_path):
    def make(body):
        path = tmp_path / "energy.py"
        path.write_text(textwrap.dedent(body))
        return f"{sys.executable} {path}"

    return make


def test_command_oracle_success(script):
    cmd = script(
        """
        import sys
        lines = open(sys.argv[1]).read().splitlines()
        n_al = sum(1 for ln in lines[2:] if ln.startswith("Al"))
        print("relaxing...")
        print(f"Total energy: {-1.0 - 0.25 * n_al}")
        print()
        """
    )
    space = CandidateSpace(square_host(), 2, "Al")
    assert CommandOracle(cmd).evaluate(space, "0-1") == -1.5


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("import sys\nsys.stderr.write('boom')\nsys.exit(3)\n", "status 3"),
        ("pass\n", "printed nothing"),
        ("print('energy = lots')\n", "cannot parse"),
        ("print('inf')\n", "non-finite"),
    ],
)
def test_command_oracle_failures(script, body, fragment):
    space = CandidateSpace(square_host(), 2, "Al")
    with pytest.raises(OracleError) as err:
        CommandOracle(script(body)).evaluate(space, "0-1")
    assert fragment in str(err.value)
    if "status" in fragment:
        assert err.value.stderr == "boom"


def test_command_oracle_missing_program():
    space = CandidateSpace(square_host(), 2, "Al")
    with pytest.raises(OracleError):
        CommandOracle("/nonexistent/energy-program").evaluate(space, "0-1")
