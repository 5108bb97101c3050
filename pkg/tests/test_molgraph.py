import random

import pytest
from hypothesis import given, strategies as st

from molfrag.molgraph import (
    BondLabel,
    LabeledDataset,
    MolecularGraph,
    MoleculeError,
    SmilesError,
    StereoError,
    TransactionFormatError,
    load_dataset,
    parse_smiles,
    parse_transactions,
    read_smiles_file,
    write_transactions,
)
from oracles import brute_isomorphic, random_dataset


def _cycle(n, bond):
    return [(i, (i + 1) % n, bond) for i in range(n)]


class TestBondLabel:
    def test_order_and_codes(self):
        assert list(BondLabel) == [BondLabel.SINGLE, BondLabel.DOUBLE, BondLabel.TRIPLE, BondLabel.AROMATIC]
        assert sorted(BondLabel, reverse=True)[0] is BondLabel.AROMATIC
        assert [b.symbol for b in BondLabel] == ["-", "=", "#", ":"]
        assert BondLabel.from_symbol("#") is BondLabel.TRIPLE

    def test_unknown_symbol(self):
        with pytest.raises(ValueError):
            BondLabel.from_symbol("~")


class TestMolecularGraph:
    def test_normalizes_edges(self):
        g = MolecularGraph(["C", "O"], [(1, 0, 2)])
        assert g.edges == ((0, 1, BondLabel.DOUBLE),)
        assert g.adjacency[1] == {0: BondLabel.DOUBLE}

    @pytest.mark.parametrize("verts, edges", [
        (["C", "C"], [(0, 0, 1)]),
        (["C", "C"], [(0, 1, 1), (1, 0, 2)]),
        (["C", "C"], [(0, 2, 1)]),
        (["C", "H"], [(0, 1, 1)]),
        (["C x"], []),
    ])
    def test_rejects_invalid(self, verts, edges):
        with pytest.raises(MoleculeError):
            MolecularGraph(verts, edges)

    def test_connectivity(self):
        assert MolecularGraph(["C", "C", "C"], [(0, 1, 1), (1, 2, 1)]).is_connected()
        assert not MolecularGraph(["C", "C", "C"], [(0, 1, 1)]).is_connected()


class TestSmiles:
    def test_ethane(self):
        g = parse_smiles("CC")
        assert g.vertices == ("C", "C")
        assert g.edges == ((0, 1, BondLabel.SINGLE),)

    def test_cyclohexane(self):
        g = parse_smiles("C1CCCCC1")
        assert brute_isomorphic(g.vertices, g.edges, ["C"] * 6, _cycle(6, BondLabel.SINGLE))

    def test_benzene(self):
        g = parse_smiles("c1ccccc1")
        assert brute_isomorphic(g.vertices, g.edges, ["C"] * 6, _cycle(6, BondLabel.AROMATIC))

    def test_branches_and_bonds(self):
        g = parse_smiles("CC(=O)N#C")
        assert g.vertices == ("C", "C", "O", "N", "C")
        assert set(g.edges) == {(0, 1, 1), (1, 2, 2), (1, 3, 1), (3, 4, 3)}

    def test_two_letter_atoms_and_brackets(self):
        g = parse_smiles("ClC(Br)[NH3+][13C]")
        assert g.vertices == ("Cl", "C", "Br", "N", "C")

    def test_hydrogens_dropped(self):
        g = parse_smiles("[H]C([H])([H])O")
        assert g.vertices == ("C", "O")
        assert g.n_edges == 1

    def test_percent_ring_and_closure_bond(self):
        g = parse_smiles("C%12CCC=%12")
        assert (0, 3, BondLabel.DOUBLE) in g.edges
        g = parse_smiles("C=1CCC1")
        assert (0, 3, BondLabel.DOUBLE) in g.edges

    def test_aromatic_bracket_and_mixed(self):
        g = parse_smiles("c1cc[nH]c1C")
        assert sum(b == BondLabel.AROMATIC for *_, b in g.edges) == 5
        assert (4, 5, BondLabel.SINGLE) in g.edges

    @pytest.mark.parametrize("text", ["C(C", "CC)", "C1CC", "CXC", "C=1CCC#1", "C.C", "", "C=", "[Zz]"])
    def test_errors(self, text):
        with pytest.raises(SmilesError) as err:
            parse_smiles(text)
        assert not isinstance(err.value, StereoError)

    @pytest.mark.parametrize("text", ["F/C=C/F", "F\\C=C\\F", "N[C@@H](C)C(=O)O", "[C@H]"])
    def test_stereo_rejected(self, text):
        with pytest.raises(StereoError):
            parse_smiles(text)


_ATOMS = ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B", "c", "n", "[NH4+]", "[13C]", "[H]", "[O-]"]


@st.composite
def smiles_strings(draw):
    """Random strings over the supported grammar; many are malformed on purpose."""
    tokens = draw(st.lists(st.sampled_from(_ATOMS + ["(", ")", "=", "#", "1", "2", "%10"]), min_size=1, max_size=25))
    return "".join(tokens)


@given(smiles_strings())
def test_parsed_smiles_have_no_hydrogen_or_self_loop(text):
    try:
        g = parse_smiles(text)
    except SmilesError:
        return
    assert "H" not in g.vertices
    assert all(u != v for u, v, _ in g.edges)
    assert all(0 <= u < g.n_vertices and 0 <= v < g.n_vertices for u, v, _ in g.edges)


@given(smiles_strings(), st.integers(0, 30), st.sampled_from("/\\@"))
def test_stereo_marker_always_rejected(text, pos, marker):
    pos = min(pos, len(text))
    with pytest.raises(StereoError):
        parse_smiles(text[:pos] + marker + text[pos:])


class TestTransactions:
    def test_one_edge(self):
        ds = parse_transactions("t # 0 1\nv 0 C\nv 1 C\ne 0 1 1")
        assert len(ds) == 1 and ds.labels == (1,)
        assert ds.molecules[0].edges == ((0, 1, BondLabel.SINGLE),)

    def test_empty(self):
        assert len(parse_transactions("")) == 0
        assert write_transactions(LabeledDataset([], [])) == ""

    def test_write_one_edge(self):
        ds = LabeledDataset([MolecularGraph(["C", "C"], [(0, 1, 1)], id="0")], [1])
        assert write_transactions(ds) == "t # 0 1\nv 0 C\nv 1 C\ne 0 1 1\n"

    def test_comments_blank_lines_terminator(self):
        text = "# header\n\nt # 3 active\nv 0 C\n# mid\nt # 4 inactive\nv 0 N\nt # -1\nt # 5 1\nv 0 O\n"
        ds = parse_transactions(text)
        assert ds.labels == (1, 0)
        assert [m.id for m in ds.molecules] == ["3", "4"]

    @pytest.mark.parametrize("text, message", [
        ("t # 0 1\nv 0 C\nv 1 C\ne 0 5 1", "edge references unknown vertex"),
        ("t # 0 1\nv 0 C\nv 2 C", "non-consecutive vertex id"),
        ("t # 0 maybe\nv 0 C", "unknown class token"),
        ("t # 0 1\nx 0 C", "malformed line"),
        ("v 0 C", "before graph header"),
        ("t # 0 1\nv 0 C\nv 1 C\ne 0 1 7", "unknown bond code"),
        ("t # 0 1\nv 0 C\nv 1 C\ne 0 1", "malformed edge line"),
    ])
    def test_errors(self, text, message):
        with pytest.raises(TransactionFormatError, match=message):
            parse_transactions(text)

    def test_error_carries_line(self):
        with pytest.raises(TransactionFormatError) as err:
            parse_transactions("t # 0 1\nv 0 C\nv 1 C\ne 0 5 1")
        assert err.value.line == 4


@given(st.integers(0, 2**32 - 1))
def test_transaction_round_trip(seed):
    rng = random.Random(seed)
    ds = random_dataset(rng, n_mols=10, bonds=tuple(BondLabel), labels=("C", "N", "O", "Cl"))
    back = parse_transactions(write_transactions(ds))
    assert back.labels == ds.labels
    for a, b in zip(ds.molecules, back.molecules):
        assert brute_isomorphic(a.vertices, a.edges, b.vertices, b.edges)


def test_smiles_file_and_loader(tmp_path):
    text = "CCO\t1\nc1ccccc1\t0\n# comment\n\nCN\tinactive\n"
    ds = read_smiles_file(text)
    assert ds.labels == (1, 0, 0)
    with pytest.raises(SmilesError, match="line 1"):
        read_smiles_file("CC\n")
    path = tmp_path / "set.smi"
    path.write_text(text)
    assert load_dataset(path).name == "set"
    tx = tmp_path / "set.txt"
    tx.write_text(write_transactions(ds))
    assert load_dataset(tx).labels == ds.labels


def test_dataset_subset_and_validation():
    ds = parse_transactions("t # 0 1\nv 0 C\nt # 1 0\nv 0 N\n")
    assert ds.subset([1]).labels == (0,)
    assert ds.with_labels([0, 1]).labels == (0, 1)
    with pytest.raises(ValueError):
        LabeledDataset(ds.molecules, [1])
    with pytest.raises(ValueError):
        LabeledDataset(ds.molecules, [1, 2])
