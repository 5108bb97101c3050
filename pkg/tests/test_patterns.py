import random

import pytest
from hypothesis import given, settings, strategies as st

from molfrag.molgraph import BondLabel, LabeledDataset, MolecularGraph, parse_smiles
from molfrag.patterns import (
    GraphPattern,
    PatternError,
    PatternLanguage,
    SequencePattern,
    TreePattern,
    WalkPattern,
    candidate_children,
    canonical_code,
    convert,
    initial_patterns,
    make_pattern,
    occurrences,
    occurs,
    pattern_from_code,
    refine,
    single_edge,
)
from oracles import brute_occurs, brute_patterns, nx_isomorphic, random_dataset, random_molecule, to_nx

S, D, A = BondLabel.SINGLE, BondLabel.DOUBLE, BondLabel.AROMATIC
LANGS = ("sequence", "tree", "graph")
BENZENE = parse_smiles("c1ccccc1")
HEXANE = parse_smiles("CCCCCC")


def ring(n, label="C", bond=A):
    return make_pattern("graph", [label] * n, [(i, (i + 1) % n, bond) for i in range(n)])


def refine_closure(dataset, language):
    """Every pattern reached from the single edges, with duplicates kept."""
    seen = []
    stack = list(initial_patterns(language, dataset))
    while stack:
        pattern, occ = stack.pop()
        seen.append((pattern, occ))
        stack.extend(refine(pattern, language, dataset))
    return seen


def relabel(labels, edges, rng):
    perm = list(range(len(labels)))
    rng.shuffle(perm)
    new_labels = [None] * len(labels)
    for old, new in enumerate(perm):
        new_labels[new] = labels[old]
    new_edges = [(perm[u], perm[v], b) if rng.random() < 0.5 else (perm[v], perm[u], b) for u, v, b in edges]
    rng.shuffle(new_edges)
    return new_labels, new_edges


def random_connected_pattern(rng, language, n_max=6):
    """A random connected labeled shape admissible in ``language``."""
    mol = random_molecule(rng, 2, n_max, max_extra=0 if language != "graph" else 3)
    if language == "sequence":
        n = mol.n_vertices
        edges = [(i, i + 1, rng.choice((S, D))) for i in range(n - 1)]
        return make_pattern(language, mol.vertices, edges)
    return make_pattern(language, mol.vertices, mol.edges)


class TestOccurs:
    def test_single_bonded_sequence_not_in_benzene(self, backend):
        assert not occurs(make_pattern("sequence", "CCC", [(0, 1, S), (1, 2, S)]), BENZENE)

    def test_aromatic_sequence_in_benzene(self, backend):
        p = make_pattern("sequence", "CCC", [(0, 1, A), (1, 2, A)])
        assert occurs(p, BENZENE)
        assert brute_occurs(p.labels, p.edges, BENZENE)

    def test_ring_in_benzene_not_hexane(self, backend):
        p = ring(6)
        assert occurs(p, BENZENE) and brute_occurs(p.labels, p.edges, BENZENE)
        assert not occurs(p, HEXANE) and not brute_occurs(p.labels, p.edges, HEXANE)

    def test_non_induced(self, backend):
        # a path C-C-C also matches three consecutive atoms of cyclopropane
        p = make_pattern("sequence", "CCC", [(0, 1, S), (1, 2, S)])
        assert occurs(p, parse_smiles("C1CC1"))

    def test_sequence_must_be_injective(self, backend):
        # a 4-atom path cannot fold back onto a 3-ring
        p = make_pattern("sequence", "CCCC", [(0, 1, S), (1, 2, S), (2, 3, S)])
        assert not occurs(p, parse_smiles("C1CC1"))

    def test_occurrences_restricted(self, backend):
        ds = LabeledDataset([BENZENE, HEXANE, BENZENE], [1, 0, 1])
        assert occurrences(ring(6), ds) == [0, 2]
        assert occurrences(ring(6), ds, [1, 2]) == [2]

    @settings(max_examples=60)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS))
    def test_matches_brute_force(self, backend, seed, language):
        rng = random.Random(seed)
        p = random_connected_pattern(rng, language, n_max=4)
        mol = random_molecule(rng, 2, 7, labels=("C", "N"), max_extra=3)
        assert occurs(p, mol) == brute_occurs(p.labels, p.edges, mol)


class TestCanonicalCode:
    def test_orientation(self):
        assert single_edge("sequence", "C", S, "N").code == single_edge("sequence", "N", S, "C").code

    def test_language_tags_differ(self):
        edges = [(0, 1, S), (1, 2, S)]
        codes = {make_pattern(lang, "CCC", edges).code for lang in LANGS}
        assert len(codes) == 3
        assert {c[:2] for c in codes} == {"S:", "T:", "G:"}

    def test_six_vertex_permutations(self):
        rng = random.Random(11)
        labels = ["C", "N", "C", "O", "C", "C"]
        edges = [(0, 1, S), (1, 2, D), (2, 3, S), (3, 4, S), (4, 5, S), (5, 0, S), (1, 4, S)]
        ref = make_pattern("graph", labels, edges).code
        for _ in range(2):
            assert make_pattern("graph", *relabel(labels, edges, rng)).code == ref

    def test_non_isomorphic_graphs_differ(self):
        a = make_pattern("graph", "CCCC", [(0, 1, S), (1, 2, S), (2, 3, S), (3, 0, S)])
        b = make_pattern("graph", "CCCC", [(0, 1, S), (1, 2, S), (2, 0, S), (2, 3, S)])
        assert a.code != b.code

    def test_tree_centre_rooting(self):
        # the same star written from different centres of numbering
        t1 = make_pattern("tree", "NCCO", [(0, 1, S), (1, 2, S), (1, 3, D)])
        t2 = make_pattern("tree", "COCN", [(0, 1, D), (0, 2, S), (0, 3, S)])
        assert t1.code == t2.code

    def test_bicentred_tree(self):
        t1 = make_pattern("tree", "CCNN", [(0, 1, S), (1, 2, S), (2, 3, S)])
        t2 = make_pattern("tree", "NNCC", [(0, 1, S), (1, 2, S), (2, 3, S)])
        assert t1.code == t2.code

    def test_language_admission(self):
        with pytest.raises(PatternError):
            make_pattern("sequence", "CCCC", [(0, 1, S), (0, 2, S), (0, 3, S)])
        with pytest.raises(PatternError):
            make_pattern("tree", "CCC", [(0, 1, S), (1, 2, S), (2, 0, S)])
        with pytest.raises(PatternError):
            make_pattern("graph", "CCC", [(0, 1, S)])

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS))
    def test_invariant_under_relabeling(self, seed, language):
        rng = random.Random(seed)
        p = random_connected_pattern(rng, language)
        for _ in range(100):
            assert make_pattern(language, *relabel(p.labels, p.edges, rng)).code == p.code

    @settings(max_examples=60)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS))
    def test_code_round_trip(self, seed, language):
        p = random_connected_pattern(random.Random(seed), language)
        q = pattern_from_code(p.code)
        assert q.code == p.code == canonical_code(q)
        assert nx_isomorphic(to_nx(p.labels, p.edges), to_nx(q.labels, q.edges))

    @pytest.mark.parametrize("code", ["S:C", "X:C-C", "G:(0,1,C,-,C)(0,2,C,-,C", "S:N-C", "G:(0,1,N,-,C)(0,2,C,-,C)"])
    def test_bad_codes(self, code):
        with pytest.raises(PatternError):
            pattern_from_code(code)

    def test_walk_code(self):
        w = WalkPattern("NCC", (S, S))
        assert w.code == "W:C-C-N"
        assert pattern_from_code(w.code).code == w.code


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_language_inclusion(seed):
    """A sequence reinterpreted as tree and graph matches the same molecules."""
    rng = random.Random(seed)
    seq = random_connected_pattern(rng, "sequence", n_max=5)
    tree = random_connected_pattern(rng, "tree", n_max=5)
    mols = [random_molecule(rng, 2, 8, labels=("C", "N"), max_extra=3) for _ in range(6)]
    for m in mols:
        assert occurs(seq, m) == occurs(convert(seq, "tree"), m) == occurs(convert(seq, "graph"), m)
        assert occurs(tree, m) == occurs(convert(tree, "graph"), m)
    assert isinstance(convert(seq, "tree"), TreePattern)
    assert isinstance(convert(tree, "graph"), GraphPattern)


class TestRefine:
    def test_propane(self, backend):
        ds = LabeledDataset([parse_smiles("CCC")], [1])
        for language in LANGS:
            kids = refine(single_edge(language, "C", S, "C"), language, ds)
            assert [p.n_edges for p, _ in kids] == [2]
            assert kids[0][1] == [0]

    def test_pattern_must_occur(self):
        ds = LabeledDataset([], [])
        with pytest.raises(PatternError):
            refine(single_edge("graph", "C", S, "C"), "graph", ds)

    def test_toy_closure_matches_brute_force(self, backend):
        ds = LabeledDataset(
            [parse_smiles(s) for s in ("C1CC1N", "CC(C)C=O", "c1ccncc1", "OCCN", "C1CCC1C")],
            [1, 0, 1, 0, 1],
        )
        for language in LANGS:
            _check_closure(ds, language, max_edges=6)

    @settings(max_examples=15)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS))
    def test_random_closure_matches_brute_force(self, seed, language):
        ds = random_dataset(random.Random(seed), n_mols=random.Random(seed).randint(2, 8))
        _check_closure(ds, language)

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS))
    def test_support_anti_monotone(self, seed, language):
        ds = random_dataset(random.Random(seed))
        for pattern, occ in initial_patterns(language, ds):
            stack = [(pattern, occ)]
            while stack:
                parent, pocc = stack.pop()
                for child, cocc in refine(parent, language, ds):
                    assert set(cocc) <= set(pocc)
                    assert cocc == occurrences(child, ds)
                    stack.append((child, cocc))

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS), st.integers(1, 6))
    def test_keep_filter_only_drops_rejected_children(self, seed, language, min_support):
        ds = random_dataset(random.Random(seed))
        for pattern, occ in initial_patterns(language, ds)[:8]:
            full = candidate_children(pattern, ds.batch, occ)
            kept = candidate_children(pattern, ds.batch, occ, keep=lambda o: len(o) >= min_support)
            kept_codes = {c.code: o for c, o in kept}
            assert all(kept_codes[c.code] == o for c, o in full if c.code in kept_codes)
            assert set(kept_codes) <= {c.code for c, _ in full}
            assert {c.code for c, o in full if len(o) >= min_support} <= set(kept_codes)


def _check_closure(ds, language, max_edges=None):
    found = refine_closure(ds, language)
    if max_edges is not None:
        found = [(p, o) for p, o in found if p.n_edges <= max_edges]
    codes = [p.code for p, _ in found]
    assert len(codes) == len(set(codes)), "duplicate pattern emitted"
    by_code = {p.code: (p, o) for p, o in found}
    truth = brute_patterns(ds, language, max_edges)
    assert len(truth) == len(found)
    for labels, edges, support in truth:
        p, occ = by_code[make_pattern(language, labels, edges).code]
        assert set(occ) == support
        assert nx_isomorphic(to_nx(labels, edges), to_nx(p.labels, p.edges))


def test_language_enum_parse():
    assert PatternLanguage.parse("Graphs") is PatternLanguage.GRAPH
    assert PatternLanguage.parse("seq") is PatternLanguage.SEQUENCE
    with pytest.raises(ValueError):
        PatternLanguage.parse("cycles")


def test_sequence_constructor_orients():
    assert SequencePattern("NC", [S]).atoms == ("C", "N")
