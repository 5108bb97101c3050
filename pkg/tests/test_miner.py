import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from molfrag.miner import (
    ContingencyTable,
    MiningError,
    MiningTask,
    ScoredPattern,
    Threshold,
    TopK,
    chi2,
    chi2_quantile,
    chi2_upper_bound,
    enumerate_restricted_paths,
    mine,
    mine_threshold,
    mine_topk,
    read_fragments_tsv,
    write_fragments_tsv,
)
from molfrag.molgraph import BondLabel, LabeledDataset, MolecularGraph, parse_smiles
from molfrag.patterns import make_pattern, occurs
from oracles import (
    brute_occurs,
    brute_patterns,
    brute_scored,
    brute_walk_strings,
    chi2_direct,
    random_dataset,
    random_molecule,
)

LANGS = ("sequence", "tree", "graph")


def planted_dataset(seed=0, n=10):
    """B-B in every active molecule and in no inactive one, on all-carbon skeletons.

    Boron sorts before carbon, so the planted edge also wins the code tie-break
    against its equally pure extensions.
    """
    rng = random.Random(seed)
    mols, labels = [], []
    for i in range(2 * n):
        m = random_molecule(rng, 3, 7, labels=("C",), bonds=(BondLabel.SINGLE,), max_extra=1)
        verts, edges = list(m.vertices), list(m.edges)
        if i < n:
            a = rng.randrange(len(verts))
            verts += ["B", "B"]
            edges += [(a, len(verts) - 2, 1), (len(verts) - 2, len(verts) - 1, 1)]
        mols.append(MolecularGraph(verts, edges, id=str(i)))
        labels.append(1 if i < n else 0)
    return LabeledDataset(mols, labels, name="planted")


def ranked(scored):
    return [(sp.code, sp.chi2) for sp in scored]


class TestChi2:
    def test_examples(self):
        assert chi2(ContingencyTable(5, 0, 5, 5)) == 10.0
        assert chi2(ContingencyTable(4, 4, 10, 10)) == 0.0
        assert chi2(ContingencyTable(3, 1, 10, 10)) == pytest.approx(1.25, abs=1e-12)
        assert chi2_direct(3, 1, 10, 10) == pytest.approx(1.25, abs=1e-12)

    def test_empty_marginal(self):
        assert chi2(ContingencyTable(0, 0, 3, 4)) == 0.0
        assert chi2(ContingencyTable(3, 4, 3, 4)) == 0.0

    @pytest.mark.parametrize("args", [(-1, 0, 2, 2), (3, 0, 2, 2), (0, 0, 0, 2), (0, 3, 2, 2)])
    def test_invalid_table(self, args):
        with pytest.raises(ValueError):
            ContingencyTable(*args)

    @given(st.integers(1, 60), st.integers(1, 60), st.data())
    def test_matches_expected_count_form(self, P, N, data):
        p = data.draw(st.integers(0, P))
        n = data.draw(st.integers(0, N))
        assert chi2(ContingencyTable(p, n, P, N)) == pytest.approx(chi2_direct(p, n, P, N), rel=1e-12, abs=1e-12)

    def test_bound_examples(self):
        assert chi2_upper_bound(ContingencyTable(5, 0, 5, 5)) == 10.0
        assert chi2_upper_bound(ContingencyTable(0, 0, 5, 5)) == 0.0
        expected = max(chi2_direct(3, 0, 10, 10), chi2_direct(0, 2, 10, 10))
        assert chi2_upper_bound(ContingencyTable(3, 2, 10, 10)) == pytest.approx(expected)
        assert expected == pytest.approx(3.529, abs=5e-4)

    @given(st.integers(1, 40), st.integers(1, 40), st.data())
    def test_bound_dominates_every_sub_table(self, P, N, data):
        p = data.draw(st.integers(0, P))
        n = data.draw(st.integers(0, N))
        bound = chi2_upper_bound(ContingencyTable(p, n, P, N))
        p2 = data.draw(st.integers(0, p))
        n2 = data.draw(st.integers(0, n))
        assert chi2(ContingencyTable(p2, n2, P, N)) <= bound + 1e-12


class TestQuantile:
    @pytest.mark.parametrize("level, value", [(0.95, 3.8415), (0.99, 6.6349), (0.999, 10.8276)])
    def test_levels(self, level, value):
        assert chi2_quantile(level) == pytest.approx(value, abs=5e-4)

    def test_numeric_integration(self):
        # P(chi2_1 <= x) = erf(sqrt(x / 2)); check the returned critical values directly
        for level in (0.95, 0.99, 0.999):
            assert math.erf(math.sqrt(chi2_quantile(level) / 2)) == pytest.approx(level, abs=1e-9)

    def test_unsupported(self):
        with pytest.raises(ValueError):
            chi2_quantile(0.9)


class TestTopK:
    def test_planted_top1(self, backend):
        ds = planted_dataset()
        truth = brute_scored(ds, "graph")
        best = [r for r in truth if r[1] == truth[0][1]]
        top = mine_topk(MiningTask("graph", TopK(1), ds))
        assert len(top) == 1
        assert top[0].chi2 == 20.0
        assert top[0].code == min(r[0] for r in best) == make_pattern("graph", "BB", [(0, 1, 1)]).code

    def test_k_larger_than_pattern_count(self, backend):
        ds = LabeledDataset([parse_smiles("CCO"), parse_smiles("CN")], [1, 0])
        for language in LANGS:
            got = mine_topk(MiningTask(language, TopK(1000), ds))
            assert len(got) == len(brute_scored(ds, language))

    def test_single_class(self):
        ds = LabeledDataset([parse_smiles("CC")], [1])
        with pytest.raises(MiningError, match="undefined correlation"):
            mine_topk(MiningTask("graph", TopK(3), ds))
        with pytest.raises(MiningError, match="undefined correlation"):
            mine_threshold(MiningTask("graph", Threshold(1.0), ds))

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            TopK(0)
        with pytest.raises(ValueError):
            Threshold(-1.0)

    def test_kth_scores_ordered_by_language(self, backend):
        ds = random_dataset(random.Random(4), n_mols=20)
        scores = {lang: [sp.chi2 for sp in mine_topk(MiningTask(lang, TopK(50), ds))] for lang in LANGS}
        assert len(scores["sequence"]) == 50
        for i in range(50):
            assert scores["sequence"][i] <= scores["tree"][i] <= scores["graph"][i]

    @settings(max_examples=20)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS), st.integers(1, 50))
    def test_matches_brute_force(self, backend, seed, language, k):
        ds = random_dataset(random.Random(seed))
        truth = brute_scored(ds, language)
        got = mine_topk(MiningTask(language, TopK(k), ds))
        assert [c for c, *_ in truth[:k]] == [sp.code for sp in got]
        for (_, score, p, n), sp in zip(truth, got):
            assert sp.chi2 == pytest.approx(score, abs=1e-9)
            assert (sp.table.p, sp.table.n) == (p, n)

    def test_repeatable_and_backend_independent(self):
        from molfrag import _kernels

        ds = random_dataset(random.Random(5), n_mols=20)
        runs = []
        previous = _kernels.BACKEND
        try:
            for name in _kernels.available_backends() * 2:
                _kernels.use_backend(name)
                runs.append(ranked(mine_topk(MiningTask("graph", TopK(40), ds))))
        finally:
            _kernels.use_backend(previous)
        assert all(r == runs[0] for r in runs)


class TestThreshold:
    def test_unreachable(self, backend):
        assert mine_threshold(MiningTask("graph", Threshold(1e9), planted_dataset())) == []

    def test_planted_pure_set(self, backend):
        ds = planted_dataset(seed=2)
        for language in LANGS:
            truth = [r for r in brute_scored(ds, language) if r[1] >= 20.0]
            got = mine(MiningTask(language, Threshold(20.0), ds))
            assert [sp.code for sp in got] == [r[0] for r in truth]
            assert all(sp.chi2 == 20.0 for sp in got)

    @settings(max_examples=20)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS), st.floats(0.0, 8.0))
    def test_matches_brute_force(self, backend, seed, language, t):
        ds = random_dataset(random.Random(seed))
        truth = brute_scored(ds, language)
        got = mine_threshold(MiningTask(language, Threshold(t), ds))
        codes = {sp.code for sp in got}
        assert {c for c, score, *_ in truth if score >= t + 1e-9} <= codes
        assert codes <= {c for c, score, *_ in truth if score >= t - 1e-9}
        assert got == sorted(got, key=lambda sp: (-sp.chi2, sp.code))

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(LANGS), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
    def test_containment(self, seed, language, t1, t2):
        lo, hi = sorted((t1, t2))
        ds = random_dataset(random.Random(seed))
        a = {sp.code for sp in mine_threshold(MiningTask(language, Threshold(lo), ds))}
        b = {sp.code for sp in mine_threshold(MiningTask(language, Threshold(hi), ds))}
        assert b <= a


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_bound_admissible_over_brute_force_pairs(seed):
    """For q' contained in q, chi2(q) never exceeds the bound at q'."""
    ds = random_dataset(random.Random(seed), n_mols=8, n_max=6)
    P = sum(ds.labels)
    N = len(ds) - P
    pats = brute_patterns(ds, "graph")

    def table(support):
        p = sum(ds.labels[m] for m in support)
        return ContingencyTable(p, len(support) - p, P, N)

    for l1, e1, s1 in pats:
        bound = chi2_upper_bound(table(s1))
        for l2, e2, s2 in pats:
            if len(e2) >= len(e1) and brute_occurs(l1, e1, MolecularGraph(l2, e2)):
                assert chi2(table(s2)) <= bound + 1e-12


class TestRestrictedPaths:
    def test_single_edge(self):
        ds = LabeledDataset([parse_smiles("CC"), parse_smiles("CC")], [1, 0])
        got = enumerate_restricted_paths(ds, 10, 1)
        assert [sp.code for sp in got] == ["W:C-C"]

    def test_benzene_walks_wrap_around(self, backend):
        ds = LabeledDataset([parse_smiles("c1ccccc1"), parse_smiles("C1CC1")], [1, 0])
        got = {sp.code for sp in enumerate_restricted_paths(ds, 8, 1)}
        expected = {"W:" + s for m in ds.molecules for s in brute_walk_strings(m, 8)}
        assert got == expected
        # a triangle admits walks longer than any simple path in it
        assert "W:C-C-C-C-C" in got

    def test_min_freq_and_scores(self):
        ds = LabeledDataset([parse_smiles("CCO"), parse_smiles("CCN"), parse_smiles("CC")], [1, 1, 0])
        got = enumerate_restricted_paths(ds, 3, 2)
        assert [sp.code for sp in got] == ["W:C-C"]
        assert got[0].table == ContingencyTable(2, 1, 2, 1)

    def test_arguments(self):
        ds = LabeledDataset([parse_smiles("CC"), parse_smiles("CC")], [1, 0])
        with pytest.raises(ValueError):
            enumerate_restricted_paths(ds, 0, 1)
        with pytest.raises(MiningError):
            enumerate_restricted_paths(ds.subset([0]), 3, 1)

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_matches_walk_oracle_and_covers_sequences(self, backend, seed, L):
        ds = random_dataset(random.Random(seed))
        got = enumerate_restricted_paths(ds, L, 1)
        expected = {"W:" + s for m in ds.molecules for s in brute_walk_strings(m, L)}
        assert {sp.code for sp in got} == expected
        seqs = {c for c, *_ in brute_scored(ds, "sequence", max_edges=L)}
        assert len(got) >= len(seqs)
        assert {"W:" + c[2:] for c in seqs} <= expected


def test_fragment_tsv_round_trip():
    ds = planted_dataset()
    scored = mine_topk(MiningTask("tree", TopK(12), ds))
    text = write_fragments_tsv(scored)
    lines = text.splitlines()
    assert lines[0] == "rank\tcanonical_code\tchi2\tp\tn\tP\tN"
    assert lines[1].startswith("1\t")
    back = read_fragments_tsv(text)
    assert [(sp.code, sp.chi2, sp.table) for sp in back] == [(sp.code, sp.chi2, sp.table) for sp in scored]
    with pytest.raises(ValueError):
        read_fragments_tsv("x\ty\n")


def test_scored_pattern_support():
    sp = ScoredPattern(make_pattern("sequence", "CC", [(0, 1, 1)]), ContingencyTable(2, 3, 5, 5), 0.4)
    assert sp.support == 5 and sp.code == "S:C-C"
