import io
import json

import numpy as np
import pytest

from boa import bitset
from boa.data import (EQ, GEQ, LEQ, MISSING, NEQ, AttributeSchema, Literal, Schema, build_index,
                      expand_literals, load_csv, load_schema, save_schema)
from boa.datasets import breast_cancer_schema, tic_tac_toe_schema
from boa.exceptions import DataError, SchemaError

from conftest import random_table


class TestSchema:
    """Schema validation and round-trips."""

    def test_rejects_duplicate_levels(self):
        with pytest.raises(SchemaError):
            AttributeSchema("x", "categorical", ("a", "a"))

    def test_rejects_unknown_kind(self):
        with pytest.raises(SchemaError):
            AttributeSchema("x", "numeric", ("1",))

    def test_rejects_empty_levels(self):
        with pytest.raises(SchemaError):
            AttributeSchema("x", "ordinal", ())

    def test_json_round_trip(self, toy_schema, tmp_path):
        path = tmp_path / "schema.json"
        save_schema(toy_schema, path)
        assert load_schema(path) == toy_schema
        assert load_schema(path).fingerprint() == toy_schema.fingerprint()

    def test_fingerprint_sees_level_order(self, toy_schema):
        attrs = list(toy_schema.attributes)
        attrs[1] = AttributeSchema("size", "ordinal", ("l", "m", "s"))
        assert Schema(tuple(attrs), "y", "1").fingerprint() != toy_schema.fingerprint()


class TestLoadCsv:
    """CSV parsing, missing values and error reporting."""

    def test_three_rows(self, toy_schema):
        text = "color,size,y\nblue,s,1\nred,l,0\ngreen,m,1\n"
        table = load_csv(io.StringIO(text), toy_schema)
        assert table.n_records == 3
        assert (table.values != MISSING).all()
        assert table.labels.tolist() == [True, False, True]

    def test_unknown_level_names_row_and_column(self, toy_schema):
        text = "color,size,y\nblue,s,1\npurple,l,0\n"
        with pytest.raises(DataError, match=r"row 3.*'color'.*'purple'"):
            load_csv(io.StringIO(text), toy_schema)

    def test_unknown_column(self, toy_schema):
        with pytest.raises(DataError, match="unknown column"):
            load_csv(io.StringIO("color,size,shape,y\nblue,s,x,1\n"), toy_schema)

    def test_missing_file(self, toy_schema, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv", toy_schema)

    def test_missing_markers(self, toy_schema):
        table = load_csv(io.StringIO("color,size,y\n?,s,1\nred,,0\n"), toy_schema)
        assert table.values[0, 0] == MISSING
        assert table.values[1, 1] == MISSING

    def test_label_optional_on_request(self, toy_schema):
        table = load_csv(io.StringIO("color,size\nblue,s\n"), toy_schema, require_label=False)
        assert table.labels.tolist() == [False]
        with pytest.raises(DataError, match="missing column"):
            load_csv(io.StringIO("color,size\nblue,s\n"), toy_schema)

    def test_tic_tac_toe_shape(self, ttt_table):
        assert ttt_table.n_records == 958
        assert ttt_table.schema.n_attributes == 9
        assert all(a.n_levels == 3 for a in ttt_table.schema.attributes)
        assert int(ttt_table.labels.sum()) == 626

    def test_breast_cancer_shape(self, bc_table):
        assert bc_table.n_records == 699
        assert int(bc_table.labels.sum()) == 241
        assert int((bc_table.values == MISSING).sum()) == 16


class TestExpandLiterals:
    """Literal universe generated from a schema."""

    def test_categorical(self):
        s = Schema((AttributeSchema("c", "categorical", ("a", "b", "c")),))
        lits = expand_literals(s)
        assert len(lits) == 6
        assert [l.test for l in lits] == [EQ] * 3 + [NEQ] * 3

    def test_ordinal(self):
        s = Schema((AttributeSchema("o", "ordinal", ("1", "2", "3", "4")),))
        lits = expand_literals(s)
        assert len(lits) == 8
        assert {l.test for l in lits} == {GEQ, LEQ}

    def test_tic_tac_toe_count(self):
        assert len(expand_literals(tic_tac_toe_schema())) == 9 * (3 + 3)

    def test_without_negatives(self):
        assert len(expand_literals(tic_tac_toe_schema(), include_negative=False)) == 27

    def test_order_is_canonical(self, toy_schema):
        lits = expand_literals(toy_schema)
        assert list(lits) == sorted(lits)


class TestLiteral:
    """Single-literal tests on level indices."""

    def test_kind_mismatch(self, toy_schema):
        with pytest.raises(SchemaError):
            Literal(0, GEQ, 1).validate(toy_schema)
        with pytest.raises(SchemaError):
            Literal(1, EQ, 1).validate(toy_schema)

    def test_level_out_of_range(self, toy_schema):
        with pytest.raises(SchemaError):
            Literal(0, EQ, 3).validate(toy_schema)

    def test_json_round_trip(self, toy_schema):
        lit = Literal(1, LEQ, 2)
        assert Literal.from_json(json.loads(json.dumps(lit.to_json(toy_schema))), toy_schema) == lit


class TestBuildIndex:
    """Bitset coverage index."""

    def test_eq_and_neq_bits(self, toy_index):
        blue = toy_index.literal_coverage(Literal(0, EQ, 0))
        not_blue = toy_index.literal_coverage(Literal(0, NEQ, 0))
        assert bitset.unpack(blue, 8)[0]
        assert not bitset.unpack(not_blue, 8)[0]

    def test_missing_covers_nothing(self, toy_index):
        # record 5 has no color, record 4 no size
        for lit in toy_index.literal_universe:
            bits = bitset.unpack(toy_index.literal_coverage(lit), 8)
            if lit.attribute == 0:
                assert not bits[5]
            else:
                assert not bits[4]

    def test_matches_cell_by_cell(self, toy_schema, rng):
        table = random_table(rng, toy_schema, 5)
        index = build_index(table)
        for i, lit in enumerate(index.literal_universe):
            bits = bitset.unpack(index.coverage[i], 5)
            for r in range(5):
                v = table.values[r, lit.attribute]
                want = v != MISSING and {EQ: v == lit.level, NEQ: v != lit.level,
                                         GEQ: v >= lit.level, LEQ: v <= lit.level}[lit.test]
                assert bits[r] == want

    def test_counts(self, toy_index):
        assert toy_index.n_pos == 4 and toy_index.n_neg == 4
        assert toy_index.n_pos + toy_index.n_neg == toy_index.n_records

    def test_categorical_exactly_one_eq(self, ttt_index, ttt_table):
        n = ttt_index.n_records
        for j in range(9):
            eq = sum(bitset.unpack(ttt_index.literal_coverage(Literal(j, EQ, k)), n).astype(int) for k in range(3))
            neq = sum(bitset.unpack(ttt_index.literal_coverage(Literal(j, NEQ, k)), n).astype(int) for k in range(3))
            assert (eq == 1).all() and (neq == 2).all()

    def test_ordinal_threshold_counts(self, bc_table):
        index = build_index(bc_table)
        n = index.n_records
        schema = bc_table.schema
        for j, attr in enumerate(schema.attributes):
            K = attr.n_levels
            geq = sum(bitset.unpack(index.literal_coverage(Literal(j, GEQ, k)), n).astype(int) for k in range(K))
            leq = sum(bitset.unpack(index.literal_coverage(Literal(j, LEQ, k)), n).astype(int) for k in range(K))
            v = bc_table.values[:, j]
            ok = v != MISSING
            assert (geq[ok] == v[ok] + 1).all()
            assert (leq[ok] == K - v[ok]).all()
            assert (geq[~ok] == 0).all()

    def test_rebuild_identical(self, ttt_table, ttt_index):
        again = build_index(ttt_table)
        assert np.array_equal(again.coverage, ttt_index.coverage)
        assert np.array_equal(again.labels, ttt_index.labels)

    def test_breast_cancer_schema_levels(self):
        assert all(a.levels == tuple(str(v) for v in range(1, 11)) for a in breast_cancer_schema().attributes)
