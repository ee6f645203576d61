"""
Data, literals and patterns
===========================

A schema types each column, a table holds the encoded records, and the
index packs every literal's coverage into bitsets.  Patterns are ANDs of
literals; a pattern set ORs its patterns together.
"""
import io

import numpy as np

from boa import AttributeSchema, Literal, Pattern, PatternSet, Schema, build_index, classify, confusion, load_csv
from boa.data import EQ, GEQ
from boa import bitset

# a tiny dataset with one categorical and one ordinal attribute; "?" is missing
schema = Schema((AttributeSchema("color", "categorical", ("blue", "green", "red")),
                 AttributeSchema("size", "ordinal", ("s", "m", "l"))),
                label_column="y", positive_label="1")
csv_text = "color,size,y\nred,l,1\nred,m,1\nblue,l,1\ngreen,s,0\nblue,s,0\n?,m,0\n"
table = load_csv(io.StringIO(csv_text), schema)
index = build_index(table)
print(f"{index.n_records} records, {index.n_pos} positive, {len(index.literal_universe)} literals")

# every literal the index knows about: equality, negated equality, and ordinal thresholds
for lit in index.literal_universe:
    print(" ", lit.render(schema))

# "color = red" OR "size >= l"
red = Pattern.of(Literal(0, EQ, schema.attributes[0].levels.index("red")))
large = Pattern.of(Literal(1, GEQ, schema.attributes[1].levels.index("l")))
model = PatternSet.of([red, large])
print("model:", model.render(schema))

pred = bitset.unpack(classify(model, index), index.n_records)
print("predictions:", pred.astype(int), "labels:", table.labels.astype(int))
print("confusion:", confusion(model, index))
assert np.array_equal(pred, table.labels)
