"""Public benchmark datasets.

``tic_tac_toe`` regenerates the UCI Tic-Tac-Toe Endgame database: every
board reachable at the end of a game in which x moves first, labelled
positive when x has won.  ``breast_cancer`` loads the bundled copy of the
original UCI Wisconsin Breast Cancer database (699 records, 16 missing
"Bare Nuclei" values), taken from the ``biopsy`` table of the R package MASS.
"""
from __future__ import annotations

import csv
import io
import json
from importlib import resources

from .data import EQ, AttributeSchema, Literal, Schema, Table, load_csv
from .patterns import Pattern, PatternSet, pattern_set_from_json

_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6))
TTT_SQUARES = (
    "top_left", "top_middle", "top_right",
    "middle_left", "middle_middle", "middle_right",
    "bottom_left", "bottom_middle", "bottom_right",
)
BC_ATTRIBUTES = (
    "clump_thickness", "uniformity_cell_size", "uniformity_cell_shape",
    "marginal_adhesion", "single_epithelial_cell_size", "bare_nuclei",
    "bland_chromatin", "normal_nucleoli", "mitoses",
)


def _wins(board, player):
    return any(all(board[i] == player for i in line) for line in _LINES)


def tic_tac_toe_boards() -> list[tuple[tuple[str, ...], bool]]:
    """All end-of-game boards, in depth-first discovery order."""
    found: dict[tuple[str, ...], bool] = {}

    def walk(board, turn):
        key = tuple(board)
        if key in found:
            return
        if _wins(board, "x"):
            found[key] = True
            return
        if _wins(board, "o") or "b" not in board:
            found[key] = False
            return
        for i in range(9):
            if board[i] == "b":
                board[i] = turn
                walk(board, "o" if turn == "x" else "x")
                board[i] = "b"

    walk(["b"] * 9, "x")
    return sorted(found.items())


def tic_tac_toe_schema() -> Schema:
    attrs = tuple(AttributeSchema(name, "categorical", ("x", "o", "b")) for name in TTT_SQUARES)
    return Schema(attrs, label_column="class", positive_label="positive")


def tic_tac_toe_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TTT_SQUARES + ("class",))
    for board, x_wins in tic_tac_toe_boards():
        writer.writerow(board + ("positive" if x_wins else "negative",))
    return buf.getvalue()


def tic_tac_toe() -> Table:
    return load_csv(io.StringIO(tic_tac_toe_csv()), tic_tac_toe_schema())


def tic_tac_toe_truth() -> PatternSet:
    """The eight three-in-a-row patterns for x; they label the data exactly."""
    x = tic_tac_toe_schema().attributes[0].levels.index("x")
    return PatternSet.of(Pattern(tuple(Literal(i, EQ, x) for i in line)) for line in _LINES)


def breast_cancer_schema() -> Schema:
    levels = tuple(str(v) for v in range(1, 11))
    attrs = tuple(AttributeSchema(name, "ordinal", levels) for name in BC_ATTRIBUTES)
    return Schema(attrs, label_column="class", positive_label="malignant", ignore_columns=("id",))


def breast_cancer_path():
    return resources.files("boa.resources").joinpath("breast-cancer-wisconsin.csv")


def breast_cancer() -> Table:
    with breast_cancer_path().open("r", encoding="utf-8") as fh:
        return load_csv(fh, breast_cancer_schema())


def breast_cancer_model_path():
    return resources.files("boa.resources").joinpath("breast-cancer-model.json")


def breast_cancer_model() -> PatternSet:
    """Published three-pattern model for the breast-cancer data, as a fixed benchmark."""
    with breast_cancer_model_path().open("r", encoding="utf-8") as fh:
        return pattern_set_from_json(json.load(fh), breast_cancer_schema())
