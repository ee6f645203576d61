"""
Command line
============

Every command writes its artifact with an embedded run manifest, so
``boa rerun`` regenerates it byte for byte.  This script drives the CLI
in-process inside a temporary directory.
"""
import filecmp
import os
import tempfile

from boa.cli import main

work = tempfile.mkdtemp()
os.chdir(work)

main(["mine", "--dataset", "tic-tac-toe", "--top-k", "1000", "--out", "pool.json"])
main(["train", "--dataset", "tic-tac-toe", "--pool", "pool.json", "--max-steps", "2000", "--out", "model.json"])
main(["predict", "--dataset", "tic-tac-toe", "--model", "model.json", "--out", "pred.csv"])
main(["evaluate", "--dataset", "breast-cancer", "--model", "reference", "--out", "metrics.json"])
main(["bounds", "--dataset", "tic-tac-toe", "--out", "bounds.json"])
print(open("metrics.json").read()[:400])

# replay the training run from its manifest and compare
main(["rerun", "model.json", "--out-dir", "again"])
print("model identical after rerun:", filecmp.cmp("model.json", os.path.join("again", "model.json"), shallow=False))
