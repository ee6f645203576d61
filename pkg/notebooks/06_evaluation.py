"""
Evaluation
==========

Three harnesses: metrics of a fixed model, cross-validated AUC over a
hyperparameter sweep, and recovery of a planted pattern set.
"""
from boa import LikelihoodHyper, ModelConfig, breast_cancer, breast_cancer_model, build_index, tic_tac_toe
from boa.evaluation import SimSpec, evaluate_fixed, kfold_auc, mean_distances, runtime_report, simulation_study

# a published three-pattern model on the breast-cancer data
index = build_index(breast_cancer())
model = breast_cancer_model()
print(model.render(index.schema))
m = evaluate_fixed(model, index)
print(f"accuracy {m.accuracy:.3f}, tpr {m.tpr:.3f}, fpr {m.fpr:.3f}")

# each grid point is one fitted model and one ROC point; a small grid keeps this quick
grid = [LikelihoodHyper(a, 1, b, 1) for a, b in ((1, 1000), (100, 100), (1000, 1))]
cv = kfold_auc(tic_tac_toe(), ModelConfig().with_sa(max_steps=500).with_mining(top_k=500), k=3, grid=grid)
print(f"tic-tac-toe 3-fold AUC {cv.mean:.3f} +- {cv.std:.3f}")

# planted recovery: 5 true columns among 200, edit distance at each checkpoint
spec = SimSpec(N=1000, M=200, m=5, checkpoints=(500, 2000, 5000), replicates=5, seed=0)
print("mean edit distance:", mean_distances(simulation_study(spec)))
print(runtime_report(SimSpec(N=2000, M=1000, m=5, replicates=1), checkpoints=[20000]))
